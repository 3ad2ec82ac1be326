#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hncm/ranking.hpp"
#include "hncm/text.hpp"

namespace hncm::synthetic {

/// Pronounceable pseudo-word for a non-negative index ("bako", "mirute", ...).
inline std::string word(std::size_t index) {
  static const char* kSyllables[] = {"ba", "ko", "mi", "ru", "te", "la", "no", "si", "da", "pe", "vu", "zo"};
  constexpr std::size_t n = std::size(kSyllables);
  std::size_t v = index + n;  // at least two syllables
  std::string out;
  while (v > 0) {
    out.insert(0, kSyllables[v % n]);
    v /= n;
  }
  return out;
}

struct CorpusConfig {
  std::size_t pairs = 600;
  std::size_t topics = 8;
  std::size_t words_per_topic = 12;
  std::size_t context_len = 6;
  std::size_t response_len = 5;
  std::size_t facts = 2;
  std::size_t fact_len = 4;
  std::uint64_t seed = 7;
};

/// Topic-structured conversations. A context draws words from one topic; the
/// response maps each context word to its successor within the topic, in
/// reverse order; facts are further words of the same topic.
inline std::vector<ConversationExample> make_examples(const CorpusConfig& cfg) {
  if (cfg.topics == 0 || cfg.words_per_topic < 2) throw Error("synthetic corpus needs topics with >= 2 words");
  if (cfg.context_len == 0 || cfg.response_len == 0) throw Error("synthetic corpus needs non-empty turns");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> topic_dist(0, cfg.topics - 1);
  std::uniform_int_distribution<std::size_t> word_dist(0, cfg.words_per_topic - 1);
  auto topic_word = [&](std::size_t t, std::size_t j) { return word(t * cfg.words_per_topic + j); };

  std::vector<ConversationExample> out;
  out.reserve(cfg.pairs);
  for (std::size_t i = 0; i < cfg.pairs; ++i) {
    std::size_t t = topic_dist(rng);
    std::vector<std::size_t> idx(cfg.context_len);
    for (auto& j : idx) j = word_dist(rng);
    ConversationExample ex;
    for (auto j : idx) ex.context.push_back(topic_word(t, j));
    for (std::size_t k = 0; k < cfg.response_len; ++k) {
      std::size_t j = idx[(cfg.context_len - 1 - k % cfg.context_len)];
      ex.response.push_back(topic_word(t, (j + 1) % cfg.words_per_topic));
    }
    for (std::size_t f = 0; f < cfg.facts; ++f) {
      TokenSeq fact;
      for (std::size_t k = 0; k < cfg.fact_len; ++k) fact.push_back(topic_word(t, word_dist(rng)));
      ex.facts.push_back(std::move(fact));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

struct Splits {
  Corpus train;
  Corpus valid;
  Corpus test;
};

/// 80/10/10 split of make_examples(cfg) in generation order.
inline Splits make_splits(const CorpusConfig& cfg) {
  auto all = make_examples(cfg);
  std::size_t n_valid = std::max<std::size_t>(1, all.size() / 10);
  std::size_t n_test = n_valid;
  if (all.size() < n_valid + n_test + 1) throw Error("synthetic corpus too small to split");
  Splits s;
  s.train.split = Split::kTrain;
  s.valid.split = Split::kValid;
  s.test.split = Split::kTest;
  std::size_t n_train = all.size() - n_valid - n_test;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + n_valid ? s.valid : s.test);
    dst.examples.push_back(std::move(all[i]));
  }
  return s;
}

struct RankerPoolConfig {
  std::size_t contexts = 400;
  std::size_t negatives_per_context = 4;
  std::size_t length = 8;
  std::size_t vocabulary = 200;
  std::uint64_t seed = 11;
};

/// Separable ranking triples: the positive keeps at least half of the context
/// tokens, the negative shares none of them.
inline std::vector<ranking::TrainingTriple> make_ranker_triples(const RankerPoolConfig& cfg) {
  if (cfg.vocabulary < 2 * cfg.length + 1) throw Error("synthetic ranker vocabulary too small");
  if (cfg.length == 0) throw Error("synthetic ranker sequences must be non-empty");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.vocabulary - 1);
  std::vector<ranking::TrainingTriple> out;
  for (std::size_t c = 0; c < cfg.contexts; ++c) {
    TokenSeq context;
    std::set<std::size_t> used;
    for (std::size_t k = 0; k < cfg.length; ++k) {
      auto w = pick(rng);
      used.insert(w);
      context.push_back(word(w));
    }
    auto fresh = [&] {
      std::size_t w;
      do w = pick(rng);
      while (used.count(w));
      return word(w);
    };
    TokenSeq positive = context;
    std::shuffle(positive.begin(), positive.end(), rng);
    for (std::size_t k = (cfg.length + 1) / 2; k < cfg.length; ++k) positive[k] = fresh();
    for (std::size_t n = 0; n < cfg.negatives_per_context; ++n) {
      TokenSeq negative;
      for (std::size_t k = 0; k < cfg.length; ++k) negative.push_back(fresh());
      out.push_back({context, positive, std::move(negative)});
    }
  }
  return out;
}

}  // namespace hncm::synthetic
