#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond tokenization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hncm/text.hpp"

namespace oracle {

struct Doc {
  hncm::TokenSeq tokens;
  std::string response;
};

struct Hit {
  std::uint32_t doc;
  double score;
};

/// Exhaustive BM25 over every document, top-K by score desc then doc id asc,
/// keeping only positive scores.
inline std::vector<Hit> bm25_top_k(const std::vector<Doc>& docs, const hncm::TokenSeq& query, std::size_t k,
                                   double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double total = 0.0;
  for (const auto& d : docs) total += static_cast<double>(d.tokens.size());
  const double avgdl = total / n;
  std::vector<Hit> all;
  for (std::uint32_t i = 0; i < docs.size(); ++i) {
    double s = 0.0;
    for (const auto& term : query) {
      auto tf = static_cast<double>(std::count(docs[i].tokens.begin(), docs[i].tokens.end(), term));
      if (tf == 0) continue;
      double df = 0;
      for (const auto& d : docs) df += std::find(d.tokens.begin(), d.tokens.end(), term) != d.tokens.end();
      double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      double len = static_cast<double>(docs[i].tokens.size());
      s += idf * (tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * (len / avgdl))));
    }
    if (s > 0.0) all.push_back({i, s});
  }
  std::sort(all.begin(), all.end(), [](const Hit& x, const Hit& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.doc < y.doc;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Random corpus of `n_docs` contexts over a vocabulary of `vocab` words, with
/// unique responses.
inline std::vector<Doc> random_corpus(std::mt19937_64& rng, std::size_t n_docs, std::size_t vocab,
                                      std::size_t max_len = 12) {
  std::uniform_int_distribution<std::size_t> w(0, vocab - 1);
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::vector<Doc> docs;
  for (std::size_t i = 0; i < n_docs; ++i) {
    Doc d;
    std::size_t l = len(rng);
    for (std::size_t j = 0; j < l; ++j) d.tokens.push_back("w" + std::to_string(w(rng)));
    d.response = "r" + std::to_string(i);
    docs.push_back(std::move(d));
  }
  return docs;
}

/// Tiny hand-set step model: tokens {a=0, b=1, eos=2}, BOS fed as 3. Next-token
/// probabilities depend only on the previous token.
struct TableModel {
  using State = int;
  Eigen::Matrix<double, 4, 3> probs;  // row = previous token

  TableModel() {
    probs << 0.5, 0.3, 0.2,   // after a
        0.1, 0.2, 0.7,        // after b
        0.0, 0.0, 1.0,        // after eos (unused)
        0.45, 0.35, 0.2;      // after bos
  }
  int initial_state() const { return 0; }
  std::pair<Eigen::VectorXd, int> step(int s, std::int32_t tok) const {
    Eigen::VectorXd lp = probs.row(tok).transpose().array().log();
    return {lp, s + 1};
  }
  std::int32_t bos() const { return 3; }
  std::int32_t eos() const { return 2; }
};

struct Ranked {
  std::vector<std::int32_t> tokens;
  double ll;
  double score;
};

/// Every sequence that ends at EOS or at max_len, ranked by ll/len desc, then
/// ll desc, then tokens asc.
template <class M>
std::vector<Ranked> enumerate(const M& m, std::size_t max_len) {
  std::vector<Ranked> out;
  std::vector<std::int32_t> prefix;
  auto rec = [&](auto&& self, typename M::State st, std::int32_t last, double ll) -> void {
    auto [lp, next] = m.step(st, last);
    for (std::int32_t tok = 0; tok < lp.size(); ++tok) {
      if (!std::isfinite(lp(tok))) continue;
      prefix.push_back(tok);
      double l2 = ll + lp(tok);
      if (tok == m.eos() || prefix.size() == max_len) {
        out.push_back({prefix, l2, l2 / static_cast<double>(prefix.size())});
      } else {
        self(self, next, tok, l2);
      }
      prefix.pop_back();
    }
  };
  rec(rec, m.initial_state(), m.bos(), 0.0);
  std::sort(out.begin(), out.end(), [](const Ranked& x, const Ranked& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.ll != y.ll) return x.ll > y.ll;
    return x.tokens < y.tokens;
  });
  return out;
}

}  // namespace oracle
