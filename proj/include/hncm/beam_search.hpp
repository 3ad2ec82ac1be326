#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hncm/error.hpp"

namespace hncm::generation {

/// A left-to-right scorer: `step(state, token)` consumes `token` and returns
/// log-probabilities over the next token (non-finite entries are never
/// expanded) together with the successor state.
template <class M>
concept StepModel = requires(const M& m, const typename M::State& s, std::int32_t tok) {
  typename M::State;
  { m.initial_state() } -> std::convertible_to<typename M::State>;
  { m.step(s, tok) } -> std::convertible_to<std::pair<Eigen::VectorXd, typename M::State>>;
  { m.bos() } -> std::convertible_to<std::int32_t>;
  { m.eos() } -> std::convertible_to<std::int32_t>;
};

template <class State>
struct Hypothesis {
  std::vector<std::int32_t> tokens;  // excludes BOS; includes EOS when finished by it
  double log_likelihood = 0.0;
  State state{};
  bool finished = false;

  /// Length-normalised score: log-likelihood over the emitted token count.
  double normalized_score() const {
    return tokens.empty() ? log_likelihood : log_likelihood / static_cast<double>(tokens.size());
  }
};

struct ScoredSequence {
  std::vector<std::int32_t> tokens;
  double log_likelihood = 0.0;
  double score = 0.0;  // log_likelihood / tokens.size()

  friend bool operator==(const ScoredSequence&, const ScoredSequence&) = default;
};

/// Final ordering: normalised score descending, then raw log-likelihood, then
/// token ids lexicographically.
inline void sort_by_normalized_score(std::vector<ScoredSequence>& seqs) {
  std::sort(seqs.begin(), seqs.end(), [](const ScoredSequence& a, const ScoredSequence& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.log_likelihood != b.log_likelihood) return a.log_likelihood > b.log_likelihood;
    return a.tokens < b.tokens;
  });
}

/// Breadth-first beam search. Each step expands every live hypothesis by every
/// token and keeps the `beam_size` best expansions by accumulated
/// log-likelihood; expansions ending in EOS, or reaching `max_len`, are
/// finished. Finished hypotheses are returned ranked by length-normalised
/// score.
template <StepModel M>
std::vector<ScoredSequence> beam_search(const M& model, std::size_t beam_size, std::size_t max_len) {
  if (beam_size < 1) throw Error("beam_search: beam size must be >= 1");
  if (max_len < 1) throw Error("beam_search: max_len must be >= 1");
  using State = typename M::State;

  struct Live {
    Hypothesis<State> hyp;
    std::int32_t last;
  };
  struct Expansion {
    std::size_t parent;
    std::int32_t token;
    double ll;
  };

  std::vector<Live> live;
  live.push_back({Hypothesis<State>{{}, 0.0, model.initial_state(), false}, model.bos()});
  std::vector<ScoredSequence> finished;

  for (std::size_t len = 1; len <= max_len && !live.empty(); ++len) {
    std::vector<Expansion> expansions;
    std::vector<State> next_states;
    next_states.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      auto [logp, next] = model.step(live[i].hyp.state, live[i].last);
      next_states.push_back(std::move(next));
      for (Eigen::Index tok = 0; tok < logp.size(); ++tok) {
        if (!std::isfinite(logp(tok))) continue;
        expansions.push_back({i, static_cast<std::int32_t>(tok), live[i].hyp.log_likelihood + logp(tok)});
      }
    }
    std::size_t keep = std::min(beam_size, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), [](const Expansion& a, const Expansion& b) {
                        if (a.ll != b.ll) return a.ll > b.ll;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Live> next_live;
    for (std::size_t e = 0; e < keep; ++e) {
      const Expansion& ex = expansions[e];
      Hypothesis<State> h;
      h.tokens = live[ex.parent].hyp.tokens;
      h.tokens.push_back(ex.token);
      h.log_likelihood = ex.ll;
      if (ex.token == model.eos() || len == max_len) {
        h.finished = true;
        finished.push_back({h.tokens, h.log_likelihood, h.normalized_score()});
      } else {
        h.state = next_states[ex.parent];
        next_live.push_back({std::move(h), ex.token});
      }
    }
    live = std::move(next_live);
  }
  sort_by_normalized_score(finished);
  return finished;
}

/// Argmax chain, ties to the lowest token id.
template <StepModel M>
ScoredSequence greedy_decode(const M& model, std::size_t max_len) {
  ScoredSequence out;
  auto state = model.initial_state();
  std::int32_t last = model.bos();
  for (std::size_t len = 1; len <= max_len; ++len) {
    auto [logp, next] = model.step(state, last);
    Eigen::Index best = -1;
    for (Eigen::Index tok = 0; tok < logp.size(); ++tok) {
      if (!std::isfinite(logp(tok))) continue;
      if (best < 0 || logp(tok) > logp(best)) best = tok;
    }
    if (best < 0) throw Error("greedy_decode: no token has finite probability");
    out.tokens.push_back(static_cast<std::int32_t>(best));
    out.log_likelihood += logp(best);
    if (best == model.eos()) break;
    state = std::move(next);
    last = static_cast<std::int32_t>(best);
  }
  out.score = out.log_likelihood / static_cast<double>(out.tokens.size());
  return out;
}

}  // namespace hncm::generation
