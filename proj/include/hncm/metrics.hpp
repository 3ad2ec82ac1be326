#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hncm/text.hpp"

namespace hncm::metrics {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts count_ngrams(const TokenSeq& seq, std::size_t n) {
  NgramCounts counts;
  if (n == 0 || seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                      seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

/// Matches of candidate n-grams clipped by reference counts, and the number of
/// candidate n-grams.
inline std::pair<std::size_t, std::size_t> clipped_matches(const TokenSeq& cand, const TokenSeq& ref,
                                                           std::size_t n) {
  NgramCounts c = count_ngrams(cand, n);
  NgramCounts r = count_ngrams(ref, n);
  std::size_t match = 0;
  std::size_t total = 0;
  for (const auto& [g, cnt] : c) {
    total += cnt;
    auto it = r.find(g);
    if (it != r.end()) match += std::min(cnt, it->second);
  }
  return {match, total};
}

inline double brevity_penalty(std::size_t cand_len, std::size_t ref_len) {
  if (cand_len == 0) return 0.0;
  if (cand_len > ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

/// Corpus BLEU with n-gram statistics pooled over all pairs, uniform weights
/// and no smoothing. max_n = 1 / 2 give BLEU-1 / BLEU-2.
inline double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references,
                          std::size_t max_n = 4) {
  if (candidates.size() != references.size()) throw Error("corpus_bleu: candidate/reference count mismatch");
  if (candidates.empty()) throw Error("corpus_bleu: empty input");
  if (max_n == 0) throw Error("corpus_bleu: max_n must be >= 1");
  std::vector<std::size_t> match(max_n, 0), total(max_n, 0);
  std::size_t c_len = 0, r_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c_len += candidates[i].size();
    r_len += references[i].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto [m, t] = clipped_matches(candidates[i], references[i], n);
      match[n - 1] += m;
      total[n - 1] += t;
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (total[n] == 0 || match[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(match[n]) / static_cast<double>(total[n]));
  }
  return brevity_penalty(c_len, r_len) * std::exp(log_sum / static_cast<double>(max_n));
}

/// Sentence BLEU with add-one smoothing of numerator and denominator for n >= 2.
inline double sentence_bleu(const TokenSeq& cand, const TokenSeq& ref, std::size_t max_n = 4) {
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto [m, t] = clipped_matches(cand, ref, n);
    double p;
    if (n == 1) {
      if (m == 0) return 0.0;
      p = static_cast<double>(m) / static_cast<double>(t);
    } else {
      p = (static_cast<double>(m) + 1.0) / (static_cast<double>(t) + 1.0);
    }
    log_sum += std::log(p);
  }
  return brevity_penalty(cand.size(), ref.size()) * std::exp(log_sum / static_cast<double>(max_n));
}

inline std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// LCS-based F-measure; beta weights recall.
inline double rouge_l(const TokenSeq& cand, const TokenSeq& ref, double beta = 1.2) {
  if (cand.empty() || ref.empty()) return 0.0;
  std::size_t lcs = lcs_length(cand, ref);
  if (lcs == 0) return 0.0;
  double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
  double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
  double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

/// Distinct n-grams across all responses over the total number of words.
inline double distinct_n(const std::vector<TokenSeq>& responses, std::size_t n) {
  if (responses.empty()) throw Error("distinct_n: no responses");
  std::set<std::vector<std::string>> uniq;
  std::size_t words = 0;
  for (const auto& r : responses) {
    words += r.size();
    for (const auto& [g, cnt] : count_ngrams(r, n)) uniq.insert(g);
  }
  if (words == 0) return 0.0;
  return static_cast<double>(uniq.size()) / static_cast<double>(words);
}

enum class Provenance { kGenerated, kRetrieved };

inline const char* to_string(Provenance p) { return p == Provenance::kGenerated ? "generated" : "retrieved"; }

inline Provenance provenance_from_string(const std::string& s) {
  if (s == "generated") return Provenance::kGenerated;
  if (s == "retrieved") return Provenance::kRetrieved;
  throw Error("unknown provenance \"" + s + "\"");
}

/// Where the chosen response of one context came from.
struct SelectionRecord {
  Provenance provenance = Provenance::kGenerated;
  std::size_t origin_rank = 1;
};

struct SelectionStats {
  std::size_t picked_generated = 0;
  std::size_t picked_retrieved = 0;
  std::size_t picked_top1_bm25 = 0;
  std::size_t total = 0;

  double pct_generated() const { return total ? 100.0 * static_cast<double>(picked_generated) / static_cast<double>(total) : 0.0; }
  double pct_retrieved() const { return total ? 100.0 * static_cast<double>(picked_retrieved) / static_cast<double>(total) : 0.0; }
  double pct_top1_bm25() const { return total ? 100.0 * static_cast<double>(picked_top1_bm25) / static_cast<double>(total) : 0.0; }
};

inline SelectionStats selection_stats(const std::vector<SelectionRecord>& log) {
  SelectionStats s;
  s.total = log.size();
  for (const auto& r : log) {
    if (r.provenance == Provenance::kGenerated) {
      ++s.picked_generated;
    } else {
      ++s.picked_retrieved;
      if (r.origin_rank == 1) ++s.picked_top1_bm25;
    }
  }
  return s;
}

struct MetricReport {
  double bleu = 0.0;     // corpus BLEU-4, x100
  double rouge_l = 0.0;  // mean sentence ROUGE-L F, x100
  double distinct1 = 0.0;
  double distinct2 = 0.0;
  std::vector<double> sentence_bleu;
  SelectionStats selection;

  /// Range and partition checks; returns a description of the first failure.
  std::optional<std::string> violation() const {
    auto in = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
    if (!in(bleu, 0, 100)) return "bleu out of [0,100]";
    if (!in(rouge_l, 0, 100)) return "rouge_l out of [0,100]";
    if (!in(distinct1, 0, 1)) return "distinct1 out of [0,1]";
    if (!in(distinct2, 0, 1)) return "distinct2 out of [0,1]";
    for (double s : sentence_bleu)
      if (!in(s, 0, 1)) return "sentence bleu out of [0,1]";
    if (selection.picked_generated + selection.picked_retrieved != selection.total) {
      return "selection stats do not partition the test contexts";
    }
    if (selection.picked_top1_bm25 > selection.picked_retrieved) return "top-1 BM25 picks exceed retrieved picks";
    return std::nullopt;
  }
};

inline nlohmann::json to_json(const MetricReport& r) {
  return {{"bleu", r.bleu},
          {"rouge_l", r.rouge_l},
          {"distinct_1", r.distinct1},
          {"distinct_2", r.distinct2},
          {"picked_gen_res", r.selection.picked_generated},
          {"picked_ret_res", r.selection.picked_retrieved},
          {"picked_top1_bm25", r.selection.picked_top1_bm25},
          {"test_contexts", r.selection.total},
          {"picked_gen_res_pct", r.selection.pct_generated()},
          {"picked_ret_res_pct", r.selection.pct_retrieved()},
          {"picked_top1_bm25_pct", r.selection.pct_top1_bm25()}};
}

/// Fills a MetricReport for aligned system outputs and references. An empty
/// provenance log means every output was generated.
inline MetricReport evaluate_run(const std::vector<TokenSeq>& outputs, const std::vector<TokenSeq>& references,
                                 const std::vector<SelectionRecord>& provenance = {}) {
  if (outputs.size() != references.size()) throw Error("evaluate_run: outputs and references are misaligned");
  if (!provenance.empty() && provenance.size() != outputs.size()) {
    throw Error("evaluate_run: provenance log is misaligned with outputs");
  }
  if (outputs.empty()) throw Error("evaluate_run: nothing to evaluate");
  MetricReport rep;
  rep.bleu = 100.0 * corpus_bleu(outputs, references, 4);
  double rl = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    rl += rouge_l(outputs[i], references[i]);
    rep.sentence_bleu.push_back(sentence_bleu(outputs[i], references[i]));
  }
  rep.rouge_l = 100.0 * rl / static_cast<double>(outputs.size());
  rep.distinct1 = distinct_n(outputs, 1);
  rep.distinct2 = distinct_n(outputs, 2);
  rep.selection = provenance.empty()
                      ? selection_stats(std::vector<SelectionRecord>(outputs.size()))
                      : selection_stats(provenance);
  return rep;
}

}  // namespace hncm::metrics
