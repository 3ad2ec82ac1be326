#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "hncm/metrics.hpp"
#include "hncm/nn/adam.hpp"
#include "hncm/nn/checkpoint.hpp"
#include "hncm/nn/ops.hpp"
#include "hncm/text.hpp"

namespace hncm::ranking {

using metrics::Provenance;
using nn::Matrix;
using nn::Tape;
using nn::Var;
using nn::Vector;

struct RankerConfig {
  std::size_t vocab_size = 0;
  std::size_t embedding_size = 50;
  std::size_t max_len = kDefaultMaxLen;  // interaction matrix is max_len x max_len
  std::size_t conv_h = 6;
  std::size_t conv_w = 6;
  std::size_t pool_h = 6;
  std::size_t pool_w = 6;
  std::size_t kernels = 64;
  std::size_t stages = 1;  // conv + pool pairs
  std::size_t mlp_hidden = 128;
  double dropout = 0.5;

  std::map<std::string, std::string> to_meta() const {
    return {{"vocab_size", std::to_string(vocab_size)}, {"embedding_size", std::to_string(embedding_size)},
            {"max_len", std::to_string(max_len)},       {"conv_h", std::to_string(conv_h)},
            {"conv_w", std::to_string(conv_w)},         {"pool_h", std::to_string(pool_h)},
            {"pool_w", std::to_string(pool_w)},         {"kernels", std::to_string(kernels)},
            {"stages", std::to_string(stages)},         {"mlp_hidden", std::to_string(mlp_hidden)},
            {"dropout", std::to_string(dropout)}};
  }

  static RankerConfig from_meta(const nn::Checkpoint& ck) {
    RankerConfig c;
    auto u = [&](const char* k) { return static_cast<std::size_t>(std::stoul(ck.require(k))); };
    c.vocab_size = u("vocab_size");
    c.embedding_size = u("embedding_size");
    c.max_len = u("max_len");
    c.conv_h = u("conv_h");
    c.conv_w = u("conv_w");
    c.pool_h = u("pool_h");
    c.pool_w = u("pool_w");
    c.kernels = u("kernels");
    c.stages = u("stages");
    c.mlp_hidden = u("mlp_hidden");
    c.dropout = std::stod(ck.require("dropout"));
    return c;
  }
};

/// Interaction-matrix CNN ranker: word embeddings -> dot-product matrix ->
/// (conv + ReLU, max-pool) x stages -> flatten -> ReLU hidden layer -> score.
class RankerModel {
 public:
  explicit RankerModel(RankerConfig cfg) : cfg_(cfg) {
    if (cfg.vocab_size <= static_cast<std::size_t>(kNumReserved)) {
      throw Error("ranker vocabulary must contain more than the reserved tokens");
    }
    if (cfg.stages == 0) throw Error("ranker needs at least one conv+pool stage");
    embedding_ = &params_.add("embedding", static_cast<Eigen::Index>(cfg.embedding_size),
                              static_cast<Eigen::Index>(cfg.vocab_size));
    auto h = static_cast<Eigen::Index>(cfg.max_len);
    auto w = h;
    Eigen::Index channels = 1;
    for (std::size_t l = 0; l < cfg.stages; ++l) {
      h = h - static_cast<Eigen::Index>(cfg.conv_h) + 1;
      w = w - static_cast<Eigen::Index>(cfg.conv_w) + 1;
      if (h < 1 || w < 1) throw Error("ranker: input too small for convolution stage " + std::to_string(l));
      conv_shapes_.push_back({h, w});
      h /= static_cast<Eigen::Index>(cfg.pool_h);
      w /= static_cast<Eigen::Index>(cfg.pool_w);
      if (h < 1 || w < 1) throw Error("ranker: feature map too small for pooling window at stage " + std::to_string(l));
      pool_shapes_.push_back({h, w});
      auto K = static_cast<Eigen::Index>(cfg.kernels);
      conv_w_.push_back(&params_.add("conv" + std::to_string(l) + ".weight",
                                     channels * static_cast<Eigen::Index>(cfg.conv_h * cfg.conv_w), K));
      conv_b_.push_back(&params_.add("conv" + std::to_string(l) + ".bias", 1, K));
      channels = K;
    }
    features_ = h * w * channels;
    hidden_w_ = &params_.add("mlp.hidden.weight", static_cast<Eigen::Index>(cfg.mlp_hidden), features_);
    hidden_b_ = &params_.add("mlp.hidden.bias", static_cast<Eigen::Index>(cfg.mlp_hidden), 1);
    out_w_ = &params_.add("mlp.out.weight", 1, static_cast<Eigen::Index>(cfg.mlp_hidden));
    out_b_ = &params_.add("mlp.out.bias", 1, 1);
  }

  RankerModel(RankerConfig cfg, nn::Rng& rng) : RankerModel(cfg) { nn::init_all(params_, rng); }

  const RankerConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  nn::Param& embedding() const { return *embedding_; }
  nn::Param& conv_weight(std::size_t l) const { return *conv_w_.at(l); }
  nn::Param& conv_bias(std::size_t l) const { return *conv_b_.at(l); }
  nn::Param& hidden_weight() const { return *hidden_w_; }
  nn::Param& hidden_bias() const { return *hidden_b_; }
  nn::Param& out_weight() const { return *out_w_; }
  nn::Param& out_bias() const { return *out_b_; }
  Eigen::Index feature_size() const { return features_; }

 private:
  RankerConfig cfg_;
  nn::ParamStore params_;
  nn::Param* embedding_ = nullptr;
  std::vector<nn::Param*> conv_w_, conv_b_;
  std::vector<nn::MapShape> conv_shapes_, pool_shapes_;
  nn::Param* hidden_w_ = nullptr;
  nn::Param* hidden_b_ = nullptr;
  nn::Param* out_w_ = nullptr;
  nn::Param* out_b_ = nullptr;
  Eigen::Index features_ = 0;
};

/// Truncates or right-pads with PAD to exactly `len` ids.
inline IdSeq pad_to(IdSeq ids, std::size_t len) {
  ids.resize(len, kPad);
  return ids;
}

namespace graph {

/// M[j,k] = <emb(u_j), emb(y_k)>, with zero rows/columns at PAD positions.
inline Var interaction(Tape& t, const RankerModel& m, const IdSeq& context, const IdSeq& candidate) {
  if (context.empty()) throw Error("interaction_matrix: empty context");
  if (candidate.empty()) throw Error("interaction_matrix: empty candidate");
  auto len = m.config().max_len;
  Var u = nn::embed_seq(t, m.embedding(), pad_to(context, len));
  Var y = nn::embed_seq(t, m.embedding(), pad_to(candidate, len));
  return nn::matmul(t, nn::transpose(t, u), y);
}

/// Flattened feature vector of the CNN stack over a square matrix `M`.
inline Var cnn(Tape& t, const RankerModel& m, Var M) {
  const auto& cfg = m.config();
  const Matrix& Mv = t.value(M);
  auto h = Mv.rows();
  auto w = Mv.cols();
  // Row-major positions: flatten the transpose column-major.
  Var x = nn::reshape(t, nn::transpose(t, M), h * w, 1);
  for (std::size_t l = 0; l < cfg.stages; ++l) {
    Var z = nn::relu(t, nn::conv2d(t, x, {h, w}, t.param(m.conv_weight(l)), t.param(m.conv_bias(l)),
                                   static_cast<Eigen::Index>(cfg.conv_h), static_cast<Eigen::Index>(cfg.conv_w)));
    h = h - static_cast<Eigen::Index>(cfg.conv_h) + 1;
    w = w - static_cast<Eigen::Index>(cfg.conv_w) + 1;
    x = nn::max_pool2d(t, z, {h, w}, static_cast<Eigen::Index>(cfg.pool_h), static_cast<Eigen::Index>(cfg.pool_w));
    h /= static_cast<Eigen::Index>(cfg.pool_h);
    w /= static_cast<Eigen::Index>(cfg.pool_w);
  }
  return nn::reshape(t, x, t.value(x).size(), 1);
}

inline Var mlp(Tape& t, const RankerModel& m, Var features) {
  Var f = nn::dropout(t, features, m.config().dropout);
  Var hidden = nn::relu(t, nn::linear(t, m.hidden_weight(), m.hidden_bias(), f));
  return nn::linear(t, m.out_weight(), m.out_bias(), hidden);
}

inline Var score(Tape& t, const RankerModel& m, const IdSeq& context, const IdSeq& candidate) {
  return mlp(t, m, cnn(t, m, interaction(t, m, context, candidate)));
}

/// L2 penalty over every ranker parameter.
inline Var l2_penalty(Tape& t, RankerModel& m) {
  std::vector<Var> terms;
  m.params().for_each([&](nn::Param& p) { terms.push_back(nn::squared_norm(t, t.param(p))); });
  return nn::add_all(t, terms);
}

}  // namespace graph

// ---------------------------------------------------------------------------
// Value-level scoring.

/// Interaction matrix from an explicit d x V embedding table.
inline Matrix interaction_matrix(const Matrix& embeddings, const IdSeq& context, const IdSeq& candidate,
                                 std::size_t max_len = kDefaultMaxLen) {
  if (context.empty()) throw Error("interaction_matrix: empty context");
  if (candidate.empty()) throw Error("interaction_matrix: empty candidate");
  auto gather = [&](const IdSeq& ids) {
    IdSeq p = pad_to(ids, max_len);
    Matrix out = Matrix::Zero(embeddings.rows(), static_cast<Eigen::Index>(max_len));
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] < 0 || p[j] >= embeddings.cols()) throw Error("interaction_matrix: token id out of range");
      if (p[j] != kPad) out.col(static_cast<Eigen::Index>(j)) = embeddings.col(p[j]);
    }
    return out;
  };
  return gather(context).transpose() * gather(candidate);
}

inline Vector cnn_forward(const RankerModel& m, const Matrix& M) {
  auto len = static_cast<Eigen::Index>(m.config().max_len);
  if (M.rows() != len || M.cols() != len) {
    throw Error("cnn_forward: expected a " + std::to_string(len) + "x" + std::to_string(len) + " matrix");
  }
  Tape t(false);
  return t.value(graph::cnn(t, m, t.constant(M))).col(0);
}

/// f(u, y) with dropout off.
inline double score(const RankerModel& m, const IdSeq& context, const IdSeq& candidate) {
  Tape t(false);
  return t.scalar(graph::score(t, m, context, candidate));
}

/// Sum over pairs of max(0, margin - f+ + f-) plus lambda * ||theta||^2.
inline double hinge_loss(const std::vector<std::pair<double, double>>& pos_neg_scores, double margin,
                         double lambda, double theta_sq_norm) {
  double loss = 0.0;
  for (const auto& [fp, fn] : pos_neg_scores) loss += std::max(0.0, margin - fp + fn);
  return loss + lambda * theta_sq_norm;
}

// ---------------------------------------------------------------------------
// Candidate pools and distant supervision.

struct Candidate {
  TokenSeq tokens;
  Provenance provenance = Provenance::kRetrieved;
  std::size_t origin_rank = 1;
  double origin_score = 0.0;
};

/// Y = G ∪ R for one context.
struct CandidateSet {
  TokenSeq context;
  std::vector<Candidate> candidates;
  std::optional<TokenSeq> ground_truth;
};

/// Provenance-aware order used for every tie: generated before retrieved,
/// then ascending origin rank, then position in the pool.
inline bool tie_order(const std::vector<Candidate>& c, std::size_t a, std::size_t b) {
  if (c[a].provenance != c[b].provenance) return c[a].provenance == Provenance::kGenerated;
  if (c[a].origin_rank != c[b].origin_rank) return c[a].origin_rank < c[b].origin_rank;
  return a < b;
}

enum class Signal { kBleu1, kBleu2, kRougeL, kSentBleu };

inline Signal parse_signal(const std::string& s) {
  if (s == "bleu1") return Signal::kBleu1;
  if (s == "bleu2") return Signal::kBleu2;
  if (s == "rougel") return Signal::kRougeL;
  if (s == "sentbleu") return Signal::kSentBleu;
  throw Error("unknown supervision signal \"" + s + "\" (expected bleu1|bleu2|rougel|sentbleu)");
}

inline const char* to_string(Signal s) {
  switch (s) {
    case Signal::kBleu1: return "bleu1";
    case Signal::kBleu2: return "bleu2";
    case Signal::kRougeL: return "rougel";
    case Signal::kSentBleu: return "sentbleu";
  }
  return "?";
}

inline double signal_score(Signal s, const TokenSeq& cand, const TokenSeq& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  switch (s) {
    case Signal::kBleu1: return metrics::corpus_bleu({cand}, {ref}, 1);
    case Signal::kBleu2: return metrics::corpus_bleu({cand}, {ref}, 2);
    case Signal::kRougeL: return metrics::rouge_l(cand, ref);
    case Signal::kSentBleu: return metrics::sentence_bleu(cand, ref);
  }
  return 0.0;
}

struct SupervisionConfig {
  Signal signal = Signal::kBleu1;
  std::size_t kprime = 3;
  double margin = 1.0;
  double l2 = 0.0;
};

struct DistantLabels {
  std::vector<double> signal;           // per candidate, pool order
  std::vector<std::size_t> positives;   // best first
  std::vector<std::size_t> negatives;   // best first
};

/// Orders candidates by signal descending with the provenance tie rule and
/// splits off the top k.
inline DistantLabels split_top_k(const std::vector<Candidate>& cands, std::vector<double> signal, std::size_t k) {
  if (cands.size() != signal.size()) throw Error("split_top_k: signal/candidate count mismatch");
  if (cands.size() <= k) {
    throw Error("make_distant_labels: pool of " + std::to_string(cands.size()) + " candidates cannot yield " +
                std::to_string(k) + " positives and at least one negative");
  }
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (signal[a] != signal[b]) return signal[a] > signal[b];
    return tie_order(cands, a, b);
  });
  DistantLabels out;
  out.signal = std::move(signal);
  out.positives.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  out.negatives.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  return out;
}

inline DistantLabels make_distant_labels(const CandidateSet& set, const TokenSeq& ground_truth,
                                         const SupervisionConfig& cfg) {
  if (cfg.kprime < 1) throw Error("make_distant_labels: k' must be >= 1");
  std::vector<double> signal;
  signal.reserve(set.candidates.size());
  for (const auto& c : set.candidates) signal.push_back(signal_score(cfg.signal, c.tokens, ground_truth));
  return split_top_k(set.candidates, std::move(signal), cfg.kprime);
}

struct TrainingTriple {
  TokenSeq context;
  TokenSeq positive;
  TokenSeq negative;
};

/// Positives are the ground truth plus the best k'-1 distant positives;
/// triples are positives x negatives.
inline std::vector<TrainingTriple> make_training_triples(const CandidateSet& set, const DistantLabels& labels,
                                                         std::size_t kprime, const TokenSeq& ground_truth) {
  if (kprime < 1) throw Error("make_training_triples: k' must be >= 1");
  std::vector<TrainingTriple> out;
  if (labels.negatives.empty()) {
    spdlog::warn("make_training_triples: context has no negative candidates, skipping");
    return out;
  }
  std::vector<const TokenSeq*> pos{&ground_truth};
  for (std::size_t i = 0; i + 1 < kprime && i < labels.positives.size(); ++i) {
    pos.push_back(&set.candidates.at(labels.positives[i]).tokens);
  }
  for (const auto* p : pos) {
    for (auto n : labels.negatives) out.push_back({set.context, *p, set.candidates.at(n).tokens});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Re-ranking.

struct RankedCandidate {
  std::size_t index = 0;  // position in the input pool
  double score = 0.0;
};

struct RerankResult {
  std::vector<RankedCandidate> ranked;
  std::size_t chosen = 0;  // pool index of the winner

  metrics::SelectionRecord selection(const CandidateSet& set) const {
    const auto& c = set.candidates.at(chosen);
    return {c.provenance, c.origin_rank};
  }
};

/// Sorts externally supplied scores with the provenance tie rule.
inline RerankResult rank_by_scores(const CandidateSet& set, const std::vector<double>& scores) {
  if (set.candidates.empty()) throw Error("rerank: empty candidate set");
  if (scores.size() != set.candidates.size()) throw Error("rerank: score count mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return tie_order(set.candidates, a, b);
  });
  RerankResult r;
  for (auto i : order) r.ranked.push_back({i, scores[i]});
  r.chosen = order.front();
  return r;
}

inline RerankResult rerank(const RankerModel& m, const Vocabulary& vocab, const CandidateSet& set) {
  if (set.candidates.empty()) throw Error("rerank: empty candidate set");
  IdSeq ctx = encode(set.context, vocab, m.config().max_len);
  std::vector<double> scores;
  for (const auto& c : set.candidates) {
    scores.push_back(score(m, ctx, encode(c.tokens, vocab, m.config().max_len)));
  }
  return rank_by_scores(set, scores);
}

// ---------------------------------------------------------------------------
// Training.

struct EncodedTriple {
  IdSeq context;
  IdSeq positive;
  IdSeq negative;
};

inline std::vector<EncodedTriple> encode_triples(const std::vector<TrainingTriple>& triples, const Vocabulary& vocab,
                                                 std::size_t max_len = kDefaultMaxLen) {
  std::vector<EncodedTriple> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    EncodedTriple e{encode(t.context, vocab, max_len), encode(t.positive, vocab, max_len),
                    encode(t.negative, vocab, max_len)};
    if (e.context.empty() || e.positive.empty() || e.negative.empty()) continue;
    out.push_back(std::move(e));
  }
  return out;
}

/// Fraction of triples with f(u, y+) > f(u, y-).
inline double pairwise_accuracy(const RankerModel& m, const std::vector<EncodedTriple>& triples) {
  if (triples.empty()) throw Error("pairwise_accuracy: no triples");
  std::size_t ok = 0;
  for (const auto& tr : triples) ok += score(m, tr.context, tr.positive) > score(m, tr.context, tr.negative);
  return static_cast<double>(ok) / static_cast<double>(triples.size());
}

/// Pairwise hinge objective over a batch plus the L2 term.
inline Var batch_hinge(Tape& t, RankerModel& m, const std::vector<const EncodedTriple*>& batch, double margin,
                       double lambda) {
  if (batch.empty()) throw Error("hinge_loss: empty batch");
  std::vector<Var> terms;
  for (const auto* tr : batch) {
    Var fp = graph::score(t, m, tr->context, tr->positive);
    Var fn = graph::score(t, m, tr->context, tr->negative);
    terms.push_back(nn::hinge(t, nn::add_scalar(t, nn::sub(t, fn, fp), margin)));
  }
  if (lambda > 0.0) terms.push_back(nn::scale(t, graph::l2_penalty(t, m), lambda));
  return nn::add_all(t, terms);
}

struct RankerTrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 500;
  double margin = 1.0;
  double l2 = 0.0;
  std::size_t max_steps = 10000;
  std::size_t steps_between_validation = 100;
  std::size_t patience = 10;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

struct RankerTrainLog {
  std::vector<double> train_loss;
  std::vector<double> valid_accuracy;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double best_accuracy = -1.0;
  bool stopped_early = false;
};

/// Adam on the hinge objective, dropout on the MLP input, early stopping on
/// held-out pairwise accuracy (best parameters restored).
inline RankerTrainLog train_ranker(RankerModel& m, const std::vector<EncodedTriple>& train,
                                   const std::vector<EncodedTriple>& valid, const RankerTrainConfig& cfg,
                                   const std::function<void(std::size_t, double)>& on_step = {}) {
  if (train.empty()) throw Error("train_ranker: no training triples");
  if (cfg.batch_size == 0) throw Error("train_ranker: batch size must be positive");
  nn::Rng rng(cfg.seed);
  nn::AdamState adam(m.params(), cfg.learning_rate);
  RankerTrainLog log;
  std::optional<std::vector<Matrix>> best;
  std::size_t bad = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  while (log.steps < cfg.max_steps) {
    std::vector<const EncodedTriple*> batch;
    for (std::size_t i = 0; i < std::min(cfg.batch_size, train.size()); ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&train[order[cursor++]]);
    }
    m.params().zero_grad();
    double loss;
    {
      Tape t(true, true, &rng);
      Var l = batch_hinge(t, m, batch, cfg.margin, cfg.l2);
      loss = t.scalar(l);
      if (!std::isfinite(loss)) throw Error("train_ranker: non-finite loss at step " + std::to_string(log.steps + 1));
      t.backward(l);
    }
    if (cfg.clip_norm > 0.0) nn::clip_grad_norm(m.params(), cfg.clip_norm);
    nn::adam_update(adam, m.params());
    ++log.steps;
    log.train_loss.push_back(loss);
    if (on_step) on_step(log.steps, loss);

    if (!valid.empty() && cfg.steps_between_validation > 0 && log.steps % cfg.steps_between_validation == 0) {
      double acc = pairwise_accuracy(m, valid);
      log.valid_accuracy.push_back(acc);
      if (acc > log.best_accuracy) {
        log.best_accuracy = acc;
        log.best_step = log.steps;
        best = m.params().snapshot();
        bad = 0;
      } else if (++bad >= cfg.patience) {
        log.stopped_early = true;
        break;
      }
    }
  }
  if (best) m.params().restore(*best);
  return log;
}

// ---------------------------------------------------------------------------
// Pretrained embeddings and persistence.

/// Loads GloVe-format text vectors ("word v1 ... vd") into the columns of a
/// d x V table for in-vocabulary words; others keep their initial values.
/// Returns the number of vocabulary words found.
inline std::size_t load_pretrained_embeddings(nn::Param& table, const Vocabulary& vocab, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file: " + path);
  std::size_t found = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word) || !vocab.contains(word)) continue;
    Vector v(table.value.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!(ss >> v(i))) throw Error(path + ":" + std::to_string(lineno) + ": vector shorter than embedding size");
    }
    table.value.col(vocab.id(word)) = v;
    ++found;
  }
  return found;
}

inline void save_ranker(const RankerModel& m, const Vocabulary& vocab, const std::string& path) {
  if (vocab.size() != m.config().vocab_size) throw Error("save_ranker: vocabulary size mismatch");
  nn::Checkpoint::capture("ranker", vocab.hash(), m.config().to_meta(), m.params()).save(path);
  vocab.save(path + ".vocab");
}

struct LoadedRanker {
  RankerModel model;
  Vocabulary vocab;
};

inline LoadedRanker load_ranker(const std::string& path) {
  auto ck = nn::Checkpoint::load(path);
  if (ck.kind != "ranker") throw Error(path + " is a " + ck.kind + " checkpoint, not a ranker");
  Vocabulary vocab = Vocabulary::load(path + ".vocab");
  if (vocab.hash() != ck.vocab_hash) throw Error("vocabulary file does not match checkpoint " + path);
  RankerModel m(RankerConfig::from_meta(ck));
  ck.apply(m.params());
  return {std::move(m), std::move(vocab)};
}

}  // namespace hncm::ranking
