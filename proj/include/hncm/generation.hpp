#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "hncm/beam_search.hpp"
#include "hncm/nn/adam.hpp"
#include "hncm/nn/checkpoint.hpp"
#include "hncm/nn/lstm.hpp"
#include "hncm/nn/ops.hpp"
#include "hncm/text.hpp"

namespace hncm::generation {

using nn::Matrix;
using nn::Tape;
using nn::Var;
using nn::Vector;

struct GeneratorConfig {
  std::size_t vocab_size = 0;
  std::size_t embedding_size = 256;
  std::size_t hidden_size = 256;
  int layers = 2;
  double dropout = 0.3;
  /// Off = plain Seq2Seq: facts are stripped and the F = 0 path is taken.
  bool use_facts = true;

  /// Seq2Seq column of the hyper-parameter table.
  static GeneratorConfig seq2seq(std::size_t vocab) {
    return {vocab, 512, 512, 2, 0.3, false};
  }
  /// Seq2Seq-Facts column.
  static GeneratorConfig seq2seq_facts(std::size_t vocab) {
    return {vocab, 256, 256, 2, 0.3, true};
  }
  /// Scaled-down profile for tests and desk runs.
  static GeneratorConfig desk(std::size_t vocab, bool facts = true) {
    return {vocab, 64, 64, 2, 0.3, facts};
  }

  std::map<std::string, std::string> to_meta() const {
    return {{"vocab_size", std::to_string(vocab_size)},
            {"embedding_size", std::to_string(embedding_size)},
            {"hidden_size", std::to_string(hidden_size)},
            {"layers", std::to_string(layers)},
            {"dropout", std::to_string(dropout)},
            {"use_facts", use_facts ? "1" : "0"}};
  }

  static GeneratorConfig from_meta(const nn::Checkpoint& ck) {
    GeneratorConfig c;
    c.vocab_size = std::stoul(ck.require("vocab_size"));
    c.embedding_size = std::stoul(ck.require("embedding_size"));
    c.hidden_size = std::stoul(ck.require("hidden_size"));
    c.layers = std::stoi(ck.require("layers"));
    c.dropout = std::stod(ck.require("dropout"));
    c.use_facts = ck.require("use_facts") == "1";
    return c;
  }
};

/// Facts-grounded attention Seq2Seq parameters. The context and facts encoders
/// share the embedding table but have separate recurrent weights. The bridge
/// maps the encoder summary to the decoder's initial state; the output
/// projection maps [decoder state; attention context] to vocabulary logits.
class GeneratorModel {
 public:
  explicit GeneratorModel(GeneratorConfig cfg) : cfg_(cfg) {
    if (cfg.vocab_size < static_cast<std::size_t>(kNumReserved)) {
      throw Error("generator vocabulary must contain the reserved tokens");
    }
    if (cfg.layers < 1) throw Error("generator needs at least one recurrent layer");
    auto V = static_cast<Eigen::Index>(cfg.vocab_size);
    auto d = static_cast<Eigen::Index>(cfg.embedding_size);
    auto H = static_cast<Eigen::Index>(cfg.hidden_size);
    embedding_ = &params_.add("embedding", d, V);
    context_encoder_ = nn::StackedLstm(params_, "context_encoder", d, H, cfg.layers);
    facts_encoder_ = nn::StackedLstm(params_, "facts_encoder", d, H, cfg.layers);
    decoder_ = nn::StackedLstm(params_, "decoder", 2 * H + d, H, cfg.layers);
    bridge_w_ = &params_.add("bridge.weight", H, H);
    bridge_b_ = &params_.add("bridge.bias", H, 1);
    out_w_ = &params_.add("output.weight", V, 2 * H);
    out_b_ = &params_.add("output.bias", V, 1);
  }

  GeneratorModel(GeneratorConfig cfg, nn::Rng& rng) : GeneratorModel(cfg) { nn::init_all(params_, rng); }

  const GeneratorConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  nn::Param& embedding() const { return *embedding_; }
  const nn::StackedLstm& context_encoder() const { return context_encoder_; }
  const nn::StackedLstm& facts_encoder() const { return facts_encoder_; }
  const nn::StackedLstm& decoder() const { return decoder_; }
  nn::Param& bridge_weight() const { return *bridge_w_; }
  nn::Param& bridge_bias() const { return *bridge_b_; }
  nn::Param& output_weight() const { return *out_w_; }
  nn::Param& output_bias() const { return *out_b_; }

  Eigen::Index hidden() const { return static_cast<Eigen::Index>(cfg_.hidden_size); }

 private:
  GeneratorConfig cfg_;
  nn::ParamStore params_;
  nn::Param* embedding_ = nullptr;
  nn::StackedLstm context_encoder_;
  nn::StackedLstm facts_encoder_;
  nn::StackedLstm decoder_;
  nn::Param* bridge_w_ = nullptr;
  nn::Param* bridge_b_ = nullptr;
  nn::Param* out_w_ = nullptr;
  nn::Param* out_b_ = nullptr;
};

/// Integer-encoded training/inference example. `response` ends with EOS.
struct EncodedExample {
  IdSeq context;
  std::vector<IdSeq> facts;
  IdSeq response;
};

inline EncodedExample encode_example(const ConversationExample& ex, const Vocabulary& vocab,
                                     std::size_t max_len = kDefaultMaxLen) {
  EncodedExample out;
  out.context = encode(ex.context, vocab, max_len);
  for (const auto& f : ex.facts) {
    auto ids = encode(f, vocab, max_len);
    if (!ids.empty()) out.facts.push_back(std::move(ids));
  }
  out.response = encode(ex.response, vocab, max_len, true);
  return out;
}

// ---------------------------------------------------------------------------
// Graph-level building blocks shared by training (recording tape) and
// inference (non-recording tape).

namespace graph {

/// Top-layer hidden vectors h_1..h_L of a stacked encoder, left to right.
inline std::vector<Var> run_encoder(Tape& t, const GeneratorModel& m, const nn::StackedLstm& enc,
                                    const IdSeq& ids, double dropout_rate) {
  auto state = enc.zero_state(t);
  std::vector<Var> hidden;
  hidden.reserve(ids.size());
  for (auto id : ids) {
    Var x = nn::dropout(t, nn::embed(t, m.embedding(), id), dropout_rate);
    state = enc.step(t, x, state, dropout_rate);
    hidden.push_back(state.back().h);
  }
  return hidden;
}

inline std::vector<Var> encode_context(Tape& t, const GeneratorModel& m, const IdSeq& ids,
                                       double dropout_rate = 0.0) {
  if (ids.empty()) throw Error("encode_context: empty context");
  return run_encoder(t, m, m.context_encoder(), ids, dropout_rate);
}

/// Mean of the top-layer hidden vectors of each non-empty fact.
inline std::vector<Var> encode_facts(Tape& t, const GeneratorModel& m, const std::vector<IdSeq>& facts,
                                     double dropout_rate = 0.0) {
  std::vector<Var> means;
  if (!m.config().use_facts) return means;
  for (std::size_t j = 0; j < facts.size(); ++j) {
    if (facts[j].empty()) {
      spdlog::warn("encode_facts: skipping empty fact #{}", j);
      continue;
    }
    auto hidden = run_encoder(t, m, m.facts_encoder(), facts[j], dropout_rate);
    means.push_back(nn::mean_cols(t, nn::concat_cols(t, hidden)));
  }
  return means;
}

/// Memory matrix [h_1..h_L, f̄_1..f̄_F] (H x (L+F)).
inline Var memory(Tape& t, const std::vector<Var>& context_hidden, const std::vector<Var>& fact_means) {
  std::vector<Var> cols = context_hidden;
  cols.insert(cols.end(), fact_means.begin(), fact_means.end());
  if (cols.empty()) throw Error("attention memory is empty (no context and no facts)");
  return nn::concat_cols(t, cols);
}

/// s_0 = bridge(tanh(h_L + mean_j f̄_j)); the fact term vanishes when F = 0.
inline Var decoder_init(Tape& t, const GeneratorModel& m, Var last_hidden, const std::vector<Var>& fact_means) {
  Var summary = last_hidden;
  if (!fact_means.empty()) {
    Var avg = nn::mean_cols(t, nn::concat_cols(t, fact_means));
    summary = nn::add(t, summary, avg);
  }
  return nn::linear(t, m.bridge_weight(), m.bridge_bias(), nn::tanh(t, summary));
}

struct Attention {
  Var weights;  // (L+F) x 1
  Var context;  // H x 1
};

/// Dot-product attention of `query` over the columns of `mem`.
inline Attention attend(Tape& t, Var mem, Var query) {
  Var scores = nn::matmul(t, nn::transpose(t, mem), query);
  Var a = nn::softmax(t, scores);
  return {a, nn::matmul(t, mem, a)};
}

struct DecoderVars {
  std::vector<nn::LstmState> layers;
  Var attention_context;  // attention of the top-layer state over memory
};

/// Every decoder layer starts from h = s_0, c = 0.
inline DecoderVars decoder_start(Tape& t, const GeneratorModel& m, Var mem, Var s0) {
  DecoderVars st;
  for (int l = 0; l < m.config().layers; ++l) {
    st.layers.push_back({s0, t.constant(Matrix::Zero(m.hidden(), 1))});
  }
  st.attention_context = attend(t, mem, s0).context;
  return st;
}

/// One decoder step: v = tanh([s; c]), the stacked cell consumes
/// [v; emb(y_prev)], attention is recomputed from the new top state, and the
/// logits are the output projection of [s'; c'].
inline std::pair<Var, DecoderVars> decode_step(Tape& t, const GeneratorModel& m, Var mem,
                                               const DecoderVars& prev, std::int32_t y_prev,
                                               double dropout_rate = 0.0) {
  if (y_prev < 0 || static_cast<std::size_t>(y_prev) >= m.config().vocab_size) {
    throw Error("decode_step: token id " + std::to_string(y_prev) + " outside the vocabulary");
  }
  Var s_top = prev.layers.back().h;
  Var v = nn::tanh(t, nn::concat_rows(t, {s_top, prev.attention_context}));
  Var emb = nn::dropout(t, nn::embed(t, m.embedding(), y_prev), dropout_rate);
  DecoderVars next;
  next.layers = m.decoder().step(t, nn::concat_rows(t, {v, emb}), prev.layers, dropout_rate);
  Var s_new = next.layers.back().h;
  next.attention_context = attend(t, mem, s_new).context;
  Var feat = nn::dropout(t, nn::concat_rows(t, {s_new, next.attention_context}), dropout_rate);
  Var logits = nn::linear(t, m.output_weight(), m.output_bias(), feat);
  return {logits, next};
}

/// Teacher-forced negative log-likelihood of one example (summed over steps).
inline Var example_nll(Tape& t, const GeneratorModel& m, const EncodedExample& ex, double dropout_rate = 0.0) {
  if (ex.response.empty()) throw Error("example_nll: empty target response");
  auto hidden = encode_context(t, m, ex.context, dropout_rate);
  auto facts = encode_facts(t, m, ex.facts, dropout_rate);
  Var mem = memory(t, hidden, facts);
  DecoderVars st = decoder_start(t, m, mem, decoder_init(t, m, hidden.back(), facts));
  std::vector<Var> terms;
  std::int32_t prev = kBos;
  for (auto target : ex.response) {
    if (target == kPad) continue;
    auto [logits, next] = decode_step(t, m, mem, st, prev, dropout_rate);
    terms.push_back(nn::nll_from_logits(t, logits, target));
    st = std::move(next);
    prev = target;
  }
  return nn::add_all(t, terms);
}

/// Mean over examples of the per-example summed NLL.
inline Var batch_nll(Tape& t, const GeneratorModel& m, const std::vector<const EncodedExample*>& batch,
                     double dropout_rate = 0.0) {
  if (batch.empty()) throw Error("nll_loss: empty batch");
  std::vector<Var> per;
  per.reserve(batch.size());
  for (const auto* ex : batch) per.push_back(example_nll(t, m, *ex, dropout_rate));
  return nn::scale(t, nn::add_all(t, per), 1.0 / static_cast<double>(batch.size()));
}

}  // namespace graph

// ---------------------------------------------------------------------------
// Value-level API.

struct EncodedContext {
  std::vector<Vector> hidden;
  const Vector& final_state() const { return hidden.back(); }
};

struct FactsSummary {
  std::vector<Vector> means;
  std::size_t count() const { return means.size(); }
};

inline EncodedContext encode_context(const GeneratorModel& m, const IdSeq& ids) {
  Tape t(false);
  EncodedContext out;
  for (Var h : graph::encode_context(t, m, ids)) out.hidden.push_back(t.value(h).col(0));
  return out;
}

inline FactsSummary encode_facts(const GeneratorModel& m, const std::vector<IdSeq>& facts) {
  Tape t(false);
  FactsSummary out;
  for (Var f : graph::encode_facts(t, m, facts)) out.means.push_back(t.value(f).col(0));
  return out;
}

inline Matrix memory_matrix(const EncodedContext& enc, const FactsSummary& facts) {
  auto cols = static_cast<Eigen::Index>(enc.hidden.size() + facts.means.size());
  if (cols == 0) throw Error("attention memory is empty (no context and no facts)");
  Eigen::Index H = enc.hidden.empty() ? facts.means[0].size() : enc.hidden[0].size();
  Matrix E(H, cols);
  Eigen::Index j = 0;
  for (const auto& h : enc.hidden) E.col(j++) = h;
  for (const auto& f : facts.means) E.col(j++) = f;
  return E;
}

struct AttentionStep {
  Vector weights;  // a_t
  Vector context;  // c_t = E a_t
  Vector input;    // v_t = tanh([s_prev; c_t])
};

inline AttentionStep attention_step(const Matrix& memory, const Vector& s_prev) {
  if (memory.cols() == 0) throw Error("attention_step: memory has no columns");
  if (memory.rows() != s_prev.size()) throw Error("attention_step: state size does not match memory rows");
  AttentionStep out;
  out.weights = nn::softmax(Vector(memory.transpose() * s_prev));
  out.context = memory * out.weights;
  Vector cat(s_prev.size() + out.context.size());
  cat << s_prev, out.context;
  out.input = cat.array().tanh();
  return out;
}

inline Vector decoder_init(const GeneratorModel& m, const EncodedContext& enc, const FactsSummary& facts) {
  if (enc.hidden.empty()) throw Error("decoder_init: encoded context is empty");
  Tape t(false);
  std::vector<Var> fm;
  for (const auto& f : facts.means) fm.push_back(t.constant(f));
  return t.value(graph::decoder_init(t, m, t.constant(enc.final_state()), fm)).col(0);
}

struct DecoderState {
  std::vector<Vector> h;
  std::vector<Vector> c;
  Vector attention_context;
};

inline DecoderState initial_decoder_state(const GeneratorModel& m, const Matrix& memory, const Vector& s0) {
  DecoderState st;
  for (int l = 0; l < m.config().layers; ++l) {
    st.h.push_back(s0);
    st.c.push_back(Vector::Zero(m.hidden()));
  }
  st.attention_context = attention_step(memory, s0).context;
  return st;
}

/// Distribution over the next token after consuming `y_prev`, and the
/// successor state.
inline std::pair<Vector, DecoderState> decode_step(const GeneratorModel& m, const DecoderState& prev,
                                                   const Matrix& memory, std::int32_t y_prev) {
  Tape t(false);
  graph::DecoderVars pv;
  for (std::size_t l = 0; l < prev.h.size(); ++l) pv.layers.push_back({t.constant(prev.h[l]), t.constant(prev.c[l])});
  pv.attention_context = t.constant(prev.attention_context);
  auto [logits, nv] = graph::decode_step(t, m, t.constant(memory), pv, y_prev);
  DecoderState out;
  for (const auto& s : nv.layers) {
    out.h.push_back(t.value(s.h).col(0));
    out.c.push_back(t.value(s.c).col(0));
  }
  out.attention_context = t.value(nv.attention_context).col(0);
  return {nn::softmax(Vector(t.value(logits).col(0))), std::move(out)};
}

inline std::vector<const EncodedExample*> as_batch(const std::vector<EncodedExample>& examples) {
  std::vector<const EncodedExample*> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(&e);
  return out;
}

/// Mean over examples of the summed per-token NLL (dropout off).
inline double nll_loss(const GeneratorModel& m, const std::vector<EncodedExample>& batch) {
  Tape t(false);
  return t.scalar(graph::batch_nll(t, m, as_batch(batch)));
}

/// exp(total NLL / total target tokens), EOS included.
inline double perplexity(const GeneratorModel& m, const std::vector<EncodedExample>& examples) {
  if (examples.empty()) throw Error("perplexity: no examples");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : examples) {
    Tape t(false);
    total += t.scalar(graph::example_nll(t, m, ex));
    for (auto id : ex.response) tokens += id != kPad;
  }
  return std::exp(total / static_cast<double>(tokens));
}

/// Adapts a generator plus one encoded input to the beam search StepModel.
/// PAD, UNK and BOS are never emitted.
class GeneratorStepModel {
 public:
  using State = DecoderState;

  GeneratorStepModel(const GeneratorModel& m, const IdSeq& context, const std::vector<IdSeq>& facts)
      : model_(&m) {
    auto enc = encode_context(m, context);
    auto fs = encode_facts(m, facts);
    memory_ = memory_matrix(enc, fs);
    s0_ = decoder_init(m, enc, fs);
  }

  State initial_state() const { return initial_decoder_state(*model_, memory_, s0_); }

  std::pair<Vector, State> step(const State& s, std::int32_t token) const {
    auto [dist, next] = decode_step(*model_, s, memory_, token);
    Vector logp = dist.array().log();
    for (auto banned : {kPad, kUnk, kBos}) logp(banned) = -std::numeric_limits<double>::infinity();
    return {std::move(logp), std::move(next)};
  }

  std::int32_t bos() const { return kBos; }
  std::int32_t eos() const { return kEos; }

 private:
  const GeneratorModel* model_;
  Matrix memory_;
  Vector s0_;
};

/// Ranked finished hypotheses; EOS is stripped from the returned token ids but
/// counted in the normalisation length.
inline std::vector<ScoredSequence> generate(const GeneratorModel& m, const IdSeq& context,
                                            const std::vector<IdSeq>& facts, std::size_t beam_size,
                                            std::size_t max_len = kDefaultMaxLen) {
  GeneratorStepModel step(m, context, facts);
  auto ranked = beam_search(step, beam_size, max_len);
  for (auto& r : ranked) {
    if (!r.tokens.empty() && r.tokens.back() == kEos) r.tokens.pop_back();
  }
  return ranked;
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_decay = 0.5;
  std::size_t steps_between_validation = 5000;
  std::size_t patience = 10;
  std::size_t batch_size = 32;
  std::size_t max_steps = 100000;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

/// Validation bookkeeping: decay the learning rate on every non-improving
/// validation and stop once `patience` of them have accumulated.
struct ValidationTracker {
  double lr_decay = 0.5;
  std::size_t patience = 10;
  double best = std::numeric_limits<double>::infinity();
  std::size_t bad_checks = 0;

  /// Returns true when `loss` is a new best. Halves (or otherwise decays)
  /// `lr` otherwise.
  bool observe(double loss, double& lr) {
    if (loss < best) {
      best = loss;
      return true;
    }
    ++bad_checks;
    lr *= lr_decay;
    return false;
  }

  bool exhausted() const { return bad_checks >= patience; }
};

struct TrainLog {
  std::vector<double> train_loss;  // per step
  std::vector<double> valid_loss;  // per validation
  std::vector<double> learning_rate;  // per validation, after the decay rule
  std::size_t steps = 0;
  std::size_t best_step = 0;
  bool stopped_early = false;
};

/// Adam over shuffled mini-batches with validation-driven decay and early
/// stopping. When a validation set is given, the best validated parameters
/// are restored at the end.
inline TrainLog train_generator(GeneratorModel& m, const std::vector<EncodedExample>& train,
                                const std::vector<EncodedExample>& valid, const TrainConfig& cfg,
                                const std::function<void(std::size_t, double)>& on_step = {}) {
  if (train.empty()) throw Error("train_generator: empty training set");
  if (cfg.batch_size == 0) throw Error("train_generator: batch size must be positive");
  nn::Rng rng(cfg.seed);
  nn::AdamState adam(m.params(), cfg.learning_rate);
  ValidationTracker tracker{cfg.lr_decay, cfg.patience};
  TrainLog log;
  std::optional<std::vector<Matrix>> best;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  while (log.steps < cfg.max_steps) {
    std::vector<const EncodedExample*> batch;
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
      Var l = graph::batch_nll(t, m, batch, m.config().dropout);
      loss = t.scalar(l);
      if (!std::isfinite(loss)) {
        throw Error("train_generator: non-finite loss at step " + std::to_string(log.steps + 1));
      }
      t.backward(l);
    }
    nn::clip_grad_norm(m.params(), cfg.clip_norm);
    nn::adam_update(adam, m.params());
    ++log.steps;
    log.train_loss.push_back(loss);
    if (on_step) on_step(log.steps, loss);

    if (!valid.empty() && cfg.steps_between_validation > 0 && log.steps % cfg.steps_between_validation == 0) {
      double vl = nll_loss(m, valid);
      if (tracker.observe(vl, adam.lr)) {
        best = m.params().snapshot();
        log.best_step = log.steps;
      }
      log.valid_loss.push_back(vl);
      log.learning_rate.push_back(adam.lr);
      if (tracker.exhausted()) {
        log.stopped_early = true;
        break;
      }
    }
  }
  if (best) m.params().restore(*best);
  return log;
}

// ---------------------------------------------------------------------------
// Persistence. The vocabulary is stored next to the checkpoint as
// `<path>.vocab` and its hash is checked on load.

inline void save_generator(const GeneratorModel& m, const Vocabulary& vocab, const std::string& path) {
  if (vocab.size() != m.config().vocab_size) throw Error("save_generator: vocabulary size mismatch");
  nn::Checkpoint::capture("generator", vocab.hash(), m.config().to_meta(), m.params()).save(path);
  vocab.save(path + ".vocab");
}

struct LoadedGenerator {
  GeneratorModel model;
  Vocabulary vocab;
};

inline LoadedGenerator load_generator(const std::string& path) {
  auto ck = nn::Checkpoint::load(path);
  if (ck.kind != "generator") throw Error(path + " is a " + ck.kind + " checkpoint, not a generator");
  Vocabulary vocab = Vocabulary::load(path + ".vocab");
  if (vocab.hash() != ck.vocab_hash) throw Error("vocabulary file does not match checkpoint " + path);
  GeneratorModel m(GeneratorConfig::from_meta(ck));
  ck.apply(m.params());
  return {std::move(m), std::move(vocab)};
}

}  // namespace hncm::generation
