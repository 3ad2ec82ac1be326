#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "hncm/config.hpp"
#include "hncm/generation.hpp"
#include "hncm/io.hpp"
#include "hncm/metrics.hpp"
#include "hncm/ranking.hpp"
#include "hncm/retrieval.hpp"
#include "hncm/synthetic.hpp"

namespace hncm::pipeline {

using metrics::Provenance;
using nlohmann::json;

inline std::string hex_id(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <class Writer>
std::string artifact_id(const Writer& w) {
  std::ostringstream os(std::ios::binary);
  w(os);
  return hex_id(fnv1a(os.str()));
}

struct Data {
  Corpus train;
  Corpus valid;
  Corpus test;
};

/// Corpora from the configured paths; a missing train path synthesizes all
/// three splits.
inline Data load_data(const PipelineConfig& c) {
  Data d;
  if (c.paths.train.empty()) {
    auto cfg = c.synthetic;
    auto s = synthetic::make_splits(cfg);
    return {std::move(s.train), std::move(s.valid), std::move(s.test)};
  }
  d.train = load_corpus(c.paths.train, Split::kTrain, c.max_len);
  if (!c.paths.valid.empty()) d.valid = load_corpus(c.paths.valid, Split::kValid, c.max_len);
  if (!c.paths.test.empty()) d.test = load_corpus(c.paths.test, Split::kTest, c.max_len);
  return d;
}

struct Artifacts {
  retrieval::RepositoryIndex index;
  Vocabulary generator_vocab;
  std::optional<generation::GeneratorModel> generator;
  Vocabulary ranker_vocab;
  std::optional<ranking::RankerModel> ranker;
};

// ---------------------------------------------------------------------------
// Candidate pools.

struct Pool {
  ranking::CandidateSet set;
  bool generated = false;  // generation produced a non-empty candidate
  bool fallback = false;   // pool was empty and the top BM25 response was used
};

/// Doc id of `ex` in `index` when the index was built from the same corpus in
/// order, so training pools can leave out the query's own pair.
inline std::optional<std::uint32_t> self_doc(const retrieval::RepositoryIndex& index, const ConversationExample& ex,
                                             std::size_t position) {
  if (position >= index.num_docs()) return std::nullopt;
  const auto& d = index.doc(static_cast<std::uint32_t>(position));
  if (d.context == join(ex.context) && d.response == join(ex.response)) {
    return static_cast<std::uint32_t>(position);
  }
  return std::nullopt;
}

/// Top BM25 response; with no positive-score hit, the lowest doc id not
/// excluded (the head of an all-zero ranking under the doc-id tie rule).
inline ranking::Candidate fallback_candidate(const TokenSeq& context, const retrieval::RepositoryIndex& index,
                                             std::optional<std::uint32_t> exclude) {
  retrieval::RetrieveOptions opt;
  opt.exclude_doc = exclude;
  auto hits = retrieval::retrieve(context, index, 1, opt);
  if (!hits.empty()) return {hits[0].response, Provenance::kRetrieved, 1, hits[0].score};
  for (std::uint32_t d = 0; d < index.num_docs(); ++d) {
    if (exclude && *exclude == d) continue;
    return {tokenize(index.doc(d).response), Provenance::kRetrieved, 1, 0.0};
  }
  throw Error("fallback: repository index is empty");
}

/// Y = G ∪ R: one generated candidate (top beam hypothesis) plus up to K
/// retrieved ones.
inline Pool build_pool(const ConversationExample& ex, const Artifacts& a, const PipelineConfig& c,
                       std::optional<std::uint32_t> exclude_doc = std::nullopt) {
  Pool p;
  p.set.context = ex.context;
  if (!ex.response.empty()) p.set.ground_truth = ex.response;
  if (a.generator) {
    try {
      IdSeq ctx = encode(ex.context, a.generator_vocab, c.max_len);
      std::vector<IdSeq> facts;
      for (const auto& f : ex.facts) facts.push_back(encode(f, a.generator_vocab, c.max_len));
      auto ranked = generation::generate(*a.generator, ctx, facts, c.generator.beam_size, c.max_len);
      if (!ranked.empty() && !ranked[0].tokens.empty()) {
        p.set.candidates.push_back({decode(ranked[0].tokens, a.generator_vocab), Provenance::kGenerated, 1,
                                    ranked[0].score});
        p.generated = true;
      }
    } catch (const Error& e) {
      spdlog::warn("generation failed for context \"{}\": {}", join(ex.context), e.what());
    }
  }
  auto opt = c.retrieve_options();
  opt.exclude_doc = exclude_doc;
  for (auto& r : retrieval::retrieve(ex.context, a.index, c.k, opt)) {
    p.set.candidates.push_back({std::move(r.response), Provenance::kRetrieved, r.rank, r.score});
  }
  if (p.set.candidates.empty()) {
    spdlog::warn("empty pool for context \"{}\"; using the top BM25 response", join(ex.context));
    p.set.candidates.push_back(fallback_candidate(ex.context, a.index, exclude_doc));
    p.fallback = true;
  }
  return p;
}

inline std::vector<Pool> build_pools(const Corpus& corpus, const Artifacts& a, const PipelineConfig& c,
                                     bool exclude_self) {
  std::vector<Pool> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto excl = exclude_self ? self_doc(a.index, corpus.examples[i], i) : std::nullopt;
    out.push_back(build_pool(corpus.examples[i], a, c, excl));
  }
  return out;
}

struct PoolCache {
  std::vector<Pool> train;
  std::vector<Pool> valid;
  std::vector<Pool> test;
};

// ---------------------------------------------------------------------------
// Distant supervision over pools.

inline std::vector<ranking::TrainingTriple> label_pools(const std::vector<Pool>& pools,
                                                        const ranking::SupervisionConfig& sup) {
  std::vector<ranking::TrainingTriple> out;
  std::size_t skipped = 0;
  for (const auto& p : pools) {
    if (!p.set.ground_truth) continue;
    if (p.set.candidates.size() <= sup.kprime) {
      ++skipped;
      continue;
    }
    auto labels = ranking::make_distant_labels(p.set, *p.set.ground_truth, sup);
    auto triples = ranking::make_training_triples(p.set, labels, sup.kprime, *p.set.ground_truth);
    out.insert(out.end(), triples.begin(), triples.end());
  }
  if (skipped) spdlog::warn("label: skipped {} contexts with at most k'={} candidates", skipped, sup.kprime);
  return out;
}

// ---------------------------------------------------------------------------
// Stage runners.

inline std::vector<generation::EncodedExample> encode_corpus(const Corpus& corpus, const Vocabulary& vocab,
                                                             std::size_t max_len) {
  std::vector<generation::EncodedExample> out;
  for (const auto& ex : corpus.examples) out.push_back(generation::encode_example(ex, vocab, max_len));
  return out;
}

inline generation::GeneratorModel train_generator_stage(const PipelineConfig& c, const Data& d,
                                                        const Vocabulary& vocab, generation::TrainLog* log = nullptr) {
  nn::Rng rng(c.seed);
  generation::GeneratorModel m(c.generator_config(vocab.size()), rng);
  auto train = encode_corpus(d.train, vocab, c.max_len);
  auto valid = encode_corpus(d.valid, vocab, c.max_len);
  auto l = generation::train_generator(m, train, valid, c.generator_train_config(), [&](std::size_t step, double loss) {
    if (step % 100 == 0) spdlog::debug("generator step {} loss {:.4f}", step, loss);
  });
  spdlog::info("generator: {} steps, final loss {:.4f}", l.steps, l.train_loss.empty() ? 0.0 : l.train_loss.back());
  if (log) *log = std::move(l);
  return m;
}

inline ranking::RankerModel train_ranker_stage(const PipelineConfig& c, const Vocabulary& vocab,
                                               const std::vector<ranking::TrainingTriple>& train,
                                               const std::vector<ranking::TrainingTriple>& valid,
                                               ranking::RankerTrainLog* log = nullptr) {
  nn::Rng rng(c.seed + 2);
  ranking::RankerModel m(c.ranker_config(vocab.size()), rng);
  if (!c.paths.embeddings.empty()) {
    auto n = ranking::load_pretrained_embeddings(m.embedding(), vocab, c.paths.embeddings);
    spdlog::info("ranker: {} of {} words initialised from {}", n, vocab.size(), c.paths.embeddings);
  }
  auto tr = ranking::encode_triples(train, vocab, c.max_len);
  auto va = ranking::encode_triples(valid, vocab, c.max_len);
  if (tr.empty()) throw Error("train-ranker: no usable training triples");
  auto l = ranking::train_ranker(m, tr, va, c.ranker_train_config(), [&](std::size_t step, double loss) {
    if (step % 50 == 0) spdlog::debug("ranker step {} loss {:.4f}", step, loss);
  });
  spdlog::info("ranker: {} steps, best valid accuracy {:.4f}", l.steps, l.best_accuracy);
  if (log) *log = std::move(l);
  return m;
}

struct ContextOutcome {
  std::string context;
  std::string chosen;
  std::string reference;
  Provenance provenance = Provenance::kGenerated;
  std::size_t origin_rank = 1;
  std::size_t pool_size = 0;
  bool generated = false;
  bool fallback = false;
  bool chosen_in_pool = false;
  std::vector<std::pair<std::string, double>> ranked;  // text, score; best first
};

inline ContextOutcome choose(const ranking::RankerModel& ranker, const Vocabulary& vocab, const Pool& p) {
  auto r = ranking::rerank(ranker, vocab, p.set);
  const auto& best = p.set.candidates[r.chosen];
  ContextOutcome o;
  o.context = join(p.set.context);
  o.chosen = join(best.tokens);
  if (p.set.ground_truth) o.reference = join(*p.set.ground_truth);
  o.provenance = best.provenance;
  o.origin_rank = best.origin_rank;
  o.pool_size = p.set.candidates.size();
  o.generated = p.generated;
  o.fallback = p.fallback;
  for (const auto& rc : r.ranked) {
    o.ranked.emplace_back(join(p.set.candidates[rc.index].tokens), rc.score);
    o.chosen_in_pool |= rc.index == r.chosen;
  }
  return o;
}

struct Evaluation {
  std::vector<ContextOutcome> outcomes;
  metrics::MetricReport report;
};

inline Evaluation evaluate_pools(const ranking::RankerModel& ranker, const Vocabulary& vocab,
                                 const std::vector<Pool>& pools) {
  Evaluation ev;
  std::vector<TokenSeq> outputs, refs;
  std::vector<metrics::SelectionRecord> log;
  for (const auto& p : pools) {
    if (!p.set.ground_truth) throw Error("evaluate: test context without a reference response");
    auto o = choose(ranker, vocab, p);
    outputs.push_back(tokenize(o.chosen));
    refs.push_back(*p.set.ground_truth);
    log.push_back({o.provenance, o.origin_rank});
    ev.outcomes.push_back(std::move(o));
  }
  ev.report = metrics::evaluate_run(outputs, refs, log);
  return ev;
}

// ---------------------------------------------------------------------------
// Whole-pipeline runs.

struct RunManifest {
  std::string config_hash;
  std::string index_id;
  std::string generator_id;
  std::string ranker_id;
  std::uint64_t seed = 0;
  metrics::MetricReport report;
  std::vector<ContextOutcome> outcomes;
  std::map<std::string, double> timings;  // seconds per stage
};

inline json to_json(const ContextOutcome& o) {
  json ranked = json::array();
  for (const auto& [text, s] : o.ranked) ranked.push_back({{"text", text}, {"score", s}});
  return {{"context", o.context},           {"chosen", o.chosen},       {"reference", o.reference},
          {"provenance", metrics::to_string(o.provenance)},             {"rank", o.origin_rank},
          {"pool_size", o.pool_size},       {"generated", o.generated}, {"fallback", o.fallback},
          {"ranked", std::move(ranked)}};
}

inline json to_json(const RunManifest& m) {
  json outcomes = json::array();
  for (const auto& o : m.outcomes) outcomes.push_back(to_json(o));
  return {{"config_hash", m.config_hash},
          {"seed", m.seed},
          {"checkpoints", {{"index", m.index_id}, {"generator", m.generator_id}, {"ranker", m.ranker_id}}},
          {"report", metrics::to_json(m.report)},
          {"timings_s", m.timings},
          {"outcomes", std::move(outcomes)}};
}

class Stopwatch {
 public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Index, vocabulary and generator: loaded from the configured paths, or
/// built when train_from_scratch is set (and saved where a path is given).
inline Artifacts prepare_base(const PipelineConfig& c, const Data& d, std::map<std::string, double>* timings = nullptr) {
  namespace fs = std::filesystem;
  Stopwatch sw;
  Artifacts a;
  bool have_index = !c.paths.index.empty() && fs::exists(c.paths.index);
  if (have_index && !c.train_from_scratch) {
    a.index = retrieval::RepositoryIndex::load(c.paths.index);
  } else {
    if (d.train.empty()) throw Error("cannot build the index: no training corpus");
    a.index = retrieval::build_index(d.train);
    if (!c.paths.index.empty()) a.index.save(c.paths.index);
  }
  if (timings) (*timings)["index"] = sw.lap();

  bool have_gen = !c.paths.generator.empty() && fs::exists(c.paths.generator);
  if (have_gen && !c.train_from_scratch) {
    auto g = generation::load_generator(c.paths.generator);
    a.generator_vocab = std::move(g.vocab);
    a.generator.emplace(std::move(g.model));
  } else {
    a.generator_vocab = build_vocab(d.train, c.vocab_max_size, c.vocab_min_count);
    a.generator.emplace(train_generator_stage(c, d, a.generator_vocab));
    if (!c.paths.generator.empty()) generation::save_generator(*a.generator, a.generator_vocab, c.paths.generator);
  }
  if (timings) (*timings)["generator"] = sw.lap();
  return a;
}

inline PoolCache build_pool_cache(const Data& d, const Artifacts& a, const PipelineConfig& c) {
  return {build_pools(d.train, a, c, true), build_pools(d.valid, a, c, false), build_pools(d.test, a, c, false)};
}

inline std::vector<ranking::TrainingTriple> valid_triples(const PoolCache& pools,
                                                          const ranking::SupervisionConfig& sup) {
  return label_pools(pools.valid, sup);
}

/// Retrieve, generate, pool, rerank and evaluate every test context.
inline RunManifest run_pipeline(const PipelineConfig& c) {
  c.validate();
  namespace fs = std::filesystem;
  RunManifest m;
  m.config_hash = hex_id(config_hash(c));
  m.seed = c.seed;
  Stopwatch sw;
  Data d = load_data(c);
  if (d.test.empty()) throw Error("run: no test contexts");
  m.timings["data"] = sw.lap();

  Artifacts a = prepare_base(c, d, &m.timings);
  sw.lap();
  PoolCache pools = build_pool_cache(d, a, c);
  m.timings["pools"] = sw.lap();

  bool have_ranker = !c.paths.ranker.empty() && fs::exists(c.paths.ranker);
  if (have_ranker && !c.train_from_scratch) {
    auto r = ranking::load_ranker(c.paths.ranker);
    a.ranker_vocab = std::move(r.vocab);
    a.ranker.emplace(std::move(r.model));
  } else {
    a.ranker_vocab = a.generator_vocab;
    auto sup = c.supervision();
    a.ranker.emplace(train_ranker_stage(c, a.ranker_vocab, label_pools(pools.train, sup), valid_triples(pools, sup)));
    if (!c.paths.ranker.empty()) ranking::save_ranker(*a.ranker, a.ranker_vocab, c.paths.ranker);
  }
  m.timings["ranker"] = sw.lap();

  auto ev = evaluate_pools(*a.ranker, a.ranker_vocab, pools.test);
  m.timings["evaluate"] = sw.lap();
  m.report = ev.report;
  m.outcomes = std::move(ev.outcomes);
  m.index_id = artifact_id([&](std::ostream& os) { a.index.write(os); });
  m.generator_id = artifact_id([&](std::ostream& os) {
    nn::Checkpoint::capture("generator", a.generator_vocab.hash(), a.generator->config().to_meta(), a.generator->params())
        .write(os);
  });
  m.ranker_id = artifact_id([&](std::ostream& os) {
    nn::Checkpoint::capture("ranker", a.ranker_vocab.hash(), a.ranker->config().to_meta(), a.ranker->params())
        .write(os);
  });
  return m;
}

// ---------------------------------------------------------------------------
// Ablations.

enum class AblationAxis { kKPrime, kSignal };

inline AblationAxis parse_axis(const std::string& s) {
  if (s == "kprime") return AblationAxis::kKPrime;
  if (s == "signal") return AblationAxis::kSignal;
  throw Error("unknown ablation axis \"" + s + "\" (expected kprime|signal)");
}

struct AblationRow {
  std::string setting;
  std::optional<metrics::MetricReport> report;
  std::string error;
};

struct AblationTable {
  AblationAxis axis = AblationAxis::kKPrime;
  std::vector<AblationRow> rows;
};

/// One label + train-ranker + evaluate cycle per setting, on pools shared
/// across settings. A failing cycle leaves an error marker in its row.
inline AblationTable run_ablation(const PipelineConfig& base, AblationAxis axis) {
  base.validate();
  Data d = load_data(base);
  if (d.test.empty()) throw Error("ablate: no test contexts");
  Artifacts a = prepare_base(base, d);
  PoolCache pools = build_pool_cache(d, a, base);

  std::vector<PipelineConfig> settings;
  std::vector<std::string> names;
  if (axis == AblationAxis::kKPrime) {
    for (std::size_t k : {1, 2, 3}) {
      auto c = base;
      c.kprime = k;
      settings.push_back(c);
      names.push_back("k'=" + std::to_string(k));
    }
  } else {
    for (auto s : {ranking::Signal::kBleu1, ranking::Signal::kBleu2, ranking::Signal::kRougeL, ranking::Signal::kSentBleu}) {
      auto c = base;
      c.signal = s;
      settings.push_back(c);
      names.push_back(ranking::to_string(s));
    }
  }
  AblationTable table;
  table.axis = axis;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    AblationRow row{names[i], std::nullopt, {}};
    try {
      auto sup = settings[i].supervision();
      auto ranker = train_ranker_stage(settings[i], a.generator_vocab, label_pools(pools.train, sup),
                                       valid_triples(pools, sup));
      row.report = evaluate_pools(ranker, a.generator_vocab, pools.test).report;
    } catch (const std::exception& e) {
      spdlog::error("ablation {} failed: {}", names[i], e.what());
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline json to_json(const AblationTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json j = {{"setting", r.setting}};
    if (r.report) j["report"] = metrics::to_json(*r.report);
    else j["error"] = r.error;
    rows.push_back(std::move(j));
  }
  return {{"axis", t.axis == AblationAxis::kKPrime ? "kprime" : "signal"}, {"rows", std::move(rows)}};
}

inline std::string format_table(const AblationTable& t) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(4);
  o << std::left << std::setw(10) << "setting" << std::right << std::setw(10) << "BLEU" << std::setw(10) << "ROUGE-L"
    << std::setw(10) << "Dist-1" << std::setw(10) << "Dist-2" << std::setw(10) << "Gen%" << std::setw(10) << "Ret%"
    << '\n';
  for (const auto& r : t.rows) {
    o << std::left << std::setw(10) << r.setting << std::right;
    if (!r.report) {
      o << "  ERROR: " << r.error << '\n';
      continue;
    }
    const auto& p = *r.report;
    o << std::setw(10) << p.bleu << std::setw(10) << p.rouge_l << std::setw(10) << p.distinct1 << std::setw(10)
      << p.distinct2 << std::setw(10) << p.selection.pct_generated() << std::setw(10) << p.selection.pct_retrieved()
      << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Interactive session.

/// Reads utterances until ":quit" or end of input. Each turn is answered
/// independently; the chosen response is printed with its provenance,
/// followed by up to three alternatives with scores.
inline int chat(const Artifacts& a, const PipelineConfig& c, std::istream& in, std::ostream& out) {
  if (!a.ranker) throw Error("chat: no ranker loaded");
  std::string line;
  while (true) {
    out << "> " << std::flush;
    if (!std::getline(in, line)) break;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    if (line == ":quit") break;
    ConversationExample ex;
    ex.context = truncate(tokenize(line), c.max_len);
    if (ex.context.empty()) continue;
    auto o = choose(*a.ranker, a.ranker_vocab, build_pool(ex, a, c));
    out << "[" << metrics::to_string(o.provenance) << "] " << o.chosen << '\n';
    std::size_t shown = 0;
    for (std::size_t i = 1; i < o.ranked.size() && shown < 3; ++i, ++shown) {
      out << "   " << std::fixed << std::setprecision(4) << o.ranked[i].second << "  " << o.ranked[i].first << '\n';
    }
  }
  return 0;
}

}  // namespace hncm::pipeline
