#pragma once

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hncm/generation.hpp"
#include "hncm/ranking.hpp"
#include "hncm/retrieval.hpp"
#include "hncm/synthetic.hpp"

namespace hncm {

enum class GeneratorProfile { kSeq2Seq, kSeq2SeqFacts };

inline GeneratorProfile parse_profile(const std::string& s) {
  if (s == "seq2seq") return GeneratorProfile::kSeq2Seq;
  if (s == "seq2seq-facts" || s == "seq2seq_facts") return GeneratorProfile::kSeq2SeqFacts;
  throw Error("unknown generator profile \"" + s + "\" (expected seq2seq|seq2seq-facts)");
}

inline const char* to_string(GeneratorProfile p) {
  return p == GeneratorProfile::kSeq2Seq ? "seq2seq" : "seq2seq-facts";
}

struct PathsConfig {
  std::string train;  // empty: synthesize
  std::string valid;
  std::string test;
  std::string index;
  std::string generator;
  std::string ranker;
  std::string embeddings;  // optional GloVe text file for the ranker
};

struct GeneratorSection {
  GeneratorProfile profile = GeneratorProfile::kSeq2SeqFacts;
  std::size_t embedding_size = 256;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t hidden_size = 256;
  double learning_rate = 1e-3;
  double learning_rate_decay = 0.5;
  std::size_t steps_between_validation = 5000;
  std::size_t patience = 10;
  double dropout = 0.3;
  std::size_t batch_size = 32;
  std::size_t max_steps = 100000;
  double clip_norm = 5.0;
  std::size_t beam_size = 10;
};

struct RankerSection {
  std::size_t embedding_size = 50;
  std::size_t conv_h = 6, conv_w = 6;
  std::size_t pool_h = 6, pool_w = 6;
  std::size_t kernels = 64;
  std::size_t stages = 1;
  std::size_t mlp_hidden = 128;
  double dropout = 0.5;
  double margin = 1.0;
  double l2 = 0.0;
  double learning_rate = 1e-4;
  std::size_t batch_size = 500;
  std::size_t max_steps = 10000;
  std::size_t steps_between_validation = 100;
  std::size_t patience = 10;
};

struct PipelineConfig {
  PathsConfig paths;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t vocab_max_size = 50000;
  std::size_t vocab_min_count = 1;
  synthetic::CorpusConfig synthetic;
  GeneratorSection generator;
  std::size_t k = 9;
  retrieval::Bm25Params bm25;
  bool dedupe_responses = true;
  RankerSection ranker;
  ranking::Signal signal = ranking::Signal::kBleu1;
  std::size_t kprime = 3;
  std::uint64_t seed = 1;
  bool desk = false;
  bool train_from_scratch = false;

  void validate() const {
    if (k < 1) throw Error("config: retrieval.k must be >= 1");
    if (generator.beam_size < 1) throw Error("config: generator.beam_size must be >= 1");
    if (kprime < 1) throw Error("config: supervision.kprime must be >= 1");
    if (kprime > k) throw Error("config: supervision.kprime must not exceed the pool's retrieved part (retrieval.k)");
    if (generator.encoder_layers != generator.decoder_layers) {
      throw Error("config: encoder_layers and decoder_layers must be equal");
    }
    if (generator.encoder_layers < 1) throw Error("config: generator needs at least one LSTM layer");
    if (max_len < 1) throw Error("config: data.max_len must be >= 1");
    namespace fs = std::filesystem;
    for (const auto* p : {&paths.train, &paths.valid, &paths.test, &paths.embeddings}) {
      if (!p->empty() && !fs::exists(*p)) throw Error("config: path does not exist: " + *p);
    }
    if (!train_from_scratch) {
      for (const auto* p : {&paths.index, &paths.generator, &paths.ranker}) {
        if (p->empty() || !fs::exists(*p)) {
          throw Error("config: artifact missing (" + (p->empty() ? std::string("unset") : *p) +
                      "); set run.train_from_scratch = true to build it");
        }
      }
    }
  }

  generation::GeneratorConfig generator_config(std::size_t vocab_size) const {
    return {vocab_size,
            generator.embedding_size,
            generator.hidden_size,
            static_cast<int>(generator.encoder_layers),
            generator.dropout,
            generator.profile == GeneratorProfile::kSeq2SeqFacts};
  }

  generation::TrainConfig generator_train_config() const {
    return {generator.learning_rate, generator.learning_rate_decay, generator.steps_between_validation,
            generator.patience,      generator.batch_size,          generator.max_steps,
            generator.clip_norm,     seed};
  }

  ranking::RankerConfig ranker_config(std::size_t vocab_size) const {
    return {vocab_size, ranker.embedding_size, max_len, ranker.conv_h, ranker.conv_w, ranker.pool_h,
            ranker.pool_w, ranker.kernels, ranker.stages, ranker.mlp_hidden, ranker.dropout};
  }

  ranking::RankerTrainConfig ranker_train_config() const {
    return {ranker.learning_rate, ranker.batch_size, ranker.margin, ranker.l2, ranker.max_steps,
            ranker.steps_between_validation, ranker.patience, 5.0, seed + 1};
  }

  ranking::SupervisionConfig supervision() const { return {signal, kprime, ranker.margin, ranker.l2}; }

  retrieval::RetrieveOptions retrieve_options() const { return {bm25, dedupe_responses, std::nullopt}; }
};

namespace detail {

inline std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

template <class T>
void get(const boost::property_tree::ptree& pt, const std::string& key, T& out) {
  auto raw = pt.get_optional<std::string>(key);
  if (!raw) return;
  auto v = pt.get_optional<T>(key);
  if (!v) throw Error("config: bad value for " + key + ": \"" + *raw + "\"");
  out = *v;
}

inline void get_window(const boost::property_tree::ptree& pt, const std::string& key, std::size_t& h,
                       std::size_t& w) {
  auto v = pt.get_optional<std::string>(key);
  if (!v) return;
  char sep = 0;
  std::istringstream ss(*v);
  if (!(ss >> h >> sep >> w) || sep != ',') throw Error("config: " + key + " must be \"rows,cols\"");
}

}  // namespace detail

/// Full-scale defaults with the Seq2Seq or Seq2Seq-Facts column applied.
inline PipelineConfig default_config(GeneratorProfile profile = GeneratorProfile::kSeq2SeqFacts) {
  PipelineConfig c;
  c.generator.profile = profile;
  if (profile == GeneratorProfile::kSeq2Seq) {
    c.generator.embedding_size = c.generator.hidden_size = 512;
    c.generator.learning_rate = 1e-4;
    c.generator.steps_between_validation = 10000;
  }
  return c;
}

/// Desk-scale profile: 64-wide generator, beam 5, a smaller ranker and short
/// schedules over the synthetic corpus.
inline PipelineConfig desk_config(GeneratorProfile profile = GeneratorProfile::kSeq2SeqFacts) {
  PipelineConfig c = default_config(profile);
  c.desk = true;
  c.synthetic.pairs = 600;
  auto& g = c.generator;
  g.embedding_size = g.hidden_size = 64;
  g.learning_rate = 3e-3;
  g.batch_size = 8;
  g.max_steps = 1500;
  g.steps_between_validation = 250;
  g.patience = 4;
  g.beam_size = 5;
  auto& r = c.ranker;
  r.embedding_size = 32;
  r.kernels = 16;
  r.mlp_hidden = 64;
  r.learning_rate = 1e-3;
  r.batch_size = 16;
  r.max_steps = 400;
  r.steps_between_validation = 50;
  r.patience = 4;
  return c;
}

/// Reads an INI file. Unset keys keep the defaults of the selected generator
/// profile, desk-scale when run.desk is true. Relative paths resolve against
/// the file's directory.
inline PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".") {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  try {
    auto profile = parse_profile(pt.get<std::string>("generator.profile", "seq2seq-facts"));
    c = pt.get<bool>("run.desk", false) ? desk_config(profile) : default_config(profile);
    for (auto [key, dst] : {std::pair{"paths.train", &c.paths.train}, {"paths.valid", &c.paths.valid},
                            {"paths.test", &c.paths.test}, {"paths.index", &c.paths.index},
                            {"paths.generator", &c.paths.generator}, {"paths.ranker", &c.paths.ranker},
                            {"paths.embeddings", &c.paths.embeddings}}) {
      detail::get(pt, key, *dst);
      *dst = detail::resolve(*dst, base_dir);
    }
    detail::get(pt, "data.max_len", c.max_len);
    detail::get(pt, "data.vocab_max_size", c.vocab_max_size);
    detail::get(pt, "data.vocab_min_count", c.vocab_min_count);
    detail::get(pt, "data.synthetic_pairs", c.synthetic.pairs);
    detail::get(pt, "data.synthetic_topics", c.synthetic.topics);
    detail::get(pt, "data.synthetic_seed", c.synthetic.seed);

    auto& g = c.generator;
    detail::get(pt, "generator.embedding_size", g.embedding_size);
    detail::get(pt, "generator.encoder_layers", g.encoder_layers);
    detail::get(pt, "generator.decoder_layers", g.decoder_layers);
    detail::get(pt, "generator.hidden_size", g.hidden_size);
    detail::get(pt, "generator.learning_rate", g.learning_rate);
    detail::get(pt, "generator.learning_rate_decay", g.learning_rate_decay);
    detail::get(pt, "generator.steps_between_validation", g.steps_between_validation);
    detail::get(pt, "generator.patience", g.patience);
    detail::get(pt, "generator.dropout", g.dropout);
    detail::get(pt, "generator.batch_size", g.batch_size);
    detail::get(pt, "generator.max_steps", g.max_steps);
    detail::get(pt, "generator.clip_norm", g.clip_norm);
    detail::get(pt, "generator.beam_size", g.beam_size);

    detail::get(pt, "retrieval.k", c.k);
    detail::get(pt, "retrieval.bm25_k1", c.bm25.k1);
    detail::get(pt, "retrieval.bm25_b", c.bm25.b);
    detail::get(pt, "retrieval.dedupe_responses", c.dedupe_responses);

    auto& r = c.ranker;
    detail::get(pt, "ranker.embedding_size", r.embedding_size);
    detail::get_window(pt, "ranker.conv_window", r.conv_h, r.conv_w);
    detail::get_window(pt, "ranker.pool_window", r.pool_h, r.pool_w);
    detail::get(pt, "ranker.kernels", r.kernels);
    detail::get(pt, "ranker.stages", r.stages);
    detail::get(pt, "ranker.mlp_hidden", r.mlp_hidden);
    detail::get(pt, "ranker.dropout", r.dropout);
    detail::get(pt, "ranker.margin", r.margin);
    detail::get(pt, "ranker.l2", r.l2);
    detail::get(pt, "ranker.learning_rate", r.learning_rate);
    detail::get(pt, "ranker.batch_size", r.batch_size);
    detail::get(pt, "ranker.max_steps", r.max_steps);
    detail::get(pt, "ranker.steps_between_validation", r.steps_between_validation);
    detail::get(pt, "ranker.patience", r.patience);

    if (auto s = pt.get_optional<std::string>("supervision.signal")) c.signal = ranking::parse_signal(*s);
    detail::get(pt, "supervision.kprime", c.kprime);

    detail::get(pt, "run.seed", c.seed);
    detail::get(pt, "run.desk", c.desk);
    detail::get(pt, "run.train_from_scratch", c.train_from_scratch);
  } catch (const boost::property_tree::ptree_bad_data& e) {
    throw Error(std::string("config: bad value: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  return parse_config(in, std::filesystem::path(path).parent_path());
}

/// Canonical INI rendering; every key parse_config understands is emitted.
inline std::string to_ini(const PipelineConfig& c) {
  std::ostringstream o;
  o.precision(17);
  const auto& g = c.generator;
  const auto& r = c.ranker;
  o << "[paths]\ntrain = " << c.paths.train << "\nvalid = " << c.paths.valid << "\ntest = " << c.paths.test
    << "\nindex = " << c.paths.index << "\ngenerator = " << c.paths.generator << "\nranker = " << c.paths.ranker
    << "\nembeddings = " << c.paths.embeddings << "\n\n";
  o << "[data]\nmax_len = " << c.max_len << "\nvocab_max_size = " << c.vocab_max_size
    << "\nvocab_min_count = " << c.vocab_min_count << "\nsynthetic_pairs = " << c.synthetic.pairs
    << "\nsynthetic_topics = " << c.synthetic.topics << "\nsynthetic_seed = " << c.synthetic.seed << "\n\n";
  o << "[generator]\nprofile = " << to_string(g.profile) << "\nembedding_size = " << g.embedding_size
    << "\nencoder_layers = " << g.encoder_layers << "\ndecoder_layers = " << g.decoder_layers
    << "\nhidden_size = " << g.hidden_size << "\nlearning_rate = " << g.learning_rate
    << "\nlearning_rate_decay = " << g.learning_rate_decay
    << "\nsteps_between_validation = " << g.steps_between_validation << "\npatience = " << g.patience
    << "\ndropout = " << g.dropout << "\nbatch_size = " << g.batch_size << "\nmax_steps = " << g.max_steps
    << "\nclip_norm = " << g.clip_norm << "\nbeam_size = " << g.beam_size << "\n\n";
  o << "[retrieval]\nk = " << c.k << "\nbm25_k1 = " << c.bm25.k1 << "\nbm25_b = " << c.bm25.b
    << "\ndedupe_responses = " << (c.dedupe_responses ? "true" : "false") << "\n\n";
  o << "[ranker]\nembedding_size = " << r.embedding_size << "\nconv_window = " << r.conv_h << "," << r.conv_w
    << "\npool_window = " << r.pool_h << "," << r.pool_w << "\nkernels = " << r.kernels
    << "\nstages = " << r.stages << "\nmlp_hidden = " << r.mlp_hidden << "\ndropout = " << r.dropout
    << "\nmargin = " << r.margin << "\nl2 = " << r.l2 << "\nlearning_rate = " << r.learning_rate
    << "\nbatch_size = " << r.batch_size << "\nmax_steps = " << r.max_steps
    << "\nsteps_between_validation = " << r.steps_between_validation << "\npatience = " << r.patience << "\n\n";
  o << "[supervision]\nsignal = " << ranking::to_string(c.signal) << "\nkprime = " << c.kprime << "\n\n";
  o << "[run]\nseed = " << c.seed << "\ndesk = " << (c.desk ? "true" : "false")
    << "\ntrain_from_scratch = " << (c.train_from_scratch ? "true" : "false") << "\n";
  return o.str();
}

inline std::uint64_t config_hash(const PipelineConfig& c) { return fnv1a(to_ini(c)); }

}  // namespace hncm
