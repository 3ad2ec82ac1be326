// hncm: command-line front end for the hybrid retrieval-generation pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hncm/config.hpp"
#include "hncm/io.hpp"
#include "hncm/pipeline.hpp"

using namespace hncm;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

PipelineConfig load(const Globals& g) {
  PipelineConfig c = g.config.empty() ? desk_config() : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  for (const auto* p : {&c.paths.index, &c.paths.generator, &c.paths.ranker}) {
    auto dir = std::filesystem::path(*p).parent_path();
    if (!p->empty() && !dir.empty()) std::filesystem::create_directories(dir);
  }
  return c;
}

std::string require_path(const std::string& p, const char* what) {
  if (p.empty()) throw Error(std::string("no ") + what + " path: set it in [paths] or pass it on the command line");
  return p;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error("cannot open " + out + " for writing");
  f << j.dump(2) << '\n';
}

/// Contexts (and facts) from a corpus-style JSONL file; the response field is
/// optional here.
std::vector<ConversationExample> read_contexts(const std::string& path, std::size_t max_len) {
  std::vector<ConversationExample> out;
  io::for_each_jsonl(path, [&](const json& j, std::size_t) {
    ConversationExample ex;
    ex.context = truncate(tokenize(j.at("context").get<std::string>()), max_len);
    if (j.contains("response")) ex.response = truncate(tokenize(j["response"].get<std::string>()), max_len);
    if (j.contains("facts")) {
      for (const auto& f : j["facts"]) ex.facts.push_back(truncate(tokenize(f.get<std::string>()), max_len));
    }
    out.push_back(std::move(ex));
  });
  return out;
}

pipeline::Artifacts load_artifacts(const PipelineConfig& c, bool need_generator, bool need_ranker) {
  pipeline::Artifacts a;
  a.index = retrieval::RepositoryIndex::load(require_path(c.paths.index, "index"));
  if (need_generator) {
    auto g = generation::load_generator(require_path(c.paths.generator, "generator"));
    a.generator_vocab = std::move(g.vocab);
    a.generator.emplace(std::move(g.model));
  }
  if (need_ranker) {
    auto r = ranking::load_ranker(require_path(c.paths.ranker, "ranker"));
    a.ranker_vocab = std::move(r.vocab);
    a.ranker.emplace(std::move(r.model));
  }
  return a;
}

int cmd_synth(const PipelineConfig& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto s = synthetic::make_splits(c.synthetic);
  save_corpus(s.train, (std::filesystem::path(dir) / "train.jsonl").string());
  save_corpus(s.valid, (std::filesystem::path(dir) / "valid.jsonl").string());
  save_corpus(s.test, (std::filesystem::path(dir) / "test.jsonl").string());
  spdlog::info("wrote {}/{}/{} pairs to {}", s.train.size(), s.valid.size(), s.test.size(), dir);
  return 0;
}

int cmd_build_index(const PipelineConfig& c, std::string out) {
  out = require_path(out.empty() ? c.paths.index : out, "index");
  auto d = pipeline::load_data(c);
  auto idx = retrieval::build_index(d.train);
  idx.save(out);
  spdlog::info("indexed {} pairs ({} terms, avgdl {:.3f}) -> {}", idx.num_docs(), idx.postings().size(),
               idx.avg_doc_length(), out);
  return 0;
}

int cmd_train_generator(const PipelineConfig& c, std::string out) {
  out = require_path(out.empty() ? c.paths.generator : out, "generator");
  auto d = pipeline::load_data(c);
  auto vocab = build_vocab(d.train, c.vocab_max_size, c.vocab_min_count);
  generation::TrainLog log;
  auto m = pipeline::train_generator_stage(c, d, vocab, &log);
  generation::save_generator(m, vocab, out);
  if (!d.valid.empty()) {
    spdlog::info("validation perplexity {:.4f}", generation::perplexity(m, pipeline::encode_corpus(d.valid, vocab, c.max_len)));
  }
  return 0;
}

std::vector<ranking::TrainingTriple> pool_triples(const PipelineConfig& c, const Corpus& corpus, bool exclude_self) {
  auto a = load_artifacts(c, true, false);
  return pipeline::label_pools(pipeline::build_pools(corpus, a, c, exclude_self), c.supervision());
}

int cmd_label(const PipelineConfig& c, const std::string& split, const std::string& out,
              const std::string& candidates_out) {
  if (out.empty()) throw Error("label: --out is required");
  auto d = pipeline::load_data(c);
  const Corpus& corpus = split == "valid" ? d.valid : split == "test" ? d.test : d.train;
  auto a = load_artifacts(c, true, false);
  auto pools = pipeline::build_pools(corpus, a, c, split == "train");
  auto triples = pipeline::label_pools(pools, c.supervision());
  io::save_triples(out, triples);
  if (!candidates_out.empty()) {
    std::vector<ranking::CandidateSet> sets;
    for (const auto& p : pools) sets.push_back(p.set);
    io::save_candidates(candidates_out, sets);
  }
  spdlog::info("{} contexts -> {} triples ({}, k'={})", corpus.size(), triples.size(), ranking::to_string(c.signal),
               c.kprime);
  return 0;
}

int cmd_train_ranker(const PipelineConfig& c, const std::string& triples_path, const std::string& valid_path,
                     std::string out) {
  out = require_path(out.empty() ? c.paths.ranker : out, "ranker");
  auto vocab = generation::load_generator(require_path(c.paths.generator, "generator")).vocab;
  std::vector<ranking::TrainingTriple> train, valid;
  if (!triples_path.empty()) {
    train = io::load_triples(triples_path);
    if (!valid_path.empty()) valid = io::load_triples(valid_path);
  } else {
    auto d = pipeline::load_data(c);
    train = pool_triples(c, d.train, true);
    valid = pool_triples(c, d.valid, false);
  }
  auto m = pipeline::train_ranker_stage(c, vocab, train, valid);
  ranking::save_ranker(m, vocab, out);
  return 0;
}

int cmd_generate(const PipelineConfig& c, const std::string& text, const std::string& input, std::size_t beam) {
  auto g = generation::load_generator(require_path(c.paths.generator, "generator"));
  std::vector<ConversationExample> exs;
  if (!text.empty()) exs.push_back({truncate(tokenize(text), c.max_len), {}, {}});
  if (!input.empty()) exs = read_contexts(input, c.max_len);
  if (exs.empty()) throw Error("generate: pass --text or --input");
  for (const auto& ex : exs) {
    std::vector<IdSeq> facts;
    for (const auto& f : ex.facts) facts.push_back(encode(f, g.vocab, c.max_len));
    auto ranked = generation::generate(g.model, encode(ex.context, g.vocab, c.max_len), facts,
                                       beam ? beam : c.generator.beam_size, c.max_len);
    json row = {{"context", join(ex.context)}};
    if (!ranked.empty()) {
      row["generated"] = join(decode(ranked[0].tokens, g.vocab));
      row["score"] = ranked[0].score;
    } else {
      row["generated"] = "";
    }
    std::cout << row.dump() << '\n';
  }
  return 0;
}

int cmd_retrieve(const PipelineConfig& c, const std::string& text, const std::string& input, std::size_t k) {
  auto idx = retrieval::RepositoryIndex::load(require_path(c.paths.index, "index"));
  std::vector<ConversationExample> exs;
  if (!text.empty()) exs.push_back({tokenize(text), {}, {}});
  if (!input.empty()) exs = read_contexts(input, c.max_len);
  if (exs.empty()) throw Error("retrieve: pass --text or --input");
  for (const auto& ex : exs) {
    json hits = json::array();
    for (const auto& h : retrieval::retrieve(ex.context, idx, k ? k : c.k, c.retrieve_options())) {
      hits.push_back({{"rank", h.rank}, {"doc", h.doc}, {"score", h.score}, {"response", join(h.response)}});
    }
    std::cout << json{{"context", join(ex.context)}, {"hits", hits}}.dump() << '\n';
  }
  return 0;
}

int cmd_rerank(const PipelineConfig& c, const std::string& candidates) {
  if (candidates.empty()) throw Error("rerank: --candidates is required");
  auto r = ranking::load_ranker(require_path(c.paths.ranker, "ranker"));
  for (const auto& set : io::load_candidates(candidates)) {
    auto res = ranking::rerank(r.model, r.vocab, set);
    const auto& best = set.candidates[res.chosen];
    json ranked = json::array();
    for (const auto& rc : res.ranked) ranked.push_back({{"text", join(set.candidates[rc.index].tokens)}, {"score", rc.score}});
    std::cout << json{{"context", join(set.context)},
                      {"chosen", join(best.tokens)},
                      {"provenance", metrics::to_string(best.provenance)},
                      {"rank", best.origin_rank},
                      {"ranked", ranked}}
                     .dump()
              << '\n';
  }
  return 0;
}

int cmd_evaluate(const std::string& hyp, const std::string& ref, const std::string& out) {
  if (hyp.empty() || ref.empty()) throw Error("evaluate: --hyp and --ref are required");
  std::vector<TokenSeq> outputs, refs;
  std::vector<metrics::SelectionRecord> log;
  bool has_provenance = true;
  io::for_each_jsonl(hyp, [&](const json& j, std::size_t) {
    outputs.push_back(tokenize(io::response_field(j)));
    if (j.contains("provenance")) {
      log.push_back({metrics::provenance_from_string(j["provenance"].get<std::string>()), j.value("rank", std::size_t{1})});
    } else {
      has_provenance = false;
    }
  });
  io::for_each_jsonl(ref, [&](const json& j, std::size_t) { refs.push_back(tokenize(io::response_field(j))); });
  auto report = metrics::evaluate_run(outputs, refs, has_provenance ? log : std::vector<metrics::SelectionRecord>{});
  emit(metrics::to_json(report), out);
  return 0;
}

int cmd_run(PipelineConfig c, bool scratch, const std::string& out) {
  if (scratch) c.train_from_scratch = true;
  auto m = pipeline::run_pipeline(c);
  const auto& r = m.report;
  spdlog::info("BLEU {:.4f}  ROUGE-L {:.4f}  Dist-1 {:.4f}  Dist-2 {:.4f}  generated {:.2f}%  retrieved {:.2f}%", r.bleu,
               r.rouge_l, r.distinct1, r.distinct2, r.selection.pct_generated(), r.selection.pct_retrieved());
  emit(pipeline::to_json(m), out);
  return 0;
}

int cmd_ablate(PipelineConfig c, const std::string& axis, bool scratch, const std::string& out) {
  if (scratch) c.train_from_scratch = true;
  auto t = pipeline::run_ablation(c, pipeline::parse_axis(axis));
  std::cerr << pipeline::format_table(t);
  emit(pipeline::to_json(t), out);
  for (const auto& r : t.rows)
    if (!r.report) return 1;
  return 0;
}

int cmd_chat(const PipelineConfig& c) {
  auto a = load_artifacts(c, true, true);
  return pipeline::chat(a, c, std::cin, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid retrieval-generation conversation pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "INI configuration file (default: built-in desk profile)");
  app.add_option("--seed", g.seed, "Override run.seed");
  app.add_flag("--verbose", g.verbose, "Debug logging");

  std::string out, text, input, candidates, triples, valid_triples, hyp, ref, axis = "kprime", split = "train",
                                                                           cand_out, dir = "data";
  std::size_t k = 0, beam = 0;
  bool scratch = false;

  auto* synth = app.add_subcommand("synth", "Write the synthetic corpus splits as JSONL");
  synth->add_option("--dir", dir, "Output directory");
  auto* build_index = app.add_subcommand("build-index", "Index the training corpus for BM25 retrieval");
  build_index->add_option("--out", out, "Index file (default: paths.index)");
  auto* train_gen = app.add_subcommand("train-generator", "Train the facts-grounded Seq2Seq generator");
  train_gen->add_option("--out", out, "Checkpoint (default: paths.generator)");
  auto* train_rank = app.add_subcommand("train-ranker", "Train the CNN ranker on distant-supervision triples");
  train_rank->add_option("--triples", triples, "Training triples JSONL (default: label the training pools)");
  train_rank->add_option("--valid-triples", valid_triples, "Validation triples JSONL");
  train_rank->add_option("--out", out, "Checkpoint (default: paths.ranker)");
  auto* generate = app.add_subcommand("generate", "Generate a response with beam search");
  generate->add_option("--text", text, "A single context");
  generate->add_option("--input", input, "JSONL with context (and facts) per line");
  generate->add_option("--beam", beam, "Beam size (default: generator.beam_size)");
  auto* retrieve = app.add_subcommand("retrieve", "Top-K BM25 responses for a context");
  retrieve->add_option("--text", text, "A single context");
  retrieve->add_option("--input", input, "JSONL with a context per line");
  retrieve->add_option("-k", k, "Number of responses (default: retrieval.k)");
  auto* label = app.add_subcommand("label", "Build candidate pools and distant-supervision triples");
  label->add_option("--split", split, "train|valid|test")->check(CLI::IsMember({"train", "valid", "test"}));
  label->add_option("--out", out, "Triples JSONL")->required();
  label->add_option("--candidates-out", cand_out, "Also write the candidate pools");
  auto* rerank = app.add_subcommand("rerank", "Choose a response from each candidate pool");
  rerank->add_option("--candidates", candidates, "Candidate pools JSONL")->required();
  auto* evaluate = app.add_subcommand("evaluate", "Score responses against references");
  evaluate->add_option("--hyp", hyp, "Hypotheses JSONL (response/chosen/generated/text)")->required();
  evaluate->add_option("--ref", ref, "References JSONL (response field)")->required();
  evaluate->add_option("--out", out, "Report JSON (default: stdout)");
  auto* run = app.add_subcommand("run", "Full pipeline over the test split");
  run->add_flag("--train-from-scratch", scratch, "Build missing artifacts");
  run->add_option("--out", out, "Run manifest JSON (default: stdout)");
  auto* ablate = app.add_subcommand("ablate", "Retrain and evaluate the ranker per setting");
  ablate->add_option("--axis", axis, "kprime|signal")->check(CLI::IsMember({"kprime", "signal"}));
  ablate->add_flag("--train-from-scratch", scratch, "Build missing artifacts");
  ablate->add_option("--out", out, "Table JSON (default: stdout)");
  auto* chat = app.add_subcommand("chat", "Interactive session; :quit exits");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("hncm"));
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    auto c = load(g);
    if (*synth) return cmd_synth(c, dir);
    if (*build_index) return cmd_build_index(c, out);
    if (*train_gen) return cmd_train_generator(c, out);
    if (*train_rank) return cmd_train_ranker(c, triples, valid_triples, out);
    if (*generate) return cmd_generate(c, text, input, beam);
    if (*retrieve) return cmd_retrieve(c, text, input, k);
    if (*label) return cmd_label(c, split, out, cand_out);
    if (*rerank) return cmd_rerank(c, candidates);
    if (*evaluate) return cmd_evaluate(hyp, ref, out);
    if (*run) return cmd_run(c, scratch, out);
    if (*ablate) return cmd_ablate(c, axis, scratch, out);
    if (*chat) return cmd_chat(c);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
