#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hncm/ranking.hpp"
#include "hncm/text.hpp"

namespace hncm::io {

using nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line of a JSONL file.
inline void for_each_jsonl(const std::string& path, const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      fn(j, lineno);
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void write_jsonl(const std::string& path, const std::vector<json>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (const auto& r : rows) out << r.dump() << '\n';
}

inline json to_json(const ranking::CandidateSet& s) {
  json cands = json::array();
  for (const auto& c : s.candidates) {
    cands.push_back({{"text", join(c.tokens)},
                     {"provenance", metrics::to_string(c.provenance)},
                     {"rank", c.origin_rank},
                     {"score", c.origin_score}});
  }
  json j = {{"context", join(s.context)}, {"candidates", std::move(cands)}};
  if (s.ground_truth) j["ground_truth"] = join(*s.ground_truth);
  return j;
}

inline ranking::CandidateSet candidate_set_from_json(const json& j) {
  ranking::CandidateSet s;
  s.context = tokenize(j.at("context").get<std::string>());
  for (const auto& c : j.at("candidates")) {
    ranking::Candidate cand;
    cand.tokens = tokenize(c.at("text").get<std::string>());
    cand.provenance = metrics::provenance_from_string(c.value("provenance", std::string("retrieved")));
    cand.origin_rank = c.value("rank", std::size_t{1});
    cand.origin_score = c.value("score", 0.0);
    s.candidates.push_back(std::move(cand));
  }
  if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
    s.ground_truth = tokenize(j["ground_truth"].get<std::string>());
  }
  return s;
}

inline std::vector<ranking::CandidateSet> load_candidates(const std::string& path) {
  std::vector<ranking::CandidateSet> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(candidate_set_from_json(j)); });
  return out;
}

inline void save_candidates(const std::string& path, const std::vector<ranking::CandidateSet>& sets) {
  std::vector<json> rows;
  for (const auto& s : sets) rows.push_back(to_json(s));
  write_jsonl(path, rows);
}

inline json to_json(const ranking::TrainingTriple& t) {
  return {{"context", join(t.context)}, {"positive", join(t.positive)}, {"negative", join(t.negative)}};
}

inline std::vector<ranking::TrainingTriple> load_triples(const std::string& path) {
  std::vector<ranking::TrainingTriple> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    out.push_back({tokenize(j.at("context").get<std::string>()), tokenize(j.at("positive").get<std::string>()),
                   tokenize(j.at("negative").get<std::string>())});
  });
  return out;
}

inline void save_triples(const std::string& path, const std::vector<ranking::TrainingTriple>& triples) {
  std::vector<json> rows;
  for (const auto& t : triples) rows.push_back(to_json(t));
  write_jsonl(path, rows);
}

/// Response text from a hypothesis or reference row: the first of
/// "response", "chosen", "generated" or "text" that is present.
inline std::string response_field(const json& j) {
  for (const char* key : {"response", "chosen", "generated", "text"}) {
    if (j.contains(key)) return j[key].get<std::string>();
  }
  throw Error("row has none of response/chosen/generated/text");
}

}  // namespace hncm::io
