#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hncm/error.hpp"

namespace hncm {

using TokenSeq = std::vector<std::string>;
using IdSeq = std::vector<std::int32_t>;

inline constexpr std::int32_t kPad = 0;
inline constexpr std::int32_t kUnk = 1;
inline constexpr std::int32_t kBos = 2;
inline constexpr std::int32_t kEos = 3;
inline constexpr std::int32_t kNumReserved = 4;
inline constexpr std::size_t kDefaultMaxLen = 30;

/// Lowercases ASCII, emits every ASCII punctuation character as its own token
/// and splits on whitespace. Bytes >= 0x80 are passed through untouched so
/// UTF-8 sequences survive intact.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  };
  for (char ch : text) {
    auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      out.emplace_back(1, ch);
    } else if (u < 0x80) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

inline std::string join(const TokenSeq& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Vocabulary {
 public:
  Vocabulary() : id_to_token_{"<pad>", "<unk>", "<bos>", "<eos>"} { reindex(); }

  /// Token list in id order, reserved tokens included.
  explicit Vocabulary(std::vector<std::string> tokens) : id_to_token_(std::move(tokens)) {
    if (id_to_token_.size() < kNumReserved || id_to_token_[kPad] != "<pad>" ||
        id_to_token_[kUnk] != "<unk>" || id_to_token_[kBos] != "<bos>" ||
        id_to_token_[kEos] != "<eos>") {
      throw Error("vocabulary must start with <pad> <unk> <bos> <eos>");
    }
    reindex();
    if (token_to_id_.size() != id_to_token_.size()) throw Error("vocabulary has duplicate tokens");
  }

  std::size_t size() const { return id_to_token_.size(); }

  std::int32_t id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

  const std::string& token(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
      throw Error("token id out of range: " + std::to_string(id));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// FNV-1a over the newline-joined token list; stamped into checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& t : id_to_token_) h = fnv1a(t + '\n', h);
    return h;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open vocabulary file for writing: " + path);
    for (const auto& t : id_to_token_) out << t << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return Vocabulary(std::move(tokens));
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  void reindex() {
    token_to_id_.clear();
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
      token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i));
    }
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

struct ConversationExample {
  TokenSeq context;
  TokenSeq response;
  std::vector<TokenSeq> facts;
};

enum class Split { kTrain, kValid, kTest };

struct Corpus {
  std::vector<ConversationExample> examples;
  Split split = Split::kTrain;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

inline TokenSeq truncate(TokenSeq seq, std::size_t max_len) {
  if (seq.size() > max_len) seq.resize(max_len);
  return seq;
}

/// Frequency-ranked vocabulary, lexicographic tie-break, reserved ids first.
inline Vocabulary build_vocab(const std::vector<TokenSeq>& sequences, std::size_t max_size,
                              std::size_t min_count) {
  if (sequences.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : sequences)
    for (const auto& t : seq) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{"<pad>", "<unk>", "<bos>", "<eos>"};
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() - kNumReserved >= max_size) break;
    if (n < min_count) break;
    if (tok == "<pad>" || tok == "<unk>" || tok == "<bos>" || tok == "<eos>") continue;
    tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

inline Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size, std::size_t min_count) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  std::vector<TokenSeq> seqs;
  for (const auto& ex : corpus.examples) {
    seqs.push_back(ex.context);
    seqs.push_back(ex.response);
    for (const auto& f : ex.facts) seqs.push_back(f);
  }
  return build_vocab(seqs, max_size, min_count);
}

/// Maps tokens to ids (OOV -> UNK). With append_eos the result, EOS included,
/// never exceeds max_len.
inline IdSeq encode(const TokenSeq& tokens, const Vocabulary& vocab,
                    std::size_t max_len = kDefaultMaxLen, bool append_eos = false) {
  std::size_t budget = append_eos ? (max_len > 0 ? max_len - 1 : 0) : max_len;
  IdSeq ids;
  ids.reserve(std::min(tokens.size(), budget) + 1);
  for (std::size_t i = 0; i < tokens.size() && i < budget; ++i) ids.push_back(vocab.id(tokens[i]));
  if (append_eos) ids.push_back(kEos);
  return ids;
}

/// Inverse of encode; stops at EOS and drops PAD/BOS.
inline TokenSeq decode(const IdSeq& ids, const Vocabulary& vocab) {
  TokenSeq out;
  for (auto id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

inline ConversationExample parse_example(const nlohmann::json& j, std::size_t max_len,
                                         const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected a JSON object");
  for (const char* field : {"context", "response", "facts"}) {
    if (!j.contains(field)) throw Error(where + ": missing field \"" + field + "\"");
  }
  if (!j["context"].is_string() || !j["response"].is_string() || !j["facts"].is_array()) {
    throw Error(where + ": wrong field types");
  }
  ConversationExample ex;
  ex.context = truncate(tokenize(j["context"].get<std::string>()), max_len);
  ex.response = truncate(tokenize(j["response"].get<std::string>()), max_len);
  if (ex.context.empty()) throw Error(where + ": empty context");
  if (ex.response.empty()) throw Error(where + ": empty response");
  for (const auto& f : j["facts"]) {
    if (!f.is_string()) throw Error(where + ": facts must be strings");
    auto toks = truncate(tokenize(f.get<std::string>()), max_len);
    if (!toks.empty()) ex.facts.push_back(std::move(toks));
  }
  return ex;
}

/// Reads a JSON-lines corpus; blank lines are skipped.
inline Corpus load_corpus(const std::string& path, Split split = Split::kTrain,
                          std::size_t max_len = kDefaultMaxLen) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.split = split;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(where + ": malformed JSON (line " + std::to_string(lineno) + ")");
    }
    corpus.examples.push_back(parse_example(j, max_len, where));
  }
  return corpus;
}

inline nlohmann::json to_json(const ConversationExample& ex) {
  nlohmann::json facts = nlohmann::json::array();
  for (const auto& f : ex.facts) facts.push_back(join(f));
  return {{"context", join(ex.context)}, {"response", join(ex.response)}, {"facts", facts}};
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open corpus file for writing: " + path);
  for (const auto& ex : corpus.examples) out << to_json(ex).dump() << '\n';
}

}  // namespace hncm
