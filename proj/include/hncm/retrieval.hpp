#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hncm/nn/checkpoint.hpp"
#include "hncm/text.hpp"

namespace hncm::retrieval {

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct StoredPair {
  std::string context;
  std::string response;

  friend bool operator==(const StoredPair&, const StoredPair&) = default;
};

/// Okapi BM25 free parameters.
struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Inverted index over the context side of historical context/response pairs.
/// Postings are kept per term in ascending doc-id order; the term dictionary
/// is ordered, so serialization is canonical.
class RepositoryIndex {
 public:
  RepositoryIndex() = default;

  std::size_t num_docs() const { return docs_.size(); }
  double avg_doc_length() const { return avgdl_; }
  std::uint32_t doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }
  const StoredPair& doc(std::uint32_t id) const { return docs_.at(id); }
  const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

  const std::vector<Posting>* find(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
  }

  std::size_t df(const std::string& term) const {
    const auto* p = find(term);
    return p ? p->size() : 0;
  }

  /// Term frequency of `term` in `doc` (0 when absent).
  std::uint32_t tf(const std::string& term, std::uint32_t doc) const {
    const auto* p = find(term);
    if (!p) return 0;
    auto it = std::lower_bound(p->begin(), p->end(), doc,
                               [](const Posting& q, std::uint32_t d) { return q.doc < d; });
    return (it != p->end() && it->doc == doc) ? it->tf : 0;
  }

  void add(const std::string& context, const std::string& response) {
    auto doc = static_cast<std::uint32_t>(docs_.size());
    TokenSeq tokens = tokenize(context);
    std::map<std::string, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, n] : counts) postings_[term].push_back({doc, n});
    doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    docs_.push_back({context, response});
    total_length_ += tokens.size();
    avgdl_ = static_cast<double>(total_length_) / static_cast<double>(docs_.size());
  }

  void write(std::ostream& out) const {
    out.write(kMagic, sizeof kMagic);
    io::write_u32(out, kVersion);
    io::write_u64(out, docs_.size());
    for (auto len : doc_lengths_) io::write_u32(out, len);
    io::write_u32(out, static_cast<std::uint32_t>(postings_.size()));
    for (const auto& [term, list] : postings_) {
      io::write_str(out, term);
      io::write_u32(out, static_cast<std::uint32_t>(list.size()));
      for (const auto& p : list) {
        io::write_u32(out, p.doc);
        io::write_u32(out, p.tf);
      }
    }
    for (const auto& d : docs_) {
      io::write_str(out, d.context);
      io::write_str(out, d.response);
    }
  }

  static RepositoryIndex read(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("not an index file");
    auto version = io::read_u32(in);
    if (version != kVersion) throw Error("unsupported index version " + std::to_string(version));
    RepositoryIndex idx;
    auto n = io::read_u64(in);
    if (n > (1ull << 32)) throw Error("index document count out of range");
    for (std::uint64_t i = 0; i < n; ++i) idx.doc_lengths_.push_back(io::read_u32(in));
    auto n_terms = io::read_u32(in);
    for (std::uint32_t i = 0; i < n_terms; ++i) {
      std::string term = io::read_str(in);
      auto n_post = io::read_u32(in);
      std::vector<Posting> list;
      list.reserve(n_post);
      for (std::uint32_t j = 0; j < n_post; ++j) {
        Posting p;
        p.doc = io::read_u32(in);
        p.tf = io::read_u32(in);
        if (p.doc >= n || p.tf == 0) throw Error("corrupt posting for term " + term);
        list.push_back(p);
      }
      idx.postings_.emplace(std::move(term), std::move(list));
    }
    for (std::uint64_t i = 0; i < n; ++i) {
      StoredPair d;
      d.context = io::read_str(in);
      d.response = io::read_str(in);
      idx.docs_.push_back(std::move(d));
    }
    idx.recompute_avgdl();
    return idx;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open index for writing: " + path);
    write(out);
  }

  static RepositoryIndex load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open index: " + path);
    return read(in);
  }

  friend bool operator==(const RepositoryIndex& a, const RepositoryIndex& b) {
    return a.postings_ == b.postings_ && a.doc_lengths_ == b.doc_lengths_ && a.docs_ == b.docs_;
  }

 private:
  static constexpr char kMagic[8] = {'H', 'N', 'C', 'M', 'I', 'D', 'X', '1'};
  static constexpr std::uint32_t kVersion = 1;

  void recompute_avgdl() {
    if (doc_lengths_.empty()) {
      avgdl_ = 0.0;
      return;
    }
    total_length_ = 0;
    for (auto l : doc_lengths_) total_length_ += l;
    avgdl_ = static_cast<double>(total_length_) / static_cast<double>(doc_lengths_.size());
  }

  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<StoredPair> docs_;
  std::uint64_t total_length_ = 0;
  double avgdl_ = 0.0;
};

inline RepositoryIndex build_index(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw Error("build_index: no context/response pairs");
  RepositoryIndex idx;
  for (const auto& [c, r] : pairs) idx.add(c, r);
  return idx;
}

inline RepositoryIndex build_index(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(corpus.size());
  for (const auto& ex : corpus.examples) pairs.emplace_back(join(ex.context), join(ex.response));
  return build_index(pairs);
}

inline double bm25_idf(std::size_t n_docs, std::size_t df) {
  double n = static_cast<double>(n_docs);
  double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

inline double bm25_term_weight(std::uint32_t tf, std::uint32_t doc_len, double avgdl,
                               const Bm25Params& p) {
  double f = static_cast<double>(tf);
  double norm = avgdl > 0.0 ? static_cast<double>(doc_len) / avgdl : 0.0;
  return f * (p.k1 + 1.0) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

/// BM25 of a single document; each query occurrence contributes once.
inline double bm25_score(const TokenSeq& query, std::uint32_t doc, const RepositoryIndex& index,
                         const Bm25Params& params = {}) {
  if (doc >= index.num_docs()) throw Error("bm25_score: invalid doc id " + std::to_string(doc));
  double score = 0.0;
  for (const auto& term : query) {
    std::uint32_t tf = index.tf(term, doc);
    if (tf == 0) continue;
    score += bm25_idf(index.num_docs(), index.df(term)) *
             bm25_term_weight(tf, index.doc_length(doc), index.avg_doc_length(), params);
  }
  return score;
}

struct RetrievedCandidate {
  TokenSeq response;
  std::uint32_t doc = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct RetrieveOptions {
  Bm25Params bm25;
  /// Drop later hits whose response text repeats an earlier one and backfill
  /// from further down the ranking.
  bool dedupe_responses = true;
  /// Excluded from the results (the query's own pair during training).
  std::optional<std::uint32_t> exclude_doc;
};

/// Top-K responses by BM25 of their stored contexts against `context`.
/// Ordered by score descending, then doc id ascending; only docs with a
/// positive score are returned.
inline std::vector<RetrievedCandidate> retrieve(const TokenSeq& context, const RepositoryIndex& index,
                                                std::size_t k = 9, const RetrieveOptions& opt = {}) {
  std::vector<double> acc(index.num_docs(), 0.0);
  std::vector<char> touched(index.num_docs(), 0);
  for (const auto& term : context) {
    const auto* list = index.find(term);
    if (!list) continue;
    double idf = bm25_idf(index.num_docs(), list->size());
    for (const auto& p : *list) {
      acc[p.doc] += idf * bm25_term_weight(p.tf, index.doc_length(p.doc), index.avg_doc_length(),
                                           opt.bm25);
      touched[p.doc] = 1;
    }
  }
  std::vector<std::uint32_t> hits;
  for (std::uint32_t d = 0; d < acc.size(); ++d) {
    if (touched[d] && acc[d] > 0.0 && (!opt.exclude_doc || *opt.exclude_doc != d)) hits.push_back(d);
  }
  std::sort(hits.begin(), hits.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (acc[a] != acc[b]) return acc[a] > acc[b];
    return a < b;
  });
  std::vector<RetrievedCandidate> out;
  std::unordered_set<std::string> seen;
  for (auto d : hits) {
    if (out.size() >= k) break;
    const std::string& resp = index.doc(d).response;
    if (opt.dedupe_responses && !seen.insert(resp).second) continue;
    out.push_back({tokenize(resp), d, acc[d], out.size() + 1});
  }
  return out;
}

}  // namespace hncm::retrieval
