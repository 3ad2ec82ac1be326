#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hncm/retrieval.hpp"
#include "oracles.hpp"

using namespace hncm;
using namespace hncm::retrieval;

namespace {

RepositoryIndex index_of(const std::vector<oracle::Doc>& docs) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& d : docs) pairs.emplace_back(join(d.tokens), d.response);
  return build_index(pairs);
}

RepositoryIndex cat_corpus() { return build_index({{"cat sat", "r1"}, {"cat cat sat", "r2"}, {"dog", "r3"}}); }

std::string bytes_of(const RepositoryIndex& idx) {
  std::ostringstream os(std::ios::binary);
  idx.write(os);
  return os.str();
}

}  // namespace

TEST(BuildIndex, SinglePair) {
  auto idx = build_index(std::vector<std::pair<std::string, std::string>>{{"a b", "r"}});
  EXPECT_EQ(idx.num_docs(), 1u);
  EXPECT_DOUBLE_EQ(idx.avg_doc_length(), 2.0);
  ASSERT_NE(idx.find("a"), nullptr);
  EXPECT_EQ(idx.find("a")->size(), 1u);
  EXPECT_EQ(idx.find("b")->size(), 1u);
  EXPECT_EQ(idx.find("r"), nullptr);  // responses are not indexed
}

TEST(BuildIndex, SharedTermPostingsInDocOrder) {
  auto idx = build_index({{"a x", "r1"}, {"y a a", "r2"}});
  const auto* p = idx.find("a");
  ASSERT_NE(p, nullptr);
  ASSERT_EQ(p->size(), 2u);
  EXPECT_EQ((*p)[0], (Posting{0, 1}));
  EXPECT_EQ((*p)[1], (Posting{1, 2}));
}

TEST(BuildIndex, EmptyInputIsError) {
  EXPECT_THROW(build_index(std::vector<std::pair<std::string, std::string>>{}), Error);
}

TEST(BuildIndex, DeterministicRebuild) {
  std::mt19937_64 rng(5);
  auto docs = oracle::random_corpus(rng, 50, 20);
  EXPECT_EQ(bytes_of(index_of(docs)), bytes_of(index_of(docs)));
}

TEST(BuildIndex, StatisticsInvariants) {
  std::mt19937_64 rng(6);
  auto docs = oracle::random_corpus(rng, 80, 30);
  auto idx = index_of(docs);
  double total = 0;
  for (std::uint32_t d = 0; d < idx.num_docs(); ++d) total += idx.doc_length(d);
  EXPECT_NEAR(idx.avg_doc_length(), total / static_cast<double>(idx.num_docs()), 1e-12);
  for (const auto& [term, list] : idx.postings()) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_LT(list[i].doc, idx.num_docs());
      EXPECT_GE(list[i].tf, 1u);
      if (i) {
        EXPECT_LT(list[i - 1].doc, list[i].doc);
      }
    }
  }
}

TEST(Bm25, NoOverlapScoresZero) {
  auto idx = cat_corpus();
  EXPECT_EQ(bm25_score({"dog"}, 0, idx), 0.0);
}

TEST(Bm25, WorkedExample) {
  auto idx = cat_corpus();
  EXPECT_NEAR(bm25_idf(3, 2), std::log(1.6), 1e-15);
  double s2 = bm25_score({"cat"}, 1, idx);
  EXPECT_NEAR(s2, std::log(1.6) * 4.4 / 3.65, 1e-12);
  EXPECT_NEAR(s2, 0.5666, 1e-4);
  auto hits = retrieve({"cat"}, idx, 3);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].doc, 1u);
  EXPECT_EQ(hits[1].doc, 0u);
  EXPECT_EQ(hits[0].response, TokenSeq{"r2"});
  EXPECT_EQ(hits[0].rank, 1u);
  EXPECT_EQ(hits[1].rank, 2u);
}

TEST(Bm25, EqualLengthDocsStillPreferHigherTf) {
  auto idx = build_index({{"cat sat pad", "r1"}, {"cat cat sat", "r2"}, {"dog pad pad", "r3"}});
  std::vector<double> s;
  for (std::uint32_t d = 0; d < 3; ++d) s.push_back(bm25_score({"cat"}, d, idx));
  EXPECT_GT(s[1], s[0]);
  EXPECT_GT(s[0], s[2]);
  EXPECT_EQ(retrieve({"cat"}, idx, 1)[0].doc, 1u);
}

TEST(Bm25, RepeatedQueryTermsCountWithMultiplicity) {
  auto idx = cat_corpus();
  EXPECT_NEAR(bm25_score({"cat", "cat"}, 1, idx), 2.0 * bm25_score({"cat"}, 1, idx), 1e-15);
}

TEST(Bm25, AdditiveOverQueryTerms) {
  auto idx = cat_corpus();
  EXPECT_NEAR(bm25_score({"cat", "sat"}, 0, idx), bm25_score({"cat"}, 0, idx) + bm25_score({"sat"}, 0, idx),
              1e-15);
}

TEST(Bm25, InvalidDocIsError) { EXPECT_THROW(bm25_score({"cat"}, 3, cat_corpus()), Error); }

TEST(Bm25, UntouchedScoresStableWhenDfAndAvgdlFixed) {
  // Swap a document that has no query term for another of equal length that
  // also has none: N, df and avgdl stay fixed, so other scores are unchanged.
  auto a = build_index({{"cat sat", "r1"}, {"cat cat sat", "r2"}, {"dog run", "r3"}});
  auto b = build_index({{"cat sat", "r1"}, {"cat cat sat", "r2"}, {"fish swim", "r3"}});
  for (std::uint32_t d = 0; d < 2; ++d) {
    EXPECT_NEAR(bm25_score({"cat", "sat"}, d, a), bm25_score({"cat", "sat"}, d, b), 1e-12);
  }
}

TEST(Retrieve, SelfMatchRanksFirst) {
  std::mt19937_64 rng(9);
  auto docs = oracle::random_corpus(rng, 100, 40);
  auto idx = index_of(docs);
  for (std::uint32_t d : {0u, 17u, 63u}) {
    auto hits = retrieve(docs[d].tokens, idx, 9);
    ASSERT_FALSE(hits.empty());
    EXPECT_GE(hits[0].score, bm25_score(docs[d].tokens, d, idx));
  }
  auto idx2 = build_index({{"hello there friend", "hi"}, {"good morning", "morning"}, {"hello", "yo"}});
  EXPECT_EQ(retrieve(tokenize("good morning"), idx2, 9)[0].response, TokenSeq{"morning"});
}

TEST(Retrieve, NoSharedTermsGivesEmpty) {
  EXPECT_TRUE(retrieve({"zebra"}, cat_corpus(), 9).empty());
  EXPECT_TRUE(retrieve({}, cat_corpus(), 9).empty());
}

TEST(Retrieve, TopTwoOfFiveScoredDocsMatchesBruteForce) {
  std::vector<oracle::Doc> docs = {{tokenize("a b c"), "r0"}, {tokenize("a a"), "r1"}, {tokenize("b c d e"), "r2"},
                                   {tokenize("c"), "r3"},     {tokenize("a d"), "r4"},  {tokenize("z"), "r5"}};
  auto idx = index_of(docs);
  auto hits = retrieve(tokenize("a c"), idx, 2);
  auto want = oracle::bm25_top_k(docs, tokenize("a c"), 2);
  ASSERT_EQ(hits.size(), want.size());
  for (std::size_t i = 0; i < hits.size(); ++i) EXPECT_EQ(hits[i].doc, want[i].doc);
}

TEST(Retrieve, TiesBreakByDocId) {
  auto idx = build_index({{"x y", "r0"}, {"q q", "r1"}, {"x y", "r2"}, {"y x", "r3"}});
  auto hits = retrieve({"x"}, idx, 9);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].doc, 0u);
  EXPECT_EQ(hits[1].doc, 2u);
  EXPECT_EQ(hits[2].doc, 3u);
}

TEST(Retrieve, DeduplicatesResponsesWithBackfill) {
  auto idx = build_index({{"x", "same"}, {"x x", "same"}, {"x y", "other"}, {"x y z", "third"}});
  auto hits = retrieve({"x"}, idx, 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_NE(hits[0].response, hits[1].response);
  EXPECT_EQ(hits[1].rank, 2u);
  RetrieveOptions keep;
  keep.dedupe_responses = false;
  auto raw = retrieve({"x"}, idx, 2, keep);
  EXPECT_EQ(raw[0].response, raw[1].response);
}

TEST(Retrieve, ExcludeDocDropsIt) {
  auto idx = cat_corpus();
  RetrieveOptions opt;
  opt.exclude_doc = 1;
  auto hits = retrieve({"cat"}, idx, 9, opt);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].doc, 0u);
}

TEST(Retrieve, MatchesBruteForceOnRandomCorpora) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> n_docs(1, 200), vocab(2, 50), qlen(1, 8);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t v = vocab(rng);
    auto docs = oracle::random_corpus(rng, n_docs(rng), v);
    auto idx = index_of(docs);
    for (int q = 0; q < 5; ++q) {
      TokenSeq query;
      std::uniform_int_distribution<std::size_t> w(0, v + 3);
      for (std::size_t j = qlen(rng); j > 0; --j) query.push_back("w" + std::to_string(w(rng)));
      for (std::size_t k : {1u, 5u, 9u}) {
        auto got = retrieve(query, idx, k);
        auto want = oracle::bm25_top_k(docs, query, k);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          ASSERT_EQ(got[i].doc, want[i].doc) << "trial " << trial << " k " << k << " pos " << i;
          EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
          if (i) {
            EXPECT_GE(got[i - 1].score, got[i].score);
          }
        }
      }
    }
  }
}

TEST(IndexFile, RoundTripIsBitIdentical) {
  std::mt19937_64 rng(77);
  auto idx = index_of(oracle::random_corpus(rng, 60, 25));
  auto path = (std::filesystem::temp_directory_path() / "hncm_index_rt.bin").string();
  idx.save(path);
  auto back = RepositoryIndex::load(path);
  EXPECT_TRUE(back == idx);
  EXPECT_EQ(bytes_of(back), bytes_of(idx));
  EXPECT_EQ(back.avg_doc_length(), idx.avg_doc_length());
  std::filesystem::remove(path);
}

TEST(IndexFile, RejectsForeignBytes) {
  std::istringstream junk("HNCMCKPT garbage");
  EXPECT_THROW(RepositoryIndex::read(junk), Error);
}
