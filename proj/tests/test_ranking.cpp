#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "hncm/nn/grad_check.hpp"
#include "hncm/ranking.hpp"
#include "hncm/synthetic.hpp"

using namespace hncm;
using namespace hncm::ranking;

namespace {

RankerConfig small_cfg(std::size_t vocab = 12) {
  RankerConfig c;
  c.vocab_size = vocab;
  c.embedding_size = 3;
  c.max_len = 6;
  c.conv_h = c.conv_w = 2;
  c.pool_h = c.pool_w = 2;
  c.kernels = 2;
  c.mlp_hidden = 4;
  c.dropout = 0.0;
  return c;
}

RankerModel seeded(RankerConfig cfg, std::uint64_t seed = 3, double scale = 0.5) {
  RankerModel m(cfg);
  nn::Rng rng(seed);
  nn::init_all(m.params(), rng, scale);
  return m;
}

/// One 1x1-channel kernel over a len x len input, pooled to a single feature.
RankerModel probe(std::size_t len, std::size_t conv, std::size_t pool) {
  RankerConfig c;
  c.vocab_size = 6;
  c.embedding_size = 1;
  c.max_len = len;
  c.conv_h = c.conv_w = conv;
  c.pool_h = c.pool_w = pool;
  c.kernels = 1;
  c.mlp_hidden = 1;
  c.dropout = 0.0;
  return RankerModel(c);
}

Matrix counting(Eigen::Index n) {
  Matrix M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = static_cast<double>(n * i + j + 1);
  return M;
}

Vocabulary vocab_of_size(std::size_t n) {
  std::vector<std::string> toks = {"<pad>", "<unk>", "<bos>", "<eos>"};
  for (std::size_t i = toks.size(); i < n; ++i) toks.push_back("w" + std::to_string(i));
  return Vocabulary(toks);
}

Candidate cand(const char* text, Provenance p = Provenance::kRetrieved, std::size_t rank = 1) {
  return {tokenize(text), p, rank, 0.0};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Interaction, HandComputedExample) {
  Matrix emb = Matrix::Zero(2, 7);
  emb.col(4) << 1, 0;
  emb.col(5) << 0, 1;
  emb.col(6) << 1, 1;
  Matrix M = interaction_matrix(emb, {4, 6}, {6, 5}, 3);
  Matrix want(3, 3);
  want << 1, 0, 0,
          2, 1, 0,
          0, 0, 0;
  EXPECT_EQ(M, want);
}

TEST(Interaction, PadPositionsAreZeroEvenWithNonZeroPadEmbedding) {
  Matrix emb = Matrix::Ones(2, 7);
  Matrix M = interaction_matrix(emb, {4, kPad, 5}, {6}, 4);
  EXPECT_EQ(M(0, 0), 2.0);
  EXPECT_EQ(M.row(1).norm(), 0.0);
  EXPECT_EQ(M(2, 0), 2.0);
  EXPECT_EQ(M.rightCols(3).norm(), 0.0);
  EXPECT_EQ(M.row(3).norm(), 0.0);
}

TEST(Interaction, SwappingArgumentsTransposes) {
  auto m = seeded(small_cfg());
  IdSeq a = {4, 5, 6, 7}, b = {8, 9, 4};
  Matrix ab = interaction_matrix(m.embedding().value, a, b, 6);
  Matrix ba = interaction_matrix(m.embedding().value, b, a, 6);
  EXPECT_TRUE(ab.isApprox(ba.transpose(), 1e-15));
  Tape t(false);
  EXPECT_TRUE(t.value(graph::interaction(t, m, a, b)).isApprox(ab, 1e-15));
}

TEST(Interaction, LongInputsAreTruncatedAndEmptyInputsRejected) {
  Matrix emb = Matrix::Ones(1, 6);
  Matrix M = interaction_matrix(emb, IdSeq(10, 4), IdSeq(10, 5), 3);
  EXPECT_EQ(M, Matrix::Ones(3, 3));
  EXPECT_THROW(interaction_matrix(emb, {}, {4}, 3), Error);
  EXPECT_THROW(interaction_matrix(emb, {4}, {}, 3), Error);
  EXPECT_THROW(interaction_matrix(emb, {4}, {6}, 3), Error);
}

TEST(Cnn, RowMajorWindowSums) {
  auto m = probe(4, 2, 1);
  m.conv_weight(0).value.setOnes();
  Vector f = cnn_forward(m, counting(4));
  ASSERT_EQ(f.size(), 9);
  std::vector<double> want = {14, 18, 22, 30, 34, 38, 46, 50, 54};
  for (Eigen::Index i = 0; i < 9; ++i) EXPECT_EQ(f(i), want[static_cast<std::size_t>(i)]);
}

TEST(Cnn, PoolTakesWindowMaximumAfterRelu) {
  auto m = probe(4, 2, 3);
  m.conv_weight(0).value.setOnes();
  Vector f = cnn_forward(m, counting(4));
  ASSERT_EQ(f.size(), 1);
  EXPECT_EQ(f(0), 54.0);
  m.conv_weight(0).value *= -1.0;
  EXPECT_EQ(cnn_forward(m, counting(4))(0), 0.0);
  m.conv_bias(0).value(0, 0) = 200.0;
  EXPECT_EQ(cnn_forward(m, counting(4))(0), 200.0 - 14.0);
}

TEST(Cnn, DominatedValuesDoNotMoveThePool) {
  auto m = probe(4, 2, 3);
  m.conv_weight(0).value(0, 0) = 1.0;  // picks the top-left entry of each window
  Matrix M = counting(4);
  double base = cnn_forward(m, M)(0);
  EXPECT_EQ(base, M(2, 2));
  M(0, 0) = 5.0;
  M(1, 2) = -3.0;
  M(3, 3) = 1000.0;  // never read by the kernel
  EXPECT_EQ(cnn_forward(m, M)(0), base);
}

TEST(Cnn, WrongInputShapeIsError) {
  auto m = probe(4, 2, 1);
  EXPECT_THROW(cnn_forward(m, Matrix::Zero(3, 4)), Error);
}

TEST(RankerModel, TooSmallConfigsAreRejected) {
  auto c = small_cfg();
  c.conv_h = 7;
  EXPECT_THROW(RankerModel{c}, Error);
  c = small_cfg();
  c.pool_w = 6;
  EXPECT_THROW(RankerModel{c}, Error);
  c = small_cfg();
  c.stages = 3;
  EXPECT_THROW(RankerModel{c}, Error);
  c = small_cfg(4);
  EXPECT_THROW(RankerModel{c}, Error);
  c = small_cfg();
  c.stages = 0;
  EXPECT_THROW(RankerModel{c}, Error);
}

TEST(RankerModel, FullShapeFeatureCount) {
  RankerConfig c;
  c.vocab_size = 20;
  RankerModel m(c);
  // 30 -> conv 25 -> pool 4; 4 * 4 * 64
  EXPECT_EQ(m.feature_size(), 1024);
  EXPECT_EQ(m.conv_weight(0).value.rows(), 36);
  EXPECT_EQ(m.conv_weight(0).value.cols(), 64);
  EXPECT_EQ(m.hidden_weight().value.rows(), 128);
}

TEST(Score, ZeroMlpGivesOutputBias) {
  auto m = seeded(small_cfg());
  m.hidden_weight().value.setZero();
  m.hidden_bias().value.setZero();
  m.out_bias().value(0, 0) = 0.7;
  EXPECT_DOUBLE_EQ(score(m, {4, 5}, {6}), 0.7);
  EXPECT_DOUBLE_EQ(score(m, {9}, {10, 11}), 0.7);
}

TEST(Score, MatchesValueLevelComposition) {
  auto m = seeded(small_cfg());
  IdSeq u = {4, 5, 6}, y = {7, 5};
  Vector f = cnn_forward(m, interaction_matrix(m.embedding().value, u, y, 6));
  Vector h = (m.hidden_weight().value * f + m.hidden_bias().value).cwiseMax(0.0);
  double want = (m.out_weight().value * h)(0, 0) + m.out_bias().value(0, 0);
  EXPECT_NEAR(score(m, u, y), want, 1e-12);
}

TEST(HingeLoss, Examples) {
  EXPECT_NEAR(hinge_loss({{0.2, 0.5}}, 1.0, 0.0, 0.0), 1.3, 1e-15);
  EXPECT_EQ(hinge_loss({{2.0, 0.0}}, 1.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(hinge_loss({}, 1.0, 0.1, 4.0), 0.4, 1e-15);
  EXPECT_NEAR(hinge_loss({{0.2, 0.5}, {2.0, 0.0}, {0.0, 0.0}}, 1.0, 0.0, 0.0), 2.3, 1e-15);
}

TEST(HingeLoss, MonotoneInScores) {
  double prev = -1.0;
  for (double fn = -3.0; fn <= 3.0; fn += 0.25) {
    double l = hinge_loss({{0.0, fn}}, 1.0, 0.0, 0.0);
    EXPECT_GE(l, prev);
    EXPECT_GE(l, 0.0);
    prev = l;
  }
  prev = 1e9;
  for (double fp = -3.0; fp <= 3.0; fp += 0.25) {
    double l = hinge_loss({{fp, 0.0}}, 1.0, 0.0, 0.0);
    EXPECT_LE(l, prev);
    prev = l;
  }
}

TEST(HingeLoss, GraphMatchesValueLevel) {
  auto m = seeded(small_cfg());
  std::vector<EncodedTriple> tr = {{{4, 5}, {5, 6}, {9}}, {{7, 8, 9}, {8}, {10, 11}}, {{11}, {11, 4}, {6, 6}}};
  std::vector<std::pair<double, double>> pairs;
  for (const auto& x : tr) pairs.push_back({score(m, x.context, x.positive), score(m, x.context, x.negative)});
  std::vector<const EncodedTriple*> batch;
  for (const auto& x : tr) batch.push_back(&x);
  Tape t(false);
  double got = t.scalar(batch_hinge(t, m, batch, 1.0, 0.01));
  EXPECT_NEAR(got, hinge_loss(pairs, 1.0, 0.01, m.params().squared_norm()), 1e-12);
}

TEST(HingeLoss, GradientsMatchFiniteDifferences) {
  auto m = seeded(small_cfg(), 17, 0.7);
  std::vector<EncodedTriple> tr = {{{4, 5, 6}, {5, 6}, {9}}, {{7, 8, 9}, {8, 7}, {10, 11}}};
  std::vector<const EncodedTriple*> batch = {&tr[0], &tr[1]};
  // keep both pairs strictly inside the active region of the hinge
  double margin = 10.0;
  for (const auto& x : tr) {
    ASSERT_GT(margin - score(m, x.context, x.positive) + score(m, x.context, x.negative), 0.1);
  }
  nn::GradCheckOptions opt;
  opt.step = 1e-5;
  auto res = nn::grad_check([&](Tape& t) { return batch_hinge(t, m, batch, margin, 0.01); }, m.params(), opt);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst_param;
}

TEST(DistantLabels, TopKWithTies) {
  std::vector<Candidate> c = {cand("a"), cand("b"), cand("c"), cand("d")};
  auto l = split_top_k(c, {0.9, 0.5, 0.5, 0.1}, 3);
  EXPECT_EQ(l.positives, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(l.negatives, (std::vector<std::size_t>{3}));
}

TEST(DistantLabels, TiesPreferGeneratedThenOriginRank) {
  std::vector<Candidate> c = {cand("a", Provenance::kRetrieved, 2), cand("b", Provenance::kRetrieved, 1),
                              cand("c", Provenance::kGenerated, 1)};
  auto l = split_top_k(c, {0.5, 0.5, 0.5}, 1);
  EXPECT_EQ(l.positives, (std::vector<std::size_t>{2}));
  EXPECT_EQ(l.negatives, (std::vector<std::size_t>{1, 0}));
}

TEST(DistantLabels, PoolNotLargerThanKPrimeIsError) {
  CandidateSet s{tokenize("q"), {cand("a"), cand("b")}, std::nullopt};
  SupervisionConfig sup;
  sup.kprime = 2;
  EXPECT_THROW(make_distant_labels(s, tokenize("a"), sup), Error);
  sup.kprime = 0;
  EXPECT_THROW(make_distant_labels(s, tokenize("a"), sup), Error);
}

TEST(DistantLabels, GroundTruthCandidateIsAlwaysPositive) {
  CandidateSet s{tokenize("q"),
                 {cand("x y z"), cand("good food here", Provenance::kRetrieved, 2), cand("p q r s"),
                  cand("good x", Provenance::kGenerated)},
                 std::nullopt};
  for (auto sig : {Signal::kBleu1, Signal::kBleu2, Signal::kRougeL, Signal::kSentBleu}) {
    SupervisionConfig sup;
    sup.signal = sig;
    sup.kprime = 1;
    auto l = make_distant_labels(s, tokenize("good food here"), sup);
    EXPECT_EQ(l.positives, (std::vector<std::size_t>{1})) << to_string(sig);
    EXPECT_EQ(l.signal.size(), 4u);
    EXPECT_NEAR(l.signal[1], 1.0, 1e-12);
  }
}

TEST(DistantLabels, PermutingThePoolKeepsThePositiveSet) {
  std::vector<Candidate> base = {cand("a b c"), cand("a b"), cand("x"), cand("a x c d"), cand("b c a"), cand("q r")};
  auto gt = tokenize("a b c d");
  auto positives_of = [&](const std::vector<Candidate>& pool) {
    SupervisionConfig sup;
    sup.signal = Signal::kRougeL;
    sup.kprime = 3;
    auto l = make_distant_labels({tokenize("ctx"), pool, std::nullopt}, gt, sup);
    std::vector<TokenSeq> out;
    for (auto i : l.positives) out.push_back(pool[i].tokens);
    std::sort(out.begin(), out.end());
    return out;
  };
  auto want = positives_of(base);
  std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5};
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Candidate> pool;
    for (auto i : idx) pool.push_back(base[i]);
    EXPECT_EQ(positives_of(pool), want);
  }
}

TEST(SignalScore, MatchesMetricsAndGuardsEmpty) {
  auto c = tokenize("the cat sat"), r = tokenize("the cat sat down");
  EXPECT_DOUBLE_EQ(signal_score(Signal::kBleu1, c, r), metrics::corpus_bleu({c}, {r}, 1));
  EXPECT_DOUBLE_EQ(signal_score(Signal::kRougeL, c, r), metrics::rouge_l(c, r));
  EXPECT_EQ(signal_score(Signal::kSentBleu, {}, r), 0.0);
  EXPECT_EQ(parse_signal("bleu2"), Signal::kBleu2);
  EXPECT_THROW(parse_signal("meteor"), Error);
}

TEST(TrainingTriples, CountsFollowKPrime) {
  CandidateSet s{tokenize("q"), {}, std::nullopt};
  for (int i = 0; i < 10; ++i) s.candidates.push_back({{"c" + std::to_string(i)}, Provenance::kRetrieved, 1, 0.0});
  auto gt = tokenize("truth");
  std::vector<double> sig(10);
  for (int i = 0; i < 10; ++i) sig[static_cast<std::size_t>(i)] = 1.0 - 0.1 * i;
  auto one = split_top_k(s.candidates, sig, 1);
  EXPECT_EQ(make_training_triples(s, one, 1, gt).size(), 9u);
  auto three = split_top_k(s.candidates, sig, 3);
  auto tr = make_training_triples(s, three, 3, gt);
  ASSERT_EQ(tr.size(), 21u);
  EXPECT_EQ(tr[0].positive, gt);
  EXPECT_EQ(tr[7].positive, TokenSeq{"c0"});
  EXPECT_EQ(tr[14].positive, TokenSeq{"c1"});
  for (const auto& t : tr) {
    EXPECT_EQ(t.context, s.context);
    EXPECT_NE(t.negative, TokenSeq{"c2"});
  }
}

TEST(TrainingTriples, NoNegativesIsSkipped) {
  CandidateSet s{tokenize("q"), {cand("a")}, std::nullopt};
  DistantLabels l{{1.0}, {0}, {}};
  EXPECT_TRUE(make_training_triples(s, l, 1, tokenize("a")).empty());
}

TEST(Rerank, SingleCandidateIsChosen) {
  auto m = seeded(small_cfg());
  auto v = vocab_of_size(12);
  CandidateSet s{{"w4", "w5"}, {{{"w6"}, Provenance::kRetrieved, 1, 0.0}}, std::nullopt};
  auto r = rerank(m, v, s);
  EXPECT_EQ(r.chosen, 0u);
  ASSERT_EQ(r.ranked.size(), 1u);
  EXPECT_THROW(rerank(m, v, CandidateSet{{"w4"}, {}, std::nullopt}), Error);
}

TEST(Rerank, TiesChooseGenerated) {
  RankerModel m(small_cfg());  // all-zero: every score ties
  auto v = vocab_of_size(12);
  CandidateSet s{{"w4"},
                 {{{"w5"}, Provenance::kRetrieved, 1, 3.0},
                  {{"w6"}, Provenance::kRetrieved, 2, 2.0},
                  {{"w7"}, Provenance::kGenerated, 1, 0.0}},
                 std::nullopt};
  auto r = rerank(m, v, s);
  EXPECT_EQ(r.chosen, 2u);
  EXPECT_EQ(r.ranked[1].index, 0u);
  EXPECT_EQ(r.ranked[2].index, 1u);
  EXPECT_EQ(r.selection(s).provenance, Provenance::kGenerated);
}

TEST(Rerank, OrderMatchesIndividualScores) {
  auto m = seeded(small_cfg(), 9, 0.8);
  auto v = vocab_of_size(12);
  CandidateSet s{{"w4", "w5", "w6"}, {}, std::nullopt};
  for (int i = 4; i < 12; ++i) {
    s.candidates.push_back({{"w" + std::to_string(i), "w" + std::to_string(15 - i)}, Provenance::kRetrieved,
                            static_cast<std::size_t>(i), 0.0});
  }
  auto r = rerank(m, v, s);
  ASSERT_EQ(r.ranked.size(), s.candidates.size());
  IdSeq ctx = encode(s.context, v);
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.ranked[i].score, score(m, ctx, encode(s.candidates[r.ranked[i].index].tokens, v)));
    if (i) {
      EXPECT_GE(r.ranked[i - 1].score, r.ranked[i].score);
    }
  }
  EXPECT_EQ(r.chosen, r.ranked[0].index);
}

TEST(Rerank, InvariantUnderPositiveAffineRescaling) {
  CandidateSet s{{"q"}, {}, std::nullopt};
  for (int i = 0; i < 6; ++i) s.candidates.push_back(cand("x", Provenance::kRetrieved, static_cast<std::size_t>(i + 1)));
  std::vector<double> sc = {0.3, -1.2, 0.3, 2.5, 0.0, 2.5};
  auto base = rank_by_scores(s, sc);
  for (auto [a, b] : {std::pair{2.0, 1.0}, std::pair{0.5, -3.0}, std::pair{10.0, 0.0}}) {
    std::vector<double> t;
    for (double x : sc) t.push_back(a * x + b);
    auto r = rank_by_scores(s, t);
    for (std::size_t i = 0; i < sc.size(); ++i) EXPECT_EQ(r.ranked[i].index, base.ranked[i].index);
  }
  EXPECT_EQ(base.chosen, 3u);
  EXPECT_THROW(rank_by_scores(s, {1.0}), Error);
}

TEST(TrainRanker, StrongL2ShrinksParameters) {
  auto data = synthetic::make_ranker_triples({20, 2, 4, 12, 5});
  std::vector<TokenSeq> seqs;
  for (const auto& t : data) seqs.insert(seqs.end(), {t.context, t.positive, t.negative});
  auto vocab = build_vocab(seqs, 100, 1);
  auto enc = encode_triples(data, vocab, 6);
  RankerTrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.max_steps = 40;
  auto plain = seeded(small_cfg(vocab.size()), 5, 0.3);
  auto reg = seeded(small_cfg(vocab.size()), 5, 0.3);
  double start = plain.params().squared_norm();
  train_ranker(plain, enc, {}, cfg);
  cfg.l2 = 1.0;
  train_ranker(reg, enc, {}, cfg);
  EXPECT_LT(reg.params().squared_norm(), plain.params().squared_norm());
  EXPECT_LT(reg.params().squared_norm(), start);
}

TEST(TrainRanker, LearnsSeparableTriples) {
  auto data = synthetic::make_ranker_triples({80, 2, 5, 40, 21});
  std::vector<TokenSeq> seqs;
  for (const auto& t : data) seqs.insert(seqs.end(), {t.context, t.positive, t.negative});
  auto vocab = build_vocab(seqs, 100, 1);
  auto enc = encode_triples(data, vocab, 6);
  std::vector<EncodedTriple> train(enc.begin(), enc.begin() + 120), valid(enc.begin() + 120, enc.end());
  auto rc = small_cfg(vocab.size());
  rc.embedding_size = 16;
  rc.kernels = 4;
  auto m = seeded(rc, 6, 0.3);
  RankerTrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 16;
  cfg.max_steps = 300;
  cfg.steps_between_validation = 25;
  cfg.patience = 100;
  auto log = train_ranker(m, train, valid, cfg);
  EXPECT_GT(log.best_accuracy, 0.9);
  EXPECT_DOUBLE_EQ(pairwise_accuracy(m, valid), log.best_accuracy);
}

TEST(TrainRanker, FixedSeedIsReproducible) {
  auto data = synthetic::make_ranker_triples({10, 2, 4, 12, 5});
  std::vector<TokenSeq> seqs;
  for (const auto& t : data) seqs.insert(seqs.end(), {t.context, t.positive, t.negative});
  auto vocab = build_vocab(seqs, 100, 1);
  auto enc = encode_triples(data, vocab, 6);
  auto cfg_m = small_cfg(vocab.size());
  cfg_m.dropout = 0.5;
  RankerTrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_steps = 10;
  auto a = seeded(cfg_m, 1, 0.3);
  auto b = seeded(cfg_m, 1, 0.3);
  EXPECT_EQ(train_ranker(a, enc, {}, cfg).train_loss, train_ranker(b, enc, {}, cfg).train_loss);
  EXPECT_EQ(a.params().snapshot(), b.params().snapshot());
}

TEST(RankerCheckpoint, SaveLoadSaveIsBitIdentical) {
  auto m = seeded(small_cfg());
  auto v = vocab_of_size(12);
  auto dir = std::filesystem::temp_directory_path();
  auto p1 = (dir / "hncm_rank_a.ckpt").string();
  auto p2 = (dir / "hncm_rank_b.ckpt").string();
  save_ranker(m, v, p1);
  auto back = load_ranker(p1);
  EXPECT_EQ(back.vocab, v);
  EXPECT_EQ(back.model.config().kernels, 2u);
  save_ranker(back.model, back.vocab, p2);
  EXPECT_EQ(slurp(p1), slurp(p2));
  EXPECT_EQ(score(m, {4, 5}, {6, 7}), score(back.model, {4, 5}, {6, 7}));
  EXPECT_THROW(save_ranker(m, vocab_of_size(13), p2), Error);
  for (const auto& p : {p1, p2}) {
    std::filesystem::remove(p);
    std::filesystem::remove(p + ".vocab");
  }
}

TEST(PretrainedEmbeddings, LoadsKnownWords) {
  RankerModel m(small_cfg());
  auto v = vocab_of_size(12);
  auto path = (std::filesystem::temp_directory_path() / "hncm_glove.txt").string();
  {
    std::ofstream out(path);
    out << "w4 1 2 3\nunknown 9 9 9\nw5 4 5 6\n";
  }
  EXPECT_EQ(load_pretrained_embeddings(m.embedding(), v, path), 2u);
  EXPECT_EQ(m.embedding().value.col(4), Vector((Vector(3) << 1, 2, 3).finished()));
  EXPECT_EQ(m.embedding().value.col(5), Vector((Vector(3) << 4, 5, 6).finished()));
  EXPECT_EQ(m.embedding().value.col(6).norm(), 0.0);
  {
    std::ofstream out(path);
    out << "w4 1 2\n";
  }
  EXPECT_THROW(load_pretrained_embeddings(m.embedding(), v, path), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_pretrained_embeddings(m.embedding(), v, path), Error);
}
