#include <doctest.h>

#include "karmarank/common.hpp"
#include "karmarank/nmf.hpp"
#include "karmarank/semantics.hpp"
#include "oracles.hpp"

using namespace karmarank;

TEST_CASE("cosine similarity") {
  Eigen::VectorXd v(3), w(3);
  v << 1, 2, 3;
  w << -2, 0.5, 4;
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0));
  CHECK(cosine_similarity(v, w) == doctest::Approx(cosine_similarity(w, v)));
  CHECK(cosine_similarity(3.5 * v, w) == doctest::Approx(cosine_similarity(v, w)));
  bool degenerate = false;
  CHECK(cosine_similarity(v, Eigen::VectorXd::Zero(3), &degenerate) == 0.0);
  CHECK(degenerate);
  CHECK_THROWS_AS(cosine_similarity(v, Eigen::VectorXd::Zero(2)), Error);
}

TEST_CASE("jaccard similarity") {
  CHECK(jaccard_similarity({"a", "b", "c"}, {"b", "c", "d"}) == doctest::Approx(0.5));
  CHECK(jaccard_similarity({}, {"a"}) == 0.0);
  CHECK(jaccard_similarity({}, {}) == 1.0);
}

namespace {

std::vector<std::vector<std::string>> two_cluster_corpus(std::uint64_t seed) {
  const std::vector<std::vector<std::string>> clusters{{"cat", "dog", "pet", "fur", "paw", "vet"},
                                                       {"stock", "bond", "market", "fund", "yield", "trade"}};
  Rng rng(seed);
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 1500; ++i) {
    const auto& c = clusters[i % 2];
    std::vector<std::string> s;
    for (int j = 0; j < 8; ++j) s.push_back(c[rng.index(c.size())]);
    docs.push_back(s);
  }
  return docs;
}

SkipGramConfig small_config() {
  SkipGramConfig cfg;
  cfg.dim = 24;
  cfg.epochs = 3;
  cfg.window = 3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("skip-gram separates two co-occurrence clusters") {
  auto docs = two_cluster_corpus(1);
  docs.push_back({"rare", "rare", "rare"});
  auto table = train_skipgram(docs, small_config());
  CHECK(table.dim() == 24);
  CHECK_FALSE(table.contains("rare"));

  const std::vector<std::string> a{"cat", "dog", "pet", "fur", "paw", "vet"};
  const std::vector<std::string> b{"stock", "bond", "market", "fund", "yield", "trade"};
  double within = 0, cross = 0;
  int nw = 0, nc = 0;
  for (const auto* g : {&a, &b})
    for (std::size_t i = 0; i < g->size(); ++i)
      for (std::size_t j = i + 1; j < g->size(); ++j) {
        within += cosine_similarity(table.vector((*g)[i]), table.vector((*g)[j]));
        ++nw;
      }
  for (const auto& x : a)
    for (const auto& y : b) {
      cross += cosine_similarity(table.vector(x), table.vector(y));
      ++nc;
    }
  CHECK(within / nw - cross / nc >= 0.2);
  REQUIRE(table.epoch_loss.size() == 3);
  CHECK(table.epoch_loss.back() < table.epoch_loss.front());
}

TEST_CASE("skip-gram is deterministic and round-trips") {
  const auto docs = two_cluster_corpus(2);
  auto t1 = train_skipgram(docs, small_config());
  auto t2 = train_skipgram(docs, small_config());
  CHECK(t1.vocab == t2.vocab);
  CHECK(t1.vectors == t2.vectors);
  CHECK(t1.corpus_hash == corpus_hash(docs));

  const auto path = oracle::temp_path("emb.txt");
  t1.save(path);
  auto back = EmbeddingTable::load(path);
  CHECK(back.vocab == t1.vocab);
  CHECK(back.vectors == t1.vectors);
  CHECK(back.config.window == 3);
  CHECK(back.corpus_hash == t1.corpus_hash);

  CHECK_THROWS_AS(train_skipgram({}, small_config()), Error);
}

TEST_CASE("document embedding") {
  auto table = train_skipgram(two_cluster_corpus(3), small_config());
  auto one = embed_doc({"cat"}, table);
  CHECK(one.hits == 1);
  CHECK((one.vector - table.vector("cat")).norm() == 0.0);
  auto copies = embed_doc({"dog", "dog", "dog", "dog"}, table);
  CHECK((copies.vector - table.vector("dog")).norm() <= 1e-12);
  auto oov = embed_doc({"zzz", "yyy"}, table);
  CHECK(oov.flagged());
  CHECK(oov.vector.size() == 24);
  CHECK(oov.vector.isZero());
}

TEST_CASE("NMF recovers a rank-1 matrix") {
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(12, 0.5, 3.0);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::LinSpaced(9, 1.0, 0.1);
  Eigen::MatrixXd V = w * h;
  NmfOptions<double> opt;
  opt.rank = 1;
  opt.iterations = 500;
  auto f = nmf_multiplicative(V, opt);
  const double rel = (V - f.W * f.H).norm() / V.norm();
  CHECK(rel <= 1e-6);
}

TEST_CASE("property: NMF objective is non-increasing") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 5 + static_cast<int>(rng.index(20)), cols = 5 + static_cast<int>(rng.index(20));
    Eigen::MatrixXd V(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) V(i, j) = rng.uniform() < 0.4 ? 0.0 : rng.uniform(0.0, 5.0);
    NmfOptions<double> opt;
    opt.rank = 1 + static_cast<int>(rng.index(std::min(rows, cols)));
    opt.iterations = 50;
    opt.seed = trial;
    auto f = nmf_multiplicative(V, opt);
    REQUIRE(f.objective.size() == 51);
    for (std::size_t t = 1; t < f.objective.size(); ++t) CHECK(f.objective[t] <= f.objective[t - 1] + 1e-8);
    CHECK((f.W.array() >= 0).all());
    CHECK((f.H.array() >= 0).all());
  }
}

TEST_CASE("NMF determinism and errors") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Random(8, 6).cwiseAbs();
  NmfOptions<double> opt;
  opt.rank = 3;
  opt.iterations = 30;
  auto a = nmf_multiplicative(V, opt);
  auto b = nmf_multiplicative(V, opt);
  CHECK(a.W == b.W);
  CHECK(a.H == b.H);
  opt.rank = 7;
  CHECK_THROWS_AS(nmf_multiplicative(V, opt), Error);
  opt.rank = 2;
  V(0, 0) = -1;
  CHECK_THROWS_AS(nmf_multiplicative(V, opt), Error);
  // Single precision goes through the same template.
  Eigen::MatrixXf Vf = Eigen::MatrixXf::Random(6, 5).cwiseAbs();
  NmfOptions<float> optf;
  optf.rank = 2;
  optf.iterations = 20;
  CHECK(nmf_multiplicative(Vf, optf).W.rows() == 6);
}

namespace {

std::vector<std::vector<std::string>> topic_docs() {
  const std::vector<std::vector<std::string>> topics{{"squat", "bench", "deadlift", "reps", "gym", "protein"},
                                                     {"galaxy", "photon", "quantum", "orbit", "planet", "star"},
                                                     {"date", "wife", "beard", "suit", "dating", "friend"}};
  Rng rng(7);
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 90; ++i) {
    const auto& t = topics[i % 3];
    std::vector<std::string> d;
    for (int j = 0; j < 12; ++j) d.push_back(t[rng.index(t.size())]);
    docs.push_back(d);
  }
  return docs;
}

}  // namespace

TEST_CASE("tf-idf matrix") {
  auto tf = build_tfidf({{"a", "a", "b"}, {"b", "c"}, {"b"}}, 1);
  CHECK(tf.vocab == std::vector<std::string>{"a", "b", "c"});
  CHECK(tf.idf(1) == doctest::Approx(1.0));  // df = N
  CHECK(tf.idf(0) == doctest::Approx(std::log(4.0 / 2.0) + 1.0));
  for (int r = 0; r < 3; ++r) CHECK(Eigen::VectorXd(tf.matrix.row(r).transpose()).norm() == doctest::Approx(1.0));
  auto pruned = build_tfidf({{"a", "a", "b"}, {"b", "c"}, {"b"}}, 2);
  CHECK(pruned.vocab == std::vector<std::string>{"b"});
}

TEST_CASE("NMF fold-in reproduces training topic weights") {
  const auto docs = topic_docs();
  NmfConfig cfg;
  cfg.rank = 3;
  cfg.iterations = 300;
  cfg.fold_in_iterations = 300;
  cfg.min_df = 1;
  auto trained = train_nmf(docs, cfg);
  CHECK((trained.model.H.array() >= 0).all());
  for (std::size_t t = 1; t < trained.model.objective.size(); ++t)
    CHECK(trained.model.objective[t] <= trained.model.objective[t - 1] + 1e-8);
  for (int d = 0; d < 9; ++d) {
    auto v = trained.model.project_doc(docs[d]);
    CHECK((v.vector.array() >= 0).all());
    Eigen::VectorXd row = trained.W.row(d).transpose();
    CHECK(cosine_similarity(v.vector, row) >= 0.99);
  }
  CHECK(trained.model.project_doc({"unknownword"}).flagged());

  const auto path = oracle::temp_path("nmf.txt");
  trained.model.save(path);
  auto back = NmfModel::load(path);
  CHECK(back.vocab == trained.model.vocab);
  CHECK((back.H - trained.model.H).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.project_doc(docs[0]).vector - trained.model.project_doc(docs[0]).vector).norm() == 0.0);
}
