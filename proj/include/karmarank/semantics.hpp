#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "karmarank/common.hpp"
#include "karmarank/nmf.hpp"

namespace karmarank {

// Cosine similarity in [-1, 1]; 0 when either vector is zero (and *degenerate is set).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b,
                                            bool* degenerate = nullptr) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size())
    fail_numeric("cosine of vectors with lengths " + std::to_string(a.size()) + " and " +
                 std::to_string(b.size()));
  const Scalar na = a.norm(), nb = b.norm();
  if (degenerate) *degenerate = na == 0 || nb == 0;
  if (na == 0 || nb == 0) return Scalar(0);
  const Scalar c = a.dot(b.template cast<Scalar>()) / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

// |A n B| / |A u B|, defined as 1 for two empty sets.
double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b);

enum class SimilarityKind { Cosine, Jaccard };

struct SkipGramConfig {
  int dim = 300;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  int min_count = 5;
  double alpha = 0.025;
  std::uint64_t seed = 1;
  // L2-normalize word vectors before averaging them into a document vector.
  bool normalize_before_average = false;
};

class EmbeddingTable {
 public:
  using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int dim() const { return static_cast<int>(vectors.cols()); }
  std::size_t size() const { return vocab.size(); }
  bool contains(const std::string& token) const { return index.count(token) > 0; }
  // Row of the token; the token must be present.
  Eigen::VectorXd vector(const std::string& token) const;

  void save(const std::string& path) const;
  static EmbeddingTable load(const std::string& path);

  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> index;
  Matrix vectors;
  SkipGramConfig config;
  std::string corpus_hash;
  std::vector<double> epoch_loss;  // mean negative log-likelihood per training pair
};

// Skip-gram with negative sampling, single worker, deterministic under the seed.
EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipGramConfig& config);

std::string corpus_hash(const std::vector<std::vector<std::string>>& docs);

struct DocVector {
  Eigen::VectorXd vector;
  std::size_t hits = 0;  // tokens that contributed
  bool flagged() const { return hits == 0; }
};

// Mean of in-vocabulary token vectors; zero vector (flagged) when none.
DocVector embed_doc(const std::vector<std::string>& tokens, const EmbeddingTable& table);

struct NmfConfig {
  int rank = 300;
  int iterations = 100;
  int fold_in_iterations = 100;
  int min_df = 2;
  std::uint64_t seed = 1;
};

// Topic basis over a tf-idf vocabulary, used for fold-in of new documents.
class NmfModel {
 public:
  int rank() const { return static_cast<int>(H.rows()); }
  // L2-normalized tf-idf row over the model vocabulary.
  Eigen::SparseVector<double> tfidf(const std::vector<std::string>& tokens) const;
  DocVector project_doc(const std::vector<std::string>& tokens) const;

  void save(const std::string& path) const;
  static NmfModel load(const std::string& path);

  std::vector<std::string> vocab;
  std::unordered_map<std::string, Eigen::Index> index;
  Eigen::VectorXd idf;
  Eigen::MatrixXd H;  // rank x vocab
  Eigen::MatrixXd HHt;
  NmfConfig config;
  std::string corpus_hash;
  std::vector<double> objective;

  void finalize();
};

struct TfidfMatrix {
  Eigen::SparseMatrix<double> matrix;  // docs x vocab
  std::vector<std::string> vocab;
  Eigen::VectorXd idf;
};

TfidfMatrix build_tfidf(const std::vector<std::vector<std::string>>& docs, int min_df);

struct NmfTraining {
  NmfModel model;
  Eigen::MatrixXd W;  // per-training-document topic weights
};

NmfTraining train_nmf(const TfidfMatrix& tfidf, const NmfConfig& config);
NmfTraining train_nmf(const std::vector<std::vector<std::string>>& docs, const NmfConfig& config);

}  // namespace karmarank
