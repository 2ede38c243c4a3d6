#pragma once

// Non-negative matrix factorization by Lee-Seung multiplicative updates,
// V (docs x terms) ~= W (docs x rank) * H (rank x terms), Frobenius loss.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "karmarank/common.hpp"

namespace karmarank {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct NmfFactors {
  DenseMatrix<Scalar> W;
  DenseMatrix<Scalar> H;
  // objective[0] is the loss of the initialization, objective[t] after update t.
  std::vector<Scalar> objective;
};

template <typename Scalar>
struct NmfOptions {
  int rank = 300;
  int iterations = 200;
  std::uint64_t seed = 1;
  // Stop early once the relative decrease falls below this value (0 = never).
  Scalar tolerance = 0;
};

namespace detail {

template <typename Scalar>
constexpr Scalar nmf_guard() {
  return std::numeric_limits<Scalar>::epsilon() * std::numeric_limits<Scalar>::epsilon();
}

// ||V - WH||_F^2 = ||V||^2 - 2 <W, V H^T> + <W^T W, H H^T>
template <typename Scalar>
Scalar frobenius_loss(Scalar v_norm2, const DenseMatrix<Scalar>& W, const DenseMatrix<Scalar>& VHt,
                      const DenseMatrix<Scalar>& H) {
  const DenseMatrix<Scalar> WtW = W.transpose() * W;
  const DenseMatrix<Scalar> HHt = H * H.transpose();
  const Scalar loss = v_norm2 - 2 * W.cwiseProduct(VHt).sum() + WtW.cwiseProduct(HHt).sum();
  return std::max(loss, Scalar(0));
}

}  // namespace detail

template <typename Scalar>
NmfFactors<Scalar> nmf_multiplicative(const Eigen::SparseMatrix<Scalar>& V, const NmfOptions<Scalar>& opt) {
  const Eigen::Index rows = V.rows(), cols = V.cols();
  if (opt.rank < 1 || opt.rank > std::min(rows, cols))
    fail_config("NMF rank " + std::to_string(opt.rank) + " must lie in [1, min(" + std::to_string(rows) +
                ", " + std::to_string(cols) + ")]");
  for (Eigen::Index k = 0; k < V.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(V, k); it; ++it)
      if (it.value() < 0 || !std::isfinite(static_cast<double>(it.value())))
        fail_data("NMF input must be finite and non-negative");

  const Scalar v_norm2 = V.squaredNorm();
  const Scalar mean = rows * cols > 0 ? V.sum() / static_cast<Scalar>(rows * cols) : Scalar(0);
  const Scalar scale = std::sqrt(std::max(mean, Scalar(1e-12)) / static_cast<Scalar>(opt.rank));

  Rng rng(opt.seed);
  NmfFactors<Scalar> f;
  f.W.resize(rows, opt.rank);
  f.H.resize(opt.rank, cols);
  for (Eigen::Index i = 0; i < f.W.size(); ++i) f.W.data()[i] = scale * static_cast<Scalar>(0.1 + rng.uniform());
  for (Eigen::Index i = 0; i < f.H.size(); ++i) f.H.data()[i] = scale * static_cast<Scalar>(0.1 + rng.uniform());

  const Eigen::SparseMatrix<Scalar> Vt = V.transpose();
  const Scalar guard = detail::nmf_guard<Scalar>();

  DenseMatrix<Scalar> VHt = V * f.H.transpose();
  f.objective.push_back(detail::frobenius_loss(v_norm2, f.W, VHt, f.H));

  for (int it = 0; it < opt.iterations; ++it) {
    // H <- H .* (W^T V) ./ (W^T W H)
    const DenseMatrix<Scalar> WtV = (Vt * f.W).transpose();
    const DenseMatrix<Scalar> WtWH = (f.W.transpose() * f.W) * f.H;
    f.H = f.H.cwiseProduct(WtV).cwiseQuotient((WtWH.array() + guard).matrix());

    // W <- W .* (V H^T) ./ (W H H^T)
    VHt = V * f.H.transpose();
    const DenseMatrix<Scalar> WHHt = f.W * (f.H * f.H.transpose());
    f.W = f.W.cwiseProduct(VHt).cwiseQuotient((WHHt.array() + guard).matrix());

    VHt = V * f.H.transpose();
    const Scalar loss = detail::frobenius_loss(v_norm2, f.W, VHt, f.H);
    if (!std::isfinite(static_cast<double>(loss))) fail_numeric("NMF objective became non-finite");
    const Scalar prev = f.objective.back();
    f.objective.push_back(loss);
    if (opt.tolerance > 0 && prev > 0 && (prev - loss) / prev < opt.tolerance) break;
  }
  return f;
}

template <typename Derived>
NmfFactors<typename Derived::Scalar> nmf_multiplicative(const Eigen::MatrixBase<Derived>& V,
                                                        const NmfOptions<typename Derived::Scalar>& opt) {
  using Scalar = typename Derived::Scalar;
  const Eigen::SparseMatrix<Scalar> sparse = V.derived().sparseView();
  return nmf_multiplicative<Scalar>(sparse, opt);
}

// Fold-in: non-negative least squares for a single row v against fixed H,
// solved with the same multiplicative rule.
template <typename Scalar, typename Derived>
DenseVector<Scalar> nmf_fold_in(const Eigen::MatrixBase<Derived>& v, const DenseMatrix<Scalar>& H,
                                const DenseMatrix<Scalar>& HHt, int iterations) {
  const DenseVector<Scalar> vHt = H * v.template cast<Scalar>();
  DenseVector<Scalar> w(H.rows());
  if (vHt.sum() <= 0) {
    w.setZero();
    return w;
  }
  const Scalar denom = HHt.sum();
  w.setConstant(denom > 0 ? vHt.sum() / denom : Scalar(1));
  const Scalar guard = detail::nmf_guard<Scalar>();
  for (int it = 0; it < iterations; ++it) {
    const DenseVector<Scalar> den = HHt * w;
    w = w.cwiseProduct(vHt).cwiseQuotient((den.array() + guard).matrix());
  }
  return w;
}

}  // namespace karmarank
