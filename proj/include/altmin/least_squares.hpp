#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "altmin/errors.hpp"

namespace altmin {

// Relative eigenvalue cut-off below which Gram directions are treated as
// unconstrained.
inline constexpr double kGramRankThreshold = 1e-10;

// Minimal-norm solution of the symmetric positive semi-definite system
// gram * x = rhs, via the eigendecomposition of gram. Directions with
// eigenvalue <= threshold * max eigenvalue are dropped.
inline Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                      double rel_threshold = kGramRankThreshold) {
  const auto r = gram.rows();
  if (gram.cols() != r || rhs.size() != r) throw std::invalid_argument("min_norm_solve: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  if (r == 2 || r == 3)
    eig.computeDirect(gram);
  else
    eig.compute(gram);
  const auto& lambda = eig.eigenvalues();
  const auto& vecs = eig.eigenvectors();
  const double top = lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(r);
  if (!(top > 0.0)) return x;
  for (Eigen::Index k = 0; k < r; ++k) {
    if (lambda(k) > rel_threshold * top) x += (vecs.col(k).dot(rhs) / lambda(k)) * vecs.col(k);
  }
  return x;
}

// Accumulates the r x r normal equations sum_k y_k y_k^T x = sum_k M_k y_k of
// one local least-squares problem, then solves them. Rank 1 uses the closed
// form sum M_k y_k / sum y_k^2.
class NormalEquations {
 public:
  explicit NormalEquations(Eigen::Index rank) : gram_(rank, rank), rhs_(rank) { reset(); }

  void reset() {
    gram_.setZero();
    rhs_.setZero();
    count_ = 0;
  }

  template <typename Derived>
  void add(const Eigen::DenseBase<Derived>& y, double value) {
    const auto r = rhs_.size();
    for (Eigen::Index a = 0; a < r; ++a) {
      const double ya = y(a);
      rhs_(a) += value * ya;
      for (Eigen::Index c = 0; c <= a; ++c) gram_(a, c) += ya * y(c);
    }
    ++count_;
  }

  std::size_t count() const { return count_; }
  Eigen::Index rank() const { return rhs_.size(); }

  // Throws SolveError when rank is 1 and every neighbour vector is zero.
  Eigen::VectorXd solve() const {
    if (rank() == 1) {
      const double denom = gram_(0, 0);
      if (denom == 0.0) throw SolveError("zero denominator: all neighbour values are 0");
      return Eigen::VectorXd::Constant(1, rhs_(0) / denom);
    }
    return solve_general();
  }

  // The eigen-based path for any rank, rank 1 included.
  Eigen::VectorXd solve_general() const { return min_norm_solve(symmetric_gram(), rhs_); }

  Eigen::MatrixXd symmetric_gram() const { return gram_.selfadjointView<Eigen::Lower>(); }
  const Eigen::VectorXd& rhs() const { return rhs_; }

 private:
  Eigen::MatrixXd gram_;  // lower triangle only
  Eigen::VectorXd rhs_;
  std::size_t count_ = 0;
};

}  // namespace altmin
