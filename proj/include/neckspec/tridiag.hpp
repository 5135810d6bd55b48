#pragma once

#include <Eigen/Dense>
#include <vector>

namespace neckspec {

// Real symmetric tridiagonal matrix: diagonal d (n), off-diagonal e (n - 1).
struct SymTridiag {
  Eigen::VectorXd d, e;

  int size() const { return static_cast<int>(d.size()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd dense() const;

  // Number of eigenvalues strictly below x (Sturm sequence of the LDL^T pivots).
  int count_below(double x) const;
  // Gershgorin interval
  double lower_bound() const;
  double upper_bound() const;
  // The k smallest eigenvalues by bisection, absolute accuracy tol.
  std::vector<double> lowest(int k, double tol = 1e-15) const;
  // (M - shift) x = b by Gaussian elimination with partial pivoting.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, double shift = 0.0) const;
  // Unit eigenvector for an eigenvalue estimate, by inverse iteration.
  Eigen::VectorXd eigenvector(double lambda, int iterations = 4) const;
};

}  // namespace neckspec
