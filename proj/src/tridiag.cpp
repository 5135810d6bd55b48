#include "neckspec/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neckspec/errors.hpp"

namespace neckspec {

Eigen::VectorXd SymTridiag::apply(const Eigen::VectorXd& x) const {
  const int n = size();
  Eigen::VectorXd y = d.cwiseProduct(x);
  for (int i = 0; i + 1 < n; ++i) {
    y(i) += e(i) * x(i + 1);
    y(i + 1) += e(i) * x(i);
  }
  return y;
}

Eigen::MatrixXd SymTridiag::dense() const {
  const int n = size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  M.diagonal() = d;
  for (int i = 0; i + 1 < n; ++i) M(i, i + 1) = M(i + 1, i) = e(i);
  return M;
}

int SymTridiag::count_below(double x) const {
  const int n = size();
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  int count = 0;
  double q = 1.0;
  for (int i = 0; i < n; ++i) {
    const double off = i ? e(i - 1) * e(i - 1) / q : 0.0;
    q = d(i) - x - off;
    if (q == 0.0) q = -tiny;  // treat an exact zero pivot as just below
    if (q < 0.0) ++count;
  }
  return count;
}

double SymTridiag::lower_bound() const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    const double r = (i ? std::abs(e(i - 1)) : 0.0) + (i + 1 < size() ? std::abs(e(i)) : 0.0);
    lo = std::min(lo, d(i) - r);
  }
  return lo;
}

double SymTridiag::upper_bound() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    const double r = (i ? std::abs(e(i - 1)) : 0.0) + (i + 1 < size() ? std::abs(e(i)) : 0.0);
    hi = std::max(hi, d(i) + r);
  }
  return hi;
}

std::vector<double> SymTridiag::lowest(int k, double tol) const {
  k = std::min(k, size());
  std::vector<double> out;
  if (k <= 0) return out;
  const double glo = lower_bound(), ghi = upper_bound();
  out.reserve(k);
  double prev = glo;
  for (int j = 0; j < k; ++j) {
    // smallest x with count_below(x) > j
    double lo = prev, hi = ghi;
    while (hi - lo > tol + 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) {
      const double mid = 0.5 * (lo + hi);
      if (count_below(mid) > j)
        hi = mid;
      else
        lo = mid;
    }
    out.push_back(0.5 * (lo + hi));
    prev = lo;
  }
  return out;
}

Eigen::VectorXd SymTridiag::solve(const Eigen::VectorXd& b, double shift) const {
  const int n = size();
  if (b.size() != n) throw InvalidArgument("SymTridiag::solve: size mismatch");
  // banded LU with partial pivoting: after a swap row i gains a second superdiagonal
  Eigen::VectorXd dl(n), dd(n), du(n), du2 = Eigen::VectorXd::Zero(n), x = b;
  for (int i = 0; i < n; ++i) {
    dd(i) = d(i) - shift;
    du(i) = i + 1 < n ? e(i) : 0.0;
    dl(i) = i + 1 < n ? e(i) : 0.0;
  }
  std::vector<char> swapped(n, 0);
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(dd(i)) >= std::abs(dl(i))) {
      if (dd(i) == 0.0) dd(i) = std::numeric_limits<double>::epsilon() * (std::abs(du(i)) + 1.0);
      const double m = dl(i) / dd(i);
      dl(i) = m;
      dd(i + 1) -= m * du(i);
      x(i + 1) -= m * x(i);
    } else {
      swapped[i] = 1;
      const double m = dd(i) / dl(i);
      dd(i) = dl(i);
      dl(i) = m;
      const double t = dd(i + 1);
      dd(i + 1) = du(i) - m * t;
      du(i) = t;
      if (i + 2 < n) {
        du2(i) = du(i + 1);
        du(i + 1) = -m * du(i + 1);
      }
      std::swap(x(i), x(i + 1));
      x(i + 1) -= m * x(i);
    }
  }
  if (dd(n - 1) == 0.0) dd(n - 1) = std::numeric_limits<double>::epsilon();
  x(n - 1) /= dd(n - 1);
  if (n > 1) x(n - 2) = (x(n - 2) - du(n - 2) * x(n - 1)) / dd(n - 2);
  for (int i = n - 3; i >= 0; --i) x(i) = (x(i) - du(i) * x(i + 1) - du2(i) * x(i + 2)) / dd(i);
  return x;
}

Eigen::VectorXd SymTridiag::eigenvector(double lambda, int iterations) const {
  const int n = size();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * std::sin(1.0 + 7.0 * i);
  x.normalize();
  for (int it = 0; it < iterations; ++it) {
    x = solve(x, lambda);
    x.normalize();
  }
  return x;
}

}  // namespace neckspec
