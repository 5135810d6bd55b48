#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace neckspec {

using cplx = std::complex<double>;

struct Eigenpair {
  double nu = 0.0;
  int mult = 1;
  bool operator==(const Eigenpair&) const = default;
};

// Cross-section described only by its form-Laplacian spectrum.
struct CrossSectionSpectrum {
  std::string name;
  int dimension = 0;
  std::map<int, std::vector<Eigenpair>> degrees;
  // Optional orthogonal action on eigenspaces, keyed by degree then eigenvalue index.
  std::map<int, std::map<int, Eigen::MatrixXd>> twist;

  const std::vector<Eigenpair>& list(int q) const;
  int betti(int q) const;
  bool twist_is_identity(double tol = 1e-12) const;

  bool operator==(const CrossSectionSpectrum& o) const;
};

CrossSectionSpectrum circle_spectrum(double length, int max_modes);
CrossSectionSpectrum torus2_spectrum(int max_lattice);
CrossSectionSpectrum load_spectrum(const std::filesystem::path& file);
CrossSectionSpectrum parse_spectrum(const std::string& json_text);

enum class ModeKind { Laplace, Dirac };
enum class DegreeTag { alpha, beta };

const char* to_string(DegreeTag t);
const char* to_string(ModeKind k);

struct ModeOperator {
  ModeKind kind = ModeKind::Laplace;
  double nu = 0.0;
  DegreeTag tag = DegreeTag::alpha;

  static ModeOperator laplace(double nu, DegreeTag tag = DegreeTag::alpha) {
    return {ModeKind::Laplace, nu, tag};
  }
  // Zero-mode block of d + d* acting on (alpha, dt^beta).
  static ModeOperator dirac() { return {ModeKind::Dirac, 0.0, DegreeTag::alpha}; }

  int fiber_dim() const { return kind == ModeKind::Dirac ? 2 : 1; }
  bool is_zero_mode() const { return kind == ModeKind::Dirac || nu == 0.0; }
};

// Modes with nu <= cutoff: degree q first (alpha), then degree q-1 (beta), each ascending.
std::vector<ModeOperator> mode_list(const CrossSectionSpectrum& spec, int q, double cutoff);

struct Root {
  cplx lambda;
  int order = 1;
};

struct RootData {
  std::vector<Root> roots;
  std::vector<Root> real_roots;
  int max_real_order = 0;
};

RootData roots_of(const ModeOperator& op);

// J(a, b) = (-b, a) on the (alpha, beta) fiber of a Dirac block.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> dirac_J() {
  Eigen::Matrix<Scalar, 2, 2> J;
  J << Scalar(0), Scalar(-1), Scalar(1), Scalar(0);
  return J;
}

// Symbol p(lambda) = A0 + A1 lambda + A2 lambda^2 on the mode fiber.
template <typename Scalar>
struct Symbol {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat A0, A1, A2;

  int dim() const { return static_cast<int>(A0.rows()); }

  // n-th derivative in lambda at lambda0.
  Mat derivative(int n, const Scalar& l0) const {
    switch (n) {
      case 0: return A0 + A1 * l0 + A2 * (l0 * l0);
      case 1: return A1 + A2 * (Scalar(2) * l0);
      case 2: return A2 * Scalar(2);
      default: return Mat::Zero(dim(), dim());
    }
  }
};

template <typename Scalar>
Symbol<Scalar> symbol_of(const ModeOperator& op) {
  using Ops = ScalarOps<Scalar>;
  using Mat = typename Symbol<Scalar>::Mat;
  const int d = op.fiber_dim();
  Symbol<Scalar> s{Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, d)};
  if (op.kind == ModeKind::Laplace) {
    s.A0(0, 0) = Ops::from_double(op.nu);
    s.A2(0, 0) = Scalar(1);
  } else {
    s.A1 = dirac_J<Scalar>() * Ops::i();
  }
  return s;
}

// Block-diagonal symbol of a list of modes.
template <typename Scalar>
Symbol<Scalar> symbol_of(const std::vector<ModeOperator>& modes) {
  using Mat = typename Symbol<Scalar>::Mat;
  int n = 0;
  for (const auto& m : modes) n += m.fiber_dim();
  Symbol<Scalar> s{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  int off = 0;
  for (const auto& m : modes) {
    auto b = symbol_of<Scalar>(m);
    const int d = m.fiber_dim();
    s.A0.block(off, off, d, d) = b.A0;
    s.A1.block(off, off, d, d) = b.A1;
    s.A2.block(off, off, d, d) = b.A2;
    off += d;
  }
  return s;
}

template <typename Scalar>
struct LaurentCoefficients {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Scalar at_root;
  int order = 0;  // pole order d, coefficients start at m = -d
  std::map<int, Mat> coeffs;

  const Mat& at(int m) const { return coeffs.at(m); }
  int m_min() const { return -order; }
  int m_max() const { return coeffs.empty() ? -1 : coeffs.rbegin()->first; }
};

// Largest relative deviation in sum_{m+n=l} p^(n)(l0)/n! R_m = [l == 0] over l = -d .. m_max.
template <typename Scalar>
double laurent_identity_defect(const Symbol<Scalar>& p, const LaurentCoefficients<Scalar>& R) {
  using Ops = ScalarOps<Scalar>;
  using Mat = typename LaurentCoefficients<Scalar>::Mat;
  double worst = 0.0;
  const int d = p.dim();
  for (int l = R.m_min(); l <= R.m_max(); ++l) {
    Mat acc = Mat::Zero(d, d);
    double scale = 1.0;  // relative to the largest summand, coefficients can grow geometrically
    for (int n = 0; n <= 2; ++n) {
      const int m = l - n;
      if (m < R.m_min() || m > R.m_max()) continue;
      Scalar inv_fact = n == 2 ? Scalar(1) / Scalar(2) : Scalar(1);
      const Mat term = p.derivative(n, R.at_root) * R.at(m) * inv_fact;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) scale = std::max(scale, std::abs(Ops::to_complex(term(i, j))));
      acc += term;
    }
    if (l == 0) acc -= Mat::Identity(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) worst = std::max(worst, std::abs(Ops::to_complex(acc(i, j))) / scale);
  }
  return worst;
}

namespace detail {
template <typename Scalar>
LaurentCoefficients<Scalar> laurent_scalar(const ModeOperator& op, const Scalar& l0, int m_max) {
  using Ops = ScalarOps<Scalar>;
  using Mat = typename LaurentCoefficients<Scalar>::Mat;
  LaurentCoefficients<Scalar> R;
  R.at_root = l0;
  auto one = [](const Scalar& v) { Mat m(1, 1); m(0, 0) = v; return m; };
  const Scalar nu = Ops::from_double(op.nu);
  const Scalar p0 = l0 * l0 + nu;
  const double scale = 1e-12 * (1.0 + op.nu);
  if (!Ops::is_zero(p0, scale)) {
    // Regular point: Taylor coefficients of 1/p from p0 R_l + p1 R_{l-1} + R_{l-2} = [l == 0].
    const Scalar p1 = Scalar(2) * l0;
    std::vector<Scalar> r;
    for (int l = 0; l <= m_max; ++l) {
      Scalar acc = l == 0 ? Scalar(1) : Scalar(0);
      if (l >= 1) acc -= p1 * r[l - 1];
      if (l >= 2) acc -= r[l - 2];
      r.push_back(acc / p0);
    }
    for (int l = 0; l <= m_max; ++l) R.coeffs[l] = one(r[l]);
    R.order = 0;
    return R;
  }
  if (op.nu == 0.0) {
    // 1/lambda^2 exactly.
    R.order = 2;
    for (int m = -2; m <= m_max; ++m) R.coeffs[m] = one(m == -2 ? Scalar(1) : Scalar(0));
    return R;
  }
  // Simple root of (lambda - l0)(lambda + l0): 1/(x (x + 2 l0)).
  const Scalar c = Scalar(2) * l0;
  R.order = 1;
  Scalar term = Scalar(1) / c;
  for (int m = -1; m <= m_max; ++m) {
    R.coeffs[m] = one(term);
    term = term * (Scalar(-1) / c);
  }
  return R;
}

template <typename Scalar>
LaurentCoefficients<Scalar> laurent_dirac(const Scalar& l0, int m_max) {
  using Ops = ScalarOps<Scalar>;
  using Mat = typename LaurentCoefficients<Scalar>::Mat;
  LaurentCoefficients<Scalar> R;
  R.at_root = l0;
  const Mat iJ = dirac_J<Scalar>() * Ops::i();
  if (Ops::is_zero(l0, 1e-14)) {
    R.order = 1;
    for (int m = -1; m <= m_max; ++m) R.coeffs[m] = m == -1 ? iJ : Mat(Mat::Zero(2, 2));
    return R;
  }
  // (i (l0 + x) J)^{-1} = iJ / (l0 + x)
  R.order = 0;
  Scalar term = Scalar(1) / l0;
  for (int m = 0; m <= m_max; ++m) {
    R.coeffs[m] = iJ * term;
    term = term * (Scalar(-1) / l0);
  }
  return R;
}
}  // namespace detail

// Laurent data of the mode resolvent at lambda0, checked against the convolution identities.
template <typename Scalar = cplx>
LaurentCoefficients<Scalar> resolvent_laurent(const ModeOperator& op, const Scalar& lambda0, int m_max) {
  if (m_max < 0) throw InvalidArgument("resolvent_laurent: m_max must be >= 0");
  if (op.kind == ModeKind::Dirac && op.nu != 0.0)
    throw InvalidArgument("Dirac blocks are defined on zero modes only");
  auto R = op.kind == ModeKind::Laplace ? detail::laurent_scalar<Scalar>(op, lambda0, m_max)
                                        : detail::laurent_dirac<Scalar>(lambda0, m_max);
  const double defect = laurent_identity_defect(symbol_of<Scalar>(op), R);
  if (defect > 1e-10) throw ContractViolation("resolvent_laurent: convolution identity defect");
  return R;
}

// Block-diagonal Laurent data for a list of modes at a common real point.
template <typename Scalar>
LaurentCoefficients<Scalar> resolvent_laurent(const std::vector<ModeOperator>& modes, const Scalar& lambda0,
                                              int m_max) {
  using Mat = typename LaurentCoefficients<Scalar>::Mat;
  std::vector<LaurentCoefficients<Scalar>> parts;
  int n = 0, order = 0;
  for (const auto& m : modes) {
    parts.push_back(resolvent_laurent<Scalar>(m, lambda0, m_max));
    n += m.fiber_dim();
    order = std::max(order, parts.back().order);
  }
  LaurentCoefficients<Scalar> R;
  R.at_root = lambda0;
  R.order = order;
  for (int k = -order; k <= m_max; ++k) {
    Mat M = Mat::Zero(n, n);
    int off = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const int d = modes[i].fiber_dim();
      auto it = parts[i].coeffs.find(k);
      if (it != parts[i].coeffs.end()) M.block(off, off, d, d) = it->second;
      off += d;
    }
    R.coeffs[k] = M;
  }
  return R;
}

}  // namespace neckspec
