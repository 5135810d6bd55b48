#include "neckspec/neck_inverse.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "neckspec/csv.hpp"

namespace neckspec {

namespace {

int grid_index(double x, double h, const char* what) {
  const double k = x / h;
  if (std::abs(k - std::round(k)) > 1e-9) throw InvalidArgument(std::string(what) + " must be a multiple of h");
  return static_cast<int>(std::lround(k));
}

// 1 - e^{-a}(1 + a), accurate for small a
double one_minus_exp_poly(double a) {
  if (a > 0.1) return 1.0 - std::exp(-a) * (1.0 + a);
  double term = a, sum = 0.0;  // sum_{k>=2} (-1)^k (k-1) a^k / k!
  for (int k = 2; k <= 12; ++k) {
    term *= a / k;
    sum += (k % 2 ? -1.0 : 1.0) * (k - 1) * term;
  }
  return sum;
}

struct Moments {
  Eigen::VectorXd F0, F1;  // cumulative int f, int tau f (piecewise-linear f on [-T, T])
};

Moments cumulative(const CompactSection& f, int row) {
  const int n = f.points(), lo = f.lo(), hi = f.hi();
  Moments m{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  const double h = f.h;
  for (int k = 1; k < n; ++k) {
    m.F0(k) = m.F0(k - 1);
    m.F1(k) = m.F1(k - 1);
    if (k > lo && k <= hi) {
      const double a = f.values(row, k - 1), b = f.values(row, k);
      const double ta = f.t(k - 1), tb = f.t(k);
      m.F0(k) += 0.5 * h * (a + b);
      m.F1(k) += h / 6.0 * ((2 * ta + tb) * a + (ta + 2 * tb) * b);
    }
  }
  return m;
}

void check_modes(const std::vector<ModeOperator>& modes) {
  for (const auto& m : modes) {
    if (m.kind == ModeKind::Laplace && m.nu < 0.0) throw InvalidArgument("q0_apply: negative nu");
    if (m.kind == ModeKind::Dirac && m.nu != 0.0) throw InvalidArgument("Dirac blocks are defined on zero modes only");
  }
}

void check_section(const std::vector<ModeOperator>& modes, const CompactSection& f) {
  if (f.values.rows() != fiber_rows(modes)) throw InvalidArgument("section rows do not match the mode list");
  if (f.T < 1.0) throw InvalidArgument("q0_apply: T must be >= 1");
  if (f.T > f.S - 2.0) throw InvalidArgument("q0_apply: T > S - 2 leaves no room for the trace");
}

}  // namespace

CompactSection::CompactSection(int rows, double S_, double T_, double h_) : S(S_), T(T_), h(h_) {
  if (!(h > 0.0)) throw InvalidArgument("grid step must be positive");
  const int n = 2 * grid_index(S, h, "S") + 1;
  grid_index(T, h, "T");
  values = Eigen::MatrixXd::Zero(rows, n);
}

int CompactSection::lo() const { return static_cast<int>(std::lround((S - T) / h)); }
int CompactSection::hi() const { return static_cast<int>(std::lround((S + T) / h)); }

int fiber_rows(const std::vector<ModeOperator>& modes) { return detail::fiber_of(modes); }

CompactSection make_section(const std::vector<ModeOperator>& modes, double S, double T, double h) {
  return CompactSection(fiber_rows(modes), S, T, h);
}

NeckSolution q0_apply(const std::vector<ModeOperator>& modes, const CompactSection& f, Q0Scheme scheme) {
  check_modes(modes);
  check_section(modes, f);
  const int rows = fiber_rows(modes), n = f.points(), lo = f.lo(), hi = f.hi();
  const double h = f.h;
  NeckSolution out;
  out.regular = Eigen::MatrixXd::Zero(rows, n);
  out.singular = Eigen::MatrixXd::Zero(rows, n);
  out.trace_plus = Section(rows);
  out.trace_minus = Section(rows);
  std::vector<Section::Vec> trace(2, Section::Vec::Zero(rows));

  int r = 0;
  for (const auto& m : modes) {
    if (m.kind == ModeKind::Dirac) {
      // u_s = -J int f, rows (alpha, beta)
      const auto a = cumulative(f, r), b = cumulative(f, r + 1);
      out.singular.row(r) = b.F0.transpose();
      out.singular.row(r + 1) = -a.F0.transpose();
      trace[0](r) = b.F0(n - 1);
      trace[0](r + 1) = -a.F0(n - 1);
    } else if (m.nu == 0.0) {
      double m0 = 0.0, m1 = 0.0;
      if (scheme == Q0Scheme::Continuum) {
        const auto c = cumulative(f, r);
        for (int k = 0; k < n; ++k) out.singular(r, k) = -f.t(k) * c.F0(k) + c.F1(k);
        m1 = c.F0(n - 1);
        m0 = c.F1(n - 1);
      } else {
        // u_{k+1} - 2u_k + u_{k-1} = -h^2 f_k, zero to the left of the support
        double s0 = 0.0, s1 = 0.0;
        for (int k = 0; k < n; ++k) {
          out.singular(r, k) = -f.t(k) * s0 + s1;
          if (k >= lo && k <= hi) {
            s0 += h * f.values(r, k);
            s1 += h * f.t(k) * f.values(r, k);
          }
        }
        m1 = s0;
        m0 = s1;
      }
      trace[0](r) = m0;
      trace[1](r) = -m1;
    } else if (scheme == Q0Scheme::Continuum) {
      const double s = std::sqrt(m.nu), a = s * h, decay = std::exp(-a);
      const double w1 = one_minus_exp_poly(a) / (s * s * h);
      const double w0 = -std::expm1(-a) / s - w1;
      Eigen::VectorXd F = Eigen::VectorXd::Zero(n), B = Eigen::VectorXd::Zero(n);
      for (int k = 1; k < n; ++k) {
        F(k) = decay * F(k - 1);
        if (k > lo && k <= hi) F(k) += w0 * f.values(r, k) + w1 * f.values(r, k - 1);
      }
      for (int k = n - 2; k >= 0; --k) {
        B(k) = decay * B(k + 1);
        if (k >= lo && k < hi) B(k) += w0 * f.values(r, k) + w1 * f.values(r, k + 1);
      }
      out.regular.row(r) = ((F + B) / (2.0 * s)).transpose();
    } else {
      // discrete Green's function C r^{|n|}, r + 1/r = 2 + nu h^2
      const double x = m.nu * h * h;
      const double big = 1.0 + 0.5 * x + std::sqrt(x + 0.25 * x * x);
      const double q = 1.0 / big;
      const double C = h * h * q / ((1.0 - q) * (1.0 + q));
      Eigen::VectorXd A = Eigen::VectorXd::Zero(n), B = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < n; ++k) A(k) = (k ? q * A(k - 1) : 0.0) + f.values(r, k);
      for (int k = n - 1; k >= 0; --k) B(k) = (k < n - 1 ? q * B(k + 1) : 0.0) + f.values(r, k);
      out.regular.row(r) = (C * (A + B - f.values.row(r).transpose())).transpose();
    }
    r += m.fiber_dim();
  }
  out.trace_plus.add(0.0, trace);
  return out;
}

Section asymptotic_trace(const std::vector<ModeOperator>& modes, const CompactSection& f) {
  return q0_apply(modes, f).trace_plus;
}

DualityResult duality_check(const std::vector<ModeOperator>& modes, const CompactSection& f, const Section& v) {
  const auto u = asymptotic_trace(modes, f);
  DualityResult d;
  d.pairing_value = pairing_closed(modes, u, v);
  // per-cell Simpson of <f, v>; exact for piecewise-linear f against linear v
  cplx acc = 0.0;
  for (int k = f.lo() + 1; k <= f.hi(); ++k) {
    const double ta = f.t(k - 1), tb = f.t(k), tm = 0.5 * (ta + tb);
    const Eigen::VectorXd fa = f.values.col(k - 1), fb = f.values.col(k), fm = 0.5 * (fa + fb);
    auto g = [&](const Eigen::VectorXd& fx, double t) { return v.eval(t).dot(fx.cast<cplx>()); };
    acc += f.h / 6.0 * (g(fa, ta) + 4.0 * g(fm, tm) + g(fb, tb));
  }
  d.l2_value = acc;
  d.residual = d.pairing_value - d.l2_value;
  return d;
}

NoRealRootsResult invertibility_no_real_roots(const std::vector<ModeOperator>& modes, const CompactSection& f) {
  double nu0 = std::numeric_limits<double>::infinity();
  for (const auto& m : modes) {
    if (m.is_zero_mode() || !(m.nu > 0.0)) throw ContractViolation("invertibility_no_real_roots: zero mode present");
    nu0 = std::min(nu0, m.nu);
  }
  NoRealRootsResult res;
  res.solution = q0_apply(modes, f);
  res.bound = 1.0 / nu0;
  const double fn = l2_norm(f.values, f.h);
  res.ratio_l2 = fn > 0.0 ? l2_norm(res.solution.regular, f.h) / fn : 0.0;
  res.sup_norm = res.solution.regular.size() ? res.solution.regular.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

Eigen::MatrixXd apply_discrete(const std::vector<ModeOperator>& modes, const Eigen::MatrixXd& u, double h) {
  const int n = static_cast<int>(u.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), n);
  int r = 0;
  for (const auto& m : modes) {
    for (int k = 1; k + 1 < n; ++k) {
      if (m.kind == ModeKind::Dirac) {
        out(r, k) = -(u(r + 1, k + 1) - u(r + 1, k - 1)) / (2 * h);
        out(r + 1, k) = (u(r, k + 1) - u(r, k - 1)) / (2 * h);
      } else {
        out(r, k) = (-u(r, k + 1) + 2 * u(r, k) - u(r, k - 1)) / (h * h) + m.nu * u(r, k);
      }
    }
    r += m.fiber_dim();
  }
  return out;
}

double relative_residual(const std::vector<ModeOperator>& modes, const CompactSection& f, const Eigen::MatrixXd& u) {
  const auto Pu = apply_discrete(modes, u, f.h);
  const int lo = f.lo(), w = f.hi() - lo + 1;
  const double fn = f.values.middleCols(lo, w).norm();
  const double rn = (Pu - f.values).middleCols(lo, w).norm();
  return fn > 0.0 ? rn / fn : rn;
}

double l2_norm(const Eigen::MatrixXd& u, double h) { return std::sqrt(h) * u.norm(); }

CompactSection random_smooth_section(const std::vector<ModeOperator>& modes, double S, double T, double h,
                                     SplitMix64& rng, int harmonics) {
  auto f = make_section(modes, S, T, h);
  for (int r = 0; r < f.values.rows(); ++r) {
    std::vector<double> amp(harmonics), phase(harmonics);
    for (int k = 0; k < harmonics; ++k) {
      amp[k] = rng.uniform(-1.0, 1.0) / (k + 1);
      phase[k] = rng.uniform(0.0, 2 * std::numbers::pi);
    }
    for (int k = f.lo(); k <= f.hi(); ++k) {
      const double x = f.t(k) / T, w = std::pow(1.0 - x * x, 3);
      double s = 0.0;
      for (int j = 0; j < harmonics; ++j) s += amp[j] * std::sin((j + 1) * std::numbers::pi * x + phase[j]);
      f.values(r, k) = w * s;
    }
  }
  return f;
}

double q0_norm_zero_mode(const ModeOperator& op, double T, double h, int iterations) {
  if (!op.is_zero_mode()) throw InvalidArgument("q0_norm_zero_mode: not a zero mode");
  const int n = 2 * grid_index(T, h, "T") + 1;
  auto t = [&](int k) { return -T + k * h; };
  // Matrix of the continuum scheme on the points of [-T, T]; the Dirac block is -J times
  // cumulative integration, and J is orthogonal, so one scalar row suffices.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const bool laplace = op.kind == ModeKind::Laplace;
  for (int k = 0; k < n; ++k)
    for (int c = 1; c <= k; ++c) {
      const double ta = t(c - 1), tb = t(c);
      double a = 0.5 * h, b = 0.5 * h;
      if (laplace) {
        a = -t(k) * a + h / 6.0 * (2 * ta + tb);
        b = -t(k) * b + h / 6.0 * (ta + 2 * tb);
      }
      M(k, c - 1) += a;
      M(k, c) += b;
    }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd y = M.transpose() * (M * x);
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    x = y / nrm;
    const double prev = sigma;
    sigma = std::sqrt(nrm);
    if (std::abs(sigma - prev) <= 1e-13 * sigma) break;
  }
  return sigma;
}

void write_q0_csv(const std::filesystem::path& file, const CompactSection& f, const NeckSolution& u) {
  std::ostringstream os;
  os << "t,mode_index,u_r,u_s\n";
  for (int k = 0; k < f.points(); ++k)
    for (int r = 0; r < u.regular.rows(); ++r)
      os << fmt(f.t(k)) << ',' << r << ',' << fmt(u.regular(r, k)) << ',' << fmt(u.singular(r, k)) << '\n';
  atomic_write(file, os.str());
}

}  // namespace neckspec
