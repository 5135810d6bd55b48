#include "neckspec/density.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numbers>

#include "neckspec/csv.hpp"

namespace neckspec {

namespace {

constexpr double pi = std::numbers::pi;

double window_of(double s, double T) { return pi * pi * s / (T * T); }

// closed window up to rounding
bool in_window(double lambda, double w) { return lambda > kZeroThreshold && lambda <= w * (1.0 + 1e-12); }

}  // namespace

EigenList window_eigenvalues(const GluedOperator& G, double s_max) {
  const double w = window_of(s_max, G.T);
  EigenList out;
  for (const auto& m : G.modes) {
    const int k = m.matrix.count_below(w * (1.0 + 1e-9));
    const auto ev = m.matrix.lowest(k + 1);
    for (int i = 0; i < static_cast<int>(ev.size()); ++i) out.values.push_back({ev[i], m.op.nu, m.op.tag, m.index, i});
  }
  std::stable_sort(out.values.begin(), out.values.end(),
                   [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
  return out;
}

namespace {
void check_coverage(const GluedOperator& G, const EigenList& ev, double w) {
  std::map<int, std::pair<int, double>> seen;  // mode -> (count, max)
  for (const auto& e : ev.values) {
    auto& [c, mx] = seen[e.mode];
    ++c;
    mx = c == 1 ? e.lambda : std::max(mx, e.lambda);
  }
  for (const auto& m : G.modes) {
    auto it = seen.find(m.index);
    const bool complete = it != seen.end() && it->second.first >= m.matrix.size();
    const bool covers = it != seen.end() && it->second.second > w;
    if (!complete && !covers)
      throw InsufficientEigenvalues("count_low_eigenvalues: eigenvalue list of mode " + std::to_string(m.index) +
                                    " does not cover the window");
  }
}
}  // namespace

int count_low_eigenvalues(const GluedOperator& G, const EigenList& ev, double s) {
  const double w = window_of(s, G.T);
  check_coverage(G, ev, w);
  return static_cast<int>(std::count_if(ev.values.begin(), ev.values.end(),
                                        [&](const auto& e) { return in_window(e.lambda, w); }));
}

int count_low_eigenvalues(const GluedOperator& G, double s) {
  return count_low_eigenvalues(G, window_eigenvalues(G, s), s);
}

BranchCounts coexact_split_counts(const GluedOperator& G, const EigenList& ev, double s) {
  const double w = window_of(s, G.T);
  check_coverage(G, ev, w);
  BranchCounts b;
  for (const auto& e : ev.values)
    if (in_window(e.lambda, w)) (e.tag == DegreeTag::beta ? b.exact : b.coexact)++;
  return b;
}

double DensityReport::max_abs_residual(const std::string& branch) const {
  double m = 0.0;
  for (const auto& r : rows)
    if (r.branch == branch) m = std::max(m, std::abs(r.residual));
  return m;
}

DensityReport density_sweep(const OperatorBuilder& build, int q, const std::vector<double>& s_list,
                            const std::vector<double>& T_list, int threads) {
  if (s_list.empty() || T_list.empty()) throw InvalidArgument("density_sweep: empty s or T list");
  const double s_max = *std::max_element(s_list.begin(), s_list.end());
  auto one = [&](double T) {
    const GluedOperator G = build(T);
    const auto ev = window_eigenvalues(G, s_max);
    std::vector<DensityRow> rows;
    const auto& spec = *G.block1.spectrum;
    const int blo = q >= 1 ? spec.betti(q - 1) : 0, bhi = spec.betti(q);
    for (double s : s_list) {
      const int c = count_low_eigenvalues(G, ev, s);
      const auto br = coexact_split_counts(G, ev, s);
      const double rs = std::sqrt(s);
      rows.push_back({q, T, s, c, 2.0 * (blo + bhi) * rs, c - 2.0 * (blo + bhi) * rs, "total"});
      rows.push_back({q, T, s, br.exact, 2.0 * blo * rs, br.exact - 2.0 * blo * rs, "exact"});
      rows.push_back({q, T, s, br.coexact, 2.0 * bhi * rs, br.coexact - 2.0 * bhi * rs, "coexact"});
    }
    return std::make_tuple(rows, blo, bhi);
  };
  const int workers = threads <= 0 ? static_cast<int>(T_list.size()) : threads;
  std::vector<std::tuple<std::vector<DensityRow>, int, int>> results(T_list.size());
  for (std::size_t start = 0; start < T_list.size(); start += workers) {
    std::vector<std::future<std::tuple<std::vector<DensityRow>, int, int>>> fut;
    for (std::size_t i = start; i < std::min(T_list.size(), start + workers); ++i)
      fut.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, one, T_list[i]));
    for (std::size_t i = 0; i < fut.size(); ++i) results[start + i] = fut[i].get();
  }
  DensityReport rep;
  rep.q = q;
  for (auto& [rows, blo, bhi] : results) {
    rep.betti_lo = blo;
    rep.betti_hi = bhi;
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  return rep;
}

void write_density_csv(const std::filesystem::path& file, const DensityReport& r) {
  std::string s = "q,T,s,count,prediction,residual,branch\n";
  for (const auto& row : r.rows)
    s += std::to_string(row.q) + "," + fmt(row.T) + "," + fmt(row.s) + "," + std::to_string(row.count) + "," +
         fmt(row.prediction) + "," + fmt(row.residual) + "," + row.branch + "\n";
  atomic_write(file, s);
}

std::vector<double> product_eigenvalues(const CrossSectionSpectrum& spec, int q, double T, double s) {
  if (!(T > 0.0) || !(s > 0.0)) throw InvalidArgument("product_eigenvalues: T and s must be positive");
  const double w = window_of(s, T);
  std::vector<double> out;
  for (const auto& m : mode_list(spec, q, w)) {
    const int kmax = static_cast<int>(std::floor(T * std::sqrt(w) / pi)) + 1;
    for (int k = -kmax; k <= kmax; ++k) {
      const double lam = std::pow(k * pi / T, 2) + m.nu;
      if (lam > 0.0 && lam <= w * (1.0 + 1e-12)) out.push_back(lam);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int product_benchmark(const CrossSectionSpectrum& spec, int q, double T, double s) {
  return static_cast<int>(product_eigenvalues(spec, q, T, s).size());
}

int TestSpace::constraint_rank() const {
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(constraints);
  lu.setThreshold(1e-12);
  return static_cast<int>(lu.rank());
}

TestSpace make_test_space(TestSpaceKind kind, int n, int K) {
  if (n < 2) throw InvalidArgument("make_test_space: n must be >= 2");
  if (K < n || (kind == TestSpaceKind::VnPrime && K < n + 2))
    throw InvalidArgument("make_test_space: truncation order too small");
  const int N = 2 * K + 1;
  auto idx = [K](int k) { return k + K; };
  auto sgn = [](int k) { return (k % 2 == 0) ? 1.0 : -1.0; };
  std::vector<Eigen::RowVectorXcd> rows;
  auto unit = [&](int k) {
    Eigen::RowVectorXcd r = Eigen::RowVectorXcd::Zero(N);
    r(idx(k)) = 1.0;
    rows.push_back(r);
  };
  auto weighted = [&](auto weight) {
    Eigen::RowVectorXcd r = Eigen::RowVectorXcd::Zero(N);
    for (int k = -K; k <= K; ++k)
      if (k != 0) r(idx(k)) = sgn(k) * weight(k);
    rows.push_back(r);
  };
  const bool polyn = kind == TestSpaceKind::Vn || kind == TestSpaceKind::Wn;
  unit(0);
  if (polyn) {
    for (int k = n + 1; k <= K; ++k) {
      unit(k);
      unit(-k);
    }
    weighted([](int) { return 1.0; });
    weighted([](int k) { return double(k); });
    if (kind == TestSpaceKind::Wn) weighted([](int k) { return double(k) * k; });
  } else {
    weighted([](int k) { return 1.0 / k; });
    weighted([](int k) { return 1.0 / (double(k) * k); });
    if (kind == TestSpaceKind::VnPrime)
      for (int k = 1; k <= n; ++k) {
        unit(k);
        unit(-k);
      }
  }
  TestSpace S{kind, n, K, Eigen::MatrixXcd(static_cast<int>(rows.size()), N), Eigen::MatrixXcd()};
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) S.constraints.row(i) = rows[i];
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(S.constraints);
  lu.setThreshold(1e-12);
  S.basis = lu.kernel();
  if (lu.rank() == N) S.basis.resize(N, 0);
  return S;
}

bool satisfies(const TestSpace& S, const Eigen::VectorXcd& a, double tol) {
  return (S.constraints * a).norm() <= tol * std::max(1.0, a.norm());
}

std::vector<std::function<double(double)>> real_Vn_basis(int n) {
  if (n < 2) throw InvalidArgument("real_Vn_basis: n must be >= 2");
  std::vector<std::function<double(double)>> out;
  for (int k = 2; k <= n; ++k) {
    const double s = (k % 2 == 0) ? 1.0 : -1.0;  // (-1)^k
    // values at +-1 cancel against cos(pi x); slopes vanish automatically
    out.push_back([k, s](double x) { return std::cos(k * pi * x) + s * std::cos(pi * x); });
    // slopes at +-1 cancel against k sin(pi x); values vanish automatically
    out.push_back([k, s](double x) { return std::sin(k * pi * x) + s * k * std::sin(pi * x); });
  }
  return out;
}

MinMaxResult minmax_upper_from_Vn(const GluedOperator& G, int n, double tau) {
  const auto basis = real_Vn_basis(n);
  const int d = static_cast<int>(basis.size());
  const int N = G.points();
  const double scale = (1.0 - tau) * G.T;
  MinMaxResult out;
  out.bound = std::pow(n * pi / G.T, 2);
  int zero_modes = 0;
  for (const auto& m : G.modes) {
    if (!m.op.is_zero_mode()) continue;
    ++zero_modes;
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(N, d);
    for (int j = 0; j < N; ++j) {
      const double x = G.t(j) / scale;
      if (std::abs(x) < 1.0)
        for (int i = 0; i < d; ++i) Phi(j, i) = basis[i](x);
    }
    Eigen::MatrixXd APhi(N, d);
    for (int i = 0; i < d; ++i) APhi.col(i) = m.matrix.apply(Phi.col(i));
    const Eigen::MatrixXd K = Phi.transpose() * APhi, M = Phi.transpose() * Phi;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ms(M);
    if (ms.eigenvalues().minCoeff() <= 1e-10 * ms.eigenvalues().maxCoeff())
      throw AnalysisError("minmax_upper_from_Vn: trial space degenerate on this grid (h too coarse)");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gs(0.5 * (K + K.transpose()), M);
    out.rayleigh_max = std::max(out.rayleigh_max, gs.eigenvalues().maxCoeff());
  }
  out.trial_dim = d * zero_modes;
  for (const auto& m : G.modes) {
    out.count_below += m.matrix.count_below(out.rayleigh_max * (1.0 + 1e-12));
    out.count_nonzero += m.matrix.count_below(out.rayleigh_max * (1.0 + 1e-12)) - m.matrix.count_below(kZeroThreshold);
  }
  return out;
}

HCheck h_operator_check(const Eigen::VectorXcd& a, double T, double h) {
  const int K = static_cast<int>(a.size() - 1) / 2;
  if (a.size() != 2 * K + 1) throw InvalidArgument("h_operator_check: coefficient vector must have odd length");
  const auto E = make_test_space(TestSpaceKind::E, 2, std::max(K, 2));
  Eigen::VectorXcd ap = Eigen::VectorXcd::Zero(2 * std::max(K, 2) + 1);
  ap.segment(std::max(K, 2) - K, 2 * K + 1) = a;
  if (!satisfies(E, ap, 1e-10)) throw InvalidArgument("h_operator_check: coefficients are not in E");
  auto f = [&](double t) {
    std::complex<double> v = 0.0;
    for (int k = -K; k <= K; ++k) v += a(k + K) * std::exp(std::complex<double>(0.0, k * pi * t / T));
    return v;
  };
  auto closed = [&](double t) {
    std::complex<double> v = 0.0;
    for (int k = -K; k <= K; ++k)
      if (k != 0) v += a(k + K) / double(k * k) * std::exp(std::complex<double>(0.0, k * pi * t / T));
    return T * T / (pi * pi) * v;
  };
  // 4-point Gauss-Legendre per cell for I0 = int f, I1 = int tau f from -T
  const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  const int cells = static_cast<int>(std::lround((2.0 * T + 1.0) / h));
  std::complex<double> I0 = 0.0, I1 = 0.0;
  HCheck out;
  double f2 = 0.0, h2 = 0.0;
  const int inner_cells = static_cast<int>(std::lround(2.0 * T / h));
  for (int c = 0; c <= cells; ++c) {
    const double t = -T + c * h;
    const auto H = I1 - t * I0;
    if (c <= inner_cells) {
      out.max_deviation = std::max(out.max_deviation, std::abs(H - closed(t)));
      const double wt = (c == 0 || c == inner_cells) ? 0.5 * h : h;
      f2 += wt * std::norm(f(t));
      h2 += wt * std::norm(H);
    } else {
      out.tail = std::max(out.tail, std::abs(H));
    }
    for (int g = 0; g < 4; ++g) {
      const double x = t + 0.5 * h * (1.0 + gx[g]);
      const auto fx = x <= T ? f(x) : std::complex<double>(0.0);  // f_T is cut off at T
      I0 += 0.5 * h * gw[g] * fx;
      I1 += 0.5 * h * gw[g] * x * fx;
    }
  }
  out.f_norm = std::sqrt(f2);
  out.h_norm = std::sqrt(h2);
  return out;
}

Lambda1Bounds scalar_lambda1_bounds(const GluedOperator& G) {
  Lambda1Bounds out;
  out.lambda1 = std::numeric_limits<double>::infinity();
  for (const auto& m : G.modes) {
    const int z = m.matrix.count_below(kZeroThreshold);
    const auto ev = m.matrix.lowest(z + 1);
    if (static_cast<int>(ev.size()) > z) out.lambda1 = std::min(out.lambda1, ev[z]);
  }
  const GluedMode* zm = nullptr;
  for (const auto& m : G.modes)
    if (m.op.is_zero_mode()) zm = zm ? throw InvalidArgument("scalar_lambda1_bounds: more than one zero mode") : &m;
  if (!zm) throw InvalidArgument("scalar_lambda1_bounds: no zero mode");
  const int n = G.points();
  Eigen::VectorXd u(n);
  for (int j = 0; j < n; ++j) u(j) = std::clamp(G.t(j) / G.T, -1.0, 1.0);
  u.array() -= u.mean();
  out.rayleigh = u.dot(zm->matrix.apply(u)) / u.squaredNorm();
  return out;
}

std::vector<double> kernel_angles(const GluedOperator& G, const GluingSetup& S) {
  const int d = S.dim_kernel();
  if (d == 0) return {};
  std::vector<TaggedEigenvalue> low;
  for (const auto& m : G.modes) {
    const auto ev = m.matrix.lowest(d);
    for (int i = 0; i < static_cast<int>(ev.size()); ++i) low.push_back({ev[i], m.op.nu, m.op.tag, m.index, i});
  }
  std::sort(low.begin(), low.end(), [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
  const int rows = static_cast<int>(G.modes.size()), n = G.points();
  Eigen::MatrixXd Q(rows * n, d), E(rows * n, d);
  for (int i = 0; i < d; ++i) {
    Q.col(i) = Eigen::Map<const Eigen::VectorXd>(S.kernel[i].data(), rows * n) * std::sqrt(G.h);
    Field v = zero_field(G);
    // a repeated eigenvalue within one mode would need a block solver; one kernel element per mode here
    const auto& M = G.modes[low[i].mode].matrix;
    v.row(low[i].mode) = M.eigenvector(low[i].lambda, 6).transpose();
    E.col(i) = Eigen::Map<const Eigen::VectorXd>(v.data(), rows * n);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qe(E);
  const Eigen::MatrixXd Eo = qe.householderQ() * Eigen::MatrixXd::Identity(rows * n, d);
  const Eigen::MatrixXd R = Eo - Q * (Q.transpose() * Eo);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  std::vector<double> out(svd.singularValues().data(), svd.singularValues().data() + d);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace neckspec
