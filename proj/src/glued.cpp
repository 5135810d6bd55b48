#include "neckspec/glued.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "neckspec/cutoff.hpp"

namespace neckspec {

namespace {

bool multiple_of(double x, double h) {
  const double k = x / h;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
}

double sample_value(const std::vector<std::pair<double, double>>& v, double s) {
  if (v.empty() || s > v.back().first) return 0.0;
  if (s <= v.front().first) return v.front().second;
  auto it = std::lower_bound(v.begin(), v.end(), s, [](const auto& p, double x) { return p.first < x; });
  const auto& [s1, v1] = *it;
  const auto& [s0, v0] = *(it - 1);
  return s1 == s0 ? v1 : v0 + (v1 - v0) * (s - s0) / (s1 - s0);
}

void fill_tridiag(SymTridiag& M, const Eigen::VectorXd& V, double nu, double h, Boundary left, Boundary right) {
  const int n = static_cast<int>(V.size());
  const double ih2 = 1.0 / (h * h);
  M.d = Eigen::VectorXd::Constant(n, 2.0 * ih2 + nu) + V;
  M.e = Eigen::VectorXd::Constant(std::max(n - 1, 0), -ih2);
  // ghost cells: Neumann u_{-1} = u_0, Dirichlet u_{-1} = -u_0
  M.d(0) += left == Boundary::Neumann ? -ih2 : ih2;
  M.d(n - 1) += right == Boundary::Neumann ? -ih2 : ih2;
}

}  // namespace

Eigen::VectorXd BuildingBlock::potential(int mode, double h, int n) const {
  Eigen::VectorXd V = Eigen::VectorXd::Zero(n);
  if (auto it = potentials.find(mode); it != potentials.end())
    for (int j = 0; j < n; ++j) V(j) = sample_value(it->second, (j + 0.5) * h);
  if (auto it = profiles.find(mode); it != profiles.end()) {
    const double c = it->second;
    auto sech = [this](double s) { return 1.0 / std::cosh(mu * s); };
    for (int j = 0; j < n; ++j) {
      const double s = (j + 0.5) * h;
      // second difference of the sech part only; the constant 1 would just add cancellation
      const double lap = c * (sech(s + h) - 2.0 * sech(s) + sech(s - h)) / (h * h);
      V(j) += lap / (1.0 + c * sech(s));
    }
  }
  return V;
}

void BuildingBlock::check_decay() const {
  if (!(mu > 0.0)) throw AnalysisError("block: decay rate mu must be positive");
  for (const auto& [mode, v] : potentials) {
    double A = 0.0;
    for (const auto& [s, val] : v)
      if (s >= L && s <= L + 1.0) A = std::max(A, std::abs(val) * std::exp(mu * (s - L)));
    if (A == 0.0)
      for (const auto& [s, val] : v)
        if (s >= L) {
          A = std::abs(val) * std::exp(mu * (s - L));
          break;
        }
    for (const auto& [s, val] : v)
      if (s >= L && std::abs(val) > A * std::exp(-mu * (s - L)) * (1.0 + 1e-9) + 1e-300)
        throw AnalysisError("block: potential of mode " + std::to_string(mode) + " does not decay at the declared rate");
  }
}

BuildingBlock parse_block(const std::string& json_text, std::shared_ptr<const CrossSectionSpectrum> spectrum) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("block: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("block: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "L" && it.key() != "boundary" && it.key() != "mu" && it.key() != "potentials" &&
        it.key() != "profiles")
      throw ParseError("block: unknown key '" + it.key() + "'");
  BuildingBlock b;
  b.spectrum = std::move(spectrum);
  if (!j.contains("L") || !j["L"].is_number() || !(j["L"].get<double>() >= 0.0))
    throw ParseError("block.L: missing or negative");
  b.L = j["L"].get<double>();
  if (!j.contains("boundary") || !j["boundary"].is_string()) throw ParseError("block.boundary: missing");
  const auto bc = j["boundary"].get<std::string>();
  if (bc == "neumann")
    b.boundary = Boundary::Neumann;
  else if (bc == "dirichlet")
    b.boundary = Boundary::Dirichlet;
  else
    throw ParseError("block.boundary: expected \"neumann\" or \"dirichlet\"");
  if (!j.contains("mu") || !j["mu"].is_number() || !(j["mu"].get<double>() > 0.0))
    throw ParseError("block.mu: missing or not positive");
  b.mu = j["mu"].get<double>();
  auto mode_key = [](const std::string& k, const std::string& where) {
    std::size_t pos = 0;
    int m = -1;
    try {
      m = std::stoi(k, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != k.size() || m < 0) throw ParseError(where + ": mode index '" + k + "' is not an integer >= 0");
    return m;
  };
  if (j.contains("potentials")) {
    if (!j["potentials"].is_object()) throw ParseError("block.potentials: expected an object");
    for (auto it = j["potentials"].begin(); it != j["potentials"].end(); ++it) {
      const std::string where = "block.potentials." + it.key();
      const int m = mode_key(it.key(), where);
      if (!it.value().is_array() || it.value().empty()) throw ParseError(where + ": expected [[s, V], ...]");
      std::vector<std::pair<double, double>> samples;
      for (const auto& e : it.value()) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
          throw ParseError(where + ": expected [s, V] pairs");
        samples.emplace_back(e[0].get<double>(), e[1].get<double>());
      }
      for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].first > samples[i - 1].first)) throw ParseError(where + ": s must be increasing");
      b.potentials[m] = samples;
    }
  }
  if (j.contains("profiles")) {
    if (!j["profiles"].is_object()) throw ParseError("block.profiles: expected an object");
    if (b.boundary != Boundary::Neumann) throw ParseError("block.profiles: only available with a Neumann end");
    for (auto it = j["profiles"].begin(); it != j["profiles"].end(); ++it) {
      const std::string where = "block.profiles." + it.key();
      const int m = mode_key(it.key(), where);
      if (!it.value().is_number() || !(it.value().get<double>() > -1.0))
        throw ParseError(where + ": amplitude must be a number > -1");
      b.profiles[m] = it.value().get<double>();
    }
  }
  try {
    b.check_decay();
  } catch (const AnalysisError& e) {
    throw ParseError(e.what());
  }
  return b;
}

int GluedOperator::cell_of(double x) const { return static_cast<int>(std::lround((x - a) / h - 0.5)); }

GluedOperator assemble(const BuildingBlock& block1, const BuildingBlock& block2, int q, double T, double h,
                       double cutoff) {
  if (!block1.spectrum || !block2.spectrum) throw InvalidArgument("assemble: block without a spectrum");
  if (block1.spectrum != block2.spectrum && !(*block1.spectrum == *block2.spectrum)) throw MatchingError();
  if (!(h > 0.0) || h > 1.0 / 16 + 1e-15) throw InvalidArgument("assemble: h must be in (0, 1/16]");
  if (T < 2.0) throw InvalidArgument("assemble: T must be >= 2");
  if (!multiple_of(T, h) || !multiple_of(block1.L, h) || !multiple_of(block2.L, h))
    throw InvalidArgument("assemble: T and L must be multiples of h");
  const auto& spec = *block1.spectrum;
  auto modes = mode_list(spec, q, cutoff);
  if (!spec.twist_is_identity())
    for (int m = 0; m < static_cast<int>(modes.size()); ++m)
      if (block1.has_perturbation(m) || block2.has_perturbation(m))
        throw Unsupported("assemble: a non-identity twist with mode-dependent block data is not supported");
  block1.check_decay();
  block2.check_decay();

  GluedOperator G;
  G.T = T;
  G.h = h;
  G.q = q;
  G.a = -T - 1.0 - block1.L;
  G.b = T + 1.0 + block2.L;
  G.block1 = block1;
  G.block2 = block2;
  const int n = G.points();
  Eigen::VectorXd fade1(n), fade2(n);
  for (int j = 0; j < n; ++j) {
    fade1(j) = 1.0 - chi(G.rho1(j) - T);
    fade2(j) = 1.0 - chi(G.rho2(j) - T);
  }
  for (int m = 0; m < static_cast<int>(modes.size()); ++m) {
    GluedMode gm;
    gm.op = modes[m];
    gm.index = m;
    gm.V = Eigen::VectorXd::Zero(n);
    if (block1.has_perturbation(m)) gm.V += block1.potential(m, h, n).cwiseProduct(fade1);
    if (block2.has_perturbation(m)) gm.V += block2.potential(m, h, n).reverse().cwiseProduct(fade2);
    fill_tridiag(gm.matrix, gm.V, modes[m].nu, h, block1.boundary, block2.boundary);
    G.modes.push_back(std::move(gm));
  }
  return G;
}

SymTridiag block_matrix(const BuildingBlock& block, const ModeOperator& op, int mode, double h, int n) {
  SymTridiag M;
  fill_tridiag(M, block.potential(mode, h, n), op.nu, h, block.boundary, Boundary::Dirichlet);
  return M;
}

int BlockKernelData::dim_bounded() const {
  return static_cast<int>(std::count_if(elements.begin(), elements.end(), [](const auto& e) { return e.bounded; }));
}

int BlockKernelData::dim_decaying() const {
  return static_cast<int>(std::count_if(elements.begin(), elements.end(), [](const auto& e) { return e.decaying; }));
}

BlockKernelData block_kernel(const BuildingBlock& block, const std::vector<ModeOperator>& modes, double h, double tol,
                             double reach) {
  if (!(tol > 0.0)) throw InvalidArgument("block_kernel: tol must be positive");
  const double R = block.L + std::max(10.0, 20.0 / block.mu);
  const int n_fit = static_cast<int>(std::lround(R / h));
  const int n = std::max(n_fit, static_cast<int>(std::ceil(std::max(reach, R) / h)));
  const int w = static_cast<int>(std::lround(2.0 / h));
  BlockKernelData out;
  for (int m = 0; m < static_cast<int>(modes.size()); ++m) {
    if (!modes[m].is_zero_mode()) {
      out.positive_modes.push_back(m);
      continue;
    }
    if (modes[m].kind != ModeKind::Laplace) throw Unsupported("block_kernel: Laplace-type blocks only");
    const Eigen::VectorXd V = block.potential(m, h, n);
    KernelElement k;
    k.mode = m;
    k.samples.resize(n);
    // u_{j+1} = 2 u_j - u_{j-1} + h^2 V_j u_j, ghost from the boundary condition
    double prev = block.boundary == Boundary::Neumann ? 1.0 : -0.5 * h;
    double cur = block.boundary == Boundary::Neumann ? 1.0 : 0.5 * h;
    for (int j = 0; j < n; ++j) {
      k.samples(j) = cur;
      const double next = 2.0 * cur - prev + h * h * V(j) * cur;
      prev = cur;
      cur = next;
    }
    // least-squares a + b rho on the last 2 units before R
    Eigen::MatrixXd X(w, 2);
    Eigen::VectorXd y(w);
    for (int i = 0; i < w; ++i) {
      const int j = n_fit - w + i;
      X(i, 0) = 1.0;
      X(i, 1) = (j + 0.5) * h - block.L;
      y(i) = k.samples(j);
    }
    const Eigen::Vector2d ab = X.colPivHouseholderQr().solve(y);
    k.a = ab(0);
    k.b = ab(1);
    k.scale = y.cwiseAbs().maxCoeff();
    const double fit_err = (X * ab - y).cwiseAbs().maxCoeff();
    if (fit_err > tol * k.scale)
      throw AnalysisError("block_kernel: mode " + std::to_string(m) + " is not asymptotically linear (fit residual " +
                          std::to_string(fit_err / k.scale) + ")");
    k.bounded = std::abs(k.b) <= tol * k.scale;
    k.decaying = k.bounded && std::abs(k.a) <= tol * k.scale;
    out.elements.push_back(std::move(k));
  }
  return out;
}

EigenList eigen_lowest(const GluedOperator& G, int k) {
  if (k < 1) throw InvalidArgument("eigen_lowest: k must be >= 1");
  EigenList out;
  for (const auto& m : G.modes) {
    if (k > m.matrix.size()) out.clipped = true;
    const auto ev = m.matrix.lowest(k);
    for (int i = 0; i < static_cast<int>(ev.size()); ++i) out.values.push_back({ev[i], m.op.nu, m.op.tag, m.index, i});
  }
  std::stable_sort(out.values.begin(), out.values.end(),
                   [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
  return out;
}

}  // namespace neckspec
