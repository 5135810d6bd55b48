#include "neckspec/gluing.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "neckspec/csv.hpp"
#include "neckspec/cutoff.hpp"
#include "neckspec/polyhom.hpp"

namespace neckspec {

namespace {

// zeta_tau: 1 on [-T - 1/2 + tau + 1/2, T + 1/2 - tau - 1/2], 0 outside [-T - 1 + tau, T + 1 - tau]
double zeta(double t, double T, double tau) { return chi(t + T + 0.5 - tau) * chi(T + 0.5 - tau - t); }

const Eigen::VectorXd& samples_checked(const KernelElement& k, int need) {
  if (k.samples.size() < need) throw AnalysisError("gluing: block kernel samples do not reach the neck");
  return k.samples;
}

// Exact inverse of -D_h^2 + nu on the infinite lattice. Zero modes: the solution vanishing to the left.
Eigen::VectorXd lattice_q0(const GluedOperator& G, const Eigen::VectorXd& f, double nu) {
  const int n = static_cast<int>(f.size());
  const double h = G.h;
  Eigen::VectorXd u(n);
  if (nu == 0.0) {
    double S0 = 0.0, S1 = 0.0;
    for (int j = 0; j < n; ++j) {
      u(j) = -G.t(j) * S0 + S1;
      S0 += h * f(j);
      S1 += h * G.t(j) * f(j);
    }
    return u;
  }
  // r + 1/r = 2 + nu h^2, written to avoid cancellation for small nu h^2
  const double x = 0.5 * nu * h * h;
  const double r = 1.0 / (1.0 + x + std::sqrt(x * (2.0 + x)));
  const double C = h * h * r / ((1.0 - r) * (1.0 + r));
  Eigen::VectorXd L(n), R(n);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) L(j) = acc = f(j) + r * acc;
  acc = 0.0;
  for (int j = n - 1; j >= 0; --j) {
    R(j) = acc;
    acc = r * (f(j) + acc);
  }
  return C * (L + R);
}

struct Stage {
  Eigen::VectorXd U, F;
};

// U = zeta_0 (Q0 zeta_1 f + v), F = f - A U
Stage stage(const GluedOperator& G, int m, const Eigen::VectorXd& f, double e0, double e1) {
  const int n = G.points();
  const auto& M = G.modes[m];
  Eigen::VectorXd f0(n);
  for (int j = 0; j < n; ++j) f0(j) = zeta(G.t(j), G.T, 1.0) * f(j);
  Eigen::VectorXd u0 = lattice_q0(G, f0, M.op.nu);
  Stage s;
  s.U.resize(n);
  for (int j = 0; j < n; ++j) s.U(j) = zeta(G.t(j), G.T, 0.0) * (u0(j) + e0 + e1 * G.t(j));
  s.F = f - M.matrix.apply(s.U);
  return s;
}

struct PairNorms {
  double n1, n2;
};

PairNorms faded_norms(const GluedOperator& G, const MatchingPair& p) {
  const int n = G.points();
  const auto& g1 = samples_checked(p.u1, G.cell_of(0.5) + 2);
  const auto& g2 = samples_checked(p.u2, n - G.cell_of(-0.5) + 1);
  double s1 = 0.0, s2 = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = chi(G.t(j));
    if (x < 1.0) s1 += std::pow((1.0 - x) * g1(j), 2);
    if (x > 0.0) s2 += std::pow(x * g2(n - 1 - j), 2);
  }
  return {std::sqrt(G.h * s1), std::sqrt(G.h * s2)};
}

// <(1 - chi) F, g1>, <chi F, g2>, each divided by the norm of the faded g_i
Eigen::Vector2d obstruction(const GluedOperator& G, const MatchingPair& p, const Eigen::VectorXd& F) {
  const int n = G.points();
  const auto& g1 = p.u1.samples;
  const auto& g2 = p.u2.samples;
  double o1 = 0.0, o2 = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = chi(G.t(j));
    if (x < 1.0) o1 += (1.0 - x) * F(j) * g1(j);
    if (x > 0.0) o2 += x * F(j) * g2(n - 1 - j);
  }
  const auto N = faded_norms(G, p);
  return {G.h * o1 / N.n1, G.h * o2 / N.n2};
}

// Block cells needed for the zero-mode solve: up to rho = T + 5/2 plus a margin.
int zero_block_cells(const GluedOperator& G, const BuildingBlock& B) {
  return static_cast<int>(std::ceil((B.L + G.T + 2.5) / G.h)) + 2;
}

// Half-line solve of block `which` for the side load Fside (glued ordering).
// Returns the block solution in glued ordering, zero past the block's reach.
Eigen::VectorXd solve_block(const GluedOperator& G, int which, int m, const Eigen::VectorXd& Fside,
                            const MatchingPair* pair) {
  const int n = G.points();
  const double h = G.h;
  const BuildingBlock& B = which == 1 ? G.block1 : G.block2;
  const auto& op = G.modes[m].op;
  auto to_block = [&](int j) { return which == 1 ? j : n - 1 - j; };
  Eigen::VectorXd w;
  if (op.is_zero_mode()) {
    const int nb = zero_block_cells(G, B);
    const Eigen::VectorXd V = B.potential(m, h, nb);
    Eigen::VectorXd fb = Eigen::VectorXd::Zero(nb);
    for (int j = 0; j < n; ++j)
      if (to_block(j) < nb) fb(to_block(j)) = Fside(j);
    w.resize(nb);
    // zero start is compatible with either boundary row
    double prev = 0.0, cur = 0.0;
    for (int k = 0; k < nb; ++k) {
      w(k) = cur;
      const double next = 2.0 * cur - prev + h * h * (V(k) * cur - fb(k));
      prev = cur;
      cur = next;
    }
    // add c g so that w vanishes on rho in [T + 3/2, T + 5/2], where the cutoff sigma_i turns off
    const auto& g = samples_checked(which == 1 ? pair->u1 : pair->u2, nb);
    double wg = 0.0, gg = 0.0;
    for (int k = 0; k < nb; ++k) {
      const double rho = (k + 0.5) * h - B.L;
      if (rho >= G.T + 1.5 && rho <= G.T + 2.5) {
        wg += w(k) * g(k);
        gg += g(k) * g(k);
      }
    }
    const double c = gg > 0.0 ? -wg / gg : 0.0;
    w += c * g.head(nb);
  } else {
    const double far = B.L + G.T + 1.5 + std::max(8.0, 36.0 / std::sqrt(op.nu));
    const int nb = static_cast<int>(std::ceil(far / h));
    Eigen::VectorXd fb = Eigen::VectorXd::Zero(nb);
    for (int j = 0; j < n; ++j)
      if (to_block(j) < nb) fb(to_block(j)) = Fside(j);
    w = block_matrix(B, op, m, h, nb).solve(fb);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    if (to_block(j) < w.size()) out(j) = w(to_block(j));
  return out;
}

const MatchingPair* pair_of(const GluingSetup& S, int m) {
  for (const auto& p : S.pairs)
    if (p.mode == m) return &p;
  return nullptr;
}

}  // namespace

Field zero_field(const GluedOperator& G) { return Field::Zero(static_cast<int>(G.modes.size()), G.points()); }

double inner(const Field& u, const Field& v, double h) { return h * u.cwiseProduct(v).sum(); }

double norm(const Field& u, double h) { return std::sqrt(h) * u.norm(); }

Field apply(const GluedOperator& G, const Field& u) {
  Field out(u.rows(), u.cols());
  for (int m = 0; m < static_cast<int>(G.modes.size()); ++m)
    out.row(m) = G.modes[m].matrix.apply(u.row(m).transpose()).transpose();
  return out;
}

std::vector<MatchingPair> substitute_kernel(const GluedOperator& G, const BlockKernelData& k1,
                                            const BlockKernelData& k2, double tol) {
  std::vector<MatchingPair> out;
  const int n = G.points();
  for (const auto& e1 : k1.elements) {
    auto it = std::find_if(k2.elements.begin(), k2.elements.end(), [&](const auto& e) { return e.mode == e1.mode; });
    if (it == k2.elements.end()) throw AnalysisError("substitute_kernel: zero mode missing from block 2 data");
    MatchingPair p;
    p.mode = e1.mode;
    p.u1 = e1;
    p.u2 = *it;
    const double g1 = e1.a + e1.b * (G.T + 1.0);
    const double g2 = it->a + it->b * (G.T + 1.0);
    // c1 (g1 + b1 t) = c2 (g2 - b2 t)
    Eigen::Matrix2d M;
    M << g1, -g2, e1.b, it->b;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(M, Eigen::ComputeFullV);
    Eigen::Vector2d c = svd.matrixV().col(1);
    if (c(0) + c(1) < 0.0) c = -c;
    p.c1 = c(0);
    p.c2 = c(1);
    p.matched_at_T = std::abs(M.determinant()) <= tol * M.squaredNorm();
    p.p0 = p.c1 * g1;
    p.p1 = p.c1 * e1.b;
    const auto& s1 = samples_checked(p.u1, G.cell_of(0.5) + 2);
    const auto& s2 = samples_checked(p.u2, n - G.cell_of(-0.5) + 1);
    p.glued_section.resize(n);
    for (int j = 0; j < n; ++j) {
      const double x = chi(G.t(j));
      double v = 0.0;
      if (x < 1.0) v += (1.0 - x) * p.c1 * s1(j);
      if (x > 0.0) v += x * p.c2 * s2(n - 1 - j);
      p.glued_section(j) = v;
    }
    out.push_back(std::move(p));
  }
  return out;
}

double approx_residual(const GluedOperator& G, const MatchingPair& p) {
  const auto r = G.modes[p.mode].matrix.apply(p.glued_section);
  const auto N = faded_norms(G, p);
  return std::sqrt(G.h) * r.norm() / (std::abs(p.c1) * N.n1 + std::abs(p.c2) * N.n2);
}

GluingSetup prepare_gluing(const GluedOperator& G, double tol) {
  std::vector<ModeOperator> ops;
  for (const auto& m : G.modes) ops.push_back(m.op);
  for (const auto& op : ops)
    if (op.kind != ModeKind::Laplace) throw Unsupported("gluing: Laplace-type modes only");
  GluingSetup S;
  S.block1 = block_kernel(G.block1, ops, G.h, tol, G.block1.L + G.T + 4.0);
  S.block2 = block_kernel(G.block2, ops, G.h, tol, G.block2.L + G.T + 4.0);
  S.pairs = substitute_kernel(G, S.block1, S.block2, tol);
  for (const auto& p : S.pairs) {
    if (!p.matched_at_T) continue;
    Field k = zero_field(G);
    k.row(p.mode) = p.glued_section.transpose();
    for (const auto& q : S.kernel) k -= inner(k, q, G.h) * q;
    const double nk = norm(k, G.h);
    if (nk > 0.0) S.kernel.push_back(k / nk);
  }
  return S;
}

Field project_kernel(const GluingSetup& S, const Field& f, double h) {
  Field out = Field::Zero(f.rows(), f.cols());
  for (const auto& q : S.kernel) out += inner(f, q, h) * q;
  return out;
}

CharacteristicSystem characteristic_system(const GluedOperator& G, const GluingSetup& S, const Field& f) {
  CharacteristicSystem sys;
  std::vector<Eigen::VectorXd> cols;
  std::vector<double> rhs;
  const int rows = 2 * static_cast<int>(S.pairs.size());
  int r = 0;
  for (const auto& p : S.pairs) {
    std::vector<Eigen::Vector2d> basis;
    if (p.matched_at_T) {
      // Euclidean complement of the matched trace
      Eigen::Vector2d e(-p.p1, p.p0);
      basis.push_back(e.normalized());
    } else {
      basis.push_back(Eigen::Vector2d(1.0, 0.0));
      basis.push_back(Eigen::Vector2d(0.0, 1.0));
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(G.points());
    for (const auto& e : basis) {
      Eigen::VectorXd col = Eigen::VectorXd::Zero(rows);
      col.segment<2>(r) = obstruction(G, p, stage(G, p.mode, zero, e(0), e(1)).F);
      cols.push_back(col);
      sys.column_mode.push_back(p.mode);
      sys.column_basis.push_back(e);
    }
    const Eigen::Vector2d b = -obstruction(G, p, stage(G, p.mode, f.row(p.mode).transpose(), 0.0, 0.0).F);
    rhs.push_back(b(0));
    rhs.push_back(b(1));
    sys.row_mode.push_back(p.mode);
    sys.row_mode.push_back(p.mode);
    r += 2;
  }
  sys.matrix.resize(rows, static_cast<int>(cols.size()));
  for (int k = 0; k < static_cast<int>(cols.size()); ++k) sys.matrix.col(k) = cols[k];
  sys.rhs = Eigen::Map<Eigen::VectorXd>(rhs.data(), rows);
  if (sys.matrix.cols() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.matrix);
    qr.setThreshold(1e-10);
    sys.rank = static_cast<int>(qr.rank());
  }
  return sys;
}

CharacteristicSolution characteristic_solve(const GluedOperator& G, const GluingSetup& S, const Field& f) {
  CharacteristicSolution out;
  out.system = characteristic_system(G, S, f);
  const auto& sys = out.system;
  out.v.assign(G.modes.size(), Eigen::Vector2d::Zero());
  if (sys.matrix.cols() == 0) return out;
  if (sys.rank < sys.matrix.cols())
    throw DegenerateT("characteristic system: rank " + std::to_string(sys.rank) + " below " +
                      std::to_string(sys.matrix.cols()) + " at T = " + fmt(G.T));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.matrix);
  qr.setThreshold(1e-10);
  out.coeffs = qr.solve(sys.rhs);
  out.consistency = (sys.matrix * out.coeffs - sys.rhs).norm();
  for (int k = 0; k < static_cast<int>(out.coeffs.size()); ++k)
    out.v[sys.column_mode[k]] += out.coeffs(k) * sys.column_basis[k];
  return out;
}

std::string dump(const CharacteristicSystem& sys) {
  std::ostringstream os;
  os << "# rows " << sys.matrix.rows() << " cols " << sys.matrix.cols() << " rank " << sys.rank << "\n";
  for (int i = 0; i < sys.matrix.rows(); ++i) {
    for (int k = 0; k < sys.matrix.cols(); ++k) os << fmt(sys.matrix(i, k)) << ' ';
    os << "| " << fmt(sys.rhs(i)) << '\n';
  }
  return os.str();
}

ApproxResult approx_solve(const GluedOperator& G, const GluingSetup& S, const Field& f, double tol) {
  const double fn = norm(f, G.h);
  const auto cs = characteristic_solve(G, S, f);
  ApproxResult out;
  out.consistency = cs.consistency;
  if (cs.consistency > tol * fn)
    throw NotOrthogonal("approx_solve: characteristic system inconsistent (" + fmt(cs.consistency / fn) +
                        " relative); f is not orthogonal to the substitute cokernel");
  const int n = G.points();
  out.u = zero_field(G);
  out.obstruction_before.assign(G.modes.size(), Eigen::Vector2d::Zero());
  out.obstruction_after.assign(G.modes.size(), Eigen::Vector2d::Zero());
  for (int m = 0; m < static_cast<int>(G.modes.size()); ++m) {
    const Eigen::VectorXd fm = f.row(m).transpose();
    const MatchingPair* p = pair_of(S, m);
    if (p) out.obstruction_before[m] = obstruction(G, *p, stage(G, m, fm, 0.0, 0.0).F);
    const Stage s = stage(G, m, fm, cs.v[m](0), cs.v[m](1));
    if (p) out.obstruction_after[m] = obstruction(G, *p, s.F);
    Eigen::VectorXd f1(n), f2(n);
    for (int j = 0; j < n; ++j) {
      const double x = chi(G.t(j));
      f1(j) = (1.0 - x) * s.F(j);
      f2(j) = x * s.F(j);
    }
    const Eigen::VectorXd w1 = solve_block(G, 1, m, f1, p);
    const Eigen::VectorXd w2 = solve_block(G, 2, m, f2, p);
    for (int j = 0; j < n; ++j) {
      const double t = G.t(j);
      out.u(m, j) = s.U(j) + (1.0 - chi(t - 1.0)) * w1(j) + chi(t + 1.0) * w2(j);
    }
  }
  out.error = f - apply(G, out.u);
  return out;
}

SolveReport solve_exact(const GluedOperator& G, const GluingSetup& S, const Field& f, int max_iter, double tol,
                        double consistency_tol) {
  const double h = G.h;
  const double fn = norm(f, h);
  SolveReport rep;
  rep.u = zero_field(G);
  rep.w = zero_field(G);
  Field fk = f;
  double prev = fn;
  for (int it = 0; it < max_iter; ++it) {
    if (prev <= tol * fn) break;
    const Field wk = project_kernel(S, fk, h);
    const Field g = fk - wk;
    Field uk = zero_field(G);
    if (norm(g, h) > tol * fn) {
      uk = approx_solve(G, S, g, consistency_tol).u;
      uk -= project_kernel(S, uk, h);
    }
    fk = fk - apply(G, uk) - wk;
    rep.u += uk;
    rep.w += wk;
    const double cur = norm(fk, h);
    const double eta = prev > 0.0 ? cur / prev : 0.0;
    rep.iterations = it + 1;
    rep.contraction.push_back(eta);
    rep.history.push_back({it + 1, cur / fn, eta, norm(rep.u, h) / fn});
    if (eta >= 1.0) throw NoContraction("solve_exact: contraction ratio " + fmt(eta) + " >= 1; increase T", eta);
    prev = cur;
  }
  rep.residual = fn > 0.0 ? norm(f - apply(G, rep.u) - rep.w, h) / fn : 0.0;
  return rep;
}

DirectResult direct_solve(const GluedOperator& G, const GluingSetup& S, const Field& f) {
  const int n = G.points();
  DirectResult out{zero_field(G), zero_field(G)};
  for (int m = 0; m < static_cast<int>(G.modes.size()); ++m) {
    std::vector<Eigen::VectorXd> K;
    for (const auto& q : S.kernel)
      if (q.row(m).squaredNorm() > 0.0) K.push_back(q.row(m).transpose());
    const auto& A = G.modes[m].matrix;
    const Eigen::VectorXd fm = f.row(m).transpose();
    if (K.empty()) {
      out.u.row(m) = A.solve(fm).transpose();
      continue;
    }
    const int k = static_cast<int>(K.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < n; ++j) {
      trip.emplace_back(j, j, A.d(j));
      if (j + 1 < n) {
        trip.emplace_back(j, j + 1, A.e(j));
        trip.emplace_back(j + 1, j, A.e(j));
      }
      for (int i = 0; i < k; ++i) {
        trip.emplace_back(j, n + i, K[i](j));
        trip.emplace_back(n + i, j, G.h * K[i](j));
      }
    }
    Eigen::SparseMatrix<double> M(n + k, n + k);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) throw AnalysisError("direct_solve: bordered system is singular");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
    rhs.head(n) = fm;
    const Eigen::VectorXd x = lu.solve(rhs);
    out.u.row(m) = x.head(n).transpose();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < k; ++i) w += x(n + i) * K[i];
    out.w.row(m) = w.transpose();
  }
  return out;
}

void write_solve_csv(const std::filesystem::path& file, double T, const SolveReport& r) {
  std::string s = "T,iter,residual,eta,u_norm_over_f_norm\n";
  for (const auto& row : r.history)
    s += fmt(T) + "," + std::to_string(row.iter) + "," + fmt(row.residual) + "," + fmt(row.eta) + "," +
         fmt(row.u_norm_over_f_norm) + "\n";
  atomic_write(file, s);
}

double projection_norm_sup(const GluingSetup& S, double h) {
  if (S.kernel.empty()) return 0.0;
  const int rows = static_cast<int>(S.kernel.front().rows());
  const int n = static_cast<int>(S.kernel.front().cols());
  double best = 0.0;
  for (int m = 0; m < rows; ++m) {
    std::vector<Eigen::VectorXd> Q;
    for (const auto& q : S.kernel)
      if (q.row(m).squaredNorm() > 0.0) Q.push_back(q.row(m).transpose());
    if (Q.empty()) continue;
    Eigen::MatrixXd B(n, static_cast<int>(Q.size()));
    for (int k = 0; k < B.cols(); ++k) B.col(k) = Q[k];
    // a kernel field spread over several modes would couple rows; not produced by this construction
    for (int j = 0; j < n; ++j) best = std::max(best, h * (B * B.row(j).transpose()).cwiseAbs().sum());
  }
  return best;
}

ValuePairing valuepuv_check(const BuildingBlock& block, const ModeOperator& op, int mode, double h, double alpha,
                            double beta, const Eigen::VectorXd& phi) {
  if (!op.is_zero_mode() || op.kind != ModeKind::Laplace)
    throw InvalidArgument("valuepuv_check: needs a Laplace zero mode");
  std::vector<ModeOperator> ops(mode + 1, ModeOperator::laplace(1.0));
  ops[mode] = op;
  const auto data = block_kernel(block, ops, h);
  const KernelElement& g = data.elements.front();
  const int n = static_cast<int>(g.samples.size());
  if (phi.size() > n - 2) throw InvalidArgument("valuepuv_check: correction longer than the block grid");
  Eigen::VectorXd u(n);
  for (int j = 0; j < n; ++j) {
    const double rho = (j + 0.5) * h - block.L;
    u(j) = chi(rho - 2.0) * (alpha + beta * rho) + (j < phi.size() ? phi(j) : 0.0);
  }
  const Eigen::VectorXd Au = block_matrix(block, op, mode, h, n).apply(u);
  ValuePairing out;
  // drop the far Dirichlet row; the sum then telescopes to the Wronskian at the last interior cell
  out.lhs = h * Au.head(n - 1).dot(g.samples.head(n - 1));
  Section u0(1), v0(1);
  u0.add(0.0, {Eigen::VectorXcd::Constant(1, alpha), Eigen::VectorXcd::Constant(1, beta)});
  v0.add(0.0, {Eigen::VectorXcd::Constant(1, g.a), Eigen::VectorXcd::Constant(1, g.b)});
  out.rhs = pairing_closed({op}, u0, v0).real();
  out.scale = std::max(1.0, (std::abs(alpha) + std::abs(beta)) * (std::abs(g.a) + std::abs(g.b)));
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

Field random_field(const GluedOperator& G, SplitMix64& rng) {
  Field f = zero_field(G);
  const double len = G.b - G.a;
  const int K = static_cast<int>(std::ceil(len));
  for (int m = 0; m < f.rows(); ++m)
    for (int k = 1; k <= K; ++k) {
      const double c = rng.uniform(-1.0, 1.0);
      for (int j = 0; j < f.cols(); ++j) f(m, j) += c * std::sin(k * M_PI * (G.t(j) - G.a) / len);
    }
  return f;
}

}  // namespace neckspec
