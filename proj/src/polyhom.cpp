#include "neckspec/polyhom.hpp"

#include <cstdio>
#include <sstream>

namespace neckspec {

Section shift(const Section& u, double s) {
  Section out(u.fiber);
  for (const auto& term : u.terms) {
    const cplx phase = std::exp(cplx(0.0, -term.rate * s));
    std::vector<Section::Vec> c(term.poly.size(), Section::Vec::Zero(u.fiber));
    for (int j = 0; j <= term.degree(); ++j) {
      double binom = 1.0;
      for (int k = 0; k <= j; ++k) {
        c[k] += term.poly[j] * (binom * std::pow(-s, j - k));
        binom = binom * (j - k) / (k + 1);
      }
    }
    for (auto& x : c) x *= phase;
    out.add(term.rate, c);
  }
  return out;
}

bool in_kernel(const std::vector<ModeOperator>& modes, const Section& u, double tol) {
  const auto r = apply_P(modes, u);
  for (const auto& t : r.terms)
    for (const auto& c : t.poly)
      if (c.cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

std::vector<Section> kernel_basis(const std::vector<ModeOperator>& modes) {
  const int n = detail::fiber_of(modes);
  std::vector<Section> out;
  int off = 0;
  for (const auto& m : modes) {
    if (m.kind == ModeKind::Dirac) {
      for (int k = 0; k < 2; ++k) {
        Section::Vec e = Section::Vec::Zero(n);
        e(off + k) = 1.0;
        out.push_back(Section::polynomial({e}));
      }
    } else if (m.nu == 0.0) {
      Section::Vec e = Section::Vec::Zero(n);
      e(off) = 1.0;
      out.push_back(Section::polynomial({e}));
      out.push_back(Section::polynomial({Section::Vec::Zero(n), e}));
    }
    off += m.fiber_dim();
  }
  return out;
}

cplx pairing_integral(const std::vector<ModeOperator>& modes, const Section& u, const Section& v, const Cutoff& chi,
                      double quad_step) {
  // Every operator built here is formally self-adjoint, so the cokernel test uses P as well.
  if (!in_kernel(modes, u, 1e-9)) throw ContractViolation("pairing_integral: u is not in the kernel of P");
  if (!in_kernel(modes, v, 1e-9)) throw ContractViolation("pairing_integral: v is not in the kernel of P*");
  if (!(quad_step > 0.0)) throw InvalidArgument("pairing_integral: quad_step must be positive");
  const auto p = symbol_of<cplx>(modes);
  // P w = A0 w - i A1 w' - A2 w''
  auto integrand = [&](double t) {
    const double c0 = chi(t), c1 = chi.d1(t), c2 = chi.d2(t);
    const Eigen::VectorXcd u0 = u.eval(t, 0), u1 = u.eval(t, 1), u2 = u.eval(t, 2);
    const Eigen::VectorXcd w0 = c0 * u0;
    const Eigen::VectorXcd w1 = c1 * u0 + c0 * u1;
    const Eigen::VectorXcd w2 = c2 * u0 + 2.0 * c1 * u1 + c0 * u2;
    const Eigen::VectorXcd Pw = p.A0 * w0 - cplx(0.0, 1.0) * (p.A1 * w1) - p.A2 * w2;
    return v.eval(t, 0).dot(Pw);  // <Pw, v> = sum Pw_i conj(v_i)
  };
  int n = static_cast<int>(std::ceil((chi.hi() - chi.lo()) / quad_step));
  n += n % 4 ? 4 - n % 4 : 0;
  const double h = (chi.hi() - chi.lo()) / n;
  std::vector<cplx> f(n + 1);
  for (int k = 0; k <= n; ++k) f[k] = integrand(chi.lo() + k * h);
  // composite Simpson at h and 2h, one Richardson step on top
  cplx fine = f[0] + f[n], coarse = f[0] + f[n];
  for (int k = 1; k < n; ++k) fine += (k % 2 ? 4.0 : 2.0) * f[k];
  for (int k = 2; k < n; k += 2) coarse += (k % 4 ? 4.0 : 2.0) * f[k];
  fine *= h / 3.0;
  coarse *= 2.0 * h / 3.0;
  return fine + (fine - coarse) / 15.0;
}

cplx pairing_closed(const std::vector<ModeOperator>& modes, const Section& u, const Section& v) {
  if (u.fiber != detail::fiber_of(modes) || v.fiber != u.fiber) throw InvalidArgument("pairing_closed: fiber mismatch");
  cplx acc = 0.0;
  for (const auto& tu : u.terms) {
    const auto* tv = v.term(tu.rate);
    if (!tv) continue;  // distinct real rates pair to zero
    int off = 0;
    for (const auto& m : modes) {
      if (tu.rate == 0.0) {
        if (m.kind == ModeKind::Dirac) {
          for (int j = 1; j <= std::max(tu.degree(), tv->degree()); ++j)
            if (u.coeff(0.0, j).segment(off, 2).norm() + v.coeff(0.0, j).segment(off, 2).norm() != 0.0)
              throw ContractViolation("pairing_closed: Dirac kernel is constant");
          const cplx a = tu.poly[0](off), b = tu.poly[0](off + 1);
          const cplx ap = tv->poly[0](off), bp = tv->poly[0](off + 1);
          acc += -b * std::conj(ap) + a * std::conj(bp);
        } else if (m.nu == 0.0) {
          for (int j = 2; j <= std::max(tu.degree(), tv->degree()); ++j)
            if (u.coeff(0.0, j)(off) != 0.0 || v.coeff(0.0, j)(off) != 0.0)
              throw ContractViolation("pairing_closed: degree above root order");
          const cplx u0 = u.coeff(0.0, 0)(off), u1 = u.coeff(0.0, 1)(off);
          const cplx v0 = v.coeff(0.0, 0)(off), v1 = v.coeff(0.0, 1)(off);
          acc += u0 * std::conj(v1) - u1 * std::conj(v0);
        }
      } else if (m.kind == ModeKind::Laplace && m.nu < 0.0 && tu.rate * tu.rate == -m.nu) {
        // simple real root of a scalar mode: boundary term -u' conj(v) + u conj(v')
        acc += cplx(0.0, -2.0 * tu.rate) * tu.poly[0](off) * std::conj(tv->poly[0](off));
      } else if (tu.poly[0](off) != 0.0 || tv->poly[0](off) != 0.0) {
        throw Unsupported("pairing_closed: no closed form for this operator and rate");
      }
      off += m.fiber_dim();
    }
  }
  return acc;
}

GramResult gram_matrix(const std::vector<ModeOperator>& modes, const std::vector<Section>& basis_E,
                       const std::vector<Section>& basis_Estar) {
  GramResult r;
  r.G.resize(static_cast<Eigen::Index>(basis_E.size()), static_cast<Eigen::Index>(basis_Estar.size()));
  for (std::size_t i = 0; i < basis_E.size(); ++i)
    for (std::size_t j = 0; j < basis_Estar.size(); ++j) r.G(i, j) = pairing_closed(modes, basis_E[i], basis_Estar[j]);
  if (r.G.size() == 0) return r;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(r.G);
  lu.setThreshold(1e-10);
  r.rank = static_cast<int>(lu.rank());
  r.defect = static_cast<int>(std::max(r.G.rows(), r.G.cols())) - r.rank;
  return r;
}

std::string dump(const Section& u) {
  std::ostringstream os;
  char buf[64];
  for (const auto& t : u.terms) {
    std::snprintf(buf, sizeof buf, "rate %.17g\n", t.rate);
    os << buf;
    for (int j = 0; j <= t.degree(); ++j) {
      os << "t^" << j << ':';
      for (int i = 0; i < u.fiber; ++i) {
        std::snprintf(buf, sizeof buf, " %.17g,%.17g", t.poly[j](i).real(), t.poly[j](i).imag());
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace neckspec
