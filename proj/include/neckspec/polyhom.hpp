#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "cutoff.hpp"
#include "spectrum.hpp"

namespace neckspec {

// e^{i rate t} * sum_j poly[j] t^j, each poly[j] a vector on the mode fiber.
template <typename Scalar>
struct PolyhomTerm {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  double rate = 0.0;
  std::vector<Vec> poly;

  int degree() const { return static_cast<int>(poly.size()) - 1; }
};

template <typename Scalar>
struct PolyhomSection {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Term = PolyhomTerm<Scalar>;

  int fiber = 0;
  std::vector<Term> terms;

  PolyhomSection() = default;
  explicit PolyhomSection(int fiber_dim) : fiber(fiber_dim) {}

  static PolyhomSection polynomial(const std::vector<Vec>& coeffs, double rate = 0.0) {
    if (coeffs.empty()) throw InvalidArgument("PolyhomSection: empty coefficient list");
    PolyhomSection s(static_cast<int>(coeffs.front().size()));
    s.add(rate, coeffs);
    return s;
  }

  // Adds into the term of the same rate, creating it if needed.
  void add(double rate, const std::vector<Vec>& coeffs) {
    for (const auto& c : coeffs)
      if (c.size() != fiber) throw InvalidArgument("PolyhomSection: fiber mismatch");
    Term* t = nullptr;
    for (auto& x : terms)
      if (x.rate == rate) t = &x;
    if (!t) {
      terms.push_back({rate, {}});
      t = &terms.back();
    }
    if (t->poly.size() < coeffs.size()) t->poly.resize(coeffs.size(), Vec::Zero(fiber));
    for (std::size_t j = 0; j < coeffs.size(); ++j) t->poly[j] += coeffs[j];
    trim();
  }

  void trim() {
    using Ops = ScalarOps<Scalar>;
    for (auto& t : terms) {
      while (!t.poly.empty()) {
        bool zero = true;
        for (int i = 0; i < fiber; ++i) zero = zero && Ops::is_zero(t.poly.back()(i), 0.0);
        if (!zero) break;
        t.poly.pop_back();
      }
    }
    std::erase_if(terms, [](const Term& t) { return t.poly.empty(); });
  }

  bool is_zero() const { return terms.empty(); }

  const Term* term(double rate) const {
    for (const auto& t : terms)
      if (t.rate == rate) return &t;
    return nullptr;
  }

  // Coefficient of t^j at the given rate (zero if absent).
  Vec coeff(double rate, int j) const {
    const Term* t = term(rate);
    if (!t || j < 0 || j > t->degree()) return Vec::Zero(fiber);
    return t->poly[j];
  }

  // n-th t-derivative evaluated at t (floating point).
  Eigen::VectorXcd eval(double t, int n = 0) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(fiber);
    for (const auto& term : terms) {
      // d^n/dt^n (e^{i r t} p(t)) = sum_k C(n,k) (i r)^{n-k} e^{i r t} p^{(k)}(t)
      const cplx ir(0.0, term.rate);
      const cplx e = std::exp(ir * t);
      auto ipow = [](cplx z, int k) { cplx r = 1.0; while (k-- > 0) r *= z; return r; };
      auto rpow = [](double x, int k) { double r = 1.0; while (k-- > 0) r *= x; return r; };
      double binom = 1.0;
      for (int k = 0; k <= n; ++k) {
        Eigen::VectorXcd pk = Eigen::VectorXcd::Zero(fiber);
        for (int j = k; j <= term.degree(); ++j) {
          double fall = 1.0;
          for (int m = 0; m < k; ++m) fall *= j - m;
          Eigen::VectorXcd c(fiber);
          for (int i = 0; i < fiber; ++i) c(i) = ScalarOps<Scalar>::to_complex(term.poly[j](i));
          pk += c * (fall * rpow(t, j - k));
        }
        out += binom * ipow(ir, n - k) * e * pk;
        binom = binom * (n - k) / (k + 1);
      }
    }
    return out;
  }
};

using Section = PolyhomSection<cplx>;

namespace detail {
// D_t = -i d/dt on one polynomial; D_t^{-1} is i times the antiderivative vanishing at 0.
template <typename Scalar>
std::vector<typename PolyhomSection<Scalar>::Vec> dt_power(const std::vector<typename PolyhomSection<Scalar>::Vec>& p,
                                                           int m, int fiber) {
  using Ops = ScalarOps<Scalar>;
  using Vec = typename PolyhomSection<Scalar>::Vec;
  std::vector<Vec> cur = p;
  const Scalar i = Ops::i();
  const Scalar minus_i = Scalar(0) - i;
  for (int step = 0; step < std::abs(m); ++step) {
    std::vector<Vec> nxt;
    if (m > 0) {
      for (std::size_t j = 1; j < cur.size(); ++j) nxt.push_back(cur[j] * (minus_i * Scalar(static_cast<long long>(j))));
    } else {
      nxt.push_back(Vec::Zero(fiber));
      for (std::size_t j = 0; j < cur.size(); ++j)
        nxt.push_back(cur[j] * (i / Scalar(static_cast<long long>(j + 1))));
    }
    cur = std::move(nxt);
    if (cur.empty()) break;
  }
  return cur;
}

template <typename Scalar>
void accumulate(std::vector<typename PolyhomSection<Scalar>::Vec>& acc,
                const std::vector<typename PolyhomSection<Scalar>::Vec>& add, int fiber) {
  using Vec = typename PolyhomSection<Scalar>::Vec;
  if (acc.size() < add.size()) acc.resize(add.size(), Vec::Zero(fiber));
  for (std::size_t j = 0; j < add.size(); ++j) acc[j] += add[j];
}

inline int fiber_of(const std::vector<ModeOperator>& modes) {
  int n = 0;
  for (const auto& m : modes) n += m.fiber_dim();
  return n;
}
}  // namespace detail

// P(D_t) on each term: sum_n (1/n!) p^{(n)}(rate) D_t^n.
template <typename Scalar>
PolyhomSection<Scalar> apply_P(const std::vector<ModeOperator>& modes, const PolyhomSection<Scalar>& u) {
  using Ops = ScalarOps<Scalar>;
  using Vec = typename PolyhomSection<Scalar>::Vec;
  if (u.fiber != detail::fiber_of(modes)) throw InvalidArgument("apply_P: fiber mismatch");
  const auto p = symbol_of<Scalar>(modes);
  PolyhomSection<Scalar> out(u.fiber);
  for (const auto& term : u.terms) {
    const Scalar l0 = Ops::from_double(term.rate);
    std::vector<Vec> acc;
    for (int n = 0; n <= 2; ++n) {
      auto d = detail::dt_power<Scalar>(term.poly, n, u.fiber);
      const auto Pn = p.derivative(n, l0);
      const Scalar w = n == 2 ? Scalar(1) / Scalar(2) : Scalar(1);
      for (auto& c : d) c = (Pn * c) * w;
      detail::accumulate<Scalar>(acc, d, u.fiber);
    }
    if (!acc.empty()) out.add(term.rate, acc);
  }
  out.trim();
  return out;
}

// Q_{l0} = sum_{m >= -d} R_m(l0) D_t^m on the rate-l0 polynomial f.
template <typename Scalar>
PolyhomSection<Scalar> q_lambda0(const std::vector<ModeOperator>& modes, const PolyhomSection<Scalar>& f) {
  using Ops = ScalarOps<Scalar>;
  using Vec = typename PolyhomSection<Scalar>::Vec;
  if (f.fiber != detail::fiber_of(modes)) throw InvalidArgument("q_lambda0: fiber mismatch");
  PolyhomSection<Scalar> out(f.fiber);
  for (const auto& term : f.terms) {
    const int deg = term.degree();
    const auto R = resolvent_laurent<Scalar>(modes, Ops::from_double(term.rate), std::max(deg, 0));
    std::vector<Vec> acc;
    for (int m = R.m_min(); m <= deg; ++m) {
      auto d = detail::dt_power<Scalar>(term.poly, m, f.fiber);
      for (auto& c : d) c = R.at(m) * c;
      detail::accumulate<Scalar>(acc, d, f.fiber);
    }
    if (!acc.empty()) out.add(term.rate, acc);
  }
  out.trim();
  return out;
}

// u(t - s)
Section shift(const Section& u, double s);

bool in_kernel(const std::vector<ModeOperator>& modes, const Section& u, double tol = 1e-12);

// Standard basis of the rate-0 kernel: e_k and t e_k for Laplace zero modes, constants for Dirac blocks.
std::vector<Section> kernel_basis(const std::vector<ModeOperator>& modes);

cplx pairing_integral(const std::vector<ModeOperator>& modes, const Section& u, const Section& v, const Cutoff& chi,
                      double quad_step = 1.0 / 256);
cplx pairing_closed(const std::vector<ModeOperator>& modes, const Section& u, const Section& v);

struct GramResult {
  Eigen::MatrixXcd G;
  int rank = 0;
  int defect = 0;
};
GramResult gram_matrix(const std::vector<ModeOperator>& modes, const std::vector<Section>& basis_E,
                       const std::vector<Section>& basis_Estar);

// One line per term: "rate <r>", then "t^j: re,im re,im ..." rows.
std::string dump(const Section& u);

}  // namespace neckspec
