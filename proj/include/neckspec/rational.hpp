#pragma once

// Exact Gaussian rationals, enough to run the polynomial calculus without rounding.
// Values stay small in practice (degrees <= 6), so 64-bit numerators suffice; overflow throws.

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace neckspec {

class Rational {
public:
  Rational() = default;
  Rational(long long n) : p_(n), q_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(long long n, long long d) : p_(n), q_(d) { normalize(); }

  // Every finite double is dyadic, so this is exact while the exponent fits.
  static Rational from_double(double x) {
    if (x == 0.0) return Rational(0);
    int e = 0;
    double m = std::frexp(x, &e);
    long long num = static_cast<long long>(std::ldexp(m, 53));
    e -= 53;
    while (e < 0 && (num % 2) == 0) { num /= 2; ++e; }
    if (e >= 0) {
      if (e > 62) throw std::overflow_error("Rational::from_double exponent");
      return Rational(num * (1ll << e));
    }
    if (-e > 62) throw std::overflow_error("Rational::from_double exponent");
    return Rational(num, 1ll << (-e));
  }

  long long num() const { return p_; }
  long long den() const { return q_; }
  double to_double() const { return static_cast<double>(p_) / static_cast<double>(q_); }

  friend Rational operator+(Rational a, Rational b) {
    return Rational(checked_add(checked_mul(a.p_, b.q_), checked_mul(b.p_, a.q_)), checked_mul(a.q_, b.q_));
  }
  friend Rational operator-(Rational a, Rational b) { return a + (-b); }
  friend Rational operator*(Rational a, Rational b) {
    long long g1 = std::gcd(a.p_, b.q_), g2 = std::gcd(b.p_, a.q_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return Rational(checked_mul(a.p_ / g1, b.p_ / g2), checked_mul(a.q_ / g2, b.q_ / g1));
  }
  friend Rational operator/(Rational a, Rational b) {
    if (b.p_ == 0) throw std::domain_error("Rational division by zero");
    return a * Rational(b.q_, b.p_);
  }
  Rational operator-() const { Rational r; r.p_ = -p_; r.q_ = q_; return r; }
  Rational& operator+=(Rational o) { return *this = *this + o; }
  Rational& operator-=(Rational o) { return *this = *this - o; }
  Rational& operator*=(Rational o) { return *this = *this * o; }
  Rational& operator/=(Rational o) { return *this = *this / o; }
  friend bool operator==(Rational a, Rational b) { return a.p_ == b.p_ && a.q_ == b.q_; }
  friend bool operator!=(Rational a, Rational b) { return !(a == b); }

private:
  static long long checked_mul(long long a, long long b) {
    long long r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("Rational overflow");
    return r;
  }
  static long long checked_add(long long a, long long b) {
    long long r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("Rational overflow");
    return r;
  }
  void normalize() {
    if (q_ == 0) throw std::domain_error("Rational with zero denominator");
    if (q_ < 0) { p_ = -p_; q_ = -q_; }
    long long g = std::gcd(p_, q_);
    if (g > 1) { p_ /= g; q_ /= g; }
  }

  long long p_ = 0;
  long long q_ = 1;
};

class GaussRational {
public:
  GaussRational() = default;
  GaussRational(long long n) : re_(n) {}  // NOLINT(google-explicit-constructor)
  GaussRational(Rational re, Rational im = Rational(0)) : re_(re), im_(im) {}  // NOLINT

  static GaussRational i() { return GaussRational(Rational(0), Rational(1)); }

  Rational real() const { return re_; }
  Rational imag() const { return im_; }
  std::complex<double> to_complex() const { return {re_.to_double(), im_.to_double()}; }

  friend GaussRational operator+(const GaussRational& a, const GaussRational& b) {
    return {a.re_ + b.re_, a.im_ + b.im_};
  }
  friend GaussRational operator-(const GaussRational& a, const GaussRational& b) {
    return {a.re_ - b.re_, a.im_ - b.im_};
  }
  friend GaussRational operator*(const GaussRational& a, const GaussRational& b) {
    return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
  }
  friend GaussRational operator/(const GaussRational& a, const GaussRational& b) {
    Rational n = b.re_ * b.re_ + b.im_ * b.im_;
    GaussRational c = a * conj(b);
    return {c.re_ / n, c.im_ / n};
  }
  GaussRational operator-() const { return {-re_, -im_}; }
  GaussRational& operator+=(const GaussRational& o) { return *this = *this + o; }
  GaussRational& operator-=(const GaussRational& o) { return *this = *this - o; }
  GaussRational& operator*=(const GaussRational& o) { return *this = *this * o; }
  GaussRational& operator/=(const GaussRational& o) { return *this = *this / o; }
  friend bool operator==(const GaussRational& a, const GaussRational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }
  friend bool operator!=(const GaussRational& a, const GaussRational& b) { return !(a == b); }
  friend GaussRational conj(const GaussRational& a) { return {a.re_, -a.im_}; }

  friend std::ostream& operator<<(std::ostream& os, const GaussRational& z) {
    return os << z.re_.num() << '/' << z.re_.den() << '+' << z.im_.num() << '/' << z.im_.den() << 'i';
  }

private:
  Rational re_;
  Rational im_;
};

GaussRational conj(const GaussRational& a);

// Uniform access used by the templated calculus.
template <typename Scalar>
struct ScalarOps;

template <>
struct ScalarOps<std::complex<double>> {
  using S = std::complex<double>;
  static S i() { return {0.0, 1.0}; }
  static S from_double(double x) { return {x, 0.0}; }
  static S from_complex(std::complex<double> z) { return z; }
  static S conj(const S& z) { return std::conj(z); }
  static std::complex<double> to_complex(const S& z) { return z; }
  static bool is_zero(const S& z, double tol) { return std::abs(z) <= tol; }
};

template <>
struct ScalarOps<GaussRational> {
  using S = GaussRational;
  static S i() { return S::i(); }
  static S from_double(double x) { return S(Rational::from_double(x)); }
  static S from_complex(std::complex<double> z) {
    return S(Rational::from_double(z.real()), Rational::from_double(z.imag()));
  }
  static S conj(const S& z) { return neckspec::conj(z); }
  static std::complex<double> to_complex(const S& z) { return z.to_complex(); }
  static bool is_zero(const S& z, double) { return z == S(0); }
};

}  // namespace neckspec

namespace Eigen {
template <>
struct NumTraits<neckspec::GaussRational> : GenericNumTraits<neckspec::GaussRational> {
  using Real = neckspec::GaussRational;
  using NonInteger = neckspec::GaussRational;
  using Nested = neckspec::GaussRational;
  using Literal = neckspec::GaussRational;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 8,
    MulCost = 16
  };
  static Real epsilon() { return Real(0); }
  static Real dummy_precision() { return Real(0); }
  static int digits10() { return 0; }
};
}  // namespace Eigen
