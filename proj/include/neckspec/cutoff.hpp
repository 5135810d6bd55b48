#pragma once

namespace neckspec {

// Quintic smoothstep: 0 below -1/2, 1 above 1/2, C^2 across both joints.
// chi(-t) = 1 - chi(t), which makes the two fades of the gluing a partition of unity.
template <typename Real>
Real chi(Real t) {
  if (t <= Real(-0.5)) return Real(0);
  if (t >= Real(0.5)) return Real(1);
  const Real x = t + Real(0.5);
  return x * x * x * (Real(10) + x * (Real(-15) + Real(6) * x));
}

template <typename Real>
Real chi_d1(Real t) {
  if (t <= Real(-0.5) || t >= Real(0.5)) return Real(0);
  const Real x = t + Real(0.5);
  const Real y = Real(1) - x;
  return Real(30) * x * x * y * y;
}

template <typename Real>
Real chi_d2(Real t) {
  if (t <= Real(-0.5) || t >= Real(0.5)) return Real(0);
  const Real x = t + Real(0.5);
  return Real(60) * x * (Real(1) - x) * (Real(1) - Real(2) * x);
}

struct Cutoff {
  double center = 0.0;

  double operator()(double t) const { return chi(t - center); }
  double d1(double t) const { return chi_d1(t - center); }
  double d2(double t) const { return chi_d2(t - center); }
  double lo() const { return center - 0.5; }
  double hi() const { return center + 0.5; }
};

}  // namespace neckspec
