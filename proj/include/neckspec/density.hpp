#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gluing.hpp"

namespace neckspec {

constexpr double kZeroThreshold = 1e-10;

// Per mode: every eigenvalue <= pi^2 s_max / T^2, plus the next one as a coverage witness.
EigenList window_eigenvalues(const GluedOperator& G, double s_max);

// Eigenvalues in (kZeroThreshold, pi^2 s / T^2]; throws InsufficientEigenvalues if some mode's list
// ends inside the window without being complete.
int count_low_eigenvalues(const GluedOperator& G, const EigenList& ev, double s);
int count_low_eigenvalues(const GluedOperator& G, double s);

struct BranchCounts {
  int exact = 0;    // beta-tagged modes
  int coexact = 0;  // alpha-tagged modes
};
BranchCounts coexact_split_counts(const GluedOperator& G, const EigenList& ev, double s);

struct DensityRow {
  int q;
  double T, s;
  int count;
  double prediction, residual;
  std::string branch;  // total, exact, coexact
};

struct DensityReport {
  int q = 0;
  int betti_lo = 0, betti_hi = 0;  // b^{q-1}, b^q
  std::vector<DensityRow> rows;
  double max_abs_residual(const std::string& branch = "total") const;
};

using OperatorBuilder = std::function<GluedOperator(double T)>;

// threads <= 0 means one worker per T value
DensityReport density_sweep(const OperatorBuilder& build, int q, const std::vector<double>& s_list,
                            const std::vector<double>& T_list, int threads = 1);

void write_density_csv(const std::filesystem::path& file, const DensityReport& r);

// Spectrum of the product circle of length 2T times X: (k pi / T)^2 + nu, k in Z.
std::vector<double> product_eigenvalues(const CrossSectionSpectrum& spec, int q, double T, double s);
int product_benchmark(const CrossSectionSpectrum& spec, int q, double T, double s);

enum class TestSpaceKind { Vn, E, VnPrime, Wn };

// Coefficient vectors a_k, k = -K..K (index k + K), of f = sum a_k e^{i k pi t} on [-1, 1].
struct TestSpace {
  TestSpaceKind kind;
  int n = 0, K = 0;
  Eigen::MatrixXcd constraints;  // rows: linear conditions on the coefficient vector
  Eigen::MatrixXcd basis;        // columns
  int dim() const { return static_cast<int>(basis.cols()); }
  int constraint_rank() const;
};

// K is the truncation order; it must be at least n (n + 2 for VnPrime).
TestSpace make_test_space(TestSpaceKind kind, int n, int K);
bool satisfies(const TestSpace& S, const Eigen::VectorXcd& a, double tol = 1e-12);

struct MinMaxResult {
  double rayleigh_max = 0.0;  // largest Rayleigh quotient over the trial space
  double bound = 0.0;         // (n pi)^2 / T^2
  int trial_dim = 0;
  int count_below = 0;        // eigenvalues <= rayleigh_max, zero ones included
  int count_nonzero = 0;      // eigenvalues in (kZeroThreshold, rayleigh_max]
};

// Trial space: real cos/sin version of V_n on each zero mode, rescaled to [-(1 - tau) T, (1 - tau) T].
MinMaxResult minmax_upper_from_Vn(const GluedOperator& G, int n, double tau = 0.1);

// Real-valued trial functions spanning V_n (2n - 2 of them), evaluated at x in [-1, 1].
std::vector<std::function<double(double)>> real_Vn_basis(int n);

struct HCheck {
  double max_deviation = 0.0;  // closed form vs quadrature on [-T, T]
  double tail = 0.0;           // max |Hf_T| on (T, T + 1]
  double f_norm = 0.0;         // l2 of f_T on [-T, T]
  double h_norm = 0.0;         // l2 of H f_T on [-T, T]
};

// a indexed as in TestSpace (k = -K..K). Throws InvalidArgument if a is not in E.
HCheck h_operator_check(const Eigen::VectorXcd& a, double T, double h = 1.0 / 128);

struct Lambda1Bounds {
  double lambda1 = 0.0;   // smallest eigenvalue above kZeroThreshold
  double rayleigh = 0.0;  // Rayleigh quotient of the clipped, mean-free t/T
};
Lambda1Bounds scalar_lambda1_bounds(const GluedOperator& G);

// Sines of the principal angles between K_T and the span of the dim K_T lowest eigenvectors.
std::vector<double> kernel_angles(const GluedOperator& G, const GluingSetup& S);

}  // namespace neckspec
