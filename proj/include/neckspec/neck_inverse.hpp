#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "polyhom.hpp"
#include "rng.hpp"

namespace neckspec {

// Samples on the vertex grid t_k = -S + k h, k = 0..N. One row per fiber component
// (a Dirac block contributes two rows: alpha, then beta). Zero outside [-T, T].
struct CompactSection {
  double S = 0.0, T = 0.0, h = 0.0;
  Eigen::MatrixXd values;

  CompactSection() = default;
  CompactSection(int rows, double S, double T, double h);

  int points() const { return static_cast<int>(values.cols()); }
  double t(int k) const { return -S + k * h; }
  // first and last grid index inside [-T, T]
  int lo() const;
  int hi() const;
};

struct NeckSolution {
  Eigen::MatrixXd regular;
  Eigen::MatrixXd singular;
  Section trace_plus;
  Section trace_minus;  // always zero

  Eigen::MatrixXd total() const { return regular + singular; }
};

enum class Q0Scheme {
  Continuum,  // product integration of the piecewise-linear f
  Lattice     // exact inverse of the 3-point stencil on the infinite lattice
};

int fiber_rows(const std::vector<ModeOperator>& modes);

CompactSection make_section(const std::vector<ModeOperator>& modes, double S, double T, double h);

NeckSolution q0_apply(const std::vector<ModeOperator>& modes, const CompactSection& f,
                      Q0Scheme scheme = Q0Scheme::Continuum);

Section asymptotic_trace(const std::vector<ModeOperator>& modes, const CompactSection& f);

struct DualityResult {
  cplx pairing_value;
  cplx l2_value;
  cplx residual;
};
DualityResult duality_check(const std::vector<ModeOperator>& modes, const CompactSection& f, const Section& v);

struct NoRealRootsResult {
  NeckSolution solution;
  double ratio_l2 = 0.0;   // ||u|| / ||f||
  double bound = 0.0;      // 1 / nu0
  double sup_norm = 0.0;   // max |u|
};
NoRealRootsResult invertibility_no_real_roots(const std::vector<ModeOperator>& modes, const CompactSection& f);

// Discrete operator: -second difference + nu for Laplace rows, J times central difference for Dirac blocks.
// Boundary columns are left at zero.
Eigen::MatrixXd apply_discrete(const std::vector<ModeOperator>& modes, const Eigen::MatrixXd& u, double h);

// Relative l2 residual of P u = f over the grid points of [-T, T].
double relative_residual(const std::vector<ModeOperator>& modes, const CompactSection& f, const Eigen::MatrixXd& u);

double l2_norm(const Eigen::MatrixXd& u, double h);

// Smooth f: random sines under the window (1 - (t/T)^2)^3, independent per row.
CompactSection random_smooth_section(const std::vector<ModeOperator>& modes, double S, double T, double h,
                                     SplitMix64& rng, int harmonics = 6);

// Largest singular value of Q0 restricted to [-T, T] for one zero mode (power iteration).
double q0_norm_zero_mode(const ModeOperator& op, double T, double h, int iterations = 300);

// Columns t, mode_index, u_r, u_s; mode_index is the fiber row.
void write_q0_csv(const std::filesystem::path& file, const CompactSection& f, const NeckSolution& u);

}  // namespace neckspec
