#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "glued.hpp"
#include "rng.hpp"

namespace neckspec {

// A field on the glued grid: one row per mode of the operator, one column per cell.
using Field = Eigen::MatrixXd;

Field zero_field(const GluedOperator& G);
double inner(const Field& u, const Field& v, double h);  // h * sum u v
double norm(const Field& u, double h);
Field apply(const GluedOperator& G, const Field& u);

// One pair per zero mode. Traces in glued coordinates: c1 g1 -> c1 (gamma1 + b1 t), c2 g2 -> c2 (gamma2 - b2 t).
struct MatchingPair {
  int mode = 0;
  KernelElement u1, u2;
  double c1 = 0.0, c2 = 0.0;
  bool matched_at_T = false;
  double p0 = 0.0, p1 = 0.0;       // common trace p0 + p1 t (when matched)
  Eigen::VectorXd glued_section;   // (1 - chi(t)) c1 g1 + chi(t) c2 g2
};

std::vector<MatchingPair> substitute_kernel(const GluedOperator& G, const BlockKernelData& k1,
                                            const BlockKernelData& k2, double tol = 1e-6);

// ||P_T u_T|| / (||(1 - chi) c1 g1|| + ||chi c2 g2||)
double approx_residual(const GluedOperator& G, const MatchingPair& p);

struct GluingSetup {
  BlockKernelData block1, block2;
  std::vector<MatchingPair> pairs;
  std::vector<Field> kernel;    // orthonormal basis of K_T (= K*_T here)
  int dim_kernel() const { return static_cast<int>(kernel.size()); }
};

GluingSetup prepare_gluing(const GluedOperator& G, double tol = 1e-6);

Field project_kernel(const GluingSetup& S, const Field& f, double h);

// Rows: two per zero mode (block 1 then block 2 obstruction, normalized by the l2 norm of the faded g_i).
// Columns: a basis of E' per zero mode, p0 + p1 t coefficients in column_basis.
struct CharacteristicSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::vector<int> column_mode;
  std::vector<Eigen::Vector2d> column_basis;
  std::vector<int> row_mode;
  int rank = 0;
};

struct CharacteristicSolution {
  CharacteristicSystem system;
  Eigen::VectorXd coeffs;
  std::vector<Eigen::Vector2d> v;  // per mode (e0, e1); zero for positive modes
  double consistency = 0.0;        // norm of the rhs component outside the column space
};

CharacteristicSystem characteristic_system(const GluedOperator& G, const GluingSetup& S, const Field& f);
CharacteristicSolution characteristic_solve(const GluedOperator& G, const GluingSetup& S, const Field& f);
std::string dump(const CharacteristicSystem& sys);

struct ApproxResult {
  Field u;
  Field error;                       // f - P_T u
  double consistency = 0.0;
  std::vector<Eigen::Vector2d> obstruction_before;  // (block 1, block 2) per mode with v = 0
  std::vector<Eigen::Vector2d> obstruction_after;
};

// Throws NotOrthogonal when the characteristic inconsistency exceeds tol ||f||.
ApproxResult approx_solve(const GluedOperator& G, const GluingSetup& S, const Field& f, double tol = 1e-6);

struct SolveRow {
  int iter;
  double residual, eta, u_norm_over_f_norm;
};

struct SolveReport {
  Field u, w;
  int iterations = 0;
  std::vector<double> contraction;
  double residual = 0.0;
  std::vector<SolveRow> history;
};

SolveReport solve_exact(const GluedOperator& G, const GluingSetup& S, const Field& f, int max_iter = 30,
                        double tol = 1e-8, double consistency_tol = 0.5);

// Bordered sparse solve of P_T u + w = f, u orthogonal to K_T, w in K_T.
struct DirectResult {
  Field u, w;
};
DirectResult direct_solve(const GluedOperator& G, const GluingSetup& S, const Field& f);

void write_solve_csv(const std::filesystem::path& file, double T, const SolveReport& r);

// Operator norm of the orthogonal projection onto K_T in the sup norm.
double projection_norm_sup(const GluingSetup& S, double h);

struct ValuePairing {
  double lhs = 0.0, rhs = 0.0, residual = 0.0, scale = 1.0;
};

// u = chi(rho - 2) (alpha + beta rho) + phi on the half-line block, v = its kernel element of the mode.
ValuePairing valuepuv_check(const BuildingBlock& block, const ModeOperator& op, int mode, double h, double alpha,
                            double beta, const Eigen::VectorXd& phi);

// Random field with unit-scale features: per mode, sines over the whole interval, one harmonic per unit length.
Field random_field(const GluedOperator& G, SplitMix64& rng);

}  // namespace neckspec
