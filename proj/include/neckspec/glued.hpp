#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spectrum.hpp"
#include "tridiag.hpp"

namespace neckspec {

enum class Boundary { Neumann, Dirichlet };

// Half-line model of one building block, coordinate s >= 0 with the outer boundary at s = 0
// and the cylindrical end starting at s = L (rho = s - L).
struct BuildingBlock {
  std::shared_ptr<const CrossSectionSpectrum> spectrum;
  double L = 1.0;
  Boundary boundary = Boundary::Neumann;
  double mu = 1.0;
  // mode index -> samples (s, V), linear in between, zero past the last sample
  std::map<int, std::vector<std::pair<double, double>>> potentials;
  // mode index -> c; potential whose discrete kernel is exactly 1 + c / cosh(mu s)
  std::map<int, double> profiles;

  // Potential of mode m at cell centres s_j = (j + 1/2) h, j < n.
  Eigen::VectorXd potential(int mode, double h, int n) const;
  bool has_perturbation(int mode) const { return potentials.count(mode) || profiles.count(mode); }
  // Throws AnalysisError if some mode violates |V(s)| <= A e^{-mu (s - L)} for s >= L.
  void check_decay() const;
};

BuildingBlock parse_block(const std::string& json_text, std::shared_ptr<const CrossSectionSpectrum> spectrum);

struct GluedMode {
  ModeOperator op;
  int index = 0;  // position in the mode list
  SymTridiag matrix;
  Eigen::VectorXd V;  // faded potential on the glued grid
};

// Cell-centred grid on [-T-1-L1, T+1+L2], t_j = a + (j + 1/2) h.
struct GluedOperator {
  double T = 0.0, h = 0.0;
  double a = 0.0, b = 0.0;
  int q = 0;
  std::vector<GluedMode> modes;
  BuildingBlock block1, block2;

  int points() const { return static_cast<int>(std::lround((b - a) / h)); }
  double t(int j) const { return a + (j + 0.5) * h; }
  double rho1(int j) const { return t(j) + T + 1.0; }
  double rho2(int j) const { return T + 1.0 - t(j); }
  int cell_of(double t) const;  // nearest cell centre index
};

GluedOperator assemble(const BuildingBlock& block1, const BuildingBlock& block2, int q, double T, double h,
                       double cutoff);

// Half-line block operator of one mode on cells s_j = (j + 1/2) h, j < n, with the unfaded potential.
// The far end gets a Dirichlet row.
SymTridiag block_matrix(const BuildingBlock& block, const ModeOperator& op, int mode, double h, int n);

struct KernelElement {
  int mode = 0;
  double a = 0.0, b = 0.0;  // u ~ a + b rho far out
  bool bounded = false;
  bool decaying = false;
  Eigen::VectorXd samples;  // on block cells s_j, j < samples.size()
  double scale = 1.0;
};

struct BlockKernelData {
  std::vector<KernelElement> elements;  // one per zero mode (full sub-exponential kernel)
  std::vector<int> positive_modes;      // certified empty kernels
  int dim_bounded() const;              // dim K
  int dim_decaying() const;             // dim K_0
};

// Shooting from the outer boundary; reach R = L + max(10, 20/mu) unless a larger one is given.
BlockKernelData block_kernel(const BuildingBlock& block, const std::vector<ModeOperator>& modes, double h,
                             double tol = 1e-6, double reach = 0.0);

struct TaggedEigenvalue {
  double lambda;
  double mode_nu;
  DegreeTag tag;
  int mode;
  int k;
};

struct EigenList {
  std::vector<TaggedEigenvalue> values;
  bool clipped = false;
};

EigenList eigen_lowest(const GluedOperator& G, int k);

}  // namespace neckspec
