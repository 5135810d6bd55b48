#include <cmath>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "neckspec/density.hpp"

using namespace neckspec;

namespace {
constexpr double pi = std::numbers::pi;

std::shared_ptr<const CrossSectionSpectrum> circle() {
  static auto s = std::make_shared<const CrossSectionSpectrum>(circle_spectrum(2 * pi, 4));
  return s;
}

BuildingBlock block(Boundary bc, double L = 1.0, double mu = 1.0) {
  BuildingBlock b;
  b.spectrum = circle();
  b.L = L;
  b.boundary = bc;
  b.mu = mu;
  return b;
}

GluedOperator free_nn(double T, double h, double L = 1.0, int q = 0) {
  return assemble(block(Boundary::Neumann, L), block(Boundary::Neumann, L), q, T, h, 40.0);
}

// Neumann cell-centred Laplacian on n cells: 4/h^2 sin^2(k pi / (2n))
double lattice_neumann(int k, int n, double h) { return 4.0 / (h * h) * std::pow(std::sin(k * pi / (2.0 * n)), 2); }
}  // namespace

TEST_CASE("product benchmark by hand") {
  // q = 0 on the circle: only nu = 0 fits below pi^2 4 / 100, so k = +-1, +-2
  CHECK(product_benchmark(*circle(), 0, 10.0, 4.0) == 4);
  // s = 110.25: window 10.88 admits nu = 1, 4, 9, each twice
  const double T = 10.0, s = 110.25, w = pi * pi * s / (T * T);
  int expect = 0;
  for (int k = -50; k <= 50; ++k) {
    const double l0 = std::pow(k * pi / T, 2);
    if (l0 > 0 && l0 <= w) ++expect;
    for (int m = 1; m <= 4; ++m)
      if (l0 + m * m <= w) expect += 2;
  }
  CHECK(product_benchmark(*circle(), 0, T, s) == expect);
  const auto ev = product_eigenvalues(*circle(), 0, T, s);
  CHECK(std::is_sorted(ev.begin(), ev.end()));
  CHECK_THROWS_AS(product_benchmark(*circle(), 0, 0.0, 4.0), InvalidArgument);
}

TEST_CASE("counting on a free Neumann interval") {
  const double h = 1.0 / 16;
  for (double T : {10.0, 17.0}) {
    const auto G = free_nn(T, h, 0.0);
    const int n = G.points();
    for (double s : {4.41, 9.61}) {
      const double w = pi * pi * s / (T * T);
      int expect = 0;
      for (int k = 1; k < n; ++k)
        if (lattice_neumann(k, n, h) <= w) ++expect;
      CHECK(count_low_eigenvalues(G, s) == expect);
      const auto ev = window_eigenvalues(G, s);
      const auto br = coexact_split_counts(G, ev, s);
      CHECK(br.exact + br.coexact == expect);
    }
  }
}

TEST_CASE("eigenvalue list must cover the window") {
  const auto G = free_nn(10.0, 1.0 / 16);
  auto ev = window_eigenvalues(G, 9.0);
  ev.values.resize(ev.values.size() / 2);
  CHECK_THROWS_AS(count_low_eigenvalues(G, ev, 9.0), InsufficientEigenvalues);
  // a list made for a bigger window is fine for a smaller one
  const auto big = window_eigenvalues(G, 16.0);
  CHECK(count_low_eigenvalues(G, big, 9.0) == count_low_eigenvalues(G, 9.0));
}

TEST_CASE("density sweep and csv") {
  auto build = [](double T) { return free_nn(T, 1.0 / 16); };
  const std::vector<double> s{4.41, 9.61}, Ts{10.0, 20.0};
  const auto r1 = density_sweep(build, 0, s, Ts, 1);
  const auto r2 = density_sweep(build, 0, s, Ts, 2);
  REQUIRE(r1.rows.size() == r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) CHECK(r1.rows[i].count == r2.rows[i].count);
  CHECK(r1.betti_lo == 0);
  CHECK(r1.betti_hi == 1);
  // count ~ 2 sqrt(s) (1 + 2 / T) on a free interval of length 2T + 4
  CHECK(r1.max_abs_residual() <= 2.0 * std::sqrt(9.61) * 4.0 / 10.0 + 1.0);
  const auto f = std::filesystem::temp_directory_path() / "neckspec_density_test.csv";
  write_density_csv(f, r1);
  std::ifstream in(f);
  std::string line;
  std::getline(in, line);
  CHECK(line == "q,T,s,count,prediction,residual,branch");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(r1.rows.size()));
  std::filesystem::remove(f);
  CHECK_THROWS_AS(density_sweep(build, 0, {}, Ts), InvalidArgument);
}

TEST_CASE("test space dimensions and membership") {
  for (int n : {2, 3, 4}) {
    const int K = n + 3, N = 2 * K + 1;
    CHECK(make_test_space(TestSpaceKind::Vn, n, K).dim() == 2 * n - 2);
    CHECK(make_test_space(TestSpaceKind::Wn, n, K).dim() == 2 * n - 3);
    const auto E = make_test_space(TestSpaceKind::E, n, K);
    CHECK(E.dim() == N - 3);
    CHECK(E.constraint_rank() == 3);
    const auto Vp = make_test_space(TestSpaceKind::VnPrime, n, K);
    CHECK(Vp.dim() == N - 3 - 2 * n);
    for (int j = 0; j < Vp.dim(); ++j) CHECK(satisfies(E, Vp.basis.col(j), 1e-10));
  }
  // hand example in V_2: a_{+-1} = a_{+-2} = 1
  const auto V2 = make_test_space(TestSpaceKind::Vn, 2, 4);
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(9);
  a(4 - 2) = a(4 - 1) = a(4 + 1) = a(4 + 2) = 1.0;
  CHECK(satisfies(V2, a));
  a(4 + 2) = 2.0;
  CHECK_FALSE(satisfies(V2, a));
  CHECK_THROWS_AS(make_test_space(TestSpaceKind::Vn, 1, 4), InvalidArgument);
  CHECK_THROWS_AS(make_test_space(TestSpaceKind::VnPrime, 3, 4), InvalidArgument);
}

TEST_CASE("real trial functions vanish to first order at the ends") {
  for (int n : {2, 3, 5}) {
    const auto B = real_Vn_basis(n);
    REQUIRE(static_cast<int>(B.size()) == 2 * n - 2);
    const double d = 1e-6;
    for (const auto& f : B)
      for (double x : {-1.0, 1.0}) {
        CHECK(std::abs(f(x)) < 1e-12);
        CHECK(std::abs((f(x + d) - f(x - d)) / (2 * d)) < 1e-6);
      }
    // Gram matrix on a fine grid is nonsingular
    const int m = 2000;
    Eigen::MatrixXd P(m, B.size());
    for (int j = 0; j < m; ++j)
      for (std::size_t i = 0; i < B.size(); ++i) P(j, i) = B[i](-1.0 + (j + 0.5) * 2.0 / m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P.transpose() * P / m);
    CHECK(es.eigenvalues().minCoeff() > 1e-3);
  }
}

TEST_CASE("min-max count from the trial space") {
  for (int q : {0, 1}) {
    const auto G = free_nn(20.0, 1.0 / 32, 1.0, q);
    const int zero_modes = q == 0 ? 1 : 2;
    for (int n : {2, 3}) {
      const auto r = minmax_upper_from_Vn(G, n, 0.1);
      CHECK(r.trial_dim == (2 * n - 2) * zero_modes);
      CHECK(r.rayleigh_max <= 1.05 * r.bound);
      CHECK(r.count_below >= r.trial_dim);
      CHECK(r.count_nonzero >= r.trial_dim - zero_modes);
    }
  }
  // a grid too coarse to resolve the trial functions
  CHECK_THROWS_AS(minmax_upper_from_Vn(free_nn(2.0, 1.0 / 16), 40, 0.1), AnalysisError);
}

TEST_CASE("H operator against its closed form") {
  SplitMix64 rng(7);
  const int K = 7;
  const auto E = make_test_space(TestSpaceKind::E, 2, K);
  for (double T : {3.0, 8.0}) {
    Eigen::VectorXcd c(E.dim());
    for (int i = 0; i < c.size(); ++i) c(i) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Eigen::VectorXcd a = E.basis * c;
    const auto r = h_operator_check(a, T);
    CHECK(r.max_deviation <= 1e-6 * r.f_norm);
    CHECK(r.tail <= 1e-6 * r.f_norm);
    // Parseval for f_T
    CHECK(r.f_norm == doctest::Approx(std::sqrt(2.0 * T * a.squaredNorm())).epsilon(1e-6));
  }
  for (int n : {2, 3, 4}) {
    const auto Vp = make_test_space(TestSpaceKind::VnPrime, n, n + 4);
    Eigen::VectorXcd c(Vp.dim());
    for (int i = 0; i < c.size(); ++i) c(i) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double T = 6.0;
    const auto r = h_operator_check(Vp.basis * c, T);
    CHECK(r.h_norm <= T * T / ((n + 1) * (n + 1) * pi * pi) * r.f_norm * (1 + 1e-6));
  }
  Eigen::VectorXcd bad = Eigen::VectorXcd::Zero(5);
  bad(3) = 1.0;
  CHECK_THROWS_AS(h_operator_check(bad, 4.0), InvalidArgument);
}

TEST_CASE("first nonzero eigenvalue of the scalar model") {
  const double h = 1.0 / 16;
  for (double T : {10.0, 20.0}) {
    const auto G = free_nn(T, h);
    const auto r = scalar_lambda1_bounds(G);
    CHECK(r.lambda1 == doctest::Approx(lattice_neumann(1, G.points(), h)).epsilon(1e-9));
    CHECK(r.lambda1 <= r.rayleigh);
    CHECK(r.rayleigh * T * T <= 6.0);
  }
  CHECK_THROWS_AS(scalar_lambda1_bounds(free_nn(5.0, h, 1.0, 1)), InvalidArgument);
}

TEST_CASE("kernel angles") {
  const double h = 1.0 / 16;
  {
    const auto G = free_nn(10.0, h);
    const auto S = prepare_gluing(G);
    const auto s = kernel_angles(G, S);
    REQUIRE(s.size() == 1);
    CHECK(s[0] < 1e-8);
  }
  auto b = block(Boundary::Neumann, 1.0, 0.5);
  b.profiles[0] = 0.8;
  std::vector<double> sines;
  for (double T : {10.0, 20.0}) {
    const auto G = assemble(b, b, 0, T, h, 2.0);
    const auto S = prepare_gluing(G);
    const auto s = kernel_angles(G, S);
    REQUIRE(s.size() == 1);
    sines.push_back(s[0]);
  }
  CHECK(sines[1] < sines[0]);
  CHECK(sines[0] < 0.1);
  const auto nd = assemble(block(Boundary::Neumann), block(Boundary::Dirichlet), 0, 8.0, h, 2.0);
  CHECK(kernel_angles(nd, prepare_gluing(nd)).empty());
}
