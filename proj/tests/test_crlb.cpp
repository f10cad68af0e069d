#include "doctest.h"

#include <random>

#include "dsce/crlb.hpp"
#include "dsce/rng.hpp"

using namespace dsce;

namespace {

Eigen::MatrixXcd random_matrix(int m, int n, std::mt19937_64& rng) {
  Eigen::MatrixXcd A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = complex_gaussian(rng, 1.0);
  return A;
}

}  // namespace

TEST_CASE("real_split embeds complex multiplication") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXcd A = random_matrix(5, 4, rng);
  const Eigen::VectorXcd x = complex_gaussian_vector(rng, 4, 1.0);
  const Eigen::VectorXcd y = A * x;
  Eigen::VectorXd xr(8), yr(10);
  xr << x.real(), x.imag();
  yr << y.real(), y.imag();
  CHECK((real_split(A) * xr - yr).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("real-split BIM recombination equals the complex form") {
  std::mt19937_64 rng(17);
  for (int inst = 0; inst < 50; ++inst) {
    const int m = 8 + inst % 5, n = 6 + inst % 7;
    const Eigen::MatrixXcd A = random_matrix(m, n, rng);
    Eigen::VectorXd theta(n);
    for (int l = 0; l < n; ++l)
      theta(l) = 0.1 + 5.0 * std::uniform_real_distribution<>(0, 1)(rng);
    const double sigma2 = 0.3 + inst * 0.01;
    const Eigen::MatrixXcd split = compute_bim(A, sigma2, theta);
    const Eigen::MatrixXcd direct = compute_bim_direct(A, sigma2, theta);
    CHECK((split - direct).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("crlb trace matches the explicit U Phi^{-1} U^H evaluation") {
  std::mt19937_64 rng(23);
  const int m = 6, L = 5, d = 4;  // d x d effective channels
  const Eigen::MatrixXcd A = random_matrix(m, L, rng);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(L, 0.7);
  std::vector<Eigen::MatrixXcd> comps(L);
  Eigen::MatrixXcd U(d * d, L);
  for (int l = 0; l < L; ++l) {
    comps[l] = random_matrix(d, d, rng);
    U.col(l) = Eigen::Map<const Eigen::VectorXcd>(comps[l].data(), d * d);
  }
  const double sigma2 = 0.2;
  const CrlbResult res = compute_crlb(A, sigma2, theta, comps);
  const Eigen::MatrixXcd phi = compute_bim_direct(A, sigma2, theta);
  const double direct =
      (U * phi.inverse() * U.adjoint()).trace().real();
  CHECK(res.crlb_trace == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("crlb grows with the noise variance") {
  std::mt19937_64 rng(29);
  const int m = 10, L = 8, d = 4;
  const Eigen::MatrixXcd A = random_matrix(m, L, rng);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(L, 1.0);
  std::vector<Eigen::MatrixXcd> comps(L);
  for (int l = 0; l < L; ++l) comps[l] = random_matrix(d, d, rng);
  double prev = 0;
  for (double sigma2 : {0.01, 0.1, 1.0, 10.0}) {
    const double v = compute_crlb(A, sigma2, theta, comps).crlb_trace;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("genie theta marks the cells nearest the true paths") {
  const DsGrid grid = build_grid(32e-3, 1.001, 50, 5);
  PathSet p;
  p.h.resize(2);
  p.tau.resize(2);
  p.alpha.resize(2);
  p.h << 1.0, 1.0;
  const int l0 = 5 * 9 + 1, l1 = 5 * 31 + 3;
  // slightly off the lattice, still nearest to l0/l1
  p.tau << grid.tau_bar(l0) + 0.2 * grid.r_tau,
      grid.tau_bar(l1) - 0.3 * grid.r_tau;
  p.alpha << grid.alpha_of(grid.omega_bar(l0) + 0.1),
      grid.alpha_of(grid.omega_bar(l1) - 0.2);
  const Eigen::VectorXd theta = genie_theta(grid, p);
  int active = 0;
  for (int l = 0; l < grid.size(); ++l) {
    if (theta(l) == 1.0) active++;
    else CHECK(theta(l) == 1e6);
  }
  CHECK(active == 2);
  CHECK(theta(l0) == 1.0);
  CHECK(theta(l1) == 1.0);
}
