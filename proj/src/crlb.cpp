#include "dsce/crlb.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dsce {

namespace {
using cd = std::complex<double>;

void check_inputs(const Eigen::MatrixXcd& A, double sigma2,
                  const Eigen::VectorXd& theta) {
  if (sigma2 <= 0) throw std::invalid_argument("crlb: sigma2 must be > 0");
  if (theta.size() != A.cols())
    throw std::invalid_argument("crlb: theta size must match dictionary");
  if ((theta.array() <= 0).any())
    throw std::invalid_argument("crlb: prior precisions must be > 0");
}
}  // namespace

Eigen::MatrixXd real_split(const Eigen::MatrixXcd& A) {
  const Eigen::Index m = A.rows(), n = A.cols();
  Eigen::MatrixXd R(2 * m, 2 * n);
  R.topLeftCorner(m, n) = A.real();
  R.topRightCorner(m, n) = -A.imag();
  R.bottomLeftCorner(m, n) = A.imag();
  R.bottomRightCorner(m, n) = A.real();
  return R;
}

Eigen::MatrixXcd compute_bim(const Eigen::MatrixXcd& A, double sigma2,
                             const Eigen::VectorXd& theta) {
  check_inputs(A, sigma2, theta);
  const Eigen::Index L = A.cols();
  const double sigma2_r = sigma2 / 2;  // per real component

  Eigen::MatrixXd phi_r = real_split(A).transpose() * real_split(A) / sigma2_r;
  for (Eigen::Index l = 0; l < L; ++l) {
    phi_r(l, l) += 2 * theta(l);
    phi_r(L + l, L + l) += 2 * theta(l);
  }

  const auto rr = phi_r.topLeftCorner(L, L);
  const auto ri = phi_r.topRightCorner(L, L);
  const auto ir = phi_r.bottomLeftCorner(L, L);
  const auto ii = phi_r.bottomRightCorner(L, L);
  return (0.25 * (rr + ii)).cast<cd>() + cd(0, 0.25) * (ir - ri).cast<cd>();
}

Eigen::MatrixXcd compute_bim_direct(const Eigen::MatrixXcd& A, double sigma2,
                                    const Eigen::VectorXd& theta) {
  check_inputs(A, sigma2, theta);
  Eigen::MatrixXcd phi = A.adjoint() * A / sigma2;
  phi.diagonal() += theta.cast<cd>();
  return phi;
}

std::vector<Eigen::MatrixXcd> grid_channel_components(
    const DsGrid& grid, const Eigen::MatrixXcd& G,
    const SamplingLayout& layout) {
  constexpr double two_pi = 2 * std::numbers::pi;
  const Eigen::MatrixXcd Fh = carrier_dft(layout).adjoint();
  const Eigen::VectorXd f = layout.f();

  std::vector<Eigen::MatrixXcd> comps;
  comps.reserve(grid.size());
  for (int l = 0; l < grid.size(); ++l) {
    const double tau = grid.tau_bar(l);
    const double alpha = grid.alpha_of(grid.omega_bar(l));
    Eigen::VectorXcd gamma(f.size());
    for (Eigen::Index k = 0; k < f.size(); ++k)
      gamma(k) = std::polar(1.0, -two_pi * f(k) * tau);
    const Eigen::MatrixXcd E = carrier_dft_scaled(layout, alpha);
    comps.push_back(std::sqrt(alpha) * G.adjoint() *
                    (Fh * gamma.asDiagonal() * E) * G);
  }
  return comps;
}

Eigen::VectorXd genie_theta(const DsGrid& grid, const PathSet& truth,
                            double theta_off) {
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(grid.size(), theta_off);
  for (int p = 0; p < truth.count(); ++p) {
    const double omega = std::log(truth.alpha(p)) / std::log(grid.q_alpha);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int l = 0; l < grid.size(); ++l) {
      const double d = std::abs(grid.tau_bar(l) - truth.tau(p)) / grid.r_tau +
                       std::abs(grid.omega_bar(l) - omega) / grid.r_omega;
      if (d < best_d) {
        best_d = d;
        best = l;
      }
    }
    theta(best) = 1.0;
  }
  return theta;
}

CrlbResult compute_crlb(const Eigen::MatrixXcd& A, double sigma2,
                        const Eigen::VectorXd& theta,
                        const std::vector<Eigen::MatrixXcd>& components) {
  if (static_cast<Eigen::Index>(components.size()) != A.cols())
    throw std::invalid_argument("crlb: components size must match dictionary");

  CrlbResult res;
  res.bim = compute_bim(A, sigma2, theta);
  const Eigen::Index L = A.cols();

  Eigen::MatrixXcd gram(L, L);  // gram(m, l) = <V_m, V_l>_F
  for (Eigen::Index m = 0; m < L; ++m)
    for (Eigen::Index l = m; l < L; ++l) {
      const cd g = (components[m].conjugate().cwiseProduct(components[l])).sum();
      gram(m, l) = g;
      gram(l, m) = std::conj(g);
    }

  const Eigen::MatrixXcd inv = res.bim.ldlt().solve(
      Eigen::MatrixXcd::Identity(L, L));
  res.crlb_trace = ((inv.array() * gram.transpose().array()).sum()).real();
  return res;
}

}  // namespace dsce
