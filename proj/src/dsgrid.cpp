#include "dsce/dsgrid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsce {

namespace {
constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;
}  // namespace

DsGrid build_grid(double tau_max, double alpha_max, int N_tau, int M_alpha) {
  if (N_tau < 1) throw std::invalid_argument("N_tau must be >= 1");
  if (M_alpha < 1 || M_alpha % 2 == 0)
    throw std::invalid_argument("M_alpha must be odd");
  if (alpha_max < 1) throw std::invalid_argument("alpha_max must be >= 1");
  DsGrid g;
  g.N_tau = N_tau;
  g.M_alpha = M_alpha;
  g.tau_max = tau_max;
  g.alpha_max = alpha_max;
  g.r_tau = tau_max / N_tau;
  g.r_omega = 1.0;
  g.q_alpha = M_alpha > 1 ? std::pow(alpha_max, 2.0 / (M_alpha - 1)) : 1.0;
  const int L = N_tau * M_alpha;
  g.tau_bar.resize(L);
  g.omega_bar.resize(L);
  for (int np = 0; np < N_tau; ++np)
    for (int mp = 0; mp < M_alpha; ++mp) {
      const int l = np * M_alpha + mp;
      g.tau_bar(l) = np * g.r_tau;
      g.omega_bar(l) = (-(M_alpha - 1) / 2.0 + mp) * g.r_omega;
    }
  return g;
}

BlockAtomContext::BlockAtomContext(SamplingLayout layout, Eigen::MatrixXcd G,
                                   Eigen::VectorXcd x, double q_alpha)
    : layout_(layout), q_alpha_(q_alpha) {
  if (G.rows() != layout.M || x.size() != layout.M)
    throw std::invalid_argument("atom context: dimension mismatch");
  Gh_ = G.adjoint();
  Fh_ = carrier_dft(layout).adjoint();
  Gx_ = G * x;
  x_ = std::move(x);
  f_ = layout.f();
  t_ = layout.t();
}

void BlockAtomContext::scaled_mix(double alpha, int order, Eigen::VectorXcd& w,
                                  Eigen::VectorXcd& w1,
                                  Eigen::VectorXcd& w2) const {
  const int M = layout_.M;
  const double s = 1.0 / std::sqrt(static_cast<double>(M));
  const double ia2 = 1.0 / (alpha * alpha);
  const double ia3 = ia2 / alpha;
  w.setZero(M);
  if (order >= 1) w1.setZero(M);
  if (order >= 2) w2.setZero(M);
  for (int l = 0; l < M; ++l) {
    cd acc0 = 0, acc1 = 0, acc2 = 0;
    for (int n = 0; n < M; ++n) {
      const double ft = f_(l) * t_(n);
      const cd e = s * std::exp(cd(0, -2.0 * kPi * ft / alpha)) * Gx_(n);
      acc0 += e;
      if (order >= 1) {
        const cd d1(0, 2.0 * kPi * ft * ia2);  // d/dalpha of the exponent
        acc1 += d1 * e;
        if (order >= 2) acc2 += (d1 * d1 - cd(0, 4.0 * kPi * ft * ia3)) * e;
      }
    }
    w(l) = acc0;
    if (order >= 1) w1(l) = acc1;
    if (order >= 2) w2(l) = acc2;
  }
}

Eigen::VectorXcd BlockAtomContext::atom(double tau, double omega) const {
  return derivatives(tau, omega, 0).a;
}

AtomDerivs BlockAtomContext::derivatives(double tau, double omega,
                                         int order) const {
  const int M = layout_.M;
  const double alpha = std::pow(q_alpha_, omega);
  const double lnq = std::log(q_alpha_);
  Eigen::VectorXcd w, w1, w2;
  scaled_mix(alpha, order, w, w1, w2);

  Eigen::VectorXcd ph(M);
  for (int k = 0; k < M; ++k) ph(k) = std::exp(cd(0, -2.0 * kPi * f_(k) * tau));

  // prefactor sqrt(alpha) * (1/alpha) from Gamma
  const double c = 1.0 / std::sqrt(alpha);
  const double c1 = -0.5 * c / alpha;           // dc/dalpha
  const double c2 = 0.75 * c / (alpha * alpha); // d2c/dalpha2

  auto project = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return Gh_ * (Fh_ * v);
  };

  AtomDerivs d;
  const Eigen::VectorXcd u = ph.cwiseProduct(w);
  d.a = c * project(u);

  if (order >= 1) {
    Eigen::VectorXcd utau(M), u1(M);
    for (int k = 0; k < M; ++k) {
      const cd dk(0, -2.0 * kPi * f_(k));
      utau(k) = dk * u(k);
      u1(k) = ph(k) * w1(k);
    }
    d.da_tau = c * project(utau);
    const Eigen::VectorXcd da_alpha = c1 * project(u) + c * project(u1);
    d.da_omega = (alpha * lnq) * da_alpha;

    if (order >= 2) {
      Eigen::VectorXcd utt(M), u2(M);
      for (int k = 0; k < M; ++k) {
        const cd dk(0, -2.0 * kPi * f_(k));
        utt(k) = dk * dk * u(k);
        u2(k) = ph(k) * w2(k);
      }
      d.d2a_tau = c * project(utt);
      const Eigen::VectorXcd d2a_alpha =
          c2 * project(u) + 2.0 * c1 * project(u1) + c * project(u2);
      // omega -> alpha chain rule: alpha' = alpha ln q, alpha'' = alpha ln^2 q
      d.d2a_omega = (alpha * lnq) * (alpha * lnq) * d2a_alpha +
                    (alpha * lnq * lnq) * da_alpha;
    }
  }
  return d;
}

StackedAtomContext::StackedAtomContext(std::shared_ptr<const AtomBasis> top,
                                       std::shared_ptr<const AtomBasis> bottom)
    : top_(std::move(top)), bottom_(std::move(bottom)) {
  if (std::abs(top_->q_alpha() - bottom_->q_alpha()) > 1e-12)
    throw std::invalid_argument("stacked contexts must share q_alpha");
}

int StackedAtomContext::rows() const { return top_->rows() + bottom_->rows(); }

Eigen::VectorXcd StackedAtomContext::atom(double tau, double omega) const {
  Eigen::VectorXcd v(rows());
  v << top_->atom(tau, omega), bottom_->atom(tau, omega);
  return v;
}

AtomDerivs StackedAtomContext::derivatives(double tau, double omega,
                                           int order) const {
  const AtomDerivs a = top_->derivatives(tau, omega, order);
  const AtomDerivs b = bottom_->derivatives(tau, omega, order);
  AtomDerivs d;
  auto stack = [&](const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    Eigen::VectorXcd v(rows());
    v << x, y;
    return v;
  };
  d.a = stack(a.a, b.a);
  if (order >= 1) {
    d.da_tau = stack(a.da_tau, b.da_tau);
    d.da_omega = stack(a.da_omega, b.da_omega);
  }
  if (order >= 2) {
    d.d2a_tau = stack(a.d2a_tau, b.d2a_tau);
    d.d2a_omega = stack(a.d2a_omega, b.d2a_omega);
  }
  return d;
}

Dictionary build_dictionary(const DsGrid& grid, const AtomBasis& basis) {
  Dictionary dict;
  dict.grid = grid;
  dict.basis = &basis;
  dict.A.resize(basis.rows(), grid.size());
  for (int l = 0; l < grid.size(); ++l)
    dict.A.col(l) = basis.atom(grid.tau_bar(l), grid.omega_bar(l));
  return dict;
}

}  // namespace dsce
