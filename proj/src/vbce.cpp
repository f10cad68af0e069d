#include "dsce/vbce.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dsce {

namespace {
constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;

double digamma(double x) {
  // asymptotic expansion with recurrence shift
  double r = 0;
  while (x < 6.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double ix = 1.0 / x, ix2 = ix * ix;
  return r + std::log(x) - 0.5 * ix -
         ix2 * (1.0 / 12 - ix2 * (1.0 / 120 - ix2 / 252));
}

double gamma_entropy(double shape, double rate) {
  return shape - std::log(rate) + std::lgamma(shape) +
         (1.0 - shape) * digamma(shape);
}
}  // namespace

HPosterior::HPosterior(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                       const Eigen::VectorXd& delta, double gamma) {
  if ((delta.array() <= 0).any() || gamma <= 0)
    throw std::invalid_argument("precisions must be positive");
  const Eigen::Index M = A.rows();
  A_ = A;
  dinv_ = delta.cwiseInverse();

  // W = (1/gamma) I + A D A^H
  const Eigen::MatrixXcd AD = A * dinv_.asDiagonal();
  Eigen::MatrixXcd W = AD * A.adjoint();
  W.diagonal().array() += 1.0 / gamma;

  Eigen::LLT<Eigen::MatrixXcd> llt(W);
  if (llt.info() != Eigen::Success) {
    W.diagonal().array() += 1e-12 * W.real().trace() / static_cast<double>(M);
    llt.compute(W);
  }
  Y_ = llt.solve(A);

  // mu = gamma * (D z - D A^H W^{-1} A D z), z = A^H y
  const Eigen::VectorXcd z = A.adjoint() * y;
  const Eigen::VectorXcd Dz = dinv_.asDiagonal() * z;
  const Eigen::VectorXcd corr = A.adjoint() * llt.solve(A * Dz);
  mu_ = gamma * (Dz - dinv_.asDiagonal() * corr);

  // diag(Sigma) = dinv_l - dinv_l^2 Re(a_l^H (W^{-1} a_l))
  sigma_diag_.resize(A.cols());
  for (Eigen::Index l = 0; l < A.cols(); ++l) {
    const double q = std::real(A.col(l).dot(Y_.col(l)));
    sigma_diag_(l) = dinv_(l) - dinv_(l) * dinv_(l) * q;
    if (sigma_diag_(l) < 0) sigma_diag_(l) = 0;
  }

  // Tr(A Sigma A^H) = Tr(S) - Tr(S W^{-1} S), S = W - (1/gamma) I
  Eigen::MatrixXcd S = W;
  S.diagonal().array() -= 1.0 / gamma;
  trace_quad_ = std::real(S.trace()) - std::real((S * llt.solve(S)).trace());
  if (trace_quad_ < 0) trace_quad_ = 0;

  // log det Sigma = sum log dinv - M log gamma - log det W
  double logdetW = 0;
  for (Eigen::Index i = 0; i < M; ++i)
    logdetW += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
  logdet_ = dinv_.array().log().sum() -
            static_cast<double>(M) * std::log(gamma) - logdetW;
}

Eigen::VectorXd HPosterior::second_moment() const {
  return mu_.cwiseAbs2() + sigma_diag_;
}

Eigen::MatrixXcd HPosterior::sigma_block(const std::vector<int>& idx) const {
  const int P = static_cast<int>(idx.size());
  Eigen::MatrixXcd As(A_.rows(), P), Ys(A_.rows(), P);
  Eigen::VectorXd ds(P);
  for (int i = 0; i < P; ++i) {
    As.col(i) = A_.col(idx[i]);
    Ys.col(i) = Y_.col(idx[i]);
    ds(i) = dinv_(idx[i]);
  }
  Eigen::MatrixXcd S = -(ds.asDiagonal() * (As.adjoint() * Ys) * ds.asDiagonal());
  S.diagonal() += ds.cast<cd>();
  return (S + S.adjoint()) / 2.0;  // enforce Hermitian symmetry
}

Eigen::MatrixXcd HPosterior::sigma_full() const {
  Eigen::MatrixXcd S =
      -(dinv_.asDiagonal() * (A_.adjoint() * Y_) * dinv_.asDiagonal());
  S.diagonal() += dinv_.cast<cd>();
  return (S + S.adjoint()) / 2.0;
}

void vb_update_h_direct(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                        const Eigen::VectorXd& delta, double gamma,
                        Eigen::VectorXcd& mu, Eigen::MatrixXcd& sigma) {
  Eigen::MatrixXcd Phi = gamma * (A.adjoint() * A);
  Phi.diagonal() += delta.cast<cd>();
  sigma = Phi.inverse();
  mu = gamma * (sigma * (A.adjoint() * y));
}

Eigen::VectorXd vb_update_delta(const HPosterior& post, double eps1,
                                double eps2) {
  return (eps1 + 1.0) /
         (post.second_moment().array() + eps2);
}

double vb_update_gamma(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                       const HPosterior& post, double eps3, double eps4) {
  const double res2 =
      (y - A * post.mu()).squaredNorm() + post.trace_quadratic();
  return (static_cast<double>(A.rows()) + eps3) / (eps4 + res2);
}

double evidence_bound(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                      const HPosterior& post, const Eigen::VectorXd& delta_rate,
                      double gamma_rate, const VbConfig& cfg) {
  const double Mp = static_cast<double>(A.rows());
  const double L = static_cast<double>(A.cols());
  const double a_d = cfg.eps1 + 1.0;
  const double a_g = cfg.eps3 + Mp;

  const Eigen::ArrayXd rate = delta_rate.array();
  const Eigen::ArrayXd mean_delta = a_d / rate;
  const Eigen::ArrayXd mean_log_delta = digamma(a_d) - rate.log();
  const double mean_gamma = a_g / gamma_rate;
  const double mean_log_gamma = digamma(a_g) - std::log(gamma_rate);

  const double res2 = (y - A * post.mu()).squaredNorm() + post.trace_quadratic();
  const Eigen::ArrayXd h2 = post.second_moment().array();

  double e = 0;
  // E ln p(y | h, gamma)
  e += Mp * mean_log_gamma - Mp * std::log(kPi) - mean_gamma * res2;
  // E ln p(h | delta)
  e += mean_log_delta.sum() - L * std::log(kPi) - (mean_delta * h2).sum();
  // E ln p(delta), E ln p(gamma)
  e += L * (cfg.eps1 * std::log(cfg.eps2) - std::lgamma(cfg.eps1)) +
       (cfg.eps1 - 1.0) * mean_log_delta.sum() - cfg.eps2 * mean_delta.sum();
  e += cfg.eps3 * std::log(cfg.eps4) - std::lgamma(cfg.eps3) +
       (cfg.eps3 - 1.0) * mean_log_gamma - cfg.eps4 * mean_gamma;
  // entropies
  e += L * std::log(kPi * std::numbers::e) + post.logdet_sigma();
  for (Eigen::Index l = 0; l < delta_rate.size(); ++l)
    e += gamma_entropy(a_d, delta_rate(l));
  e += gamma_entropy(a_g, gamma_rate);
  return e;
}

std::vector<int> select_support(const Eigen::VectorXcd& mu, double frac) {
  const int L = static_cast<int>(mu.size());
  const int P = std::min(L, static_cast<int>(std::ceil(frac * L)));
  std::vector<int> idx(L);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double ma = std::abs(mu(a)), mb = std::abs(mu(b));
    if (ma != mb) return ma > mb;
    return a < b;
  });
  idx.resize(P);
  return idx;
}

namespace {

Eigen::VectorXd clamp_each(Eigen::VectorXd v, double lim) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = std::clamp(v(i), -lim, lim);
  return v;
}

/// beta = P^{-1} v when P is well conditioned, otherwise element-wise
/// Gauss-Seidel-style updates that skip zero-diagonal entries.
Eigen::VectorXd solve_offsets(const Eigen::MatrixXd& P, const Eigen::VectorXd& v,
                              const Eigen::VectorXd& beta_prev) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU |
                                                     Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin > 0 && smax / smin < 1e12) return P.llt().solve(v);

  Eigen::VectorXd beta = beta_prev;
  for (Eigen::Index p = 0; p < v.size(); ++p) {
    const double pd = P(p, p);
    if (pd <= 0) continue;
    double num = v(p);
    for (Eigen::Index m = 0; m < v.size(); ++m)
      if (m != p) num -= P(p, m) * beta_prev(m);
    beta(p) = num / pd;
  }
  return beta;
}

}  // namespace

RefinementStep fvb_refine(const std::vector<int>& support,
                          const Eigen::VectorXcd& mu_s,
                          const Eigen::MatrixXcd& sigma_s,
                          const Eigen::MatrixXcd& A0, const Eigen::MatrixXcd& B,
                          const Eigen::MatrixXcd& C,
                          const Eigen::VectorXd& beta_tau_prev,
                          const Eigen::VectorXd& beta_omega_prev,
                          const Eigen::VectorXcd& y, double r_tau,
                          double r_omega) {
  RefinementStep step;
  step.support = support;
  const Eigen::MatrixXcd moment = mu_s * mu_s.adjoint() + sigma_s;

  // delay pass, holding the previous log-scale offsets fixed
  step.P_tau = ((B.adjoint() * B).conjugate().cwiseProduct(moment)).real();
  {
    const Eigen::MatrixXcd Aeff = A0 + C * beta_omega_prev.asDiagonal();
    const Eigen::VectorXcd resid = y - Aeff * mu_s;
    step.v_tau =
        (mu_s.conjugate().asDiagonal() * (B.adjoint() * resid) -
         (B.adjoint() * Aeff * sigma_s).diagonal())
            .real();
  }
  step.beta_tau = clamp_each(
      solve_offsets(step.P_tau, step.v_tau, beta_tau_prev), r_tau / 2.0);

  // log-scale pass with the fresh delay offsets
  step.P_omega = ((C.adjoint() * C).conjugate().cwiseProduct(moment)).real();
  {
    const Eigen::MatrixXcd Aeff = A0 + B * step.beta_tau.asDiagonal();
    const Eigen::VectorXcd resid = y - Aeff * mu_s;
    step.v_omega =
        (mu_s.conjugate().asDiagonal() * (C.adjoint() * resid) -
         (C.adjoint() * Aeff * sigma_s).diagonal())
            .real();
  }
  step.beta_omega = clamp_each(
      solve_offsets(step.P_omega, step.v_omega, beta_omega_prev), r_omega / 2.0);
  return step;
}

void svb_refine(const std::vector<int>& support, const Eigen::VectorXcd& mu_s,
                const Eigen::MatrixXcd& sigma_s, const Eigen::VectorXcd& y,
                const AtomBasis& basis, const DsGrid& grid,
                Eigen::VectorXd& tau, Eigen::VectorXd& omega,
                Eigen::MatrixXcd& A) {
  const int P = static_cast<int>(support.size());
  Eigen::MatrixXcd As(A.rows(), P);
  for (int i = 0; i < P; ++i) As.col(i) = A.col(support[i]);
  Eigen::VectorXcd resid = y - As * mu_s;

  // coordinate order: descending |mu|
  std::vector<int> order(P);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(mu_s(a)) > std::abs(mu_s(b));
  });

  const Eigen::MatrixXcd sigmaHT = sigma_s.adjoint();

  auto newton_step = [&](int i, bool along_tau) {
    const int l = support[i];
    const AtomDerivs d = basis.derivatives(tau(l), omega(l), 2);
    const Eigen::VectorXcd& da = along_tau ? d.da_tau : d.da_omega;
    const Eigen::VectorXcd& d2a = along_tau ? d.d2a_tau : d.d2a_omega;
    const cd mu_i = mu_s(i);
    const Eigen::RowVectorXcd srow = sigmaHT.row(i);
    const Eigen::VectorXcd As_h_da = As.adjoint() * da;
    const Eigen::VectorXcd As_h_d2a = As.adjoint() * d2a;

    const double g1 =
        std::real(-resid.dot(mu_i * da) + (srow * As_h_da)(0));
    const double g2 =
        std::real((srow * As_h_d2a)(0)) +
        (std::norm(mu_i) + std::real(sigma_s(i, i))) * da.squaredNorm();
    if (!(g2 > 0)) return;

    const double cur = along_tau ? tau(l) : omega(l);
    const double base = along_tau ? grid.tau_bar(l) : grid.omega_bar(l);
    const double res = along_tau ? grid.r_tau : grid.r_omega;
    // overshooting steps are clamped to the cell edge; true offsets sit
    // anywhere in the cell, including near its boundary
    double next =
        std::clamp(cur - g1 / g2, base - res / 2.0, base + res / 2.0);

    // safeguard: accept only steps that decrease the expected residual
    // objective; Newton can overshoot on the oscillatory atom manifold,
    // so halve a rejected step a few times before giving up
    Eigen::VectorXcd a_new, diff;
    double dF = 0.0;
    bool ok = false;
    for (int bt = 0; bt < 4; ++bt) {
      a_new = along_tau ? basis.atom(next, omega(l)) : basis.atom(tau(l), next);
      diff = a_new - As.col(i);
      dF = -2.0 * std::real(std::conj(mu_i) * diff.dot(resid)) +
           std::norm(mu_i) * diff.squaredNorm() +
           2.0 * std::real((sigma_s.row(i) * (As.adjoint() * diff))(0)) +
           std::real(sigma_s(i, i)) * diff.squaredNorm();
      if (dF < 0) {
        ok = true;
        break;
      }
      next = cur + (next - cur) / 2.0;
    }
    if (!ok) return;

    if (along_tau)
      tau(l) = next;
    else
      omega(l) = next;
    resid -= diff * mu_i;
    As.col(i) = a_new;
    A.col(l) = a_new;
  };

  for (int sweep = 0; sweep < 8; ++sweep)
    for (int i : order) {
      newton_step(i, true);
      newton_step(i, false);
    }
}

PathSet ChannelEstimate::as_paths() const {
  PathSet ps;
  ps.h = h_hat;
  ps.tau = tau_hat;
  ps.alpha.resize(omega_hat.size());
  for (Eigen::Index i = 0; i < omega_hat.size(); ++i)
    ps.alpha(i) = std::pow(q_alpha, omega_hat(i));
  return ps;
}

ChannelEstimate run_ce(const Eigen::VectorXcd& y_p, const Dictionary& dict,
                       const VbConfig& cfg,
                       const std::optional<GridState>& warm_start) {
  const DsGrid& grid = dict.grid;
  const int L = grid.size();
  const AtomBasis& basis = *dict.basis;

  Eigen::VectorXd tau = grid.tau_bar;
  Eigen::VectorXd omega = grid.omega_bar;
  Eigen::MatrixXcd A = dict.A;
  if (warm_start) {
    tau = warm_start->tau;
    omega = warm_start->omega;
    for (int l = 0; l < L; ++l)
      if (tau(l) != grid.tau_bar(l) || omega(l) != grid.omega_bar(l))
        A.col(l) = basis.atom(tau(l), omega(l));
  }

  Eigen::VectorXd delta =
      (A.adjoint() * y_p).cwiseAbs().cwiseMax(1e-12).cwiseInverse();
  double gamma = 1.0;

  ChannelEstimate est;
  est.q_alpha = grid.q_alpha;

  // phase 1: plain VB on the full grid
  std::optional<HPosterior> post;
  for (int j = 0; j < cfg.J_max; ++j) {
    post.emplace(A, y_p, delta, gamma);
    const Eigen::VectorXd delta_new = vb_update_delta(*post, cfg.eps1, cfg.eps2);
    gamma = vb_update_gamma(A, y_p, *post, cfg.eps3, cfg.eps4);
    const double rel = (delta_new - delta).norm() / delta.norm();
    delta = delta_new;
    est.iterations = j + 1;
    if (rel <= cfg.eps_conv && j + 1 >= cfg.warmup_iters) break;
  }

  // phase 2: truncate to the thresholded support and continue on the
  // reduced model
  const std::vector<int> support =
      select_support(post->mu(), cfg.threshold_frac);
  const int P = static_cast<int>(support.size());
  Eigen::VectorXd delta_s(P);
  Eigen::MatrixXcd As(A.rows(), P);
  Eigen::MatrixXcd A0(A.rows(), P), B(A.rows(), P), C(A.rows(), P);
  for (int i = 0; i < P; ++i) {
    const int l = support[i];
    delta_s(i) = delta(l);
    As.col(i) = A.col(l);
    if (cfg.refine == RefineMode::FVB) {
      const AtomDerivs d =
          basis.derivatives(grid.tau_bar(l), grid.omega_bar(l), 1);
      A0.col(i) = d.a;
      B.col(i) = d.da_tau;
      C.col(i) = d.da_omega;
    }
  }

  std::optional<HPosterior> post_s;
  for (int j = 0; j < cfg.J_max; ++j) {
    post_s.emplace(As, y_p, delta_s, gamma);
    const Eigen::VectorXd delta_new =
        vb_update_delta(*post_s, cfg.eps1, cfg.eps2);
    gamma = vb_update_gamma(As, y_p, *post_s, cfg.eps3, cfg.eps4);
    double move = 0;  // largest cell-relative offset change of this sweep
    const Eigen::VectorXd tau_before = tau, omega_before = omega;

    // one linearized correction only: re-solving each sweep turns the
    // first-order scheme into frozen-Jacobian Gauss-Newton
    if (cfg.refine == RefineMode::FVB && j == 0) {
      Eigen::VectorXd bt(P), bw(P);
      for (int i = 0; i < P; ++i) {
        const int l = support[i];
        bt(i) = tau(l) - grid.tau_bar(l);
        bw(i) = omega(l) - grid.omega_bar(l);
      }
      const RefinementStep step =
          fvb_refine(support, post_s->mu(), post_s->sigma_full(), A0, B, C, bt,
                     bw, y_p, grid.r_tau, grid.r_omega);
      for (int i = 0; i < P; ++i) {
        const int l = support[i];
        tau(l) = grid.tau_bar(l) + step.beta_tau(i);
        omega(l) = grid.omega_bar(l) + step.beta_omega(i);
        // first-order model throughout the FOA loop; exact atoms are
        // rebuilt once after convergence
        As.col(i) = A0.col(i) + step.beta_tau(i) * B.col(i) +
                    step.beta_omega(i) * C.col(i);
      }
    } else if (cfg.refine == RefineMode::SVB) {
      svb_refine(support, post_s->mu(), post_s->sigma_full(), y_p, basis, grid,
                 tau, omega, A);
      for (int i = 0; i < P; ++i) As.col(i) = A.col(support[i]);
    }
    if (cfg.refine != RefineMode::None)
      for (int l : support)
        move = std::max(
            move, std::max(std::abs(tau(l) - tau_before(l)) / grid.r_tau,
                           std::abs(omega(l) - omega_before(l)) / grid.r_omega));

    const double rel = (delta_new - delta_s).norm() / delta_s.norm();
    delta_s = delta_new;
    est.iterations++;
    if (rel <= cfg.eps_conv && move <= cfg.eps_conv) {
      est.converged = true;
      break;
    }
  }

  if (cfg.refine == RefineMode::FVB) {
    // final posterior with exact atoms at the refined positions
    for (int i = 0; i < P; ++i) {
      const int l = support[i];
      As.col(i) = basis.atom(tau(l), omega(l));
      A.col(l) = As.col(i);
    }
    post_s.emplace(As, y_p, delta_s, gamma);
  }

  est.gamma_hat = gamma;
  est.tau_full = tau;
  est.omega_full = omega;
  est.mu_full = Eigen::VectorXcd::Zero(L);
  est.h_hat = post_s->mu();
  est.tau_hat.resize(P);
  est.omega_hat.resize(P);
  for (int i = 0; i < P; ++i) {
    const int l = support[i];
    est.mu_full(l) = est.h_hat(i);
    est.tau_hat(i) = tau(l);
    est.omega_hat(i) = omega(l);
  }
  return est;
}

ChannelEstimate omp_baseline(const Eigen::VectorXcd& y_p,
                             const Dictionary& dict, int K) {
  if (K > dict.A.rows()) throw std::invalid_argument("OMP: K exceeds measurements");
  ChannelEstimate est;
  est.q_alpha = dict.grid.q_alpha;
  est.mu_full = Eigen::VectorXcd::Zero(dict.grid.size());
  est.tau_full = dict.grid.tau_bar;
  est.omega_full = dict.grid.omega_bar;
  est.converged = true;

  std::vector<int> support;
  Eigen::VectorXcd resid = y_p;
  Eigen::VectorXcd coef;
  const Eigen::VectorXd colnorm = dict.A.colwise().norm();
  for (int k = 0; k < K; ++k) {
    int best = -1;
    double bv = -1;
    for (int l = 0; l < dict.grid.size(); ++l) {
      if (std::find(support.begin(), support.end(), l) != support.end())
        continue;
      if (colnorm(l) <= 0) continue;
      const double c = std::abs(dict.A.col(l).dot(resid)) / colnorm(l);
      if (c > bv) {
        bv = c;
        best = l;
      }
    }
    if (best < 0) break;
    support.push_back(best);
    Eigen::MatrixXcd As(dict.A.rows(), support.size());
    for (size_t i = 0; i < support.size(); ++i) As.col(i) = dict.A.col(support[i]);
    coef = As.colPivHouseholderQr().solve(y_p);
    resid = y_p - As * coef;
  }

  const int P = static_cast<int>(support.size());
  est.h_hat.resize(P);
  est.tau_hat.resize(P);
  est.omega_hat.resize(P);
  for (int i = 0; i < P; ++i) {
    const int l = support[i];
    est.h_hat(i) = coef(i);
    est.mu_full(l) = coef(i);
    est.tau_hat(i) = dict.grid.tau_bar(l);
    est.omega_hat(i) = dict.grid.omega_bar(l);
  }
  est.iterations = P;
  return est;
}

Eigen::MatrixXcd reconstruct_effective_channel(const ChannelEstimate& est,
                                               const WaveformMatrices& wf,
                                               const SamplingLayout& layout) {
  return effective_channel(wf, time_domain_channel_matrix(est.as_paths(), layout));
}

}  // namespace dsce
