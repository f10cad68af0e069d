#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dsce/dsgrid.hpp"

namespace dsce {

enum class RefineMode { None, FVB, SVB };

struct VbConfig {
  double eps1 = 1e-6, eps2 = 1e-6, eps3 = 1e-6, eps4 = 1e-6;
  double eps_conv = 1e-3;
  int J_max = 100;
  double threshold_frac = 0.05;
  RefineMode refine = RefineMode::None;
  // the full-grid phase runs at least this many sweeps before the support
  // is frozen; early supports are unreliable with short pilots
  int warmup_iters = 3;
};

/// Gaussian posterior of the sparse gain vector, kept in inversion-lemma
/// factors: Sigma = D - D A^H W^{-1} A D with D = diag(1/delta) and
/// W = (1/gamma) I + A D A^H.
class HPosterior {
 public:
  HPosterior(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
             const Eigen::VectorXd& delta, double gamma);

  const Eigen::VectorXcd& mu() const { return mu_; }
  const Eigen::VectorXd& sigma_diag() const { return sigma_diag_; }
  /// <|h_l|^2> = |mu_l|^2 + Sigma_ll
  Eigen::VectorXd second_moment() const;
  /// Tr(A Sigma A^H)
  double trace_quadratic() const { return trace_quad_; }
  /// log det Sigma (for the evidence bound)
  double logdet_sigma() const { return logdet_; }
  /// Covariance restricted to an index set.
  Eigen::MatrixXcd sigma_block(const std::vector<int>& idx) const;
  /// Dense covariance; intended for small problems and tests.
  Eigen::MatrixXcd sigma_full() const;

 private:
  Eigen::MatrixXcd A_;   // measurement matrix snapshot
  Eigen::MatrixXcd Y_;   // W^{-1} A
  Eigen::VectorXd dinv_;
  Eigen::VectorXcd mu_;
  Eigen::VectorXd sigma_diag_;
  double trace_quad_ = 0;
  double logdet_ = 0;
};

/// Dense-inverse route; independent oracle for the lemma route.
void vb_update_h_direct(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                        const Eigen::VectorXd& delta, double gamma,
                        Eigen::VectorXcd& mu, Eigen::MatrixXcd& sigma);

Eigen::VectorXd vb_update_delta(const HPosterior& post, double eps1,
                                double eps2);

double vb_update_gamma(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                       const HPosterior& post, double eps3, double eps4);

/// Variational evidence lower bound of the current factorized posterior;
/// non-decreasing across the h -> delta -> gamma sweep on a fixed grid.
double evidence_bound(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                      const HPosterior& post, const Eigen::VectorXd& delta_rate,
                      double gamma_rate, const VbConfig& cfg);

/// Indices of the ceil(frac*L) largest |mu|, ties broken by lower index.
std::vector<int> select_support(const Eigen::VectorXcd& mu, double frac);

struct RefinementStep {
  std::vector<int> support;
  Eigen::VectorXd beta_tau;
  Eigen::VectorXd beta_omega;
  Eigen::MatrixXd P_tau, P_omega;
  Eigen::VectorXd v_tau, v_omega;
};

/// One FOA correction pass: solves the linearized MMSE system for the
/// delay offsets (using the current log-scale offsets), then for the
/// log-scale offsets (using the fresh delay offsets). Offsets are total
/// displacements from the base lattice points, clamped to half a cell.
RefinementStep fvb_refine(const std::vector<int>& support,
                          const Eigen::VectorXcd& mu_s,
                          const Eigen::MatrixXcd& sigma_s,
                          const Eigen::MatrixXcd& A0, const Eigen::MatrixXcd& B,
                          const Eigen::MatrixXcd& C,
                          const Eigen::VectorXd& beta_tau_prev,
                          const Eigen::VectorXd& beta_omega_prev,
                          const Eigen::VectorXcd& y, double r_tau,
                          double r_omega);

/// Coordinate-descent Newton sweeps on the residual objective, descending
/// |mu| order. A step needs positive local curvature, is clamped to the
/// cell edge, and is halved until the expected objective decreases.
/// Updates tau/omega/A columns of the support in place.
void svb_refine(const std::vector<int>& support, const Eigen::VectorXcd& mu_s,
                const Eigen::MatrixXcd& sigma_s, const Eigen::VectorXcd& y,
                const AtomBasis& basis, const DsGrid& grid,
                Eigen::VectorXd& tau, Eigen::VectorXd& omega,
                Eigen::MatrixXcd& A);

struct ChannelEstimate {
  Eigen::VectorXcd h_hat;   // thresholded gains
  Eigen::VectorXd tau_hat;  // their delays
  Eigen::VectorXd omega_hat;  // their log-scales
  double q_alpha = 1;
  Eigen::VectorXcd mu_full;  // full posterior mean over the grid
  Eigen::VectorXd tau_full, omega_full;
  double gamma_hat = 1;
  bool converged = false;
  int iterations = 0;
  Eigen::MatrixXcd Heff_hat;  // filled by reconstruct_effective_channel

  PathSet as_paths() const;
};

struct GridState {
  Eigen::VectorXd tau;
  Eigen::VectorXd omega;
};

/// Two-phase estimator. Phase 1 iterates plain VB (h -> delta -> gamma)
/// on the full grid until the relative change of delta falls below
/// eps_conv or J_max is reached. The gain vector is then thresholded and
/// the model truncated to the selected columns; phase 2 continues the VB
/// sweep on the reduced model with the configured off-grid refinement (a
/// single linearized offset correction for FVB, Newton sweeps on the
/// exact objective each iteration for SVB), so the restricted posterior
/// and the refinement residual describe the same model. The reduced
/// posterior mean is the estimate.
ChannelEstimate run_ce(const Eigen::VectorXcd& y_p, const Dictionary& dict,
                       const VbConfig& cfg,
                       const std::optional<GridState>& warm_start = std::nullopt);

/// Greedy on-grid baseline with per-step least-squares refit.
ChannelEstimate omp_baseline(const Eigen::VectorXcd& y_p,
                             const Dictionary& dict, int K);

/// Rebuilds the effective data-domain channel from the estimated paths.
Eigen::MatrixXcd reconstruct_effective_channel(const ChannelEstimate& est,
                                               const WaveformMatrices& wf,
                                               const SamplingLayout& layout);

}  // namespace dsce
