#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dsce/dsgrid.hpp"

namespace dsce {

/// [[Re A, -Im A], [Im A, Re A]] — the real operator equivalent of A.
Eigen::MatrixXd real_split(const Eigen::MatrixXcd& A);

/// Bayesian information matrix of the on-grid gain vector with an
/// independent Gaussian prior of precision theta_l per complex gain,
/// computed through the real-split parameterization and recombined:
/// Phi = (Phi_rr + Phi_ii)/4 + j (Phi_ir - Phi_ri)/4.
Eigen::MatrixXcd compute_bim(const Eigen::MatrixXcd& A, double sigma2,
                             const Eigen::VectorXd& theta);

/// Same quantity in complex form, (1/sigma2) A^H A + diag(theta);
/// independent oracle for compute_bim.
Eigen::MatrixXcd compute_bim_direct(const Eigen::MatrixXcd& A, double sigma2,
                                    const Eigen::VectorXd& theta);

/// Effective-channel contribution of a unit gain at grid point l:
/// V_l = G^H (sqrt(a_l) F^H Gamma_l E(a_l)) G, so Heff = sum_l h_l V_l.
std::vector<Eigen::MatrixXcd> grid_channel_components(
    const DsGrid& grid, const Eigen::MatrixXcd& G,
    const SamplingLayout& layout);

/// Genie prior precisions: 1 on the grid points nearest to the true
/// paths, theta_off (default 1e6) elsewhere.
Eigen::VectorXd genie_theta(const DsGrid& grid, const PathSet& truth,
                            double theta_off = 1e6);

struct CrlbResult {
  Eigen::MatrixXcd bim;    // L x L
  double crlb_trace = 0;   // lower bound on E ||Heff_hat - Heff||_F^2
};

/// trace(U Phi^{-1} U^H) where column l of U is vec(V_l); evaluated via
/// the Frobenius Gram matrix of the components, never forming U.
CrlbResult compute_crlb(const Eigen::MatrixXcd& A, double sigma2,
                        const Eigen::VectorXd& theta,
                        const std::vector<Eigen::MatrixXcd>& components);

}  // namespace dsce
