#pragma once

#include <Eigen/Dense>

#include "dsce/constellation.hpp"

namespace dsce {

struct DetectionResult {
  Eigen::VectorXcd soft;      // <x>
  Eigen::MatrixXd marginals;  // M_d x Q, row-stochastic
  Eigen::MatrixXd llrs;       // M_d x bits_per_symbol, clipped to +-40
  Eigen::VectorXi hard;       // constellation indices
  int iterations = 0;
};

constexpr double kLlrClip = 40.0;

/// Subcarrier-by-subcarrier equalization x_i = y_i / H_ii, hard sliced.
DetectionResult one_tap_equalize(const Eigen::MatrixXcd& H,
                                 const Eigen::VectorXcd& y,
                                 const Constellation& cons);

/// Linear MMSE with unbiased Gaussian soft demapping.
DetectionResult mmse_equalize(const Eigen::MatrixXcd& H,
                              const Eigen::VectorXcd& y, double sigma2,
                              const Constellation& cons);

/// Variational soft-symbol detection: factorized posterior iterated via a
/// softmax over per-symbol scores until <x> stabilizes.
DetectionResult vssd(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& y,
                     double sigma2, const Constellation& cons,
                     double eps_conv = 1e-3, int J_max = 50);

/// Bit LLRs ln P(b=0) - ln P(b=1) from symbol marginals.
Eigen::MatrixXd compute_llrs(const Eigen::MatrixXd& marginals,
                             const Constellation& cons);

}  // namespace dsce
