#pragma once

#include <memory>

#include <Eigen/Dense>

#include "dsce/channel.hpp"
#include "dsce/waveform.hpp"

namespace dsce {

/// Delay / log-scale lattice. Point l = n'*M_alpha + m' sits at
/// (n'*r_tau, (-(M_alpha-1)/2 + m')*r_omega); alpha = q_alpha^omega.
struct DsGrid {
  int N_tau = 0;
  int M_alpha = 0;
  double tau_max = 0;
  double alpha_max = 1;
  double r_tau = 0;
  double r_omega = 1;
  double q_alpha = 1;
  Eigen::VectorXd tau_bar;
  Eigen::VectorXd omega_bar;

  int size() const { return N_tau * M_alpha; }
  double alpha_of(double omega) const { return std::pow(q_alpha, omega); }
};

DsGrid build_grid(double tau_max, double alpha_max, int N_tau, int M_alpha);

struct AtomDerivs {
  Eigen::VectorXcd a;
  Eigen::VectorXcd da_tau;
  Eigen::VectorXcd da_omega;
  Eigen::VectorXcd d2a_tau;    // filled when order >= 2
  Eigen::VectorXcd d2a_omega;  // filled when order >= 2
};

/// Source of dictionary columns a(tau, omega) and their analytic
/// derivatives. Implemented by the pilot-block response and, for the
/// data-aided stage, a stack of pilot and data responses.
class AtomBasis {
 public:
  virtual ~AtomBasis() = default;
  virtual int rows() const = 0;
  virtual double q_alpha() const = 0;
  virtual Eigen::VectorXcd atom(double tau, double omega) const = 0;
  virtual AtomDerivs derivatives(double tau, double omega, int order) const = 0;
};

/// Block response context: atom(tau, omega) is the demodulated observation
/// of the known symbol vector x through a unit-gain path at (tau, alpha =
/// q_alpha^omega), i.e. sqrt(a) G^H F^H Gamma F^{.1/a} G x.
class BlockAtomContext final : public AtomBasis {
 public:
  BlockAtomContext(SamplingLayout layout, Eigen::MatrixXcd G,
                   Eigen::VectorXcd x, double q_alpha);

  int rows() const override { return layout_.M; }
  double q_alpha() const override { return q_alpha_; }
  Eigen::VectorXcd atom(double tau, double omega) const override;
  AtomDerivs derivatives(double tau, double omega, int order) const override;

  const SamplingLayout& layout() const { return layout_; }
  const Eigen::VectorXcd& known_symbols() const { return x_; }

 private:
  SamplingLayout layout_;
  Eigen::MatrixXcd Gh_;   // G^H
  Eigen::MatrixXcd Fh_;   // F^H at alpha = 1
  Eigen::VectorXcd Gx_;   // G x
  Eigen::VectorXcd x_;
  Eigen::VectorXd f_, t_;
  double q_alpha_;

  // E(alpha) Gx and its alpha-derivatives, component l over frequencies.
  void scaled_mix(double alpha, int order, Eigen::VectorXcd& w,
                  Eigen::VectorXcd& w1, Eigen::VectorXcd& w2) const;
};

/// Two block contexts stacked row-wise (pilot over data), sharing the grid.
class StackedAtomContext final : public AtomBasis {
 public:
  StackedAtomContext(std::shared_ptr<const AtomBasis> top,
                     std::shared_ptr<const AtomBasis> bottom);

  int rows() const override;
  double q_alpha() const override { return top_->q_alpha(); }
  Eigen::VectorXcd atom(double tau, double omega) const override;
  AtomDerivs derivatives(double tau, double omega, int order) const override;

 private:
  std::shared_ptr<const AtomBasis> top_, bottom_;
};

struct Dictionary {
  Eigen::MatrixXcd A;  // rows() x grid.size()
  DsGrid grid;
  const AtomBasis* basis = nullptr;
};

Dictionary build_dictionary(const DsGrid& grid, const AtomBasis& basis);

}  // namespace dsce
