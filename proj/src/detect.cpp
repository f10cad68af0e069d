#include "dsce/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsce {

namespace {
using cd = std::complex<double>;

void finish(DetectionResult& res, const Constellation& cons) {
  const Eigen::Index n = res.marginals.rows();
  const int Q = cons.size();
  res.soft.resize(n);
  res.hard.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cd mean = 0;
    int best = 0;
    for (int z = 0; z < Q; ++z) {
      mean += res.marginals(i, z) * cons.point(z);
      if (res.marginals(i, z) > res.marginals(i, best)) best = z;
    }
    res.soft(i) = mean;
    res.hard(i) = best;
  }
  res.llrs = compute_llrs(res.marginals, cons);
}

Eigen::MatrixXd one_hot(const Eigen::VectorXi& idx, int Q) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(idx.size(), Q);
  for (Eigen::Index i = 0; i < idx.size(); ++i) m(i, idx(i)) = 1.0;
  return m;
}

}  // namespace

DetectionResult one_tap_equalize(const Eigen::MatrixXcd& H,
                                 const Eigen::VectorXcd& y,
                                 const Constellation& cons) {
  const Eigen::Index n = y.size();
  Eigen::VectorXi hard(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cd d = H(i, i);
    if (d == cd(0, 0))
      throw std::invalid_argument("one_tap_equalize: zero diagonal entry");
    hard(i) = cons.slice(y(i) / d);
  }
  DetectionResult res;
  res.marginals = one_hot(hard, cons.size());
  res.iterations = 1;
  finish(res, cons);
  return res;
}

DetectionResult mmse_equalize(const Eigen::MatrixXcd& H,
                              const Eigen::VectorXcd& y, double sigma2,
                              const Constellation& cons) {
  if (sigma2 <= 0) throw std::invalid_argument("mmse_equalize: sigma2 must be > 0");
  const Eigen::Index n = y.size();
  Eigen::MatrixXcd R = H.adjoint() * H;
  R.diagonal().array() += sigma2;
  const Eigen::LLT<Eigen::MatrixXcd> llt(R);
  const Eigen::VectorXcd xhat = llt.solve(H.adjoint() * y);
  // unbiased soft demapping: xhat_i ~ mu_i x_i + noise(nu_i),
  // mu_i = [(H^H H + s2 I)^{-1} H^H H]_ii, nu_i = mu_i - mu_i^2
  const Eigen::MatrixXcd Wf = llt.solve(H.adjoint() * H);
  DetectionResult res;
  res.marginals.resize(n, cons.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = std::max(std::real(Wf(i, i)), 1e-12);
    const double nu = std::max(mu - mu * mu, 1e-12);
    double mx = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd g(cons.size());
    for (int z = 0; z < cons.size(); ++z) {
      g(z) = -std::norm(xhat(i) - mu * cons.point(z)) / nu;
      mx = std::max(mx, g(z));
    }
    double sum = 0;
    for (int z = 0; z < cons.size(); ++z) {
      g(z) = std::exp(g(z) - mx);
      sum += g(z);
    }
    res.marginals.row(i) = g.transpose() / sum;
  }
  res.iterations = 1;
  finish(res, cons);
  return res;
}

DetectionResult vssd(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& y,
                     double sigma2, const Constellation& cons,
                     double eps_conv, int J_max) {
  if (sigma2 <= 0) throw std::invalid_argument("vssd: sigma2 must be > 0");
  const Eigen::Index n = y.size();
  const int Q = cons.size();

  const Eigen::MatrixXcd HhH = H.adjoint() * H;
  const Eigen::VectorXcd Hhy = H.adjoint() * y;
  const Eigen::VectorXd diagHhH = HhH.diagonal().real();
  Eigen::MatrixXcd offdiag = HhH;
  offdiag.diagonal().setZero();

  DetectionResult res;
  res.marginals.resize(n, Q);
  Eigen::VectorXcd xmean = Eigen::VectorXcd::Zero(n);

  for (int j = 0; j < J_max; ++j) {
    const Eigen::VectorXcd c = Hhy - offdiag * xmean;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd g(Q);
      double mx = -std::numeric_limits<double>::infinity();
      for (int z = 0; z < Q; ++z) {
        const cd zz = cons.point(z);
        g(z) = -(diagHhH(i) * std::norm(zz) -
                 2.0 * std::real(c(i) * std::conj(zz))) /
               sigma2;
        mx = std::max(mx, g(z));
      }
      double sum = 0;
      for (int z = 0; z < Q; ++z) {
        g(z) = std::exp(g(z) - mx);
        sum += g(z);
      }
      res.marginals.row(i) = g.transpose() / sum;
    }
    Eigen::VectorXcd xnew(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      cd m = 0;
      for (int z = 0; z < Q; ++z) m += res.marginals(i, z) * cons.point(z);
      xnew(i) = m;
    }
    const double denom = xmean.norm();
    const double change = (xnew - xmean).norm();
    xmean = xnew;
    res.iterations = j + 1;
    if (denom > 0 && change / denom <= eps_conv) break;
  }
  finish(res, cons);
  return res;
}

Eigen::MatrixXd compute_llrs(const Eigen::MatrixXd& marginals,
                             const Constellation& cons) {
  const Eigen::Index n = marginals.rows();
  const int nb = cons.bits_per_symbol();
  Eigen::MatrixXd llrs(n, nb);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int b = 0; b < nb; ++b) {
      double p0 = 0, p1 = 0;
      for (int z = 0; z < cons.size(); ++z)
        (cons.bit(z, b) == 0 ? p0 : p1) += marginals(i, z);
      const double llr = std::log(std::max(p0, 1e-300)) -
                         std::log(std::max(p1, 1e-300));
      llrs(i, b) = std::clamp(llr, -kLlrClip, kLlrClip);
    }
  return llrs;
}

}  // namespace dsce
