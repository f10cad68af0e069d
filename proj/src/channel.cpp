#include "dsce/channel.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dsce/rng.hpp"

namespace dsce {

namespace {
constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;
}  // namespace

void ChannelSpec::validate() const {
  if (tau_max < 0) throw std::invalid_argument("tau_max must be >= 0");
  if (alpha_max < 1) throw std::invalid_argument("alpha_max must be >= 1");
  if (P < 1) throw std::invalid_argument("P must be >= 1");
}

SamplingLayout SamplingLayout::make(int M, double B, double f_L) {
  if (M < 1 || B <= 0) throw std::invalid_argument("bad sampling layout");
  return SamplingLayout{M, B, static_cast<double>(M) / B, f_L};
}

Eigen::VectorXd SamplingLayout::f() const {
  Eigen::VectorXd v(M);
  for (int k = 0; k < M; ++k) v(k) = f_L + B * k / M;
  return v;
}

Eigen::VectorXd SamplingLayout::t() const {
  Eigen::VectorXd v(M);
  for (int n = 0; n < M; ++n) v(n) = Ts * n / M;
  return v;
}

Eigen::MatrixXcd carrier_dft(const SamplingLayout& layout) {
  return carrier_dft_scaled(layout, 1.0);
}

Eigen::MatrixXcd carrier_dft_scaled(const SamplingLayout& layout, double alpha) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");
  const Eigen::VectorXd f = layout.f();
  const Eigen::VectorXd t = layout.t();
  const double s = 1.0 / std::sqrt(static_cast<double>(layout.M));
  Eigen::MatrixXcd F(layout.M, layout.M);
  for (int k = 0; k < layout.M; ++k)
    for (int n = 0; n < layout.M; ++n)
      F(k, n) = s * std::exp(cd(0, -2.0 * kPi * f(k) * t(n) / alpha));
  return F;
}

Eigen::MatrixXcd single_path_matrix(cd h, double tau, double alpha,
                                    const SamplingLayout& layout) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");
  const Eigen::VectorXd f = layout.f();
  Eigen::VectorXcd gamma(layout.M);
  for (int k = 0; k < layout.M; ++k)
    gamma(k) = std::exp(cd(0, -2.0 * kPi * f(k) * tau)) / alpha;
  const Eigen::MatrixXcd Fh = carrier_dft(layout).adjoint();
  const Eigen::MatrixXcd Fs = carrier_dft_scaled(layout, alpha);
  return (h * std::sqrt(alpha)) * (Fh * gamma.asDiagonal() * Fs);
}

Eigen::MatrixXcd time_domain_channel_matrix(const PathSet& paths,
                                            const SamplingLayout& layout) {
  Eigen::MatrixXcd Ht = Eigen::MatrixXcd::Zero(layout.M, layout.M);
  for (int p = 0; p < paths.count(); ++p)
    Ht += single_path_matrix(paths.h(p), paths.tau(p), paths.alpha(p), layout);
  return Ht;
}

Eigen::MatrixXcd effective_channel(const WaveformMatrices& wf,
                                   const Eigen::MatrixXcd& Ht) {
  if (Ht.rows() != wf.G.rows())
    throw std::invalid_argument("effective_channel: dimension mismatch");
  return wf.G.adjoint() * Ht * wf.G;
}

PathSet sample_paths(const ChannelSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  PathSet ps;
  ps.h.resize(spec.P);
  ps.tau.resize(spec.P);
  ps.alpha.resize(spec.P);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double la = std::log(spec.alpha_max);
  for (int p = 0; p < spec.P; ++p) {
    ps.h(p) = complex_gaussian(rng, 1.0);
    ps.tau(p) = u01(rng) * spec.tau_max;
    const double v = u01(rng);
    if (spec.scale_model == ScaleModel::LogUniform)
      ps.alpha(p) = std::exp(-la + 2.0 * la * v);
    else
      ps.alpha(p) = 1.0 / spec.alpha_max +
                    (spec.alpha_max - 1.0 / spec.alpha_max) * v;
  }
  return ps;
}

ChannelOutput apply_channel(const Eigen::VectorXcd& s,
                            const Eigen::MatrixXcd& Ht, double snr_db,
                            std::mt19937_64& rng) {
  ChannelOutput out;
  out.r = Ht * s;
  if (std::isinf(snr_db)) return out;
  const double psig = out.r.squaredNorm() / static_cast<double>(out.r.size());
  out.sigma2 = psig / std::pow(10.0, snr_db / 10.0);
  out.r += complex_gaussian_vector(rng, out.r.size(), out.sigma2);
  return out;
}

void write_paths_csv(const PathSet& paths, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "h_re,h_im,tau_s,alpha\n";
  os.precision(17);
  for (int p = 0; p < paths.count(); ++p)
    os << paths.h(p).real() << ',' << paths.h(p).imag() << ',' << paths.tau(p)
       << ',' << paths.alpha(p) << '\n';
}

PathSet read_paths_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::array<double, 4>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<double, 4> r{};
    std::stringstream ss(line);
    std::string cell;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("bad channel csv");
      r[i] = std::stod(cell);
    }
    rows.push_back(r);
  }
  PathSet ps;
  const int P = static_cast<int>(rows.size());
  ps.h.resize(P);
  ps.tau.resize(P);
  ps.alpha.resize(P);
  for (int p = 0; p < P; ++p) {
    ps.h(p) = {rows[p][0], rows[p][1]};
    ps.tau(p) = rows[p][2];
    ps.alpha(p) = rows[p][3];
  }
  return ps;
}

}  // namespace dsce
