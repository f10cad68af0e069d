#include "dsce/waveform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsce {

namespace {

constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;

Eigen::MatrixXcd unitary_dft(int n) {
  Eigen::MatrixXcd F(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m)
      F(k, m) = s * std::exp(cd(0, -2.0 * kPi * k * m / n));
  return F;
}

/// Carrier-phase diagonal diag(e^{j 2 pi f0 m / B}), the rectangular-pulse
/// reduction of the per-symbol pulse shaping stage.
Eigen::MatrixXcd carrier_diag(int M, double f0, double B) {
  Eigen::VectorXcd d(M);
  for (int m = 0; m < M; ++m) d(m) = std::exp(cd(0, 2.0 * kPi * f0 * m / B));
  return d.asDiagonal();
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  Eigen::MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

/// Discrete Fresnel chirp basis; unitary for even M.
Eigen::MatrixXcd chirp_basis(int M) {
  Eigen::MatrixXcd Psi(M, M);
  const cd c = std::exp(cd(0, kPi / 4.0)) / std::sqrt(static_cast<double>(M));
  for (int mp = 0; mp < M; ++mp)
    for (int m = 0; m < M; ++m) {
      const double d = static_cast<double>(mp - m);
      Psi(mp, m) = c * std::exp(cd(0, -kPi * d * d / M));
    }
  return Psi;
}

Eigen::MatrixXcd odss_matrix(const WaveformConfig& cfg) {
  const int Mtot = cfg.symbol_count();
  // Scale-consonant carrier: with f0 = W/(q-1) subcarrier m+1 is exactly
  // the q-time-scaled copy of subcarrier m, and the carriers sit at the
  // geometric band-edge frequencies f0 q^m (spacing q^m W).
  const double f0 = cfg.W / (cfg.q - 1.0);
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(Mtot, Mtot);
  int col = 0;
  for (int m = 0; m < cfg.M; ++m) {
    const double qm = std::pow(cfg.q, m);
    const double width = qm * cfg.W;           // subcarrier bandwidth
    const double dur = 1.0 / width;            // symbol duration
    const int Nm = static_cast<int>(std::floor(width * cfg.Ts));
    for (int n = 0; n < Nm; ++n, ++col) {
      const double t0 = n * dur;
      for (int k = 0; k < Mtot; ++k) {
        const double t = k / cfg.B;  // B-rate sample instants
        if (t < t0 || t >= t0 + dur) continue;
        G(k, col) = std::sqrt(qm) *
                    std::exp(cd(0, 2.0 * kPi * f0 * qm * (t - t0)));
      }
      const double nrm = G.col(col).norm();
      if (nrm > 0) G.col(col) /= nrm;
    }
  }
  return G;
}

}  // namespace

std::string to_string(WaveformKind k) {
  switch (k) {
    case WaveformKind::OTFS: return "otfs";
    case WaveformKind::OFDM: return "ofdm";
    case WaveformKind::OCDM: return "ocdm";
    case WaveformKind::ODSS: return "odss";
  }
  return "?";
}

WaveformKind waveform_from_name(const std::string& name) {
  if (name == "otfs") return WaveformKind::OTFS;
  if (name == "ofdm") return WaveformKind::OFDM;
  if (name == "ocdm") return WaveformKind::OCDM;
  if (name == "odss") return WaveformKind::ODSS;
  throw std::invalid_argument("unknown waveform: " + name);
}

void WaveformConfig::finalize() {
  if (M <= 0 || N <= 0) throw std::invalid_argument("M and N must be positive");
  if (kind == WaveformKind::OCDM && M % 2 != 0)
    throw std::invalid_argument("OCDM requires even M");
  if (kind == WaveformKind::ODSS) {
    if (q <= 0 || W <= 0) throw std::invalid_argument("ODSS requires q, W > 0");
    double sum = 0;
    for (int m = 0; m < M; ++m) sum += std::pow(q, m) * W;
    if (B <= 0) B = sum;
    if (std::abs(B - sum) / sum > 1e-3)
      throw std::invalid_argument("ODSS bandwidth identity violated");
    if (Ts <= 0) Ts = static_cast<double>(N) / W;
  } else {
    if (B <= 0) throw std::invalid_argument("bandwidth must be positive");
    Ts = static_cast<double>(N * M) / B;
  }
}

int WaveformConfig::symbol_count() const {
  if (kind != WaveformKind::ODSS) return M * N;
  int tot = 0;
  for (int m = 0; m < M; ++m)
    tot += static_cast<int>(std::floor(std::pow(q, m) * W * Ts));
  return tot;
}

WaveformMatrices build_transmitter_matrix(const WaveformConfig& cfg) {
  WaveformConfig c = cfg;
  c.finalize();
  WaveformMatrices wf;
  wf.M_d = c.symbol_count();
  switch (c.kind) {
    case WaveformKind::OTFS: {
      const Eigen::MatrixXcd FNh = unitary_dft(c.N).adjoint();
      wf.G = kron(FNh, carrier_diag(c.M, c.f0, c.B));
      break;
    }
    case WaveformKind::OFDM: {
      const Eigen::MatrixXcd core =
          carrier_diag(c.M, c.f0, c.B) * unitary_dft(c.M).adjoint();
      wf.G = kron(Eigen::MatrixXcd::Identity(c.N, c.N), core);
      break;
    }
    case WaveformKind::OCDM: {
      const double fc = c.f0 + c.B / 2.0;  // chirps ride the band center
      const Eigen::MatrixXcd core = carrier_diag(c.M, fc, c.B) * chirp_basis(c.M);
      wf.G = kron(Eigen::MatrixXcd::Identity(c.N, c.N), core);
      break;
    }
    case WaveformKind::ODSS:
      wf.G = odss_matrix(c);
      break;
  }
  return wf;
}

Eigen::VectorXcd modulate(const WaveformMatrices& wf, const Eigen::VectorXcd& x) {
  if (x.size() != wf.G.cols()) throw std::invalid_argument("modulate: dimension mismatch");
  return wf.G * x;
}

Eigen::VectorXcd demodulate(const WaveformMatrices& wf, const Eigen::VectorXcd& r) {
  if (r.size() != wf.G.rows()) throw std::invalid_argument("demodulate: dimension mismatch");
  return wf.G.adjoint() * r;
}

}  // namespace dsce
