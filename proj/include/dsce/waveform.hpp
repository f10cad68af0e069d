#pragma once

#include <string>

#include <Eigen/Dense>

namespace dsce {

enum class WaveformKind { OTFS, OFDM, OCDM, ODSS };

std::string to_string(WaveformKind k);
WaveformKind waveform_from_name(const std::string& name);

/// Parameters of one multicarrier waveform. For OFDM/OTFS/OCDM the frame
/// carries M*N symbols over Ts = N*M/B seconds; for ODSS the subcarrier
/// widths grow geometrically (ratio q, base width W) and the symbol count
/// is M_tot = sum_m floor(q^m * W * Ts).
struct WaveformConfig {
  WaveformKind kind = WaveformKind::OFDM;
  int M = 64;        // subcarrier count
  int N = 1;         // symbol slots
  double B = 10e3;   // bandwidth, Hz
  double f0 = 10e3;  // lowest-subcarrier center frequency, Hz
  double q = 1.0;    // ODSS geometric ratio
  double W = 0.0;    // ODSS base subcarrier width, Hz
  double Ts = 0.0;   // frame duration, s

  /// Fills Ts (and, for ODSS, B) from the primary parameters and checks
  /// the invariants. Throws std::invalid_argument on bad dimensions.
  void finalize();

  /// Total symbol count M_d (= M*N, or M_tot for ODSS).
  int symbol_count() const;
};

struct WaveformMatrices {
  Eigen::MatrixXcd G;  // synthesis matrix, M_d x M_d
  int M_d = 0;
};

/// Unified transmitter matrix for the configured waveform.
/// OTFS: F_N^H kron diag(e^{j2pi f0 m/B}); OFDM: I_N kron (Gt F_M^H);
/// OCDM: I_N kron (Gc Psi) with the discrete Fresnel chirp Psi;
/// ODSS: columns sampled from the delay-scale modulator, unit-normalized.
WaveformMatrices build_transmitter_matrix(const WaveformConfig& cfg);

Eigen::VectorXcd modulate(const WaveformMatrices& wf,
                          const Eigen::VectorXcd& x);
Eigen::VectorXcd demodulate(const WaveformMatrices& wf,
                            const Eigen::VectorXcd& r);

}  // namespace dsce
