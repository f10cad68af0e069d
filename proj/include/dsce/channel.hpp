#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsce/waveform.hpp"

namespace dsce {

/// Physical delay-scale channel: per-path gain, delay (s), scale factor.
struct PathSet {
  Eigen::VectorXcd h;
  Eigen::VectorXd tau;
  Eigen::VectorXd alpha;
  int count() const { return static_cast<int>(h.size()); }
};

enum class ScaleModel { Uniform, LogUniform };

struct ChannelSpec {
  double tau_max = 32e-3;
  double alpha_max = 1.001;  // >= 1
  int P = 5;
  ScaleModel scale_model = ScaleModel::Uniform;

  void validate() const;
};

/// Sampling geometry of one block: M samples at rate B over Ts = M/B,
/// frequencies f_L + (B/M)*[0..M-1].
struct SamplingLayout {
  int M = 0;
  double B = 0;
  double Ts = 0;
  double f_L = 0;

  static SamplingLayout make(int M, double B, double f_L);

  Eigen::VectorXd f() const;
  Eigen::VectorXd t() const;
};

/// F[k,n] = (1/sqrt(M)) e^{-j 2 pi f_k t_n}; unitary for any f_L.
Eigen::MatrixXcd carrier_dft(const SamplingLayout& layout);

/// Element-wise scaled variant: (1/sqrt(M)) e^{-j 2 pi f_k t_n / alpha}.
Eigen::MatrixXcd carrier_dft_scaled(const SamplingLayout& layout, double alpha);

/// Single-path time-domain channel h*sqrt(a) F^H Gamma F^{.1/a}.
Eigen::MatrixXcd single_path_matrix(std::complex<double> h, double tau,
                                    double alpha, const SamplingLayout& layout);

/// Superposition over all paths.
Eigen::MatrixXcd time_domain_channel_matrix(const PathSet& paths,
                                            const SamplingLayout& layout);

/// H = G^H Ht G.
Eigen::MatrixXcd effective_channel(const WaveformMatrices& wf,
                                   const Eigen::MatrixXcd& Ht);

PathSet sample_paths(const ChannelSpec& spec, std::mt19937_64& rng);

struct ChannelOutput {
  Eigen::VectorXcd r;
  double sigma2 = 0;  // per-sample noise variance actually applied
};

/// r = Ht*s + w with per-sample receive SNR snr_db. snr_db = +inf disables
/// noise. Returns the noise variance used.
ChannelOutput apply_channel(const Eigen::VectorXcd& s,
                            const Eigen::MatrixXcd& Ht, double snr_db,
                            std::mt19937_64& rng);

/// CSV dump/replay of a fixed channel (columns h_re,h_im,tau_s,alpha).
void write_paths_csv(const PathSet& paths, const std::string& path);
PathSet read_paths_csv(const std::string& path);

}  // namespace dsce
