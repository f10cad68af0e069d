#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsce/iced.hpp"

namespace dsce {

/// Configuration problem (bad key, bad value, missing file): the CLI maps
/// this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One Monte Carlo experiment: flat key=value file, CLI overrides on top.
struct ExperimentConfig {
  std::vector<std::string> waveforms = {"ofdm"};
  WaveformConfig wf_base;  // M/N/B/f0/q/W shared by all listed waveforms

  ChannelSpec channel;
  bool on_grid = false;

  int N_tau = 50;
  int M_alpha = 5;

  int M_p = 32;
  std::string constellation = "qpsk";

  std::vector<double> snr_db = {0, 10, 20};
  int trials = 200;
  // nmse: none | omp | vb | fvb | svb, optionally prefixed "iced-"
  std::vector<std::string> estimators = {"vb"};
  // ber: 1tap | mmse | vssd
  std::vector<std::string> detectors = {"vssd"};
  std::string csi = "pcsir";     // pcsir | ecsir
  std::string ecsir_estimator = "svb";
  int iced_rounds = 3;
  std::string nmse_block = "pilot";  // pilot | data

  std::uint64_t seed = 1;
  std::string out = "results.csv";
  int workers = 1;

  void validate() const;
};

/// Built-in configurations for the reference figure families.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parses a flat key=value config file; unknown keys are errors. A
/// `preset = <name>` line seeds the config before the remaining keys.
ExperimentConfig load_config(const std::string& path);
void apply_key(ExperimentConfig& cfg, const std::string& key,
               const std::string& value);

struct ResultRecord {
  double snr_db = 0;
  std::string metric;  // nmse | ber | crlb
  double value = 0;
  int trials = 0;
  std::string waveform;
  std::string estimator;
  std::string detector;
  std::uint64_t seed = 0;
  double wall_ms = 0;
};

void write_csv(const std::vector<ResultRecord>& rows, const std::string& path);

/// Per-trial NMSE values for one (waveform, estimator, SNR) point; the
/// campaign averages these, acceptance checks use them directly.
std::vector<double> nmse_trials(const ExperimentConfig& cfg,
                                const std::string& waveform,
                                const std::string& estimator, double snr_db,
                                int snr_index);

/// Per-trial (bit error, bit total) counts for one (waveform, detector, SNR).
std::vector<std::pair<long, long>> ber_trials(const ExperimentConfig& cfg,
                                              const std::string& waveform,
                                              const std::string& detector,
                                              double snr_db, int snr_index);

/// Normalized genie-prior CRLB for one SNR point (mean over trials).
double crlb_point(const ExperimentConfig& cfg, const std::string& waveform,
                  double snr_db, int snr_index, int* trials_used = nullptr);

std::vector<ResultRecord> run_nmse_campaign(const ExperimentConfig& cfg);
std::vector<ResultRecord> run_ber_campaign(const ExperimentConfig& cfg);
std::vector<ResultRecord> run_crlb_curve(const ExperimentConfig& cfg);

}  // namespace dsce
