#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dsce/campaign.hpp"

using namespace dsce;

namespace {

// CSV text with the wall_ms column blanked, for byte comparisons
std::string strip_wall(const std::string& path) {
  std::ifstream in(path);
  std::stringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out << line.substr(0, pos) << '\n';
  }
  return out.str();
}

ExperimentConfig tiny_nmse_config() {
  ExperimentConfig cfg = preset("fig-nmse-ongrid");
  cfg.trials = 4;
  cfg.snr_db = {10};
  cfg.estimators = {"omp", "vb"};
  return cfg;
}

}  // namespace

TEST_CASE("config validation rejects bad values") {
  ExperimentConfig cfg;
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.snr_db.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.csi = "genie";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.nmse_block = "both";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(preset("fig-unknown"), ConfigError);
  cfg = ExperimentConfig{};
  CHECK_THROWS_AS(apply_key(cfg, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_key(cfg, "trials", "many"), ConfigError);
}

TEST_CASE("config file parsing applies preset then overrides") {
  const std::string path = "test_campaign_cfg.tmp";
  {
    std::ofstream out(path);
    out << "preset = fig-nmse-offgrid\n";
    out << "trials = 7\n";
    out << "seed = 42\n";
    out << "snr = 5,15\n";
  }
  const ExperimentConfig cfg = load_config(path);
  CHECK(cfg.on_grid == false);
  CHECK(cfg.trials == 7);
  CHECK(cfg.seed == 42);
  CHECK(cfg.snr_db == std::vector<double>{5, 15});
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("no_such_file.cfg"), ConfigError);
}

TEST_CASE("nmse campaign rows cover every point and rerun identically") {
  ExperimentConfig cfg = tiny_nmse_config();
  const auto rows = run_nmse_campaign(cfg);
  // one row per (waveform, estimator, snr)
  CHECK(rows.size() == cfg.waveforms.size() * cfg.estimators.size() *
                           cfg.snr_db.size());
  for (const auto& r : rows) {
    CHECK(r.metric == "nmse");
    CHECK(r.trials == cfg.trials);
    CHECK(r.value > 0);
    CHECK(r.seed == cfg.seed);
  }

  write_csv(rows, "run_a.tmp");
  write_csv(run_nmse_campaign(cfg), "run_b.tmp");
  CHECK(strip_wall("run_a.tmp") == strip_wall("run_b.tmp"));
  std::remove("run_a.tmp");
  std::remove("run_b.tmp");
}

TEST_CASE("trial values are independent of the worker count") {
  ExperimentConfig cfg = tiny_nmse_config();
  cfg.workers = 1;
  const auto v1 = nmse_trials(cfg, "ofdm", "vb", 10.0, 0);
  cfg.workers = 3;
  const auto v3 = nmse_trials(cfg, "ofdm", "vb", 10.0, 0);
  REQUIRE(v1.size() == v3.size());
  for (size_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == v3[i]);
}

TEST_CASE("csv header and formatting are stable") {
  std::vector<ResultRecord> rows(1);
  rows[0].snr_db = 10;
  rows[0].metric = "nmse";
  rows[0].value = 0.012345;
  rows[0].trials = 4;
  rows[0].waveform = "ofdm";
  rows[0].estimator = "vb";
  rows[0].detector = "";
  rows[0].seed = 1;
  rows[0].wall_ms = 1.5;
  write_csv(rows, "hdr.tmp");
  std::ifstream in("hdr.tmp");
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "snr_db,metric,value,trials,waveform,estimator,detector,seed,wall_ms");
  std::string row;
  std::getline(in, row);
  CHECK(row.rfind("10,nmse,", 0) == 0);
  std::remove("hdr.tmp");
}

TEST_CASE("ber campaign counts bits and respects the csi mode") {
  ExperimentConfig cfg = preset("fig-ber-pcsir");
  cfg.trials = 2;
  cfg.snr_db = {10};
  cfg.waveforms = {"ofdm"};
  cfg.detectors = {"vssd"};
  const auto rows = run_ber_campaign(cfg);
  CHECK(rows.size() == 1);
  CHECK(rows[0].metric == "ber");
  CHECK(rows[0].value >= 0);
  CHECK(rows[0].value <= 1);
  CHECK(rows[0].detector == "vssd");
}

TEST_CASE("estimator spec parsing rejects invalid iced bases") {
  ExperimentConfig cfg = tiny_nmse_config();
  cfg.estimators = {"iced-omp"};
  CHECK_THROWS_AS(nmse_trials(cfg, "ofdm", "iced-omp", 10.0, 0), ConfigError);
  CHECK_THROWS_AS(nmse_trials(cfg, "ofdm", "ridge", 10.0, 0), ConfigError);
}
