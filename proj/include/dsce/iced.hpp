#pragma once

#include <memory>

#include <Eigen/Dense>

#include "dsce/detect.hpp"
#include "dsce/vbce.hpp"

namespace dsce {

enum class DetectorKind { OneTap, MMSE, VSSD };

DetectorKind detector_from_name(const std::string& name);

struct IcedConfig {
  VbConfig vb;
  DetectorKind detector = DetectorKind::VSSD;
  int max_rounds = 3;  // 0 = pilot-only estimation followed by detection
};

/// Inputs of one joint estimation/detection frame: the pilot observation
/// with its block context, and the data observation with the geometry
/// needed to re-detect and to append data atoms.
struct IcedProblem {
  Eigen::VectorXcd y_p;
  Eigen::VectorXcd y_d;
  std::shared_ptr<const BlockAtomContext> pilot_ctx;
  SamplingLayout data_layout;
  WaveformMatrices wf_d;
  DsGrid grid;
  double sigma2 = 0;  // data-block noise variance used by the detector
  const Constellation* cons = nullptr;
};

struct IcedResult {
  ChannelEstimate estimate;
  DetectionResult detection;
  int rounds = 0;  // data-aided re-estimations actually performed
};

DetectionResult detect_with(DetectorKind kind, const Eigen::MatrixXcd& H,
                            const Eigen::VectorXcd& y, double sigma2,
                            const Constellation& cons);

/// Iterated channel estimation and detection: pilot-only estimate, then
/// alternate detection and re-estimation on the stacked pilot+data
/// observation, the hard decisions acting as virtual pilots. Stops when
/// the hard decisions repeat or max_rounds is reached.
IcedResult run_iced(const IcedProblem& prob, const IcedConfig& cfg);

}  // namespace dsce
