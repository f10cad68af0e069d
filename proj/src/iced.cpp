#include "dsce/iced.hpp"

#include <stdexcept>

namespace dsce {

DetectorKind detector_from_name(const std::string& name) {
  if (name == "1tap" || name == "onetap") return DetectorKind::OneTap;
  if (name == "mmse") return DetectorKind::MMSE;
  if (name == "vssd") return DetectorKind::VSSD;
  throw std::invalid_argument("unknown detector: " + name);
}

DetectionResult detect_with(DetectorKind kind, const Eigen::MatrixXcd& H,
                            const Eigen::VectorXcd& y, double sigma2,
                            const Constellation& cons) {
  switch (kind) {
    case DetectorKind::OneTap:
      return one_tap_equalize(H, y, cons);
    case DetectorKind::MMSE:
      return mmse_equalize(H, y, sigma2, cons);
    case DetectorKind::VSSD:
      return vssd(H, y, sigma2, cons);
  }
  throw std::logic_error("unreachable");
}

IcedResult run_iced(const IcedProblem& prob, const IcedConfig& cfg) {
  if (!prob.cons) throw std::invalid_argument("iced: constellation not set");
  if (!prob.pilot_ctx) throw std::invalid_argument("iced: pilot context not set");
  if (prob.y_d.size() != prob.wf_d.M_d)
    throw std::invalid_argument("iced: data observation has wrong length");

  IcedResult out;

  const Dictionary pilot_dict = build_dictionary(prob.grid, *prob.pilot_ctx);
  out.estimate = run_ce(prob.y_p, pilot_dict, cfg.vb);

  Eigen::MatrixXcd Heff =
      reconstruct_effective_channel(out.estimate, prob.wf_d, prob.data_layout);
  out.detection = detect_with(cfg.detector, Heff, prob.y_d, prob.sigma2,
                              *prob.cons);

  Eigen::VectorXcd y_ext(prob.y_p.size() + prob.y_d.size());
  y_ext << prob.y_p, prob.y_d;

  Eigen::VectorXi prev_hard = out.detection.hard;
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    // hard decisions become virtual pilots on the data block
    Eigen::VectorXcd x_hat(prev_hard.size());
    for (int i = 0; i < prev_hard.size(); ++i)
      x_hat(i) = prob.cons->point(prev_hard(i));

    auto data_ctx = std::make_shared<BlockAtomContext>(
        prob.data_layout, prob.wf_d.G, x_hat, prob.grid.q_alpha);
    StackedAtomContext stacked(prob.pilot_ctx, data_ctx);
    const Dictionary ext_dict = build_dictionary(prob.grid, stacked);

    GridState warm{out.estimate.tau_full, out.estimate.omega_full};
    out.estimate = run_ce(y_ext, ext_dict, cfg.vb, warm);
    out.rounds = round;

    Heff = reconstruct_effective_channel(out.estimate, prob.wf_d,
                                         prob.data_layout);
    out.detection = detect_with(cfg.detector, Heff, prob.y_d, prob.sigma2,
                                *prob.cons);
    if (out.detection.hard == prev_hard) break;
    prev_hard = out.detection.hard;
  }
  return out;
}

}  // namespace dsce
