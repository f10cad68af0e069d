#include "dsce/constellation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsce {

Constellation::Constellation(std::string name,
                             std::vector<std::complex<double>> pts,
                             std::vector<unsigned> labels, int bps)
    : name_(std::move(name)),
      points_(std::move(pts)),
      labels_(std::move(labels)),
      bits_per_symbol_(bps) {
  // normalize to unit average energy
  double e = 0;
  for (auto z : points_) e += std::norm(z);
  e /= static_cast<double>(points_.size());
  const double s = 1.0 / std::sqrt(e);
  for (auto& z : points_) z *= s;
}

Constellation Constellation::bpsk() {
  return Constellation("bpsk", {{1.0, 0.0}, {-1.0, 0.0}}, {0u, 1u}, 1);
}

Constellation Constellation::qpsk() {
  // Gray: one bit per axis
  return Constellation("qpsk",
                       {{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}},
                       {0u, 1u, 2u, 3u}, 2);
}

Constellation Constellation::qam16() {
  // Gray per axis: levels -3,-1,+1,+3 labeled 00,01,11,10
  const double lv[4] = {-3, -1, 1, 3};
  const unsigned g[4] = {0u, 1u, 3u, 2u};
  std::vector<std::complex<double>> pts;
  std::vector<unsigned> labels;
  for (int i = 0; i < 4; ++i)
    for (int q = 0; q < 4; ++q) {
      pts.emplace_back(lv[i], lv[q]);
      labels.push_back((g[i] << 2) | g[q]);
    }
  return Constellation("qam16", std::move(pts), std::move(labels), 4);
}

Constellation Constellation::from_name(const std::string& name) {
  if (name == "bpsk") return bpsk();
  if (name == "qpsk") return qpsk();
  if (name == "qam16") return qam16();
  throw std::invalid_argument("unknown constellation: " + name);
}

int Constellation::index_of_bits(unsigned label) const {
  for (int i = 0; i < size(); ++i)
    if (labels_[i] == label) return i;
  throw std::invalid_argument("label out of range");
}

int Constellation::slice(std::complex<double> z) const {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    const double d = std::norm(z - points_[i]);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

Eigen::VectorXcd Constellation::map_bits(const std::vector<int>& bits) const {
  if (bits.size() % bits_per_symbol_ != 0)
    throw std::invalid_argument("bit count not a multiple of bits/symbol");
  const Eigen::Index n = static_cast<Eigen::Index>(bits.size()) / bits_per_symbol_;
  Eigen::VectorXcd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    unsigned label = 0;
    for (int b = 0; b < bits_per_symbol_; ++b)
      label = (label << 1) | static_cast<unsigned>(bits[i * bits_per_symbol_ + b]);
    x(i) = points_[index_of_bits(label)];
  }
  return x;
}

std::vector<int> Constellation::bits_of(const Eigen::VectorXi& indices) const {
  std::vector<int> bits;
  bits.reserve(static_cast<size_t>(indices.size()) * bits_per_symbol_);
  for (Eigen::Index i = 0; i < indices.size(); ++i)
    for (int b = 0; b < bits_per_symbol_; ++b)
      bits.push_back(bit(indices(i), b));
  return bits;
}

}  // namespace dsce
