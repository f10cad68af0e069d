#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dsce {

/// Gray-labeled unit-average-energy constellation.
class Constellation {
 public:
  static Constellation bpsk();
  static Constellation qpsk();
  static Constellation qam16();
  /// "bpsk" | "qpsk" | "qam16"
  static Constellation from_name(const std::string& name);

  int size() const { return static_cast<int>(points_.size()); }
  int bits_per_symbol() const { return bits_per_symbol_; }
  const std::vector<std::complex<double>>& points() const { return points_; }
  std::complex<double> point(int idx) const { return points_[idx]; }

  /// Bit b (0 = most significant) of the label of constellation point idx.
  int bit(int idx, int b) const {
    return (labels_[idx] >> (bits_per_symbol_ - 1 - b)) & 1;
  }

  /// Index of the point whose label equals the given bits.
  int index_of_bits(unsigned label) const;

  /// Nearest constellation index (ties -> lowest index).
  int slice(std::complex<double> z) const;

  Eigen::VectorXcd map_bits(const std::vector<int>& bits) const;
  std::vector<int> bits_of(const Eigen::VectorXi& indices) const;

  const std::string& name() const { return name_; }

 private:
  Constellation(std::string name, std::vector<std::complex<double>> pts,
                std::vector<unsigned> labels, int bps);

  std::string name_;
  std::vector<std::complex<double>> points_;
  std::vector<unsigned> labels_;  // Gray label of each point
  int bits_per_symbol_;
};

}  // namespace dsce
