#pragma once

#include <cstdint>
#include <vector>

#include "hsigan/hsi_data.hpp"

namespace hsigan {

// Per-pixel distribution over the K land-cover classes (class k at index
// k-1). Rows are expected to sum to 1.
struct ProbabilityMap {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> q;  // (h, w, k) row-major

  ProbabilityMap() = default;
  ProbabilityMap(int h, int w, int k)
      : height(h), width(w), num_classes(k),
        q(static_cast<std::size_t>(h) * w * k, 0.0) {}

  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height) * width; }

  double* row(std::int64_t pixel) { return q.data() + pixel * num_classes; }
  const double* row(std::int64_t pixel) const { return q.data() + pixel * num_classes; }

  double at(int r, int c, int k) const {
    return q[static_cast<std::size_t>((static_cast<std::int64_t>(r) * width + c) * num_classes + k)];
  }
  double& at(int r, int c, int k) {
    return q[static_cast<std::size_t>((static_cast<std::int64_t>(r) * width + c) * num_classes + k)];
  }
};

// Per-pixel argmax readout; ties go to the lowest class index. Output labels
// are 1..K.
LabelMap map_labeling(const ProbabilityMap& probs);

// ProbabilityMap <-> hsi-raw-v1 with B = K.
void write_prob_map(const ProbabilityMap& probs, const std::string& path);
ProbabilityMap load_prob_map(const std::string& path);

}  // namespace hsigan
