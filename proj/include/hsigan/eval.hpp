#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hsigan/hsi_data.hpp"

namespace hsigan {

// K x K counts, rows = ground truth, columns = prediction (classes 1..K at
// index 0..K-1).
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int k = 0)
      : num_classes(k), counts(static_cast<std::size_t>(k) * k, 0) {}

  std::int64_t& at(int truth, int pred) {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  std::int64_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

// Counts over exactly eval_indices; every index must carry a nonzero truth
// label (training pixels are excluded by the caller).
ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& truth,
                          const std::vector<std::int64_t>& eval_indices);

double overall_accuracy(const ConfusionMatrix& cm);  // trace / total
// Mean per-class recall, classes with no truth pixels excluded.
double average_accuracy(const ConfusionMatrix& cm);
// Cohen's kappa; throws NumericError when chance agreement is 1 (single
// class present in both truth and prediction).
double kappa(const ConfusionMatrix& cm);
std::vector<double> per_class_recall(const ConfusionMatrix& cm);

using Palette = std::vector<std::array<unsigned char, 3>>;
// 24 fixed colors; class k uses entry k-1, unlabeled renders black.
const Palette& default_palette();

// Binary PPM (P6); deterministic bytes.
void render_map(const LabelMap& labels, const Palette& palette, const std::string& path);

// Metrics report with provenance fields; deterministic serialization.
std::string metrics_json(const ConfusionMatrix& cm, std::uint64_t split_seed,
                         const std::string& config_hash);

}  // namespace hsigan
