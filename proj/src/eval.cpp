#include "hsigan/eval.hpp"

#include <fstream>

#include <json.hpp>

#include "hsigan/errors.hpp"

namespace hsigan {

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& truth,
                          const std::vector<std::int64_t>& eval_indices) {
  if (pred.height != truth.height || pred.width != truth.width)
    throw ShapeError("confusion: prediction/truth dimension mismatch");
  const int k = truth.num_classes;
  ConfusionMatrix cm(k);
  for (std::int64_t idx : eval_indices) {
    if (idx < 0 || idx >= truth.pixel_count())
      throw ParamError("confusion: pixel index out of range");
    const int t = truth.labels[static_cast<std::size_t>(idx)];
    const int p = pred.labels[static_cast<std::size_t>(idx)];
    if (t == 0) throw ParamError("confusion: eval index " + std::to_string(idx) + " is unlabeled");
    if (t > k || p > k || p < 0) throw ParamError("confusion: label out of range at " + std::to_string(idx));
    if (p == 0) continue;  // unlabeled prediction counts as a miss on no column
    cm.at(t - 1, p - 1) += 1;
  }
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw ParamError("overall_accuracy: empty confusion matrix");
  std::int64_t trace = 0;
  for (int i = 0; i < cm.num_classes; ++i) trace += cm.at(i, i);
  return static_cast<double>(trace) / static_cast<double>(total);
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> recall(static_cast<std::size_t>(cm.num_classes), 0.0);
  for (int t = 0; t < cm.num_classes; ++t) {
    std::int64_t row = 0;
    for (int p = 0; p < cm.num_classes; ++p) row += cm.at(t, p);
    recall[static_cast<std::size_t>(t)] =
        row > 0 ? static_cast<double>(cm.at(t, t)) / static_cast<double>(row) : 0.0;
  }
  return recall;
}

double average_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ParamError("average_accuracy: empty confusion matrix");
  double sum = 0.0;
  int present = 0;
  for (int t = 0; t < cm.num_classes; ++t) {
    std::int64_t row = 0;
    for (int p = 0; p < cm.num_classes; ++p) row += cm.at(t, p);
    if (row == 0) continue;
    sum += static_cast<double>(cm.at(t, t)) / static_cast<double>(row);
    ++present;
  }
  return sum / static_cast<double>(present);
}

double kappa(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw ParamError("kappa: empty confusion matrix");
  double po = overall_accuracy(cm);
  double pe = 0.0;
  for (int c = 0; c < cm.num_classes; ++c) {
    std::int64_t row = 0, col = 0;
    for (int i = 0; i < cm.num_classes; ++i) {
      row += cm.at(c, i);
      col += cm.at(i, c);
    }
    pe += (static_cast<double>(row) / total) * (static_cast<double>(col) / total);
  }
  if (pe >= 1.0) throw NumericError("kappa: undefined, chance agreement is 1");
  return (po - pe) / (1.0 - pe);
}

const Palette& default_palette() {
  static const Palette palette = {{
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},
      {210, 245, 60},  {250, 190, 212}, {0, 128, 128},   {220, 190, 255},
      {170, 110, 40},  {255, 250, 200}, {128, 0, 0},     {170, 255, 195},
      {128, 128, 0},   {255, 215, 180}, {0, 0, 128},     {128, 128, 128},
      {255, 255, 255}, {155, 99, 71},   {46, 139, 87},   {255, 105, 180},
  }};
  return palette;
}

void render_map(const LabelMap& labels, const Palette& palette, const std::string& path) {
  if (labels.num_classes > static_cast<int>(palette.size()))
    throw ParamError("render_map: " + std::to_string(labels.num_classes) +
                     " classes exceed palette size " + std::to_string(palette.size()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("render_map: cannot open " + path + " for writing");
  out << "P6\n" << labels.width << " " << labels.height << "\n255\n";
  for (std::int64_t p = 0; p < labels.pixel_count(); ++p) {
    const int label = labels.labels[static_cast<std::size_t>(p)];
    unsigned char rgb[3] = {0, 0, 0};
    if (label > 0) {
      const auto& c = palette[static_cast<std::size_t>(label - 1)];
      rgb[0] = c[0];
      rgb[1] = c[1];
      rgb[2] = c[2];
    }
    out.write(reinterpret_cast<const char*>(rgb), 3);
  }
  if (!out) throw DataError("render_map: write failed for " + path);
}

std::string metrics_json(const ConfusionMatrix& cm, std::uint64_t split_seed,
                         const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["oa"] = overall_accuracy(cm);
  j["aa"] = average_accuracy(cm);
  try {
    j["kappa"] = kappa(cm);
  } catch (const NumericError&) {
    j["kappa"] = nullptr;
  }
  j["per_class_recall"] = per_class_recall(cm);
  j["confusion"] = cm.counts;
  j["split_seed"] = split_seed;
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

}  // namespace hsigan
