#include "hsigan/prob_map.hpp"

#include "hsigan/errors.hpp"

namespace hsigan {

LabelMap map_labeling(const ProbabilityMap& probs) {
  if (probs.num_classes < 1) throw ParamError("map_labeling: empty probability map");
  LabelMap lm;
  lm.height = probs.height;
  lm.width = probs.width;
  lm.num_classes = probs.num_classes;
  lm.labels.resize(static_cast<std::size_t>(probs.pixel_count()));
  for (std::int64_t p = 0; p < probs.pixel_count(); ++p) {
    const double* row = probs.row(p);
    int best = 0;
    for (int k = 1; k < probs.num_classes; ++k)
      if (row[k] > row[best]) best = k;  // strict: ties keep the lowest index
    lm.labels[static_cast<std::size_t>(p)] = best + 1;
  }
  return lm;
}

void write_prob_map(const ProbabilityMap& probs, const std::string& path) {
  HyperCube cube;
  cube.height = probs.height;
  cube.width = probs.width;
  cube.bands = probs.num_classes;
  cube.values.resize(probs.q.size());
  for (std::size_t i = 0; i < probs.q.size(); ++i)
    cube.values[i] = static_cast<float>(probs.q[i]);
  write_cube(cube, path);
}

ProbabilityMap load_prob_map(const std::string& path) {
  const HyperCube cube = load_cube(path);
  ProbabilityMap probs(cube.height, cube.width, cube.bands);
  for (std::size_t i = 0; i < cube.values.size(); ++i)
    probs.q[i] = static_cast<double>(cube.values[i]);
  return probs;
}

}  // namespace hsigan
