#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hsigan/tensor.hpp"

namespace hsigan {

// Raw hyperspectral scene: H x W pixels, B bands, band-fastest layout.
// Values are stored as f32 so that file round-trips are bit-exact.
struct HyperCube {
  int height = 0;
  int width = 0;
  int bands = 0;
  std::vector<float> values;                       // (h, w, b) row-major, b fastest
  std::vector<std::pair<float, float>> band_range; // per-band (min, max)

  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height) * width; }

  float at(int r, int c, int b) const {
    return values[static_cast<std::size_t>((static_cast<std::int64_t>(r) * width + c) * bands + b)];
  }
  float& at(int r, int c, int b) {
    return values[static_cast<std::size_t>((static_cast<std::int64_t>(r) * width + c) * bands + b)];
  }

  // Spectral vector of one pixel by flat index (r*W + c).
  const float* pixel(std::int64_t flat) const { return values.data() + flat * bands; }

  void recompute_band_range();
};

// Per-pixel class ids. 0 = unlabeled/background, classes are 1..num_classes.
struct LabelMap {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<int> labels; // (h, w) row-major

  int at(int r, int c) const { return labels[static_cast<std::size_t>(static_cast<std::int64_t>(r) * width + c)]; }
  int& at(int r, int c) { return labels[static_cast<std::size_t>(static_cast<std::int64_t>(r) * width + c)]; }
  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height) * width; }
};

struct DatasetSplit {
  std::vector<std::pair<std::int64_t, int>> train;  // (pixel index, label)
  std::vector<std::pair<std::int64_t, int>> test;   // (pixel index, label)
  std::vector<std::int64_t> unlabeled;              // pixel indices with label 0
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;                // e.g. classes with no labeled pixels
};

// Odd-sized spatial-spectral neighborhood around one pixel, mirror-padded
// at scene borders. data has shape (s, s, B).
struct Patch {
  int center_row = 0;
  int center_col = 0;
  int size = 0;
  Tensor data;
};

enum class CubeFormat { HsiRawV1 };
enum class NormalizeMode { PerBandMinMax, PerBandZScore };

struct SynthSpec {
  int height = 16;
  int width = 16;
  int bands = 8;
  int classes = 3;
  double noise_sigma = 0.05;
  std::uint64_t seed = 1;
};

// hsi-raw-v1: one ASCII line "HSI1 <H> <W> <B>\n" then H*W*B little-endian
// IEEE-754 f32 in (h, w, b) order.
HyperCube load_cube(const std::string& path, CubeFormat format = CubeFormat::HsiRawV1);
void write_cube(const HyperCube& cube, const std::string& path,
                CubeFormat format = CubeFormat::HsiRawV1);

// ASCII PGM (P2), maxval = num_classes, 0 = unlabeled.
LabelMap load_labels_pgm(const std::string& path);
void write_labels_pgm(const LabelMap& labels, const std::string& path);

// CSV "pixel_index,label,role" with role in {train,test,unlabeled}.
void write_split_csv(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split_csv(const std::string& path);

HyperCube normalize(const HyperCube& cube, NormalizeMode mode);

// Mirror reflection of coordinate i into [0, n) without repeating the border
// sample: for n=2, index -1 maps to 1 and index 2 maps to 0.
int mirror_index(int i, int n);

Patch extract_patch(const HyperCube& cube, int center_row, int center_col, int size);

// Deterministic per-class sampling without replacement. Classes with fewer
// than n_per_class labeled pixels contribute ceil(count/2) to train; the rest
// of each class's labeled pixels go to test; label-0 pixels are unlabeled.
DatasetSplit make_split(const LabelMap& labels, int n_per_class, std::uint64_t seed);

// Voronoi partition of K random sites, one smooth random spectral signature
// per class (mixture of Gaussian bumps over the band axis), plus i.i.d.
// Gaussian noise. Every pixel is labeled.
std::pair<HyperCube, LabelMap> synth_scene(const SynthSpec& spec);

}  // namespace hsigan
