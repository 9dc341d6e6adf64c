#pragma once

#include <cstdint>
#include <vector>

#include "hsigan/hsi_data.hpp"
#include "hsigan/prob_map.hpp"

namespace hsigan {

// Fully-connected pairwise CRF over all pixels. Pairwise potentials combine
// an appearance kernel f1 (spatial + spectral Gaussian) and a smoothness
// kernel f2 (spatial Gaussian), weighted w1/w2 and gated by a label
// compatibility matrix (Potts by default).
struct CrfParams {
  double w1 = 1.0;
  double w2 = 0.3;
  double theta_alpha = 3.0;  // f1 spatial bandwidth, pixels
  double theta_beta = 0.5;   // f1 spectral bandwidth, normalized-intensity units
  double theta_gamma = 3.0;  // f2 spatial bandwidth, pixels
  int iterations = 10;
  double unary_floor = 1e-6;
  // Optional K x K compatibility, row-major; empty means Potts 1{a != b}.
  std::vector<double> compat;

  void validate(int num_classes) const;
  double mu(int la, int lb, int num_classes) const;
};

// Position + spectral feature of one pixel (0-based class-free view).
struct PixelFeature {
  double row = 0.0;
  double col = 0.0;
  std::vector<double> intensity;
};

// All pixel features in one flat block: N x dim intensities plus implicit
// grid positions.
struct FeatureField {
  int height = 0;
  int width = 0;
  int dim = 0;
  std::vector<double> intensity;  // pixel-major

  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height) * width; }
  const double* row(std::int64_t pixel) const { return intensity.data() + pixel * dim; }
  PixelFeature feature(std::int64_t pixel) const;
};

// Spectral features for the appearance kernel: the band vector itself for
// B <= max_direct_bands, otherwise the top-3 principal components (power
// iteration with deflation; fixed iteration count, bit-deterministic).
FeatureField features_from_cube(const HyperCube& cube, int max_direct_bands = 16,
                                int pca_components = 3);

// Negative-log unary costs with a probability floor.
struct UnaryCosts {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> u;  // (h, w, k)

  const double* row(std::int64_t pixel) const { return u.data() + pixel * num_classes; }
};

UnaryCosts unary_from_probs(const ProbabilityMap& probs, double floor);

// Gaussian kernels; both are 1 at zero distance.
double kernel_f1(const PixelFeature& a, const PixelFeature& b, double theta_alpha,
                 double theta_beta);
double kernel_f2(const PixelFeature& a, const PixelFeature& b, double theta_gamma);

// mu(la, lb) * (w1*f1 + w2*f2) for 0-based labels la, lb < K.
double pairwise_potential(const PixelFeature& a, const PixelFeature& b, int la, int lb,
                          const CrfParams& params, int num_classes);

// Total labeling energy: all unary terms plus every unordered pixel pair
// counted once. Labels must be 1..K everywhere.
double energy(const LabelMap& labels, const FeatureField& features, const UnaryCosts& unary,
              const CrfParams& params);

// Synchronous mean-field updates from the previous iterate's snapshot;
// iterations = 0 returns the input unchanged. If residuals is non-null it
// receives max |Q_next - Q| per iteration.
ProbabilityMap mean_field_infer(const ProbabilityMap& probs, const FeatureField& features,
                                const CrfParams& params,
                                std::vector<double>* residuals = nullptr);

}  // namespace hsigan
