#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsigan/hsi_data.hpp"
#include "hsigan/layers.hpp"
#include "hsigan/losses.hpp"
#include "hsigan/optimizer.hpp"
#include "hsigan/param_set.hpp"
#include "hsigan/prob_map.hpp"
#include "hsigan/rng.hpp"
#include "hsigan/tape.hpp"

namespace hsigan {

// Model variants: full 3-D kernels, spatial-only, spectral-only, and the
// spectral-then-spatial default.
enum class Variant { CONV, SPA, SPC, SS };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct ConvLayerDef {
  std::string name;
  int kernel_idx = -1;
  int bias_idx = -1;
  Stride3 stride;
  Act act = Act::Lrelu;
  ConvLayerParams::Mode mode = ConvLayerParams::Mode::Conv;
};

// Classifier over K+1 logits: classes 1..K plus the "generated" class at
// index K. Patches enter as (s, s, B, 1); SPA instead views the spectrum as
// channels, (s, s, 1, B).
struct Discriminator {
  Variant variant = Variant::SS;
  int num_classes = 0;
  int patch_size = 0;
  int bands = 0;
  double lrelu_slope = 0.2;
  bool bands_as_channels = false;  // SPA input layout
  enum class Pool { GlobalAvg, CenterSpectralAvg } pool = Pool::GlobalAvg;
  int feature_layer_index = 0;  // layer whose (pooled) activation feeds feature matching

  ParamSet params;
  std::vector<ConvLayerDef> layers;
  int head_w_idx = -1;
  int head_b_idx = -1;

  // Pure forward passes (thread-safe, no recording).
  Tensor patch_input(const Tensor& patch) const;  // (s,s,B) -> network input layout
  Tensor logits(const Tensor& patch) const;
  Tensor pooled_features(const Tensor& patch) const;

  struct TapeIds {
    std::vector<int> param_slots;  // one per entry in params
  };
  TapeIds register_params(Tape& tape, bool trainable) const;
  // Forward on tape from an already-registered input slot holding the
  // network-layout patch. Returns {logits_id, features_id}.
  struct TapeOut {
    int logits = -1;
    int features = -1;
  };
  TapeOut forward(Tape& tape, int input_id, const TapeIds& ids) const;

  std::int64_t parameter_count() const { return params.total_elements(); }
};

// Noise -> dense seed tensor -> transposed conv stack -> tanh patch in
// [-1, 1] of shape (s, s, B).
struct Generator {
  int noise_dim = 64;
  int patch_size = 0;
  int bands = 0;

  ParamSet params;
  int seed_w_idx = -1;
  int seed_b_idx = -1;
  std::vector<int> seed_shape;
  std::vector<ConvLayerDef> layers;

  Tensor synth(const Tensor& noise) const;  // pure forward -> (s, s, B)

  Discriminator::TapeIds register_params(Tape& tape, bool trainable) const;
  // Returns the id of the generated patch in network layout (s, s, B, 1).
  int forward(Tape& tape, int noise_id, const Discriminator::TapeIds& ids) const;
};

Discriminator build_discriminator(Variant variant, int num_classes, int patch_size, int bands,
                                  Rng& init_rng, double lrelu_slope = 0.2);
Generator build_generator(int noise_dim, int patch_size, int bands, Rng& init_rng);

struct LossReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double total = 0.0;
  double feature_match = 0.0;
};

struct TrainConfig {
  Variant variant = Variant::SS;
  int epochs = 200;
  int batch_size = 32;
  double labeled_fraction = 0.5;
  AdamConfig adam;  // lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8
  std::uint64_t seed = 1;
  enum class GenObjective { FeatureMatching, NonSaturating };
  GenObjective gen_objective = GenObjective::FeatureMatching;
  int patch_size = 9;
  int noise_dim = 64;
  double lrelu_slope = 0.2;
};

struct TrainResult {
  Discriminator disc;
  Generator gen;
  std::vector<LossReport> log;  // one entry per step
};

// Called at the end of each epoch (epoch is 1-based); used by the CLI to
// write periodic checkpoints so an aborted run keeps its last good state.
using EpochCallback = std::function<void(int epoch, const Discriminator&, const Generator&)>;

// Alternating optimization: one discriminator update (L1+L2+L3 over labeled,
// unlabeled-real, and generated sub-batches) then one generator update
// (feature matching or non-saturating) per step. The cube must already be
// normalized to the generator's tanh range. Deterministic given cfg.seed.
TrainResult train(const HyperCube& cube, const DatasetSplit& split, int num_classes,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = nullptr);

// Per-pixel class distribution: extract patch, forward, renormalize over the
// K real classes. Pixels fan out across threads.
ProbabilityMap predict_map(const Discriminator& disc, const HyperCube& cube);

void write_train_log_csv(const std::vector<LossReport>& log, const std::string& path);

}  // namespace hsigan
