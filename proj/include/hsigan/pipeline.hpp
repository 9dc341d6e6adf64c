#pragma once

#include <string>

#include "hsigan/config.hpp"
#include "hsigan/crf.hpp"
#include "hsigan/eval.hpp"
#include "hsigan/gan.hpp"

namespace hsigan {

// Derived output layout: <out>/data for scene files, <out>/train for split,
// log and checkpoints, <out>/refine for prediction artifacts.
struct OutPaths {
  std::string root;
  explicit OutPaths(const std::string& out_dir) : root(out_dir) {}

  std::string data_dir() const { return root + "/data"; }
  std::string train_dir() const { return root + "/train"; }
  std::string refine_dir() const { return root + "/refine"; }

  std::string cube() const { return data_dir() + "/cube.hsi"; }
  std::string labels() const { return data_dir() + "/labels.pgm"; }
  std::string split() const { return train_dir() + "/split.csv"; }
  std::string train_log() const { return train_dir() + "/train_log.csv"; }
  std::string checkpoint(Variant v, int epoch) const {
    return train_dir() + "/" + variant_to_string(v) + "_" + std::to_string(epoch) + ".ckpt";
  }
};

struct PipelineData {
  HyperCube raw;
  HyperCube normalized;
  LabelMap labels;
};

// Loads the configured scene (files, or deterministic synthesis when no cube
// path is set) and normalizes it.
PipelineData load_pipeline_data(const PipelineConfig& cfg);

ParamSet merge_params(const ParamSet& disc, const ParamSet& gen);
void split_params(const ParamSet& merged, ParamSet& disc, ParamSet& gen);

// Subcommands. Each returns after writing its artifacts; errors propagate as
// the usual exception taxonomy.
void cmd_synth(const PipelineConfig& cfg);
void cmd_train(const PipelineConfig& cfg);

struct RefineResult {
  double oa_before = 0.0;
  double oa_after = 0.0;
};
// checkpoint_path may be empty: defaults to the final training checkpoint.
RefineResult cmd_refine(const PipelineConfig& cfg, const std::string& checkpoint_path = "");

// Evaluates an existing prediction (PGM label map) against ground truth on
// the split's test pixels; returns the metrics JSON.
std::string cmd_eval(const PipelineConfig& cfg, const std::string& pred_path,
                     const std::string& split_path = "");

}  // namespace hsigan
