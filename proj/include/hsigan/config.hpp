#pragma once

#include <cstdint>
#include <string>

#include "hsigan/crf.hpp"
#include "hsigan/gan.hpp"
#include "hsigan/hsi_data.hpp"

namespace hsigan {

// Flat "key = value" pipeline configuration. '#' starts a comment; every key
// has a default; unknown keys are a hard error so typos cannot pass silently.
struct PipelineConfig {
  // Data: file paths, or a synthetic scene when cube path is empty.
  std::string data_cube;
  std::string data_labels;
  std::string normalize_mode = "minmax";  // minmax | zscore
  SynthSpec synth{32, 32, 8, 4, 0.1, 1};

  int n_per_class = 10;

  TrainConfig train;  // variant, epochs, batch, optimizer, objective, patch
  CrfParams crf;

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  static PipelineConfig parse_file(const std::string& path);
  static PipelineConfig parse_text(const std::string& text, const std::string& origin = "<text>");

  void validate() const;

  // Canonical serialization (sorted keys, every field); basis of the
  // provenance hash in metrics reports.
  std::string canonical() const;
  std::string hash() const;  // FNV-1a 64 over canonical(), hex

  NormalizeMode normalize_enum() const;
};

}  // namespace hsigan
