#pragma once

#include <string>

#include "hsigan/param_set.hpp"

namespace hsigan {

// Checkpoint container: ASCII manifest (one "name rank d0 d1 ..." line per
// parameter) followed by every tensor's values as little-endian f32 in
// manifest order.
void save_checkpoint(const ParamSet& params, const std::string& path);

// Loads into an already-built parameter set; names and shapes must match the
// manifest exactly, otherwise a ShapeError names the offending entry.
void load_checkpoint(ParamSet& params, const std::string& path);

}  // namespace hsigan
