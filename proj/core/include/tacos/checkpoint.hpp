#pragma once

#include <string>

#include "tacos/mlp.hpp"

namespace tacos {

/// Binary network checkpoint: versioned header (layer shapes, activation id)
/// followed by the flat parameter vector as little-endian 64-bit floats.
void save_checkpoint(const std::string& path, const Mlp& net);
Mlp load_checkpoint(const std::string& path);

} // namespace tacos
