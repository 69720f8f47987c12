#pragma once

#include <string>
#include <string_view>

#include "qnvb/optimizer.hpp"

namespace qnvb::io {

struct Checkpoint {
  OptimizerState state;
  Rng rng;
};

/// Flat "key = value" text. Arrays are space-separated shortest round-trip
/// decimals; the engine state is its standard textual form. The document
/// ends with "end = ok" so truncation is detectable.
std::string format_checkpoint(const OptimizerState& state, const Rng& rng,
                              const OptimizerConfig& config);

/// `shape` supplies the family kind and dimensions; its layout tag and the
/// config's trajectory hash must match the document.
Checkpoint parse_checkpoint(std::string_view text, const VariationalFamily& shape,
                            const OptimizerConfig& config);

/// Writes through a temporary file and renames over `path`.
void checkpoint_save(const std::string& path, const OptimizerState& state,
                     const Rng& rng, const OptimizerConfig& config);
Checkpoint checkpoint_load(const std::string& path, const VariationalFamily& shape,
                           const OptimizerConfig& config);

}  // namespace qnvb::io
