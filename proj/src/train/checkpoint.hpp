#pragma once

#include <filesystem>

#include "train/model.hpp"

namespace vlct::train {

/// Single-blob checkpoint: 8-byte magic, little-endian u32 header length,
/// JSON header (model config, parameter count, version, extra metadata), then
/// the flattened parameters as little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& extra = {});

ModelParams load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace vlct::train
