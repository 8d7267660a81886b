#pragma once

// Binary model checkpoint:
//   "GUTICKPT" | u32 version | config | u32 tensor count |
//   per tensor: u32 ndim, u32 dims..., f32 data
// All integers and floats little-endian. Tensors follow
// ModelParams::named_tensors() order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "guti/model.hpp"

namespace guti {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string checkpoint_bytes(const ModelParams<float>& params);

/// Throws FormatError on a bad magic, version, config or tensor shape.
ModelParams<float> parse_checkpoint(std::string_view bytes);

/// Written to a temporary sibling and renamed into place. Throws IoError.
void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path);
ModelParams<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace guti
