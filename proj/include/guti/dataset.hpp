#pragma once

// Serialized training set on disk: one JSON object per line,
//   {"source_id": ..., "text": ..., "spans": [[begin, end] x 5]}
// with byte spans of the five fields inside text.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guti/corpus.hpp"

namespace guti {

std::string sample_to_json(const SerializedSample& sample);
/// Throws FormatError on malformed JSON or inconsistent spans.
SerializedSample sample_from_json(std::string_view line);

void write_dataset(const std::filesystem::path& path, std::span<const SerializedSample> samples);
std::vector<SerializedSample> read_dataset(const std::filesystem::path& path);

}  // namespace guti
