#include "guti/dataset.hpp"

#include <json.hpp>

#include <fstream>

#include "guti/error.hpp"

namespace guti {

std::string sample_to_json(const SerializedSample& sample) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : sample.spans) spans.push_back({s.begin, s.end});
  return nlohmann::json{{"source_id", sample.source_id}, {"text", sample.text}, {"spans", spans}}.dump();
}

SerializedSample sample_from_json(std::string_view line) {
  SerializedSample s;
  try {
    const auto j = nlohmann::json::parse(line);
    s.source_id = j.at("source_id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    const auto& spans = j.at("spans");
    if (!spans.is_array() || spans.size() != s.spans.size()) throw FormatError("dataset record needs five spans");
    std::size_t prev = 0;
    for (std::size_t i = 0; i < s.spans.size(); ++i) {
      s.spans[i].begin = spans[i].at(0).get<std::size_t>();
      s.spans[i].end = spans[i].at(1).get<std::size_t>();
      if (s.spans[i].begin != prev || s.spans[i].end < s.spans[i].begin || s.spans[i].end > s.text.size())
        throw FormatError("dataset record has inconsistent spans");
      prev = s.spans[i].end;
    }
    if (prev != s.text.size()) throw FormatError("dataset record spans do not cover the text");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset record: ") + e.what());
  }
  return s;
}

void write_dataset(const std::filesystem::path& path, std::span<const SerializedSample> samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (const auto& s : samples) out << sample_to_json(s) << '\n';
  if (!out) throw IoError("error writing dataset " + path.string());
}

std::vector<SerializedSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());
  std::vector<SerializedSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sample_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace guti
