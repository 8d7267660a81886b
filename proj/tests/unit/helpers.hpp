#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "guti/catalog.hpp"
#include "guti/corpus.hpp"
#include "guti/phonology.hpp"

namespace guti::test {

inline std::filesystem::path data_dir() { return GUTI_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return GUTI_TEST_DATA_DIR; }

inline const FormCatalog& catalog() {
  static const FormCatalog c = FormCatalog::load(data_dir() / "forms.yaml");
  return c;
}

inline const PhonologyTable& phonology() {
  static const PhonologyTable t = PhonologyTable::load(data_dir() / "phonology.tsv");
  return t;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Every poem printed in the showcase tables.
inline const std::vector<Poem>& showcase() {
  static const std::vector<Poem> poems = [] {
    IngestResult r = ingest_corpus(fixture_dir() / "showcase_poems.jsonl", catalog());
    if (!r.diagnostics.empty()) throw std::runtime_error("fixture diagnostics: " + r.diagnostics[0].message);
    return r.poems;
  }();
  return poems;
}

inline const Poem& showcase_poem(const std::string& source_id) {
  for (const auto& p : showcase())
    if (p.source_id == source_id) return p;
  throw std::runtime_error("no fixture " + source_id);
}

inline const std::vector<Poem>& toy_corpus() {
  static const std::vector<Poem> poems = ingest_corpus(data_dir() / "toy_corpus.jsonl", catalog()).poems;
  return poems;
}

}  // namespace guti::test
