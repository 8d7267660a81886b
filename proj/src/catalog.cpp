#include "guti/catalog.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "guti/error.hpp"
#include "guti/utf8.hpp"

namespace guti {

std::string_view form_class_name(FormClass c) {
  switch (c) {
    case FormClass::couplet: return "couplet";
    case FormClass::gushi: return "gushi";
    case FormClass::jintishi: return "jintishi";
    case FormClass::ci: return "ci";
  }
  return "unknown";
}

std::vector<LineTemplate> FormSpec::templates() const {
  std::vector<LineTemplate> out;
  out.push_back({line_lengths, rhyme_groups});
  out.insert(out.end(), variants.begin(), variants.end());
  return out;
}

void FormSpec::check_consistency() const {
  auto fail = [&](const std::string& what) { throw FormatError("form " + form_id + ": " + what); };
  if (form_class == FormClass::jintishi || form_class == FormClass::ci) {
    if (line_lengths.empty()) fail("missing line layout");
    for (int n : line_lengths)
      if (n < 1) fail("line lengths must be positive");
    if (!punct_pattern.empty() && punct_pattern.size() != line_lengths.size())
      fail("punctuation pattern length differs from line count");
    if (!tone_pattern.empty()) {
      if (tone_pattern.size() != line_lengths.size()) fail("tone pattern line count differs from layout");
      for (std::size_t i = 0; i < tone_pattern.size(); ++i)
        if (static_cast<int>(tone_pattern[i].size()) != line_lengths[i]) fail("tone pattern width differs from line length");
    }
  }
  if (form_class == FormClass::gushi && gushi_line_length < 1) fail("gushi needs line_length");
  const int total = std::accumulate(line_lengths.begin(), line_lengths.end(), 0);
  for (const auto& v : variants) {
    if (std::accumulate(v.line_lengths.begin(), v.line_lengths.end(), 0) != total)
      fail("variant total length differs from the primary layout");
  }
  auto check_index = [&](int i, std::size_t count) {
    if (i < 0 || static_cast<std::size_t>(i) >= count) fail("line index out of range");
  };
  if (!line_lengths.empty()) {
    for (const auto& group : rhyme_groups)
      for (int i : group) check_index(i, line_lengths.size());
    for (auto [a, b] : pairing_slots) {
      check_index(a, line_lengths.size());
      check_index(b, line_lengths.size());
    }
  }
  if (acrostic_stride < 1) fail("acrostic_stride must be >= 1");
}

namespace {

FormClass parse_class(const std::string& s) {
  if (s == "couplet") return FormClass::couplet;
  if (s == "gushi") return FormClass::gushi;
  if (s == "jintishi") return FormClass::jintishi;
  if (s == "ci") return FormClass::ci;
  throw FormatError("unknown form class '" + s + "'");
}

std::vector<std::vector<int>> parse_rhyme(const YAML::Node& node) {
  std::vector<std::vector<int>> groups;
  if (!node) return groups;
  for (const auto& g : node) {
    std::vector<int> group;
    for (const auto& line : g) group.push_back(line.as<int>() - 1);
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<PunctSlot> parse_punct(const std::string& s) {
  std::vector<PunctSlot> out;
  for (char32_t cp : utf8::decode(s)) {
    if (cp == U'，') out.push_back(PunctSlot::comma);
    else if (cp == U'。') out.push_back(PunctSlot::period);
    else if (cp == U'*') out.push_back(PunctSlot::any);
    else throw FormatError("invalid punctuation slot in '" + s + "'");
  }
  return out;
}

}  // namespace

FormCatalog FormCatalog::parse(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw FormatError(std::string("catalog: ") + e.what());
  }
  FormCatalog cat;
  try {
    if (!root["version"] || root["version"].as<int>() != 1) throw FormatError("catalog: unsupported version");
    auto add_marker = [&](const std::string& m) {
      if (std::find(cat.marker_tokens_.begin(), cat.marker_tokens_.end(), m) == cat.marker_tokens_.end())
        cat.marker_tokens_.push_back(m);
    };
    for (const auto& kv : root["markers"]) {
      const auto key = kv.first.as<std::string>();
      const auto pair = kv.second.as<std::vector<std::string>>();
      if (pair.size() != 2 || pair[0].empty() || pair[1].empty())
        throw FormatError("catalog: markers." + key + " needs two identifiers");
      add_marker(pair[0]);
      add_marker(pair[1]);
      if (key == "acrostic") cat.acrostic_markers_ = {pair[0], pair[1]};
      else cat.markers_[parse_class(key)] = {pair[0], pair[1]};
    }
    for (FormClass c : {FormClass::couplet, FormClass::gushi, FormClass::jintishi, FormClass::ci})
      if (!cat.markers_.count(c)) throw FormatError("catalog: no markers for class " + std::string(form_class_name(c)));
    if (cat.acrostic_markers_.id1.empty()) throw FormatError("catalog: no acrostic markers");
    if (root["function_characters"]) cat.function_characters_ = utf8::decode(root["function_characters"].as<std::string>());

    for (const auto& f : root["forms"]) {
      FormSpec spec;
      spec.form_id = f["id"].as<std::string>();
      spec.form_class = parse_class(f["class"].as<std::string>());
      if (f["lines"]) spec.line_lengths = f["lines"].as<std::vector<int>>();
      if (f["line_length"]) spec.gushi_line_length = f["line_length"].as<int>();
      if (f["punct"]) spec.punct_pattern = parse_punct(f["punct"].as<std::string>());
      spec.rhyme_groups = parse_rhyme(f["rhyme"]);
      if (f["tone"]) spec.tone_pattern = f["tone"].as<std::vector<std::string>>();
      if (f["pairing"])
        for (const auto& p : f["pairing"]) {
          auto ab = p.as<std::vector<int>>();
          if (ab.size() != 2) throw FormatError("catalog: pairing entries need two line numbers");
          spec.pairing_slots.emplace_back(ab[0] - 1, ab[1] - 1);
        }
      if (f["acrostic_stride"]) spec.acrostic_stride = f["acrostic_stride"].as<int>();
      if (f["variants"])
        for (const auto& v : f["variants"])
          spec.variants.push_back({v["lines"].as<std::vector<int>>(), parse_rhyme(v["rhyme"])});
      spec.check_consistency();

      const std::size_t idx = cat.specs_.size();
      std::vector<std::string> names{spec.form_id};
      if (f["aliases"])
        for (const auto& a : f["aliases"]) names.push_back(a.as<std::string>());
      for (const auto& name : names) {
        for (const auto& marker : cat.marker_tokens_)
          if (name.find(marker) != std::string::npos) throw FormatError("catalog: form id contains a marker: " + name);
        if (!cat.index_.emplace(name, idx).second) throw FormatError("catalog: duplicate form id " + name);
      }
      cat.specs_.push_back(std::move(spec));
    }
  } catch (const YAML::Exception& e) {
    throw FormatError(std::string("catalog: ") + e.what());
  }
  if (cat.specs_.empty()) throw FormatError("catalog: no forms");
  return cat;
}

FormCatalog FormCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::filesystem::path FormCatalog::default_path() {
  if (const char* env = std::getenv("GUTI_CATALOG"); env && *env) return env;
  return std::filesystem::path(GUTI_DATA_DIR) / "forms.yaml";
}

const FormSpec* FormCatalog::find(std::string_view form_id) const {
  auto it = index_.find(form_id);
  return it == index_.end() ? nullptr : &specs_[it->second];
}

const FormSpec& FormCatalog::at(std::string_view form_id) const {
  if (const FormSpec* s = find(form_id)) return *s;
  std::string known;
  for (const auto& id : form_ids()) known += (known.empty() ? "" : ", ") + id;
  throw UsageError("unknown form '" + std::string(form_id) + "' (known: " + known + ")");
}

const MarkerPair& FormCatalog::markers(FormClass form_class, bool acrostic) const {
  return acrostic ? acrostic_markers_ : markers_.at(form_class);
}

std::vector<std::string> FormCatalog::form_ids() const {
  std::vector<std::string> out;
  for (const auto& [name, idx] : index_) out.push_back(name);
  return out;
}

}  // namespace guti
