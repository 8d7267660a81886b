#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "guti/form_spec.hpp"

namespace guti {

struct MarkerPair {
  std::string id1;
  std::string id2;
};

/// Form templates and the identifier tokens separating serialized fields.
/// Loaded from a YAML file (see data/forms.yaml for the schema).
class FormCatalog {
 public:
  static FormCatalog load(const std::filesystem::path& path);
  static FormCatalog parse(std::string_view yaml_text);

  /// $GUTI_CATALOG when set, otherwise the catalog shipped in data/.
  static std::filesystem::path default_path();

  const FormSpec* find(std::string_view form_id) const;
  /// Throws UsageError listing the known forms.
  const FormSpec& at(std::string_view form_id) const;

  const MarkerPair& markers(FormClass form_class, bool acrostic) const;
  /// Every distinct marker string, in first-declared order.
  const std::vector<std::string>& marker_tokens() const { return marker_tokens_; }

  const std::u32string& function_characters() const { return function_characters_; }

  /// Form identifiers including aliases, sorted.
  std::vector<std::string> form_ids() const;

 private:
  std::vector<FormSpec> specs_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<FormClass, MarkerPair> markers_;
  MarkerPair acrostic_markers_;
  std::vector<std::string> marker_tokens_;
  std::u32string function_characters_;
};

}  // namespace guti
