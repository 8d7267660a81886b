#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guti/catalog.hpp"
#include "guti/poem.hpp"

namespace guti {

enum class Field { form = 0, id1, theme, id2, body };

/// Half-open byte range inside SerializedSample::text.
struct FieldSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const FieldSpan&) const = default;
};

/// A poem flattened to `form id1 theme id2 body`.
struct SerializedSample {
  std::string text;
  std::array<FieldSpan, 5> spans{};
  std::string source_id;

  std::string_view field(Field f) const {
    const auto& s = spans[static_cast<std::size_t>(f)];
    return std::string_view(text).substr(s.begin, s.end - s.begin);
  }
  /// Everything up to and including id2: the generation prompt.
  std::string_view prompt() const { return std::string_view(text).substr(0, spans[3].end); }
};

struct IngestDiagnostic {
  std::size_t line_number = 0;  // 1-based line in the corpus file
  std::string message;
};

struct IngestOptions {
  /// Skip records whose serialized token count (markers atomic, plus BOS and
  /// EOS) exceeds this. 0 disables the check.
  std::size_t max_sequence_tokens = 0;
};

struct IngestResult {
  std::vector<Poem> poems;
  std::vector<IngestDiagnostic> diagnostics;
  std::size_t records = 0;  // non-blank lines seen
};

/// Read a line-delimited JSON corpus. Malformed records are reported in
/// diagnostics and skipped; only an unreadable file throws (IoError).
IngestResult ingest_corpus(const std::filesystem::path& path, const FormCatalog& catalog,
                           const IngestOptions& options = {});
IngestResult ingest_text(std::string_view content, const FormCatalog& catalog, const IngestOptions& options = {});

/// Parse one JSON record; throws UsageError describing the problem.
Poem parse_record(std::string_view json_line, const FormCatalog& catalog);

SerializedSample serialize(const Poem& poem, const FormCatalog& catalog);

/// Inverse of serialize. Throws FormatError for missing/duplicated markers or
/// an empty body, UsageError for an unknown form.
Poem deserialize(std::string_view text, const FormCatalog& catalog);

Poem couplet_transform(std::string_view first_line, std::string_view second_line);

/// Replace the theme by the first character of every `stride`-th line and mark
/// the poem acrostic.
Poem acrostic_transform(const Poem& poem, int stride = 1);

/// Stride from the poem's FormSpec (Lüshi put one target character per couplet).
Poem acrostic_transform(const Poem& poem, const FormCatalog& catalog);

/// Number of model tokens for a serialized sample: characters plus one per
/// marker, plus BOS and EOS.
std::size_t sequence_token_count(const SerializedSample& sample);

}  // namespace guti
