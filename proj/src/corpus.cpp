#include "guti/corpus.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "guti/error.hpp"
#include "guti/utf8.hpp"

namespace guti {

// ---- lines and punctuation -------------------------------------------------

Punct classify_punct(char32_t cp) {
  switch (cp) {
    case U'，': case U'、': case U'；': case U'：': case U',': case U';': case U':':
      return Punct::comma;
    case U'。': case U'？': case U'！': case U'.': case U'?': case U'!':
      return Punct::period;
    default:
      return Punct::none;
  }
}

std::string_view punct_text(Punct p) {
  switch (p) {
    case Punct::comma: return "，";
    case Punct::period: return "。";
    case Punct::none: return "";
  }
  return "";
}

namespace {

bool is_space(char32_t cp) { return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n' || cp == U'　'; }

bool is_decoration(char32_t cp) {
  switch (cp) {
    case U'“': case U'”': case U'‘': case U'’': case U'「': case U'」': case U'『': case U'』':
    case U'《': case U'》': case U'"':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::u32string out;
  for (char32_t cp : utf8::decode(text)) {
    if (is_space(cp) || is_decoration(cp)) continue;
    const Punct p = classify_punct(cp);
    out.push_back(p == Punct::comma ? U'，' : p == Punct::period ? U'。' : cp);
  }
  return utf8::encode(out);
}

std::string Line::text() const { return utf8::encode(characters) + std::string(punct_text(terminal)); }

std::string Poem::body_text() const {
  std::string out;
  for (const auto& line : body) out += line.text();
  return out;
}

std::vector<Line> parse_body(std::string_view body) {
  std::vector<Line> lines;
  Line current;
  for (char32_t cp : utf8::decode(normalize_text(body))) {
    const Punct p = classify_punct(cp);
    if (p == Punct::none) {
      current.characters.push_back(cp);
      continue;
    }
    if (current.characters.empty())
      throw UsageError("empty line before punctuation at sentence " + std::to_string(lines.size() + 1));
    current.terminal = p;
    lines.push_back(std::move(current));
    current = Line{};
  }
  if (!current.characters.empty()) lines.push_back(std::move(current));
  if (lines.empty()) throw UsageError("empty body");
  return lines;
}

// ---- records ---------------------------------------------------------------

namespace {

std::string require_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw UsageError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw UsageError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

void check_theme(const std::string& theme, const FormCatalog& catalog) {
  for (const auto& marker : catalog.marker_tokens())
    if (theme.find(marker) != std::string::npos) throw UsageError("theme contains identifier marker " + marker);
}

}  // namespace

Poem parse_record(std::string_view json_line, const FormCatalog& catalog) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw UsageError("record is not a JSON object");

  Poem poem;
  try {
    if (obj.contains("first") || obj.contains("second")) {
      poem = couplet_transform(require_string(obj, "first"), require_string(obj, "second"));
      if (obj.contains("form")) poem.form_id = require_string(obj, "form");
    } else {
      poem.form_id = require_string(obj, "form");
      poem.theme = normalize_text(require_string(obj, "theme"));
      poem.body = parse_body(require_string(obj, "body"));
    }
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  if (obj.contains("acrostic")) {
    if (!obj["acrostic"].is_boolean()) throw UsageError("field 'acrostic' is not a boolean");
    poem.acrostic = obj["acrostic"].get<bool>();
  }
  if (obj.contains("source_id")) poem.source_id = require_string(obj, "source_id");

  const FormSpec& spec = catalog.at(poem.form_id);
  if (obj.contains("first") && spec.form_class != FormClass::couplet)
    throw UsageError("couplet record with non-couplet form " + poem.form_id);
  check_theme(poem.theme, catalog);
  return poem;
}

IngestResult ingest_text(std::string_view content, const FormCatalog& catalog, const IngestOptions& options) {
  IngestResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (nl == content.size()) break;
      continue;
    }
    ++result.records;
    try {
      Poem poem = parse_record(line, catalog);
      if (poem.source_id.empty()) poem.source_id = "record-" + std::to_string(line_no);
      if (options.max_sequence_tokens > 0) {
        const std::size_t tokens = sequence_token_count(serialize(poem, catalog));
        if (tokens > options.max_sequence_tokens)
          throw UsageError("sequence of " + std::to_string(tokens) + " tokens exceeds context length " +
                           std::to_string(options.max_sequence_tokens));
      }
      result.poems.push_back(std::move(poem));
    } catch (const std::exception& e) {
      result.diagnostics.push_back({line_no, e.what()});
    }
    if (nl == content.size()) break;
  }
  return result;
}

IngestResult ingest_corpus(const std::filesystem::path& path, const FormCatalog& catalog,
                           const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading corpus " + path.string());
  return ingest_text(ss.str(), catalog, options);
}

// ---- serialization ---------------------------------------------------------

SerializedSample serialize(const Poem& poem, const FormCatalog& catalog) {
  const FormSpec& spec = catalog.at(poem.form_id);
  const MarkerPair& markers = catalog.markers(spec.form_class, poem.acrostic);
  SerializedSample s;
  s.source_id = poem.source_id;
  const std::string parts[5] = {poem.form_id, markers.id1, poem.theme, markers.id2, poem.body_text()};
  for (std::size_t i = 0; i < 5; ++i) {
    s.spans[i].begin = s.text.size();
    s.text += parts[i];
    s.spans[i].end = s.text.size();
  }
  return s;
}

Poem deserialize(std::string_view text, const FormCatalog& catalog) {
  struct Hit {
    std::size_t pos;
    const std::string* marker;
  };
  std::vector<Hit> hits;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::string* found = nullptr;
    for (const auto& m : catalog.marker_tokens())
      if (text.substr(pos, m.size()) == m && (!found || m.size() > found->size())) found = &m;
    if (found) {
      hits.push_back({pos, found});
      pos += found->size();
    } else {
      pos += utf8::sequence_length(text, pos);
    }
  }
  if (hits.size() < 2) throw FormatError("serialized poem needs two identifier markers, found " + std::to_string(hits.size()));
  if (hits.size() > 2) throw FormatError("serialized poem has " + std::to_string(hits.size()) + " identifier markers");

  Poem poem;
  poem.form_id = std::string(text.substr(0, hits[0].pos));
  const FormSpec& spec = catalog.at(poem.form_id);
  const MarkerPair& plain = catalog.markers(spec.form_class, false);
  const MarkerPair& acro = catalog.markers(spec.form_class, true);
  if (*hits[0].marker == acro.id1 && *hits[1].marker == acro.id2) poem.acrostic = true;
  else if (!(*hits[0].marker == plain.id1 && *hits[1].marker == plain.id2))
    throw FormatError("markers " + *hits[0].marker + " " + *hits[1].marker + " do not match form " + poem.form_id);

  const std::size_t theme_begin = hits[0].pos + hits[0].marker->size();
  poem.theme = std::string(text.substr(theme_begin, hits[1].pos - theme_begin));
  const std::string_view body = text.substr(hits[1].pos + hits[1].marker->size());
  if (body.empty()) throw FormatError("serialized poem has an empty body");
  try {
    poem.body = parse_body(body);
  } catch (const UsageError& e) {
    throw FormatError(e.what());
  }
  return poem;
}

Poem couplet_transform(std::string_view first_line, std::string_view second_line) {
  Poem poem;
  poem.form_id = "对联";
  poem.theme = normalize_text(first_line);
  if (poem.theme.empty()) throw UsageError("couplet first line is empty");
  if (normalize_text(second_line).empty()) throw UsageError("couplet second line is empty");
  poem.body = parse_body(second_line);
  return poem;
}

Poem acrostic_transform(const Poem& poem, int stride) {
  if (poem.body.empty()) throw UsageError("acrostic transform of an empty poem");
  if (stride < 1) throw UsageError("acrostic stride must be positive");
  Poem out = poem;
  std::u32string target;
  for (std::size_t i = 0; i < poem.body.size(); ++i) {
    if (poem.body[i].characters.empty()) throw UsageError("acrostic transform: line " + std::to_string(i + 1) + " is empty");
    if (i % static_cast<std::size_t>(stride) == 0) target.push_back(poem.body[i].characters.front());
  }
  out.theme = utf8::encode(target);
  out.acrostic = true;
  return out;
}

Poem acrostic_transform(const Poem& poem, const FormCatalog& catalog) {
  const FormSpec& spec = catalog.at(poem.form_id);
  const int stride = static_cast<int>(poem.body.size()) % spec.acrostic_stride == 0 ? spec.acrostic_stride : 1;
  return acrostic_transform(poem, stride);
}

std::size_t sequence_token_count(const SerializedSample& sample) {
  return utf8::count(sample.field(Field::form)) + utf8::count(sample.field(Field::theme)) +
         utf8::count(sample.field(Field::body)) + 2 + 2;
}

}  // namespace guti
