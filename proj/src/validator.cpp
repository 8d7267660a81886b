#include "guti/validator.hpp"

#include <algorithm>
#include <set>

#include "guti/error.hpp"
#include "guti/utf8.hpp"

namespace guti {

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::unknown: return "unknown";
  }
  return "unknown";
}

std::vector<const RuleResult*> ValidationReport::failures(bool hard_only) const {
  std::vector<const RuleResult*> out;
  for (const auto& r : results)
    if (r.outcome == Outcome::fail && (r.hard || !hard_only)) out.push_back(&r);
  return out;
}

namespace {

RuleResult make(std::string rule, bool hard = true) {
  RuleResult r;
  r.rule = std::move(rule);
  r.hard = hard;
  return r;
}

void fail(RuleResult& r, Position p, const std::string& msg) {
  r.outcome = Outcome::fail;
  r.positions.push_back(p);
  if (!r.message.empty()) r.message += "; ";
  r.message += msg;
}

std::string line_label(std::size_t i) { return "line " + std::to_string(i + 1); }

bool punct_matches(PunctSlot slot, Punct p) {
  switch (slot) {
    case PunctSlot::any: return p != Punct::none;
    case PunctSlot::comma: return p == Punct::comma;
    case PunctSlot::period: return p == Punct::period;
  }
  return false;
}

std::string_view slot_text(PunctSlot slot) {
  switch (slot) {
    case PunctSlot::comma: return "，";
    case PunctSlot::period: return "。";
    case PunctSlot::any: return "，or。";
  }
  return "";
}

std::string_view mark_text(Punct p) { return p == Punct::none ? "nothing" : punct_text(p); }

std::vector<RuleResult> structure_for(const std::vector<Line>& body, const std::vector<int>& lengths,
                                      const std::vector<PunctSlot>& punct) {
  RuleResult count = make("line_count"), len = make("line_length"), pun = make("punctuation");
  if (body.size() != lengths.size())
    fail(count, {static_cast<int>(std::min(body.size(), lengths.size())), -1},
         "expected " + std::to_string(lengths.size()) + " lines, found " + std::to_string(body.size()));
  for (std::size_t i = 0; i < body.size() && i < lengths.size(); ++i) {
    const auto n = static_cast<int>(body[i].characters.size());
    if (n != lengths[i])
      fail(len, {static_cast<int>(i), std::min(n, lengths[i])},
           line_label(i) + " has " + std::to_string(n) + " characters, expected " + std::to_string(lengths[i]));
  }
  for (std::size_t i = 0; i < body.size() && i < lengths.size(); ++i) {
    PunctSlot slot = PunctSlot::any;
    if (!punct.empty()) slot = punct[i];
    else if (i + 1 == lengths.size()) slot = PunctSlot::period;
    if (!punct_matches(slot, body[i].terminal))
      fail(pun, {static_cast<int>(i), -1},
           line_label(i) + " ends with " + std::string(mark_text(body[i].terminal)) + ", expected " +
               std::string(slot_text(slot)));
  }
  return {count, len, pun};
}

std::size_t failure_count(const std::vector<RuleResult>& rs) {
  return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [](const RuleResult& r) {
    return r.outcome == Outcome::fail;
  }));
}

/// Index of the first layout the body matches, or -1.
int matching_template(const Poem& poem, const FormSpec& spec) {
  const auto templates = spec.templates();
  for (std::size_t t = 0; t < templates.size(); ++t)
    if (failure_count(structure_for(poem.body, templates[t].line_lengths, spec.punct_pattern)) == 0)
      return static_cast<int>(t);
  return -1;
}

std::vector<Line> couplet_first_line(const Poem& poem) {
  try {
    return parse_body(poem.theme);
  } catch (const UsageError&) {
    return {};
  }
}

bool is_function_char(char32_t c, std::u32string_view fc) { return fc.find(c) != std::u32string_view::npos; }

/// Positional repeats between two equally indexed character runs.
void check_repeats(RuleResult& r, const std::u32string& a, const std::u32string& b, int line_b,
                   std::u32string_view fc) {
  for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j)
    if (a[j] == b[j] && !is_function_char(a[j], fc))
      fail(r, {line_b, static_cast<int>(j)},
           "character " + utf8::encode(a[j]) + " repeated at position " + std::to_string(j + 1));
}

}  // namespace

std::vector<RuleResult> check_structure(const Poem& poem, const FormSpec& spec) {
  switch (spec.form_class) {
    case FormClass::jintishi:
    case FormClass::ci: {
      const auto templates = spec.templates();
      std::vector<RuleResult> best;
      for (std::size_t t = 0; t < templates.size(); ++t) {
        auto rs = structure_for(poem.body, templates[t].line_lengths, spec.punct_pattern);
        if (failure_count(rs) == 0) {
          if (t > 0)
            for (auto& r : rs) r.message = "matches variant layout " + std::to_string(t);
          return rs;
        }
        if (best.empty()) best = std::move(rs);
      }
      return best;
    }
    case FormClass::gushi: {
      RuleResult count = make("line_count"), len = make("line_length"), pun = make("punctuation");
      if (poem.body.empty() || poem.body.size() % 2 != 0)
        fail(count, {static_cast<int>(poem.body.size()), -1},
             "expected an even, non-zero number of lines, found " + std::to_string(poem.body.size()));
      for (std::size_t i = 0; i < poem.body.size(); ++i) {
        const auto n = static_cast<int>(poem.body[i].characters.size());
        if (n != spec.gushi_line_length)
          fail(len, {static_cast<int>(i), std::min(n, spec.gushi_line_length)},
               line_label(i) + " has " + std::to_string(n) + " characters, expected " +
                   std::to_string(spec.gushi_line_length));
      }
      if (!poem.body.empty() && poem.body.back().terminal != Punct::period)
        fail(pun, {static_cast<int>(poem.body.size() - 1), -1}, "final line must end with 。");
      return {count, len, pun};
    }
    case FormClass::couplet: {
      const std::vector<Line> first = couplet_first_line(poem);
      RuleResult count = make("line_count"), len = make("line_length"), pun = make("punctuation");
      if (first.empty()) fail(count, {0, -1}, "couplet first line is empty");
      if (poem.body.size() != first.size())
        fail(count, {static_cast<int>(std::min(poem.body.size(), first.size())), -1},
             "second line has " + std::to_string(poem.body.size()) + " segments, first line has " +
                 std::to_string(first.size()));
      for (std::size_t i = 0; i < std::min(first.size(), poem.body.size()); ++i) {
        const auto n = poem.body[i].characters.size(), m = first[i].characters.size();
        if (n != m)
          fail(len, {static_cast<int>(i), static_cast<int>(std::min(n, m))},
               "segment " + std::to_string(i + 1) + " has " + std::to_string(n) + " characters, first line has " +
                   std::to_string(m));
        const bool last = i + 1 == first.size() && i + 1 == poem.body.size();
        const Punct a = first[i].terminal, b = poem.body[i].terminal;
        // the closing mark of either line is optional
        const bool ok = last ? (a != Punct::comma && b != Punct::comma) : a == b;
        if (!ok)
          fail(pun, {static_cast<int>(i), -1},
               "segment " + std::to_string(i + 1) + " ends with " + std::string(mark_text(b)) + ", first line has " +
                   std::string(mark_text(a)));
      }
      return {count, len, pun};
    }
  }
  return {};
}

std::vector<RuleResult> check_pairing(const Poem& poem, const FormSpec& spec, std::u32string_view fc) {
  std::vector<RuleResult> out;
  if (spec.form_class == FormClass::couplet) {
    RuleResult r = make("pairing");
    const std::vector<Line> first = couplet_first_line(poem);
    if (first.size() != poem.body.size()) {
      fail(r, {0, -1}, "first and second line have different segment counts");
    } else {
      for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i].characters.size() != poem.body[i].characters.size())
          fail(r, {static_cast<int>(i), -1}, "segment " + std::to_string(i + 1) + " lengths differ");
        check_repeats(r, first[i].characters, poem.body[i].characters, static_cast<int>(i), fc);
      }
    }
    r.message = r.outcome == Outcome::pass ? "first and second line pair" : r.message;
    out.push_back(std::move(r));
    return out;
  }
  for (auto [a, b] : spec.pairing_slots) {
    RuleResult r = make("pairing");
    const std::string label = "lines " + std::to_string(a + 1) + "/" + std::to_string(b + 1);
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (ub >= poem.body.size() || ua >= poem.body.size()) {
      fail(r, {std::max(a, b), -1}, label + ": line missing");
      out.push_back(std::move(r));
      continue;
    }
    const Line& la = poem.body[ua];
    const Line& lb = poem.body[ub];
    if (la.characters.size() != lb.characters.size()) fail(r, {b, -1}, label + ": lengths differ");
    check_repeats(r, la.characters, lb.characters, b, fc);
    if (la.terminal != Punct::comma || lb.terminal != Punct::period)
      fail(r, {b, -1}, label + ": endings must be ，and 。");
    if (r.outcome == Outcome::pass) r.message = label + " pair";
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RuleResult> check_rhyme(const Poem& poem, const FormSpec& spec, const PhonologyTable& table) {
  std::vector<RuleResult> out;
  std::vector<std::vector<int>> groups;
  if (spec.form_class == FormClass::jintishi || spec.form_class == FormClass::ci) {
    const int t = matching_template(poem, spec);
    groups = spec.templates()[t < 0 ? 0 : static_cast<std::size_t>(t)].rhyme_groups;
  } else if (spec.form_class == FormClass::gushi) {
    // even lines rhyme
    std::vector<int> g;
    for (std::size_t i = 1; i < poem.body.size(); i += 2) g.push_back(static_cast<int>(i));
    if (g.size() >= 2) groups.push_back(std::move(g));
  }
  for (const auto& g : groups) {
    RuleResult r = make("rhyme", false);
    std::set<std::string> seen;
    std::string listing;
    bool unknown = false;
    for (int i : g) {
      const auto ui = static_cast<std::size_t>(i);
      if (ui >= poem.body.size() || poem.body[ui].characters.empty()) {
        unknown = true;
        continue;
      }
      const char32_t last = poem.body[ui].characters.back();
      const int col = static_cast<int>(poem.body[ui].characters.size()) - 1;
      r.positions.push_back({i, col});
      const auto group = table.rhyme_group(last);
      if (!group) {
        unknown = true;
        continue;
      }
      seen.insert(*group);
      listing += (listing.empty() ? "" : ", ") + utf8::encode(last) + ":" + *group;
    }
    if (seen.size() > 1) {
      r.outcome = Outcome::fail;
      r.message = "rhyme groups differ (" + listing + ")";
    } else if (unknown) {
      r.outcome = Outcome::unknown;
      r.message = "rhyme unknown for some slots" + (listing.empty() ? std::string() : " (" + listing + ")");
    } else {
      r.positions.clear();
      r.message = "rhyme group " + (seen.empty() ? std::string("-") : *seen.begin());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RuleResult> check_tone(const Poem& poem, const FormSpec& spec, const PhonologyTable& table) {
  std::vector<RuleResult> out;
  if (spec.tone_pattern.empty()) return out;
  RuleResult r = make("tone", false);
  std::vector<Position> unknown;
  for (std::size_t i = 0; i < spec.tone_pattern.size() && i < poem.body.size(); ++i) {
    const std::string& pattern = spec.tone_pattern[i];
    const std::u32string& chars = poem.body[i].characters;
    for (std::size_t j = 0; j < pattern.size() && j < chars.size(); ++j) {
      if (pattern[j] == 'x') continue;
      const Tone want = pattern[j] == 'p' ? Tone::ping : Tone::ze;
      const Tone got = table.tone(chars[j]);
      if (got == Tone::unknown) {
        unknown.push_back({static_cast<int>(i), static_cast<int>(j)});
      } else if (got != want) {
        fail(r, {static_cast<int>(i), static_cast<int>(j)},
             line_label(i) + " position " + std::to_string(j + 1) + ": " + utf8::encode(chars[j]) + " is " +
                 std::string(tone_name(got)) + ", expected " + std::string(tone_name(want)));
      }
    }
  }
  if (r.outcome != Outcome::fail && !unknown.empty()) {
    r.outcome = Outcome::unknown;
    r.positions = unknown;
    r.message = std::to_string(unknown.size()) + " fixed slot(s) with unknown tone";
  }
  out.push_back(std::move(r));
  return out;
}

RuleResult check_acrostic(const Poem& poem, std::string_view target, int stride) {
  RuleResult r = make("acrostic");
  const std::u32string t = utf8::decode(target);
  const std::size_t n = poem.body.size();
  if (stride == 0) stride = (!t.empty() && n == 2 * t.size()) ? 2 : 1;
  const auto s = static_cast<std::size_t>(stride);
  if (stride < 1 || n != t.size() * s) {
    fail(r, {static_cast<int>(std::min(n, t.size() * s)), -1},
         "target has " + std::to_string(t.size()) + " characters for " + std::to_string(n) + " lines");
  }
  for (std::size_t i = 0; i < t.size() && i * s < n; ++i) {
    const std::u32string& chars = poem.body[i * s].characters;
    if (chars.empty() || chars.front() != t[i])
      fail(r, {static_cast<int>(i * s), 0},
           line_label(i * s) + " starts with " + (chars.empty() ? std::string("nothing") : utf8::encode(chars.front())) +
               ", expected " + utf8::encode(t[i]));
  }
  return r;
}

ValidationReport validate(const Poem& poem, const FormCatalog& catalog, const PhonologyTable& table,
                          const ValidateOptions& options) {
  const FormSpec& spec = catalog.at(poem.form_id);
  ValidationReport report;
  report.form_id = poem.form_id;
  auto append = [&](std::vector<RuleResult> rs) {
    for (auto& r : rs) report.results.push_back(std::move(r));
  };
  if (poem.acrostic && spec.form_class == FormClass::couplet) {
    // an acrostic couplet has no first line to compare against
    append({check_acrostic(poem, poem.theme)});
  } else {
    append(check_structure(poem, spec));
    append(check_pairing(poem, spec, catalog.function_characters()));
    if (poem.acrostic) append({check_acrostic(poem, poem.theme)});
  }
  auto phon = check_rhyme(poem, spec, table);
  auto tone = check_tone(poem, spec, table);
  phon.insert(phon.end(), tone.begin(), tone.end());
  for (auto& r : phon) r.hard = options.strict_phonology;
  append(std::move(phon));
  for (const auto& r : report.results)
    if (r.hard && r.outcome == Outcome::fail) report.well_formed = false;
  return report;
}

}  // namespace guti
