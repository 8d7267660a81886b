#pragma once

// Rule checks for the poetic forms in the catalog. Structure and pairing are
// hard rules; rhyme and tone are advisory unless strict_phonology is set.

#include <string>
#include <string_view>
#include <vector>

#include "guti/catalog.hpp"
#include "guti/phonology.hpp"
#include "guti/poem.hpp"

namespace guti {

enum class Outcome { pass, fail, unknown };

std::string_view outcome_name(Outcome o);

/// 0-based; column -1 refers to the whole line.
struct Position {
  int line = 0;
  int column = -1;
  bool operator==(const Position&) const = default;
};

struct RuleResult {
  std::string rule;  // line_count, line_length, punctuation, pairing, rhyme, tone, acrostic
  Outcome outcome = Outcome::pass;
  bool hard = true;
  std::vector<Position> positions;
  std::string message;
  bool operator==(const RuleResult&) const = default;
};

struct ValidationReport {
  std::string form_id;
  std::vector<RuleResult> results;
  bool well_formed = true;  // no hard rule failed

  std::vector<const RuleResult*> failures(bool hard_only = true) const;
  bool operator==(const ValidationReport&) const = default;
};

struct ValidateOptions {
  /// Promote rhyme and tone failures to hard rules. Unknown readings never fail.
  bool strict_phonology = false;
};

/// Line count, per-line lengths and terminal punctuation. Ci tunes pass when
/// any of their layouts matches. Couplets are checked segment by segment
/// against the first line, which serialization stores in the theme.
std::vector<RuleResult> check_structure(const Poem& poem, const FormSpec& spec);

/// One result per paired slot: equal length, no character repeated at the same
/// position (characters in `function_characters` excepted) and ，/。 endings.
/// Couplets pair the theme with the body and require identical segment marks.
std::vector<RuleResult> check_pairing(const Poem& poem, const FormSpec& spec,
                                      std::u32string_view function_characters = {});

std::vector<RuleResult> check_rhyme(const Poem& poem, const FormSpec& spec, const PhonologyTable& table);
std::vector<RuleResult> check_tone(const Poem& poem, const FormSpec& spec, const PhonologyTable& table);

/// Line-initial characters against `target`. stride 1 reads every line,
/// stride 2 every other line; 0 picks whichever matches the line count.
RuleResult check_acrostic(const Poem& poem, std::string_view target, int stride = 0);

/// All checks. Throws UsageError for a form missing from the catalog.
ValidationReport validate(const Poem& poem, const FormCatalog& catalog, const PhonologyTable& table,
                          const ValidateOptions& options = {});

}  // namespace guti
