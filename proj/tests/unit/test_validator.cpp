#include <doctest.h>

#include <algorithm>

#include "guti/error.hpp"
#include "guti/rng.hpp"
#include "guti/utf8.hpp"
#include "guti/validator.hpp"
#include "helpers.hpp"

using namespace guti;
using guti::test::catalog;
using guti::test::phonology;
using guti::test::showcase_poem;

namespace {

Poem make(std::string form, std::string theme, std::string_view body) {
  Poem p;
  p.form_id = std::move(form);
  p.theme = std::move(theme);
  p.body = parse_body(body);
  return p;
}

const RuleResult* find_rule(const std::vector<RuleResult>& rs, std::string_view rule) {
  for (const auto& r : rs)
    if (r.rule == rule) return &r;
  return nullptr;
}

bool all_pass(const std::vector<RuleResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const RuleResult& r) { return r.outcome == Outcome::pass; });
}

PhonologyTable table_of(std::initializer_list<std::tuple<char32_t, std::string, Tone>> rows) {
  PhonologyTable t;
  for (const auto& [c, g, tone] : rows) t.add(c, g, tone);
  return t;
}

}  // namespace

TEST_CASE("every showcase poem is well formed") {
  for (const auto& p : test::showcase()) {
    const auto report = validate(p, catalog(), phonology());
    std::string why;
    for (const auto* f : report.failures()) why += f->rule + ": " + f->message + "; ";
    INFO(p.source_id << " " << why);
    CHECK(report.well_formed);
  }
  CHECK(test::showcase().size() == 57);
}

TEST_CASE("the autumn wujue passes structure and rhyme") {
  const Poem& p = showcase_poem("qiusi-wujue");
  CHECK(p.body_text() == "暮燕翻惊户，飞鸿却唤人。西风卷梧叶，触落一庭秋。");
  const auto& spec = catalog().at("五绝");
  CHECK(all_pass(check_structure(p, spec)));
  CHECK(check_pairing(p, spec).empty());
}

TEST_CASE("deleting a character fails with the position") {
  Poem p = showcase_poem("qiusi-wujue");
  p.body[2].characters.erase(1, 1);
  const auto rs = check_structure(p, catalog().at("五绝"));
  const auto* len = find_rule(rs, "line_length");
  REQUIRE(len != nullptr);
  CHECK(len->outcome == Outcome::fail);
  REQUIRE(len->positions.size() == 1);
  CHECK(len->positions[0].line == 2);
  CHECK_FALSE(validate(p, catalog(), phonology()).well_formed);
}

TEST_CASE("wrong line count and punctuation") {
  const auto& spec = catalog().at("五绝");
  const auto three = make("五绝", "t", "床前明月光，疑是地上霜。举头望明月。");
  CHECK(find_rule(check_structure(three, spec), "line_count")->outcome == Outcome::fail);
  const auto punct = make("五绝", "t", "床前明月光。疑是地上霜。举头望明月，低头思故乡。");
  const auto punct_results = check_structure(punct, spec);
  const auto* pr = find_rule(punct_results, "punctuation");
  CHECK(pr->outcome == Outcome::fail);
  CHECK(pr->positions.front() == Position{0, -1});
  const auto bare = make("五绝", "t", "床前明月光，疑是地上霜。举头望明月，低头思故乡");
  CHECK(find_rule(check_structure(bare, spec), "punctuation")->outcome == Outcome::fail);
}

TEST_CASE("couplets pair; identical lines and length mismatches do not") {
  const auto& spec = catalog().at("对联");
  for (const char* id : {"couplet-1-1", "couplet-1-2", "couplet-1-3", "couplet-2-1", "couplet-2-2", "couplet-2-3",
                         "couplet-3-1", "couplet-3-2", "couplet-3-3", "couplet-4-1", "couplet-4-2", "couplet-4-3"}) {
    const Poem& p = showcase_poem(id);
    INFO(id);
    CHECK(all_pass(check_pairing(p, spec, catalog().function_characters())));
    CHECK(all_pass(check_structure(p, spec)));
  }
  const Poem sea = couplet_transform("海上飞燕飞上海", "城外环山环外城");
  CHECK(all_pass(check_pairing(sea, spec)));

  const Poem same = couplet_transform("海上飞燕飞上海", "海上飞燕飞上海");
  const auto rs = check_pairing(same, spec);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].outcome == Outcome::fail);
  CHECK(rs[0].positions.size() == 7);

  const Poem short_line = couplet_transform("海上飞燕飞上海", "城外环山环外");
  CHECK(check_pairing(short_line, spec)[0].outcome == Outcome::fail);

  // 风弦未拨 / 诗卷未题: 未 repeats in place but is a function character.
  const Poem& fn = showcase_poem("couplet-2-1");
  CHECK(check_pairing(fn, spec)[0].outcome == Outcome::fail);
  CHECK(check_pairing(fn, spec, catalog().function_characters())[0].outcome == Outcome::pass);
}

TEST_CASE("the autumn qilü pairs lines 3/4 and 5/6") {
  const Poem& p = showcase_poem("qiusi-qilv");
  const auto& spec = catalog().at("七律");
  const auto rs = check_pairing(p, spec, catalog().function_characters());
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].outcome == Outcome::pass);
  CHECK(rs[1].outcome == Outcome::pass);

  Poem broken = p;
  broken.body[3].characters[0] = broken.body[2].characters[0];
  const auto bad = check_pairing(broken, spec);
  CHECK(bad[0].outcome == Outcome::fail);
  CHECK(bad[0].positions.front() == Position{3, 0});
  CHECK(bad[1].outcome == Outcome::pass);
}

TEST_CASE("rhyme: pass, fail and unknown") {
  const auto& spec = catalog().at("五绝");
  const Poem p = make("五绝", "t", "一二三四五，一二三四光。一二三四五，一二三四乡。");
  const auto same = table_of({{U'光', "yang", Tone::ping}, {U'乡', "yang", Tone::ping}});
  CHECK(check_rhyme(p, spec, same)[0].outcome == Outcome::pass);
  const auto diff = table_of({{U'光', "yang", Tone::ping}, {U'乡', "dong", Tone::ping}});
  const auto r = check_rhyme(p, spec, diff);
  CHECK(r[0].outcome == Outcome::fail);
  CHECK_FALSE(r[0].hard);
  CHECK(r[0].positions == std::vector<Position>{{1, 4}, {3, 4}});
  const auto partial = table_of({{U'光', "yang", Tone::ping}});
  CHECK(check_rhyme(p, spec, partial)[0].outcome == Outcome::unknown);
}

TEST_CASE("tone: pass, fail and unknown") {
  const auto& spec = catalog().at("五绝");
  const Poem p = make("五绝", "t", "一二三四五，一二三四光。一二三四月，一二三四乡。");
  const auto good =
      table_of({{U'光', "yang", Tone::ping}, {U'月', "yue", Tone::ze}, {U'乡', "yang", Tone::ping}});
  CHECK(check_tone(p, spec, good)[0].outcome == Outcome::pass);
  const auto bad = table_of({{U'光', "yang", Tone::ze}, {U'月', "yue", Tone::ze}, {U'乡', "yang", Tone::ping}});
  const auto r = check_tone(p, spec, bad);
  CHECK(r[0].outcome == Outcome::fail);
  CHECK(r[0].positions == std::vector<Position>{{1, 4}});
  const auto partial = table_of({{U'光', "yang", Tone::ping}});
  CHECK(check_tone(p, spec, partial)[0].outcome == Outcome::unknown);
}

TEST_CASE("phonology is advisory unless strict, and unknown never fails") {
  const Poem p = make("五绝", "t", "一二三四五，一二三四光。一二三四五，一二三四乡。");
  const auto diff = table_of({{U'光', "yang", Tone::ping}, {U'乡', "dong", Tone::ping}});
  CHECK(validate(p, catalog(), diff).well_formed);
  CHECK_FALSE(validate(p, catalog(), diff, {true}).well_formed);
  const PhonologyTable empty;
  CHECK(validate(p, catalog(), empty, {true}).well_formed);
}

TEST_CASE("acrostic checks") {
  const Poem& yl = showcase_poem("acrostic-yilupingan");
  CHECK(check_acrostic(yl, "一路平安").outcome == Outcome::pass);
  CHECK(check_acrostic(yl, "一路平安", 2).outcome == Outcome::pass);
  CHECK(check_acrostic(yl, "一路平安", 1).outcome == Outcome::fail);
  const auto wrong = check_acrostic(yl, "一路顺安");
  CHECK(wrong.outcome == Outcome::fail);
  CHECK(wrong.positions == std::vector<Position>{{4, 0}});

  const Poem& hw = showcase_poem("acrostic-huaweixiongqi");
  CHECK(check_acrostic(hw, "华为雄起").outcome == Outcome::pass);
  CHECK(check_acrostic(hw, "华为雄").outcome == Outcome::fail);

  Poem forged = hw;
  forged.theme = "华为雄伟";
  CHECK_FALSE(validate(forged, catalog(), phonology()).well_formed);
}

TEST_CASE("ci tunes accept any declared layout") {
  for (const char* id : {"youyuan-shuidiaogetou", "youyuan-manjianghong", "youyuan-wulingchun"}) {
    const Poem& p = showcase_poem(id);
    INFO(id);
    CHECK(all_pass(check_structure(p, catalog().at(p.form_id))));
  }
  const auto& spec = catalog().at("水调歌头");
  CHECK(spec.templates().size() >= 2);
}

TEST_CASE("gushi structure") {
  const auto& spec = catalog().at("五古");
  CHECK(all_pass(check_structure(make("五古", "t", "床前明月光，疑是地上霜。"), spec)));
  CHECK_FALSE(all_pass(check_structure(make("五古", "t", "床前明月光，疑是地上霜。举头望明月。"), spec)));
  CHECK_FALSE(all_pass(check_structure(make("五古", "t", "床前明月光，疑是地上霜，"), spec)));
  CHECK_FALSE(all_pass(check_structure(make("五古", "t", "床前明月，疑是地上霜。"), spec)));
}

TEST_CASE("validate rejects unknown forms and is pure") {
  Poem p = showcase_poem("qiusi-qilv");
  const auto a = validate(p, catalog(), phonology());
  const auto b = validate(p, catalog(), phonology());
  CHECK(a == b);
  CHECK(p == showcase_poem("qiusi-qilv"));
  p.form_id = "不存在";
  CHECK_THROWS_AS(validate(p, catalog(), phonology()), UsageError);
}

TEST_CASE("property: one random insertion or deletion breaks every fixture") {
  Rng rng(2024);
  const std::u32string pool = U"山水风月花鸟云天人心";
  for (const auto& original : test::showcase()) {
    for (int trial = 0; trial < 10; ++trial) {
      Poem p = original;
      auto& line = p.body[rng.below(p.body.size())].characters;
      if (rng.below(2) == 0 && line.size() > 1) {
        line.erase(rng.below(line.size()), 1);
      } else {
        line.insert(line.begin() + static_cast<std::ptrdiff_t>(rng.below(line.size() + 1)), pool[rng.below(pool.size())]);
      }
      INFO(original.source_id << " -> " << p.body_text());
      CHECK_FALSE(validate(p, catalog(), phonology()).well_formed);
    }
  }
}

TEST_CASE("property: strict mode only ever removes well-formedness") {
  Rng rng(77);
  const std::u32string pool = U"山水风月花鸟云天人心光乡秋";
  for (const auto& original : test::showcase()) {
    for (int trial = 0; trial < 5; ++trial) {
      Poem p = original;
      for (auto& line : p.body)
        for (auto& ch : line.characters)
          if (rng.below(4) == 0) ch = pool[rng.below(pool.size())];
      const bool lax = validate(p, catalog(), phonology()).well_formed;
      const bool strict = validate(p, catalog(), phonology(), {true}).well_formed;
      CHECK((!strict || lax));
      const auto report = validate(p, catalog(), phonology(), {true});
      const auto failed = report.failures();
      for (const auto& r : report.results)
        if (r.outcome == Outcome::unknown) CHECK(std::find(failed.begin(), failed.end(), &r) == failed.end());
    }
  }
}

TEST_CASE("phonology table parsing") {
  const auto t = PhonologyTable::parse("# comment\n光\tyang\tping\n月\t-\tze\n");
  CHECK(t.size() == 2);
  CHECK(t.rhyme_group(U'光') == std::optional<std::string>("yang"));
  CHECK_FALSE(t.rhyme_group(U'月').has_value());
  CHECK(t.tone(U'月') == Tone::ze);
  CHECK(t.tone(U'山') == Tone::unknown);
  CHECK_THROWS_AS(PhonologyTable::parse("光\tyang\n"), FormatError);
  CHECK_THROWS_AS(PhonologyTable::parse("光\tyang\tlevel\n"), FormatError);
  CHECK(phonology().size() > 3000);
}
