#include <doctest.h>

#include <algorithm>

#include "guti/dataset.hpp"
#include "guti/error.hpp"
#include "guti/rng.hpp"
#include "guti/utf8.hpp"
#include "helpers.hpp"

using namespace guti;
using guti::test::catalog;

namespace {

int total_chars(const FormSpec& spec) {
  int n = 0;
  for (int len : spec.line_lengths) n += len;
  return n;
}

const Poem& jingyesi() {
  for (const auto& p : test::toy_corpus())
    if (p.source_id == "jingyesi") return p;
  throw std::runtime_error("toy corpus lacks jingyesi");
}

}  // namespace

TEST_CASE("utf8 round trip and malformed input") {
  const std::string s = "床前明月光，abc";
  CHECK(utf8::count(s) == 9);
  CHECK(utf8::encode(utf8::decode(s)) == s);
  CHECK_THROWS_AS(utf8::decode("\xe5\xba"), FormatError);
  CHECK_THROWS_AS(utf8::decode("\xff"), FormatError);
}

TEST_CASE("regulated verse totals: 20, 28, 40 and 56 characters") {
  CHECK(total_chars(catalog().at("五绝")) == 20);
  CHECK(total_chars(catalog().at("七绝")) == 28);
  CHECK(total_chars(catalog().at("五律")) == 40);
  CHECK(total_chars(catalog().at("七律")) == 56);
  CHECK(catalog().at("五律").pairing_slots == std::vector<std::pair<int, int>>{{2, 3}, {4, 5}});
  CHECK(catalog().at("七律").acrostic_stride == 2);
}

TEST_CASE("catalog aliases, unknown forms and markers") {
  CHECK(&catalog().at("五言绝句") == &catalog().at("五绝"));
  CHECK(catalog().find("不存在") == nullptr);
  CHECK_THROWS_AS(catalog().at("不存在"), UsageError);
  const auto& m = catalog().marker_tokens();
  for (const char* tok : {"(格式)", "(标题)", "(词牌名)", "(对联)", "(藏头诗)"})
    CHECK(std::find(m.begin(), m.end(), tok) != m.end());
  CHECK(catalog().markers(FormClass::ci, false).id1 == "(词牌名)");
  CHECK(catalog().markers(FormClass::couplet, false).id2 == "(对联)");
  CHECK(catalog().markers(FormClass::jintishi, true).id2 == "(藏头诗)");
  for (const auto& id : catalog().form_ids()) CHECK_NOTHROW(catalog().at(id).check_consistency());
}

TEST_CASE("catalog parse rejects inconsistent templates") {
  const std::string bad = R"yaml(version: 1
markers:
  jintishi: ["(格式)", "(标题)"]
  gushi: ["(格式)", "(标题)"]
  ci: ["(词牌名)", "(标题)"]
  couplet: ["(格式)", "(对联)"]
  acrostic: ["(格式)", "(藏头诗)"]
forms:
  - id: 坏
    class: jintishi
    lines: [5, 5]
    pairing: [[1, 3]]
)yaml";
  CHECK_THROWS_AS(FormCatalog::parse(bad), FormatError);
  CHECK_THROWS_AS(FormCatalog::parse("version: 2\n"), FormatError);
}

TEST_CASE("ingest: table poem becomes four lines of five characters") {
  const auto r = ingest_text(
      R"({"form":"五绝","theme":"秋思","body":"暮燕翻惊户，飞鸿却唤人。西风卷梧叶，触落一庭秋。"})", catalog());
  REQUIRE(r.poems.size() == 1);
  const Poem& p = r.poems[0];
  REQUIRE(p.body.size() == 4);
  for (const auto& line : p.body) CHECK(line.characters.size() == 5);
  CHECK(p.body[0].terminal == Punct::comma);
  CHECK(p.body[3].terminal == Punct::period);
  CHECK(p.body_text() == "暮燕翻惊户，飞鸿却唤人。西风卷梧叶，触落一庭秋。");
}

TEST_CASE("ingest: empty input, unpunctuated body, normalization") {
  CHECK(ingest_text("", catalog()).poems.empty());
  CHECK(ingest_text("\n  \n", catalog()).records == 0);

  auto r = ingest_text(R"({"form":"五绝","theme":"t","body":"床前明月光"})", catalog());
  REQUIRE(r.poems.size() == 1);
  REQUIRE(r.poems[0].body.size() == 1);
  CHECK(r.poems[0].body[0].terminal == Punct::none);

  CHECK(normalize_text("床前、明月 光？举头！") == "床前，明月光。举头。");
  CHECK_THROWS_AS(parse_body("，，"), UsageError);
  CHECK_THROWS_AS(parse_body(""), UsageError);
}

TEST_CASE("ingest reports every bad record with its line number") {
  const std::string content =
      "{\"form\":\"五绝\",\"theme\":\"秋思\",\"body\":\"暮燕翻惊户，飞鸿却唤人。\"}\n"
      "not json\n"
      "\n"
      "{\"form\":\"不存在\",\"theme\":\"x\",\"body\":\"一二三。\"}\n"
      "{\"form\":\"五绝\",\"theme\":\"x\"}\n"
      "{\"first\":\"一句相思吟岁月\",\"second\":\"几分寂寞醉诗词\"}\n"
      "{\"form\":\"五绝\",\"theme\":\"x(标题)\",\"body\":\"一二三四五。\"}\n";
  const auto r = ingest_text(content, catalog());
  CHECK(r.records == 6);
  CHECK(r.poems.size() + r.diagnostics.size() == r.records);
  REQUIRE(r.diagnostics.size() == 4);
  CHECK(r.diagnostics[0].line_number == 2);
  CHECK(r.diagnostics[1].line_number == 4);
  CHECK(r.diagnostics[2].line_number == 5);
  // A marker inside the theme would make the serialized text ambiguous.
  CHECK(r.diagnostics[3].line_number == 7);
}

TEST_CASE("ingest of a missing file throws IoError") {
  CHECK_THROWS_AS(ingest_corpus("/nonexistent/corpus.jsonl", catalog()), IoError);
}

TEST_CASE("serialize a ci poem and a wujue acrostic") {
  const Poem& ci = test::showcase_poem("youyuan-wulingchun");
  const auto s = serialize(ci, catalog());
  CHECK(s.text.rfind("武陵春(词牌名)游园(标题)长忆西湖湖上宴，", 0) == 0);
  CHECK(s.field(Field::form) == "武陵春");
  CHECK(s.field(Field::id1) == "(词牌名)");
  CHECK(s.field(Field::theme) == "游园");
  CHECK(s.field(Field::id2) == "(标题)");
  CHECK(s.prompt() == "武陵春(词牌名)游园(标题)");

  const Poem a = acrostic_transform(jingyesi(), catalog());
  const auto sa = serialize(a, catalog());
  CHECK(sa.text == "五言绝句(格式)床疑举低(藏头诗)床前明月光，疑是地上霜。举头望明月，低头思故乡。");
}

TEST_CASE("deserialize the ci table text and reject broken text") {
  const Poem p = deserialize("武陵春(词牌名)游园(标题)长忆西湖湖上宴，一笑倒琼彝。", catalog());
  CHECK(p.form_id == "武陵春");
  CHECK(p.theme == "游园");
  CHECK(p.body.size() == 2);
  CHECK_FALSE(p.acrostic);

  CHECK_THROWS_AS(deserialize("武陵春(词牌名)游园长忆西湖湖上宴。", catalog()), FormatError);
  CHECK_THROWS_AS(deserialize("武陵春(词牌名)游园(标题)", catalog()), FormatError);
  CHECK_THROWS_AS(deserialize("武陵春(词牌名)游(标题)园(标题)一二三。", catalog()), FormatError);
  CHECK_THROWS_AS(deserialize("不存在(格式)x(标题)一二三。", catalog()), UsageError);

  const Poem a = deserialize("五言绝句(格式)床疑举低(藏头诗)床前明月光，疑是地上霜。", catalog());
  CHECK(a.acrostic);
  CHECK(a.theme == "床疑举低");
}

TEST_CASE("couplet transform keeps the first line as theme") {
  const Poem p = couplet_transform("一句相思吟岁月", "几分寂寞醉诗词");
  CHECK(p.form_id == "对联");
  CHECK(p.theme == "一句相思吟岁月");
  CHECK(p.body_text() == "几分寂寞醉诗词");
  const auto s = serialize(p, catalog());
  CHECK(s.text == "对联(格式)一句相思吟岁月(对联)几分寂寞醉诗词");
  CHECK(deserialize(s.text, catalog()) == p);

  const Poem tiny = couplet_transform("a", "b");
  CHECK(tiny.theme == "a");
  CHECK(tiny.body.size() == 1);
  CHECK_THROWS_AS(couplet_transform("", "一二"), UsageError);
  CHECK_THROWS_AS(couplet_transform("一二", "，"), UsageError);
  // Unequal lengths are a pairing failure for the validator, not a transform error.
  CHECK_NOTHROW(couplet_transform("一二三", "一二"));
}

TEST_CASE("acrostic transform on 静夜思, a Qilü and a single line") {
  const Poem a = acrostic_transform(jingyesi(), catalog());
  CHECK(a.theme == "床疑举低");
  CHECK(a.acrostic);
  CHECK(a.body == jingyesi().body);
  CHECK(acrostic_transform(a, catalog()) == a);

  Poem qilv = test::showcase_poem("acrostic-yilupingan");
  qilv.acrostic = false;
  qilv.theme = "whatever";
  CHECK(acrostic_transform(qilv, 2).theme == "一路平安");
  CHECK(acrostic_transform(qilv, catalog()).theme == acrostic_transform(qilv, catalog().at("七律").acrostic_stride).theme);

  Poem one;
  one.form_id = "五绝";
  one.body = parse_body("一二三四五");
  CHECK(acrostic_transform(one).theme == "一");
}

TEST_CASE("serialize/deserialize round trip over every fixture and the toy corpus") {
  std::size_t n = 0;
  for (const auto* set : {&test::showcase(), &test::toy_corpus()}) {
    for (const Poem& p : *set) {
      const auto s = serialize(p, catalog());
      Poem back = deserialize(s.text, catalog());
      back.source_id = p.source_id;
      CHECK(back == p);
      const Poem a = acrostic_transform(p, catalog());
      Poem aback = deserialize(serialize(a, catalog()).text, catalog());
      aback.source_id = a.source_id;
      CHECK(aback == a);
      ++n;
    }
  }
  CHECK(n == 107);
}

TEST_CASE("property: random poems survive serialization") {
  Rng rng(3);
  const std::u32string alphabet = U"山水风月花鸟云天人心春秋江河日夜";
  const std::vector<std::string> forms{"五绝", "七律", "水调歌头", "五古"};
  for (int trial = 0; trial < 200; ++trial) {
    Poem p;
    p.form_id = forms[rng.below(forms.size())];
    const std::size_t theme_len = 1 + rng.below(6);
    std::u32string theme;
    for (std::size_t i = 0; i < theme_len; ++i) theme += alphabet[rng.below(alphabet.size())];
    p.theme = utf8::encode(theme);
    const std::size_t lines = 1 + rng.below(8);
    for (std::size_t l = 0; l < lines; ++l) {
      Line line;
      const std::size_t len = 1 + rng.below(9);
      for (std::size_t i = 0; i < len; ++i) line.characters += alphabet[rng.below(alphabet.size())];
      line.terminal = l + 1 == lines ? Punct::period : (rng.below(2) ? Punct::comma : Punct::period);
      p.body.push_back(line);
    }
    const auto s = serialize(p, catalog());
    CHECK(deserialize(s.text, catalog()) == p);
    CHECK(sample_from_json(sample_to_json(s)).text == s.text);
    CHECK(sequence_token_count(s) == utf8::count(s.text) - utf8::count(s.field(Field::id1)) -
                                         utf8::count(s.field(Field::id2)) + 2 + 2);
  }
}

TEST_CASE("dataset lines round trip and reject inconsistent spans") {
  const auto s = serialize(jingyesi(), catalog());
  const auto back = sample_from_json(sample_to_json(s));
  CHECK(back.text == s.text);
  CHECK(back.spans == s.spans);
  CHECK(back.source_id == s.source_id);
  CHECK_THROWS_AS(sample_from_json("{"), FormatError);
  CHECK_THROWS_AS(sample_from_json(R"({"source_id":"x","text":"ab","spans":[[0,1],[1,2],[2,3],[3,4],[4,5]]})"),
                  FormatError);
}
