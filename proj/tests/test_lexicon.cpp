// tests/test_lexicon.cpp

// Copyright 2026  The blxam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "blxam/lexicon.hpp"
#include "blxam/rng.hpp"

using namespace blxam;

namespace {

// Hand-built oracle: twenty accented words and their folded forms, written
// down from the diacritic conventions of the source languages, independent
// of the fold table in the implementation.
const std::vector<std::pair<std::string, std::string>> kRomanOracle = {
    {"café", "cafe"},           {"Über", "uber"},
    {"Ñandú", "nandu"},         {"père", "pere"},
    {"noël", "noel"},           {"señor", "senor"},
    {"gâteau", "gateau"},       {"łódź", "lodz"},
    {"façade", "facade"},       {"håkon", "hakon"},
    {"cliché", "cliche"},       {"Ørsted", "orsted"},
    {"straße", "strase"},       {"Çağla", "cagla"},
    {"kırmızı", "kirmizi"},     {"Škoda", "skoda"},
    {"Žižek", "zizek"},         {"forêt", "foret"},
    {"María", "maria"},         {"smørrebrød", "smorrebrod"},
};

std::string random_word(Rng &rng, std::size_t min_len = 1,
                        std::size_t max_len = 8) {
  std::size_t len = static_cast<std::size_t>(
      rng.uniform_int(static_cast<long long>(min_len),
                      static_cast<long long>(max_len)));
  std::string w;
  for (std::size_t i = 0; i < len; ++i)
    w.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
  return w;
}

std::string rendered_join(const std::vector<UnitToken> &units) {
  std::string s;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i) s += " ";
    s += units[i].rendered();
  }
  return s;
}

}  // namespace

TEST_CASE("romanize matches the hand-built oracle") {
  for (const auto &[in, want] : kRomanOracle) {
    REQUIRE(romanize(in) == want);
    // Idempotent: folding a folded word changes nothing.
    REQUIRE(romanize(want) == want);
  }
}

TEST_CASE("romanize basics") {
  REQUIRE(romanize("president") == "president");
  REQUIRE(romanize("PRESIDENT") == "president");
  REQUIRE(romanize("don't") == "don't");
  REQUIRE_THROWS_AS(romanize(""), DataError);
  REQUIRE_THROWS_WITH(romanize("caf3"),
                      Catch::Matchers::ContainsSubstring("U+33"));
  REQUIRE_THROWS_WITH(romanize("a-b"),
                      Catch::Matchers::ContainsSubstring("unmappable"));
  // Greek is outside the covered ranges.
  REQUIRE_THROWS_AS(romanize("αλφα"), DataError);
}

TEST_CASE("romanize rejects malformed UTF-8") {
  REQUIRE_THROWS_WITH(romanize(std::string("\xC3")),
                      Catch::Matchers::ContainsSubstring("truncated"));
  REQUIRE_THROWS_WITH(romanize(std::string("\xFF")),
                      Catch::Matchers::ContainsSubstring("unexpected byte"));
  REQUIRE_THROWS_WITH(romanize(std::string("\xC0\xAF")),
                      Catch::Matchers::ContainsSubstring("overlong"));
  REQUIRE_THROWS_WITH(romanize(std::string("\xC3\x41")),
                      Catch::Matchers::ContainsSubstring("continuation"));
}

TEST_CASE("unit token rendering round-trips") {
  for (char c = 'a'; c <= 'z'; ++c) {
    for (UnitPosition pos :
         {UnitPosition::kInitial, UnitPosition::kFinal, UnitPosition::kInternal,
          UnitPosition::kSingleton}) {
      UnitToken u{c, pos};
      REQUIRE(UnitToken::parse(u.rendered()) == u);
    }
  }
  UnitToken ap{'\'', UnitPosition::kInternal};
  REQUIRE(UnitToken::parse(ap.rendered()) == ap);

  for (const std::string bad : {"", "_", "__", "=_", "ab", "_A", "x=", "3"})
    REQUIRE_THROWS_AS(UnitToken::parse(bad), DataError);
}

TEST_CASE("word_to_units boundary markers") {
  REQUIRE(rendered_join(word_to_units("president")) ==
          "_p r e s i d e n t_");
  REQUIRE(rendered_join(word_to_units("a")) == "=a");
  REQUIRE(rendered_join(word_to_units("di")) == "_d i_");
  REQUIRE_THROWS_AS(word_to_units(""), DataError);
  REQUIRE_THROWS_AS(word_to_units("Café"), DataError);  // not romanized
}

TEST_CASE("unit letters concatenate back to the word") {
  Rng rng(71);
  for (int i = 0; i < 200; ++i) {
    std::string w = random_word(rng);
    REQUIRE(units_to_word(word_to_units(w)) == w);
  }
  for (const auto &[in, want] : kRomanOracle)
    REQUIRE(units_to_word(word_to_units(romanize(in))) == want);
}

TEST_CASE("build_lexicon dedup and counting") {
  GraphemeLexicon two = build_lexicon({"di", "la"}, "aa");
  REQUIRE(two.entries.size() == 2);
  REQUIRE(two.unit_set().size() == 4);

  REQUIRE(build_lexicon({"a", "a"}, "aa").entries.size() == 1);

  // Set-based oracle over random words.
  Rng rng(72);
  std::vector<std::string> words;
  std::set<std::string> oracle;
  for (int i = 0; i < 100; ++i) {
    words.push_back(random_word(rng, 1, 5));
    oracle.insert(words.back());
  }
  REQUIRE(build_lexicon(words, "aa").entries.size() == oracle.size());

  REQUIRE_THROWS_WITH(build_lexicon({"ok", "caf3"}, "aa"),
                      Catch::Matchers::ContainsSubstring("'caf3'"));
}

TEST_CASE("merge_inventories union, maps and sharing") {
  GraphemeLexicon a = build_lexicon({"di"}, "aa");
  GraphemeLexicon b = build_lexicon({"da"}, "bb");
  BilingualSpaceMap m = merge_inventories(a, b);
  REQUIRE(m.bilingual.units ==
          std::vector<std::string>{"SIL", "_d", "a_", "i_"});
  REQUIRE(m.space_a.units ==
          std::vector<std::string>{"SIL", "FOREIGN", "_d", "i_"});
  REQUIRE(m.space_b.units ==
          std::vector<std::string>{"SIL", "FOREIGN", "_d", "a_"});
  // a_ exists only in locale b: FOREIGN in locale a's space.
  REQUIRE(m.map_a[m.bilingual.id("a_")] == 1);
  REQUIRE(m.map_b[m.bilingual.id("a_")] == m.space_b.id("a_"));
  REQUIRE(m.map_a[m.bilingual.id("i_")] == m.space_a.id("i_"));
  REQUIRE(m.map_b[m.bilingual.id("i_")] == 1);
  REQUIRE(m.map_a[0] == 0);
  REQUIRE(m.map_b[0] == 0);
  REQUIRE(m.sharing == Catch::Approx(1.0 / 3.0));

  // Identical lexicons share everything; disjoint alphabets share nothing.
  REQUIRE(merge_inventories(a, build_lexicon({"di"}, "bb")).sharing == 1.0);
  GraphemeLexicon c = build_lexicon({"xu"}, "bb");
  REQUIRE(merge_inventories(a, c).sharing == 0.0);

  // Symmetric up to per-locale labels.
  BilingualSpaceMap m2 = merge_inventories(b, a);
  REQUIRE(m2.bilingual.units == m.bilingual.units);
}

TEST_CASE("every bilingual non-SIL id maps into both per-locale spaces") {
  Rng rng(73);
  std::vector<std::string> wa, wb;
  for (int i = 0; i < 40; ++i) wa.push_back(random_word(rng, 1, 6));
  for (int i = 0; i < 40; ++i) wb.push_back(random_word(rng, 1, 6));
  BilingualSpaceMap m = merge_inventories(build_lexicon(wa, "aa"),
                                          build_lexicon(wb, "bb"));
  for (std::size_t i = 1; i < m.bilingual.size(); ++i) {
    const std::string &u = m.bilingual.units[i];
    REQUIRE(m.map_a[i] >= 0);
    REQUIRE(static_cast<std::size_t>(m.map_a[i]) < m.space_a.size());
    REQUIRE(m.map_b[i] >= 0);
    REQUIRE(static_cast<std::size_t>(m.map_b[i]) < m.space_b.size());
    const bool in_a = m.space_a.has(u), in_b = m.space_b.has(u);
    REQUIRE((in_a || in_b));
    if (in_a && in_b) {
      REQUIRE(m.map_a[i] != 1);
      REQUIRE(m.map_b[i] != 1);
    }
  }
}

TEST_CASE("lexicon file round-trips sorted") {
  Rng rng(74);
  std::vector<std::string> words;
  for (int i = 0; i < 60; ++i) words.push_back(random_word(rng, 1, 7));
  GraphemeLexicon lex = build_lexicon(words, "aa");
  const std::string path = "lex_roundtrip.txt";
  save_lexicon(path, lex);

  // Lines are sorted.
  std::ifstream f(path);
  std::string prev, line;
  while (std::getline(f, line)) {
    REQUIRE(prev <= line);
    prev = line;
  }
  f.close();

  GraphemeLexicon back = load_lexicon(path, "aa");
  REQUIRE(back.entries == lex.entries);
  std::remove(path.c_str());
}

TEST_CASE("lexicon file validation") {
  const std::string path = "lex_bad.txt";
  auto write = [&](const std::string &content) {
    std::ofstream f(path, std::ios::trunc);
    f << content;
  };
  write("noseparator\n");
  REQUIRE_THROWS_WITH(load_lexicon(path, "aa"),
                      Catch::Matchers::ContainsSubstring("TAB"));
  write("di\t_d x_\n");  // units spell "dx", not "di"
  REQUIRE_THROWS_WITH(load_lexicon(path, "aa"),
                      Catch::Matchers::ContainsSubstring("spell"));
  write("di\ti_ d_\n");  // bad boundary markers
  REQUIRE_THROWS_AS(load_lexicon(path, "aa"), DataError);
  write("di\t\n");
  REQUIRE_THROWS_WITH(load_lexicon(path, "aa"),
                      Catch::Matchers::ContainsSubstring("no units"));
  std::remove(path.c_str());
}

TEST_CASE("inventory file round-trip and validation") {
  GraphemeLexicon a = build_lexicon({"di", "a"}, "aa");
  BilingualSpaceMap m = merge_inventories(a, build_lexicon({"da"}, "bb"));
  const std::string path = "inv_roundtrip.txt";
  save_inventory(path, m.space_a);
  UnitInventory back = load_inventory(path);
  REQUIRE(back.units == m.space_a.units);
  REQUIRE(back.index == m.space_a.index);

  auto write = [&](const std::string &content) {
    std::ofstream f(path, std::ios::trunc);
    f << content;
  };
  write("0\tSIL\n2\t_d\n");
  REQUIRE_THROWS_WITH(load_inventory(path),
                      Catch::Matchers::ContainsSubstring("dense"));
  write("0\t_d\n1\tSIL\n");
  REQUIRE_THROWS_WITH(load_inventory(path),
                      Catch::Matchers::ContainsSubstring("id 0 must be SIL"));
  write("0\tSIL\n1\t_d\n2\t_d\n");
  REQUIRE_THROWS_WITH(load_inventory(path),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  std::remove(path.c_str());
}

TEST_CASE("space map serialization preserves every id") {
  Rng rng(75);
  std::vector<std::string> wa, wb;
  for (int i = 0; i < 30; ++i) wa.push_back(random_word(rng, 1, 6));
  for (int i = 0; i < 30; ++i) wb.push_back(random_word(rng, 1, 6));
  BilingualSpaceMap m = merge_inventories(build_lexicon(wa, "it"),
                                          build_lexicon(wb, "en"));
  const std::string path = "space_map.txt";
  save_space_map(path, m);
  BilingualSpaceMap back = load_space_map(path);
  REQUIRE(back.locale_a == m.locale_a);
  REQUIRE(back.locale_b == m.locale_b);
  REQUIRE(back.bilingual.units == m.bilingual.units);
  REQUIRE(back.space_a.units == m.space_a.units);
  REQUIRE(back.space_b.units == m.space_b.units);
  REQUIRE(back.map_a == m.map_a);
  REQUIRE(back.map_b == m.map_b);
  REQUIRE(back.sharing == m.sharing);

  // Tampering with the header is rejected.
  {
    std::ofstream f(path, std::ios::trunc);
    f << "something-else\tv1\n";
  }
  REQUIRE_THROWS_AS(load_space_map(path), DataError);
  std::remove(path.c_str());
}
