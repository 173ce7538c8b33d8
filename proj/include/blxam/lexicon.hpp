// blxam/lexicon.hpp

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

#ifndef BLXAM_LEXICON_HPP_
#define BLXAM_LEXICON_HPP_

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/hash.hpp"

// Grapheme-letter lexicons with word-boundary markers, Romanization
// folding, and the bilingual/per-locale unit spaces built from two
// lexicons. All values are immutable once built.

namespace blxam {

inline constexpr const char *kSilUnit = "SIL";
inline constexpr const char *kForeignUnit = "FOREIGN";

// ---------------------------------------------------------------------------
// Romanization
// ---------------------------------------------------------------------------

namespace lex_detail {

// Diacritic folding for every letter in Latin-1 Supplement and Latin
// Extended-A: canonical decomposition with combining marks dropped, plus
// single-letter folds for the ligatures and stroked/barred letters that do
// not decompose (ae->a, oe->o, eth/stroked-d->d, thorn->t, sharp-s and
// long-s->s, dotless-i/ij->i, kra->k, stroked-l->l, eng->n, stroked-h->h,
// stroked-t->t). Keeps romanize() length-preserving.
struct FoldEntry {
  std::uint16_t cp;
  char base;
};

inline const FoldEntry kFoldTable[] = {
    {0x00C0, 'a'}, {0x00C1, 'a'}, {0x00C2, 'a'}, {0x00C3, 'a'}, {0x00C4, 'a'}, {0x00C5, 'a'},
    {0x00C6, 'a'}, {0x00C7, 'c'}, {0x00C8, 'e'}, {0x00C9, 'e'}, {0x00CA, 'e'}, {0x00CB, 'e'},
    {0x00CC, 'i'}, {0x00CD, 'i'}, {0x00CE, 'i'}, {0x00CF, 'i'}, {0x00D0, 'd'}, {0x00D1, 'n'},
    {0x00D2, 'o'}, {0x00D3, 'o'}, {0x00D4, 'o'}, {0x00D5, 'o'}, {0x00D6, 'o'}, {0x00D8, 'o'},
    {0x00D9, 'u'}, {0x00DA, 'u'}, {0x00DB, 'u'}, {0x00DC, 'u'}, {0x00DD, 'y'}, {0x00DE, 't'},
    {0x00DF, 's'}, {0x00E0, 'a'}, {0x00E1, 'a'}, {0x00E2, 'a'}, {0x00E3, 'a'}, {0x00E4, 'a'},
    {0x00E5, 'a'}, {0x00E6, 'a'}, {0x00E7, 'c'}, {0x00E8, 'e'}, {0x00E9, 'e'}, {0x00EA, 'e'},
    {0x00EB, 'e'}, {0x00EC, 'i'}, {0x00ED, 'i'}, {0x00EE, 'i'}, {0x00EF, 'i'}, {0x00F0, 'd'},
    {0x00F1, 'n'}, {0x00F2, 'o'}, {0x00F3, 'o'}, {0x00F4, 'o'}, {0x00F5, 'o'}, {0x00F6, 'o'},
    {0x00F8, 'o'}, {0x00F9, 'u'}, {0x00FA, 'u'}, {0x00FB, 'u'}, {0x00FC, 'u'}, {0x00FD, 'y'},
    {0x00FE, 't'}, {0x00FF, 'y'}, {0x0100, 'a'}, {0x0101, 'a'}, {0x0102, 'a'}, {0x0103, 'a'},
    {0x0104, 'a'}, {0x0105, 'a'}, {0x0106, 'c'}, {0x0107, 'c'}, {0x0108, 'c'}, {0x0109, 'c'},
    {0x010A, 'c'}, {0x010B, 'c'}, {0x010C, 'c'}, {0x010D, 'c'}, {0x010E, 'd'}, {0x010F, 'd'},
    {0x0110, 'd'}, {0x0111, 'd'}, {0x0112, 'e'}, {0x0113, 'e'}, {0x0114, 'e'}, {0x0115, 'e'},
    {0x0116, 'e'}, {0x0117, 'e'}, {0x0118, 'e'}, {0x0119, 'e'}, {0x011A, 'e'}, {0x011B, 'e'},
    {0x011C, 'g'}, {0x011D, 'g'}, {0x011E, 'g'}, {0x011F, 'g'}, {0x0120, 'g'}, {0x0121, 'g'},
    {0x0122, 'g'}, {0x0123, 'g'}, {0x0124, 'h'}, {0x0125, 'h'}, {0x0126, 'h'}, {0x0127, 'h'},
    {0x0128, 'i'}, {0x0129, 'i'}, {0x012A, 'i'}, {0x012B, 'i'}, {0x012C, 'i'}, {0x012D, 'i'},
    {0x012E, 'i'}, {0x012F, 'i'}, {0x0130, 'i'}, {0x0131, 'i'}, {0x0132, 'i'}, {0x0133, 'i'},
    {0x0134, 'j'}, {0x0135, 'j'}, {0x0136, 'k'}, {0x0137, 'k'}, {0x0138, 'k'}, {0x0139, 'l'},
    {0x013A, 'l'}, {0x013B, 'l'}, {0x013C, 'l'}, {0x013D, 'l'}, {0x013E, 'l'}, {0x013F, 'l'},
    {0x0140, 'l'}, {0x0141, 'l'}, {0x0142, 'l'}, {0x0143, 'n'}, {0x0144, 'n'}, {0x0145, 'n'},
    {0x0146, 'n'}, {0x0147, 'n'}, {0x0148, 'n'}, {0x0149, 'n'}, {0x014A, 'n'}, {0x014B, 'n'},
    {0x014C, 'o'}, {0x014D, 'o'}, {0x014E, 'o'}, {0x014F, 'o'}, {0x0150, 'o'}, {0x0151, 'o'},
    {0x0152, 'o'}, {0x0153, 'o'}, {0x0154, 'r'}, {0x0155, 'r'}, {0x0156, 'r'}, {0x0157, 'r'},
    {0x0158, 'r'}, {0x0159, 'r'}, {0x015A, 's'}, {0x015B, 's'}, {0x015C, 's'}, {0x015D, 's'},
    {0x015E, 's'}, {0x015F, 's'}, {0x0160, 's'}, {0x0161, 's'}, {0x0162, 't'}, {0x0163, 't'},
    {0x0164, 't'}, {0x0165, 't'}, {0x0166, 't'}, {0x0167, 't'}, {0x0168, 'u'}, {0x0169, 'u'},
    {0x016A, 'u'}, {0x016B, 'u'}, {0x016C, 'u'}, {0x016D, 'u'}, {0x016E, 'u'}, {0x016F, 'u'},
    {0x0170, 'u'}, {0x0171, 'u'}, {0x0172, 'u'}, {0x0173, 'u'}, {0x0174, 'w'}, {0x0175, 'w'},
    {0x0176, 'y'}, {0x0177, 'y'}, {0x0178, 'y'}, {0x0179, 'z'}, {0x017A, 'z'}, {0x017B, 'z'},
    {0x017C, 'z'}, {0x017D, 'z'}, {0x017E, 'z'}, {0x017F, 's'},
};

inline bool fold_letter(std::uint32_t cp, char *out) {
  std::size_t lo = 0, hi = sizeof(kFoldTable) / sizeof(kFoldTable[0]);
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (kFoldTable[mid].cp < cp) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < sizeof(kFoldTable) / sizeof(kFoldTable[0]) &&
      kFoldTable[lo].cp == cp) {
    *out = kFoldTable[lo].base;
    return true;
  }
  return false;
}

/// Decode one UTF-8 code point starting at s[i]; advances i. Rejects
/// malformed sequences (truncated, bad continuation bytes, overlong
/// encodings, surrogates, out-of-range).
inline std::uint32_t next_codepoint(const std::string &s, std::size_t &i) {
  const auto byte = [&](std::size_t k) -> std::uint32_t {
    return static_cast<unsigned char>(s[k]);
  };
  const std::uint32_t b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  std::uint32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    throw DataError("malformed UTF-8: unexpected byte 0x" + [&] {
      std::ostringstream os;
      os << std::hex << b0;
      return os.str();
    }());
  }
  BLXAM_DATA_CHECK(i + len <= s.size(), "malformed UTF-8: truncated sequence");
  for (std::size_t k = 1; k < len; ++k) {
    const std::uint32_t bk = byte(i + k);
    BLXAM_DATA_CHECK((bk & 0xC0) == 0x80,
                     "malformed UTF-8: bad continuation byte");
    cp = (cp << 6) | (bk & 0x3F);
  }
  static const std::uint32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  BLXAM_DATA_CHECK(cp >= kMin[len], "malformed UTF-8: overlong encoding");
  BLXAM_DATA_CHECK(cp < 0xD800 || cp > 0xDFFF,
                   "malformed UTF-8: surrogate code point");
  BLXAM_DATA_CHECK(cp <= 0x10FFFF, "malformed UTF-8: code point out of range");
  i += len;
  return cp;
}

inline std::string codepoint_str(std::uint32_t cp) {
  std::ostringstream os;
  os << "U+" << std::hex << std::uppercase << cp;
  return os.str();
}

}  // namespace lex_detail

/// Fold a UTF-8 word to lowercase a-z plus apostrophe, stripping
/// diacritics. Length (in letters) is preserved. Characters outside
/// ASCII letters, the apostrophe, and the covered accented ranges are
/// rejected by name.
inline std::string romanize(const std::string &word) {
  BLXAM_DATA_CHECK(!word.empty(), "romanize: empty word");
  std::string out;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::uint32_t cp = lex_detail::next_codepoint(word, i);
    if (cp >= 'a' && cp <= 'z') {
      out.push_back(static_cast<char>(cp));
    } else if (cp >= 'A' && cp <= 'Z') {
      out.push_back(static_cast<char>(cp - 'A' + 'a'));
    } else if (cp == '\'') {
      out.push_back('\'');
    } else {
      char base = 0;
      BLXAM_DATA_CHECK(lex_detail::fold_letter(cp, &base),
                       "romanize: unmappable character "
                           << lex_detail::codepoint_str(cp) << " in word");
      out.push_back(base);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unit tokens
// ---------------------------------------------------------------------------

enum class UnitPosition { kInitial, kFinal, kInternal, kSingleton };

/// One grapheme unit: a base letter with its word-boundary position.
/// Rendered forms: "_x" initial, "x_" final, "x" internal, "=x" singleton.
struct UnitToken {
  char letter;
  UnitPosition position;

  bool operator==(const UnitToken &o) const = default;

  std::string rendered() const {
    switch (position) {
      case UnitPosition::kInitial:
        return std::string("_") + letter;
      case UnitPosition::kFinal:
        return std::string(1, letter) + "_";
      case UnitPosition::kInternal:
        return std::string(1, letter);
      case UnitPosition::kSingleton:
        return std::string("=") + letter;
    }
    throw InvariantError("unreachable unit position");
  }

  static bool valid_letter(char c) {
    return (c >= 'a' && c <= 'z') || c == '\'';
  }

  static UnitToken parse(const std::string &s) {
    if (s.size() == 1 && valid_letter(s[0]))
      return {s[0], UnitPosition::kInternal};
    if (s.size() == 2 && s[0] == '_' && valid_letter(s[1]))
      return {s[1], UnitPosition::kInitial};
    if (s.size() == 2 && s[1] == '_' && valid_letter(s[0]))
      return {s[0], UnitPosition::kFinal};
    if (s.size() == 2 && s[0] == '=' && valid_letter(s[1]))
      return {s[1], UnitPosition::kSingleton};
    throw DataError("cannot parse unit token '" + s + "'");
  }
};

/// Split a romanized word into boundary-marked units: singleton for
/// length 1, otherwise initial + internals + final.
inline std::vector<UnitToken> word_to_units(const std::string &word) {
  BLXAM_DATA_CHECK(!word.empty(), "word_to_units: empty word");
  for (char c : word)
    BLXAM_DATA_CHECK(UnitToken::valid_letter(c),
                     "word_to_units: word '" << word
                                             << "' is not romanized (letter '"
                                             << c << "')");
  std::vector<UnitToken> units;
  if (word.size() == 1) {
    units.push_back({word[0], UnitPosition::kSingleton});
    return units;
  }
  units.push_back({word[0], UnitPosition::kInitial});
  for (std::size_t i = 1; i + 1 < word.size(); ++i)
    units.push_back({word[i], UnitPosition::kInternal});
  units.push_back({word.back(), UnitPosition::kFinal});
  return units;
}

/// Letters of a unit sequence, concatenated.
inline std::string units_to_word(const std::vector<UnitToken> &units) {
  std::string w;
  for (const UnitToken &u : units) w.push_back(u.letter);
  return w;
}

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

struct GraphemeLexicon {
  std::string locale;
  // Keys are romanized words; map keeps entries in lexicographic order.
  std::map<std::string, std::vector<UnitToken>> entries;

  /// Distinct rendered unit forms across all entries.
  std::set<std::string> unit_set() const {
    std::set<std::string> s;
    for (const auto &[word, units] : entries)
      for (const UnitToken &u : units) s.insert(u.rendered());
    return s;
  }
};

inline GraphemeLexicon build_lexicon(const std::vector<std::string> &words,
                                     const std::string &locale) {
  GraphemeLexicon lex;
  lex.locale = locale;
  for (const std::string &raw : words) {
    try {
      const std::string word = romanize(raw);
      lex.entries.emplace(word, word_to_units(word));
    } catch (const DataError &e) {
      throw DataError("word '" + raw + "': " + e.what());
    }
  }
  return lex;
}

// ---------------------------------------------------------------------------
// Unit inventories and the bilingual space
// ---------------------------------------------------------------------------

/// Dense id space over rendered unit forms. SIL is always id 0; per-locale
/// spaces additionally reserve FOREIGN at id 1.
struct UnitInventory {
  std::vector<std::string> units;      // index == id
  std::map<std::string, int> index;

  static UnitInventory build(const std::set<std::string> &rendered,
                             bool with_foreign) {
    UnitInventory inv;
    inv.units.push_back(kSilUnit);
    if (with_foreign) inv.units.push_back(kForeignUnit);
    for (const std::string &u : rendered) {
      BLXAM_CHECK(u != kSilUnit && u != kForeignUnit,
                  "unit inventory: reserved name '" << u << "' in unit set");
      inv.units.push_back(u);
    }
    for (std::size_t i = 0; i < inv.units.size(); ++i)
      inv.index[inv.units[i]] = static_cast<int>(i);
    return inv;
  }

  int id(const std::string &u) const {
    auto it = index.find(u);
    BLXAM_CHECK(it != index.end(), "unknown unit '" << u << "'");
    return it->second;
  }
  bool has(const std::string &u) const { return index.count(u) > 0; }
  std::size_t size() const { return units.size(); }
  bool has_foreign() const {
    return units.size() > 1 && units[1] == kForeignUnit;
  }

  /// Order-sensitive FNV over the rendered units; two inventories agree
  /// on every id assignment iff their checksums match.
  std::uint64_t checksum() const {
    std::uint64_t h = kFnvOffsetBasis;
    for (const std::string &u : units) {
      h = fnv1a64(u.data(), u.size(), h);
      h = fnv1a64("\n", 1, h);
    }
    return h;
  }
};

/// The shared bilingual target space plus both per-locale auxiliary
/// spaces and the id maps between them.
struct BilingualSpaceMap {
  std::string locale_a, locale_b;
  UnitInventory bilingual;  // SIL + sorted union of both unit sets
  UnitInventory space_a;    // SIL, FOREIGN + locale-a units
  UnitInventory space_b;
  std::vector<int> map_a;   // bilingual id -> space_a id
  std::vector<int> map_b;
  double sharing = 0.0;     // |A intersect B| / |A union B|, SIL excluded
};

inline BilingualSpaceMap merge_inventories(const GraphemeLexicon &lex_a,
                                           const GraphemeLexicon &lex_b) {
  BilingualSpaceMap m;
  m.locale_a = lex_a.locale;
  m.locale_b = lex_b.locale;
  const std::set<std::string> ua = lex_a.unit_set();
  const std::set<std::string> ub = lex_b.unit_set();
  std::set<std::string> all = ua;
  all.insert(ub.begin(), ub.end());
  m.bilingual = UnitInventory::build(all, /*with_foreign=*/false);
  m.space_a = UnitInventory::build(ua, /*with_foreign=*/true);
  m.space_b = UnitInventory::build(ub, /*with_foreign=*/true);
  m.map_a.resize(m.bilingual.size());
  m.map_b.resize(m.bilingual.size());
  m.map_a[0] = m.space_a.id(kSilUnit);
  m.map_b[0] = m.space_b.id(kSilUnit);
  std::size_t both = 0;
  for (std::size_t i = 1; i < m.bilingual.size(); ++i) {
    const std::string &u = m.bilingual.units[i];
    m.map_a[i] = ua.count(u) ? m.space_a.id(u) : m.space_a.id(kForeignUnit);
    m.map_b[i] = ub.count(u) ? m.space_b.id(u) : m.space_b.id(kForeignUnit);
    if (ua.count(u) && ub.count(u)) ++both;
  }
  m.sharing = all.empty() ? 0.0
                          : static_cast<double>(both) /
                                static_cast<double>(all.size());
  return m;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Lexicon file: one "word<TAB>unit unit unit" line per entry, sorted.
inline void save_lexicon(const std::string &path, const GraphemeLexicon &lex) {
  std::ostringstream os;
  for (const auto &[word, units] : lex.entries) {
    os << word << '\t';
    for (std::size_t i = 0; i < units.size(); ++i)
      os << (i ? " " : "") << units[i].rendered();
    os << '\n';
  }
  atomic_write_text(path, os.str());
}

inline GraphemeLexicon load_lexicon(const std::string &path,
                                    const std::string &locale) {
  std::ifstream f(path);
  BLXAM_DATA_CHECK(f.good(), "cannot open lexicon '" << path << "'");
  GraphemeLexicon lex;
  lex.locale = locale;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    BLXAM_DATA_CHECK(tab != std::string::npos,
                     path << ":" << lineno << ": missing TAB separator");
    const std::string word = line.substr(0, tab);
    std::vector<UnitToken> units;
    std::istringstream parts(line.substr(tab + 1));
    std::string tok;
    while (parts >> tok) units.push_back(UnitToken::parse(tok));
    BLXAM_DATA_CHECK(!units.empty(),
                     path << ":" << lineno << ": entry '" << word
                          << "' has no units");
    BLXAM_DATA_CHECK(units_to_word(units) == word,
                     path << ":" << lineno << ": units do not spell '" << word
                          << "'");
    const bool singleton = units.size() == 1;
    BLXAM_DATA_CHECK(
        singleton ? units[0].position == UnitPosition::kSingleton
                  : units.front().position == UnitPosition::kInitial &&
                        units.back().position == UnitPosition::kFinal,
        path << ":" << lineno << ": bad boundary markers for '" << word
             << "'");
    lex.entries.emplace(word, std::move(units));
  }
  return lex;
}

/// Inventory section: "id<TAB>unit" lines with dense ids from 0.
inline void write_inventory_lines(std::ostream &os, const UnitInventory &inv) {
  for (std::size_t i = 0; i < inv.units.size(); ++i)
    os << i << '\t' << inv.units[i] << '\n';
}

inline void save_inventory(const std::string &path, const UnitInventory &inv) {
  std::ostringstream os;
  write_inventory_lines(os, inv);
  atomic_write_text(path, os.str());
}

namespace lex_detail {

inline UnitInventory parse_inventory_lines(
    const std::vector<std::pair<std::size_t, std::string>> &lines,
    const std::string &where) {
  UnitInventory inv;
  for (const auto &[lineno, line] : lines) {
    const std::size_t tab = line.find('\t');
    BLXAM_DATA_CHECK(tab != std::string::npos,
                     where << ":" << lineno << ": missing TAB separator");
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(0, tab));
    } catch (const std::exception &) {
      throw DataError(where + ":" + std::to_string(lineno) + ": bad id");
    }
    BLXAM_DATA_CHECK(id == inv.units.size(),
                     where << ":" << lineno << ": ids must be dense, expected "
                           << inv.units.size() << " got " << id);
    inv.units.push_back(line.substr(tab + 1));
  }
  BLXAM_DATA_CHECK(!inv.units.empty(), where << ": empty inventory");
  BLXAM_DATA_CHECK(inv.units[0] == kSilUnit,
                   where << ": id 0 must be " << kSilUnit);
  for (std::size_t i = 0; i < inv.units.size(); ++i)
    inv.index[inv.units[i]] = static_cast<int>(i);
  BLXAM_DATA_CHECK(inv.index.size() == inv.units.size(),
                   where << ": duplicate units");
  return inv;
}

}  // namespace lex_detail

inline UnitInventory load_inventory(const std::string &path) {
  std::ifstream f(path);
  BLXAM_DATA_CHECK(f.good(), "cannot open inventory '" << path << "'");
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty()) lines.emplace_back(lineno, line);
  }
  return lex_detail::parse_inventory_lines(lines, path);
}

/// One-file serialization of a BilingualSpaceMap: a header with the
/// locale names, then the three inventories in sections. The per-locale
/// maps are recomputed on load (they are a pure function of the
/// inventories) and the sharing statistic with them.
inline void save_space_map(const std::string &path,
                           const BilingualSpaceMap &m) {
  std::ostringstream os;
  os << "bilingual-space-map\tv1\n";
  os << "locale_a\t" << m.locale_a << '\n';
  os << "locale_b\t" << m.locale_b << '\n';
  os << "[bilingual]\n";
  write_inventory_lines(os, m.bilingual);
  os << "[locale_a]\n";
  write_inventory_lines(os, m.space_a);
  os << "[locale_b]\n";
  write_inventory_lines(os, m.space_b);
  atomic_write_text(path, os.str());
}

inline BilingualSpaceMap load_space_map(const std::string &path) {
  std::ifstream f(path);
  BLXAM_DATA_CHECK(f.good(), "cannot open space map '" << path << "'");
  std::string line;
  std::size_t lineno = 0;
  BLXAM_DATA_CHECK(std::getline(f, line) &&
                       line == "bilingual-space-map\tv1",
                   "'" << path << "' is not a bilingual space map");
  ++lineno;
  BilingualSpaceMap m;
  auto read_kv = [&](const std::string &key) {
    BLXAM_DATA_CHECK(std::getline(f, line), path << ": truncated header");
    ++lineno;
    BLXAM_DATA_CHECK(line.rfind(key + "\t", 0) == 0,
                     path << ":" << lineno << ": expected '" << key << "'");
    return line.substr(key.size() + 1);
  };
  m.locale_a = read_kv("locale_a");
  m.locale_b = read_kv("locale_b");

  std::map<std::string, std::vector<std::pair<std::size_t, std::string>>>
      sections;
  std::string current;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      BLXAM_DATA_CHECK(!sections.count(current),
                       path << ":" << lineno << ": duplicate section '"
                            << current << "'");
      sections[current];
      continue;
    }
    BLXAM_DATA_CHECK(!current.empty(),
                     path << ":" << lineno << ": line outside any section");
    sections[current].emplace_back(lineno, line);
  }
  for (const char *want : {"bilingual", "locale_a", "locale_b"})
    BLXAM_DATA_CHECK(sections.count(want),
                     path << ": missing section [" << want << "]");
  m.bilingual =
      lex_detail::parse_inventory_lines(sections["bilingual"], path);
  m.space_a = lex_detail::parse_inventory_lines(sections["locale_a"], path);
  m.space_b = lex_detail::parse_inventory_lines(sections["locale_b"], path);
  BLXAM_DATA_CHECK(!m.bilingual.has_foreign(),
                   path << ": bilingual inventory must not contain "
                        << kForeignUnit);
  BLXAM_DATA_CHECK(m.space_a.has_foreign() && m.space_b.has_foreign(),
                   path << ": per-locale inventories must reserve "
                        << kForeignUnit << " at id 1");

  m.map_a.resize(m.bilingual.size());
  m.map_b.resize(m.bilingual.size());
  m.map_a[0] = 0;
  m.map_b[0] = 0;
  std::size_t both = 0;
  for (std::size_t i = 1; i < m.bilingual.size(); ++i) {
    const std::string &u = m.bilingual.units[i];
    const bool in_a = m.space_a.has(u), in_b = m.space_b.has(u);
    BLXAM_DATA_CHECK(in_a || in_b,
                     path << ": bilingual unit '" << u
                          << "' missing from both locales");
    m.map_a[i] = in_a ? m.space_a.id(u) : m.space_a.id(kForeignUnit);
    m.map_b[i] = in_b ? m.space_b.id(u) : m.space_b.id(kForeignUnit);
    if (in_a && in_b) ++both;
  }
  m.sharing = m.bilingual.size() <= 1
                  ? 0.0
                  : static_cast<double>(both) /
                        static_cast<double>(m.bilingual.size() - 1);
  return m;
}

}  // namespace blxam

#endif  // BLXAM_LEXICON_HPP_
