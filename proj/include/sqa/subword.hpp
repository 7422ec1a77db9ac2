#ifndef SQA_SUBWORD_HPP
#define SQA_SUBWORD_HPP

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sqa/edit.hpp"
#include "sqa/errors.hpp"
#include "sqa/text.hpp"

namespace sqa {

using PhonemeId = int;

// Ordered phoneme symbol set. Index 0 is reserved for PAD, the filler used
// when a word is shorter than the convolution window.
class PhonemeInventory {
 public:
  PhonemeInventory() = default;

  explicit PhonemeInventory(std::vector<std::string> symbols_without_pad) {
    symbols_.push_back("PAD");
    for (auto& s : symbols_without_pad) add(std::move(s));
  }

  // The 39-symbol ARPAbet set (stress digits stripped) plus PAD.
  static PhonemeInventory arpabet() {
    return PhonemeInventory({
        "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
        "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
        "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
        "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH",
    });
  }

  std::size_t size() const { return symbols_.size(); }
  PhonemeId pad_id() const { return 0; }

  const std::string& symbol(PhonemeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size())
      raise(ErrorCode::UnknownPhonemeId, "phoneme id " + std::to_string(id) + " out of range");
    return symbols_[static_cast<std::size_t>(id)];
  }

  std::optional<PhonemeId> find(std::string_view symbol) const {
    auto it = index_.find(std::string(symbol));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  PhonemeId id_of(std::string_view symbol) const {
    auto id = find(symbol);
    if (!id) raise(ErrorCode::MalformedInput, "unknown phoneme symbol '" + std::string(symbol) + "'");
    return *id;
  }

  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  void add(std::string s) {
    if (index_.contains(s))
      raise(ErrorCode::MalformedInput, "duplicate phoneme symbol '" + s + "'");
    index_[s] = static_cast<PhonemeId>(symbols_.size());
    symbols_.push_back(std::move(s));
  }

  std::vector<std::string> symbols_{"PAD"};
  std::unordered_map<std::string, PhonemeId> index_{{"PAD", 0}};
};

namespace detail {

// "AE1" -> "AE". Stress is not modeled; stripping keeps the inventory small.
inline std::string strip_stress(std::string_view phone) {
  std::string out(phone);
  while (!out.empty() && out.back() >= '0' && out.back() <= '9') out.pop_back();
  return out;
}

}  // namespace detail

// Pronouncing-dictionary entries: WORD  PH1 PH2 ...
// ';;;' lines are comments; variant entries 'WORD(2) ...' beyond the first
// pronunciation are ignored.
class PronunciationLexicon {
 public:
  PronunciationLexicon() : inventory_(PhonemeInventory::arpabet()) {}
  explicit PronunciationLexicon(PhonemeInventory inventory) : inventory_(std::move(inventory)) {}

  static PronunciationLexicon parse(std::istream& in) {
    PronunciationLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.rfind(";;;", 0) == 0) continue;
      std::istringstream fields(line);
      std::string word;
      if (!(fields >> word)) continue;  // blank line
      if (auto paren = word.find('('); paren != std::string::npos) {
        // variant pronunciation; only the first entry per word is kept
        word = word.substr(0, paren);
        if (lex.entries_.contains(to_upper(word))) continue;
      }
      word = to_upper(word);
      std::vector<PhonemeId> phones;
      std::string phone;
      while (fields >> phone) {
        std::string sym = detail::strip_stress(phone);
        auto id = lex.inventory_.find(sym);
        if (!id)
          raise(ErrorCode::MalformedInput,
                "line " + std::to_string(line_no) + ": unknown phoneme '" + phone + "'");
        phones.push_back(*id);
      }
      if (phones.empty())
        raise(ErrorCode::MalformedInput,
              "line " + std::to_string(line_no) + ": entry '" + word + "' has no phonemes");
      if (!lex.entries_.contains(word)) lex.entries_.emplace(std::move(word), std::move(phones));
    }
    return lex;
  }

  const PhonemeInventory& inventory() const { return inventory_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::vector<PhonemeId>* lookup(std::string_view word) const {
    auto it = entries_.find(to_upper(word));
    if (it == entries_.end()) return nullptr;
    return &it->second;
  }

  // Headwords in sorted order (std::map keeps them sorted already).
  const std::map<std::string, std::vector<PhonemeId>>& entries() const { return entries_; }

 private:
  PhonemeInventory inventory_;
  std::map<std::string, std::vector<PhonemeId>> entries_;
};

namespace detail {

// Fixed fallback for out-of-vocabulary words: digraphs first, then one
// phoneme per letter; digits expand to the phonemes of their spoken names.
inline const std::vector<std::string>* fallback_digit_phones(char digit) {
  static const std::vector<std::string> names[10] = {
      {"Z", "IH", "R", "OW"}, {"W", "AH", "N"},       {"T", "UW"},
      {"TH", "R", "IY"},      {"F", "AO", "R"},       {"F", "AY", "V"},
      {"S", "IH", "K", "S"},  {"S", "EH", "V", "AH", "N"}, {"EY", "T"},
      {"N", "AY", "N"},
  };
  if (digit < '0' || digit > '9') return nullptr;
  return &names[digit - '0'];
}

inline const char* fallback_letter_phone(char letter) {
  switch (letter) {
    case 'A': return "AE";
    case 'B': return "B";
    case 'C': return "K";
    case 'D': return "D";
    case 'E': return "EH";
    case 'F': return "F";
    case 'G': return "G";
    case 'H': return "HH";
    case 'I': return "IH";
    case 'J': return "JH";
    case 'K': return "K";
    case 'L': return "L";
    case 'M': return "M";
    case 'N': return "N";
    case 'O': return "AA";
    case 'P': return "P";
    case 'Q': return "K";
    case 'R': return "R";
    case 'S': return "S";
    case 'T': return "T";
    case 'U': return "AH";
    case 'V': return "V";
    case 'W': return "W";
    case 'X': return "K";
    case 'Y': return "Y";
    case 'Z': return "Z";
  }
  return nullptr;
}

inline std::string g2p_normalize(std::string_view word) {
  std::string out;
  for (char c : word) {
    if (is_ascii_alnum(static_cast<unsigned char>(c))) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

// Grapheme-to-phoneme conversion: lexicon hit when available, deterministic
// rule table otherwise.
inline std::vector<PhonemeId> g2p(std::string_view word, const PronunciationLexicon& lexicon) {
  std::string norm = detail::g2p_normalize(word);
  if (norm.empty())
    raise(ErrorCode::EmptyWord, "g2p on a word with no letters or digits: '" + std::string(word) + "'");
  if (const auto* entry = lexicon.lookup(norm)) return *entry;

  const PhonemeInventory& inv = lexicon.inventory();
  std::vector<PhonemeId> out;
  std::size_t i = 0;
  while (i < norm.size()) {
    if (i + 1 < norm.size()) {
      std::string_view pair = std::string_view(norm).substr(i, 2);
      if (pair == "TH" || pair == "SH" || pair == "CH") {
        out.push_back(inv.id_of(pair));
        i += 2;
        continue;
      }
    }
    if (const auto* digits = detail::fallback_digit_phones(norm[i])) {
      for (const std::string& p : *digits) out.push_back(inv.id_of(p));
    } else if (const char* p = detail::fallback_letter_phone(norm[i])) {
      out.push_back(inv.id_of(p));
    }
    ++i;
  }
  if (out.empty())
    raise(ErrorCode::EmptyWord, "no phonemes derivable for '" + std::string(word) + "'");
  return out;
}

inline std::size_t phoneme_count_or(std::string_view word, const PronunciationLexicon& lexicon,
                                    std::size_t fallback) {
  if (detail::g2p_normalize(word).empty()) return fallback;
  return g2p(word, lexicon).size();
}

// Unit-cost Levenshtein distance over phoneme symbols.
inline std::size_t phoneme_edit_distance(const std::vector<PhonemeId>& a,
                                         const std::vector<PhonemeId>& b) {
  return edit_distance(std::span<const PhonemeId>(a), std::span<const PhonemeId>(b));
}

// Liang-style hyphenation pattern table. Patterns are one per line, e.g.
// "1na" or ".ab3ou"; digits give break priorities between letters and odd
// maxima mark break points.
class SyllablePatterns {
 public:
  SyllablePatterns() = default;

  static SyllablePatterns parse(std::istream& in) {
    SyllablePatterns out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream fields(line);
      std::string pat;
      if (!(fields >> pat)) continue;
      if (pat[0] == '%' || pat[0] == '#') continue;
      out.insert(pat, line_no);
    }
    return out;
  }

  void insert(std::string_view pattern, std::size_t line_no = 0) {
    std::string letters;
    std::vector<int> prio;
    prio.push_back(0);
    for (char c : pattern) {
      if (c >= '0' && c <= '9') {
        prio.back() = std::max(prio.back(), c - '0');
      } else {
        letters.push_back(c == '.' ? '.' : to_lower_char(c));
        prio.push_back(0);
      }
    }
    if (letters.empty())
      raise(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": empty pattern");
    auto it = table_.find(letters);
    if (it != table_.end()) {
      if (it->second != prio)
        raise(ErrorCode::MalformedInput,
              "line " + std::to_string(line_no) + ": conflicting pattern '" + letters + "'");
      return;
    }
    max_len_ = std::max(max_len_, letters.size());
    table_.emplace(std::move(letters), std::move(prio));
  }

  bool empty() const { return table_.empty(); }
  std::size_t size() const { return table_.size(); }

  // Break positions inside `lower_word` (no '.' anchors), each position p
  // meaning a split between characters p-1 and p. Breaks closer than two
  // characters to either end are suppressed.
  std::vector<std::size_t> break_positions(const std::string& lower_word) const {
    const std::size_t n = lower_word.size();
    if (table_.empty() || n < 4) return {};
    std::string padded = "." + lower_word + ".";
    std::vector<int> prio(padded.size() + 1, 0);
    for (std::size_t start = 0; start < padded.size(); ++start) {
      for (std::size_t len = 1; len <= max_len_ && start + len <= padded.size(); ++len) {
        auto it = table_.find(padded.substr(start, len));
        if (it == table_.end()) continue;
        const std::vector<int>& p = it->second;
        for (std::size_t k = 0; k < p.size(); ++k)
          prio[start + k] = std::max(prio[start + k], p[k]);
      }
    }
    std::vector<std::size_t> breaks;
    for (std::size_t pos = 2; pos + 2 <= n; ++pos) {
      // prio index for the gap before lower_word[pos] is pos+1 (the '.' shift)
      if (prio[pos + 1] % 2 == 1) breaks.push_back(pos);
    }
    return breaks;
  }

 private:
  static char to_lower_char(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }

  std::map<std::string, std::vector<int>> table_;
  std::size_t max_len_ = 0;
};

namespace detail {

inline bool is_vowel_letter(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
  }
  return false;
}

// Fallback splits: one break before the consonant onset of every vowel group
// after the first ("banana" -> ba|na|na).
inline std::vector<std::size_t> vowel_group_breaks(const std::string& lower_word) {
  std::vector<std::size_t> group_starts;
  bool in_group = false;
  for (std::size_t i = 0; i < lower_word.size(); ++i) {
    bool v = is_vowel_letter(lower_word[i]);
    if (v && !in_group) group_starts.push_back(i);
    in_group = v;
  }
  std::vector<std::size_t> breaks;
  for (std::size_t g = 1; g < group_starts.size(); ++g) {
    std::size_t start = group_starts[g];
    std::size_t pos = (start > 0 && !is_vowel_letter(lower_word[start - 1])) ? start - 1 : start;
    if (pos > 0 && (breaks.empty() || pos > breaks.back())) breaks.push_back(pos);
  }
  return breaks;
}

}  // namespace detail

// Splits a word into syllables whose concatenation is exactly the input.
// Pattern breaks win when the table yields any; otherwise the vowel-group
// fallback applies, so the operation is total on non-empty words.
inline std::vector<std::string> syllabify(std::string_view word, const SyllablePatterns& patterns) {
  if (word.empty()) raise(ErrorCode::EmptyWord, "syllabify on empty word");
  std::string lower = to_lower(word);
  std::vector<std::size_t> breaks = patterns.break_positions(lower);
  if (breaks.empty()) breaks = detail::vowel_group_breaks(lower);

  std::vector<std::string> out;
  std::size_t prev = 0;
  for (std::size_t b : breaks) {
    if (b <= prev || b >= word.size()) continue;
    out.emplace_back(word.substr(prev, b - prev));
    prev = b;
  }
  out.emplace_back(word.substr(prev));
  return out;
}

}  // namespace sqa

#endif  // SQA_SUBWORD_HPP
