#ifndef SQA_TEXT_HPP
#define SQA_TEXT_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqa {

// A token anchored to its source text by character offsets [char_start, char_end).
struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

namespace detail {

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Bytes >= 0x80 (UTF-8 continuations and lead bytes) count as word characters
// so multi-byte sequences stay inside one token.
inline bool is_word_byte(unsigned char c) {
  return is_ascii_alnum(c) || c >= 0x80;
}

}  // namespace detail

// Whitespace tokenizer with punctuation detached as single-character tokens.
// An apostrophe between two word characters stays inside the token ("don't").
// The rule set is frozen: token-level scores depend on it being bit-stable.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (detail::is_ascii_space(c)) {
      ++i;
      continue;
    }
    if (detail::is_word_byte(c)) {
      std::size_t start = i;
      while (i < n) {
        unsigned char w = static_cast<unsigned char>(text[i]);
        if (detail::is_word_byte(w)) {
          ++i;
        } else if (w == '\'' && i > start && i + 1 < n &&
                   detail::is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
          ++i;
        } else {
          break;
        }
      }
      tokens.push_back(Token{std::string(text.substr(start, i - start)), start, i});
    } else {
      tokens.push_back(Token{std::string(text.substr(i, 1)), i, i + 1});
      ++i;
    }
  }
  return tokens;
}

inline std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(c);
  }
  return out;
}

inline std::string to_upper(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    out.push_back(c);
  }
  return out;
}

// Lowercase and drop ASCII punctuation. Used by the answer-presence filter,
// where hypothesis transcripts carry no casing or punctuation.
inline std::string normalize_token(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (detail::is_word_byte(u)) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      out.push_back(c);
    }
  }
  return out;
}

// True if the token would be spoken aloud (carries at least one word byte).
// Pure punctuation tokens have no phonetic realization.
inline bool is_speakable(std::string_view token_text) {
  for (char c : token_text) {
    if (detail::is_word_byte(static_cast<unsigned char>(c))) return true;
  }
  return false;
}

inline std::vector<std::string> normalized_words(std::string_view text) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(text)) {
    std::string norm = normalize_token(t.text);
    if (!norm.empty()) out.push_back(std::move(norm));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace sqa

#endif  // SQA_TEXT_HPP
