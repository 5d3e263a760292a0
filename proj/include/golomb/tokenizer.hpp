#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace golomb {

// Input region a token belongs to. Stamped by the input assembler; plain
// tokenization leaves it at kNone.
enum class Region : std::uint8_t {
  kNone = 0,
  kQuestion,
  kHistory,
  kIntent,
  kValue,
};

struct Token {
  int id = 0;
  std::string text;    // original surface form, case preserved
  int char_start = 0;  // offsets into the source text, end exclusive
  int char_end = 0;
  Region source = Region::kNone;
};

// Fixed-id vocabulary. Lookup is over lowercased forms; surface case is kept
// on the tokens themselves so span extraction returns the original text.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kInt = 4;
  static constexpr int kPv = 5;
  static constexpr int kNumReserved = 6;

  Vocabulary();

  // Appends a token if absent; returns its id either way.
  int add(const std::string& token);
  // Id for a normalized token, kUnk when unknown.
  int lookup(const std::string& normalized) const;
  const std::string& token_text(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  // One token per line, line number = id, reserved tokens first.
  std::string to_text() const;
  static Vocabulary from_text(const std::string& text);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Lowercase ASCII; multibyte UTF-8 is passed through untouched.
std::string normalize_token(const std::string& s);

// Raw split on whitespace and punctuation boundaries, punctuation kept as
// single-character tokens. Offsets index the original text.
struct RawToken {
  std::string text;
  int char_start = 0;
  int char_end = 0;
};
std::vector<RawToken> split_text(const std::string& text);

// Frequency-ranked vocabulary over the corpus, capped at max_size entries
// including the reserved ids. Ties break lexicographically.
Vocabulary build_vocab(const std::vector<std::string>& corpus, int max_size);

std::vector<Token> tokenize(const std::string& text, const Vocabulary& vocab);

// Surface text covered by tokens[first..last] (both inclusive).
std::string detokenize_span(const std::string& text,
                            const std::vector<Token>& tokens, int first,
                            int last);

}  // namespace golomb
