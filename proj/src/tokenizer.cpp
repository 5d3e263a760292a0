#include "golomb/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "golomb/errors.hpp"
#include "golomb/json_io.hpp"

namespace golomb {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> kReserved = {"[PAD]", "[UNK]", "[CLS]",
                                                     "[SEP]", "[int]", "[pv]"};
  return kReserved;
}

bool is_space_byte(unsigned char c) { return c < 0x80 && std::isspace(c); }

// High-bit bytes count as word characters so UTF-8 sequences stay inside one
// token.
bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

}  // namespace

std::string normalize_token(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) {
    token_to_id_[t] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(t);
  }
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = static_cast<int>(id_to_token_.size());
  token_to_id_[token] = id;
  id_to_token_.push_back(token);
  return id;
}

int Vocabulary::lookup(const std::string& normalized) const {
  auto it = token_to_id_.find(normalized);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_text(int id) const {
  if (id < 0 || id >= size())
    throw InternalError("token id " + std::to_string(id) + " out of range");
  return id_to_token_[static_cast<size_t>(id)];
}

std::string Vocabulary::to_text() const {
  std::ostringstream os;
  for (const auto& t : id_to_token_) os << t << '\n';
  return os.str();
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  Vocabulary vocab;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    if (line_no < kNumReserved) {
      if (line != reserved_tokens()[static_cast<size_t>(line_no)])
        throw DataError("vocabulary line " + std::to_string(line_no) +
                        " must be the reserved token " +
                        reserved_tokens()[static_cast<size_t>(line_no)]);
    } else {
      if (vocab.token_to_id_.count(line))
        throw DataError("duplicate vocabulary token '" + line + "'");
      vocab.add(line);
    }
    ++line_no;
  }
  if (line_no < kNumReserved)
    throw DataError("vocabulary file is missing reserved tokens");
  return vocab;
}

void Vocabulary::save(const std::string& path) const {
  write_text_file(path, to_text());
}

Vocabulary Vocabulary::load(const std::string& path) {
  return from_text(read_text_file(path));
}

std::vector<RawToken> split_text(const std::string& text) {
  std::vector<RawToken> out;
  const int n = static_cast<int>(text.size());
  int i = 0;
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[static_cast<size_t>(i)]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    int start = i;
    if (is_word_byte(c)) {
      while (i < n &&
             is_word_byte(static_cast<unsigned char>(text[static_cast<size_t>(i)])))
        ++i;
    } else {
      ++i;  // punctuation: one byte per token
    }
    out.push_back(RawToken{text.substr(static_cast<size_t>(start),
                                       static_cast<size_t>(i - start)),
                           start, i});
  }
  return out;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, int max_size) {
  if (max_size <= Vocabulary::kNumReserved)
    throw ConfigError("vocabulary max_size must exceed " +
                      std::to_string(Vocabulary::kNumReserved));
  std::map<std::string, long long> counts;
  for (const auto& text : corpus)
    for (const auto& raw : split_text(text)) ++counts[normalize_token(raw.text)];

  std::vector<std::pair<std::string, long long>> ranked(counts.begin(),
                                                        counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });

  Vocabulary vocab;
  int budget = max_size - Vocabulary::kNumReserved;
  for (const auto& [token, count] : ranked) {
    if (budget == 0) break;
    vocab.add(token);
    --budget;
  }
  return vocab;
}

std::vector<Token> tokenize(const std::string& text, const Vocabulary& vocab) {
  std::vector<Token> out;
  for (const auto& raw : split_text(text)) {
    Token tok;
    tok.id = vocab.lookup(normalize_token(raw.text));
    tok.text = raw.text;
    tok.char_start = raw.char_start;
    tok.char_end = raw.char_end;
    out.push_back(std::move(tok));
  }
  return out;
}

std::string detokenize_span(const std::string& text,
                            const std::vector<Token>& tokens, int first,
                            int last) {
  if (first < 0 || last >= static_cast<int>(tokens.size()) || first > last)
    throw InternalError("detokenize_span: bad token index pair");
  const Token& a = tokens[static_cast<size_t>(first)];
  const Token& b = tokens[static_cast<size_t>(last)];
  if (a.char_start >= a.char_end || b.char_start >= b.char_end)
    throw InternalError("detokenize_span: span covers a zero-width token");
  return text.substr(static_cast<size_t>(a.char_start),
                     static_cast<size_t>(b.char_end - a.char_start));
}

}  // namespace golomb
