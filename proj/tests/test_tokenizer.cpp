#include "doctest.h"

#include <cstdio>

#include "golomb/errors.hpp"
#include "golomb/tokenizer.hpp"

using namespace golomb;

TEST_CASE("reserved ids are fixed") {
  Vocabulary v;
  CHECK(v.size() == Vocabulary::kNumReserved);
  CHECK(v.token_text(Vocabulary::kPad) == "[PAD]");
  CHECK(v.token_text(Vocabulary::kUnk) == "[UNK]");
  CHECK(v.token_text(Vocabulary::kCls) == "[CLS]");
  CHECK(v.token_text(Vocabulary::kSep) == "[SEP]");
  CHECK(v.token_text(Vocabulary::kInt) == "[int]");
  CHECK(v.token_text(Vocabulary::kPv) == "[pv]");
}

TEST_CASE("build_vocab keeps the most frequent tokens") {
  Vocabulary v = build_vocab({"a b", "a c"}, 9);
  CHECK(v.size() == 9);
  CHECK(v.lookup("a") != Vocabulary::kUnk);
  CHECK(v.lookup("b") != Vocabulary::kUnk);
  CHECK(v.lookup("c") != Vocabulary::kUnk);

  SUBCASE("empty corpus leaves only reserved tokens") {
    Vocabulary e = build_vocab({}, 10);
    CHECK(e.size() == Vocabulary::kNumReserved);
  }
  SUBCASE("frequency ties break lexicographically") {
    // "a" twice, "b" and "c" once each; only room for two non-reserved ids.
    Vocabulary t = build_vocab({"a b", "a c"}, 8);
    CHECK(t.size() == 8);
    CHECK(t.lookup("a") != Vocabulary::kUnk);
    CHECK(t.lookup("b") != Vocabulary::kUnk);
    CHECK(t.lookup("c") == Vocabulary::kUnk);
  }
  SUBCASE("max_size caps total entries including reserved") {
    Vocabulary t = build_vocab({"x y z w"}, 7);
    CHECK(t.size() == 7);
  }
}

TEST_CASE("tokenize splits on whitespace with exact offsets") {
  Vocabulary v = build_vocab({"book a cab"}, 20);
  auto toks = tokenize("Book a cab", v);
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].text == "Book");
  CHECK(toks[0].char_start == 0);
  CHECK(toks[0].char_end == 4);
  CHECK(toks[1].char_start == 5);
  CHECK(toks[1].char_end == 6);
  CHECK(toks[2].char_start == 7);
  CHECK(toks[2].char_end == 10);
  // lookup is over lowercased forms
  CHECK(toks[0].id == v.lookup("book"));
}

TEST_CASE("tokenize splits punctuation into its own tokens") {
  Vocabulary v;
  auto toks = tokenize("7pm.", v);
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].text == "7pm");
  CHECK(toks[0].char_start == 0);
  CHECK(toks[0].char_end == 3);
  CHECK(toks[1].text == ".");
  CHECK(toks[1].char_start == 3);
  CHECK(toks[1].char_end == 4);
}

TEST_CASE("tokenize of empty text is empty") {
  Vocabulary v;
  CHECK(tokenize("", v).empty());
  CHECK(tokenize("   ", v).empty());
}

TEST_CASE("unknown tokens keep their offsets") {
  Vocabulary v;  // reserved only, so every word is [UNK]
  auto toks = tokenize("zebra stripes", v);
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].id == Vocabulary::kUnk);
  CHECK(toks[0].text == "zebra");
  CHECK(toks[1].char_start == 6);
}

TEST_CASE("offset consistency holds for arbitrary text") {
  std::string text = "Fly to San Francisco at 7:30pm, please! (ASAP)";
  Vocabulary v;
  for (const Token& t : tokenize(text, v)) {
    CHECK(text.substr(t.char_start, t.char_end - t.char_start) == t.text);
  }
}

TEST_CASE("detokenize_span returns original surface text") {
  std::string text = "to San Francisco";
  Vocabulary v;
  auto toks = tokenize(text, v);
  REQUIRE(toks.size() == 3);
  CHECK(detokenize_span(text, toks, 1, 2) == "San Francisco");
  CHECK(detokenize_span(text, toks, 0, 0) == "to");

  SUBCASE("zero-width special tokens are rejected") {
    Token sep;
    sep.id = Vocabulary::kSep;
    sep.text = "[SEP]";
    sep.char_start = 0;
    sep.char_end = 0;
    auto withSep = toks;
    withSep.push_back(sep);
    CHECK_THROWS_AS(detokenize_span(text, withSep, 2, 3), InternalError);
  }
}

TEST_CASE("tokenize is deterministic") {
  Vocabulary v = build_vocab({"one two three"}, 32);
  auto a = tokenize("one two three", v);
  auto b = tokenize("one two three", v);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].char_start == b[i].char_start);
  }
}

TEST_CASE("vocabulary serialization round trip") {
  Vocabulary v = build_vocab({"alpha beta Gamma"}, 16);
  Vocabulary w = Vocabulary::from_text(v.to_text());
  CHECK(w.size() == v.size());
  for (int id = 0; id < v.size(); ++id) {
    CHECK(w.token_text(id) == v.token_text(id));
  }

  std::string path = "vocab_test_tmp.txt";
  v.save(path);
  Vocabulary z = Vocabulary::load(path);
  CHECK(z.size() == v.size());
  CHECK(z.lookup("gamma") == v.lookup("gamma"));
  std::remove(path.c_str());
}

TEST_CASE("normalize_token lowercases ascii only") {
  CHECK(normalize_token("Book") == "book");
  CHECK(normalize_token("7PM") == "7pm");
  CHECK(normalize_token("naïve") == "naïve");  // multibyte passes through
}
