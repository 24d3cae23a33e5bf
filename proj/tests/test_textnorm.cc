#include <random>

#include "doctest.h"
#include "emergent/textnorm.h"

using namespace emergent::textnorm;

TEST_CASE("normalize examples") {
  CHECK(normalize("covid-19 spreads! https://t.co/abc 😀") == "covid 19 spreads");
  CHECK(normalize("") == "");
  CHECK(normalize("سلام!!!   دنیا") == "سلام دنیا");
  CHECK(normalize("  a\t\nb  ") == "a b");
  CHECK(normalize("see www.example.com/x?y=1 now") == "see now");
  CHECK(normalize("HTTP://X.ORG/a b") == "b");
  CHECK(normalize("سلامhttps://t.co/x b") == "سلام b");
  CHECK(normalize("owww.x") == "owww x");
  // case is left alone
  CHECK(normalize("Tehran") == "Tehran");
}

TEST_CASE("persian unification") {
  // Arabic Yeh and Kaf become the Persian letters
  CHECK(normalize("ي") == "ی");
  CHECK(normalize("كتاب") == "کتاب");
  // Persian digits fold to ASCII, kept
  CHECK(normalize("۱۴۰۰") == "1400");
  CHECK(normalize("١٢") == "12");
  // tatweel dropped
  CHECK(normalize("ســلام") == "سلام");
  // ZWNJ kept inside a token, trimmed at its edges
  CHECK(normalize("می‌روم") == "می‌روم");
  CHECK(normalize("‌می‌ رو") == "می رو");
  // Persian question mark and comma are punctuation
  CHECK(normalize("چرا؟ آره،") == "چرا آره");
}

TEST_CASE("emoji of every shape go away") {
  CHECK(normalize("a 👍🏽 b") == "a b");
  CHECK(normalize("a 🇮🇷 b") == "a b");
  CHECK(normalize("a ❤️ b") == "a b");
  CHECK(normalize("a 👨‍👩‍👧 b") == "a b");
  CHECK(normalize("a 1️⃣ b") == "a 1 b");
}

TEST_CASE("tokenize") {
  CHECK(tokenize("a b c") == TokenSequence{"a", "b", "c"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("covid 19") == TokenSequence{"covid", "19"});
}

TEST_CASE("ngrams") {
  NGramConfig c23;
  CHECK(ngrams({"a", "b", "c"}, c23) == std::vector<std::string>{"a b", "b c", "a b c"});
  CHECK(ngrams({"a"}, c23).empty());
  NGramConfig c22{2, 2};
  CHECK(ngrams({"a", "b", "a", "b"}, c22) == std::vector<std::string>{"a b", "b a", "a b"});
  NGramConfig bad{3, 2};
  CHECK_THROWS(bad.validate());
  NGramConfig zero{0, 2};
  CHECK_THROWS(zero.validate());
}

TEST_CASE("stop phrases") {
  StopwordSet stop({"of", "the"});
  CHECK(stop.is_stop_phrase("of the"));
  CHECK_FALSE(stop.is_stop_phrase("of tehran"));
  auto p = phrases_for("The end of the road", {}, StopwordSet({"of", "the"}));
  // case is not folded, so "The" is not a stopword
  CHECK(p == std::vector<std::string>{"The end", "end of", "the road", "The end of", "end of the", "of the road"});
}

TEST_CASE("to_lower and utf8 validity") {
  CHECK(to_lower("COVID Ünïcode") == "covid ünïcode");
  CHECK(is_valid_utf8("سلام"));
  CHECK_FALSE(is_valid_utf8("\xC3"));
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));  // surrogate
}

namespace {

std::string noisy_string(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "a", "Bc", "۱۲", "سلام", "ي", "ك", "‌", " ", "  ", "\t", "!", "?!", "...", "#", "@", "-",
      "_", "😀", "🇮🇷", "👍🏽", "❤️", " https://t.co/xYz", "xhttps://t.co/q", " http://a.b/c ", " www.q.com", " t.co/abc", "(", ")", "«", "»",
      "ـ", "ً", "ﻻ", "ﬁ", "Ａ", "x́", " ", "⁦", "\r\n", "1️⃣", "٪", "¿"};
  std::string s;
  int len = static_cast<int>(rng() % 20);
  for (int i = 0; i < len; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

bool has_noise(const std::string& p) {
  for (const char* bad : {"!", "?", "#", "@", "(", ")", "-", "_", ".", "http", "www", "t.co", "\t", "  ", "😀", "❤"}) {
    if (p.find(bad) != std::string::npos) return true;
  }
  return !p.empty() && (p.front() == ' ' || p.back() == ' ');
}

}  // namespace

TEST_CASE("properties over random noisy strings") {
  std::mt19937_64 rng(42);
  NGramConfig cfg{1, 3};
  for (int i = 0; i < 2000; ++i) {
    std::string raw = noisy_string(rng);
    std::string n = normalize(raw);
    CAPTURE(raw);
    CHECK(normalize(n) == n);
    CHECK(is_valid_utf8(n));
    CHECK_FALSE(has_noise(n));
    auto toks = tokenize(n);
    size_t expect = 0;
    for (int k = cfg.n_min; k <= cfg.n_max; ++k) {
      if (static_cast<int>(toks.size()) >= k) expect += toks.size() - k + 1;
    }
    auto grams = ngrams(toks, cfg);
    CHECK(grams.size() == expect);
    for (const auto& t : toks) {
      CHECK_FALSE(t.empty());
      CHECK(t.find(' ') == std::string::npos);
    }
  }
}
