// Tweet text normalization, tokenization and n-gram enumeration.
//
// normalize() strips URLs, punctuation, symbols and emoji, collapses
// whitespace and unifies Persian letter variants. Digits are kept and no
// stemming is applied. The same canonical form is reused for knowledge-base
// title matching (see kbgate.h).
#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace emergent::textnorm {

using TokenSequence = std::vector<std::string>;

struct NGramConfig {
  int n_min = 2;
  int n_max = 3;

  void validate() const;
};

std::string normalize(std::string_view text);

// Splits normalized text on single spaces.
TokenSequence tokenize(std::string_view normalized);

// All contiguous n-grams for n in [n_min, n_max], space-joined, small n first
// and left to right within each n. Duplicates are retained.
std::vector<std::string> ngrams(const TokenSequence& tokens, const NGramConfig& cfg);

// Full-case lowering (root locale) of code points that have case.
std::string to_lower(std::string_view text);

bool is_valid_utf8(std::string_view text);

// Tokens whose n-grams are dropped when every token of the n-gram is listed.
class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  // One token per line, UTF-8; tokens are passed through normalize().
  static StopwordSet load(const std::string& path);

  bool empty() const { return words_.empty(); }
  size_t size() const { return words_.size(); }
  bool contains(const std::string& token) const { return words_.count(token) != 0; }

  // True when every space-separated token of the phrase is a stopword.
  bool is_stop_phrase(std::string_view phrase) const;

 private:
  std::unordered_set<std::string> words_;
};

// ngrams() followed by stop-phrase removal.
std::vector<std::string> phrases_for(std::string_view raw_text, const NGramConfig& cfg,
                                     const StopwordSet& stopwords);

}  // namespace emergent::textnorm
