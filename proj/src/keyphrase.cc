#include "emergent/keyphrase.h"

#include <algorithm>
#include <unordered_map>

namespace emergent::keyphrase {

void KeyphraseOptions::validate() const {
  if (k < 1) throw ConfigError("top-k must be >= 1");
  if (!(subphrase_ratio > 0)) throw ConfigError("subphrase ratio must be > 0");
}

bool contains_subphrase(const std::string& outer, const std::string& inner) {
  if (inner.empty() || inner.size() >= outer.size()) return false;
  for (size_t pos = outer.find(inner); pos != std::string::npos; pos = outer.find(inner, pos + 1)) {
    bool left = pos == 0 || outer[pos - 1] == ' ';
    size_t end = pos + inner.size();
    bool right = end == outer.size() || outer[end] == ' ';
    if (left && right) return true;
  }
  return false;
}

namespace {

size_t token_count(const std::string& phrase) {
  return static_cast<size_t>(std::count(phrase.begin(), phrase.end(), ' ')) + 1;
}

// Every contiguous sub-run of tokens shorter than the phrase itself.
std::vector<std::string> subphrases(const std::string& phrase) {
  std::vector<size_t> starts{0};
  for (size_t i = 0; i < phrase.size(); ++i) {
    if (phrase[i] == ' ') starts.push_back(i + 1);
  }
  const size_t n = starts.size();
  std::vector<std::string> out;
  for (size_t len = 1; len < n; ++len) {
    for (size_t a = 0; a + len <= n; ++a) {
      size_t begin = starts[a];
      size_t end = a + len < n ? starts[a + len] - 1 : phrase.size();
      out.push_back(phrase.substr(begin, end - begin));
    }
  }
  return out;
}

}  // namespace

std::vector<CandidatePhrase> top_phrases(const macro::MacroCluster& macro,
                                         const cluster::TermWeights& doc_freq, double n_docs,
                                         const KeyphraseOptions& options, int64_t window_id) {
  options.validate();
  const auto& weights = macro.merged_term_weights;

  std::unordered_map<std::string, bool> subsumed;
  if (options.collapse_subphrases) {
    for (const auto& [phrase, w] : weights) {
      if (token_count(phrase) < 2) continue;
      for (const std::string& sub : subphrases(phrase)) {
        auto it = weights.find(sub);
        if (it != weights.end() && w >= options.subphrase_ratio * it->second) subsumed[sub] = true;
      }
    }
  }

  std::vector<CandidatePhrase> ranked;
  ranked.reserve(weights.size());
  for (const auto& [phrase, w] : weights) {
    if (subsumed.count(phrase)) continue;
    auto df = doc_freq.find(phrase);
    double idf = cluster::smoothed_idf(df == doc_freq.end() ? 0.0 : df->second, n_docs);
    ranked.push_back({phrase, w * idf, macro.macro_id, window_id});
  }
  const size_t k = std::min(static_cast<size_t>(options.k), ranked.size());
  auto by_score = [](const CandidatePhrase& a, const CandidatePhrase& b) {
    return a.score != b.score ? a.score > b.score : a.phrase < b.phrase;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    by_score);
  ranked.resize(k);
  return ranked;
}

}  // namespace emergent::keyphrase
