// Ranked phrase extraction from selected macro-clusters.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emergent/cluster.h"
#include "emergent/macro.h"

namespace emergent::keyphrase {

struct CandidatePhrase {
  std::string phrase;
  double score = 0;
  int64_t macro_id = 0;
  int64_t window_id = 0;

  bool operator==(const CandidatePhrase&) const = default;
};

struct KeyphraseOptions {
  int k = 5;
  // Drop a phrase contained (as whole tokens) in a longer phrase of the same
  // macro-cluster whose weight is at least subphrase_ratio of its own: its
  // occurrences are almost all fragments of the longer phrase.
  bool collapse_subphrases = true;
  double subphrase_ratio = 0.9;

  void validate() const;
};

// True when `inner` occurs in `outer` as a contiguous run of whole tokens.
bool contains_subphrase(const std::string& outer, const std::string& inner);

// Phrases of the macro-cluster ranked by merged term weight x smoothed idf,
// descending, ties by phrase; at most options.k results.
std::vector<CandidatePhrase> top_phrases(const macro::MacroCluster& macro,
                                         const cluster::TermWeights& doc_freq, double n_docs,
                                         const KeyphraseOptions& options = {},
                                         int64_t window_id = 0);

}  // namespace emergent::keyphrase
