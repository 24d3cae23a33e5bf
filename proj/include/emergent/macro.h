// Macro-clustering of a micro-cluster snapshot at window close.
#pragma once

#include <cstdint>
#include <vector>

#include "emergent/cluster.h"

namespace emergent::macro {

struct MacroCluster {
  int64_t macro_id = 0;
  std::vector<uint64_t> member_ids;  // ascending micro cluster ids
  int64_t total_raw_count = 0;
  cluster::TermWeights merged_term_weights;
};

// Single-linkage agglomeration: micro-clusters are linked when the cosine of
// their TF-IDF vectors (idf from the snapshot) is >= link_threshold, and the
// macro-clusters are the connected components. Macro ids are assigned in
// order of each component's smallest member id.
std::vector<MacroCluster> recluster(const cluster::ModelSnapshot& snapshot, double link_threshold);

// Macro-clusters with strictly more than min_tweets raw tweets, order kept.
std::vector<MacroCluster> select(const std::vector<MacroCluster>& macros, int64_t min_tweets = 10000);

}  // namespace emergent::macro
