// Online micro-clustering of n-gram documents with exponential fading.
//
// Each document (the n-grams of one tweet) becomes a temporary micro-cluster
// that is merged into the most similar live micro-cluster when the TF-IDF
// cosine similarity reaches the threshold, or kept as a new micro-cluster.
// Cluster weights, term weights and document frequencies decay with
// w(dt) = 2^(-lambda * dt), dt in hours, and obsolete state is pruned every
// t_gap insertions.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emergent/common.h"

namespace emergent::embed {
class EmbeddingTable;
}

namespace emergent::cluster {

using TermWeights = std::unordered_map<std::string, double>;
using SparseVector = std::unordered_map<std::string, double>;

// 2^(-lambda * delta_hours). Throws ConfigError for negative delta.
double fade_factor(double delta_hours, double lambda);

// ln((n_docs + 1) / (df + 1)) + 1
double smoothed_idf(double df, double n_docs);

// tf(p) * smoothed_idf(df(p), n_docs) for every phrase in term_weights.
// Phrases missing from doc_freq use df = 0.
SparseVector tfidf_vector(const TermWeights& term_weights, const TermWeights& doc_freq,
                          double n_docs);

// dot(a, b) / (|a| |b|), or 0 when either norm is 0.
double cosine(const SparseVector& a, const SparseVector& b);

// Similarities closer than this are treated as ties.
inline constexpr double kSimilarityTolerance = 1e-12;

struct ClusterParams {
  double lambda = 0.1;         // fading rate per hour
  double sim_threshold = 0.5;  // merge when similarity >= this
  double alpha = 1.0;          // TF-IDF share of the blended similarity
  int64_t t_gap = 100;         // insertions between cleanups
  double w_min = 1.0 / 1024;   // prune below this faded weight

  void validate() const;
};

struct ClusterSummary {
  uint64_t cluster_id = 0;
  double weight = 0;       // faded to the snapshot instant
  int64_t raw_count = 0;   // tweets merged since the window started
  Timestamp created;
  Timestamp last_update;
  // Faded term weights, by descending weight then phrase.
  std::vector<std::pair<std::string, double>> terms;

  std::vector<std::pair<std::string, double>> top_terms(size_t k) const;
};

struct ModelSnapshot {
  Timestamp ts;
  double n_docs = 0;
  TermWeights doc_freq;
  std::vector<ClusterSummary> clusters;  // ascending cluster_id
  int64_t pruned_raw_count = 0;          // raw counts of clusters pruned this window
};

struct Assignment {
  enum class Outcome { kSkipped, kMerged, kCreated };
  Outcome outcome = Outcome::kSkipped;
  uint64_t cluster_id = 0;
  // Best similarity found (0 when no cluster was comparable).
  double similarity = 0;
};

class ClusterModel {
 public:
  explicit ClusterModel(ClusterParams params = {});

  const ClusterParams& params() const { return params_; }

  // Adds one document. `table`, when given and alpha < 1, blends in the
  // embedding cosine between document and cluster centroids. Throws DataError
  // when ts precedes the model clock.
  Assignment insert(const std::vector<std::string>& phrases, Timestamp ts,
                    const embed::EmbeddingTable* table = nullptr);

  // Read-only summary faded to ts (which must not precede the clock).
  ModelSnapshot snapshot(Timestamp ts) const;
  ModelSnapshot snapshot() const;

  // Drops all clusters and statistics. Parameters, the clock and the id
  // counter are kept, so cluster ids are never reused within a run.
  void reset();

  // Zeroes per-window raw counts while keeping the faded state (used when the
  // model is carried across windows).
  void start_window();

  size_t live_clusters() const { return live_; }
  std::optional<Timestamp> clock() const { return clock_; }
  uint64_t next_id() const { return next_id_; }
  int64_t insertions() const { return insertions_; }
  int64_t pruned_raw_count() const { return pruned_raw_; }

 private:
  struct Slot {
    uint64_t id = 0;
    bool alive = true;
    double weight = 0;  // scaled
    double term_sq = 0; // sum of squared scaled term weights
    int64_t raw_count = 0;
    Timestamp created;
    Timestamp last_update;
    std::unordered_map<uint32_t, double> terms;  // scaled
    std::vector<double> centroid;                // scaled embedding sum
  };
  struct Expiry {
    double at_hours;
    uint32_t index;
    bool operator>(const Expiry& o) const {
      return at_hours != o.at_hours ? at_hours > o.at_hours : index > o.index;
    }
  };

  uint32_t intern(const std::string& phrase);
  double scale_at(Timestamp ts) const;
  void maybe_rebase(Timestamp ts);
  double idf_now(uint32_t term);
  void cleanup(Timestamp ts);
  void push_cluster_expiry(uint32_t slot);
  void push_term_expiry(uint32_t term);
  static void heap_push(std::vector<Expiry>& heap, Expiry e);
  static Expiry heap_pop(std::vector<Expiry>& heap);

  ClusterParams params_;
  std::optional<Timestamp> clock_;
  std::optional<Timestamp> landmark_;
  uint64_t next_id_ = 0;
  int64_t insertions_ = 0;
  int64_t pruned_raw_ = 0;
  size_t live_ = 0;

  std::unordered_map<std::string, uint32_t> dictionary_;
  std::vector<std::string> phrases_;
  std::vector<double> doc_freq_;  // scaled; 0 = absent
  std::vector<std::vector<uint32_t>> postings_;
  double n_docs_ = 0;             // scaled
  double max_doc_freq_ = 0;       // scaled upper bound over all entries
  std::vector<Slot> slots_;
  std::vector<Expiry> cluster_expiry_;
  std::vector<Expiry> term_expiry_;

  // Per-insert scratch.
  double now_fade_ = 1;
  double now_docs_ = 0;
  uint64_t epoch_ = 0;
  std::vector<uint64_t> idf_epoch_;
  std::vector<double> idf_cache_;
  std::vector<uint64_t> seen_epoch_;
};

}  // namespace emergent::cluster
