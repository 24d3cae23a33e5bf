#include "emergent/cluster.h"

#include <algorithm>
#include <cmath>

#include "emergent/embed.h"

namespace emergent::cluster {

double fade_factor(double delta_hours, double lambda) {
  if (delta_hours < 0) throw ConfigError("fade_factor: negative time span");
  return std::exp2(-lambda * delta_hours);
}

double smoothed_idf(double df, double n_docs) {
  return std::log((n_docs + 1.0) / (df + 1.0)) + 1.0;
}

SparseVector tfidf_vector(const TermWeights& term_weights, const TermWeights& doc_freq,
                          double n_docs) {
  SparseVector out;
  out.reserve(term_weights.size());
  for (const auto& [phrase, tf] : term_weights) {
    auto it = doc_freq.find(phrase);
    double df = it == doc_freq.end() ? 0.0 : it->second;
    out.emplace(phrase, tf * smoothed_idf(df, n_docs));
  }
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  const SparseVector& small = a.size() <= b.size() ? a : b;
  const SparseVector& large = a.size() <= b.size() ? b : a;
  double dot = 0;
  for (const auto& [key, value] : small) {
    auto it = large.find(key);
    if (it != large.end()) dot += value * it->second;
  }
  double na = 0, nb = 0;
  for (const auto& [key, value] : a) na += value * value;
  for (const auto& [key, value] : b) nb += value * value;
  if (na <= 0 || nb <= 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void ClusterParams::validate() const {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  if (!(sim_threshold >= 0 && sim_threshold <= 1)) {
    throw ConfigError("similarity threshold must lie in [0, 1]");
  }
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("alpha must lie in [0, 1]");
  if (t_gap < 1) throw ConfigError("t_gap must be >= 1");
  if (!(w_min > 0) || !std::isfinite(w_min)) throw ConfigError("w_min must be > 0");
}

std::vector<std::pair<std::string, double>> ClusterSummary::top_terms(size_t k) const {
  return {terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(std::min(k, terms.size()))};
}

// All faded quantities are stored relative to a landmark instant L: a value
// contributed at time t is stored as 2^(lambda (t - L)), so the faded value
// at time `now` is stored * 2^(-lambda (now - L)). Decay then costs a single
// shared factor instead of touching every cluster.
namespace {
constexpr double kRebaseExponent = 60.0;
constexpr double kExpirySlackHours = 1e-7;

double epoch_hours(Timestamp ts) {
  return static_cast<double>(to_epoch_seconds(ts)) / 3600.0;
}
}  // namespace

ClusterModel::ClusterModel(ClusterParams params) : params_(params) { params_.validate(); }

uint32_t ClusterModel::intern(const std::string& phrase) {
  auto [it, inserted] = dictionary_.try_emplace(phrase, static_cast<uint32_t>(phrases_.size()));
  if (inserted) {
    phrases_.push_back(phrase);
    doc_freq_.push_back(0);
    postings_.emplace_back();
    idf_epoch_.push_back(0);
    idf_cache_.push_back(0);
  }
  return it->second;
}

double ClusterModel::scale_at(Timestamp ts) const {
  return std::exp2(params_.lambda * hours_between(*landmark_, ts));
}

void ClusterModel::maybe_rebase(Timestamp ts) {
  if (params_.lambda * hours_between(*landmark_, ts) <= kRebaseExponent) return;
  const double f = 1.0 / scale_at(ts);
  for (double& d : doc_freq_) d *= f;
  n_docs_ *= f;
  max_doc_freq_ *= f;
  for (Slot& slot : slots_) {
    if (!slot.alive) continue;
    slot.weight *= f;
    slot.term_sq *= f * f;
    for (auto& [term, w] : slot.terms) w *= f;
    for (double& c : slot.centroid) c *= f;
  }
  landmark_ = ts;
}

double ClusterModel::idf_now(uint32_t term) {
  if (idf_epoch_[term] != epoch_) {
    idf_epoch_[term] = epoch_;
    idf_cache_[term] = smoothed_idf(doc_freq_[term] * now_fade_, now_docs_);
  }
  return idf_cache_[term];
}

void ClusterModel::heap_push(std::vector<Expiry>& heap, Expiry e) {
  heap.push_back(e);
  std::push_heap(heap.begin(), heap.end(), std::greater<>{});
}

ClusterModel::Expiry ClusterModel::heap_pop(std::vector<Expiry>& heap) {
  std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
  Expiry e = heap.back();
  heap.pop_back();
  return e;
}

// A value v (scaled) drops below w_min at L + log2(v / w_min) / lambda.
void ClusterModel::push_cluster_expiry(uint32_t slot) {
  double at = epoch_hours(*landmark_) +
              std::log2(slots_[slot].weight / params_.w_min) / params_.lambda;
  heap_push(cluster_expiry_, {at, slot});
}

void ClusterModel::push_term_expiry(uint32_t term) {
  double at =
      epoch_hours(*landmark_) + std::log2(doc_freq_[term] / params_.w_min) / params_.lambda;
  heap_push(term_expiry_, {at, term});
}

void ClusterModel::cleanup(Timestamp ts) {
  const double now = epoch_hours(ts) + kExpirySlackHours;
  const double fade = 1.0 / scale_at(ts);
  std::vector<uint32_t> keep;
  while (!cluster_expiry_.empty() && cluster_expiry_.front().at_hours <= now) {
    Expiry e = heap_pop(cluster_expiry_);
    Slot& slot = slots_[e.index];
    if (!slot.alive) continue;
    if (slot.weight * fade < params_.w_min) {
      slot.alive = false;
      pruned_raw_ += slot.raw_count;
      slot.terms = {};
      slot.centroid = {};
      --live_;
    } else {
      keep.push_back(e.index);
    }
  }
  // re-push after draining: an entry sitting right at w_min would come back inside the slack
  for (uint32_t i : keep) push_cluster_expiry(i);
  keep.clear();
  while (!term_expiry_.empty() && term_expiry_.front().at_hours <= now) {
    Expiry e = heap_pop(term_expiry_);
    if (doc_freq_[e.index] <= 0) continue;
    if (doc_freq_[e.index] * fade < params_.w_min) {
      doc_freq_[e.index] = 0;
    } else {
      keep.push_back(e.index);
    }
  }
  for (uint32_t i : keep) push_term_expiry(i);
}

Assignment ClusterModel::insert(const std::vector<std::string>& phrases, Timestamp ts,
                                const embed::EmbeddingTable* table) {
  if (clock_ && ts < *clock_) {
    throw DataError("insert at " + format_rfc3339(ts) + " precedes model clock " +
                    format_rfc3339(*clock_));
  }
  if (phrases.empty()) return {};
  clock_ = ts;
  if (!landmark_) landmark_ = ts;
  maybe_rebase(ts);

  const double scale = scale_at(ts);
  now_fade_ = 1.0 / scale;
  now_docs_ = n_docs_ * now_fade_;
  ++epoch_;

  // Temporary micro-cluster: phrase counts of this document.
  std::vector<std::pair<uint32_t, double>> temp;
  {
    std::unordered_map<uint32_t, double> counts;
    std::vector<uint32_t> order;
    for (const std::string& p : phrases) {
      uint32_t id = intern(p);
      auto [it, fresh] = counts.try_emplace(id, 0.0);
      if (fresh) order.push_back(id);
      it->second += 1.0;
    }
    temp.reserve(order.size());
    for (uint32_t id : order) temp.emplace_back(id, counts[id]);
  }
  if (seen_epoch_.size() < slots_.size()) seen_epoch_.resize(slots_.size(), 0);

  // TF-IDF weights of the temporary cluster, heaviest first.
  struct TempTerm {
    uint32_t id;
    double count;
    double value;
  };
  std::vector<TempTerm> weighted;
  weighted.reserve(temp.size());
  double temp_sq = 0;
  for (auto [id, count] : temp) {
    double v = count * idf_now(id);
    weighted.push_back({id, count, v});
    temp_sq += v * v;
  }
  std::sort(weighted.begin(), weighted.end(), [](const TempTerm& a, const TempTerm& b) {
    return a.value != b.value ? a.value > b.value : a.id < b.id;
  });
  const double temp_norm = std::sqrt(temp_sq);

  const bool blend = table != nullptr && params_.alpha < 1.0;
  std::vector<double> temp_centroid;
  if (blend) {
    temp_centroid.assign(table->dim(), 0.0);
    for (auto [id, count] : temp) {
      embed::PhraseVector pv = embed::phrase_vector(phrases_[id], *table);
      for (int d = 0; d < table->dim(); ++d) temp_centroid[d] += count * pv.values[d];
    }
  }

  const double tau = params_.sim_threshold;
  const double idf_floor =
      std::max(1.0, smoothed_idf(max_doc_freq_ * now_fade_, now_docs_));

  uint32_t best_slot = 0;
  double best_sim = 0;
  bool have_best = false;
  auto consider = [&](uint32_t s, double sim) {
    const Slot& slot = slots_[s];
    if (!have_best || sim > best_sim + kSimilarityTolerance ||
        (std::abs(sim - best_sim) <= kSimilarityTolerance && slot.id < slots_[best_slot].id)) {
      best_slot = s;
      best_sim = sim;
      have_best = true;
    }
  };
  // Exact TF-IDF cosine against one cluster; when `prune` is set, returns
  // nullopt as soon as an upper bound shows the threshold is out of reach.
  auto tfidf_cosine = [&](const Slot& slot, bool prune) -> std::optional<double> {
    double dot = 0, shared_raw = 0, shared_weighted = 0;
    for (const TempTerm& t : weighted) {
      auto it = slot.terms.find(t.id);
      if (it == slot.terms.end()) continue;
      double idf = idf_now(t.id);
      double cv = it->second * idf;
      dot += t.value * cv;
      shared_raw += it->second * it->second;
      shared_weighted += cv * cv;
    }
    if (prune) {
      double rest = std::max(0.0, slot.term_sq - shared_raw);
      double lower_sq = shared_weighted + rest * idf_floor * idf_floor;
      if (lower_sq > 0 && dot / (temp_norm * std::sqrt(lower_sq)) < tau - 1e-9) return std::nullopt;
    }
    double norm_sq = 0;
    for (const auto& [term, w] : slot.terms) {
      double cv = w * idf_now(term);
      norm_sq += cv * cv;
    }
    if (norm_sq <= 0 || temp_norm <= 0) return 0.0;
    return dot / (temp_norm * std::sqrt(norm_sq));
  };

  if (live_ > 0) {
    if (blend || tau <= kSimilarityTolerance) {
      for (uint32_t s = 0; s < slots_.size(); ++s) {
        const Slot& slot = slots_[s];
        if (!slot.alive) continue;
        double sim = *tfidf_cosine(slot, false);
        if (blend) {
          double emb = slot.centroid.empty() ? 0.0 : embed::dense_cosine(temp_centroid, slot.centroid);
          sim = params_.alpha * sim + (1.0 - params_.alpha) * emb;
        }
        consider(s, sim);
      }
    } else {
      // Prefix filtering: a cluster sharing only phrases from a suffix whose
      // squared mass is below tau^2 |t|^2 cannot reach tau, so postings are
      // scanned only for the heavy prefix.
      std::vector<double> suffix(weighted.size() + 1, 0.0);
      for (size_t j = weighted.size(); j-- > 0;) {
        suffix[j] = suffix[j + 1] + weighted[j].value * weighted[j].value;
      }
      const double stop = (tau - 1e-9) * (tau - 1e-9) * temp_sq;
      std::vector<uint32_t> candidates;
      for (size_t j = 0; j < weighted.size(); ++j) {
        if (suffix[j] < stop) break;
        std::vector<uint32_t>& posting = postings_[weighted[j].id];
        for (size_t k = 0; k < posting.size();) {
          uint32_t s = posting[k];
          if (!slots_[s].alive) {
            posting[k] = posting.back();
            posting.pop_back();
            continue;
          }
          if (seen_epoch_[s] != epoch_) {
            seen_epoch_[s] = epoch_;
            candidates.push_back(s);
          }
          ++k;
        }
      }
      std::sort(candidates.begin(), candidates.end());
      for (uint32_t s : candidates) {
        if (auto sim = tfidf_cosine(slots_[s], true)) consider(s, *sim);
      }
    }
  }

  Assignment result;
  if (have_best && best_sim >= tau - kSimilarityTolerance) {
    Slot& slot = slots_[best_slot];
    for (auto [id, count] : temp) {
      auto [it, fresh] = slot.terms.try_emplace(id, 0.0);
      double before = it->second;
      it->second += scale * count;
      slot.term_sq += it->second * it->second - before * before;
      if (fresh) postings_[id].push_back(best_slot);
    }
    slot.weight += scale;
    slot.raw_count += 1;
    slot.last_update = ts;
    if (blend) {
      if (slot.centroid.empty()) slot.centroid.assign(temp_centroid.size(), 0.0);
      for (size_t d = 0; d < temp_centroid.size(); ++d) slot.centroid[d] += scale * temp_centroid[d];
    }
    result = {Assignment::Outcome::kMerged, slot.id, best_sim};
  } else {
    uint32_t s = static_cast<uint32_t>(slots_.size());
    Slot slot;
    slot.id = next_id_++;
    slot.weight = scale;
    slot.raw_count = 1;
    slot.created = slot.last_update = ts;
    slot.terms.reserve(temp.size());
    for (auto [id, count] : temp) {
      double w = scale * count;
      slot.terms.emplace(id, w);
      slot.term_sq += w * w;
      postings_[id].push_back(s);
    }
    if (blend) {
      slot.centroid = temp_centroid;
      for (double& c : slot.centroid) c *= scale;
    }
    slots_.push_back(std::move(slot));
    seen_epoch_.push_back(0);
    ++live_;
    push_cluster_expiry(s);
    result = {Assignment::Outcome::kCreated, slots_[s].id, have_best ? best_sim : 0.0};
  }

  for (auto [id, count] : temp) {
    bool fresh = doc_freq_[id] <= 0;
    doc_freq_[id] += scale;
    max_doc_freq_ = std::max(max_doc_freq_, doc_freq_[id]);
    if (fresh) push_term_expiry(id);
  }
  n_docs_ += scale;

  ++insertions_;
  if (insertions_ % params_.t_gap == 0) cleanup(ts);
  return result;
}

ModelSnapshot ClusterModel::snapshot(Timestamp ts) const {
  if (clock_ && ts < *clock_) throw DataError("snapshot time precedes model clock");
  ModelSnapshot snap;
  snap.ts = ts;
  snap.pruned_raw_count = pruned_raw_;
  if (!landmark_) return snap;
  const double fade = 1.0 / scale_at(ts);
  snap.n_docs = n_docs_ * fade;
  for (uint32_t t = 0; t < phrases_.size(); ++t) {
    if (doc_freq_[t] > 0) snap.doc_freq.emplace(phrases_[t], doc_freq_[t] * fade);
  }
  for (const Slot& slot : slots_) {
    if (!slot.alive) continue;
    ClusterSummary summary;
    summary.cluster_id = slot.id;
    summary.weight = slot.weight * fade;
    summary.raw_count = slot.raw_count;
    summary.created = slot.created;
    summary.last_update = slot.last_update;
    summary.terms.reserve(slot.terms.size());
    for (const auto& [term, w] : slot.terms) summary.terms.emplace_back(phrases_[term], w * fade);
    std::sort(summary.terms.begin(), summary.terms.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    snap.clusters.push_back(std::move(summary));
  }
  return snap;
}

ModelSnapshot ClusterModel::snapshot() const {
  return snapshot(clock_.value_or(Timestamp{}));
}

void ClusterModel::reset() {
  landmark_.reset();
  insertions_ = 0;
  pruned_raw_ = 0;
  live_ = 0;
  dictionary_.clear();
  phrases_.clear();
  doc_freq_.clear();
  postings_.clear();
  n_docs_ = 0;
  max_doc_freq_ = 0;
  slots_.clear();
  cluster_expiry_.clear();
  term_expiry_.clear();
  idf_epoch_.clear();
  idf_cache_.clear();
  seen_epoch_.clear();
}

void ClusterModel::start_window() {
  for (Slot& slot : slots_) slot.raw_count = 0;
  pruned_raw_ = 0;
}

}  // namespace emergent::cluster
