#include "emergent/macro.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "emergent/disjoint_set.h"

namespace emergent::macro {

namespace {

struct Entry {
  uint32_t term;
  double value;
};

}  // namespace

std::vector<MacroCluster> recluster(const cluster::ModelSnapshot& snapshot, double link_threshold) {
  const auto& micros = snapshot.clusters;
  const size_t n = micros.size();
  DisjointSet components(n);

  if (n > 1 && link_threshold <= cluster::kSimilarityTolerance) {
    for (size_t i = 1; i < n; ++i) components.unite(0, i);
  } else if (n > 1) {
    // Unit-normalized TF-IDF vectors over interned terms.
    std::unordered_map<std::string, uint32_t> ids;
    std::vector<std::vector<Entry>> by_term(n);
    std::vector<std::vector<Entry>> by_value(n);
    for (size_t i = 0; i < n; ++i) {
      std::vector<Entry>& v = by_term[i];
      double sq = 0;
      for (const auto& [phrase, tf] : micros[i].terms) {
        auto [it, fresh] = ids.try_emplace(phrase, static_cast<uint32_t>(ids.size()));
        auto df = snapshot.doc_freq.find(phrase);
        double value =
            tf * cluster::smoothed_idf(df == snapshot.doc_freq.end() ? 0.0 : df->second,
                                       snapshot.n_docs);
        v.push_back({it->second, value});
        sq += value * value;
      }
      double norm = std::sqrt(sq);
      if (norm > 0) {
        for (Entry& e : v) e.value /= norm;
      }
      by_value[i] = v;
      std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.term < b.term; });
      std::sort(by_value[i].begin(), by_value[i].end(), [](const Entry& a, const Entry& b) {
        return a.value != b.value ? a.value > b.value : a.term < b.term;
      });
    }

    std::vector<std::vector<uint32_t>> postings(ids.size());
    for (size_t i = 0; i < n; ++i) {
      for (const Entry& e : by_term[i]) postings[e.term].push_back(static_cast<uint32_t>(i));
    }

    auto dot = [&](size_t a, size_t b) {
      const auto& x = by_term[a];
      const auto& y = by_term[b];
      double sum = 0;
      size_t i = 0, j = 0;
      while (i < x.size() && j < y.size()) {
        if (x[i].term < y[j].term) {
          ++i;
        } else if (y[j].term < x[i].term) {
          ++j;
        } else {
          sum += x[i].value * y[j].value;
          ++i;
          ++j;
        }
      }
      return sum;
    };

    // A pair can only reach the threshold if it shares a term from the heavy
    // prefix of the first vector (the remaining mass is below threshold^2).
    const double stop = (link_threshold - 1e-9) * (link_threshold - 1e-9);
    std::vector<size_t> seen(n, SIZE_MAX);
    for (size_t i = 0; i < n; ++i) {
      const auto& v = by_value[i];
      std::vector<double> suffix(v.size() + 1, 0.0);
      for (size_t j = v.size(); j-- > 0;) suffix[j] = suffix[j + 1] + v[j].value * v[j].value;
      for (size_t j = 0; j < v.size() && suffix[j] >= stop; ++j) {
        for (uint32_t other : postings[v[j].term]) {
          if (other <= i || seen[other] == i) continue;
          seen[other] = i;
          if (components.find(i) == components.find(other)) continue;
          if (dot(i, other) >= link_threshold - cluster::kSimilarityTolerance) {
            components.unite(i, other);
          }
        }
      }
    }
  }

  // Visiting micro-clusters by ascending id makes first appearance of a
  // component its smallest-member order.
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return micros[a].cluster_id < micros[b].cluster_id; });
  std::map<size_t, size_t> root_to_macro;
  std::vector<MacroCluster> macros;
  for (size_t i : order) {
    size_t root = components.find(i);
    auto [it, fresh] = root_to_macro.try_emplace(root, macros.size());
    if (fresh) {
      MacroCluster m;
      m.macro_id = static_cast<int64_t>(macros.size());
      macros.push_back(std::move(m));
    }
    MacroCluster& m = macros[it->second];
    m.member_ids.push_back(micros[i].cluster_id);
    m.total_raw_count += micros[i].raw_count;
    for (const auto& [phrase, w] : micros[i].terms) m.merged_term_weights[phrase] += w;
  }
  return macros;
}

std::vector<MacroCluster> select(const std::vector<MacroCluster>& macros, int64_t min_tweets) {
  std::vector<MacroCluster> out;
  for (const MacroCluster& m : macros) {
    if (m.total_raw_count > min_tweets) out.push_back(m);
  }
  return out;
}

}  // namespace emergent::macro
