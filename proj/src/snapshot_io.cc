#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emergent/pipeline.h"

namespace emergent::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "emergent-snapshot";

Timestamp ts_field(const json& j, const char* key) {
  auto ts = parse_rfc3339(j.at(key).get<std::string>());
  if (!ts) throw DataError(std::string("snapshot: bad timestamp in ") + key);
  return *ts;
}

}  // namespace

void write_snapshot(const SnapshotFile& file, std::ostream& out) {
  const auto& s = file.snapshot;
  json clusters = json::array();
  for (const auto& c : s.clusters) {
    json terms = json::array();
    for (const auto& [phrase, w] : c.terms) terms.push_back({phrase, w});
    clusters.push_back({{"id", c.cluster_id},
                        {"weight", c.weight},
                        {"raw_count", c.raw_count},
                        {"created", format_rfc3339(c.created)},
                        {"last_update", format_rfc3339(c.last_update)},
                        {"terms", terms}});
  }
  // Sorted so equal snapshots serialize identically.
  std::vector<std::pair<std::string, double>> df(s.doc_freq.begin(), s.doc_freq.end());
  std::sort(df.begin(), df.end());
  json doc_freq = json::array();
  for (const auto& [phrase, v] : df) doc_freq.push_back({phrase, v});
  json doc = {{"format", kFormat},
              {"version", kSnapshotVersion},
              {"window",
               {{"index", file.window.index},
                {"start", format_rfc3339(file.window.start)},
                {"end", format_rfc3339(file.window.end)},
                {"records", file.window.records}}},
              {"ts", format_rfc3339(s.ts)},
              {"n_docs", s.n_docs},
              {"pruned_raw_count", s.pruned_raw_count},
              {"doc_freq", doc_freq},
              {"clusters", clusters}};
  out << doc.dump() << '\n';
  if (!out) throw IoError("failed writing snapshot");
}

void write_snapshot(const SnapshotFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write snapshot " + path);
  write_snapshot(file, out);
}

SnapshotFile read_snapshot(std::istream& in) {
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw DataError("snapshot is not a JSON object");
  if (doc.value("format", "") != kFormat) throw DataError("not an emergent snapshot file");
  if (!doc.contains("version") || doc["version"] != kSnapshotVersion) {
    throw DataError("unsupported snapshot version " + (doc.contains("version") ? doc["version"].dump() : "?"));
  }
  SnapshotFile f;
  try {
    const json& w = doc.at("window");
    f.window.index = w.at("index").get<int64_t>();
    f.window.start = ts_field(w, "start");
    f.window.end = ts_field(w, "end");
    f.window.records = w.at("records").get<int64_t>();
    auto& s = f.snapshot;
    s.ts = ts_field(doc, "ts");
    s.n_docs = doc.at("n_docs").get<double>();
    s.pruned_raw_count = doc.at("pruned_raw_count").get<int64_t>();
    for (const json& e : doc.at("doc_freq")) s.doc_freq[e.at(0).get<std::string>()] = e.at(1).get<double>();
    for (const json& c : doc.at("clusters")) {
      cluster::ClusterSummary cs;
      cs.cluster_id = c.at("id").get<uint64_t>();
      cs.weight = c.at("weight").get<double>();
      cs.raw_count = c.at("raw_count").get<int64_t>();
      cs.created = ts_field(c, "created");
      cs.last_update = ts_field(c, "last_update");
      for (const json& t : c.at("terms")) cs.terms.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
      s.clusters.push_back(std::move(cs));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed snapshot: ") + e.what());
  }
  return f;
}

SnapshotFile read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot " + path);
  return read_snapshot(in);
}

std::string inspect_table(const SnapshotFile& file, size_t top_terms) {
  const auto& clusters = file.snapshot.clusters;
  std::vector<size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (clusters[a].raw_count != clusters[b].raw_count) return clusters[a].raw_count > clusters[b].raw_count;
    return clusters[a].cluster_id < clusters[b].cluster_id;
  });
  std::ostringstream out;
  out << "# window " << file.window.index << " [" << format_rfc3339(file.window.start) << ", "
      << format_rfc3339(file.window.end) << ") at " << format_rfc3339(file.snapshot.ts) << ", "
      << clusters.size() << " clusters\n";
  out << "id\tweight\traw_count\ttop_terms\n";
  char weight[32];
  for (size_t i : order) {
    const auto& c = clusters[i];
    std::snprintf(weight, sizeof weight, "%.6f", c.weight);
    out << c.cluster_id << '\t' << weight << '\t' << c.raw_count << '\t';
    auto top = c.top_terms(top_terms);
    for (size_t t = 0; t < top.size(); ++t) out << (t ? ", " : "") << top[t].first;
    out << '\n';
  }
  return out.str();
}

}  // namespace emergent::pipeline
