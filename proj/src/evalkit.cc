#include "emergent/evalkit.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emergent/kbgate.h"
#include "json.hpp"

namespace emergent::eval {

using nlohmann::json;

std::optional<double> acc_nl(const EvalCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw ConfigError("evaluation counts must be non-negative");
  int64_t denom = c.tp + c.fp + c.fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

EvalCounts match_entities(const std::set<std::string>& predicted, const std::set<std::string>& gold,
                          const MatchMode& mode) {
  EvalCounts c;
  if (mode.kind == MatchMode::Kind::kExact) {
    for (const std::string& p : predicted) {
      if (gold.count(p)) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    }
    c.fn = static_cast<int64_t>(gold.size()) - c.tp;
    return c;
  }

  if (mode.table == nullptr) throw ConfigError("semantic matching requires an embedding table");
  struct Pair {
    double sim;
    const std::string* pred;
    const std::string* gold;
  };
  std::vector<Pair> pairs;
  for (const std::string& p : predicted) {
    for (const std::string& g : gold) {
      double sim = p == g ? 1.0 : embed::semantic_similarity(p, g, *mode.table);
      if (sim >= mode.theta) pairs.push_back({sim, &p, &g});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (*a.pred != *b.pred) return *a.pred < *b.pred;
    return *a.gold < *b.gold;
  });
  std::set<const std::string*> used_pred, used_gold;
  for (const Pair& pair : pairs) {
    if (used_pred.count(pair.pred) || used_gold.count(pair.gold)) continue;
    used_pred.insert(pair.pred);
    used_gold.insert(pair.gold);
    ++c.tp;
  }
  c.fp = static_cast<int64_t>(predicted.size()) - c.tp;
  c.fn = static_cast<int64_t>(gold.size()) - c.tp;
  return c;
}

namespace {

Timestamp require_time(const json& obj, const char* key, int64_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing \"") + key + "\"", line);
  if (it->is_number_integer()) return from_epoch_seconds(it->get<int64_t>());
  if (it->is_string()) {
    if (auto ts = parse_rfc3339(it->get<std::string>())) return *ts;
  }
  throw DataError(std::string("bad timestamp in \"") + key + "\"", line);
}

}  // namespace

EntityLists read_entity_stream(std::istream& in) {
  EntityLists out;
  std::string line;
  int64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) throw DataError("malformed JSON", line_number);
    if (obj.contains("metadata") || obj.contains("summary")) continue;
    if (auto w = obj.find("window"); w != obj.end()) {
      if (w->is_object() && w->contains("start") && w->contains("end")) {
        WindowKey key{require_time(*w, "start", line_number), require_time(*w, "end", line_number)};
        out.try_emplace(key);
      }
      continue;
    }
    WindowKey key{require_time(obj, "window_start", line_number),
                  require_time(obj, "window_end", line_number)};
    auto& entities = out[key];
    if (auto phrase = obj.find("phrase"); phrase != obj.end()) {
      if (!phrase->is_string()) throw DataError("\"phrase\" must be a string", line_number);
      std::string normalized = kb::normalize_title(phrase->get<std::string>());
      if (!normalized.empty()) entities.insert(normalized);
    } else if (auto list = obj.find("entities"); list != obj.end()) {
      if (!list->is_array()) throw DataError("\"entities\" must be a list", line_number);
      for (const json& e : *list) {
        if (!e.is_string()) throw DataError("entity must be a string", line_number);
        std::string normalized = kb::normalize_title(e.get<std::string>());
        if (!normalized.empty()) entities.insert(normalized);
      }
    } else {
      throw DataError("line has neither \"phrase\" nor \"entities\"", line_number);
    }
  }
  return out;
}

EntityLists read_entity_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return read_entity_stream(in);
  } catch (const DataError& err) {
    throw DataError(path + ": " + err.what());
  }
}

std::vector<ComparisonRow> compare_runs(const EntityLists& ours, const EntityLists& baseline,
                                        const EntityLists& gold, const MatchMode& mode) {
  std::set<WindowKey> windows;
  for (const EntityLists* lists : {&ours, &baseline, &gold}) {
    for (const auto& [key, _] : *lists) windows.insert(key);
  }
  std::vector<WindowKey> all(windows.begin(), windows.end());
  std::string conflicts;
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size() && all[j].start < all[i].end; ++j) {
      if (all[i].overlaps(all[j])) {
        conflicts += " [" + format_rfc3339(all[i].start) + ", " + format_rfc3339(all[i].end) +
                     ") vs [" + format_rfc3339(all[j].start) + ", " + format_rfc3339(all[j].end) + ")";
      }
    }
  }
  if (!conflicts.empty()) throw DataError("misaligned windows:" + conflicts);

  static const std::set<std::string> kEmpty;
  auto lookup = [&](const EntityLists& lists, const WindowKey& key) -> const std::set<std::string>& {
    auto it = lists.find(key);
    return it == lists.end() ? kEmpty : it->second;
  };
  std::vector<ComparisonRow> rows;
  for (const WindowKey& key : all) {
    ComparisonRow row;
    row.id = static_cast<int64_t>(rows.size()) + 1;
    row.window = key;
    const auto& g = lookup(gold, key);
    const auto& o = lookup(ours, key);
    const auto& b = lookup(baseline, key);
    row.ours_found = static_cast<int64_t>(o.size());
    row.baseline_found = static_cast<int64_t>(b.size());
    row.ours = match_entities(o, g, mode);
    row.baseline = match_entities(b, g, mode);
    row.ours_acc = acc_nl(row.ours);
    row.baseline_acc = acc_nl(row.baseline);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string format_acc(const std::optional<double>& acc) {
  if (!acc) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *acc);
  return buf;
}

json acc_json(const std::optional<double>& acc) { return acc ? json(*acc) : json(nullptr); }

}  // namespace

std::string to_tsv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "id\twindow_start\twindow_end\tbaseline_found\tours_found\tours_tp\tours_fp\tours_fn"
         "\tours_acc_nl\tbaseline_acc_nl\n";
  for (const ComparisonRow& r : rows) {
    out << r.id << '\t' << format_rfc3339(r.window.start) << '\t' << format_rfc3339(r.window.end)
        << '\t' << r.baseline_found << '\t' << r.ours_found << '\t' << r.ours.tp << '\t'
        << r.ours.fp << '\t' << r.ours.fn << '\t' << format_acc(r.ours_acc) << '\t'
        << format_acc(r.baseline_acc) << '\n';
  }
  return out.str();
}

std::string to_json(const std::vector<ComparisonRow>& rows, const MatchMode& mode) {
  json doc;
  doc["match"] = {{"mode", mode.kind == MatchMode::Kind::kExact ? "exact" : "semantic"}};
  if (mode.kind == MatchMode::Kind::kSemantic) doc["match"]["theta"] = mode.theta;
  doc["rows"] = json::array();
  for (const ComparisonRow& r : rows) {
    doc["rows"].push_back({
        {"id", r.id},
        {"window_start", format_rfc3339(r.window.start)},
        {"window_end", format_rfc3339(r.window.end)},
        {"baseline_found", r.baseline_found},
        {"ours_found", r.ours_found},
        {"ours", {{"tp", r.ours.tp}, {"fp", r.ours.fp}, {"fn", r.ours.fn}, {"acc_nl", acc_json(r.ours_acc)}}},
        {"baseline",
         {{"tp", r.baseline.tp}, {"fp", r.baseline.fp}, {"fn", r.baseline.fn},
          {"acc_nl", acc_json(r.baseline_acc)}}},
    });
  }
  return doc.dump(2);
}

}  // namespace emergent::eval
