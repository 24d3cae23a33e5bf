// Acc^nl = TP / (TP + FP + FN) over predicted vs gold emerging entities, and
// per-window comparison of two systems against the same gold.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emergent/common.h"
#include "emergent/embed.h"

namespace emergent::eval {

struct EvalCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  bool operator==(const EvalCounts&) const = default;
};

// nullopt when all counts are zero (the metric is not applicable).
std::optional<double> acc_nl(const EvalCounts& c);

struct MatchMode {
  enum class Kind { kExact, kSemantic };
  Kind kind = Kind::kExact;
  double theta = 0.8;
  const embed::EmbeddingTable* table = nullptr;  // required for kSemantic
};

// Both sides must already be normalized with kb::normalize_title. Semantic
// mode greedily pairs predicted/gold phrases with similarity >= theta in
// descending similarity order (ties: predicted phrase, then gold phrase).
EvalCounts match_entities(const std::set<std::string>& predicted, const std::set<std::string>& gold,
                          const MatchMode& mode = {});

// A closed-open reporting interval.
struct WindowKey {
  Timestamp start;
  Timestamp end;

  auto operator<=>(const WindowKey&) const = default;
  bool overlaps(const WindowKey& o) const { return start < o.end && o.start < end; }
};

// Normalized entity phrases per window.
using EntityLists = std::map<WindowKey, std::set<std::string>>;

// Reads entity JSONL: lines with "window_start", "window_end" and either
// "phrase" (one entity per line, as written by `run`) or "entities" (a list,
// as in gold files). Lines carrying "metadata", "window" or "summary" keys are
// skipped; "window" lines still register the window as present. Phrases are
// normalized with kb::normalize_title.
EntityLists read_entity_file(const std::string& path);
EntityLists read_entity_stream(std::istream& in);

struct ComparisonRow {
  int64_t id = 0;  // 1-based row number
  WindowKey window;
  int64_t baseline_found = 0;
  int64_t ours_found = 0;
  EvalCounts ours;
  EvalCounts baseline;
  std::optional<double> ours_acc;
  std::optional<double> baseline_acc;
};

// One row per window present in any input. Windows that overlap without being
// identical raise DataError naming them. A window missing from one input is
// treated as empty there.
std::vector<ComparisonRow> compare_runs(const EntityLists& ours, const EntityLists& baseline,
                                        const EntityLists& gold, const MatchMode& mode = {});

std::string to_tsv(const std::vector<ComparisonRow>& rows);
// JSON document {"match": ..., "rows": [...]}.
std::string to_json(const std::vector<ComparisonRow>& rows, const MatchMode& mode);

}  // namespace emergent::eval
