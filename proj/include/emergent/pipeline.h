// End-to-end orchestration: replay -> normalize -> n-grams -> online
// insert, then at every window close snapshot -> recluster -> select ->
// top phrases -> grouping -> KB gate -> report lines.
#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "emergent/cluster.h"
#include "emergent/embed.h"
#include "emergent/ingest.h"
#include "emergent/kbgate.h"
#include "emergent/keyphrase.h"
#include "emergent/macro.h"
#include "emergent/textnorm.h"
#include "json.hpp"

namespace emergent::pipeline {

struct RunConfig {
  ingest::ReplayOptions replay;
  textnorm::NGramConfig ngram;
  std::string stopwords;  // path, empty = none
  cluster::ClusterParams cluster;
  double link_threshold = 0.5;
  int64_t min_cluster_tweets = 10000;
  keyphrase::KeyphraseOptions keyphrase;
  double group_theta = 0.8;
  std::string kb_titles;
  std::string kb_endpoint;
  std::string kb_cache;
  std::string vectors;
  std::string dump_snapshots;  // directory, empty = off

  void validate() const;

  nlohmann::json to_json() const;
  // Missing keys keep the defaults; unknown keys are a ConfigError.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::string& path);
};

// Files and clients a run depends on, loaded once.
struct Resources {
  textnorm::StopwordSet stopwords;
  kb::TitleIndex titles;
  std::optional<embed::EmbeddingTable> vectors;
  std::unique_ptr<kb::MediaWikiClient> client;
  kb::LiveCache cache;
  nlohmann::json digests = nlohmann::json::object();  // input name -> {path, sha256}

  kb::LiveContext live();
  static Resources load(const RunConfig& cfg);
};

struct WindowResult {
  ingest::WindowInfo info;
  size_t micro_clusters = 0;
  size_t macro_clusters = 0;
  size_t selected = 0;
  size_t candidates = 0;
  std::vector<kb::EmergingEntity> entities;
  cluster::ModelSnapshot snapshot;
};

// Per-window processing on top of the online model.
class Engine {
 public:
  Engine(const RunConfig& cfg, Resources& resources);

  void add(const ingest::TweetRecord& record);
  // Runs the offline stages for the window that just closed, then resets the
  // model (or only its raw counts when carrying state).
  WindowResult close_window(const ingest::WindowInfo& info);

  const cluster::ClusterModel& model() const { return model_; }

 private:
  const RunConfig& cfg_;
  Resources& res_;
  cluster::ClusterModel model_;
};

struct RunSummary {
  ingest::ReplaySummary replay;
  int64_t entities = 0;
  std::string stream_sha256;
};

nlohmann::json entity_line(const kb::EmergingEntity& e, const ingest::WindowInfo& w);

// Streams the report: metadata header, then per window a summary line and
// its entity lines (flushed at window close), then a trailing summary line.
// `stream_path` is recorded in the metadata; "-" denotes standard input.
RunSummary run(const RunConfig& cfg, Resources& resources, std::istream& stream,
               const std::string& stream_path, std::ostream& report);

// SHA-256 of a file, lower-case hex.
std::string file_sha256(const std::string& path);

// Snapshot dumps (see snapshot_io.cc).
struct SnapshotFile {
  ingest::WindowInfo window;
  cluster::ModelSnapshot snapshot;
};

inline constexpr int kSnapshotVersion = 1;

void write_snapshot(const SnapshotFile& file, std::ostream& out);
void write_snapshot(const SnapshotFile& file, const std::string& path);
SnapshotFile read_snapshot(std::istream& in);
SnapshotFile read_snapshot(const std::string& path);

// Text table of the snapshot's clusters by raw_count descending (ties by id).
std::string inspect_table(const SnapshotFile& file, size_t top_terms = 5);

}  // namespace emergent::pipeline
