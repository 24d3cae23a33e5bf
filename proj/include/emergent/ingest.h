// Tweet records, window arithmetic and ordered replay of a JSONL stream.
#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emergent/common.h"

namespace emergent::ingest {

// One stream item: the (id, text, timestamp) triple.
struct TweetRecord {
  std::string id;
  std::string text;
  Timestamp ts;

  bool operator==(const TweetRecord&) const = default;
};

struct WindowConfig {
  // Start of window 0. Unset means "midnight UTC of the first record".
  std::optional<Timestamp> origin;
  Seconds duration{4 * 24 * 3600};
  // Keep the online model across window boundaries instead of resetting it.
  bool carry_state = false;

  void validate() const;
};

// Parses one JSONL line holding string fields "id", "text" and "ts" (RFC 3339
// string or integer epoch seconds). Unknown fields are ignored. Throws
// DataError tagged with line_number.
TweetRecord parse_tweet_line(std::string_view line, int64_t line_number = 0);

// floor((ts - origin) / duration). Requires cfg.origin; throws DataError when
// ts precedes the origin.
int64_t window_index(Timestamp ts, const WindowConfig& cfg);

struct WindowInfo {
  int64_t index = 0;
  Timestamp start;
  Timestamp end;  // exclusive
  int64_t records = 0;
};

struct ReplayOptions {
  WindowConfig window;
  // Data errors abort the replay instead of being counted and skipped.
  bool strict = false;
  // Number of records held back to absorb small timestamp disorder.
  size_t reorder_buffer = 0;
};

struct ReplaySummary {
  int64_t processed = 0;
  int64_t skipped = 0;
  int64_t windows = 0;
  // Origin in effect (resolved from the first record when not configured).
  std::optional<Timestamp> origin;

  bool operator==(const ReplaySummary&) const = default;
};

// A skipped record, reported through ReplaySink::on_skip.
struct Diagnostic {
  int64_t line = 0;
  std::string message;
};

class ReplaySink {
 public:
  virtual ~ReplaySink() = default;
  virtual void on_record(const TweetRecord& record, int64_t window) = 0;
  // Fires once per window, in order, including empty windows between
  // populated ones and the final window at end of stream.
  virtual void on_window_close(const WindowInfo& window) = 0;
  virtual void on_skip(const Diagnostic&) {}
};

// Replays JSONL lines from `in`. Blank lines are ignored.
ReplaySummary replay(std::istream& in, const ReplayOptions& options, ReplaySink& sink);

// Replays already-parsed records (still validated, deduplicated and ordered).
ReplaySummary replay(const std::vector<TweetRecord>& records, const ReplayOptions& options,
                     ReplaySink& sink);

}  // namespace emergent::ingest
