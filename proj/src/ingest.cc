#include "emergent/ingest.h"

#include <algorithm>
#include <queue>
#include <unordered_set>

#include "json.hpp"

namespace emergent::ingest {

using nlohmann::json;

void WindowConfig::validate() const {
  if (duration.count() <= 0) throw ConfigError("window duration must be positive");
}

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

const std::string& require_string(const json& obj, const char* key, int64_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_string()) throw DataError(std::string("field \"") + key + "\" must be a string", line);
  return it->get_ref<const std::string&>();
}

}  // namespace

TweetRecord parse_tweet_line(std::string_view line, int64_t line_number) {
  json obj = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) throw DataError("malformed JSON", line_number);
  if (!obj.is_object()) throw DataError("record is not a JSON object", line_number);

  TweetRecord rec;
  rec.id = require_string(obj, "id", line_number);
  if (rec.id.empty()) throw DataError("empty id", line_number);
  rec.text = require_string(obj, "text", line_number);
  if (is_blank(rec.text)) throw DataError("empty text", line_number);

  auto ts = obj.find("ts");
  if (ts == obj.end()) throw DataError("missing field \"ts\"", line_number);
  if (ts->is_number_integer()) {
    rec.ts = from_epoch_seconds(ts->get<int64_t>());
  } else if (ts->is_string()) {
    auto parsed = parse_rfc3339(ts->get_ref<const std::string&>());
    if (!parsed) throw DataError("unparseable timestamp \"" + ts->get<std::string>() + "\"", line_number);
    rec.ts = *parsed;
  } else {
    throw DataError("field \"ts\" must be an RFC 3339 string or integer epoch seconds", line_number);
  }
  return rec;
}

int64_t window_index(Timestamp ts, const WindowConfig& cfg) {
  if (!cfg.origin) throw ConfigError("window origin is not set");
  cfg.validate();
  if (ts < *cfg.origin) {
    throw DataError("timestamp " + format_rfc3339(ts) + " precedes window origin " +
                    format_rfc3339(*cfg.origin));
  }
  return (ts - *cfg.origin) / cfg.duration;
}

namespace {

// Shared replay state machine: validation, id uniqueness, bounded reordering
// and window-boundary events.
class Replayer {
 public:
  Replayer(const ReplayOptions& options, ReplaySink& sink) : options_(options), sink_(sink) {
    options_.window.validate();
    summary_.origin = options_.window.origin;
  }

  void reject(const DataError& err) {
    if (options_.strict) throw err;
    ++summary_.skipped;
    sink_.on_skip({err.line(), err.what()});
  }

  void offer(TweetRecord rec, int64_t line) {
    if (!seen_ids_.insert(rec.id).second) {
      reject(DataError("duplicate id \"" + rec.id + "\"", line));
      return;
    }
    if (last_delivered_ && rec.ts < *last_delivered_) {
      reject(DataError("record out of order beyond the reorder horizon", line));
      return;
    }
    if (summary_.origin && rec.ts < *summary_.origin) {
      reject(DataError("timestamp precedes window origin", line));
      return;
    }
    buffer_.push(Pending{std::move(rec), line, arrival_++});
    while (buffer_.size() > options_.reorder_buffer) pop_one();
  }

  ReplaySummary finish() {
    while (!buffer_.empty()) pop_one();
    if (current_window_) close_window();
    return summary_;
  }

 private:
  struct Pending {
    TweetRecord rec;
    int64_t line;
    uint64_t arrival;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.rec.ts != b.rec.ts) return a.rec.ts > b.rec.ts;
      return a.arrival > b.arrival;
    }
  };

  void pop_one() {
    Pending next = buffer_.top();
    buffer_.pop();
    deliver(next.rec, next.line);
  }

  void deliver(const TweetRecord& rec, int64_t line) {
    if (!summary_.origin) summary_.origin = floor_to_midnight(rec.ts);
    if (rec.ts < *summary_.origin) {
      reject(DataError("timestamp precedes window origin", line));
      return;
    }
    WindowConfig cfg = options_.window;
    cfg.origin = summary_.origin;
    int64_t w = window_index(rec.ts, cfg);
    if (current_window_ && w != *current_window_) {
      close_window();
      while (*current_window_ + 1 < w) {
        current_window_ = *current_window_ + 1;
        close_window();
      }
    }
    if (!current_window_ || w != *current_window_) {
      current_window_ = w;
      window_records_ = 0;
    }
    last_delivered_ = rec.ts;
    ++window_records_;
    ++summary_.processed;
    sink_.on_record(rec, w);
  }

  void close_window() {
    WindowInfo info;
    info.index = *current_window_;
    info.start = *summary_.origin + options_.window.duration * info.index;
    info.end = info.start + options_.window.duration;
    info.records = window_records_;
    window_records_ = 0;
    ++summary_.windows;
    sink_.on_window_close(info);
  }

  ReplayOptions options_;
  ReplaySink& sink_;
  ReplaySummary summary_;
  std::unordered_set<std::string> seen_ids_;
  std::priority_queue<Pending, std::vector<Pending>, Later> buffer_;
  std::optional<Timestamp> last_delivered_;
  std::optional<int64_t> current_window_;
  int64_t window_records_ = 0;
  uint64_t arrival_ = 0;
};

}  // namespace

ReplaySummary replay(std::istream& in, const ReplayOptions& options, ReplaySink& sink) {
  Replayer replayer(options, sink);
  std::string line;
  int64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (is_blank(line)) continue;
    TweetRecord rec;
    try {
      rec = parse_tweet_line(line, line_number);
    } catch (const DataError& err) {
      replayer.reject(err);
      continue;
    }
    replayer.offer(std::move(rec), line_number);
  }
  if (in.bad()) throw IoError("read error on input stream");
  return replayer.finish();
}

ReplaySummary replay(const std::vector<TweetRecord>& records, const ReplayOptions& options,
                     ReplaySink& sink) {
  Replayer replayer(options, sink);
  int64_t index = 0;
  for (const TweetRecord& rec : records) {
    ++index;
    if (rec.id.empty()) {
      replayer.reject(DataError("empty id", index));
      continue;
    }
    if (is_blank(rec.text)) {
      replayer.reject(DataError("empty text", index));
      continue;
    }
    replayer.offer(rec, index);
  }
  return replayer.finish();
}

}  // namespace emergent::ingest
