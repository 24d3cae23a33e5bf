// Knowledge-base registration checks. Candidates whose phrases are not
// registered become emerging entities.
//
// The offline index is built from an all-titles dump (one title per line,
// underscores for spaces). An optional live client asks a MediaWiki query API
// for exact titles when the offline index has no match.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "emergent/common.h"
#include "emergent/embed.h"

namespace emergent::kb {

// textnorm::normalize over the lower-cased string with underscores as spaces.
std::string normalize_title(std::string_view s);

class TitleIndex {
 public:
  TitleIndex() = default;

  void add(std::string_view title);  // normalized on insert; empty results skipped
  bool contains_normalized(const std::string& normalized) const {
    return titles_.count(normalized) != 0;
  }
  size_t size() const { return titles_.size(); }

  std::string source;
  std::optional<Timestamp> loaded_at;

 private:
  std::unordered_set<std::string> titles_;
};

struct LoadReport {
  int64_t lines = 0;
  int64_t invalid_utf8 = 0;
  std::vector<int64_t> invalid_lines;  // first few offending line numbers
};

// Reads a titles dump. Lines of the form "<namespace>\t<title>" keep the
// title column; a leading "page_title" header line is ignored.
TitleIndex load_titles(const std::string& path, LoadReport* report = nullptr);

// Exact-title existence lookups against a remote knowledge base.
class TitleLookup {
 public:
  virtual ~TitleLookup() = default;
  // Returns a verdict for every requested title. Throws IoError on transport
  // failure or a malformed reply.
  virtual std::map<std::string, bool> lookup(const std::vector<std::string>& titles) = 0;
};

// MediaWiki action=query client: one request per batch of up to 50 titles,
// retried with exponential backoff. A title that resolves through a redirect
// counts as registered.
class MediaWikiClient : public TitleLookup {
 public:
  struct Options {
    int max_batch = 50;
    int retries = 3;
    int backoff_ms = 200;
    int timeout_s = 10;
    std::string user_agent = "emergent/1.0 (entity discovery research tool)";
  };

  explicit MediaWikiClient(std::string endpoint);
  MediaWikiClient(std::string endpoint, Options options);

  std::map<std::string, bool> lookup(const std::vector<std::string>& titles) override;

  int64_t requests_sent() const { return requests_; }

 private:
  std::map<std::string, bool> lookup_batch(const std::vector<std::string>& titles);

  std::string base_;
  std::string path_;
  Options options_;
  int64_t requests_ = 0;
};

// Parses one action=query reply (formatversion 1 or 2) into verdicts for the
// requested titles. Throws IoError when the reply is not a query result.
std::map<std::string, bool> parse_query_reply(const std::string& body,
                                              const std::vector<std::string>& requested);

// Live answers keyed by normalized phrase, optionally persisted as a JSON
// object {phrase: bool}.
class LiveCache {
 public:
  LiveCache() = default;
  LiveCache(LiveCache&& other) noexcept {
    std::lock_guard lock(other.mu_);
    entries_ = std::move(other.entries_);
  }

  std::optional<bool> get(const std::string& phrase) const;
  void put(const std::string& phrase, bool registered);
  size_t size() const;

  void load(const std::string& path);  // missing file is an empty cache
  void save(const std::string& path) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, bool> entries_;
};

enum class Provenance { kOffline, kLive, kOfflineFallback };
std::string_view provenance_name(Provenance p);

struct Verdict {
  bool registered = false;
  Provenance provenance = Provenance::kOffline;
};

// Remote side of the gate: a lookup client and/or a cache of earlier answers.
struct LiveContext {
  TitleLookup* client = nullptr;
  LiveCache* cache = nullptr;
};

Verdict is_registered(std::string_view phrase, const TitleIndex& index,
                      const LiveContext& live = {});

struct EmergingEntity {
  std::string phrase;
  double score = 0;
  int64_t window_id = 0;
  int64_t macro_id = 0;
  std::vector<std::string> group_members;
  Timestamp kb_checked_at;
  Provenance provenance = Provenance::kOffline;
};

// One decision per group: emerging iff no member phrase is registered.
// Live lookups are batched over all members first. Order is preserved.
std::vector<EmergingEntity> gate(const std::vector<embed::PhraseGroup>& groups,
                                 const TitleIndex& index, const LiveContext& live,
                                 Timestamp checked_at, int64_t window_id);

}  // namespace emergent::kb
