#include "emergent/kbgate.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "emergent/textnorm.h"
#include "httplib.h"
#include "json.hpp"

namespace emergent::kb {

using nlohmann::json;

std::string normalize_title(std::string_view s) {
  return textnorm::normalize(textnorm::to_lower(textnorm::normalize(s)));
}

void TitleIndex::add(std::string_view title) {
  std::string normalized = normalize_title(title);
  if (!normalized.empty()) titles_.insert(std::move(normalized));
}

TitleIndex load_titles(const std::string& path, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open titles file " + path);
  TitleIndex index;
  index.source = path;
  index.loaded_at = std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
  LoadReport local;
  LoadReport& r = report ? *report : local;
  std::string line;
  while (std::getline(in, line)) {
    ++r.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!textnorm::is_valid_utf8(line)) {
      ++r.invalid_utf8;
      if (r.invalid_lines.size() < 10) r.invalid_lines.push_back(r.lines);
      continue;
    }
    std::string_view title = line;
    if (auto tab = title.rfind('\t'); tab != std::string_view::npos) title = title.substr(tab + 1);
    if (r.lines == 1 && title == "page_title") continue;
    index.add(title);
  }
  return index;
}

MediaWikiClient::MediaWikiClient(std::string endpoint) : MediaWikiClient(std::move(endpoint), Options()) {}

MediaWikiClient::MediaWikiClient(std::string endpoint, Options options) : options_(std::move(options)) {
  auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("KB endpoint must be an http(s) URL: " + endpoint);
  auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/w/api.php" : endpoint.substr(slash);
  if (options_.max_batch < 1 || options_.max_batch > 50) options_.max_batch = 50;
}

std::map<std::string, bool> parse_query_reply(const std::string& body,
                                              const std::vector<std::string>& requested) {
  json reply = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (reply.is_discarded() || !reply.is_object()) throw IoError("KB reply is not JSON");
  if (reply.contains("error")) throw IoError("KB reply carries an error: " + reply["error"].dump());
  auto query = reply.find("query");
  if (query == reply.end() || !query->is_object()) throw IoError("KB reply has no query object");

  auto pairs = [&](const char* key) {
    std::map<std::string, std::string> out;
    auto it = query->find(key);
    if (it == query->end()) return out;
    if (!it->is_array()) throw IoError(std::string("KB reply: ") + key + " is not a list");
    for (const json& e : *it) {
      if (!e.is_object() || !e.contains("from") || !e.contains("to") || !e["from"].is_string() ||
          !e["to"].is_string()) {
        throw IoError(std::string("KB reply: malformed ") + key + " entry");
      }
      out[e["from"].get<std::string>()] = e["to"].get<std::string>();
    }
    return out;
  };
  std::map<std::string, std::string> normalized = pairs("normalized");
  std::map<std::string, std::string> redirects = pairs("redirects");

  std::map<std::string, bool> exists;
  auto pages = query->find("pages");
  auto record = [&](const json& page) {
    if (!page.is_object() || !page.contains("title") || !page["title"].is_string()) {
      throw IoError("KB reply: page without title");
    }
    bool missing = page.contains("missing") && page["missing"] != false;
    bool invalid = page.contains("invalid") && page["invalid"] != false;
    exists[page["title"].get<std::string>()] = !missing && !invalid;
  };
  if (pages != query->end()) {
    if (pages->is_array()) {
      for (const json& page : *pages) record(page);
    } else if (pages->is_object()) {
      for (const auto& [id, page] : pages->items()) record(page);
    } else {
      throw IoError("KB reply: pages is neither list nor object");
    }
  }

  std::map<std::string, bool> out;
  for (const std::string& title : requested) {
    std::string t = title;
    if (auto it = normalized.find(t); it != normalized.end()) t = it->second;
    if (redirects.count(t)) {
      out[title] = true;
      continue;
    }
    auto page = exists.find(t);
    if (page == exists.end()) throw IoError("KB reply lacks title \"" + title + "\"");
    out[title] = page->second;
  }
  return out;
}

std::map<std::string, bool> MediaWikiClient::lookup_batch(const std::vector<std::string>& titles) {
  std::string joined;
  for (const std::string& t : titles) {
    if (!joined.empty()) joined.push_back('|');
    joined += t;
  }
  httplib::Params params{{"action", "query"}, {"format", "json"}, {"formatversion", "2"},
                         {"redirects", "1"},  {"titles", joined}};
  httplib::Headers headers{{"User-Agent", options_.user_agent}};
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
    }
    httplib::Client client(base_);
    client.set_connection_timeout(options_.timeout_s, 0);
    client.set_read_timeout(options_.timeout_s, 0);
    client.set_follow_location(true);
    ++requests_;
    auto res = client.Get(path_, params, headers);
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      return parse_query_reply(res->body, titles);
    } catch (const IoError& err) {
      last_error = err.what();
    }
  }
  throw IoError("KB lookup failed after " + std::to_string(options_.retries + 1) +
                " attempts: " + last_error);
}

std::map<std::string, bool> MediaWikiClient::lookup(const std::vector<std::string>& titles) {
  std::map<std::string, bool> out;
  for (size_t i = 0; i < titles.size(); i += options_.max_batch) {
    std::vector<std::string> batch(
        titles.begin() + static_cast<std::ptrdiff_t>(i),
        titles.begin() + static_cast<std::ptrdiff_t>(std::min(titles.size(), i + options_.max_batch)));
    out.merge(lookup_batch(batch));
  }
  return out;
}

std::optional<bool> LiveCache::get(const std::string& phrase) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(phrase);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LiveCache::put(const std::string& phrase, bool registered) {
  std::lock_guard lock(mu_);
  entries_[phrase] = registered;
}

size_t LiveCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void LiveCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  json data = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (data.is_discarded() || !data.is_object()) throw DataError("KB cache " + path + " is not a JSON object");
  std::lock_guard lock(mu_);
  for (const auto& [phrase, value] : data.items()) {
    if (!value.is_boolean()) throw DataError("KB cache entry \"" + phrase + "\" is not a boolean");
    entries_[phrase] = value.get<bool>();
  }
}

void LiveCache::save(const std::string& path) const {
  json data = json::object();
  {
    std::lock_guard lock(mu_);
    for (const auto& [phrase, value] : entries_) data[phrase] = value;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write KB cache " + path);
  out << data.dump(2) << '\n';
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kOffline:
      return "offline";
    case Provenance::kLive:
      return "live";
    case Provenance::kOfflineFallback:
      return "offline_fallback";
  }
  return "offline";
}

Verdict is_registered(std::string_view phrase, const TitleIndex& index, const LiveContext& live) {
  std::string key = normalize_title(phrase);
  if (index.contains_normalized(key)) return {true, Provenance::kOffline};
  if (live.cache) {
    if (auto cached = live.cache->get(key)) return {*cached, Provenance::kLive};
  }
  if (!live.client) return {false, Provenance::kOffline};
  try {
    auto answers = live.client->lookup({key});
    bool registered = answers.at(key);
    if (live.cache) live.cache->put(key, registered);
    return {registered, Provenance::kLive};
  } catch (const std::exception&) {
    return {false, Provenance::kOfflineFallback};
  }
}

std::vector<EmergingEntity> gate(const std::vector<embed::PhraseGroup>& groups,
                                 const TitleIndex& index, const LiveContext& live,
                                 Timestamp checked_at, int64_t window_id) {
  // Resolve every distinct member once; unresolved members go to the live
  // client in batches.
  std::map<std::string, Verdict> verdicts;
  std::vector<std::string> pending;
  for (const auto& group : groups) {
    for (const auto& member : group.members) {
      std::string key = normalize_title(member.phrase);
      if (verdicts.count(key)) continue;
      Verdict v;
      if (index.contains_normalized(key)) {
        v = {true, Provenance::kOffline};
      } else if (auto cached = live.cache ? live.cache->get(key) : std::nullopt) {
        v = {*cached, Provenance::kLive};
      } else if (live.client) {
        pending.push_back(key);
      }
      verdicts.emplace(key, v);
    }
  }
  if (!pending.empty()) {
    try {
      auto answers = live.client->lookup(pending);
      for (const std::string& key : pending) {
        bool registered = answers.at(key);
        if (live.cache) live.cache->put(key, registered);
        verdicts[key] = {registered, Provenance::kLive};
      }
    } catch (const std::exception&) {
      for (const std::string& key : pending) verdicts[key] = {false, Provenance::kOfflineFallback};
    }
  }

  std::vector<EmergingEntity> out;
  for (const auto& group : groups) {
    bool registered = false;
    Provenance provenance = Provenance::kOffline;
    std::vector<std::string> members;
    for (const auto& member : group.members) {
      const Verdict& v = verdicts.at(normalize_title(member.phrase));
      registered = registered || v.registered;
      if (v.provenance == Provenance::kOfflineFallback) {
        provenance = Provenance::kOfflineFallback;
      } else if (v.provenance == Provenance::kLive && provenance == Provenance::kOffline) {
        provenance = Provenance::kLive;
      }
      if (std::find(members.begin(), members.end(), member.phrase) == members.end()) {
        members.push_back(member.phrase);
      }
    }
    if (registered) continue;
    const auto& rep = group.members.front();
    EmergingEntity e;
    e.phrase = group.representative;
    e.score = rep.score;
    e.window_id = window_id;
    e.macro_id = rep.macro_id;
    e.group_members = std::move(members);
    e.kb_checked_at = checked_at;
    e.provenance = provenance;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace emergent::kb
