#include "emergent/pipeline.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <streambuf>

namespace emergent::pipeline {

using nlohmann::json;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

// Pulls the source one line at a time (so piped input is processed as it
// arrives) and hashes exactly the bytes handed on.
class DigestBuf : public std::streambuf {
 public:
  explicit DigestBuf(std::istream& src) : src_(src) {}
  std::string hex() { return sha_.hex(); }

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    if (!std::getline(src_, line_)) return traits_type::eof();
    if (!src_.eof()) line_.push_back('\n');
    sha_.update(line_.data(), line_.size());
    setg(line_.data(), line_.data(), line_.data() + line_.size());
    if (line_.empty()) return underflow();
    return traits_type::to_int_type(*gptr());
  }

 private:
  std::istream& src_;
  std::string line_;
  Sha256 sha_;
};

json digest_entry(const std::string& path) { return {{"path", path}, {"sha256", file_sha256(path)}}; }

std::string optional_ts(const std::optional<Timestamp>& ts) {
  return ts ? format_rfc3339(*ts) : std::string();
}

}  // namespace

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Sha256 sha;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    sha.update(buf.data(), static_cast<size_t>(in.gcount()));
  }
  return sha.hex();
}

void RunConfig::validate() const {
  replay.window.validate();
  ngram.validate();
  cluster.validate();
  keyphrase.validate();
  if (!(link_threshold >= 0 && link_threshold <= 1)) throw ConfigError("link threshold must lie in [0, 1]");
  if (min_cluster_tweets < 0) throw ConfigError("min cluster tweets must be non-negative");
  if (!(group_theta >= -1 && group_theta <= 1)) throw ConfigError("group theta must lie in [-1, 1]");
  if (!kb_cache.empty() && kb_endpoint.empty()) throw ConfigError("--kb-cache needs --kb-endpoint");
}

json RunConfig::to_json() const {
  json origin = replay.window.origin ? json(format_rfc3339(*replay.window.origin)) : json(nullptr);
  return {
      {"window_days", static_cast<double>(replay.window.duration.count()) / 86400.0},
      {"origin", origin},
      {"carry_state", replay.window.carry_state},
      {"strict", replay.strict},
      {"reorder_buffer", replay.reorder_buffer},
      {"n_min", ngram.n_min},
      {"n_max", ngram.n_max},
      {"stopwords", stopwords},
      {"lambda", cluster.lambda},
      {"sim_threshold", cluster.sim_threshold},
      {"alpha", cluster.alpha},
      {"t_gap", cluster.t_gap},
      {"w_min", cluster.w_min},
      {"link_threshold", link_threshold},
      {"min_cluster_tweets", min_cluster_tweets},
      {"top_k", keyphrase.k},
      {"collapse_subphrases", keyphrase.collapse_subphrases},
      {"subphrase_ratio", keyphrase.subphrase_ratio},
      {"group_theta", group_theta},
      {"kb_titles", kb_titles},
      {"kb_endpoint", kb_endpoint},
      {"kb_cache", kb_cache},
      {"vectors", vectors},
      {"dump_snapshots", dump_snapshots},
  };
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "window_days") {
        double days = v.get<double>();
        if (!(days > 0) || !std::isfinite(days)) throw ConfigError("window_days must be positive");
        cfg.replay.window.duration = Seconds{std::llround(days * 86400.0)};
      } else if (key == "origin") {
        if (v.is_null()) {
          cfg.replay.window.origin.reset();
        } else {
          auto ts = parse_rfc3339(v.get<std::string>());
          if (!ts) throw ConfigError("config origin is not an RFC 3339 timestamp");
          cfg.replay.window.origin = *ts;
        }
      } else if (key == "carry_state") {
        cfg.replay.window.carry_state = v.get<bool>();
      } else if (key == "strict") {
        cfg.replay.strict = v.get<bool>();
      } else if (key == "reorder_buffer") {
        cfg.replay.reorder_buffer = v.get<size_t>();
      } else if (key == "n_min") {
        cfg.ngram.n_min = v.get<int>();
      } else if (key == "n_max") {
        cfg.ngram.n_max = v.get<int>();
      } else if (key == "stopwords") {
        cfg.stopwords = v.get<std::string>();
      } else if (key == "lambda") {
        cfg.cluster.lambda = v.get<double>();
      } else if (key == "sim_threshold") {
        cfg.cluster.sim_threshold = v.get<double>();
      } else if (key == "alpha") {
        cfg.cluster.alpha = v.get<double>();
      } else if (key == "t_gap") {
        cfg.cluster.t_gap = v.get<int64_t>();
      } else if (key == "w_min") {
        cfg.cluster.w_min = v.get<double>();
      } else if (key == "link_threshold") {
        cfg.link_threshold = v.get<double>();
      } else if (key == "min_cluster_tweets") {
        cfg.min_cluster_tweets = v.get<int64_t>();
      } else if (key == "top_k") {
        cfg.keyphrase.k = v.get<int>();
      } else if (key == "collapse_subphrases") {
        cfg.keyphrase.collapse_subphrases = v.get<bool>();
      } else if (key == "subphrase_ratio") {
        cfg.keyphrase.subphrase_ratio = v.get<double>();
      } else if (key == "group_theta") {
        cfg.group_theta = v.get<double>();
      } else if (key == "kb_titles") {
        cfg.kb_titles = v.get<std::string>();
      } else if (key == "kb_endpoint") {
        cfg.kb_endpoint = v.get<std::string>();
      } else if (key == "kb_cache") {
        cfg.kb_cache = v.get<std::string>();
      } else if (key == "vectors") {
        cfg.vectors = v.get<std::string>();
      } else if (key == "dump_snapshots") {
        cfg.dump_snapshots = v.get<std::string>();
      } else {
        throw ConfigError("unknown config key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
  return from_json(doc);
}

kb::LiveContext Resources::live() {
  kb::LiveContext ctx;
  ctx.client = client.get();
  ctx.cache = client ? &cache : nullptr;
  return ctx;
}

Resources Resources::load(const RunConfig& cfg) {
  Resources res;
  if (!cfg.stopwords.empty()) {
    res.stopwords = textnorm::StopwordSet::load(cfg.stopwords);
    res.digests["stopwords"] = digest_entry(cfg.stopwords);
  }
  if (!cfg.kb_titles.empty()) {
    kb::LoadReport report;
    res.titles = kb::load_titles(cfg.kb_titles, &report);
    res.digests["kb_titles"] = digest_entry(cfg.kb_titles);
    if (report.invalid_utf8 > 0) {
      std::cerr << "warning: " << report.invalid_utf8 << " title line(s) with invalid UTF-8 skipped (first at line "
                << report.invalid_lines.front() << ")\n";
    }
  }
  if (res.titles.size() == 0 && cfg.kb_endpoint.empty()) {
    std::cerr << "warning: knowledge base is empty; every candidate will be reported as emerging\n";
  }
  if (!cfg.vectors.empty()) {
    res.vectors.emplace(embed::load_vectors(cfg.vectors));
    res.digests["vectors"] = digest_entry(cfg.vectors);
  }
  if (!cfg.kb_endpoint.empty()) {
    res.client = std::make_unique<kb::MediaWikiClient>(cfg.kb_endpoint);
    if (!cfg.kb_cache.empty()) res.cache.load(cfg.kb_cache);
  }
  if (cfg.cluster.alpha < 1 && !res.vectors) {
    std::cerr << "warning: alpha < 1 without --vectors; similarity is TF-IDF only\n";
  }
  return res;
}

Engine::Engine(const RunConfig& cfg, Resources& resources)
    : cfg_(cfg), res_(resources), model_(cfg.cluster) {}

void Engine::add(const ingest::TweetRecord& record) {
  auto phrases = textnorm::phrases_for(record.text, cfg_.ngram, res_.stopwords);
  const embed::EmbeddingTable* table = res_.vectors ? &*res_.vectors : nullptr;
  model_.insert(phrases, record.ts, table);
}

WindowResult Engine::close_window(const ingest::WindowInfo& info) {
  WindowResult out;
  out.info = info;
  out.snapshot = model_.snapshot();
  out.micro_clusters = out.snapshot.clusters.size();
  auto macros = macro::recluster(out.snapshot, cfg_.link_threshold);
  out.macro_clusters = macros.size();
  auto selected = macro::select(macros, cfg_.min_cluster_tweets);
  out.selected = selected.size();
  std::vector<keyphrase::CandidatePhrase> candidates;
  for (const auto& m : selected) {
    auto top = keyphrase::top_phrases(m, out.snapshot.doc_freq, out.snapshot.n_docs, cfg_.keyphrase,
                                      info.index);
    candidates.insert(candidates.end(), top.begin(), top.end());
  }
  out.candidates = candidates.size();
  auto groups = embed::group_similar(candidates, res_.vectors ? &*res_.vectors : nullptr, cfg_.group_theta);
  out.entities = kb::gate(groups, res_.titles, res_.live(), info.end, info.index);

  if (cfg_.replay.window.carry_state) {
    model_.start_window();
  } else {
    model_.reset();
  }
  return out;
}

json entity_line(const kb::EmergingEntity& e, const ingest::WindowInfo& w) {
  return {{"window_start", format_rfc3339(w.start)},
          {"window_end", format_rfc3339(w.end)},
          {"phrase", e.phrase},
          {"score", e.score},
          {"macro_id", e.macro_id},
          {"members", e.group_members},
          {"kb_provenance", std::string(kb::provenance_name(e.provenance))}};
}

namespace {

class ReportSink : public ingest::ReplaySink {
 public:
  ReportSink(const RunConfig& cfg, Engine& engine, std::ostream& report)
      : cfg_(cfg), engine_(engine), report_(report) {}

  void on_record(const ingest::TweetRecord& record, int64_t) override { engine_.add(record); }

  void on_window_close(const ingest::WindowInfo& info) override {
    WindowResult r = engine_.close_window(info);
    json line = {{"window",
                  {{"index", info.index},
                   {"start", format_rfc3339(info.start)},
                   {"end", format_rfc3339(info.end)},
                   {"tweets", info.records},
                   {"micro_clusters", r.micro_clusters},
                   {"macro_clusters", r.macro_clusters},
                   {"selected", r.selected},
                   {"candidates", r.candidates},
                   {"emerging", r.entities.size()}}}};
    report_ << line.dump() << '\n';
    for (const auto& e : r.entities) report_ << entity_line(e, info).dump() << '\n';
    report_.flush();
    entities_ += static_cast<int64_t>(r.entities.size());
    if (!cfg_.dump_snapshots.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "window-%04lld.json", static_cast<long long>(info.index));
      write_snapshot({info, std::move(r.snapshot)}, (std::filesystem::path(cfg_.dump_snapshots) / name).string());
    }
  }

  void on_skip(const ingest::Diagnostic& d) override {
    if (++skips_ <= 20) std::cerr << "skipped " << d.message << '\n';
    if (skips_ == 21) std::cerr << "further skipped lines not shown\n";
  }

  int64_t entities() const { return entities_; }

 private:
  const RunConfig& cfg_;
  Engine& engine_;
  std::ostream& report_;
  int64_t entities_ = 0;
  int64_t skips_ = 0;
};

}  // namespace

RunSummary run(const RunConfig& cfg, Resources& resources, std::istream& stream,
               const std::string& stream_path, std::ostream& report) {
  cfg.validate();
  if (!cfg.dump_snapshots.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.dump_snapshots, ec);
    if (ec) throw IoError("cannot create snapshot directory " + cfg.dump_snapshots + ": " + ec.message());
  }

  json inputs = resources.digests;
  inputs["stream"] = stream_path == "-" ? json{{"path", "-"}, {"sha256", nullptr}} : digest_entry(stream_path);
  json meta = {{"metadata",
                {{"tool", "emergent"},
                 {"format_version", 1},
                 {"config", cfg.to_json()},
                 {"inputs", inputs},
                 {"kb", {{"titles", resources.titles.size()}, {"live", resources.client != nullptr}}}}}};
  report << meta.dump() << '\n';
  report.flush();

  Engine engine(cfg, resources);
  ReportSink sink(cfg, engine, report);
  DigestBuf digest(stream);
  std::istream hashed(&digest);
  RunSummary summary;
  summary.replay = ingest::replay(hashed, cfg.replay, sink);
  summary.entities = sink.entities();
  summary.stream_sha256 = digest.hex();

  if (resources.client && !cfg.kb_cache.empty()) resources.cache.save(cfg.kb_cache);

  json tail = {{"summary",
                {{"processed", summary.replay.processed},
                 {"skipped", summary.replay.skipped},
                 {"windows", summary.replay.windows},
                 {"entities", summary.entities},
                 {"origin", optional_ts(summary.replay.origin)},
                 {"stream_sha256", summary.stream_sha256},
                 {"kb_requests", resources.client ? resources.client->requests_sent() : 0}}}};
  report << tail.dump() << '\n';
  report.flush();
  return summary;
}

}  // namespace emergent::pipeline
