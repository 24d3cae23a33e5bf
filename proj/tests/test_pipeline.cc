#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <streambuf>

#include "doctest.h"
#include "emergent/pipeline.h"
#include "emergent/synthgen.h"

using namespace emergent;
using namespace emergent::pipeline;
using nlohmann::json;

namespace {

std::vector<json> lines_of(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) out.push_back(json::parse(l));
  return out;
}

// Hands out one line at a time and calls `before_line(i)` first.
class Feeder : public std::streambuf {
 public:
  Feeder(std::vector<std::string> lines, std::function<void(size_t)> before_line)
      : lines_(std::move(lines)), hook_(std::move(before_line)) {}

 protected:
  int_type underflow() override {
    if (next_ >= lines_.size()) return traits_type::eof();
    hook_(next_);
    cur_ = lines_[next_++] + "\n";
    setg(cur_.data(), cur_.data(), cur_.data() + cur_.size());
    return traits_type::to_int_type(*gptr());
  }

 private:
  std::vector<std::string> lines_;
  std::function<void(size_t)> hook_;
  size_t next_ = 0;
  std::string cur_;
};

std::string make_stream(int windows, int64_t background, int64_t burst, uint64_t seed = 3) {
  synth::GenConfig g;
  g.seed = seed;
  g.vocab_size = 400;
  g.tweets_per_window = background;
  g.n_windows = windows;
  for (int w = 0; w < windows; ++w) {
    g.plants.push_back({"nova ride " + std::string(1, static_cast<char>('a' + w)), w, burst, false});
  }
  std::ostringstream s, gold, titles;
  synth::gen_stream(g, s, gold, titles);
  return s.str();
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.min_cluster_tweets = 100;
  return cfg;
}

std::string run_text(const RunConfig& cfg, const std::string& stream) {
  Resources res;
  std::istringstream in(stream);
  std::ostringstream out;
  run(cfg, res, in, "-", out);
  return out.str();
}

}  // namespace

TEST_CASE("config round trip and overrides") {
  RunConfig cfg;
  cfg.replay.window.duration = Seconds{2 * 86400};
  cfg.replay.window.origin = from_epoch_seconds(1634860800);
  cfg.replay.strict = true;
  cfg.cluster.lambda = 0.25;
  cfg.keyphrase.k = 7;
  cfg.kb_titles = "titles.txt";
  json doc = cfg.to_json();
  RunConfig back = RunConfig::from_json(doc);
  CHECK(back.to_json() == doc);
  CHECK(back.replay.window.duration == Seconds{2 * 86400});
  CHECK(back.replay.window.origin == cfg.replay.window.origin);
  CHECK(RunConfig::from_json(json::object()).to_json() == RunConfig{}.to_json());
  CHECK_THROWS_AS(RunConfig::from_json({{"lamda", 1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"lambda", "fast"}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"origin", "soon"}}), ConfigError);
  RunConfig bad;
  bad.link_threshold = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("empty stream: header, no entities") {
  auto lines = lines_of(run_text(RunConfig{}, ""));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].contains("metadata"));
  CHECK(lines[0]["metadata"]["config"] == RunConfig{}.to_json());
  CHECK(lines[1]["summary"]["processed"] == 0);
  CHECK(lines[1]["summary"]["entities"] == 0);
}

TEST_CASE("planted phrases come out per window, deterministically") {
  std::string stream = make_stream(3, 1500, 400);
  std::string a = run_text(small_config(), stream);
  CHECK(a == run_text(small_config(), stream));
  std::vector<std::string> phrases;
  for (const auto& l : lines_of(a)) {
    if (l.contains("phrase")) {
      phrases.push_back(l["phrase"].get<std::string>() + "@" + l["window_start"].get<std::string>());
      CHECK(l.size() == 7);
      CHECK(l["kb_provenance"] == "offline");
    }
  }
  CHECK(phrases == std::vector<std::string>{"nova ride a@2021-10-22T00:00:00Z", "nova ride b@2021-10-26T00:00:00Z",
                                            "nova ride c@2021-10-30T00:00:00Z"});
}

TEST_CASE("reset per window equals a fresh engine per window") {
  std::string stream = make_stream(3, 800, 250, 9);
  RunConfig cfg = small_config();
  std::vector<std::string> all;
  std::istringstream in(stream);
  for (std::string l; std::getline(in, l);) all.push_back(l);

  Resources res;
  struct Collect : ingest::ReplaySink {
    Engine* engine;
    std::vector<WindowResult> results;
    void on_record(const ingest::TweetRecord& r, int64_t) override { engine->add(r); }
    void on_window_close(const ingest::WindowInfo& w) override { results.push_back(engine->close_window(w)); }
  };
  Engine joint(cfg, res);
  Collect c;
  c.engine = &joint;
  std::istringstream again(stream);
  ingest::replay(again, cfg.replay, c);
  REQUIRE(c.results.size() == 3);

  for (size_t w = 0; w < 3; ++w) {
    // the window's lines only, through a new engine
    std::vector<ingest::TweetRecord> recs;
    for (const auto& l : all) {
      auto r = ingest::parse_tweet_line(l);
      if (r.ts >= c.results[w].info.start && r.ts < c.results[w].info.end) recs.push_back(r);
    }
    Engine fresh(cfg, res);
    for (const auto& r : recs) fresh.add(r);
    auto alone = fresh.close_window(c.results[w].info);
    const auto& joint_w = c.results[w];
    REQUIRE(alone.entities.size() == joint_w.entities.size());
    for (size_t i = 0; i < alone.entities.size(); ++i) {
      CHECK(alone.entities[i].phrase == joint_w.entities[i].phrase);
      CHECK(alone.entities[i].score == doctest::Approx(joint_w.entities[i].score).epsilon(1e-12));
      CHECK(alone.entities[i].macro_id == joint_w.entities[i].macro_id);
    }
    CHECK(alone.micro_clusters == joint_w.micro_clusters);
    CHECK(alone.macro_clusters == joint_w.macro_clusters);
  }
}

TEST_CASE("window w is reported before window w+2 is read") {
  std::string stream = make_stream(4, 600, 200, 5);
  std::vector<std::string> lines;
  std::istringstream in(stream);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::ostringstream report;
  bool ok = true;
  const Timestamp origin = from_epoch_seconds(1634860800);
  Feeder feeder(lines, [&](size_t i) {
    auto r = ingest::parse_tweet_line(lines[i]);
    int64_t w = (r.ts - origin) / Seconds{4 * 86400};
    if (w >= 2) {
      std::string needle = "\"index\":" + std::to_string(w - 2) + ",";
      ok = ok && report.str().find(needle) != std::string::npos;
    }
  });
  std::istream src(&feeder);
  Resources res;
  run(small_config(), res, src, "-", report);
  CHECK(ok);
}

TEST_CASE("snapshot dump round trip and inspect order") {
  cluster::ClusterModel m;
  Timestamp t = from_epoch_seconds(1634860800);
  for (int i = 0; i < 12; ++i) m.insert({"big one", "big two"}, t);
  for (int i = 0; i < 5; ++i) m.insert({"small one"}, t);
  SnapshotFile f{{0, t, t + Seconds{4 * 86400}, 17}, m.snapshot()};
  std::stringstream buf;
  write_snapshot(f, buf);
  auto back = read_snapshot(buf);
  REQUIRE(back.snapshot.clusters.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    const auto& a = f.snapshot.clusters[i];
    const auto& b = back.snapshot.clusters[i];
    CHECK(a.cluster_id == b.cluster_id);
    CHECK(a.raw_count == b.raw_count);
    CHECK(a.weight == b.weight);
    CHECK(a.terms == b.terms);
  }
  CHECK(back.snapshot.doc_freq == f.snapshot.doc_freq);
  CHECK(back.window.records == 17);

  f.snapshot.clusters = {f.snapshot.clusters[1], f.snapshot.clusters[0]};
  f.snapshot.clusters[0].raw_count = 5;
  std::string table = inspect_table(f);
  auto p12 = table.find("\t12\t");
  auto p5 = table.find("\t5\t");
  REQUIRE(p12 != std::string::npos);
  REQUIRE(p5 != std::string::npos);
  CHECK(p12 < p5);

  SnapshotFile empty{{0, t, t, 0}, {}};
  std::string header_only = inspect_table(empty);
  CHECK(std::count(header_only.begin(), header_only.end(), '\n') == 2);

  std::stringstream wrong(R"({"format":"emergent-snapshot","version":99})");
  CHECK_THROWS_AS(read_snapshot(wrong), DataError);
  std::stringstream junk("[]");
  CHECK_THROWS_AS(read_snapshot(junk), DataError);
  CHECK_THROWS_AS(read_snapshot(std::string("/nonexistent/snap.json")), IoError);
}

TEST_CASE("strict mode surfaces data errors") {
  RunConfig cfg;
  cfg.replay.strict = true;
  CHECK_THROWS_AS(run_text(cfg, "not json\n"), DataError);
  cfg.replay.strict = false;
  auto lines = lines_of(run_text(cfg, "not json\n"));
  CHECK(lines.back()["summary"]["skipped"] == 1);
}

TEST_CASE("file_sha256") {
  auto path = (std::filesystem::temp_directory_path() / "emergent_sha_test").string();
  std::ofstream(path) << "abc";
  CHECK(file_sha256(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
