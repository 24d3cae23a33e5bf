#include <set>
#include <sstream>

#include "doctest.h"
#include "emergent/ingest.h"
#include "emergent/synthgen.h"
#include "emergent/textnorm.h"
#include "json.hpp"

using namespace emergent;
using namespace emergent::synth;
using nlohmann::json;

namespace {

struct Output {
  std::string stream, gold, titles;
  GenSummary summary;
};

Output generate(const GenConfig& cfg) {
  std::ostringstream s, g, t;
  Output o;
  o.summary = gen_stream(cfg, s, g, t);
  o.stream = s.str();
  o.gold = g.str();
  o.titles = t.str();
  return o;
}

GenConfig small() {
  GenConfig cfg;
  cfg.tweets_per_window = 500;
  cfg.n_windows = 3;
  cfg.vocab_size = 300;
  cfg.plants = {{"nova ride", 0, 120, false}, {"quixo jet hub", 2, 80, false}, {"gryphon wax", 0, 60, true}};
  return cfg;
}

}  // namespace

TEST_CASE("same seed, same bytes") {
  auto a = generate(small());
  auto b = generate(small());
  CHECK(a.stream == b.stream);
  CHECK(a.gold == b.gold);
  CHECK(a.titles == b.titles);
  GenConfig other = small();
  other.seed = 2;
  CHECK(generate(other).stream != a.stream);
}

TEST_CASE("gold and titles by construction") {
  auto o = generate(small());
  std::istringstream gold(o.gold);
  std::string line;
  std::vector<json> lines;
  while (std::getline(gold, line)) lines.push_back(json::parse(line));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0]["entities"] == json::array({"nova ride"}));
  CHECK(lines[0]["window_start"] == "2021-10-22T00:00:00Z");
  CHECK(lines[1]["entities"] == json::array({"quixo jet hub"}));
  CHECK(lines[1]["window_end"] == "2021-11-03T00:00:00Z");
  CHECK(o.titles == "gryphon_wax\n");
  CHECK(o.summary.records == 3 * 500 + 120 + 80 + 60);

  GenConfig none = small();
  none.plants.clear();
  CHECK(generate(none).gold.empty());
}

TEST_CASE("stream properties") {
  GenConfig cfg = small();
  auto o = generate(cfg);
  std::istringstream in(o.stream);
  std::string line;
  Timestamp last{};
  std::set<std::string> ids;
  std::map<std::pair<int64_t, std::string>, int64_t> plant_hits;
  ingest::WindowConfig wc;
  wc.origin = cfg.origin;
  int64_t n = 0;
  while (std::getline(in, line)) {
    auto r = ingest::parse_tweet_line(line, ++n);
    CHECK(r.ts >= last);
    last = r.ts;
    CHECK(ids.insert(r.id).second);
    int64_t w = ingest::window_index(r.ts, wc);
    CHECK(w < cfg.n_windows);
    std::string norm = textnorm::normalize(r.text);
    for (const auto& p : cfg.plants) {
      if ((" " + norm + " ").find(" " + p.phrase + " ") != std::string::npos) ++plant_hits[{w, p.phrase}];
    }
  }
  CHECK(n == o.summary.records);
  for (const auto& p : cfg.plants) CHECK(plant_hits[{p.window_id, p.phrase}] >= p.burst_size);
  // background tokens avoid the letters the plants use
  CHECK(vocab_token(0) != vocab_token(1));
  for (int64_t i = 0; i < 20000; ++i) CHECK(vocab_token(i).find_first_of("qxjywhc") == std::string::npos);
}

TEST_CASE("validation") {
  GenConfig cfg = small();
  cfg.plants.push_back({"nova ride", 1, 5, true});
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small();
  cfg.plants.push_back({"way too many tokens here", 0, 5, false});
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small();
  cfg.plants[0].window_id = 3;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small();
  cfg.plants[0].burst_size = 0;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small();
  cfg.vocab_size = 0;
  CHECK_THROWS_AS(generate(cfg), ConfigError);

  auto p = parse_plant("nova ride:2:300:kb");
  CHECK(p.phrase == "nova ride");
  CHECK(p.window_id == 2);
  CHECK(p.burst_size == 300);
  CHECK(p.in_kb);
  CHECK_THROWS_AS(parse_plant("nova:1:2"), ConfigError);
  CHECK_THROWS_AS(parse_plant("nova:x:2:new"), ConfigError);
  CHECK_THROWS_AS(parse_plant("nova:1:2:maybe"), ConfigError);
}
