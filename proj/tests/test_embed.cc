#include <random>
#include <sstream>

#include "doctest.h"
#include "emergent/embed.h"
#include "oracles/reference.h"

using namespace emergent;
using namespace emergent::embed;

namespace {

EmbeddingTable table_of(const std::map<std::string, std::vector<float>>& m, int dim) {
  EmbeddingTable t(dim);
  for (const auto& [k, v] : m) t.set(k, v);
  return t;
}

keyphrase::CandidatePhrase cand(std::string p, double score, int64_t macro = 0) {
  return {std::move(p), score, macro, 0};
}

}  // namespace

TEST_CASE("parse_vectors") {
  std::istringstream ok("2 3\na 1 0 0\nb 0 1 0\n");
  auto t = parse_vectors(ok);
  CHECK(t.dim() == 3);
  CHECK(t.size() == 2);
  REQUIRE(t.find("b") != nullptr);
  CHECK(t.find("b")[1] == 1.0f);
  CHECK(t.find("c") == nullptr);

  std::istringstream dup("2 2\na 1 0\na 0 1\n");
  auto d = parse_vectors(dup);
  CHECK(d.size() == 1);
  CHECK(d.find("a")[1] == 1.0f);

  auto line_of = [](const std::string& text) -> int64_t {
    std::istringstream in(text);
    try {
      parse_vectors(in);
    } catch (const DataError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("2 3\na 1 0 0\nb 0 1\n") == 3);
  CHECK(line_of("") == 1);
  CHECK(line_of("x y\n") == 1);
  CHECK(line_of("1 2\na 1 nan\n") == 2);
  CHECK(line_of("1 2\na 1 inf\n") == 2);
  CHECK(line_of("1 2\na 1 2\nb 3 4\n") == 3);
  CHECK(line_of("1 2\na 1 zz\n") == 2);
  CHECK_THROWS_AS(load_vectors("/nonexistent/vectors.vec"), IoError);
}

TEST_CASE("phrase vectors") {
  auto t = table_of({{"a", {1, 0}}, {"b", {0, 1}}}, 2);
  auto ab = phrase_vector("a b", t);
  CHECK(ab.values == std::vector<double>{0.5, 0.5});
  CHECK(ab.oov_count == 0);
  CHECK(phrase_vector("a", t).values == std::vector<double>{1, 0});
  auto none = phrase_vector("x y", t);
  CHECK(none.values == std::vector<double>{0, 0});
  CHECK(none.oov_count == 2);
  CHECK(semantic_similarity("a", "b", t) == 0.0);
  CHECK(semantic_similarity("a b", "a b", t) == 1.0);
  CHECK(semantic_similarity("x", "a", t) == 0.0);
}

TEST_CASE("similarity matches the brute-force oracle") {
  std::mt19937_64 rng(31);
  std::map<std::string, std::vector<float>> m;
  for (int i = 0; i < 10; ++i) {
    std::vector<float> v(4);
    for (auto& x : v) x = static_cast<float>(static_cast<int>(rng() % 2001) - 1000) / 997.0f;
    m["k" + std::to_string(i)] = v;
  }
  auto t = table_of(m, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::string p = "k" + std::to_string(rng() % 12) + " k" + std::to_string(rng() % 12);
    std::string q = "k" + std::to_string(rng() % 12) + " k" + std::to_string(rng() % 12) + " k" + std::to_string(rng() % 12);
    auto pv = phrase_vector(p, t);
    auto ref = oracle::ref_phrase_vector(p, m, 4);
    for (int d = 0; d < 4; ++d) CHECK(std::abs(pv.values[d] - static_cast<double>(ref[d])) <= 1e-8);
    double s = semantic_similarity(p, q, t);
    CHECK(std::abs(s - oracle::ref_similarity(p, q, m, 4)) <= 1e-8);
    CHECK(s == semantic_similarity(q, p, t));
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("group_similar") {
  auto t = table_of({{"a", {1, 0}}, {"b", {0.99f, 0.1f}}, {"c", {0, 1}}}, 2);
  auto g = group_similar({cand("a x", 1), cand("a x", 3, 1), cand("c", 2)}, &t, 0.8);
  REQUIRE(g.size() == 2);
  CHECK(g[0].representative == "a x");
  CHECK(g[0].members.size() == 2);
  CHECK(g[0].members[0].score == 3);
  CHECK(g[1].representative == "c");

  auto oov = group_similar({cand("q", 1), cand("r", 1)}, &t, 0.8);
  CHECK(oov.size() == 2);
  CHECK(oov[0].representative == "q");
  CHECK(group_similar({cand("a", 1), cand("b", 2)}, &t, 0.8).size() == 1);
  CHECK(group_similar({cand("a", 1), cand("b", 2)}, nullptr, 0.8).size() == 2);
  CHECK(group_similar({}, &t, 0.8).empty());
}

TEST_CASE("grouping equals the all-pairs oracle and is monotone in theta") {
  std::mt19937_64 rng(32);
  std::map<std::string, std::vector<float>> m;
  for (int i = 0; i < 6; ++i) {
    std::vector<float> v(3);
    for (auto& x : v) x = static_cast<float>(static_cast<int>(rng() % 201) - 60) / 100.0f;
    m["k" + std::to_string(i)] = v;
  }
  auto t = table_of(m, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<keyphrase::CandidatePhrase> cs;
    for (int i = 0; i < 12; ++i) {
      cs.push_back(cand("k" + std::to_string(rng() % 8) + " k" + std::to_string(rng() % 8),
                        static_cast<double>(rng() % 5), static_cast<int64_t>(i)));
    }
    size_t last = 0;
    for (double theta : {-1.0, 0.0, 0.5, 0.8, 0.95, 1.0}) {
      auto groups = group_similar(cs, &t, theta);
      auto label = oracle::components(cs.size(), [&](size_t a, size_t b) {
        return a != b && (cs[a].phrase == cs[b].phrase || oracle::ref_similarity(cs[a].phrase, cs[b].phrase, m, 3) >= theta);
      });
      std::set<size_t> labels(label.begin(), label.end());
      REQUIRE(groups.size() == labels.size());
      size_t members = 0;
      for (const auto& g : groups) {
        REQUIRE_FALSE(g.members.empty());
        CHECK(g.representative == g.members[0].phrase);
        // every member shares the oracle label of the first member
        auto idx = [&](const keyphrase::CandidatePhrase& c) { return static_cast<size_t>(c.macro_id); };
        for (const auto& mbr : g.members) CHECK(label[idx(mbr)] == label[idx(g.members[0])]);
        for (size_t i = 1; i < g.members.size(); ++i) CHECK(g.members[i - 1].score >= g.members[i].score);
        members += g.members.size();
      }
      CHECK(members == cs.size());
      for (size_t i = 1; i < groups.size(); ++i) {
        CHECK(groups[i - 1].members[0].score >= groups[i].members[0].score);
      }
      CHECK(groups.size() >= last);
      last = groups.size();
    }
  }
}
