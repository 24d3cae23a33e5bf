#include <random>

#include "doctest.h"
#include "emergent/cluster.h"
#include "emergent/embed.h"
#include "oracles/cluster_oracle.h"

using namespace emergent;
using namespace emergent::cluster;

namespace {

const Timestamp T0 = from_epoch_seconds(1634860800);
Timestamp at_hours(double h) { return T0 + Seconds{static_cast<int64_t>(h * 3600)}; }

// Small shared vocabulary so documents overlap often.
std::vector<std::string> random_doc(std::mt19937_64& rng, int vocab) {
  std::vector<std::string> doc;
  int n = 1 + static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) doc.push_back("w" + std::to_string(rng() % vocab) + " x");
  return doc;
}

struct StreamSpec {
  ClusterParams params;
  int docs;
  int vocab;
  int max_gap_minutes;
};

// Runs one seeded stream through both models; returns the number of checks
// that held among those made.
void check_against_oracle(uint64_t seed, const StreamSpec& spec, const embed::EmbeddingTable* table = nullptr) {
  std::mt19937_64 rng(seed);
  ClusterModel model(spec.params);
  oracle::BruteForceModel ref;
  ref.lambda = spec.params.lambda;
  ref.tau = spec.params.sim_threshold;
  ref.alpha = spec.params.alpha;
  ref.t_gap = spec.params.t_gap;
  ref.w_min = spec.params.w_min;
  ref.table = table;
  Timestamp ts = T0;
  for (int i = 0; i < spec.docs; ++i) {
    ts += Seconds{60 * static_cast<int64_t>(rng() % (spec.max_gap_minutes + 1))};
    auto doc = random_doc(rng, spec.vocab);
    auto got = model.insert(doc, ts, table);
    auto want = ref.insert(doc, ts);
    CAPTURE(seed);
    CAPTURE(i);
    REQUIRE(static_cast<int>(got.outcome) == want.outcome);
    REQUIRE(got.cluster_id == want.id);
  }
  Timestamp end = ts + Seconds{1800};
  auto snap = model.snapshot(end);
  auto ref_state = ref.state(end);
  REQUIRE(snap.clusters.size() == ref_state.size());
  int64_t raw_total = snap.pruned_raw_count;
  for (size_t c = 0; c < ref_state.size(); ++c) {
    const auto& a = snap.clusters[c];
    const auto& b = ref_state[c];
    CHECK(a.cluster_id == b.id);
    CHECK(std::abs(a.weight - b.weight) <= 1e-9);
    CHECK(a.raw_count == b.raw_count);
    REQUIRE(a.terms.size() == b.terms.size());
    for (const auto& [p, w] : a.terms) CHECK(std::abs(w - b.terms.at(p)) <= 1e-9);
    raw_total += a.raw_count;
  }
  CHECK(raw_total == spec.docs);
  CHECK(snap.pruned_raw_count == ref.pruned_raw());
  auto df = ref.doc_freqs(end);
  CHECK(snap.doc_freq.size() == df.size());
  for (const auto& [p, v] : df) CHECK(std::abs(snap.doc_freq.at(p) - v) <= 1e-9);
  CHECK(std::abs(snap.n_docs - ref.n_docs(end)) <= 1e-9);
}

}  // namespace

TEST_CASE("fade_factor") {
  CHECK(fade_factor(0, 0.1) == 1.0);
  CHECK(fade_factor(2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fade_factor(10, 0.1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(fade_factor(-1, 0.1), ConfigError);
  // composition over split intervals
  for (double a : {0.0, 0.3, 1.7, 12.5}) {
    for (double b : {0.0, 2.25, 9.0}) CHECK(std::abs(fade_factor(a, 0.1) * fade_factor(b, 0.1) - fade_factor(a + b, 0.1)) <= 1e-12);
  }
}

TEST_CASE("tfidf_vector and cosine") {
  auto v = tfidf_vector({{"p", 1}}, {{"p", 1}}, 1);
  CHECK(v.at("p") == doctest::Approx(1.0));
  CHECK(tfidf_vector({}, {}, 5).empty());
  // hand-computed: 2 (ln(11/10) + 1) and ln(11/2) + 1
  auto w = tfidf_vector({{"p", 2}, {"q", 1}}, {{"p", 9}, {"q", 1}}, 10);
  CHECK(std::abs(w.at("p") - 2.1906203596086498) <= 1e-12);
  CHECK(std::abs(w.at("q") - 2.7047480922384253) <= 1e-12);
  CHECK(cosine({{"p", 3}}, {{"p", 3}}) == doctest::Approx(1.0));
  CHECK(cosine({{"p", 1}}, {{"q", 1}}) == 0.0);
  CHECK(std::abs(cosine({{"p", 1}, {"q", 1}}, {{"p", 1}}) - 0.70710678) <= 1e-8);
  CHECK(cosine({}, {{"p", 1}}) == 0.0);
}

TEST_CASE("params validation") {
  ClusterParams p;
  p.lambda = 0;
  CHECK_THROWS_AS(ClusterModel{p}, ConfigError);
  p = {};
  p.sim_threshold = 1.5;
  CHECK_THROWS_AS(ClusterModel{p}, ConfigError);
  p = {};
  p.alpha = -0.1;
  CHECK_THROWS_AS(ClusterModel{p}, ConfigError);
  p = {};
  p.t_gap = 0;
  CHECK_THROWS_AS(ClusterModel{p}, ConfigError);
}

TEST_CASE("first insertions") {
  ClusterModel m;
  auto a = m.insert({"a b"}, T0);
  CHECK(a.outcome == Assignment::Outcome::kCreated);
  CHECK(a.cluster_id == 0);
  auto b = m.insert({"a b"}, T0);
  CHECK(b.outcome == Assignment::Outcome::kMerged);
  CHECK(b.cluster_id == 0);
  CHECK(b.similarity == doctest::Approx(1.0));
  auto s = m.snapshot();
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].weight == doctest::Approx(2.0));
  CHECK(s.clusters[0].raw_count == 2);
  CHECK(m.insert({}, T0).outcome == Assignment::Outcome::kSkipped);
  CHECK(m.insertions() == 2);
}

TEST_CASE("clock never moves back") {
  ClusterModel m;
  m.insert({"a b"}, T0 + Seconds{10});
  CHECK_THROWS_AS(m.insert({"a b"}, T0), DataError);
  CHECK_THROWS_AS(m.snapshot(T0), DataError);
}

TEST_CASE("snapshot fades untouched clusters") {
  ClusterParams p;
  p.lambda = 0.5;
  ClusterModel m(p);
  for (int i = 0; i < 4; ++i) m.insert({"a b"}, T0);
  CHECK(m.snapshot(at_hours(2)).clusters[0].weight == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.snapshot().clusters[0].weight == doctest::Approx(4.0).epsilon(1e-12));
  ClusterModel empty;
  CHECK(empty.snapshot(T0).clusters.empty());
}

TEST_CASE("half weight after 1/lambda hours") {
  for (double lambda : {0.1, 0.25, 1.0}) {
    ClusterParams p;
    p.lambda = lambda;
    ClusterModel m(p);
    m.insert({"a b", "b c"}, T0);
    m.insert({"a b", "b c"}, T0);
    m.insert({"z y"}, T0);
    double h = 1.0 / lambda;
    auto s = m.snapshot(at_hours(h));
    CHECK(std::abs(s.clusters[0].weight - 1.0) <= 1e-9);
    CHECK(std::abs(s.clusters[1].weight - 0.5) <= 1e-9);
  }
}

TEST_CASE("ties go to the lowest cluster id") {
  ClusterParams p;
  p.sim_threshold = 0.3;
  ClusterModel m(p);
  m.insert({"a b"}, T0);
  m.insert({"c d"}, T0);
  // equally similar to both
  auto r = m.insert({"a b", "c d"}, T0);
  CHECK(r.outcome == Assignment::Outcome::kMerged);
  CHECK(r.cluster_id == 0);
}

TEST_CASE("reset keeps params and id counter") {
  ClusterParams p;
  p.lambda = 0.3;
  p.sim_threshold = 0.7;
  ClusterModel m(p);
  m.insert({"a b"}, T0);
  m.insert({"c d"}, T0);
  m.reset();
  CHECK(m.snapshot().clusters.empty());
  CHECK(m.params().lambda == 0.3);
  CHECK(m.params().sim_threshold == 0.7);
  CHECK(m.insert({"a b"}, T0).cluster_id == 2);
}

TEST_CASE("pruning removes faded clusters and keeps a tombstone") {
  ClusterParams p;
  p.lambda = 1.0;
  p.t_gap = 1;
  p.w_min = 0.25;
  ClusterModel m(p);
  m.insert({"a b"}, T0);
  m.insert({"c d"}, at_hours(3));  // a b is at 1/8 now
  auto s = m.snapshot();
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].cluster_id == 1);
  CHECK(s.pruned_raw_count == 1);
  CHECK(s.doc_freq.count("a b") == 0);
  m.start_window();
  CHECK(m.snapshot().pruned_raw_count == 0);
  CHECK(m.snapshot().clusters[0].raw_count == 0);
}

TEST_CASE("weight exactly at w_min survives cleanup") {
  ClusterParams p;
  p.lambda = 1.0;
  p.t_gap = 1;
  p.w_min = 0.5;
  ClusterModel m(p);
  m.insert({"a b"}, T0);
  m.insert({"c d"}, at_hours(1));  // a b sits at 0.5, not below
  m.insert({"e f"}, at_hours(1));
  auto s = m.snapshot();
  REQUIRE(s.clusters.size() == 3);
  CHECK(s.clusters[0].weight == doctest::Approx(0.5).epsilon(1e-12));
  m.insert({"g h"}, at_hours(1.5));
  CHECK(m.snapshot().clusters.size() == 3);
}

TEST_CASE("online model matches the from-scratch oracle") {
  // pruning-heavy, merge-heavy and create-heavy regimes
  std::vector<StreamSpec> specs = {
      {{0.1, 0.5, 1.0, 100, 1.0 / 1024}, 200, 8, 30},
      {{0.5, 0.3, 1.0, 7, 0.05}, 200, 12, 180},
      {{2.0, 0.7, 1.0, 3, 0.2}, 150, 6, 90},
      {{0.05, 0.0, 1.0, 10, 1e-3}, 120, 10, 60},
      {{1.0, 1.0, 1.0, 5, 0.01}, 120, 5, 20},
  };
  for (size_t k = 0; k < specs.size(); ++k) {
    for (uint64_t seed = 1; seed <= 4; ++seed) check_against_oracle(seed * 1000 + k, specs[k]);
  }
}

TEST_CASE("blended similarity matches the oracle") {
  embed::EmbeddingTable table(3);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 8; ++i) {
    std::vector<float> v(3);
    for (auto& x : v) x = static_cast<float>(static_cast<int>(rng() % 2001) - 1000) / 1000.0f;
    table.set("w" + std::to_string(i), v);
  }
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    check_against_oracle(seed, {{0.2, 0.5, 0.6, 9, 0.02}, 120, 10, 60}, &table);
  }
}

TEST_CASE("merging is stable under rescaling of every cluster") {
  // cosine ignores a common factor: a cluster's argmax against scaled copies
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    TermWeights df;
    std::vector<TermWeights> cs(4);
    for (auto& c : cs) {
      for (int t = 0; t < 4; ++t) c["t" + std::to_string(rng() % 6)] += 1 + static_cast<double>(rng() % 5);
    }
    for (int t = 0; t < 6; ++t) df["t" + std::to_string(t)] = static_cast<double>(rng() % 5);
    TermWeights doc{{"t" + std::to_string(rng() % 6), 1.0}, {"t" + std::to_string(rng() % 6), 1.0}};
    auto dv = tfidf_vector(doc, df, 10);
    auto argmax = [&](double scale) {
      size_t best = 0;
      double bs = -1;
      for (size_t i = 0; i < cs.size(); ++i) {
        TermWeights scaled = cs[i];
        for (auto& [k, v] : scaled) v *= scale;
        double s = cosine(dv, tfidf_vector(scaled, df, 10));
        if (s > bs + kSimilarityTolerance) {
          bs = s;
          best = i;
        }
      }
      return best;
    };
    CHECK(argmax(1.0) == argmax(0.037));
    CHECK(argmax(1.0) == argmax(1234.5));
  }
}

TEST_CASE("long idle gaps survive rebasing") {
  ClusterParams p;
  p.lambda = 1.0;
  p.w_min = 1e-300;
  p.t_gap = 1000000;
  ClusterModel m(p);
  m.insert({"a b"}, T0);
  m.insert({"a b"}, at_hours(100));  // exponent 100 forces a rebase
  auto s = m.snapshot(at_hours(101));
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].weight == doctest::Approx(0.5 + std::pow(2.0, -101)).epsilon(1e-12));
}
