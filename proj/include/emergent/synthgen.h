// Seeded synthetic tweet streams with planted bursty phrases and their
// ground truth, for end-to-end runs without a real corpus.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "emergent/common.h"
#include "emergent/textnorm.h"

namespace emergent::synth {

struct PlantSpec {
  std::string phrase;
  int64_t window_id = 0;
  int64_t burst_size = 1;
  bool in_kb = false;
};

// Parses "phrase:window:burst:kb|new" (the phrase may not contain ':').
PlantSpec parse_plant(const std::string& text);

struct GenConfig {
  uint64_t seed = 1;
  int64_t vocab_size = 5000;
  int64_t tweets_per_window = 40000;  // background tweets per window
  int64_t n_windows = 1;
  std::vector<PlantSpec> plants;

  Timestamp origin = from_epoch_seconds(1634860800);  // 2021-10-22T00:00:00Z
  Seconds window_duration{4 * 24 * 3600};
  double zipf_exponent = 1.1;
  int min_tokens = 5;
  int max_tokens = 15;
  // Share of plant tweets that bury the phrase inside a full background
  // tweet; the rest carry it with hashtag/URL/emoji/punctuation noise only.
  double plant_context_rate = 0.1;
  // Plant tweets of one burst fall within this span of their window.
  double burst_hours = 24;
  textnorm::NGramConfig ngram;

  void validate() const;
};

struct GenSummary {
  int64_t records = 0;
  int64_t gold_entities = 0;
  int64_t kb_titles = 0;
};

// Writes the tweet stream (JSONL), the gold file (JSONL, one line per window
// holding non-KB plants) and the toy KB titles dump. Identical configs give
// byte-identical output.
GenSummary gen_stream(const GenConfig& cfg, std::ostream& stream, std::ostream& gold,
                      std::ostream& titles);

// Token of rank `index` in the background vocabulary. Built only from the
// letters "bdfgklmnprstvz" and "aeiou"; plant phrases using other letters can
// never collide with it.
std::string vocab_token(int64_t index);

}  // namespace emergent::synth
