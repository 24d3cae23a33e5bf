#include "emergent/synthgen.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace emergent::synth {

using nlohmann::json;

PlantSpec parse_plant(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 4) throw ConfigError("plant must be phrase:window:burst:kb|new, got \"" + text + "\"");
  PlantSpec spec;
  spec.phrase = parts[0];
  try {
    spec.window_id = std::stoll(parts[1]);
    spec.burst_size = std::stoll(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("plant window and burst must be integers: \"" + text + "\"");
  }
  if (parts[3] == "kb") {
    spec.in_kb = true;
  } else if (parts[3] == "new") {
    spec.in_kb = false;
  } else {
    throw ConfigError("plant KB flag must be \"kb\" or \"new\": \"" + text + "\"");
  }
  return spec;
}

void GenConfig::validate() const {
  if (vocab_size < 1) throw ConfigError("vocabulary size must be positive");
  if (tweets_per_window < 0) throw ConfigError("tweets per window must be non-negative");
  if (n_windows < 1) throw ConfigError("window count must be positive");
  if (window_duration.count() <= 0) throw ConfigError("window duration must be positive");
  if (min_tokens < 1 || max_tokens < min_tokens) throw ConfigError("bad tweet length range");
  if (!(zipf_exponent > 0)) throw ConfigError("Zipf exponent must be positive");
  if (!(plant_context_rate >= 0 && plant_context_rate <= 1)) {
    throw ConfigError("plant context rate must lie in [0, 1]");
  }
  if (!(burst_hours > 0)) throw ConfigError("burst span must be positive");
  ngram.validate();
  std::map<std::string, bool> kb_of;
  for (const PlantSpec& p : plants) {
    if (p.burst_size < 1) throw ConfigError("plant \"" + p.phrase + "\": burst size must be >= 1");
    if (p.window_id < 0 || p.window_id >= n_windows) {
      throw ConfigError("plant \"" + p.phrase + "\": window outside the generated range");
    }
    std::string norm = textnorm::normalize(p.phrase);
    auto tokens = static_cast<int>(textnorm::tokenize(norm).size());
    if (tokens < ngram.n_min || tokens > ngram.n_max) {
      throw ConfigError("plant \"" + p.phrase + "\": token count outside the n-gram range");
    }
    auto [it, fresh] = kb_of.try_emplace(norm, p.in_kb);
    if (!fresh && it->second != p.in_kb) {
      throw ConfigError("plant \"" + p.phrase + "\" is planted both in and out of the KB");
    }
  }
}

std::string vocab_token(int64_t index) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  const int64_t base = static_cast<int64_t>(kConsonants.size() * kVowels.size());
  std::string word;
  for (int64_t n = index + base; n > 0; n /= base) {
    int64_t digit = n % base;
    word.push_back(kConsonants[digit / kVowels.size()]);
    word.push_back(kVowels[digit % kVowels.size()]);
  }
  return word;
}

namespace {

// Portable draws on top of mt19937_64 (whose output sequence is fixed by the
// standard, unlike the library distributions).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  int64_t below(int64_t n) {
    return std::min<int64_t>(n - 1, static_cast<int64_t>(uniform() * static_cast<double>(n)));
  }
  int64_t between(int64_t lo, int64_t hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

class ZipfSampler {
 public:
  ZipfSampler(int64_t n, double s) : cdf_(n) {
    double total = 0;
    for (int64_t k = 0; k < n; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), s);
      cdf_[k] = total;
    }
    for (double& c : cdf_) c /= total;
  }
  int64_t sample(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<int64_t>(static_cast<int64_t>(it - cdf_.begin()),
                             static_cast<int64_t>(cdf_.size()) - 1);
  }

 private:
  std::vector<double> cdf_;
};

struct Draft {
  Timestamp ts;
  uint64_t seq;
  std::string text;
};

constexpr const char* kEmoji[] = {"😀", "🔥", "👍", "😂", "❤️", "🚀", "🇮🇷"};
constexpr const char* kPunct[] = {"!", "!!", "?", ".", "...", "؟", "!!!"};

std::string background_tokens(Rng& rng, const ZipfSampler& zipf, int64_t count) {
  std::string text;
  for (int64_t i = 0; i < count; ++i) {
    if (i > 0) text.push_back(' ');
    text += vocab_token(zipf.sample(rng));
  }
  return text;
}

std::string url(Rng& rng) {
  static constexpr std::string_view kChars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::string out = "https://t.co/";
  for (int i = 0; i < 10; ++i) out.push_back(kChars[rng.below(static_cast<int64_t>(kChars.size()))]);
  return out;
}

std::string plant_text(Rng& rng, const ZipfSampler& zipf, const GenConfig& cfg,
                       const std::string& phrase) {
  if (rng.chance(cfg.plant_context_rate)) {
    int64_t length = rng.between(cfg.min_tokens, cfg.max_tokens);
    int64_t offset = rng.between(0, length);
    std::string before = background_tokens(rng, zipf, offset);
    std::string after = background_tokens(rng, zipf, length - offset);
    std::string text = before;
    if (!text.empty()) text.push_back(' ');
    text += phrase;
    if (!after.empty()) text += " " + after;
    return text;
  }
  std::string text;
  if (rng.chance(0.3)) text += "#";
  text += phrase;
  if (rng.chance(0.5)) text += kPunct[rng.below(std::size(kPunct))];
  if (rng.chance(0.3)) text += " " + url(rng);
  if (rng.chance(0.3)) text += std::string(" ") + kEmoji[rng.below(std::size(kEmoji))];
  return text;
}

}  // namespace

GenSummary gen_stream(const GenConfig& cfg, std::ostream& stream, std::ostream& gold,
                      std::ostream& titles) {
  cfg.validate();
  Rng rng(cfg.seed);
  ZipfSampler zipf(cfg.vocab_size, cfg.zipf_exponent);
  GenSummary summary;
  const int64_t duration = cfg.window_duration.count();
  const int64_t burst = std::min<int64_t>(duration, static_cast<int64_t>(cfg.burst_hours * 3600));

  for (int64_t w = 0; w < cfg.n_windows; ++w) {
    const Timestamp start = cfg.origin + cfg.window_duration * w;
    std::vector<Draft> drafts;
    uint64_t seq = 0;
    for (int64_t i = 0; i < cfg.tweets_per_window; ++i) {
      Timestamp ts = start + Seconds{rng.below(duration)};
      std::string text = background_tokens(rng, zipf, rng.between(cfg.min_tokens, cfg.max_tokens));
      if (rng.chance(0.05)) text += " " + url(rng);
      if (rng.chance(0.1)) text += kPunct[rng.below(std::size(kPunct))];
      drafts.push_back({ts, seq++, std::move(text)});
    }
    std::vector<std::string> gold_phrases;
    for (const PlantSpec& p : cfg.plants) {
      if (p.window_id != w) continue;
      Timestamp burst_start = start + Seconds{rng.below(duration - burst + 1)};
      for (int64_t i = 0; i < p.burst_size; ++i) {
        Timestamp ts = burst_start + Seconds{rng.below(burst)};
        drafts.push_back({ts, seq++, plant_text(rng, zipf, cfg, p.phrase)});
      }
      if (!p.in_kb && std::find(gold_phrases.begin(), gold_phrases.end(), p.phrase) == gold_phrases.end()) {
        gold_phrases.push_back(p.phrase);
      }
    }
    std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
      return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq;
    });
    for (const Draft& d : drafts) {
      json rec = {{"id", "s" + std::to_string(cfg.seed) + "-" + std::to_string(summary.records)},
                  {"text", d.text},
                  {"ts", format_rfc3339(d.ts)}};
      stream << rec.dump() << '\n';
      ++summary.records;
    }
    if (!gold_phrases.empty()) {
      json line = {{"window_start", format_rfc3339(start)},
                   {"window_end", format_rfc3339(start + cfg.window_duration)},
                   {"entities", gold_phrases}};
      gold << line.dump() << '\n';
      summary.gold_entities += static_cast<int64_t>(gold_phrases.size());
    }
  }

  std::set<std::string> kb;
  for (const PlantSpec& p : cfg.plants) {
    if (!p.in_kb) continue;
    std::string title = textnorm::normalize(p.phrase);
    std::replace(title.begin(), title.end(), ' ', '_');
    kb.insert(title);
  }
  for (const std::string& title : kb) titles << title << '\n';
  summary.kb_titles = static_cast<int64_t>(kb.size());
  return summary;
}

}  // namespace emergent::synth
