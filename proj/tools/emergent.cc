// emergent: run / eval / gen / inspect.
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "emergent/evalkit.h"
#include "emergent/pipeline.h"
#include "emergent/synthgen.h"

using namespace emergent;

namespace {

// Flags given on the command line override --config; unset flags leave the
// config (or the defaults) alone.
class Overrides {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& name, std::function<T&(pipeline::RunConfig&)> field,
                   const std::string& help) {
    auto value = std::make_shared<T>(field(defaults_));
    CLI::Option* opt = app->add_option(name, *value, help)->default_val(*value);
    list_.push_back({opt, [value, field](pipeline::RunConfig& c) { field(c) = *value; }});
    return opt;
  }
  CLI::Option* flag(CLI::App* app, const std::string& name, std::function<bool&(pipeline::RunConfig&)> field,
                    const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(name, *value, help);
    list_.push_back({opt, [value, field](pipeline::RunConfig& c) { field(c) = *value; }});
    return opt;
  }
  void apply(pipeline::RunConfig& cfg) const {
    for (const auto& [opt, set] : list_) {
      if (opt->count() > 0) set(cfg);
    }
  }

 private:
  pipeline::RunConfig defaults_;
  std::vector<std::pair<CLI::Option*, std::function<void(pipeline::RunConfig&)>>> list_;
};

Timestamp parse_origin(const std::string& text) {
  auto ts = parse_rfc3339(text);
  if (!ts) throw ConfigError("--origin must be an RFC 3339 timestamp, got \"" + text + "\"");
  return *ts;
}

Seconds days_to_seconds(double days) {
  if (!(days > 0)) throw ConfigError("--window-days must be positive");
  return Seconds{std::llround(days * 86400.0)};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emerging-entity discovery over tweet streams"};
  app.require_subcommand(1);

  // run
  CLI::App* run = app.add_subcommand("run", "Process a JSONL tweet stream and report emerging entities");
  std::string input = "-", output = "-", config_path;
  bool print_config = false;
  double window_days = 4;
  std::string origin;
  run->add_option("input", input, "Tweet JSONL file, - for stdin")->default_val("-");
  run->add_option("-o,--output", output, "Report file, - for stdout")->default_val("-");
  run->add_option("--config", config_path, "RunConfig JSON; explicit flags override it");
  run->add_flag("--print-config", print_config, "Print the effective config and exit");
  auto* days_opt = run->add_option("--window-days", window_days, "Window length in days")->default_val(4);
  auto* origin_opt = run->add_option("--origin", origin, "Start of window 0 (default: midnight UTC of first record)");
  using C = pipeline::RunConfig;
  Overrides ov;
  ov.flag(run, "--strict", [](C& c) -> bool& { return c.replay.strict; }, "Abort on the first bad record");
  ov.add<size_t>(run, "--reorder-buffer", [](C& c) -> size_t& { return c.replay.reorder_buffer; },
                 "Records held back to absorb timestamp disorder");
  ov.flag(run, "--carry-state", [](C& c) -> bool& { return c.replay.window.carry_state; },
          "Keep the online model across windows");
  ov.add<int>(run, "--n-min", [](C& c) -> int& { return c.ngram.n_min; }, "Shortest n-gram");
  ov.add<int>(run, "--n-max", [](C& c) -> int& { return c.ngram.n_max; }, "Longest n-gram");
  ov.add<std::string>(run, "--stopwords", [](C& c) -> std::string& { return c.stopwords; }, "Stopword file");
  ov.add<double>(run, "--lambda", [](C& c) -> double& { return c.cluster.lambda; }, "Fading rate per hour");
  ov.add<double>(run, "--sim-threshold", [](C& c) -> double& { return c.cluster.sim_threshold; },
                 "Merge threshold");
  ov.add<double>(run, "--alpha", [](C& c) -> double& { return c.cluster.alpha; },
                 "TF-IDF share of the similarity (rest: embeddings)");
  ov.add<int64_t>(run, "--t-gap", [](C& c) -> int64_t& { return c.cluster.t_gap; }, "Insertions between cleanups");
  ov.add<double>(run, "--w-min", [](C& c) -> double& { return c.cluster.w_min; }, "Prune weight floor");
  ov.add<double>(run, "--link-threshold", [](C& c) -> double& { return c.link_threshold; },
                 "Macro-clustering link threshold");
  ov.add<int64_t>(run, "--min-cluster-tweets", [](C& c) -> int64_t& { return c.min_cluster_tweets; },
                  "Select macro-clusters with more tweets than this");
  ov.add<int>(run, "--top-k", [](C& c) -> int& { return c.keyphrase.k; }, "Phrases per macro-cluster");
  ov.add<bool>(run, "--collapse-subphrases", [](C& c) -> bool& { return c.keyphrase.collapse_subphrases; },
               "Drop phrases that are fragments of a longer top phrase");
  ov.add<double>(run, "--subphrase-ratio", [](C& c) -> double& { return c.keyphrase.subphrase_ratio; },
                 "Weight ratio for fragment collapsing");
  ov.add<double>(run, "--group-threshold", [](C& c) -> double& { return c.group_theta; },
                 "Embedding similarity for grouping phrases");
  ov.add<std::string>(run, "--kb-titles", [](C& c) -> std::string& { return c.kb_titles; }, "Titles dump");
  ov.add<std::string>(run, "--kb-endpoint", [](C& c) -> std::string& { return c.kb_endpoint; },
                      "MediaWiki API URL for live checks");
  ov.add<std::string>(run, "--kb-cache", [](C& c) -> std::string& { return c.kb_cache; }, "Live answer cache");
  ov.add<std::string>(run, "--vectors", [](C& c) -> std::string& { return c.vectors; }, "Word vectors (.vec)");
  ov.add<std::string>(run, "--dump-snapshots", [](C& c) -> std::string& { return c.dump_snapshots; },
                      "Directory for per-window snapshot dumps");

  // eval
  CLI::App* ev = app.add_subcommand("eval", "Score predicted entities against gold, per window");
  std::string predicted, gold, baseline, match = "exact", ev_vectors, tsv_path, json_path, format = "tsv";
  double theta = 0.8;
  ev->add_option("--predicted", predicted, "Report or entity JSONL")->required();
  ev->add_option("--gold", gold, "Gold JSONL")->required();
  ev->add_option("--baseline", baseline, "Baseline entity JSONL");
  ev->add_option("--match", match, "exact or semantic")->check(CLI::IsMember({"exact", "semantic"}))->default_val("exact");
  ev->add_option("--theta", theta, "Semantic match threshold")->default_val(0.8);
  ev->add_option("--vectors", ev_vectors, "Word vectors for semantic matching");
  ev->add_option("--format", format, "What to print on stdout")->check(CLI::IsMember({"tsv", "json"}))->default_val("tsv");
  ev->add_option("--tsv", tsv_path, "Also write the TSV table here");
  ev->add_option("--json", json_path, "Also write the JSON table here");

  // gen
  CLI::App* gen = app.add_subcommand("gen", "Write a synthetic stream, its gold file and a toy KB");
  synth::GenConfig g;
  std::string out_dir = ".", gen_origin;
  double gen_days = 4;
  std::vector<std::string> plants;
  gen->add_option("--seed", g.seed)->default_val(g.seed);
  gen->add_option("--vocab-size", g.vocab_size, "Background vocabulary size")->default_val(g.vocab_size);
  gen->add_option("--tweets-per-window", g.tweets_per_window, "Background tweets per window")
      ->default_val(g.tweets_per_window);
  gen->add_option("--windows", g.n_windows)->default_val(g.n_windows);
  gen->add_option("--plant", plants, "phrase:window:burst:kb|new (repeatable)");
  gen->add_option("--origin", gen_origin, "Start of window 0")->default_val(format_rfc3339(g.origin));
  gen->add_option("--window-days", gen_days)->default_val(4);
  gen->add_option("--zipf", g.zipf_exponent)->default_val(g.zipf_exponent);
  gen->add_option("--min-tokens", g.min_tokens)->default_val(g.min_tokens);
  gen->add_option("--max-tokens", g.max_tokens)->default_val(g.max_tokens);
  gen->add_option("--context-rate", g.plant_context_rate, "Share of plant tweets inside background text")
      ->default_val(g.plant_context_rate);
  gen->add_option("--burst-hours", g.burst_hours)->default_val(g.burst_hours);
  gen->add_option("--n-min", g.ngram.n_min)->default_val(g.ngram.n_min);
  gen->add_option("--n-max", g.ngram.n_max)->default_val(g.ngram.n_max);
  gen->add_option("--out-dir", out_dir, "Writes stream.jsonl, gold.jsonl, titles.txt")->default_val(".");

  // inspect
  CLI::App* insp = app.add_subcommand("inspect", "Print a snapshot dump as a cluster table");
  std::string snapshot_path;
  size_t top_terms = 5;
  insp->add_option("snapshot", snapshot_path)->required();
  insp->add_option("--top-terms", top_terms)->default_val(5);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      pipeline::RunConfig cfg = config_path.empty() ? pipeline::RunConfig{} : pipeline::RunConfig::load(config_path);
      ov.apply(cfg);
      if (days_opt->count()) cfg.replay.window.duration = days_to_seconds(window_days);
      if (origin_opt->count()) cfg.replay.window.origin = parse_origin(origin);
      cfg.validate();
      if (print_config) {
        std::cout << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      auto res = pipeline::Resources::load(cfg);
      std::ifstream in_file;
      if (input != "-") {
        in_file.open(input, std::ios::binary);
        if (!in_file) throw IoError("cannot open " + input);
      }
      std::istream& in = input == "-" ? std::cin : in_file;
      std::ofstream out_file;
      if (output != "-") out_file = open_out(output);
      std::ostream& out = output == "-" ? std::cout : out_file;
      auto summary = pipeline::run(cfg, res, in, input, out);
      std::cerr << summary.replay.processed << " tweets, " << summary.replay.skipped << " skipped, "
                << summary.replay.windows << " windows, " << summary.entities << " emerging entities\n";
    } else if (*ev) {
      eval::MatchMode mode;
      std::optional<embed::EmbeddingTable> table;
      if (match == "semantic") {
        if (ev_vectors.empty()) throw ConfigError("--match semantic needs --vectors");
        table.emplace(embed::load_vectors(ev_vectors));
        mode.kind = eval::MatchMode::Kind::kSemantic;
        mode.theta = theta;
        mode.table = &*table;
      }
      auto ours = eval::read_entity_file(predicted);
      auto truth = eval::read_entity_file(gold);
      eval::EntityLists base;
      if (!baseline.empty()) base = eval::read_entity_file(baseline);
      auto rows = eval::compare_runs(ours, base, truth, mode);
      std::string tsv = eval::to_tsv(rows), js = eval::to_json(rows, mode);
      if (!tsv_path.empty()) open_out(tsv_path) << tsv;
      if (!json_path.empty()) open_out(json_path) << js << '\n';
      if (format == "tsv") {
        std::cout << tsv;
      } else {
        std::cout << js << '\n';
      }
    } else if (*gen) {
      g.origin = parse_origin(gen_origin);
      g.window_duration = days_to_seconds(gen_days);
      for (const auto& p : plants) g.plants.push_back(synth::parse_plant(p));
      std::filesystem::path dir(out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
      auto stream = open_out((dir / "stream.jsonl").string());
      auto gold_out = open_out((dir / "gold.jsonl").string());
      auto titles = open_out((dir / "titles.txt").string());
      auto s = synth::gen_stream(g, stream, gold_out, titles);
      std::cerr << s.records << " tweets, " << s.gold_entities << " gold entities, " << s.kb_titles
                << " KB titles\n";
    } else if (*insp) {
      std::cout << pipeline::inspect_table(pipeline::read_snapshot(snapshot_path), top_terms);
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
