// kgeval: command-line front end for tie-aware link-prediction evaluation.
//
//   kgeval synth     write the synthetic KG as TSV split files
//   kgeval ingest    parse TSV splits into a dataset cache
//   kgeval train     train (or initialize) a scorer and write a checkpoint
//   kgeval eval      evaluate a checkpoint under TOP / BOTTOM / RANDOM
//   kgeval diagnose  ties | relu | scores plot data
//   kgeval report    protocol comparison table from evaluation reports
//   kgeval verify    randomized oracle-equivalence suite

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgeval/kgeval.hpp"

namespace fs = std::filesystem;
using namespace kgeval;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitVerifyFailed = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Run directories are named by a hash of the canonical command config, so
// different configurations never write into the same place.
fs::path run_dir(const std::string& root, const std::string& command, const nlohmann::json& config) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(command + config.dump())));
  fs::path dir = fs::path(root) / (command + "-" + std::string(hex, 12));
  fs::create_directories(dir);
  write_file(dir / "config.json", nlohmann::json{{"command", command}, {"config", config}}.dump(2) + "\n");
  return dir;
}

struct DataArgs {
  std::string dataset;
  std::string train, valid, test;
  bool synthetic = false;
  std::uint64_t synthetic_seed = 7;

  void add_to(CLI::App* app) {
    app->add_option("--dataset", dataset, "Dataset cache written by `ingest`");
    app->add_option("--train", train, "Training split TSV");
    app->add_option("--valid", valid, "Validation split TSV");
    app->add_option("--test", test, "Test split TSV");
    app->add_flag("--synthetic", synthetic, "Use the built-in synthetic 50-entity KG");
    app->add_option("--synthetic-seed", synthetic_seed, "Seed of the synthetic KG")->capture_default_str();
  }

  Dataset load() const {
    if (synthetic) {
      SyntheticConfig c;
      c.seed = synthetic_seed;
      return synthetic_kg(c);
    }
    if (!dataset.empty()) return dataset_from_json(read_file(dataset));
    if (train.empty() && test.empty())
      throw Error("no dataset: pass --dataset, --train/--valid/--test or --synthetic");
    return load_dataset(train, valid, test);
  }

  nlohmann::json to_json() const {
    return {{"dataset", dataset}, {"train", train}, {"valid", valid}, {"test", test},
            {"synthetic", synthetic}, {"synthetic_seed", synthetic_seed}};
  }
};

struct SidesArg {
  std::string sides = "both";
  void add_to(CLI::App* app) {
    app->add_option("--sides", sides, "Prediction sides")
        ->check(CLI::IsMember({"head", "tail", "both"}))
        ->capture_default_str();
  }
  bool head() const { return sides != "tail"; }
  bool tail() const { return sides != "head"; }
};

std::vector<int> parse_hits(const std::string& s) {
  std::vector<int> ks;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const int k = std::stoi(item);
    if (k <= 0) throw Error("hits cutoffs must be positive");
    ks.push_back(k);
  }
  if (ks.empty()) throw Error("no hits cutoffs given");
  return ks;
}

void print_metrics_line(std::ostream& os, const char* name, const MetricSpread& s,
                        const std::vector<int>& ks, bool with_std) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-7s MRR %.4f", name, s.mean.mrr);
  os << buf;
  if (with_std) {
    std::snprintf(buf, sizeof buf, " ± %.4f", s.stddev.mrr);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "  MR %.2f", s.mean.mr);
  os << buf;
  for (int k : ks) {
    std::snprintf(buf, sizeof buf, "  H@%d %.4f", k, s.mean.hits.at(k));
    os << buf;
  }
  os << '\n';
}

void print_error(const std::string& type, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tie-aware evaluation harness for knowledge-graph link prediction.\n"
               "Environment: KG_EVAL_THREADS caps the evaluation worker count."};
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  app.require_subcommand(1);
  std::string out_root = "runs";
  app.add_option("--out", out_root, "Root directory for run outputs")->capture_default_str();

  // synth -------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Write the synthetic KG as train/valid/test TSV files");
  SyntheticConfig synth_cfg;
  synth->add_option("--entities", synth_cfg.entities)->capture_default_str();
  synth->add_option("--relations", synth_cfg.relations)->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Parse TSV splits into a JSON dataset cache");
  DataArgs ingest_data;
  ingest_data.add_to(ingest);

  // train -------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a scorer and write a checkpoint");
  DataArgs train_data;
  train_data.add_to(train_cmd);
  std::string model = "transe";
  std::size_t dim = 32;
  std::string norm = "l2";
  bool no_unit_norm = false;
  bool unfiltered_negatives = false;
  double constant = 0.0;
  double hidden_bias = TiedReluScorer::Options{}.hidden_bias;
  TrainConfig tcfg;
  tcfg.epochs = 200;
  tcfg.learning_rate = 0.05;
  tcfg.negatives = 5;
  train_cmd->add_option("--model", model, "Scorer kind")
      ->check(CLI::IsMember({"transe", "distmult", "tied-relu", "constant"}))
      ->capture_default_str();
  train_cmd->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
  train_cmd->add_option("--epochs", tcfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tcfg.learning_rate, "SGD learning rate")->capture_default_str();
  train_cmd->add_option("--margin", tcfg.margin)->capture_default_str();
  train_cmd->add_option("--negatives", tcfg.negatives, "Negatives per positive")->capture_default_str();
  train_cmd->add_option("--batch-size", tcfg.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tcfg.seed)->capture_default_str();
  train_cmd->add_option("--norm", norm, "TransE distance norm")
      ->check(CLI::IsMember({"l1", "l2"}))
      ->capture_default_str();
  train_cmd->add_flag("--no-unit-norm", no_unit_norm, "Disable TransE entity re-normalization");
  train_cmd->add_flag("--unfiltered-negatives", unfiltered_negatives,
                      "Do not reject known facts when sampling negatives");
  train_cmd->add_option("--constant", constant, "Output of the constant scorer")->capture_default_str();
  train_cmd->add_option("--hidden-bias", hidden_bias, "Initial hidden bias of tied-relu")
      ->capture_default_str();

  // eval --------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint under the tie protocols");
  DataArgs eval_data;
  eval_data.add_to(eval_cmd);
  std::string checkpoint;
  std::vector<std::string> protocol_names{"all"};
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  std::string hits = "1,3,10";
  SidesArg eval_sides;
  bool raw = false;
  bool per_query = false;
  std::string split = "test";
  double tie_epsilon = 0.0;
  std::size_t threads = 0;
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval_cmd->add_option("--protocol", protocol_names, "top, bottom, random or all (repeatable)")
      ->check(CLI::IsMember({"top", "bottom", "random", "all"}))
      ->capture_default_str();
  eval_cmd->add_option("--seeds", seeds, "RANDOM repetitions")->capture_default_str();
  eval_cmd->add_option("--seed", seed, "Base RANDOM seed")->capture_default_str();
  eval_cmd->add_option("--hits", hits, "Comma-separated Hits@k cutoffs")->capture_default_str();
  eval_sides.add_to(eval_cmd);
  eval_cmd->add_flag("--raw", raw, "Unfiltered candidate sets (diagnostics)");
  eval_cmd->add_flag("--per-query", per_query, "Include per-query ranks in the report");
  eval_cmd->add_option("--split", split, "Split to evaluate")
      ->check(CLI::IsMember({"valid", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--tie-epsilon", tie_epsilon, "Tolerance tie mode (diagnostics only)")
      ->capture_default_str();
  eval_cmd->add_option("--threads", threads, "Worker threads (0: KG_EVAL_THREADS or all cores)")
      ->capture_default_str();

  // diagnose ----------------------------------------------------------------
  auto* diagnose = app.add_subcommand("diagnose", "Tie and dead-ReLU statistics as plot data");
  diagnose->require_subcommand(1);
  DataArgs diag_data;
  std::string diag_checkpoint;
  SidesArg diag_sides;
  std::string diag_format = "csv";
  bool include_valid = false;
  std::size_t query_index = 0;
  std::string query_side = "tail";
  auto add_diag_common = [&](CLI::App* sub) {
    diag_data.add_to(sub);
    sub->add_option("--checkpoint", diag_checkpoint, "Checkpoint JSON")->required();
    diag_sides.add_to(sub);
    sub->add_option("--format", diag_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };
  auto* ties_cmd = diagnose->add_subcommand("ties", "Histogram of tied-negative counts");
  add_diag_common(ties_cmd);
  ties_cmd->add_flag("--include-valid", include_valid, "Also profile validation queries");
  auto* relu_cmd = diagnose->add_subcommand("relu", "Histogram of post-ReLU zero ratios");
  add_diag_common(relu_cmd);
  auto* scores_cmd = diagnose->add_subcommand("scores", "Raw candidate scores of one test query");
  add_diag_common(scores_cmd);
  scores_cmd->add_option("--query", query_index, "Test triple index")->capture_default_str();
  scores_cmd->add_option("--side", query_side)->check(CLI::IsMember({"head", "tail"}))->capture_default_str();

  // report ------------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Protocol comparison table from eval reports");
  std::vector<std::string> inputs, names, reported;
  std::string report_format = "markdown";
  double threshold = kDefaultSensitivityThreshold;
  report_cmd->add_option("--input", inputs, "EvalReport JSON (repeatable)")->required();
  report_cmd->add_option("--name", names, "Row label per input (repeatable)");
  report_cmd->add_option("--reported", reported,
                         "External MRR,MR,H@10 per input, '-' for none (repeatable)");
  report_cmd->add_option("--format", report_format)
      ->check(CLI::IsMember({"markdown", "csv", "json"}))
      ->capture_default_str();
  report_cmd->add_option("--threshold", threshold, "Affected if |MRR_TOP - MRR_BOTTOM| > threshold")
      ->capture_default_str();

  // verify ------------------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "Run the randomized oracle-equivalence suite");
  std::size_t trials = 500;
  std::uint64_t verify_seed = 0;
  verify_cmd->add_option("--trials", trials)->capture_default_str();
  verify_cmd->add_option("--seed", verify_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      const Dataset ds = synthetic_kg(synth_cfg);
      const auto dir = run_dir(out_root, "synth",
                               {{"entities", synth_cfg.entities},
                                {"relations", synth_cfg.relations},
                                {"seed", synth_cfg.seed}});
      for (auto [name, split] : {std::pair{"train.txt", &ds.train}, std::pair{"valid.txt", &ds.valid},
                                 std::pair{"test.txt", &ds.test}}) {
        std::ostringstream os;
        write_triples(os, *split, ds.entities, ds.relations);
        write_file(dir / name, os.str());
      }
      std::cout << dir.string() << '\n';
      return 0;
    }

    if (*ingest) {
      const Dataset ds = ingest_data.load();
      const auto dir = run_dir(out_root, "ingest", ingest_data.to_json());
      write_file(dir / "dataset.json", dataset_to_json(ds));
      std::cout << "entities " << ds.entity_count() << ", relations " << ds.relation_count()
                << ", train " << ds.train.size() << ", valid " << ds.valid.size() << ", test "
                << ds.test.size() << '\n'
                << (dir / "dataset.json").string() << '\n';
      return 0;
    }

    if (*train_cmd) {
      const Dataset ds = train_data.load();
      tcfg.filtered_negatives = !unfiltered_negatives;
      nlohmann::json config = {{"data", train_data.to_json()}, {"model", model}, {"dim", dim},
                               {"train", train_config_to_json(tcfg)}};
      std::unique_ptr<Scorer> scorer;
      std::optional<TrainResult> result;
      if (model == "constant") {
        config["constant"] = constant;
        scorer = std::make_unique<ConstantScorer>(constant, ds.entity_count(), ds.relation_count());
      } else {
        std::unique_ptr<DifferentiableScorer> s;
        if (model == "transe") {
          TransEScorer::Options o;
          o.norm = norm == "l1" ? Norm::kL1 : Norm::kL2;
          o.unit_norm_entities = !no_unit_norm;
          config["norm"] = norm;
          config["unit_norm_entities"] = o.unit_norm_entities;
          s = std::make_unique<TransEScorer>(ds.entity_count(), ds.relation_count(), dim, tcfg.seed, o);
        } else if (model == "tied-relu") {
          TiedReluScorer::Options o;
          o.hidden_bias = hidden_bias;
          config["hidden_bias"] = hidden_bias;
          s = std::make_unique<TiedReluScorer>(ds.entity_count(), ds.relation_count(), dim, tcfg.seed, o);
        } else {
          s = make_trainable_scorer(model, ds.entity_count(), ds.relation_count(), dim, tcfg.seed);
        }
        result = train(*s, ds, tcfg);
        scorer = std::move(s);
      }
      const auto dir = run_dir(out_root, "train", config);
      write_file(dir / "checkpoint.json", checkpoint_to_string(*scorer));
      if (result) {
        write_file(dir / "loss_trace.json", loss_trace_to_json(tcfg, *result).dump(2) + "\n");
        if (!result->loss_trace.empty()) {
          std::cout << "loss " << result->loss_trace.front() << " -> " << result->loss_trace.back()
                    << " over " << result->loss_trace.size() << " epochs\n";
        }
      }
      std::cout << (dir / "checkpoint.json").string() << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const Dataset ds = eval_data.load();
      const auto scorer = scorer_from_string(read_file(checkpoint));
      EvalConfig cfg;
      cfg.protocols.clear();
      for (const auto& p : protocol_names) {
        if (p == "all") {
          cfg.protocols = {Protocol::kTop, Protocol::kBottom, Protocol::kRandom};
          break;
        }
        const Protocol parsed = parse_protocol(p);
        if (std::find(cfg.protocols.begin(), cfg.protocols.end(), parsed) == cfg.protocols.end())
          cfg.protocols.push_back(parsed);
      }
      cfg.head_side = eval_sides.head();
      cfg.tail_side = eval_sides.tail();
      cfg.ks = parse_hits(hits);
      cfg.seed = seed;
      cfg.seeds = seeds;
      cfg.filtered = !raw;
      cfg.split = parse_split(split);
      cfg.tie_epsilon = tie_epsilon;
      cfg.threads = threads;
      cfg.keep_per_query = per_query;
      const EvalReport report = evaluate(ds, *scorer, cfg);
      const auto dir = run_dir(out_root, "eval",
                               {{"data", eval_data.to_json()},
                                {"checkpoint_hash", fnv1a(read_file(checkpoint))},
                                {"eval", config_to_json(cfg)},
                                {"per_query", per_query}});
      write_file(dir / "report.json", report_to_string(report, per_query));
      for (const auto& pr : report.protocols) {
        print_metrics_line(std::cout, to_string(pr.protocol), pr.summary, cfg.ks,
                           pr.protocol == Protocol::kRandom);
      }
      std::cout << "ties: mean " << report.ties.mean_tied << " per query, "
                << report.ties.fraction_with_ties * 100.0 << "% of queries tied\n"
                << (dir / "report.json").string() << '\n';
      return 0;
    }

    if (*diagnose) {
      const Dataset ds = diag_data.load();
      const auto scorer = scorer_from_string(read_file(diag_checkpoint));
      nlohmann::json config = {{"data", diag_data.to_json()},
                               {"checkpoint_hash", fnv1a(read_file(diag_checkpoint))},
                               {"sides", diag_sides.sides},
                               {"format", diag_format}};
      const bool csv = diag_format == "csv";
      if (*ties_cmd) {
        TieStatsConfig tc;
        tc.head_side = diag_sides.head();
        tc.tail_side = diag_sides.tail();
        tc.include_valid = include_valid;
        config["include_valid"] = include_valid;
        const TieHistogram h = tie_stats(ds, *scorer, tc);
        const auto dir = run_dir(out_root, "diagnose-ties", config);
        const auto path = dir / (csv ? "ties.csv" : "ties.json");
        write_file(path, csv ? tie_histogram_csv(h) : tie_histogram_json(h).dump(2) + "\n");
        std::cout << "queries " << h.query_count() << ", mean tied " << h.mean << ", max " << h.max
                  << ", with ties " << h.fraction_with_ties << '\n'
                  << path.string() << '\n';
      } else if (*relu_cmd) {
        const ReluStats s = relu_zero_stats(ds, *scorer, diag_sides.head(), diag_sides.tail());
        const auto dir = run_dir(out_root, "diagnose-relu", config);
        if (csv) {
          write_file(dir / "relu_valid.csv", zero_ratio_csv(s.valid));
          write_file(dir / "relu_negatives.csv", zero_ratio_csv(s.negatives));
        } else {
          write_file(dir / "relu.json", nlohmann::json{{"valid", zero_ratio_json(s.valid)},
                                                       {"negatives", zero_ratio_json(s.negatives)}}
                                                .dump(2) + "\n");
        }
        std::cout << "mean zero ratio: valid " << s.valid.mean << ", negatives " << s.negatives.mean
                  << '\n'
                  << dir.string() << '\n';
      } else {
        if (query_index >= ds.test.size()) throw Error("--query out of range");
        const Query q{ds.test[query_index], query_side == "head" ? Side::kHead : Side::kTail};
        config["query"] = query_index;
        config["side"] = query_side;
        const auto dir = run_dir(out_root, "diagnose-scores", config);
        write_file(dir / "scores.csv", score_dump_csv(ds, *scorer, q));
        std::cout << (dir / "scores.csv").string() << '\n';
      }
      return 0;
    }

    if (*report_cmd) {
      if (!names.empty() && names.size() != inputs.size())
        throw Error("--name must be given once per --input");
      if (!reported.empty() && reported.size() != inputs.size())
        throw Error("--reported must be given once per --input");
      std::vector<ComparisonRow> rows;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::optional<ReportedMetrics> ext;
        if (!reported.empty() && reported[i] != "-") {
          std::vector<double> v;
          std::stringstream ss(reported[i]);
          std::string item;
          while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
          if (v.size() != 3) throw Error("--reported expects MRR,MR,H@10");
          ext = ReportedMetrics{v[0], v[1], v[2]};
        }
        rows.push_back(comparison_row(report_from_string(read_file(inputs[i])),
                                      names.empty() ? std::string{} : names[i], ext));
      }
      const std::string text = render_report(rows, parse_report_format(report_format), threshold);
      std::cout << text;
      return 0;
    }

    if (*verify_cmd) {
      const VerifyReport r = run_verify(trials, verify_seed);
      std::cout << "trials " << r.trials << ", queries " << r.queries << '\n'
                << "  filter mismatches         " << r.filter_mismatches << '\n'
                << "  tie-profile mismatches    " << r.profile_mismatches << '\n'
                << "  TOP mismatches            " << r.top_mismatches << '\n'
                << "  BOTTOM mismatches         " << r.bottom_mismatches << '\n'
                << "  RANDOM support violations " << r.random_support_violations << '\n'
                << "  midpoint violations       " << r.midpoint_violations << '\n'
                << "  evaluate() mismatches     " << r.evaluate_mismatches << '\n'
                << (r.total_mismatches() == 0 ? "PASS" : "FAIL") << '\n';
      return r.total_mismatches() == 0 ? 0 : kExitVerifyFailed;
    }
  } catch (const ParseError& e) {
    print_error("parse", e.what());
    return kExitRuntime;
  } catch (const FormatError& e) {
    print_error("format", e.what());
    return kExitRuntime;
  } catch (const NumericError& e) {
    print_error("numeric", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return kExitRuntime;
  }
  return 0;
}
