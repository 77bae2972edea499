#include "revtrack/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "revtrack/classifier.hpp"
#include "revtrack/digest.hpp"
#include "revtrack/error.hpp"
#include "revtrack/graph_io.hpp"
#include "revtrack/graphlets.hpp"
#include "revtrack/model.hpp"
#include "revtrack/parallel.hpp"
#include "revtrack/rec_eval.hpp"
#include "revtrack/rev_filter.hpp"
#include "revtrack/synth.hpp"

#ifndef REVTRACK_VERSION
#define REVTRACK_VERSION "0.0.0"
#endif

namespace revtrack::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

const std::vector<std::string> kCommands = {"generate", "graphlets", "train", "finetune",
                                            "classify", "eval-cls",  "filter", "bench-rec"};

// Flags shared by commands that read a dataset and re-derive the split.
struct SplitArgs {
  std::uint64_t split_seed = 0;
  double few_shot = 1.0;
};

struct Options {
  std::string config_path;
  std::size_t threads = 0;

  // generate
  std::string out_dir;
  std::optional<std::uint64_t> generate_seed;

  // graphlets
  std::string subgraphs_path;
  std::size_t node_cap = kDefaultGraphletNodeCap;

  // shared
  std::string data_dir;
  std::string model_path;
  std::string out_path;
  SplitArgs split;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  bool verbose = false;

  // train
  std::string arch = "ds";
  std::size_t epochs = 150;
  std::size_t patience = 20;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::string pool = "sum";
  double pos_weight = 1.0;

  // finetune
  double gamma = 0.4;
  int merge_min = 1;
  int merge_max = 20;
  std::size_t finetune_epochs = 30;
  double finetune_lr = 1e-4;
  std::size_t num_pairs = 0;

  // eval-cls / bench-rec
  std::string eval_split = "test";

  // filter / bench-rec
  std::string senders_path;
  std::string receivers_path;
  std::size_t k = 10;
  double alpha_keep = 1.5;
  std::string split_rule = "sorted";
  std::size_t senders_partition = 1;
  std::string settings = "1+5@1";
  std::size_t n_instances = 256;
  std::string variant = "full";
  std::string base_model_path;
};

// --- helpers ---------------------------------------------------------------

std::string join_command(const std::vector<std::string>& args) {
  std::string out = "revtrack";
  for (const auto& a : args) out += " " + a;
  return out;
}

// Expands "--config file.json" into flags placed right after the command
// name, so that flags given explicitly on the command line (parsed later)
// take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  const auto cmd = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
  });
  if (cmd == args.end() || *cmd == "generate") return args;
  const std::size_t cmd_pos = static_cast<std::size_t>(cmd - args.begin());
  std::string path;
  for (std::size_t i = cmd_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("bad config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file " + path + " must hold a JSON object");
  std::vector<std::string> flags;
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back("--" + name);
    } else if (value.is_string()) {
      flags.push_back("--" + name);
      flags.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      flags.push_back("--" + name);
      flags.push_back(value.dump());
    } else {
      throw ValidationError("config key '" + key + "' must be a string, number or boolean");
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(cmd_pos + 1), flags.begin(), flags.end());
  return args;
}

json resolved_options(const CLI::App& sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "--config" || name == "--threads" || name == "--verbose") continue;
    if (opt->count() > 0) {
      j[name] = opt->results().back();  // options take the last value
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

struct Manifest {
  Manifest(std::string cmd, json cfg) : command(std::move(cmd)), config(std::move(cfg)) {}

  std::string command;
  json config;
  json seeds = json::object();
  std::vector<fs::path> inputs;
  Clock::time_point start = Clock::now();

  void write(const fs::path& path) const {
    json digests = json::object();
    for (const auto& in : inputs) digests[in.generic_string()] = sha256_file(in);
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    json m = {{"command", command},
              {"config", config},
              {"config_hash", sha256_hex(config.dump())},
              {"seeds", seeds},
              {"input_digests", digests},
              {"tool_version", REVTRACK_VERSION},
              {"wall_time", wall}};
    write_text_file(path, m.dump(2) + "\n");
  }
};

fs::path manifest_path_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

std::vector<fs::path> dataset_inputs(const fs::path& dir) {
  const DataFiles f = DataFiles::in(dir);
  return {f.edges, f.nodes, f.subgraphs};
}

// Pairs of a dataset with the split used by train/finetune/eval.
struct SplitData {
  SynthDataset data;
  PairSet pairs;
  SplitIndices indices;
};

SplitData load_split(const std::string& dir, const SplitArgs& args) {
  SplitData s;
  s.data = load_dataset(dir);
  s.pairs = make_pairs(s.data.graph, s.data.subgraphs);
  SplitSpec spec;
  spec.seed = args.split_seed;
  spec.few_shot = args.few_shot;
  s.indices = split(s.pairs.pairs, spec);
  return s;
}

std::vector<NodeId> read_id_list(const fs::path& path, const BackgroundGraph& graph) {
  std::istringstream in(read_text_file(path));
  std::vector<NodeId> ids;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw LoadError(path.string() + " row " + std::to_string(row) + ": not an integer id");
    }
    const auto id = graph.find_external(value);
    if (!id) throw LoadError(path.string() + " row " + std::to_string(row) + ": unknown node " + token);
    ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw ValidationError(path.string() + " lists no nodes");
  return ids;
}

void check_features(const Model& model, const BackgroundGraph& graph) {
  if (model.config().feature_dim != graph.feature_dim()) {
    throw ShapeError("model expects " + std::to_string(model.config().feature_dim) + " features, data has " +
                     std::to_string(graph.feature_dim()));
  }
}

// --- commands ---------------------------------------------------------------

int run_generate(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream& err) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  SynthConfig config;
  if (!o.config_path.empty()) {
    try {
      config = synth_config_from_json(json::parse(read_text_file(o.config_path)));
    } catch (const json::exception& e) {
      throw ValidationError("bad config file " + o.config_path + ": " + e.what());
    }
    manifest.inputs.push_back(o.config_path);
  }
  if (o.generate_seed) config.seed = *o.generate_seed;
  config.validate();
  manifest.config["synth"] = to_json(config);
  manifest.seeds["seed"] = config.seed;
  const SynthDataset data = generate(config);
  write_dataset(data, o.out_dir);
  manifest.write(fs::path(o.out_dir) / "manifest.json");
  std::size_t suspicious = 0;
  for (const auto& sg : data.subgraphs) suspicious += sg.label == SubgraphLabel::kSuspicious;
  err << "generated " << data.graph.num_nodes() << " nodes, " << data.graph.num_edges() << " edges, "
      << data.subgraphs.size() << " subgraphs (" << suspicious << " suspicious)\n";
  return kExitOk;
}

json histogram_json(const GraphletHistogram& h) {
  json counts = json::object();
  json freqs = json::object();
  const auto f = h.frequencies();
  for (std::size_t i = 0; i < kNumGraphlets; ++i) {
    const std::string name(to_string(static_cast<Graphlet>(i)));
    counts[name] = h.counts[i];
    freqs[name] = f ? json((*f)[i]) : json(nullptr);
  }
  return {{"counts", counts}, {"frequencies", freqs}, {"skipped", h.skipped}};
}

int run_graphlets(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream&) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  manifest.inputs.push_back(o.subgraphs_path);
  const auto subgraphs = read_subgraphs(fs::path(o.subgraphs_path));
  json out = histogram_json(graphlet_census(subgraphs, o.node_cap));
  json by_label = json::object();
  for (const char* name : {"licit", "suspicious"}) {
    std::vector<Subgraph> subset;
    for (const auto& sg : subgraphs) {
      if (sg.label && to_string(*sg.label) == name) subset.push_back(sg);
    }
    if (!subset.empty()) by_label[name] = histogram_json(graphlet_census(subset, o.node_cap));
  }
  out["by_label"] = by_label;
  write_text_file(o.out_path, out.dump(2) + "\n");
  manifest.write(manifest_path_for(o.out_path));
  return kExitOk;
}

TrainConfig train_config(const Options& o, std::size_t feature_dim) {
  TrainConfig c;
  c.model.arch = parse_arch(o.arch);
  c.model.feature_dim = feature_dim;
  c.model.hidden_dim = o.hidden;
  c.model.mlp_layers = o.layers;
  c.model.pool = nn::parse_pool(o.pool);
  c.model.readout = c.model.pool;
  c.max_epochs = o.epochs;
  c.patience = o.patience;
  c.batch_size = o.batch_size;
  c.learning_rate = o.lr;
  c.positive_weight = o.pos_weight;
  c.seed = o.seed;
  c.log_progress = o.verbose;
  return c;
}

int run_train(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream& err) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  manifest.inputs = dataset_inputs(o.data_dir);
  manifest.seeds = {{"seed", o.seed}, {"split_seed", o.split.split_seed}};
  const SplitData s = load_split(o.data_dir, o.split);
  const TrainConfig config = train_config(o, s.data.graph.feature_dim());
  const auto train_set = select(s.pairs.pairs, s.indices.train);
  const auto valid_set = select(s.pairs.pairs, s.indices.valid);
  const TrainResult result = train(train_set, valid_set, graph_features(s.data.graph), config);
  save_checkpoint(result.model, o.out_path);
  manifest.write(manifest_path_for(o.out_path));
  err << "trained " << to_string(config.model.arch) << " on " << train_set.size() << " pairs; best epoch "
      << result.best_epoch << "\n";
  return kExitOk;
}

int run_finetune(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream& err) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  manifest.inputs = dataset_inputs(o.data_dir);
  manifest.inputs.push_back(o.model_path);
  manifest.seeds = {{"seed", o.seed}, {"split_seed", o.split.split_seed}};
  const Model model = load_checkpoint(o.model_path);
  const SplitData s = load_split(o.data_dir, o.split);
  check_features(model, s.data.graph);
  FinetuneConfig config;
  config.augment.gamma = o.gamma;
  config.augment.merge_range = {o.merge_min, o.merge_max};
  config.augment.seed = o.seed;
  config.augment.num_pairs = o.num_pairs;
  config.train.max_epochs = o.finetune_epochs;
  config.train.learning_rate = o.finetune_lr;
  config.train.patience = o.patience;
  config.train.batch_size = o.batch_size;
  config.train.positive_weight = o.pos_weight;
  config.train.seed = o.seed;
  config.train.log_progress = o.verbose;
  const auto train_set = select(s.pairs.pairs, s.indices.train);
  const auto valid_set = select(s.pairs.pairs, s.indices.valid);
  const TrainResult result = finetune(model, train_set, valid_set, graph_features(s.data.graph), config);
  save_checkpoint(result.model, o.out_path);
  manifest.write(manifest_path_for(o.out_path));
  err << "fine-tuned; best epoch " << result.best_epoch << "\n";
  return kExitOk;
}

int run_classify(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream& err) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  const DataFiles files = DataFiles::in(o.data_dir);
  const fs::path subgraphs_path = o.subgraphs_path.empty() ? files.subgraphs : fs::path(o.subgraphs_path);
  manifest.inputs = {files.edges, files.nodes, subgraphs_path, o.model_path};
  const Model model = load_checkpoint(o.model_path);
  const BackgroundGraph graph = load_graph(files.edges, files.nodes);
  check_features(model, graph);
  const auto subgraphs = read_subgraphs(subgraphs_path, graph);
  std::vector<BoundarySets> boundaries(subgraphs.size());
  parallel_for(subgraphs.size(), [&](std::size_t i) { boundaries[i] = extract_boundary(graph, subgraphs[i]); });
  std::vector<SRPair> pairs;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    if (boundaries[i].empty_side()) continue;
    pairs.push_back({boundaries[i].senders, boundaries[i].receivers});
    owner.push_back(i);
  }
  const auto scores = score_pairs(model, pairs, graph_features(graph));
  std::ostringstream csv;
  csv << "subgraph_id,score,label_pred\n";
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto label = scores[j] >= o.threshold ? SubgraphLabel::kSuspicious : SubgraphLabel::kLicit;
    csv << subgraphs[owner[j]].id << ',' << format_double(scores[j]) << ',' << to_string(label) << '\n';
  }
  write_text_file(o.out_path, csv.str());
  manifest.write(manifest_path_for(o.out_path));
  if (pairs.size() < subgraphs.size()) {
    err << "warning: skipped " << subgraphs.size() - pairs.size() << " subgraphs with an empty sender or receiver set\n";
  }
  return kExitOk;
}

std::vector<std::size_t> split_by_name(const SplitIndices& idx, const std::string& name, std::size_t total) {
  if (name == "train") return idx.train;
  if (name == "valid") return idx.valid;
  if (name == "test") return idx.test;
  if (name == "all") {
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  throw ValidationError("unknown split '" + name + "' (expected train, valid, test or all)");
}

int run_eval_cls(const Options& o, std::ostream& out) {
  const Model model = load_checkpoint(o.model_path);
  SplitArgs args = o.split;
  args.few_shot = 1.0;
  const SplitData s = load_split(o.data_dir, args);
  check_features(model, s.data.graph);
  const auto set = select(s.pairs.pairs, split_by_name(s.indices, o.eval_split, s.pairs.pairs.size()));
  const ClassifierMetrics m = evaluate(model, set, graph_features(s.data.graph), o.threshold);
  const json j = {{"split", o.eval_split},   {"pr_auc", m.pr_auc},       {"f1", m.f1},
                  {"precision", m.precision}, {"recall", m.recall},       {"threshold", m.threshold},
                  {"positives", m.positives}, {"negatives", m.negatives}};
  if (o.out_path.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_text_file(o.out_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

FilterConfig filter_config(const Options& o) {
  FilterConfig c;
  c.k = o.k;
  c.alpha_keep = o.alpha_keep;
  c.split_rule = parse_split_rule(o.split_rule);
  c.seed = o.seed;
  c.validate();
  return c;
}

int run_filter(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream& err) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  const DataFiles files = DataFiles::in(o.data_dir);
  manifest.inputs = {files.edges, files.nodes, o.model_path, o.senders_path, o.receivers_path};
  manifest.seeds = {{"seed", o.seed}};
  const FilterConfig config = filter_config(o);
  const Model model = load_checkpoint(o.model_path);
  const BackgroundGraph graph = load_graph(files.edges, files.nodes);
  check_features(model, graph);
  const SRPair initial{read_id_list(o.senders_path, graph), read_id_list(o.receivers_path, graph)};
  const ModelScorer scorer(model, graph_features(graph));
  FilterStats stats;
  const auto links = rev_filter_partitioned(initial, config, scorer, o.senders_partition, &stats);
  std::ostringstream csv;
  csv << "rank,sender,receiver,score\n";
  for (std::size_t i = 0; i < links.size(); ++i) {
    csv << i + 1 << ',' << graph.external_id(links[i].sender) << ',' << graph.external_id(links[i].receiver) << ','
        << format_double(links[i].score) << '\n';
  }
  write_text_file(o.out_path, csv.str());
  manifest.write(manifest_path_for(o.out_path));
  err << "filter: " << stats.iterations << " iterations, " << stats.scored_pairs << " pairs scored\n";
  if (stats.scorer_failures > 0) err << "warning: " << stats.scorer_failures << " pairs fell back to score 0\n";
  return kExitOk;
}

int run_bench_rec(const Options& o, const std::vector<std::string>& args, const CLI::App& sub, std::ostream& err) {
  Manifest manifest{join_command(args), resolved_options(sub)};
  manifest.inputs = dataset_inputs(o.data_dir);
  manifest.inputs.push_back(o.model_path);
  BenchmarkConfig config;
  config.filter = filter_config(o);
  config.variant = parse_variant(o.variant);
  config.n_instances = o.n_instances;
  config.seed = o.seed;
  config.senders_partition = o.senders_partition;
  const auto settings = parse_settings(o.settings);
  manifest.seeds = {{"seed", o.seed}, {"split_seed", o.split.split_seed}};

  std::string scorer_path = o.model_path;
  if (config.variant == Variant::kNoFinetune && !o.base_model_path.empty()) {
    scorer_path = o.base_model_path;
    manifest.inputs.push_back(scorer_path);
  }
  const Model model = load_checkpoint(scorer_path);

  SplitArgs split_args = o.split;
  split_args.few_shot = 1.0;
  const SplitData s = load_split(o.data_dir, split_args);
  check_features(model, s.data.graph);
  const auto chosen = split_by_name(s.indices, o.eval_split, s.pairs.pairs.size());
  std::unordered_set<std::string> keep;
  for (std::size_t i : chosen) {
    for (const auto& id : s.pairs.pairs[i].origin) keep.insert(id);
  }
  std::vector<Subgraph> subset;
  for (const auto& sg : s.data.subgraphs) {
    if (keep.contains(sg.id)) subset.push_back(sg);
  }
  const RecPool pool = RecPool::build(s.data.graph, subset);
  const ModelScorer scorer(model, graph_features(s.data.graph));
  const auto results = run_benchmark(pool, settings, config, scorer);

  json rows = json::array();
  for (const auto& r : results) {
    rows.push_back(to_json(r));
    err << r.setting.to_string() << ": HR " << r.hr_mean << " NDCG " << r.ndcg_mean << " density "
        << r.density_mean << "\n";
  }
  const json j = {{"variant", std::string(to_string(config.variant))},
                  {"n_instances", config.n_instances},
                  {"seed", config.seed},
                  {"results", rows}};
  write_text_file(o.out_path, j.dump(2) + "\n");
  manifest.write(manifest_path_for(o.out_path));
  return kExitOk;
}

// --- parser -----------------------------------------------------------------

void add_split_flags(CLI::App* sub, Options& o, bool few_shot) {
  sub->add_option("--split-seed", o.split.split_seed, "Seed of the 80:10:10 split")->capture_default_str();
  if (few_shot) {
    sub->add_option("--few-shot", o.split.few_shot, "Fraction of each training class kept")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON file whose keys mirror flags; flags win");
  sub->add_option("--threads", o.threads, "Worker thread cap (default: REVTRACK_THREADS or all cores)");
}

void add_filter_flags(CLI::App* sub, Options& o) {
  sub->add_option("--k", o.k, "Number of recommended links")->capture_default_str();
  sub->add_option("--alpha-keep", o.alpha_keep, "Over-retention factor (>= 1)")->capture_default_str();
  sub->add_option("--split", o.split_rule, "Halving rule: sorted|random")->capture_default_str();
  sub->add_option("--senders-partition", o.senders_partition, "Run on N contiguous sender chunks")
      ->capture_default_str();
}

}  // namespace

int dispatch(std::vector<std::string> raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"revtrack: money-laundering subgraph classification and link discovery"};
  app.name("revtrack");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", REVTRACK_VERSION);

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--config", o.config_path, "Synthetic generator config (JSON)");
  gen->add_option("--threads", o.threads, "Worker thread cap");
  gen->add_option("--out-dir", o.out_dir, "Output directory")->required();
  gen->add_option("--seed", o.generate_seed, "Override the config seed");

  auto* glets = app.add_subcommand("graphlets", "Graphlet census of a subgraph file");
  add_common(glets, o);
  glets->add_option("--subgraphs", o.subgraphs_path, "subgraphs.jsonl")->required();
  glets->add_option("--node-cap", o.node_cap, "Skip subgraphs with more nodes")->capture_default_str();
  glets->add_option("--out", o.out_path, "Output JSON")->required();

  auto* tr = app.add_subcommand("train", "Train a subgraph classifier");
  add_common(tr, o);
  tr->add_option("--arch", o.arch, "ds|bp")->capture_default_str();
  tr->add_option("--data-dir", o.data_dir, "Dataset directory")->required();
  add_split_flags(tr, o, true);
  tr->add_option("--seed", o.seed, "Initialization and shuffling seed")->capture_default_str();
  tr->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
  tr->add_option("--patience", o.patience, "Early-stopping patience")->capture_default_str();
  tr->add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str();
  tr->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--hidden", o.hidden, "Hidden width")->capture_default_str();
  tr->add_option("--layers", o.layers, "Layers per MLP")->capture_default_str();
  tr->add_option("--pool", o.pool, "sum|mean|max")->capture_default_str();
  tr->add_option("--pos-weight", o.pos_weight, "Loss weight of suspicious pairs")->capture_default_str();
  tr->add_option("--out", o.out_path, "Output checkpoint")->required();
  tr->add_flag("--verbose", o.verbose, "Log every epoch");

  auto* ft = app.add_subcommand("finetune", "Fine-tune on merged pairs");
  add_common(ft, o);
  ft->add_option("--model", o.model_path, "Input checkpoint")->required();
  ft->add_option("--data-dir", o.data_dir, "Dataset directory")->required();
  add_split_flags(ft, o, true);
  ft->add_option("--seed", o.seed, "Augmentation and shuffling seed")->capture_default_str();
  ft->add_option("--gamma", o.gamma, "Decay of the merge-count distribution")->capture_default_str();
  ft->add_option("--merge-min", o.merge_min, "Smallest merge count")->capture_default_str();
  ft->add_option("--merge-max", o.merge_max, "Largest merge count")->capture_default_str();
  ft->add_option("--num-pairs", o.num_pairs, "Merged pairs per epoch set (0: as many as inputs)")
      ->capture_default_str();
  ft->add_option("--epochs", o.finetune_epochs, "Maximum epochs")->capture_default_str();
  ft->add_option("--patience", o.patience, "Early-stopping patience")->capture_default_str();
  ft->add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str();
  ft->add_option("--lr", o.finetune_lr, "Adam learning rate")->capture_default_str();
  ft->add_option("--pos-weight", o.pos_weight, "Loss weight of suspicious pairs")->capture_default_str();
  ft->add_option("--out", o.out_path, "Output checkpoint")->required();
  ft->add_flag("--verbose", o.verbose, "Log every epoch");

  auto* cls = app.add_subcommand("classify", "Score subgraphs");
  add_common(cls, o);
  cls->add_option("--model", o.model_path, "Checkpoint")->required();
  cls->add_option("--data-dir", o.data_dir, "Directory with edges.csv and nodes.csv")->required();
  cls->add_option("--subgraphs", o.subgraphs_path, "Subgraph file (default: the dataset's)");
  cls->add_option("--threshold", o.threshold, "Decision threshold")->capture_default_str();
  cls->add_option("--out", o.out_path, "Output CSV")->required();

  auto* ev = app.add_subcommand("eval-cls", "Evaluate a classifier on a split");
  add_common(ev, o);
  ev->add_option("--model", o.model_path, "Checkpoint")->required();
  ev->add_option("--data-dir", o.data_dir, "Dataset directory")->required();
  add_split_flags(ev, o, false);
  ev->add_option("--split", o.eval_split, "train|valid|test|all")->capture_default_str();
  ev->add_option("--threshold", o.threshold, "Decision threshold")->capture_default_str();
  ev->add_option("--out", o.out_path, "Write metrics here instead of stdout");

  auto* fl = app.add_subcommand("filter", "Recommend suspicious sender-receiver links");
  add_common(fl, o);
  fl->add_option("--model", o.model_path, "Checkpoint")->required();
  fl->add_option("--data-dir", o.data_dir, "Directory with edges.csv and nodes.csv")->required();
  fl->add_option("--senders", o.senders_path, "Sender ids, one per line")->required();
  fl->add_option("--receivers", o.receivers_path, "Receiver ids, one per line")->required();
  add_filter_flags(fl, o);
  fl->add_option("--seed", o.seed, "Seed for the random halving rule")->capture_default_str();
  fl->add_option("--out", o.out_path, "Output CSV")->required();

  auto* br = app.add_subcommand("bench-rec", "Recommendation benchmark");
  add_common(br, o);
  br->add_option("--model", o.model_path, "Checkpoint")->required();
  br->add_option("--base-model", o.base_model_path, "Checkpoint before fine-tuning (no-finetune variant)");
  br->add_option("--data-dir", o.data_dir, "Dataset directory")->required();
  add_split_flags(br, o, false);
  br->add_option("--pool", o.eval_split, "Subgraphs to sample from: train|valid|test|all")->capture_default_str();
  br->add_option("--settings", o.settings, "Comma-separated n_plus+n_minus@k list")->capture_default_str();
  br->add_option("--n-instances", o.n_instances, "Instances per setting")->capture_default_str();
  br->add_option("--variant", o.variant, "full|no-iter|no-finetune|keep1")->capture_default_str();
  add_filter_flags(br, o);
  br->add_option("--seed", o.seed, "Instance i uses seed + i")->capture_default_str();
  br->add_option("--out", o.out_path, "Output JSON")->required();

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << REVTRACK_VERSION << "\n";
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n\n";
      const auto subs = app.get_subcommands();
      err << (subs.empty() ? app.help() : subs.front()->help());
      return kExitValidation;
    }

    std::size_t threads = o.threads;
    if (threads == 0) {
      if (const char* env = std::getenv("REVTRACK_THREADS")) {
        try {
          threads = static_cast<std::size_t>(std::stoul(env));
        } catch (const std::exception&) {
          throw ValidationError(std::string("REVTRACK_THREADS is not a number: ") + env);
        }
      }
    }
    set_max_threads(threads);

    const CLI::App* sub = app.get_subcommands().front();
    const std::string& name = sub->get_name();
    if (name == "generate") return run_generate(o, raw_args, *sub, err);
    if (name == "graphlets") return run_graphlets(o, raw_args, *sub, err);
    if (name == "train") return run_train(o, raw_args, *sub, err);
    if (name == "finetune") return run_finetune(o, raw_args, *sub, err);
    if (name == "classify") return run_classify(o, raw_args, *sub, err);
    if (name == "eval-cls") return run_eval_cls(o, out);
    if (name == "filter") return run_filter(o, raw_args, *sub, err);
    if (name == "bench-rec") return run_bench_rec(o, raw_args, *sub, err);
    err << "error: unknown command " << name << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace revtrack::cli
