#include "revtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "revtrack/error.hpp"
#include "revtrack/graph_io.hpp"
#include "revtrack/random.hpp"
#include "revtrack/rec_eval.hpp"

namespace revtrack {

ClassMeans default_class_means(std::size_t feature_dim, double separation) {
  ClassMeans m;
  m.licit.assign(feature_dim, 0.0);
  m.illicit.assign(feature_dim, 0.0);
  m.exchange.assign(feature_dim, 0.0);
  m.unknown.assign(feature_dim, 0.5 * separation);
  const std::size_t half = (feature_dim + 1) / 2;
  for (std::size_t i = 0; i < feature_dim; ++i) {
    (i < half ? m.illicit : m.exchange)[i] = separation;
  }
  if (feature_dim == 1) m.exchange[0] = -separation;
  return m;
}

void SynthConfig::validate() const {
  if (feature_dim < 1) throw ValidationError("feature_dim must be at least 1");
  if (num_entities < 1) throw ValidationError("num_entities must be at least 1");
  if (!(feature_noise_sigma >= 0.0) || !std::isfinite(feature_noise_sigma)) {
    throw ValidationError("feature_noise_sigma must be a finite value >= 0");
  }
  double total = 0.0;
  for (double p : scheme_mix) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("scheme_mix entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("scheme_mix must sum to 1");
  auto check_range = [](const std::pair<int, int>& r, const char* name) {
    if (r.first < 1 || r.second < r.first) {
      throw ValidationError(std::string(name) + " must satisfy 1 <= min <= max");
    }
  };
  check_range(chain_length_range, "chain_length_range");
  check_range(fanin_range, "fanin_range");
  for (const auto* v : {&class_means.licit, &class_means.illicit, &class_means.unknown, &class_means.exchange}) {
    if (!v->empty() && v->size() != feature_dim) {
      throw ValidationError("class mean has " + std::to_string(v->size()) + " entries, expected " +
                            std::to_string(feature_dim));
    }
  }
}

SynthConfig SynthConfig::resolved() const {
  SynthConfig out = *this;
  const ClassMeans defaults = default_class_means(feature_dim);
  if (out.class_means.licit.empty()) out.class_means.licit = defaults.licit;
  if (out.class_means.illicit.empty()) out.class_means.illicit = defaults.illicit;
  if (out.class_means.unknown.empty()) out.class_means.unknown = defaults.unknown;
  if (out.class_means.exchange.empty()) out.class_means.exchange = defaults.exchange;
  return out;
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json means = nlohmann::json::object();
  if (!c.class_means.licit.empty()) means["licit"] = c.class_means.licit;
  if (!c.class_means.illicit.empty()) means["illicit"] = c.class_means.illicit;
  if (!c.class_means.unknown.empty()) means["unknown"] = c.class_means.unknown;
  if (!c.class_means.exchange.empty()) means["exchange"] = c.class_means.exchange;
  return {{"num_entities", c.num_entities},
          {"feature_dim", c.feature_dim},
          {"class_means", means},
          {"feature_noise_sigma", c.feature_noise_sigma},
          {"num_suspicious", c.num_suspicious},
          {"num_licit_subgraphs", c.num_licit_subgraphs},
          {"scheme_mix",
           {{"peeling_chain", c.scheme_mix[0]}, {"nested_service", c.scheme_mix[1]}, {"random_path", c.scheme_mix[2]}}},
          {"chain_length_range", {c.chain_length_range.first, c.chain_length_range.second}},
          {"fanin_range", {c.fanin_range.first, c.fanin_range.second}},
          {"background_noise_edges", c.background_noise_edges},
          {"seed", c.seed}};
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> keys, const char* what) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ValidationError(std::string("unknown ") + what + " key '" + key + "'");
    }
  }
}

std::pair<int, int> read_range(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("ranges must be [min, max]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synthetic config must be a JSON object");
  reject_unknown(j,
                 {"num_entities", "feature_dim", "class_means", "feature_noise_sigma", "num_suspicious",
                  "num_licit_subgraphs", "scheme_mix", "chain_length_range", "fanin_range",
                  "background_noise_edges", "seed"},
                 "config");
  SynthConfig c;
  try {
    c.num_entities = j.value("num_entities", c.num_entities);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.feature_noise_sigma = j.value("feature_noise_sigma", c.feature_noise_sigma);
    c.num_suspicious = j.value("num_suspicious", c.num_suspicious);
    c.num_licit_subgraphs = j.value("num_licit_subgraphs", c.num_licit_subgraphs);
    c.background_noise_edges = j.value("background_noise_edges", c.background_noise_edges);
    c.seed = j.value("seed", c.seed);
    if (j.contains("class_means")) {
      const auto& m = j.at("class_means");
      reject_unknown(m, {"licit", "illicit", "unknown", "exchange"}, "class_means");
      c.class_means.licit = m.value("licit", std::vector<double>{});
      c.class_means.illicit = m.value("illicit", std::vector<double>{});
      c.class_means.unknown = m.value("unknown", std::vector<double>{});
      c.class_means.exchange = m.value("exchange", std::vector<double>{});
    }
    if (j.contains("scheme_mix")) {
      const auto& m = j.at("scheme_mix");
      if (m.is_array()) {
        if (m.size() != 3) throw ValidationError("scheme_mix needs 3 probabilities");
        for (std::size_t i = 0; i < 3; ++i) c.scheme_mix[i] = m[i].get<double>();
      } else {
        reject_unknown(m, {"peeling_chain", "nested_service", "random_path"}, "scheme_mix");
        c.scheme_mix = {m.value("peeling_chain", 0.0), m.value("nested_service", 0.0), m.value("random_path", 0.0)};
      }
    }
    if (j.contains("chain_length_range")) c.chain_length_range = read_range(j.at("chain_length_range"));
    if (j.contains("fanin_range")) c.fanin_range = read_range(j.at("fanin_range"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

std::optional<SubgraphLabel> infer_label(const BackgroundGraph& graph, const BoundarySets& boundary) {
  if (boundary.empty_side()) return std::nullopt;
  auto all = [&](const std::vector<NodeId>& side, NodeLabel want) {
    return std::all_of(side.begin(), side.end(), [&](NodeId v) { return graph.label(v) == want; });
  };
  if (!all(boundary.receivers, NodeLabel::kLicit)) return std::nullopt;
  if (all(boundary.senders, NodeLabel::kIllicit)) return SubgraphLabel::kSuspicious;
  if (all(boundary.senders, NodeLabel::kLicit)) return SubgraphLabel::kLicit;
  return std::nullopt;
}

namespace {

enum class Role : std::uint8_t { kLicit, kIllicit, kUnknown, kExchange };

// One planted flow before node ids are permuted.
struct Plan {
  SubgraphLabel label;
  Scheme scheme;
  std::vector<NodeId> nodes;
  std::vector<Edge> internal;
  std::vector<Edge> boundary;  // sender -> source and sink -> receiver
  std::vector<NodeId> sources;
  std::vector<NodeId> sinks;
};

Scheme draw_scheme(const std::array<double, 3>& mix, Rng& rng) {
  const double u = uniform01(rng);
  if (u < mix[0]) return Scheme::kPeelingChain;
  if (u < mix[0] + mix[1]) return Scheme::kNestedService;
  return mix[2] > 0.0 ? Scheme::kRandomPath : (mix[1] > 0.0 ? Scheme::kNestedService : Scheme::kPeelingChain);
}

class Builder {
 public:
  explicit Builder(const SynthConfig& config) : config_(config) {}

  NodeId fresh(Role role) {
    roles_.push_back(role);
    return static_cast<NodeId>(roles_.size() - 1);
  }

  Plan plan(SubgraphLabel label, Rng& rng) {
    Plan p{label, draw_scheme(config_.scheme_mix, rng), {}, {}, {}, {}, {}};
    const Role sender_role = label == SubgraphLabel::kSuspicious ? Role::kIllicit : Role::kLicit;
    const Role receiver_role = label == SubgraphLabel::kSuspicious ? Role::kExchange : Role::kLicit;
    const auto [lo, hi] = config_.chain_length_range;
    auto chain = [&](int m) {
      std::vector<NodeId> c;
      for (int i = 0; i < m; ++i) c.push_back(fresh(Role::kUnknown));
      for (int i = 0; i + 1 < m; ++i) p.internal.push_back({c[i], c[i + 1]});
      return c;
    };
    switch (p.scheme) {
      case Scheme::kPeelingChain:
      case Scheme::kRandomPath: {
        const int m = uniform_int(rng, lo, hi);
        const auto c = chain(m);
        if (p.scheme == Scheme::kPeelingChain) {
          // Every intermediate also pays into the chain end.
          for (int i = 0; i + 2 < m; ++i) p.internal.push_back({c[i], c.back()});
        }
        p.nodes = c;
        p.sources = {c.front()};
        p.sinks = {c.back()};
        break;
      }
      case Scheme::kNestedService: {
        const int fanin = uniform_int(rng, config_.fanin_range.first, config_.fanin_range.second);
        const int max_len = std::max(1, hi / 2);
        std::vector<std::vector<NodeId>> paths;
        for (int j = 0; j < fanin; ++j) {
          paths.push_back(chain(uniform_int(rng, 1, max_len)));
        }
        const NodeId service = fresh(Role::kUnknown);
        for (const auto& path : paths) {
          p.internal.push_back({path.back(), service});
          p.nodes.insert(p.nodes.end(), path.begin(), path.end());
          p.sources.push_back(path.front());
        }
        p.nodes.push_back(service);
        p.sinks = {service};
        break;
      }
    }
    for (NodeId s : p.sources) p.boundary.push_back({fresh(sender_role), s});
    for (NodeId t : p.sinks) p.boundary.push_back({t, fresh(receiver_role)});
    return p;
  }

  std::size_t used() const { return roles_.size(); }
  std::vector<Role>& roles() { return roles_; }

 private:
  const SynthConfig& config_;
  std::vector<Role> roles_;
};

NodeLabel label_of(Role r) {
  switch (r) {
    case Role::kLicit:
    case Role::kExchange: return NodeLabel::kLicit;
    case Role::kIllicit: return NodeLabel::kIllicit;
    case Role::kUnknown: return NodeLabel::kUnknown;
  }
  return NodeLabel::kUnknown;
}

}  // namespace

SynthDataset generate(const SynthConfig& input) {
  input.validate();
  const SynthConfig config = input.resolved();
  Rng rng(mix_seed(config.seed, 0x5e7));
  Builder builder(config);

  std::vector<Plan> plans;
  plans.reserve(config.num_suspicious + config.num_licit_subgraphs);
  for (std::size_t i = 0; i < config.num_suspicious; ++i) plans.push_back(builder.plan(SubgraphLabel::kSuspicious, rng));
  for (std::size_t i = 0; i < config.num_licit_subgraphs; ++i) plans.push_back(builder.plan(SubgraphLabel::kLicit, rng));
  if (builder.used() > config.num_entities) {
    throw ValidationError("num_entities too small: the sampled subgraphs need at least " +
                          std::to_string(builder.used()) + " entities, got " + std::to_string(config.num_entities));
  }

  // Remaining entities form the background population.
  std::vector<Role>& roles = builder.roles();
  while (roles.size() < config.num_entities) {
    roles.push_back(uniform01(rng) < 0.3 ? Role::kLicit : Role::kUnknown);
  }
  const std::size_t n = roles.size();

  // Noise edges may not touch illicit entities, enter a source or leave a
  // sink, so boundaries and labels stay as planted.
  std::vector<char> no_in(n, 0), no_out(n, 0);
  for (const Plan& p : plans) {
    for (NodeId s : p.sources) no_in[s] = 1;
    for (NodeId t : p.sinks) no_out[t] = 1;
  }
  std::vector<NodeId> tails, heads;
  for (NodeId v = 0; v < n; ++v) {
    if (roles[v] == Role::kIllicit) continue;
    if (!no_out[v]) tails.push_back(v);
    if (!no_in[v]) heads.push_back(v);
  }
  std::vector<Edge> edges;
  for (const Plan& p : plans) {
    edges.insert(edges.end(), p.internal.begin(), p.internal.end());
    edges.insert(edges.end(), p.boundary.begin(), p.boundary.end());
  }
  if (!tails.empty() && !heads.empty()) {
    for (std::size_t i = 0; i < config.background_noise_edges; ++i) {
      const NodeId u = tails[uniform_index(rng, tails.size())];
      const NodeId v = heads[uniform_index(rng, heads.size())];
      if (u != v) edges.push_back({u, v});
    }
  }

  // Random relabeling so ids carry no information about roles.
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  shuffle(std::span<NodeId>(perm), rng);
  for (Edge& e : edges) e = {perm[e.src], perm[e.dst]};

  std::vector<NodeLabel> labels(n);
  std::vector<double> features(n * config.feature_dim);
  for (NodeId v = 0; v < n; ++v) {
    const Role r = roles[v];
    labels[perm[v]] = label_of(r);
    const std::vector<double>& mean = r == Role::kLicit      ? config.class_means.licit
                                      : r == Role::kIllicit  ? config.class_means.illicit
                                      : r == Role::kExchange ? config.class_means.exchange
                                                             : config.class_means.unknown;
    double* row = features.data() + static_cast<std::size_t>(perm[v]) * config.feature_dim;
    for (std::size_t k = 0; k < config.feature_dim; ++k) {
      row[k] = mean[k] + config.feature_noise_sigma * standard_normal(rng);
    }
  }

  SynthDataset out;
  out.graph = BackgroundGraph::build(n, std::move(edges), config.feature_dim, std::move(features),
                                     std::move(labels));

  // Shuffle subgraph order so file position does not reveal the label.
  std::vector<std::size_t> order(plans.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  const int width = static_cast<int>(std::to_string(std::max<std::size_t>(plans.size(), 1) - 1).size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Plan& p = plans[order[i]];
    Subgraph sg;
    std::string num = std::to_string(i);
    sg.id = "sg" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    for (NodeId v : p.nodes) sg.nodes.push_back(perm[v]);
    for (const Edge& e : p.internal) sg.edges.push_back({perm[e.src], perm[e.dst]});
    sg.label = p.label;
    sg.normalize();
    const auto inferred = infer_label(out.graph, extract_boundary(out.graph, sg));
    if (inferred != p.label) throw Error("internal: planted subgraph " + sg.id + " violates the label rule");
    out.subgraphs.push_back(std::move(sg));
  }
  return out;
}

void write_dataset(const SynthDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  const DataFiles files = DataFiles::in(dir);
  std::ostringstream edges, nodes, subgraphs;
  write_edges_csv(edges, dataset.graph);
  write_nodes_csv(nodes, dataset.graph);
  write_subgraphs(subgraphs, dataset.subgraphs, &dataset.graph);
  write_text_file(files.edges, edges.str());
  write_text_file(files.nodes, nodes.str());
  write_text_file(files.subgraphs, subgraphs.str());
}

SynthDataset load_dataset(const std::filesystem::path& dir) {
  const DataFiles files = DataFiles::in(dir);
  SynthDataset out;
  out.graph = load_graph(files.edges, files.nodes);
  out.subgraphs = read_subgraphs(files.subgraphs, out.graph);
  return out;
}

RecTestInstance plant_rec_instance(const SynthDataset& dataset, std::size_t n_plus, std::size_t n_minus,
                                   std::uint64_t seed) {
  return build_rec_instance(dataset.subgraphs, n_plus, n_minus, seed, dataset.graph);
}

}  // namespace revtrack
