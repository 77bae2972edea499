#include "revtrack/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

#include "revtrack/error.hpp"

namespace revtrack {
namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string row_tag(std::string_view file, std::size_t row) {
  return std::string(file) + " row " + std::to_string(row) + ": ";
}

std::int64_t parse_int(std::string_view text, std::string_view file, std::size_t row) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw LoadError(row_tag(file, row) + "invalid integer '" + std::string(text) + "'");
  }
  return value;
}

double parse_double(std::string_view text, std::string_view file, std::size_t row) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw LoadError(row_tag(file, row) + "invalid number '" + std::string(text) + "'");
  }
  return value;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

BackgroundGraph load_graph(std::istream& edges_csv, std::istream& nodes_csv, LoadReport* report) {
  std::string line;

  // nodes.csv
  if (!std::getline(nodes_csv, line)) throw LoadError("nodes.csv: missing header");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "id") throw LoadError("nodes.csv: header must start with 'id'");
  const bool has_label = header.back() == "label";
  const std::size_t dim = header.size() - 1 - (has_label ? 1 : 0);
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[1 + j] != "f_" + std::to_string(j)) {
      throw LoadError("nodes.csv: expected column 'f_" + std::to_string(j) + "', found '" +
                      std::string(header[1 + j]) + "'");
    }
  }

  struct NodeRow {
    std::int64_t id;
    std::size_t row;
  };
  std::vector<NodeRow> ids;
  std::vector<double> raw_features;
  std::vector<NodeLabel> raw_labels;
  std::size_t row = 1;
  while (std::getline(nodes_csv, line)) {
    ++row;
    if (blank(line)) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw LoadError(row_tag("nodes.csv", row) + "inconsistent feature dimension: expected " +
                      std::to_string(header.size()) + " columns, found " +
                      std::to_string(fields.size()));
    }
    ids.push_back({parse_int(fields[0], "nodes.csv", row), row});
    for (std::size_t j = 0; j < dim; ++j) {
      raw_features.push_back(parse_double(fields[1 + j], "nodes.csv", row));
    }
    if (has_label) {
      try {
        raw_labels.push_back(parse_node_label(fields.back()));
      } catch (const LoadError& e) {
        throw LoadError(row_tag("nodes.csv", row) + e.what());
      }
    }
  }
  const std::size_t n = ids.size();

  // Dense ids keep their values; anything else is remapped in ascending order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids[a].id < ids[b].id; });
  for (std::size_t i = 1; i < n; ++i) {
    if (ids[order[i]].id == ids[order[i - 1]].id) {
      throw LoadError(row_tag("nodes.csv", ids[order[i]].row) + "duplicate node id " +
                      std::to_string(ids[order[i]].id));
    }
  }
  const bool dense = n == 0 || (ids[order.front()].id == 0 &&
                                ids[order.back()].id == static_cast<std::int64_t>(n) - 1);
  std::vector<double> features(n * dim);
  std::vector<NodeLabel> labels(has_label ? n : 0);
  std::vector<std::int64_t> external;
  if (!dense) external.resize(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t src = order[rank];
    const std::size_t dst = rank;  // dense ids: rank == id
    std::copy_n(raw_features.begin() + static_cast<std::ptrdiff_t>(src * dim), dim,
                features.begin() + static_cast<std::ptrdiff_t>(dst * dim));
    if (has_label) labels[dst] = raw_labels[src];
    if (!dense) external[dst] = ids[src].id;
  }
  auto to_dense = [&](std::int64_t id) -> std::optional<NodeId> {
    if (dense) {
      if (id < 0 || id >= static_cast<std::int64_t>(n)) return std::nullopt;
      return static_cast<NodeId>(id);
    }
    const auto it = std::lower_bound(external.begin(), external.end(), id);
    if (it == external.end() || *it != id) return std::nullopt;
    return static_cast<NodeId>(it - external.begin());
  };

  // edges.csv
  if (!std::getline(edges_csv, line)) throw LoadError("edges.csv: missing header");
  const auto edge_header = split_csv(line);
  if (edge_header.size() != 2 || edge_header[0] != "src" || edge_header[1] != "dst") {
    throw LoadError("edges.csv: header must be 'src,dst'");
  }
  std::vector<Edge> edges;
  row = 1;
  while (std::getline(edges_csv, line)) {
    ++row;
    if (blank(line)) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2) throw LoadError(row_tag("edges.csv", row) + "expected 2 columns");
    const std::int64_t src = parse_int(fields[0], "edges.csv", row);
    const std::int64_t dst = parse_int(fields[1], "edges.csv", row);
    const auto s = to_dense(src);
    const auto d = to_dense(dst);
    if (!s || !d) {
      throw LoadError(row_tag("edges.csv", row) + "dangling endpoint " + std::to_string(!s ? src : dst));
    }
    edges.push_back({*s, *d});
  }

  LoadReport local;
  local.densified = !dense;
  BackgroundGraph graph = BackgroundGraph::build(n, std::move(edges), dim, std::move(features),
                                                 std::move(labels), std::move(external), &local.build);
  if (report) *report = local;
  return graph;
}

BackgroundGraph load_graph(const std::filesystem::path& edges_csv,
                           const std::filesystem::path& nodes_csv, LoadReport* report) {
  auto edges = open_input(edges_csv);
  auto nodes = open_input(nodes_csv);
  return load_graph(edges, nodes, report);
}

void write_edges_csv(std::ostream& out, const BackgroundGraph& graph) {
  out << "src,dst\n";
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    for (NodeId w : graph.out_neighbors(v)) {
      out << graph.external_id(v) << ',' << graph.external_id(w) << '\n';
    }
  }
}

void write_nodes_csv(std::ostream& out, const BackgroundGraph& graph) {
  out << "id";
  for (std::size_t j = 0; j < graph.feature_dim(); ++j) out << ",f_" << j;
  if (graph.has_labels()) out << ",label";
  out << '\n';
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    out << graph.external_id(v);
    for (double x : graph.features(v)) out << ',' << format_double(x);
    if (graph.has_labels()) out << ',' << to_string(graph.label(v));
    out << '\n';
  }
}

namespace {

Subgraph parse_subgraph_line(const std::string& line, std::size_t row,
                             const BackgroundGraph* graph) {
  const std::string tag = "subgraphs.jsonl line " + std::to_string(row) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(tag + e.what());
  }
  Subgraph h;
  try {
    const auto& id = j.at("id");
    h.id = id.is_string() ? id.get<std::string>() : id.dump();
    const auto& label = j.value("label", nlohmann::json());
    if (!label.is_null()) h.label = parse_subgraph_label(label.get<std::string>());
    auto map_id = [&](std::int64_t raw) -> NodeId {
      if (graph) {
        const auto v = graph->find_external(raw);
        if (!v) throw LoadError(tag + "node " + std::to_string(raw) + " is not in the graph");
        return *v;
      }
      if (raw < 0 || raw > std::numeric_limits<NodeId>::max()) {
        throw LoadError(tag + "node id " + std::to_string(raw) + " out of range");
      }
      return static_cast<NodeId>(raw);
    };
    for (const auto& v : j.at("nodes")) h.nodes.push_back(map_id(v.get<std::int64_t>()));
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      if (!e.is_array() || e.size() != 2) throw LoadError(tag + "edges must be [src, dst] pairs");
      h.edges.push_back({map_id(e[0].get<std::int64_t>()), map_id(e[1].get<std::int64_t>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(tag + e.what());
  }
  h.normalize();
  if (graph) {
    try {
      validate_subgraph(*graph, h);
    } catch (const ValidationError& e) {
      throw LoadError(tag + e.what());
    }
  } else if (h.nodes.empty()) {
    throw LoadError(tag + "node set is empty");
  }
  return h;
}

std::vector<Subgraph> read_subgraphs_impl(std::istream& in, const BackgroundGraph* graph) {
  std::vector<Subgraph> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    out.push_back(parse_subgraph_line(line, row, graph));
  }
  return out;
}

}  // namespace

std::vector<Subgraph> read_subgraphs(std::istream& in, const BackgroundGraph& graph) {
  return read_subgraphs_impl(in, &graph);
}

std::vector<Subgraph> read_subgraphs(const std::filesystem::path& path, const BackgroundGraph& graph) {
  auto in = open_input(path);
  return read_subgraphs_impl(in, &graph);
}

std::vector<Subgraph> read_subgraphs(std::istream& in) { return read_subgraphs_impl(in, nullptr); }

std::vector<Subgraph> read_subgraphs(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_subgraphs_impl(in, nullptr);
}

nlohmann::json subgraph_to_json(const Subgraph& h, const BackgroundGraph* graph) {
  auto ext = [&](NodeId v) -> std::int64_t { return graph ? graph->external_id(v) : v; };
  nlohmann::json j;
  j["id"] = h.id;
  j["label"] = h.label ? nlohmann::json(std::string(to_string(*h.label))) : nlohmann::json();
  auto nodes = nlohmann::json::array();
  for (NodeId v : h.nodes) nodes.push_back(ext(v));
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::json::array();
  for (const Edge& e : h.edges) edges.push_back({ext(e.src), ext(e.dst)});
  j["edges"] = std::move(edges);
  return j;
}

void write_subgraphs(std::ostream& out, std::span<const Subgraph> subgraphs,
                     const BackgroundGraph* graph) {
  for (const Subgraph& h : subgraphs) out << subgraph_to_json(h, graph).dump() << '\n';
}

DataFiles DataFiles::in(const std::filesystem::path& dir) {
  return {dir / "edges.csv", dir / "nodes.csv", dir / "subgraphs.jsonl"};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace revtrack
