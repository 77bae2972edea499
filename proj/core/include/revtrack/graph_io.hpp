#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revtrack/graph.hpp"

namespace revtrack {

struct LoadReport {
  GraphBuildStats build;
  bool densified = false;  // node ids were remapped to 0..n-1
};

/// Parses `edges.csv` (header `src,dst`) and `nodes.csv`
/// (header `id,f_0,...,f_{d-1}[,label]`). Non-dense ids are remapped in
/// ascending order. Errors name the offending row.
BackgroundGraph load_graph(std::istream& edges_csv, std::istream& nodes_csv,
                           LoadReport* report = nullptr);
BackgroundGraph load_graph(const std::filesystem::path& edges_csv,
                           const std::filesystem::path& nodes_csv, LoadReport* report = nullptr);

void write_edges_csv(std::ostream& out, const BackgroundGraph& graph);
void write_nodes_csv(std::ostream& out, const BackgroundGraph& graph);

/// Reads `subgraphs.jsonl`. Node ids are translated through the graph's
/// external-id map, then every subgraph is normalized and validated.
std::vector<Subgraph> read_subgraphs(std::istream& in, const BackgroundGraph& graph);
std::vector<Subgraph> read_subgraphs(const std::filesystem::path& path, const BackgroundGraph& graph);

/// Reads `subgraphs.jsonl` without a graph: ids are taken verbatim.
std::vector<Subgraph> read_subgraphs(std::istream& in);
std::vector<Subgraph> read_subgraphs(const std::filesystem::path& path);

/// Writes one JSON object per line; ids go through graph.external_id when a
/// graph is supplied.
void write_subgraphs(std::ostream& out, std::span<const Subgraph> subgraphs,
                     const BackgroundGraph* graph = nullptr);

nlohmann::json subgraph_to_json(const Subgraph& subgraph, const BackgroundGraph* graph = nullptr);

/// The three files of a dataset directory.
struct DataFiles {
  std::filesystem::path edges;
  std::filesystem::path nodes;
  std::filesystem::path subgraphs;
  static DataFiles in(const std::filesystem::path& dir);
};

/// Shortest round-trip decimal form of a binary64 value.
std::string format_double(double value);

/// Writes a string to a file, throwing Error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace revtrack
