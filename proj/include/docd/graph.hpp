#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace docd {

using VertexId = int;

// Malformed input file. line() is 1-based.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Violated precondition on an otherwise well-formed graph (unknown vertex, ...).
class DomainError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  // Map arbitrary string labels to dense ids 0..n-1 in first-appearance order.
  // Without it every token must already be a non-negative integer.
  bool relabel = false;
};

// Simple undirected graph. No self loops, no parallel edges.
class Graph {
public:
  Graph() = default;
  static Graph from_edges(const std::vector<std::pair<VertexId, VertexId>>& edges);

  bool has_vertex(VertexId v) const { return index_.count(v) != 0; }
  const std::vector<VertexId>& vertices() const { return ids_; }  // ascending
  const std::vector<VertexId>& neighbors(VertexId v) const;       // ascending
  bool has_edge(VertexId u, VertexId v) const;
  int degree(VertexId v) const { return static_cast<int>(neighbors(v).size()); }
  int vertex_count() const { return static_cast<int>(ids_.size()); }
  long edge_count() const { return edge_count_; }

  // Number of edges with both endpoints inside s (s need not be sorted or unique).
  long links_among(const std::vector<VertexId>& s) const;

  bool connected() const;
  std::vector<std::vector<VertexId>> components() const;  // each ascending, by min id
  // Max eccentricity; disconnected graphs report the largest value over components.
  int diameter() const;

  // Only populated by load_edge_list with relabel set: original label -> id.
  const std::map<std::string, VertexId>& label_map() const { return label_map_; }

  // Canonical form: one "u v" line per edge, u < v, lines sorted. Round-trips
  // bit-exactly through load_edge_list.
  void serialize(std::ostream& out) const;

private:
  int slot(VertexId v) const;
  void add_edge(VertexId u, VertexId v);
  void finalize();

  std::vector<VertexId> ids_;
  std::unordered_map<VertexId, int> index_;
  std::vector<std::vector<VertexId>> adj_;
  long edge_count_ = 0;
  std::map<std::string, VertexId> label_map_;

  friend Graph load_edge_list(std::istream& in, const LoadOptions& opts);
};

// Parses an edge list: one edge per line, endpoints separated by whitespace or a
// comma, '#' starts a comment, blank lines are skipped. Duplicate edges collapse
// silently; self loops are an error.
Graph load_edge_list(std::istream& in, const LoadOptions& opts = {});
Graph load_edge_list_file(const std::string& path, const LoadOptions& opts = {});

}  // namespace docd
