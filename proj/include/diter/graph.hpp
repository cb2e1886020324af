#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace diter {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint64_t;

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Edge {
    NodeId src;
    NodeId dst;
};

struct GraphStats {
    NodeId n = 0;
    EdgeIndex edge_count = 0;
    double avg_degree = 0.0;
    NodeId dangling_count = 0;
    double dangling_fraction = 0.0;
};

/// Immutable directed graph in CSR form over dense ids [0, n).
/// Out-lists are sorted and deduplicated; self-loops are kept.
/// Column j of the PageRank transition matrix Q is 1/out_degree(j) on
/// children(j), or the uniform 1/n completion when j is dangling.
class Graph {
public:
    Graph() = default;

    /// Builds from an arbitrary edge list. Every endpoint must be < n.
    static Graph from_edges(NodeId n, std::vector<Edge> edges);

    NodeId num_nodes() const { return n_; }
    EdgeIndex num_edges() const { return targets_.size(); }

    std::span<const NodeId> children(NodeId j) const;
    NodeId out_degree(NodeId j) const { return static_cast<NodeId>(offsets_[j + 1] - offsets_[j]); }
    NodeId in_degree(NodeId i) const { return in_degree_[i]; }
    bool is_dangling(NodeId j) const { return offsets_[j + 1] == offsets_[j]; }
    const std::vector<NodeId>& dangling() const { return dangling_; }

    /// Induced subgraph on the first m nodes.
    Graph prefix(NodeId m) const;

    bool operator==(const Graph& other) const = default;

private:
    NodeId n_ = 0;
    std::vector<EdgeIndex> offsets_{0};
    std::vector<NodeId> targets_;
    std::vector<NodeId> in_degree_;
    std::vector<NodeId> dangling_;
};

GraphStats stats(const Graph& g);

/// Parses "src dst" lines; '#' lines and blank lines are skipped.
/// With max_node set, only edges whose endpoints are both below it are kept
/// and the graph has exactly max_node nodes.
Graph load_edge_list(std::istream& in, std::optional<NodeId> max_node = std::nullopt);

/// Same as the stream overload on an in-memory buffer, transparently
/// inflating gzip data (detected by magic bytes).
Graph load_edge_list_bytes(std::string_view bytes, std::optional<NodeId> max_node = std::nullopt);

Graph load_edge_list_file(const std::string& path, std::optional<NodeId> max_node = std::nullopt);

/// Writes "src dst" lines readable by load_edge_list.
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace diter
