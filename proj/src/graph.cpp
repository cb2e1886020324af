#include "diter/graph.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace diter {

Graph Graph::from_edges(NodeId n, std::vector<Edge> edges) {
    for (const auto& e : edges) {
        if (e.src >= n || e.dst >= n) {
            throw std::out_of_range("edge endpoint outside [0, n)");
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const Edge& a, const Edge& b) { return a.src == b.src && a.dst == b.dst; }),
                edges.end());

    Graph g;
    g.n_ = n;
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    g.targets_.reserve(edges.size());
    g.in_degree_.assign(n, 0);
    for (const auto& e : edges) {
        ++g.offsets_[e.src + 1];
        g.targets_.push_back(e.dst);
        ++g.in_degree_[e.dst];
    }
    for (NodeId j = 0; j < n; ++j) {
        g.offsets_[j + 1] += g.offsets_[j];
        if (g.offsets_[j + 1] == g.offsets_[j]) g.dangling_.push_back(j);
    }
    return g;
}

std::span<const NodeId> Graph::children(NodeId j) const {
    if (j >= n_) throw std::out_of_range("node " + std::to_string(j) + " outside graph of " + std::to_string(n_));
    return {targets_.data() + offsets_[j], targets_.data() + offsets_[j + 1]};
}

Graph Graph::prefix(NodeId m) const {
    std::vector<Edge> edges;
    const NodeId limit = std::min(m, n_);
    for (NodeId j = 0; j < limit; ++j) {
        for (NodeId i : children(j)) {
            if (i < m) edges.push_back({j, i});
        }
    }
    return from_edges(m, std::move(edges));
}

GraphStats stats(const Graph& g) {
    GraphStats s;
    s.n = g.num_nodes();
    s.edge_count = g.num_edges();
    s.dangling_count = static_cast<NodeId>(g.dangling().size());
    if (s.n > 0) {
        s.avg_degree = static_cast<double>(s.edge_count) / s.n;
        s.dangling_fraction = static_cast<double>(s.dangling_count) / s.n;
    }
    return s;
}

namespace {

bool is_gzip(std::string_view bytes) {
    return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
           static_cast<unsigned char>(bytes[1]) == 0x8b;
}

std::string gunzip(std::string_view bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw std::runtime_error("inflateInit failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::string out;
    char buf[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("corrupt gzip stream");
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw std::runtime_error("truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Reads one non-negative decimal id at pos, advancing it.
NodeId parse_id(std::string_view line, std::size_t& pos, std::size_t lineno) {
    while (pos < line.size() && is_space(line[pos])) ++pos;
    if (pos == line.size()) throw ParseError(lineno, "expected two node ids");
    if (line[pos] == '-') throw ParseError(lineno, "negative node id");
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
    if (ec != std::errc{} || value > 0xFFFFFFFEull) {
        throw ParseError(lineno, "malformed node id '" + std::string(line.substr(pos)) + "'");
    }
    pos = static_cast<std::size_t>(ptr - line.data());
    if (pos < line.size() && !is_space(line[pos])) {
        throw ParseError(lineno, "malformed node id");
    }
    return static_cast<NodeId>(value);
}

}  // namespace

Graph load_edge_list_bytes(std::string_view bytes, std::optional<NodeId> max_node) {
    std::string inflated;
    if (is_gzip(bytes)) {
        inflated = gunzip(bytes);
        bytes = inflated;
    }

    std::vector<Edge> edges;
    NodeId max_seen = 0;
    bool any = false;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(start, end - start);
        start = end + 1;
        ++lineno;

        std::size_t pos = 0;
        while (pos < line.size() && is_space(line[pos])) ++pos;
        if (pos == line.size() || line[pos] == '#') continue;

        const NodeId src = parse_id(line, pos, lineno);
        const NodeId dst = parse_id(line, pos, lineno);
        while (pos < line.size() && is_space(line[pos])) ++pos;
        if (pos != line.size()) throw ParseError(lineno, "trailing characters after edge");

        if (max_node && (src >= *max_node || dst >= *max_node)) continue;
        edges.push_back({src, dst});
        max_seen = std::max({max_seen, src, dst});
        any = true;
    }

    if (max_node) return Graph::from_edges(*max_node, std::move(edges));
    if (!any) throw std::invalid_argument("empty edge list and no node count given");
    return Graph::from_edges(max_seen + 1, std::move(edges));
}

Graph load_edge_list(std::istream& in, std::optional<NodeId> max_node) {
    std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return load_edge_list_bytes(bytes, max_node);
}

Graph load_edge_list_file(const std::string& path, std::optional<NodeId> max_node) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_edge_list(in, max_node);
}

void write_edge_list(std::ostream& out, const Graph& g) {
    std::ostringstream buf;
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
        for (NodeId i : g.children(j)) buf << j << ' ' << i << '\n';
    }
    out << buf.str();
}

}  // namespace diter
