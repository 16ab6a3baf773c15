#pragma once

// Graph topologies used by the balancing processes: tori, hypercubes, cycles,
// paths, and validated custom edge lists. Vertex ordering is fixed at
// construction (row-major for tori, bitstring value for hypercubes) so that
// the oriented-edge relation [lo:hi], lo < hi, is well defined everywhere.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dlb {

enum class GraphKind { torus, hypercube, cycle, path, custom };

struct Graph {
  int n = 0;
  std::vector<std::vector<int>> adjacency;  // sorted, symmetric, no loops/dups
  int max_degree = 0;
  GraphKind kind = GraphKind::custom;
  std::vector<int> params;  // torus: dims; hypercube: {d}; cycle/path: {q}

  int degree(int v) const { return static_cast<int>(adjacency[v].size()); }
  bool has_edge(int i, int j) const {
    return std::binary_search(adjacency[i].begin(), adjacency[i].end(), j);
  }
};

// An undirected edge {lo, hi} with the fixed orientation lo < hi.
struct OrientedEdge {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const OrientedEdge&, const OrientedEdge&) = default;
};

namespace detail {

inline void finalize(Graph& g) {
  g.max_degree = 0;
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    g.max_degree = std::max(g.max_degree, static_cast<int>(nbrs.size()));
  }
}

}  // namespace detail

inline Graph build_torus(const std::vector<int>& dims) {
  if (dims.empty()) throw std::invalid_argument("torus needs at least one dimension");
  for (int s : dims) {
    if (s < 3) throw std::invalid_argument("torus side lengths must be >= 3");
  }
  const int d = static_cast<int>(dims.size());
  std::int64_t n64 = 1;
  for (int s : dims) {
    n64 *= s;
    if (n64 > (1 << 24)) throw std::invalid_argument("torus too large");
  }
  Graph g;
  g.n = static_cast<int>(n64);
  g.kind = GraphKind::torus;
  g.params = dims;
  g.adjacency.resize(g.n);
  // Row-major linearization: the first coordinate varies slowest.
  std::vector<int> coords(d, 0);
  for (int v = 0; v < g.n; ++v) {
    for (int axis = 0; axis < d; ++axis) {
      for (int dir : {-1, +1}) {
        const int old = coords[axis];
        coords[axis] = (old + dir + dims[axis]) % dims[axis];
        int u = 0;
        for (int k = 0; k < d; ++k) u = u * dims[k] + coords[k];
        g.adjacency[v].push_back(u);
        coords[axis] = old;
      }
    }
    // advance row-major counter (last coordinate fastest)
    for (int k = d - 1; k >= 0; --k) {
      if (++coords[k] < dims[k]) break;
      coords[k] = 0;
    }
  }
  detail::finalize(g);
  return g;
}

inline Graph build_hypercube(int d) {
  if (d < 1 || d > 24) throw std::invalid_argument("hypercube dimension must be in [1, 24]");
  Graph g;
  g.n = 1 << d;
  g.kind = GraphKind::hypercube;
  g.params = {d};
  g.adjacency.resize(g.n);
  for (int v = 0; v < g.n; ++v) {
    for (int k = 0; k < d; ++k) g.adjacency[v].push_back(v ^ (1 << k));
  }
  detail::finalize(g);
  return g;
}

inline Graph build_cycle(int q) {
  if (q < 3) throw std::invalid_argument("cycle needs at least 3 vertices");
  Graph g;
  g.n = q;
  g.kind = GraphKind::cycle;
  g.params = {q};
  g.adjacency.resize(q);
  for (int v = 0; v < q; ++v) {
    g.adjacency[v] = {(v + 1) % q, (v + q - 1) % q};
  }
  detail::finalize(g);
  return g;
}

inline Graph build_path(int q) {
  if (q < 2) throw std::invalid_argument("path needs at least 2 vertices");
  Graph g;
  g.n = q;
  g.kind = GraphKind::path;
  g.params = {q};
  g.adjacency.resize(q);
  for (int v = 0; v + 1 < q; ++v) {
    g.adjacency[v].push_back(v + 1);
    g.adjacency[v + 1].push_back(v);
  }
  detail::finalize(g);
  return g;
}

// Validated constructor for arbitrary topologies (symmetry is implied by the
// edge-list form; self-loops, duplicates, and range errors are rejected).
inline Graph build_custom(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 1) throw std::invalid_argument("graph needs at least one vertex");
  Graph g;
  g.n = n;
  g.kind = GraphKind::custom;
  g.adjacency.resize(n);
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) throw std::invalid_argument("edge endpoint out of range");
    if (a == b) throw std::invalid_argument("self-loops are not allowed");
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end()) {
      throw std::invalid_argument("duplicate edge");
    }
  }
  detail::finalize(g);
  return g;
}

// BFS hop distances from src to every vertex (-1 if unreachable).
inline std::vector<int> bfs_distances(const Graph& g, int src) {
  std::vector<int> dist(g.n, -1);
  std::queue<int> frontier;
  dist[src] = 0;
  frontier.push(src);
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int u : g.adjacency[v]) {
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

inline int dist(const Graph& g, int i, int j) {
  if (i < 0 || i >= g.n || j < 0 || j >= g.n) throw std::invalid_argument("vertex out of range");
  const int d = bfs_distances(g, i)[j];
  if (d < 0) throw std::invalid_argument("vertices are not connected");
  return d;
}

inline int diameter(const Graph& g) {
  int best = 0;
  for (int v = 0; v < g.n; ++v) {
    for (int d : bfs_distances(g, v)) {
      if (d < 0) throw std::invalid_argument("graph is not connected");
      best = std::max(best, d);
    }
  }
  return best;
}

inline bool is_connected(const Graph& g) {
  const auto dist0 = bfs_distances(g, 0);
  return std::none_of(dist0.begin(), dist0.end(), [](int d) { return d < 0; });
}

// Coordinates of a torus vertex under the row-major linearization.
inline std::vector<int> torus_coords(const Graph& g, int v) {
  if (g.kind != GraphKind::torus) throw std::invalid_argument("not a torus");
  std::vector<int> coords(g.params.size());
  for (int k = static_cast<int>(g.params.size()) - 1; k >= 0; --k) {
    coords[k] = v % g.params[k];
    v /= g.params[k];
  }
  return coords;
}

inline int torus_index(const Graph& g, const std::vector<int>& coords) {
  if (g.kind != GraphKind::torus) throw std::invalid_argument("not a torus");
  int v = 0;
  for (std::size_t k = 0; k < coords.size(); ++k) v = v * g.params[k] + coords[k];
  return v;
}

// CLI/graph-spec strings: "torus:4x4x4", "hypercube:10", "cycle:64", "path:9".
inline Graph parse_graph_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("graph spec needs kind:params");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  const auto parse_int = [](const std::string& s) {
    std::size_t used = 0;
    const int value = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad integer in graph spec");
    return value;
  };
  if (kind == "torus") {
    std::vector<int> dims;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto x = rest.find('x', pos);
      dims.push_back(parse_int(rest.substr(pos, x == std::string::npos ? x : x - pos)));
      if (x == std::string::npos) break;
      pos = x + 1;
    }
    return build_torus(dims);
  }
  if (kind == "hypercube") return build_hypercube(parse_int(rest));
  if (kind == "cycle") return build_cycle(parse_int(rest));
  if (kind == "path") return build_path(parse_int(rest));
  throw std::invalid_argument("unknown graph kind: " + kind);
}

inline std::string graph_spec_string(const Graph& g) {
  switch (g.kind) {
    case GraphKind::torus: {
      std::string s = "torus:";
      for (std::size_t k = 0; k < g.params.size(); ++k) {
        if (k) s += 'x';
        s += std::to_string(g.params[k]);
      }
      return s;
    }
    case GraphKind::hypercube:
      return "hypercube:" + std::to_string(g.params[0]);
    case GraphKind::cycle:
      return "cycle:" + std::to_string(g.params[0]);
    case GraphKind::path:
      return "path:" + std::to_string(g.params[0]);
    case GraphKind::custom:
      break;
  }
  throw std::invalid_argument("custom graphs have no spec string");
}

inline nlohmann::json graph_to_json(const Graph& g) {
  static const char* names[] = {"torus", "hypercube", "cycle", "path", "custom"};
  nlohmann::json j{{"kind", names[static_cast<int>(g.kind)]}, {"params", g.params}, {"n", g.n}};
  if (g.kind == GraphKind::custom) {
    nlohmann::json edges = nlohmann::json::array();
    for (int v = 0; v < g.n; ++v) {
      for (int u : g.adjacency[v]) {
        if (v < u) edges.push_back({v, u});
      }
    }
    j["edges"] = edges;
  }
  return j;
}

inline Graph graph_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind");
  if (kind == "torus") return build_torus(j.at("params").get<std::vector<int>>());
  if (kind == "hypercube") return build_hypercube(j.at("params").at(0).get<int>());
  if (kind == "cycle") return build_cycle(j.at("params").at(0).get<int>());
  if (kind == "path") return build_path(j.at("params").at(0).get<int>());
  if (kind == "custom") {
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return build_custom(j.at("n").get<int>(), edges);
  }
  throw std::invalid_argument("unknown graph kind in JSON: " + kind);
}

}  // namespace dlb
