#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "pwto/costfield.hpp"
#include "pwto/lattice.hpp"

namespace pwto {

using VertexId = std::uint32_t;

// Edge costs scaled to integers for the search layer; dominance on integers
// avoids float-tie pathologies.
struct ScaledCost {
  std::uint64_t c1 = 0;
  std::uint64_t c2 = 0;

  friend ScaledCost operator+(const ScaledCost& a, const ScaledCost& b) {
    return {a.c1 + b.c1, a.c2 + b.c2};
  }
  friend bool operator==(const ScaledCost&, const ScaledCost&) = default;
};

struct SearchEdge {
  VertexId to = 0;
  std::uint64_t c1 = 0;
  std::uint64_t c2 = 0;
  std::int32_t prim = -1;  // primitive index for lattice graphs, -1 otherwise
};

// Directed multigraph with integer bi-objective edge costs. Used both for
// materialized lattices and for hand-built test graphs.
class SearchGraph {
 public:
  SearchGraph() = default;
  explicit SearchGraph(std::size_t n) : adj_(n) {}

  std::size_t size() const { return adj_.size(); }

  void add_edge(VertexId from, VertexId to, std::uint64_t c1, std::uint64_t c2,
                std::int32_t prim = -1) {
    if (from >= adj_.size() || to >= adj_.size())
      throw std::invalid_argument("SearchGraph::add_edge: vertex out of range");
    adj_[from].push_back({to, c1, c2, prim});
    ++num_edges_;
  }

  const std::vector<SearchEdge>& out(VertexId v) const { return adj_[v]; }
  std::size_t num_edges() const { return num_edges_; }

  SearchGraph reversed() const {
    SearchGraph r(adj_.size());
    for (VertexId v = 0; v < adj_.size(); ++v)
      for (const SearchEdge& e : adj_[v]) r.add_edge(e.to, v, e.c1, e.c2, e.prim);
    return r;
  }

 private:
  std::vector<std::vector<SearchEdge>> adj_;
  std::size_t num_edges_ = 0;
};

inline std::uint64_t scale_cost(double c, double scale) {
  return static_cast<std::uint64_t>(std::llround(c * scale));
}

// Materializes the implicit lattice: every vertex, every primitive edge,
// costs scaled by `cost_scale` and rounded.
inline SearchGraph build_search_graph(const LatticeConfig& cfg,
                                      const std::vector<MotionPrimitive>& prims,
                                      const CostField& field, double cost_scale) {
  SearchGraph g(cfg.num_vertices());
  for (int iy = 0; iy < cfg.n; ++iy) {
    for (int ix = 0; ix < cfg.n; ++ix) {
      for (int ih = 0; ih < cfg.nh; ++ih) {
        const LatticeVertex v{ix, iy, ih};
        for (const Successor& s : successors(cfg, prims, field, v)) {
          g.add_edge(cfg.id(v), cfg.id(s.vertex), scale_cost(s.cost.c1, cost_scale),
                     scale_cost(s.cost.c2, cost_scale), s.primitive);
        }
      }
    }
  }
  return g;
}

inline constexpr std::uint64_t kUnreachable = std::numeric_limits<std::uint64_t>::max();

enum class CostObjective { TraversalTime, FieldIntegral, Scalarized };

inline std::uint64_t edge_objective(const SearchEdge& e, CostObjective obj) {
  switch (obj) {
    case CostObjective::TraversalTime: return e.c1;
    case CostObjective::FieldIntegral: return e.c2;
    case CostObjective::Scalarized: return e.c1 + e.c2;
  }
  return 0;
}

// Single-objective Dijkstra from `src` over the chosen cost component.
// Run on the reversed graph this yields the per-objective lower bounds the
// multi-objective search uses as heuristics.
inline std::vector<std::uint64_t> dijkstra_all(const SearchGraph& g, VertexId src,
                                               CostObjective obj) {
  std::vector<std::uint64_t> dist(g.size(), kUnreachable);
  using Item = std::pair<std::uint64_t, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
  dist[src] = 0;
  open.push({0, src});
  while (!open.empty()) {
    const auto [d, v] = open.top();
    open.pop();
    if (d != dist[v]) continue;
    for (const SearchEdge& e : g.out(v)) {
      const std::uint64_t nd = d + edge_objective(e, obj);
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        open.push({nd, e.to});
      }
    }
  }
  return dist;
}

// A lattice materialized once per (field, config): forward and reverse
// graphs plus the primitive set, reusable across start/goal queries.
struct PlannerGraph {
  LatticeConfig cfg;
  std::vector<MotionPrimitive> prims;
  SearchGraph fwd;
  SearchGraph rev;
  double cost_scale = 1e5;
};

inline PlannerGraph build_planner_graph(const LatticeConfig& cfg, const CostField& field,
                                        double cost_scale = 1e5) {
  PlannerGraph pg;
  pg.cfg = cfg;
  pg.prims = build_primitive_set(cfg);
  pg.fwd = build_search_graph(cfg, pg.prims, field, cost_scale);
  pg.rev = pg.fwd.reversed();
  pg.cost_scale = cost_scale;
  return pg;
}

}  // namespace pwto
