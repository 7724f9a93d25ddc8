#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "pwto/graph.hpp"
#include "pwto/lattice.hpp"

namespace pwto {

// Dominance: a <= b in every component and a < b in at least one.
inline bool dominates(const CostVector& a, const CostVector& b) {
  return a.c1 <= b.c1 && a.c2 <= b.c2 && (a.c1 < b.c1 || a.c2 < b.c2);
}

inline bool dominates(const ScaledCost& a, const ScaledCost& b) {
  return a.c1 <= b.c1 && a.c2 <= b.c2 && (a.c1 < b.c1 || a.c2 < b.c2);
}

// Set of mutually non-dominated cost vectors kept sorted by c1 ascending
// (hence c2 strictly descending). Membership-or-better is a binary search.
class Frontier {
 public:
  // true if some entry weakly dominates c (dominates it or equals it)
  bool covers(const ScaledCost& c) const {
    auto it = std::upper_bound(entries_.begin(), entries_.end(), c.c1,
                               [](std::uint64_t v, const ScaledCost& e) { return v < e.c1; });
    if (it == entries_.begin()) return false;
    return std::prev(it)->c2 <= c.c2;
  }

  // insert c, evicting entries it weakly dominates; caller checks covers() first
  void insert(const ScaledCost& c) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), c.c1,
                               [](const ScaledCost& e, std::uint64_t v) { return e.c1 < v; });
    auto last = it;
    while (last != entries_.end() && last->c2 >= c.c2) ++last;
    if (it != last) {
      *it = c;
      entries_.erase(it + 1, last);
    } else {
      entries_.insert(it, c);
    }
  }

  const std::vector<ScaledCost>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<ScaledCost> entries_;
};

// One cost-unique Pareto-optimal path through an explicit graph.
struct GraphParetoEntry {
  ScaledCost cost;
  std::vector<VertexId> vertices;
  std::vector<std::int32_t> prims;  // primitive per edge, -1 for non-lattice graphs
};

struct MoaStarStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
};

namespace detail {

struct OpenLabel {
  ScaledCost f;
  ScaledCost g;
  VertexId vertex;
  std::uint32_t seq;  // FIFO tie-break after (f1, f2)
  std::int32_t parent;
  std::int32_t prim;
};

struct OpenLabelOrder {
  bool operator()(const OpenLabel& a, const OpenLabel& b) const {
    if (a.f.c1 != b.f.c1) return a.f.c1 > b.f.c1;
    if (a.f.c2 != b.f.c2) return a.f.c2 > b.f.c2;
    return a.seq > b.seq;
  }
};

struct AcceptedLabel {
  VertexId vertex;
  ScaledCost g;
  std::int32_t parent;
  std::int32_t prim;
};

}  // namespace detail

// Label-setting multi-objective A*: lexicographic (f1, f2) best-first with
// lazy per-vertex frontier pruning and goal-front pruning. Heuristics are
// per-objective lower bounds (exact reverse-Dijkstra distances); labels are
// popped in nondecreasing f1, so the surviving goal labels form exactly the
// cost-unique Pareto front. Among equal-cost paths the first one closed wins.
inline std::vector<GraphParetoEntry> moa_star(const SearchGraph& graph,
                                              const std::vector<std::uint64_t>& h1,
                                              const std::vector<std::uint64_t>& h2,
                                              VertexId start, VertexId goal,
                                              MoaStarStats* stats = nullptr) {
  if (start == goal) throw std::invalid_argument("moa_star: start equals goal");
  if (start >= graph.size() || goal >= graph.size())
    throw std::invalid_argument("moa_star: vertex out of range");

  std::vector<Frontier> frontier(graph.size());
  Frontier goal_front;
  std::vector<detail::AcceptedLabel> arena;
  std::vector<std::int32_t> goal_labels;

  std::priority_queue<detail::OpenLabel, std::vector<detail::OpenLabel>, detail::OpenLabelOrder>
      open;
  std::uint32_t seq = 0;

  if (h1[start] != kUnreachable && h2[start] != kUnreachable) {
    open.push({{h1[start], h2[start]}, {0, 0}, start, seq++, -1, -1});
  }

  while (!open.empty()) {
    const detail::OpenLabel top = open.top();
    open.pop();
    if (frontier[top.vertex].covers(top.g)) continue;
    if (top.vertex != goal && goal_front.covers(top.f)) continue;

    frontier[top.vertex].insert(top.g);
    arena.push_back({top.vertex, top.g, top.parent, top.prim});
    const auto idx = static_cast<std::int32_t>(arena.size() - 1);
    if (stats) ++stats->expanded;

    if (top.vertex == goal) {
      goal_front.insert(top.g);
      goal_labels.push_back(idx);
      continue;
    }

    for (const SearchEdge& e : graph.out(top.vertex)) {
      if (h1[e.to] == kUnreachable || h2[e.to] == kUnreachable) continue;
      const ScaledCost g{top.g.c1 + e.c1, top.g.c2 + e.c2};
      const ScaledCost f{g.c1 + h1[e.to], g.c2 + h2[e.to]};
      if (frontier[e.to].covers(g)) continue;
      if (goal_front.covers(f)) continue;
      open.push({f, g, e.to, seq++, idx, e.prim});
      if (stats) ++stats->generated;
    }
  }

  std::vector<GraphParetoEntry> out;
  out.reserve(goal_labels.size());
  for (const std::int32_t gl : goal_labels) {
    GraphParetoEntry entry;
    entry.cost = arena[gl].g;
    for (std::int32_t i = gl; i >= 0; i = arena[i].parent) {
      entry.vertices.push_back(arena[i].vertex);
      if (arena[i].parent >= 0) entry.prims.push_back(arena[i].prim);
    }
    std::reverse(entry.vertices.begin(), entry.vertices.end());
    std::reverse(entry.prims.begin(), entry.prims.end());
    out.push_back(std::move(entry));
  }
  return out;
}

inline std::vector<GraphParetoEntry> moa_star(const SearchGraph& graph, VertexId start,
                                              VertexId goal, MoaStarStats* stats = nullptr) {
  const SearchGraph rev = graph.reversed();
  const auto h1 = dijkstra_all(rev, goal, CostObjective::TraversalTime);
  const auto h2 = dijkstra_all(rev, goal, CostObjective::FieldIntegral);
  return moa_star(graph, h1, h2, start, goal, stats);
}

// Exhaustive test oracle: depth-first enumeration of every simple path from
// start to goal with at most hop_limit edges, reduced to the cost-unique
// non-dominated subset. No pruning beyond the hop limit, so the visit budget
// caps the blow-up on anything but small graphs.
struct EnumerationBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<GraphParetoEntry> brute_force_pareto(const SearchGraph& graph, VertexId start,
                                                        VertexId goal, int hop_limit,
                                                        std::uint64_t budget = 20'000'000) {
  if (start >= graph.size() || goal >= graph.size())
    throw std::invalid_argument("brute_force_pareto: vertex out of range");

  std::vector<GraphParetoEntry> found;
  std::vector<VertexId> path{start};
  std::vector<std::int32_t> prims;
  std::vector<char> on_path(graph.size(), 0);
  on_path[start] = 1;
  std::uint64_t visits = 0;

  const auto weakly_dominated_by = [](const ScaledCost& a, const ScaledCost& b) {
    return b.c1 <= a.c1 && b.c2 <= a.c2;
  };

  auto dfs = [&](auto&& self, VertexId v, ScaledCost g, int hops) -> void {
    if (++visits > budget)
      throw EnumerationBudgetExceeded("brute_force_pareto: enumeration budget exceeded");
    if (v == goal) {
      found.push_back({g, path, prims});
      return;  // extending past the goal only adds cost in c1
    }
    if (hops == hop_limit) return;
    for (const SearchEdge& e : graph.out(v)) {
      if (on_path[e.to]) continue;
      on_path[e.to] = 1;
      path.push_back(e.to);
      prims.push_back(e.prim);
      self(self, e.to, {g.c1 + e.c1, g.c2 + e.c2}, hops + 1);
      prims.pop_back();
      path.pop_back();
      on_path[e.to] = 0;
    }
  };
  dfs(dfs, start, {0, 0}, 0);

  // keep the first path seen for each non-dominated cost vector
  std::vector<GraphParetoEntry> front;
  for (const auto& cand : found) {
    bool drop = false;
    for (const auto& kept : front) {
      if (weakly_dominated_by(cand.cost, kept.cost)) {
        drop = true;
        break;
      }
    }
    if (drop) continue;
    std::erase_if(front, [&](const GraphParetoEntry& kept) {
      return dominates(cand.cost, kept.cost);
    });
    front.push_back(cand);
  }
  std::sort(front.begin(), front.end(), [](const GraphParetoEntry& a, const GraphParetoEntry& b) {
    return a.cost.c1 < b.cost.c1;
  });
  return front;
}

// A lattice path on the Pareto front: vertex sequence, cost vector (seconds
// and cost-seconds, plus the integer-scaled form the search ran on) and the
// workspace polyline swept by its motion primitives.
struct ParetoPath {
  std::vector<LatticeVertex> vertices;
  CostVector cost;
  ScaledCost cost_scaled;
  std::vector<Eigen::Vector2d> points;

  double scalarized() const { return 0.5 * cost.c1 + 0.5 * cost.c2; }
};

struct ParetoFront {
  std::vector<ParetoPath> entries;
  bool reachable = false;
};

inline ParetoPath make_lattice_path(const PlannerGraph& pg, const GraphParetoEntry& entry) {
  ParetoPath p;
  p.cost_scaled = entry.cost;
  p.cost = {static_cast<double>(entry.cost.c1) / pg.cost_scale,
            static_cast<double>(entry.cost.c2) / pg.cost_scale};
  p.vertices.reserve(entry.vertices.size());
  for (const VertexId id : entry.vertices) p.vertices.push_back(pg.cfg.vertex(id));
  for (std::size_t k = 0; k + 1 < entry.vertices.size(); ++k) {
    const MotionPrimitive& prim = pg.prims[static_cast<std::size_t>(entry.prims[k])];
    const Eigen::Vector2d origin = pg.cfg.center(p.vertices[k]);
    const std::size_t first = (k == 0) ? 0 : 1;  // avoid duplicating shared endpoints
    for (std::size_t s = first; s < prim.samples.size(); ++s)
      p.points.push_back(origin + prim.samples[s].head<2>());
  }
  if (entry.vertices.size() == 1) p.points.push_back(pg.cfg.center(p.vertices[0]));
  return p;
}

// Cost-unique Pareto front between two lattice vertices. An empty front with
// reachable=false means no path exists (disconnected heading component).
inline ParetoFront moa_star(const PlannerGraph& pg, const LatticeVertex& start,
                            const LatticeVertex& goal, MoaStarStats* stats = nullptr) {
  if (!pg.cfg.in_bounds(start) || !pg.cfg.in_bounds(goal))
    throw std::invalid_argument("moa_star: vertex out of bounds");
  const auto h1 = dijkstra_all(pg.rev, pg.cfg.id(goal), CostObjective::TraversalTime);
  if (h1[pg.cfg.id(start)] == kUnreachable) return {{}, false};
  const auto h2 = dijkstra_all(pg.rev, pg.cfg.id(goal), CostObjective::FieldIntegral);
  const auto entries = moa_star(pg.fwd, h1, h2, pg.cfg.id(start), pg.cfg.id(goal), stats);

  ParetoFront front;
  front.reachable = true;
  front.entries.reserve(entries.size());
  for (const auto& e : entries) front.entries.push_back(make_lattice_path(pg, e));
  return front;
}

inline ParetoFront moa_star(const LatticeConfig& cfg, const CostField& field,
                            const LatticeVertex& start, const LatticeVertex& goal,
                            double cost_scale = 1e5) {
  return moa_star(build_planner_graph(cfg, field, cost_scale), start, goal);
}

}  // namespace pwto
