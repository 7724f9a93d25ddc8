#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pwto/mosearch.hpp"

namespace pwto {

// Hausdorff distance between two point sets: the larger of the two directed
// sup-inf distances under the Euclidean metric.
inline double hausdorff(const std::vector<Eigen::Vector2d>& a,
                        const std::vector<Eigen::Vector2d>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff: empty point set");
  const auto directed = [](const std::vector<Eigen::Vector2d>& from,
                           const std::vector<Eigen::Vector2d>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, (p - q).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

inline std::vector<Eigen::Vector2d> vertex_points(const ParetoPath& p) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(p.vertices.size());
  for (const auto& v : p.vertices) pts.emplace_back(v.ix, v.iy);
  return pts;
}

// Path-to-path distance is measured over lattice vertex positions in
// grid-cell units, so thresholds are in cells.
inline double hausdorff(const ParetoPath& a, const ParetoPath& b) {
  return hausdorff(vertex_points(a), vertex_points(b));
}

struct FilterResult {
  std::vector<ParetoPath> kept;
  std::vector<char> kept_flag;  // per input entry, after cost-sorting
  std::vector<ParetoPath> ordered;  // the greedy visit order (cost-ascending)
};

// Shape-diversity filter: visit paths in ascending 0.5*c1 + 0.5*c2 order and
// keep one iff its Hausdorff distance to every kept path exceeds d_thres.
// Keeps the cheapest representative of each shape cluster; output pairs are
// all strictly farther apart than d_thres.
inline FilterResult filter_with_flags(const ParetoFront& front, double d_thres) {
  if (!(d_thres > 0.0)) throw std::invalid_argument("filter: d_thres must be positive");
  FilterResult res;
  res.ordered = front.entries;
  std::stable_sort(res.ordered.begin(), res.ordered.end(),
                   [](const ParetoPath& a, const ParetoPath& b) {
                     return a.scalarized() < b.scalarized();
                   });
  std::vector<std::vector<Eigen::Vector2d>> kept_pts;
  res.kept_flag.assign(res.ordered.size(), 0);
  for (std::size_t i = 0; i < res.ordered.size(); ++i) {
    const auto pts = vertex_points(res.ordered[i]);
    bool ok = true;
    for (const auto& kp : kept_pts) {
      if (hausdorff(pts, kp) <= d_thres) {
        ok = false;
        break;
      }
    }
    if (ok) {
      res.kept_flag[i] = 1;
      res.kept.push_back(res.ordered[i]);
      kept_pts.push_back(pts);
    }
  }
  return res;
}

inline std::vector<ParetoPath> filter(const ParetoFront& front, double d_thres) {
  return filter_with_flags(front, d_thres).kept;
}

}  // namespace pwto
