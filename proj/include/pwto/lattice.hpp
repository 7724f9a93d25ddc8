#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwto/costfield.hpp"

namespace pwto {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// wraps to (-pi, pi]
inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a > kPi) a -= kTwoPi;
  if (a <= -kPi) a += kTwoPi;
  return a;
}

// Discrete SE(2) pose: cell indices in [0,n)^2, heading bin in [0,nh).
// Bin ih maps to the angle 2*pi*ih/nh; cell (ix,iy) sits at the cell center.
struct LatticeVertex {
  int ix = 0;
  int iy = 0;
  int ih = 0;

  friend bool operator==(const LatticeVertex&, const LatticeVertex&) = default;
  friend auto operator<=>(const LatticeVertex&, const LatticeVertex&) = default;
};

// Per-edge cost pair: c1 = traversal time (s), c2 = field integral (cost*s).
struct CostVector {
  double c1 = 0.0;
  double c2 = 0.0;
};

enum class PrimitiveKind { Forward, ArcLeft, ArcRight, RotateLeft, RotateRight };

inline const char* to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Forward: return "forward";
    case PrimitiveKind::ArcLeft: return "arc_left";
    case PrimitiveKind::ArcRight: return "arc_right";
    case PrimitiveKind::RotateLeft: return "rotate_left";
    case PrimitiveKind::RotateRight: return "rotate_right";
  }
  return "?";
}

// A constant-control trajectory of the first-order unicycle
//   (px', py', theta') = (v cos theta, v sin theta, omega)
// that starts on a lattice vertex and ends within half a cell / half a
// heading bin of the declared integer displacement. Samples are poses
// relative to the source cell center (the source pose is (0, 0, heading
// angle)), endpoints inclusive.
struct MotionPrimitive {
  PrimitiveKind kind = PrimitiveKind::Forward;
  int heading = 0;  // source heading bin this primitive applies to
  int dix = 0, diy = 0, dih = 0;
  double v = 0.0, omega = 0.0;
  double duration = 0.0;
  std::vector<Eigen::Vector3d> samples;
};

// Square n x n x nh lattice over [0,1]^2 with first-order-unicycle motion
// primitives. v_max/omega_max are the simplified-model control limits.
struct LatticeConfig {
  int n = 200;
  int nh = 4;
  double v_max = 0.05;
  double omega_max = 1.57;
  int samples_per_primitive = 17;

  double cell() const { return 1.0 / n; }
  double heading_angle(int ih) const { return kTwoPi * ih / nh; }
  bool in_bounds(const LatticeVertex& v) const {
    return v.ix >= 0 && v.ix < n && v.iy >= 0 && v.iy < n && v.ih >= 0 && v.ih < nh;
  }
  Eigen::Vector2d center(const LatticeVertex& v) const {
    return {(v.ix + 0.5) * cell(), (v.iy + 0.5) * cell()};
  }

  std::uint32_t id(const LatticeVertex& v) const {
    return static_cast<std::uint32_t>((static_cast<std::int64_t>(v.iy) * n + v.ix) * nh + v.ih);
  }
  LatticeVertex vertex(std::uint32_t id) const {
    const int ih = static_cast<int>(id % nh);
    const std::uint32_t cellid = id / nh;
    return {static_cast<int>(cellid % n), static_cast<int>(cellid / n), ih};
  }
  std::size_t num_vertices() const { return static_cast<std::size_t>(n) * n * nh; }
};

namespace detail {

// Integer direction vector of each heading bin. Exact for nh = 4 and 8; for
// nh = 16 the off-axis bins use the usual (2,1)-family approximations, which
// keeps primitive endpoints within the half-cell snap tolerance.
inline std::pair<int, int> heading_dir(int nh, int ih) {
  static constexpr std::pair<int, int> d4[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  static constexpr std::pair<int, int> d8[8] = {{1, 0},  {1, 1},  {0, 1},  {-1, 1},
                                                {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  static constexpr std::pair<int, int> d16[16] = {
      {1, 0},  {2, 1},   {1, 1},   {1, 2},  {0, 1},  {-1, 2},  {-1, 1},  {-2, 1},
      {-1, 0}, {-2, -1}, {-1, -1}, {-1, -2}, {0, -1}, {1, -2}, {1, -1},  {2, -1}};
  switch (nh) {
    case 4: return d4[ih];
    case 8: return d8[ih];
    case 16: return d16[ih];
  }
  throw std::invalid_argument("heading_dir: unsupported nh");
}

}  // namespace detail

// Builds the primitive set: per source heading, one forward move along the
// heading direction, two constant-curvature arcs turning one heading bin at
// full turn rate, and two in-place rotations of one bin. 5*nh primitives in
// total; nh must be 4, 8 or 16.
inline std::vector<MotionPrimitive> build_primitive_set(int nh, double cell, double v_max,
                                                        double omega_max, int n_samples = 17) {
  if (nh != 4 && nh != 8 && nh != 16)
    throw std::invalid_argument("build_primitive_set: nh must be 4, 8 or 16");
  if (!(cell > 0.0) || !(v_max > 0.0) || !(omega_max > 0.0))
    throw std::invalid_argument("build_primitive_set: cell, v_max, omega_max must be positive");
  if (n_samples < 12) throw std::invalid_argument("build_primitive_set: need >= 12 samples");

  std::vector<MotionPrimitive> prims;
  prims.reserve(static_cast<std::size_t>(5) * nh);
  const double dtheta = kTwoPi / nh;

  for (int ih = 0; ih < nh; ++ih) {
    const double th0 = kTwoPi * ih / nh;
    const auto [fx, fy] = detail::heading_dir(nh, ih);

    // forward: travel the integer direction's length along the bin angle
    {
      MotionPrimitive p;
      p.kind = PrimitiveKind::Forward;
      p.heading = ih;
      p.dix = fx;
      p.diy = fy;
      p.dih = 0;
      const double len = std::hypot(fx, fy) * cell;
      p.v = v_max;
      p.omega = 0.0;
      p.duration = len / v_max;
      p.samples.resize(n_samples);
      for (int k = 0; k < n_samples; ++k) {
        const double s = len * k / (n_samples - 1);
        p.samples[k] = {s * std::cos(th0), s * std::sin(th0), th0};
      }
      prims.push_back(std::move(p));
    }

    // arcs turning +-1 bin; radius fitted so the endpoint lands on the
    // integer target dir(ih) + dir(ih +- 1), turn rate capped by both limits
    for (int side : {+1, -1}) {
      const int ih2 = ((ih + side) % nh + nh) % nh;
      const auto [gx, gy] = detail::heading_dir(nh, ih2);
      const Eigen::Vector2d target(fx + gx, fy + gy);  // in cell units
      Eigen::Vector2d w;  // unit-radius arc displacement, cell units
      if (side > 0)
        w = {std::sin(th0 + dtheta) - std::sin(th0), std::cos(th0) - std::cos(th0 + dtheta)};
      else
        w = {std::sin(th0) - std::sin(th0 - dtheta), std::cos(th0 - dtheta) - std::cos(th0)};
      const double radius = w.dot(target) / w.squaredNorm();  // cells
      const double omega = std::min(omega_max, v_max / (radius * cell));
      MotionPrimitive p;
      p.kind = side > 0 ? PrimitiveKind::ArcLeft : PrimitiveKind::ArcRight;
      p.heading = ih;
      p.dix = fx + gx;
      p.diy = fy + gy;
      p.dih = side;
      p.v = omega * radius * cell;
      p.omega = side * omega;
      p.duration = dtheta / omega;
      p.samples.resize(n_samples);
      const double r = radius * cell;
      for (int k = 0; k < n_samples; ++k) {
        const double phi = dtheta * k / (n_samples - 1);
        double x, y;
        if (side > 0) {
          x = r * (std::sin(th0 + phi) - std::sin(th0));
          y = r * (std::cos(th0) - std::cos(th0 + phi));
        } else {
          x = r * (std::sin(th0) - std::sin(th0 - phi));
          y = r * (std::cos(th0 - phi) - std::cos(th0));
        }
        p.samples[k] = {x, y, th0 + side * phi};
      }
      prims.push_back(std::move(p));
    }

    // in-place rotations of one bin
    for (int side : {+1, -1}) {
      MotionPrimitive p;
      p.kind = side > 0 ? PrimitiveKind::RotateLeft : PrimitiveKind::RotateRight;
      p.heading = ih;
      p.dix = 0;
      p.diy = 0;
      p.dih = side;
      p.v = 0.0;
      p.omega = side * omega_max;
      p.duration = dtheta / omega_max;
      p.samples.resize(n_samples);
      for (int k = 0; k < n_samples; ++k) {
        const double phi = dtheta * k / (n_samples - 1);
        p.samples[k] = {0.0, 0.0, th0 + side * phi};
      }
      prims.push_back(std::move(p));
    }
  }
  return prims;
}

inline std::vector<MotionPrimitive> build_primitive_set(const LatticeConfig& cfg) {
  return build_primitive_set(cfg.nh, cfg.cell(), cfg.v_max, cfg.omega_max,
                             cfg.samples_per_primitive);
}

// Edge cost of one primitive applied at `from`: c1 is the duration, c2 the
// left-Riemann integral of the field along the primitive samples.
inline CostVector edge_cost(const LatticeConfig& cfg, const CostField& field,
                            const LatticeVertex& from, const MotionPrimitive& prim) {
  const Eigen::Vector2d origin = cfg.center(from);
  const double dt = prim.duration / (static_cast<int>(prim.samples.size()) - 1);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < prim.samples.size(); ++k) {
    acc += field.eval(origin + prim.samples[k].head<2>());
  }
  return {prim.duration, acc * dt};
}

struct Successor {
  LatticeVertex vertex;
  CostVector cost;
  int primitive = -1;  // index into the primitive set
};

// Applies every primitive whose source heading matches; successors that
// leave the grid are dropped (border vertices simply have fewer).
inline std::vector<Successor> successors(const LatticeConfig& cfg,
                                         const std::vector<MotionPrimitive>& prims,
                                         const CostField& field, const LatticeVertex& v) {
  std::vector<Successor> out;
  out.reserve(5);
  for (std::size_t pi = 0; pi < prims.size(); ++pi) {
    const MotionPrimitive& p = prims[pi];
    if (p.heading != v.ih) continue;
    LatticeVertex to{v.ix + p.dix, v.iy + p.diy, ((v.ih + p.dih) % cfg.nh + cfg.nh) % cfg.nh};
    if (to.ix < 0 || to.ix >= cfg.n || to.iy < 0 || to.iy >= cfg.n) continue;
    out.push_back({to, edge_cost(cfg, field, v, p), static_cast<int>(pi)});
  }
  return out;
}

// Nearest vertex to a continuous pose: Euclidean (x,y) distance plus angular
// distance weighted at one cell per heading bin. Ties go to the smallest
// (ix, iy, ih) lexicographically, which the scan order guarantees.
inline LatticeVertex snap(const LatticeConfig& cfg, double x, double y, double theta) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("snap: pose outside [0,1]^2");
  const double cell = cfg.cell();
  const double bin = kTwoPi / cfg.nh;
  const auto clampi = [&](int i) { return std::max(0, std::min(cfg.n - 1, i)); };
  const int ix0 = clampi(static_cast<int>(std::floor(x * cfg.n - 0.5)));
  const int iy0 = clampi(static_cast<int>(std::floor(y * cfg.n - 0.5)));

  LatticeVertex best{};
  double best_d = std::numeric_limits<double>::infinity();
  for (int ix = ix0; ix <= clampi(ix0 + 1); ++ix) {
    for (int iy = iy0; iy <= clampi(iy0 + 1); ++iy) {
      const double dx = x - (ix + 0.5) * cell;
      const double dy = y - (iy + 0.5) * cell;
      const double dpos = std::hypot(dx, dy);
      for (int ih = 0; ih < cfg.nh; ++ih) {
        const double dang = std::abs(wrap_angle(theta - cfg.heading_angle(ih)));
        const double d = dpos + cell * (dang / bin);
        if (d < best_d) {
          best_d = d;
          best = {ix, iy, ih};
        }
      }
    }
  }
  return best;
}

inline LatticeVertex snap(const LatticeConfig& cfg, const Eigen::Vector3d& pose) {
  return snap(cfg, pose.x(), pose.y(), pose.z());
}

}  // namespace pwto
