#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "pwto/costfield.hpp"
#include "pwto/mosearch.hpp"

namespace pwto {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat52 = Eigen::Matrix<double, 5, 2>;

// Second-order unicycle state (px, py, theta, v, omega).
struct RobotState {
  double px = 0.0, py = 0.0, theta = 0.0, v = 0.0, omega = 0.0;

  Vec5 vec() const { return {px, py, theta, v, omega}; }
  static RobotState from(const Vec5& x) { return {x[0], x[1], x[2], x[3], x[4]}; }
};

struct RobotControl {
  double a_v = 0.0, a_w = 0.0;
};

struct RobotLimits {
  double v_min = 0.0, v_max = 0.05;
  double omega_max = 1.57;
  double a_v_max = 0.1;
  double a_w_max = 1.0;
};

// Time-uniform state/control trajectory over horizon T (N nodes, N >= 2).
struct Trajectory {
  std::vector<RobotState> states;
  std::vector<RobotControl> controls;
  double horizon = 0.0;

  int nodes() const { return static_cast<int>(states.size()); }
  double dt() const { return horizon / (nodes() - 1); }
};

// Objective weights: control effort R, reference tracking Q, and the scale
// applied to the field term (both in the solved objective and the reported
// trajectory cost, so the reported cost never exceeds the augmented one).
struct WeightConfig {
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  Mat5 Q = Mat5::Zero();
  double field_scale = 1.0;

  static WeightConfig defaults() {
    WeightConfig w;
    w.Q.diagonal() << 50.0, 50.0, 5.0, 0.0, 0.0;
    return w;
  }
};

// (px', py', theta', v', omega') = (v cos th, v sin th, omega, a_v, a_w)
inline Vec5 dynamics(const RobotState& x, const RobotControl& u) {
  return {x.v * std::cos(x.theta), x.v * std::sin(x.theta), x.omega, u.a_v, u.a_w};
}

inline Vec5 dynamics(const Vec5& x, const Eigen::Vector2d& u) {
  return {x[3] * std::cos(x[2]), x[3] * std::sin(x[2]), x[4], u[0], u[1]};
}

inline void dynamics_jacobians(const Vec5& x, Mat5& A, Mat52& B) {
  A.setZero();
  const double c = std::cos(x[2]), s = std::sin(x[2]);
  A(0, 2) = -x[3] * s;
  A(0, 3) = c;
  A(1, 2) = x[3] * c;
  A(1, 3) = s;
  A(2, 4) = 1.0;
  B.setZero();
  B(3, 0) = 1.0;
  B(4, 1) = 1.0;
}

namespace detail {

// Headings from segment bearings (unwrapped), longitudinal speed from
// position differences, turn rate / accelerations from further differences,
// everything clipped into the feasible boxes. Shared by every guess builder.
inline Trajectory trajectory_from_positions(const std::vector<Eigen::Vector2d>& pos, double T,
                                            double theta_hint, const RobotLimits& lim) {
  const int n = static_cast<int>(pos.size());
  const double dt = T / (n - 1);
  std::vector<double> theta(n);
  double prev = theta_hint;
  for (int i = 0; i < n - 1; ++i) {
    const Eigen::Vector2d d = pos[i + 1] - pos[i];
    double th = (d.norm() > 1e-12) ? std::atan2(d.y(), d.x()) : prev;
    th = prev + wrap_angle(th - prev);  // unwrap against the previous bearing
    theta[i] = th;
    prev = th;
  }
  theta[n - 1] = theta[n - 2];

  Trajectory traj;
  traj.horizon = T;
  traj.states.resize(n);
  traj.controls.resize(n);
  std::vector<double> v(n), w(n);
  for (int i = 0; i < n; ++i) {
    const int j = std::min(i, n - 2);
    v[i] = std::clamp((pos[j + 1] - pos[j]).norm() / dt, lim.v_min, lim.v_max);
    w[i] = std::clamp((theta[std::min(j + 1, n - 1)] - theta[j]) / dt, -lim.omega_max,
                      lim.omega_max);
  }
  for (int i = 0; i < n; ++i) {
    traj.states[i] = {pos[i].x(), pos[i].y(), theta[i], v[i], w[i]};
    const int j = std::min(i, n - 2);
    traj.controls[i].a_v = std::clamp((v[j + 1] - v[j]) / dt, -lim.a_v_max, lim.a_v_max);
    traj.controls[i].a_w = std::clamp((w[j + 1] - w[j]) / dt, -lim.a_w_max, lim.a_w_max);
  }
  return traj;
}

inline std::vector<Eigen::Vector2d> resample_equal_arc(const std::vector<Eigen::Vector2d>& poly,
                                                       int n, double* total_len = nullptr) {
  std::vector<double> cum(poly.size(), 0.0);
  for (std::size_t i = 1; i < poly.size(); ++i)
    cum[i] = cum[i - 1] + (poly[i] - poly[i - 1]).norm();
  const double len = cum.back();
  if (total_len) *total_len = len;
  std::vector<Eigen::Vector2d> out(n);
  std::size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    const double s = len * i / (n - 1);
    while (seg + 2 < poly.size() && cum[seg + 1] < s) ++seg;
    const double ds = cum[seg + 1] - cum[seg];
    const double a = (ds > 0.0) ? (s - cum[seg]) / ds : 0.0;
    out[i] = poly[seg] + std::clamp(a, 0.0, 1.0) * (poly[seg + 1] - poly[seg]);
  }
  out[0] = poly.front();
  out[n - 1] = poly.back();
  return out;
}

}  // namespace detail

// Converts a lattice seed path into a dynamically plausible (not feasible)
// warm-start trajectory: equal-arc-length resampling of the swept polyline,
// headings/velocities/accelerations by finite differences, horizon from the
// nominal cruise speed.
inline Trajectory path_to_guess(const ParetoPath& path, int n_nodes, double v_nominal,
                                const RobotLimits& lim = {}) {
  if (path.points.size() < 2) throw std::invalid_argument("path_to_guess: need >= 2 points");
  if (n_nodes < 2) throw std::invalid_argument("path_to_guess: need >= 2 nodes");
  if (!(v_nominal > 0.0)) throw std::invalid_argument("path_to_guess: v_nominal must be > 0");
  double len = 0.0;
  const auto pos = detail::resample_equal_arc(path.points, n_nodes, &len);
  if (!(len > 0.0)) throw std::invalid_argument("path_to_guess: degenerate zero-length path");
  const double theta_hint = kTwoPi * path.vertices.front().ih /
                            std::max(1, 4);  // placeholder bearing for a leading dwell
  return detail::trajectory_from_positions(pos, len / v_nominal, theta_hint, lim);
}

struct SolverOptions {
  double tol_rel_obj = 1e-6;  // converged: relative J' change per accepted iteration
  double tol_feas = 1e-4;     // converged: max constraint violation
  double rho0 = 10.0;
  double rho_growth = 5.0;
  double rho_max = 1e8;
  double viol_shrink = 0.25;  // required violation decrease per outer round
  double inner_tol0 = 1e-2;
  double inner_tol_shrink = 0.3;
  double inner_tol_min = 1e-9;
  int lbfgs_mem = 10;
  double armijo_c = 1e-4;
  int max_backtracks = 40;
};

// Hermite-Simpson transcription of the trajectory problem: decision vector
// z = (x_0..x_{N-1}, u_0..u_{N-1}, T), defect equality constraints per
// segment, boundary states pinned through equal lower/upper bounds, box
// bounds everywhere else. Objective is the trapezoid discretization of the
// field + control cost, optionally plus the reference tracking term.
class Transcription {
 public:
  Transcription(const Trajectory& guess, CostField field, const WeightConfig& w,
                const RobotState& x_init, const RobotState& x_goal, const RobotLimits& lim)
      : n_(guess.nodes()), field_(std::move(field)), w_(w), limits_(lim) {
    if (n_ < 3) throw std::invalid_argument("transcribe: need >= 3 nodes");
    const auto inside = [&](const RobotState& s) {
      return s.px >= 0.0 && s.px <= 1.0 && s.py >= 0.0 && s.py <= 1.0 && s.v >= lim.v_min &&
             s.v <= lim.v_max && std::abs(s.omega) <= lim.omega_max;
    };
    if (!inside(x_init) || !inside(x_goal))
      throw std::invalid_argument("transcribe: boundary state outside the feasible boxes");

    // keep the pinned headings on the guess's winding so the seed path's
    // turn direction is preserved
    RobotState xi = x_init, xg = x_goal;
    xi.theta += kTwoPi * std::round((guess.states.front().theta - x_init.theta) / kTwoPi);
    xg.theta += kTwoPi * std::round((guess.states.back().theta - x_goal.theta) / kTwoPi);

    x_ref_.resize(5 * n_);
    for (int k = 0; k < n_; ++k) x_ref_.segment<5>(5 * k) = guess.states[k].vec();

    double th_lo = std::min(xi.theta, xg.theta), th_hi = std::max(xi.theta, xg.theta);
    for (int k = 0; k < n_; ++k) {
      th_lo = std::min(th_lo, guess.states[k].theta);
      th_hi = std::max(th_hi, guess.states[k].theta);
    }

    lo_.resize(dim());
    hi_.resize(dim());
    for (int k = 0; k < n_; ++k) {
      lo_.segment<5>(xoff(k)) << 0.0, 0.0, th_lo - kTwoPi, lim.v_min, -lim.omega_max;
      hi_.segment<5>(xoff(k)) << 1.0, 1.0, th_hi + kTwoPi, lim.v_max, lim.omega_max;
      lo_.segment<2>(uoff(k)) << -lim.a_v_max, -lim.a_w_max;
      hi_.segment<2>(uoff(k)) << lim.a_v_max, lim.a_w_max;
    }
    lo_.segment<5>(xoff(0)) = hi_.segment<5>(xoff(0)) = xi.vec();
    lo_.segment<5>(xoff(n_ - 1)) = hi_.segment<5>(xoff(n_ - 1)) = xg.vec();
    t_guess_ = guess.horizon;
    lo_[toff()] = 0.1 * t_guess_;
    hi_[toff()] = 10.0 * t_guess_;

    z0_.resize(dim());
    for (int k = 0; k < n_; ++k) {
      z0_.segment<5>(xoff(k)) = guess.states[k].vec();
      z0_.segment<2>(uoff(k)) << guess.controls[k].a_v, guess.controls[k].a_w;
    }
    z0_[toff()] = guess.horizon;
    z0_ = clamp(z0_);
  }

  int nodes() const { return n_; }
  int dim() const { return 7 * n_ + 1; }
  int num_defects() const { return 5 * (n_ - 1); }
  int xoff(int k) const { return 5 * k; }
  int uoff(int k) const { return 5 * n_ + 2 * k; }
  int toff() const { return 7 * n_; }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }
  const Eigen::VectorXd& initial_iterate() const { return z0_; }
  const Eigen::VectorXd& reference() const { return x_ref_; }
  const CostField& field() const { return field_; }
  const WeightConfig& weights() const { return w_; }
  const RobotLimits& limits() const { return limits_; }
  double guess_horizon() const { return t_guess_; }

  Eigen::VectorXd clamp(const Eigen::VectorXd& z) const {
    return z.cwiseMax(lo_).cwiseMin(hi_);
  }

  // J (field + control) and J' (plus tracking), trapezoid rule
  void objective(const Eigen::VectorXd& z, double* cost, double* cost_aug) const {
    const double dt = z[toff()] / (n_ - 1);
    double j = 0.0, jt = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double wk = (k == 0 || k == n_ - 1) ? 0.5 : 1.0;
      const Eigen::Vector2d p = z.segment<2>(xoff(k));
      const Eigen::Vector2d u = z.segment<2>(uoff(k));
      j += wk * (w_.field_scale * field_.eval(p) + u.dot(w_.R * u));
      const Vec5 dx = z.segment<5>(xoff(k)) - x_ref_.segment<5>(5 * k);
      jt += wk * dx.dot(w_.Q * dx);
    }
    if (cost) *cost = dt * j;
    if (cost_aug) *cost_aug = dt * (j + jt);
  }

  double cost_aug(const Eigen::VectorXd& z) const {
    double ja;
    objective(z, nullptr, &ja);
    return ja;
  }

  // gradient of J' w.r.t. the full decision vector
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const {
    const double T = z[toff()];
    const double dt = T / (n_ - 1);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    double integrand_sum = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double wk = (k == 0 || k == n_ - 1) ? 0.5 : 1.0;
      const Eigen::Vector2d p = z.segment<2>(xoff(k));
      const Eigen::Vector2d u = z.segment<2>(uoff(k));
      const Vec5 dx = z.segment<5>(xoff(k)) - x_ref_.segment<5>(5 * k);
      g.segment<2>(xoff(k)) += wk * dt * w_.field_scale * field_.grad(p);
      g.segment<5>(xoff(k)) += wk * dt * 2.0 * (w_.Q * dx);
      g.segment<2>(uoff(k)) += wk * dt * 2.0 * (w_.R * u);
      integrand_sum +=
          wk * (w_.field_scale * field_.eval(p) + u.dot(w_.R * u) + dx.dot(w_.Q * dx));
    }
    g[toff()] = integrand_sum / (n_ - 1);
    return g;
  }

  // Hermite-Simpson defects; zero iff each segment's cubic interpolant
  // satisfies the dynamics at its collocation midpoint
  Eigen::VectorXd defects(const Eigen::VectorXd& z) const {
    const double dt = z[toff()] / (n_ - 1);
    Eigen::VectorXd zeta(num_defects());
    for (int k = 0; k + 1 < n_; ++k) {
      const Vec5 xk = z.segment<5>(xoff(k)), xk1 = z.segment<5>(xoff(k + 1));
      const Eigen::Vector2d uk = z.segment<2>(uoff(k)), uk1 = z.segment<2>(uoff(k + 1));
      const Vec5 fk = dynamics(xk, uk), fk1 = dynamics(xk1, uk1);
      const Vec5 xm = 0.5 * (xk + xk1) + (dt / 8.0) * (fk - fk1);
      const Eigen::Vector2d um = 0.5 * (uk + uk1);
      const Vec5 fm = dynamics(xm, um);
      zeta.segment<5>(5 * k) = xk1 - xk - (dt / 6.0) * (fk + 4.0 * fm + fk1);
    }
    return zeta;
  }

  // directional derivative of the defect vector (for derivative checks)
  Eigen::VectorXd defect_jvp(const Eigen::VectorXd& z, const Eigen::VectorXd& v) const {
    const double T = z[toff()];
    const double st = 1.0 / (n_ - 1);
    const double dt = T * st;
    const double vT = v[toff()];
    Eigen::VectorXd out(num_defects());
    Mat5 Ak, Ak1, Am;
    Mat52 Bk, Bk1, Bm;
    for (int k = 0; k + 1 < n_; ++k) {
      const Vec5 xk = z.segment<5>(xoff(k)), xk1 = z.segment<5>(xoff(k + 1));
      const Eigen::Vector2d uk = z.segment<2>(uoff(k)), uk1 = z.segment<2>(uoff(k + 1));
      const Vec5 vxk = v.segment<5>(xoff(k)), vxk1 = v.segment<5>(xoff(k + 1));
      const Eigen::Vector2d vuk = v.segment<2>(uoff(k)), vuk1 = v.segment<2>(uoff(k + 1));
      const Vec5 fk = dynamics(xk, uk), fk1 = dynamics(xk1, uk1);
      const Vec5 xm = 0.5 * (xk + xk1) + (dt / 8.0) * (fk - fk1);
      const Eigen::Vector2d um = 0.5 * (uk + uk1);
      const Vec5 fm = dynamics(xm, um);
      dynamics_jacobians(xk, Ak, Bk);
      dynamics_jacobians(xk1, Ak1, Bk1);
      dynamics_jacobians(xm, Am, Bm);
      const Vec5 dfk = Ak * vxk + Bk * vuk;
      const Vec5 dfk1 = Ak1 * vxk1 + Bk1 * vuk1;
      const Vec5 dxm = 0.5 * (vxk + vxk1) + (dt / 8.0) * (dfk - dfk1) +
                       (st * vT / 8.0) * (fk - fk1);
      const Eigen::Vector2d dum = 0.5 * (vuk + vuk1);
      const Vec5 dfm = Am * dxm + Bm * dum;
      out.segment<5>(5 * k) = vxk1 - vxk - (st * vT / 6.0) * (fk + 4.0 * fm + fk1) -
                              (dt / 6.0) * (dfk + 4.0 * dfm + dfk1);
    }
    return out;
  }

  // accumulates J(z)^T w into g, where J is the defect Jacobian
  void defect_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& w, Eigen::VectorXd& g) const {
    const double T = z[toff()];
    const double st = 1.0 / (n_ - 1);
    const double dt = T * st;
    Mat5 Ak, Ak1, Am;
    Mat52 Bk, Bk1, Bm;
    for (int k = 0; k + 1 < n_; ++k) {
      const Vec5 xk = z.segment<5>(xoff(k)), xk1 = z.segment<5>(xoff(k + 1));
      const Eigen::Vector2d uk = z.segment<2>(uoff(k)), uk1 = z.segment<2>(uoff(k + 1));
      const Vec5 fk = dynamics(xk, uk), fk1 = dynamics(xk1, uk1);
      const Vec5 xm = 0.5 * (xk + xk1) + (dt / 8.0) * (fk - fk1);
      const Eigen::Vector2d um = 0.5 * (uk + uk1);
      const Vec5 fm = dynamics(xm, um);
      dynamics_jacobians(xk, Ak, Bk);
      dynamics_jacobians(xk1, Ak1, Bk1);
      dynamics_jacobians(xm, Am, Bm);
      const Vec5 wk = w.segment<5>(5 * k);
      const Vec5 amtw = Am.transpose() * wk;

      g.segment<5>(xoff(k)) +=
          -wk - (dt / 6.0) * (Ak.transpose() * wk +
                              4.0 * (0.5 * amtw + (dt / 8.0) * (Ak.transpose() * amtw)));
      g.segment<5>(xoff(k + 1)) +=
          wk - (dt / 6.0) * (Ak1.transpose() * wk +
                             4.0 * (0.5 * amtw - (dt / 8.0) * (Ak1.transpose() * amtw)));
      g.segment<2>(uoff(k)) +=
          -(dt / 6.0) * (Bk.transpose() * wk + 4.0 * ((dt / 8.0) * (Bk.transpose() * amtw) +
                                                      0.5 * (Bm.transpose() * wk)));
      g.segment<2>(uoff(k + 1)) +=
          -(dt / 6.0) * (Bk1.transpose() * wk + 4.0 * (-(dt / 8.0) * (Bk1.transpose() * amtw) +
                                                       0.5 * (Bm.transpose() * wk)));
      g[toff()] += -(st / 6.0) * wk.dot(fk + 4.0 * fm + fk1) -
                   (dt * st / 12.0) * amtw.dot(fk - fk1);
    }
  }

  double bound_violation(const Eigen::VectorXd& z) const {
    return std::max(0.0, std::max((lo_ - z).maxCoeff(), (z - hi_).maxCoeff()));
  }

  double max_violation(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd zeta = defects(z);
    return std::max(zeta.cwiseAbs().maxCoeff(), bound_violation(z));
  }

  Trajectory unpack(const Eigen::VectorXd& z) const {
    Trajectory t;
    t.horizon = z[toff()];
    t.states.resize(n_);
    t.controls.resize(n_);
    for (int k = 0; k < n_; ++k) {
      t.states[k] = RobotState::from(z.segment<5>(xoff(k)));
      t.controls[k] = {z[uoff(k)], z[uoff(k) + 1]};
    }
    return t;
  }

 private:
  int n_;
  CostField field_;
  WeightConfig w_;
  RobotLimits limits_;
  Eigen::VectorXd x_ref_;
  Eigen::VectorXd lo_, hi_, z0_;
  double t_guess_ = 0.0;
};

// One resumable NLP solve: augmented-Lagrangian outer loop over the defect
// equalities, bound-constrained projected L-BFGS inner descent. A "major
// iteration" is one accepted inner step; every bit of solver state lives
// here, so stepping in chunks reproduces a monolithic run exactly.
class OptProcess {
 public:
  OptProcess(Transcription problem, SolverOptions opts = {})
      : nlp_(std::move(problem)), opts_(opts), z_(nlp_.initial_iterate()),
        lambda_(Eigen::VectorXd::Zero(nlp_.num_defects())), rho_(opts.rho0),
        inner_tol_(opts.inner_tol0) {
    refresh_full();
    viol_last_outer_ = viol_;
  }

  const Transcription& problem() const { return nlp_; }
  const Eigen::VectorXd& iterate() const { return z_; }
  int iterations_done() const { return iterations_; }
  bool converged() const { return converged_; }
  bool failed() const { return failed_; }
  double cost() const { return cost_; }          // J, Eq-style field + control cost
  double cost_aug() const { return cost_aug_; }  // J' including tracking
  double max_violation() const { return viol_; }
  double merit() const { return merit_; }
  double last_rel_obj_change() const { return last_rel_dj_; }
  Trajectory trajectory() const { return nlp_.unpack(z_); }

  // advance exactly `budget` major iterations, or fewer on convergence/failure
  void step(int budget) {
    if (budget < 0) throw std::invalid_argument("step: negative budget");
    for (int i = 0; i < budget && !converged_ && !failed_; ++i) major_iteration();
  }

 private:
  void refresh_full() {
    const Eigen::VectorXd zeta = nlp_.defects(z_);
    nlp_.objective(z_, &cost_, &cost_aug_);
    viol_ = std::max(zeta.cwiseAbs().maxCoeff(), nlp_.bound_violation(z_));
    merit_ = cost_aug_ + lambda_.dot(zeta) + 0.5 * rho_ * zeta.squaredNorm();
    grad_ = nlp_.objective_gradient(z_);
    nlp_.defect_vjp(z_, lambda_ + rho_ * zeta, grad_);
    if (!std::isfinite(merit_) || !grad_.allFinite()) failed_ = true;
  }

  double merit_at(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd zeta = nlp_.defects(z);
    return nlp_.cost_aug(z) + lambda_.dot(zeta) + 0.5 * rho_ * zeta.squaredNorm();
  }

  Eigen::VectorXd lbfgs_direction() const {
    Eigen::VectorXd q = -grad_;
    const int m = static_cast<int>(s_.size());
    if (m == 0) return q;
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_sy_[i] * s_[i].dot(q);
      q -= alpha[i] * y_[i];
    }
    const double gamma = s_.back().dot(y_.back()) / y_.back().squaredNorm();
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho_sy_[i] * y_[i].dot(q);
      q += (alpha[i] - beta) * s_[i];
    }
    return q;
  }

  void outer_update() {
    lambda_ += rho_ * nlp_.defects(z_);
    if (viol_ > opts_.viol_shrink * viol_last_outer_)
      rho_ = std::min(rho_ * opts_.rho_growth, opts_.rho_max);
    viol_last_outer_ = viol_;
    inner_tol_ = std::max(inner_tol_ * opts_.inner_tol_shrink, opts_.inner_tol_min);
    s_.clear();
    y_.clear();
    rho_sy_.clear();
    refresh_full();
  }

  void major_iteration() {
    if (inner_done_) {
      inner_done_ = false;
      outer_update();
      if (failed_) return;
    }

    Eigen::VectorXd d = lbfgs_direction();
    if (grad_.dot(d) >= 0.0) d = -grad_;

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd z_new;
    double m_new = 0.0;
    for (int bt = 0; bt < opts_.max_backtracks; ++bt, alpha *= 0.5) {
      z_new = nlp_.clamp(z_ + alpha * d);
      const Eigen::VectorXd s = z_new - z_;
      if (s.cwiseAbs().maxCoeff() == 0.0) break;  // box leaves no room along d
      m_new = merit_at(z_new);
      if (!std::isfinite(m_new)) continue;
      if (m_new <= merit_ + opts_.armijo_c * grad_.dot(s)) {
        accepted = true;
        break;
      }
    }

    ++iterations_;
    if (!accepted) {
      // stationary within the box for this multiplier estimate
      last_rel_dj_ = 0.0;
      if (viol_ < opts_.tol_feas) {
        converged_ = true;
      } else {
        inner_done_ = true;
      }
      return;
    }

    const Eigen::VectorXd s = z_new - z_;
    const double cost_aug_old = cost_aug_;
    const Eigen::VectorXd grad_old = grad_;
    z_ = std::move(z_new);
    refresh_full();
    if (failed_) return;

    const Eigen::VectorXd y = grad_ - grad_old;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_.push_back(s);
      y_.push_back(y);
      rho_sy_.push_back(1.0 / sy);
      if (static_cast<int>(s_.size()) > opts_.lbfgs_mem) {
        s_.pop_front();
        y_.pop_front();
        rho_sy_.pop_front();
      }
    }

    last_rel_dj_ = std::abs(cost_aug_ - cost_aug_old) / std::max(1.0, std::abs(cost_aug_old));
    if (last_rel_dj_ < opts_.tol_rel_obj && viol_ < opts_.tol_feas) converged_ = true;

    const double pg = (nlp_.clamp(z_ - grad_) - z_).cwiseAbs().maxCoeff();
    if (pg < inner_tol_) inner_done_ = true;
  }

  Transcription nlp_;
  SolverOptions opts_;
  Eigen::VectorXd z_;
  Eigen::VectorXd lambda_;
  double rho_;
  double inner_tol_;
  double viol_last_outer_ = 0.0;
  bool inner_done_ = false;

  std::deque<Eigen::VectorXd> s_, y_;
  std::deque<double> rho_sy_;

  Eigen::VectorXd grad_;
  double merit_ = 0.0, cost_ = 0.0, cost_aug_ = 0.0, viol_ = 0.0;
  double last_rel_dj_ = std::numeric_limits<double>::infinity();
  int iterations_ = 0;
  bool converged_ = false, failed_ = false;
};

inline OptProcess transcribe(const Trajectory& guess, const CostField& field,
                             const WeightConfig& w, const RobotState& x_init,
                             const RobotState& x_goal, const RobotLimits& lim = {},
                             const SolverOptions& opts = {}) {
  return OptProcess(Transcription(guess, field, w, x_init, x_goal, lim), opts);
}

inline void step(OptProcess& p, int budget) { p.step(budget); }

// Converged means the last major iteration changed J' by less than the
// relative threshold while every constraint is within tolerance.
inline bool check_converged(const OptProcess& p) { return p.converged(); }

// Trajectory cost used in every cost-ratio comparison: field + control terms
// only, no tracking.
inline double solution_cost(const OptProcess& p) {
  if (!p.converged()) throw std::logic_error("solution_cost: process has not converged");
  return p.cost();
}

}  // namespace pwto
