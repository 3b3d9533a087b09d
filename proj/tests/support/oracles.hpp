#pragma once

#include "fingersim/equilibrium.hpp"
#include "support/generators.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace fingersim::testing {

// Planar two-link fingertip straight from trigonometry.
inline Vec2 planar_tip(const FingerParams& p, double a, double b) {
  return Vec2(p.proximal_length * std::cos(a) + p.distal_length * std::cos(a + b),
              p.proximal_length * std::sin(a) + p.distal_length * std::sin(a + b));
}

inline double planar_energy(const FingerParams& p, double a, double b) {
  const double dp = a - p.rest_angles[0];
  const double dd = b - p.rest_angles[1];
  const double over = std::max(0.0, b - p.travel_limit_distal);
  return 0.5 * (p.k_proximal * dp * dp + p.k_distal_bend * dd * dd +
                p.limit_stiffness() * over * over);
}

// Lagrange solution of the unobstructed finger, piecewise over the distal stop.
struct FreeSolution {
  double theta_p;
  double theta_d;
  double tension;
};

inline FreeSolution free_closing_oracle(const FingerParams& p, double e) {
  if (e <= 0.0) return {p.rest_angles[0], p.rest_angles[1], 0.0};
  const double cp = p.r_proximal / p.k_proximal;
  double t = e / (p.r_proximal * cp + p.r_distal * p.r_distal / p.k_distal_bend);
  double b = p.rest_angles[1] + t * p.r_distal / p.k_distal_bend;
  if (b > p.travel_limit_distal) {
    const double kd = p.k_distal_bend;
    const double kl = p.limit_stiffness();
    // theta_d = (t r_d + kd rest + kl limit) / (kd + kl), then enforce the tendon equality.
    const double base = (kd * p.rest_angles[1] + kl * p.travel_limit_distal) / (kd + kl);
    t = (e - p.r_distal * (base - p.rest_angles[1])) /
        (p.r_proximal * cp + p.r_distal * p.r_distal / (kd + kl));
    b = base + t * p.r_distal / (kd + kl);
  }
  return {p.rest_angles[0] + t * cp, b, t};
}

// Planar problem: tendon plus at most one rigid obstacle on the proximal link or fingertip.
struct PlanarProblem {
  FingerParams params;
  double excursion = 0.0;
  std::optional<Obstacle> obstacle;

  EquilibriumProblem to_problem() const {
    EquilibriumProblem pr;
    pr.params = params;
    pr.tendon_excursion = excursion;
    if (obstacle) pr.obstacles.push_back(*obstacle);
    return pr;
  }

  double gap(double a, double b) const {
    if (!obstacle) return 1.0;
    const Vec2 joint = params.proximal_length * Vec2(std::cos(a), std::sin(a));
    const Vec2 tip = planar_tip(params, a, b);
    if (const auto* h = std::get_if<HalfSpace>(&obstacle->shape)) {
      const Vec2 n = h->normal.head<2>().normalized();
      const Vec2 at = obstacle->link == Link::Proximal ? joint : tip;
      return n.dot(at - h->point.head<2>());
    }
    const auto& r = std::get<RoundObstacle>(obstacle->shape);
    const Vec2 c = r.center.head<2>();
    if (obstacle->link != Link::Proximal) return (tip - c).norm() - r.radius;
    const double t = std::clamp(c.dot(joint) / joint.squaredNorm(), 0.0, 1.0);
    return (t * joint - c).norm() - r.radius;
  }

  double tendon_slack(double a, double b) const {
    return params.r_proximal * (a - params.rest_angles[0]) +
           params.r_distal * (b - params.rest_angles[1]) - excursion;
  }

  bool feasible(double a, double b) const { return tendon_slack(a, b) >= -1e-12 && gap(a, b) >= 0.0; }
};

// Free closing, or a half-space or cylinder that stops the proximal link partway. The contact
// gap then depends on theta_p alone, so the region reachable from rest is a band in joint space
// and the minimum is unique.
inline PlanarProblem random_planar_problem(Rng& rng) {
  while (true) {
    PlanarProblem pr;
    pr.params = random_params(rng);
    pr.params.rest_angles = {uniform(rng, -0.1, 0.1), uniform(rng, 0.0, 0.3)};
    const double e_max = pr.params.r_proximal * (1.3 - pr.params.rest_angles[0]) +
                         pr.params.r_distal * 0.5;
    pr.excursion = uniform(rng, 0.5, e_max);
    const FreeSolution free = free_closing_oracle(pr.params, pr.excursion);
    if (free.theta_p > 2.0 || free.theta_d > 2.0) continue;
    const int kind = uniform_int(rng, 0, 2);
    if (kind > 0) {
      const double a0 = pr.params.rest_angles[0];
      const double stop = a0 + uniform(rng, 0.2, 0.95) * (free.theta_p - a0);
      if (stop < a0 + 0.05) continue;
      // Keep the pinned solution, where the distal joint takes up the rest, inside the grid.
      const double pinned_d = pr.params.rest_angles[1] +
                              (pr.excursion - pr.params.r_proximal * (stop - a0)) / pr.params.r_distal;
      if (pinned_d > 2.0) continue;
      const double lp = pr.params.proximal_length;
      const Vec2 u(std::cos(stop), std::sin(stop));
      const Vec2 t(-std::sin(stop), std::cos(stop));
      Obstacle ob;
      ob.link = Link::Proximal;
      if (kind == 1) {
        // The wall faces back along the joint's motion, tilted so the base stays clear.
        const double tilt = -uniform(rng, 0.15, 0.8);
        const Vec2 n = Eigen::Rotation2Dd(tilt) * (-t);
        const Vec2 at = lp * u;
        ob.shape = HalfSpace{Vec3(at.x(), at.y(), 0.0), Vec3(n.x(), n.y(), 0.0)};
      } else {
        const double radius = uniform(rng, 3.0, 20.0);
        const Vec2 c = uniform(rng, 0.4, 1.0) * lp * u + radius * t;
        ob.shape = RoundObstacle{Vec3(c.x(), c.y(), 0.0), radius, Vec3::UnitZ()};
      }
      pr.obstacle = ob;
      if (!(pr.gap(a0, pr.params.rest_angles[1]) > 0.0)) continue;
      if (base_clearance(ob) < 1.0) continue;
    }
    return pr;
  }
}

struct GridMinimum {
  double theta_p = 0.0;
  double theta_d = 0.0;
  double energy = std::numeric_limits<double>::infinity();
  double cell = 0.0;
};

// Brute force over an n x n grid, restricted to the obstacle-free region connected to the rest
// configuration (the finger cannot pass through the object). The exact crossings of the tendon
// and contact boundaries with every grid line, and with each other, are added as candidates.
inline GridMinimum grid_minimum(const PlanarProblem& pr, int n = 200, double lo = -0.6,
                                double hi = 2.3) {
  GridMinimum best;
  const double h = (hi - lo) / (n - 1);
  best.cell = h;
  const FingerParams& p = pr.params;
  auto node = [&](int i) { return lo + h * i; };

  std::vector<char> reach(static_cast<std::size_t>(n) * n, 0);
  auto at = [&](int i, int j) -> char& { return reach[static_cast<std::size_t>(i) * n + j]; };
  const int i0 = std::clamp(static_cast<int>(std::lround((p.rest_angles[0] - lo) / h)), 0, n - 1);
  const int j0 = std::clamp(static_cast<int>(std::lround((p.rest_angles[1] - lo) / h)), 0, n - 1);
  std::vector<std::pair<int, int>> stack;
  if (pr.gap(node(i0), node(j0)) >= 0.0) {
    at(i0, j0) = 1;
    stack.emplace_back(i0, j0);
  }
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int a = i + di[k], b = j + dj[k];
      if (a < 0 || b < 0 || a >= n || b >= n || at(a, b)) continue;
      if (pr.gap(node(a), node(b)) < 0.0) continue;
      at(a, b) = 1;
      stack.emplace_back(a, b);
    }
  }
  // A candidate counts when a reachable node lies within one cell of it.
  auto reachable = [&](double a, double b) {
    const int i = static_cast<int>(std::floor((a - lo) / h));
    const int j = static_cast<int>(std::floor((b - lo) / h));
    for (int di = 0; di <= 1; ++di) {
      for (int dj = 0; dj <= 1; ++dj) {
        const int x = i + di, y = j + dj;
        if (x >= 0 && y >= 0 && x < n && y < n && at(x, y)) return true;
      }
    }
    return false;
  };
  auto consider = [&](double a, double b) {
    if (a < lo - 1e-12 || a > hi + 1e-12 || b < lo - 1e-12 || b > hi + 1e-12) return;
    if (!pr.feasible(a, b) || !reachable(a, b)) return;
    const double e = planar_energy(p, a, b);
    if (e < best.energy) best = {a, b, e, h};
  };
  // Root of f between x0 and x1 (opposite signs) by bisection.
  auto bisect = [](const std::function<double(double)>& f, double x0, double x1) {
    double f0 = f(x0);
    for (int k = 0; k < 200 && std::abs(x1 - x0) > 1e-15; ++k) {
      const double m = 0.5 * (x0 + x1);
      const double fm = f(m);
      if ((fm >= 0.0) == (f0 >= 0.0)) {
        x0 = m;
        f0 = fm;
      } else {
        x1 = m;
      }
    }
    return f0 >= 0.0 ? x0 : x1;
  };
  auto tendon_b = [&](double a) {
    return p.rest_angles[1] + (pr.excursion - p.r_proximal * (a - p.rest_angles[0])) / p.r_distal;
  };

  for (int i = 0; i < n; ++i) {
    const double v = node(i);
    for (int j = 0; j < n; ++j) consider(v, node(j));
    consider(v, tendon_b(v));
    consider(p.rest_angles[0] + (pr.excursion - p.r_distal * (v - p.rest_angles[1])) / p.r_proximal, v);
    if (!pr.obstacle) continue;
    for (int j = 0; j + 1 < n; ++j) {
      // Contact boundary crossings along both grid directions.
      const auto along_a = [&](double a) { return pr.gap(a, v); };
      if ((pr.gap(node(j), v) >= 0.0) != (pr.gap(node(j + 1), v) >= 0.0)) {
        consider(bisect(along_a, node(j), node(j + 1)), v);
      }
      const auto along_b = [&](double b) { return pr.gap(v, b); };
      if ((pr.gap(v, node(j)) >= 0.0) != (pr.gap(v, node(j + 1)) >= 0.0)) {
        consider(v, bisect(along_b, node(j), node(j + 1)));
      }
    }
  }
  if (pr.obstacle) {
    // Corners where the taut tendon meets the contact boundary.
    const auto on_tendon = [&](double a) { return pr.gap(a, tendon_b(a)); };
    const int fine = 20 * n;
    for (int k = 0; k < fine; ++k) {
      const double a0 = lo + (hi - lo) * k / fine, a1 = lo + (hi - lo) * (k + 1) / fine;
      if ((on_tendon(a0) >= 0.0) != (on_tendon(a1) >= 0.0)) {
        const double a = bisect(on_tendon, a0, a1);
        consider(a, tendon_b(a));
      }
    }
  }
  return best;
}

}  // namespace fingersim::testing
