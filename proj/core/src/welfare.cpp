#include "cglab/welfare.hpp"

#include <algorithm>
#include <cmath>

#include "cglab/rng.hpp"

namespace cglab {

WelfareBounds historical_bounds(const CounterfactualModel& model) {
  WelfareBounds b;
  for (std::size_t i = 0; i < kDistricts; ++i) {
    b.lower[i] = model.districts[i].flow_min;
    b.upper[i] = model.districts[i].flow_max;
  }
  return b;
}

WelfareBounds feasible_bounds(const CounterfactualModel& model, double n_drivers, bool& relaxed) {
  WelfareBounds b = historical_bounds(model);
  relaxed = b.lower[0] + b.lower[1] + b.lower[2] > n_drivers || b.upper[0] + b.upper[1] + b.upper[2] < n_drivers;
  if (relaxed) {
    b.lower = {0.0, 0.0, 0.0};
    b.upper = {n_drivers, n_drivers, n_drivers};
  }
  return b;
}

PerDistrict project_to_feasible(const PerDistrict& f, const WelfareBounds& bounds, double total) {
  auto shifted = [&](double t) {
    PerDistrict out{};
    for (std::size_t i = 0; i < kDistricts; ++i) out[i] = std::clamp(f[i] + t, bounds.lower[i], bounds.upper[i]);
    return out;
  };
  auto sum = [](const PerDistrict& x) { return x[0] + x[1] + x[2]; };
  double lo = -1.0, hi = 1.0;
  while (sum(shifted(lo)) > total) lo *= 2.0;
  while (sum(shifted(hi)) < total) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (sum(shifted(mid)) < total ? lo : hi) = mid;
  }
  PerDistrict out = shifted(0.5 * (lo + hi));
  // Put the bisection residue on a district with slack.
  const double residue = total - sum(out);
  for (std::size_t i = 0; i < kDistricts; ++i) {
    const double moved = std::clamp(out[i] + residue, bounds.lower[i], bounds.upper[i]);
    if (moved - out[i] == residue) {
      out[i] = moved;
      break;
    }
  }
  return out;
}

namespace {

PerDistrict project_box(const PerDistrict& x, const WelfareBounds& b) {
  PerDistrict out{};
  for (std::size_t i = 0; i < kDistricts; ++i) out[i] = std::clamp(x[i], b.lower[i], b.upper[i]);
  return out;
}

double norm2(const PerDistrict& a, const PerDistrict& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kDistricts; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct Solver {
  double n;
  const PickupFunction& pickups;
  const WelfareBounds& bounds;
  const AugmentedLagrangianOptions& opt;

  double lagrangian(const PerDistrict& x, double lambda, double mu) const {
    const double h = x[0] + x[1] + x[2] - n;
    return (n - pickups(x)) + lambda * h + 0.5 * mu * h * h;
  }

  PerDistrict gradient(const PerDistrict& x, double lambda, double mu) const {
    PerDistrict g{};
    for (std::size_t i = 0; i < kDistricts; ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
      PerDistrict up = x, down = x;
      up[i] += step;
      down[i] -= step;
      g[i] = (lagrangian(up, lambda, mu) - lagrangian(down, lambda, mu)) / (2.0 * step);
    }
    return g;
  }

  /// Projected gradient with backtracking; returns the last step length.
  double inner(PerDistrict& x, double lambda, double mu) const {
    double s = 1.0 / (1.0 + mu);
    double last = 0.0;
    double fx = lagrangian(x, lambda, mu);
    for (int it = 0; it < opt.max_inner_iterations; ++it) {
      const PerDistrict g = gradient(x, lambda, mu);
      PerDistrict next{};
      double fn = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        for (std::size_t i = 0; i < kDistricts; ++i) next[i] = x[i] - s * g[i];
        next = project_box(next, bounds);
        fn = lagrangian(next, lambda, mu);
        double decrease = 0.0;
        for (std::size_t i = 0; i < kDistricts; ++i) decrease += g[i] * (next[i] - x[i]);
        if (fn <= fx + decrease + norm2(next, x) / (2.0 * s)) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      last = std::sqrt(norm2(next, x));
      if (!accepted || last < opt.step_tolerance) {
        if (accepted && fn <= fx) x = next;
        break;
      }
      x = next;
      fx = fn;
      s *= 2.0;
    }
    return last;
  }

  PerDistrict run(PerDistrict x) const {
    double lambda = 0.0;
    double mu = opt.initial_penalty;
    double prev_violation = std::abs(x[0] + x[1] + x[2] - n);
    for (int outer = 0; outer < opt.max_outer_iterations; ++outer) {
      const double step = inner(x, lambda, mu);
      const double h = x[0] + x[1] + x[2] - n;
      if (std::abs(h) < opt.violation_tolerance && step < opt.step_tolerance) break;
      lambda += mu * h;
      if (std::abs(h) > 0.25 * prev_violation) mu *= opt.penalty_growth;
      prev_violation = std::abs(h);
    }
    return x;
  }
};

}  // namespace

WelfareReport max_welfare(double n_drivers, const PickupFunction& pickups, const WelfareBounds& bounds,
                          const AugmentedLagrangianOptions& options, std::uint64_t seed) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < kDistricts; ++i) {
    if (bounds.lower[i] > bounds.upper[i]) throw Error(Errc::constraint_set_empty, "constraint set empty");
    lo += bounds.lower[i];
    hi += bounds.upper[i];
  }
  if (n_drivers < lo - 1e-9 || n_drivers > hi + 1e-9) {
    throw Error(Errc::constraint_set_empty, "constraint set empty");
  }
  if (options.restarts < 1) throw Error(Errc::invalid_argument, "at least one restart is required");

  const Solver solver{n_drivers, pickups, bounds, options};
  WelfareReport report;
  report.max_pickups = -1.0;
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    PerDistrict start{};
    for (std::size_t i = 0; i < kDistricts; ++i) {
      start[i] = bounds.lower[i] + uniform01(rng) * (bounds.upper[i] - bounds.lower[i]);
    }
    const PerDistrict x = project_to_feasible(solver.run(start), bounds, n_drivers);
    const double value = pickups(x);
    report.restart_pickups.push_back(value);
    if (value > report.max_pickups) {
      report.max_pickups = value;
      report.optimal_flow = FlowDistribution(x);
    }
  }
  return report;
}

WelfareReport max_welfare(double n_drivers, const CounterfactualModel& model, const WelfareBounds& bounds,
                          const AugmentedLagrangianOptions& options, std::uint64_t seed) {
  const PickupFunction f = [&model](const PerDistrict& x) {
    double total = 0.0;
    for (District d : kAllDistricts) total += predict_pickups(model, d, x[index(d)]);
    return total;
  };
  return max_welfare(n_drivers, f, bounds, options, seed);
}

WelfareReport max_welfare(double n_drivers, const CounterfactualModel& model,
                          const AugmentedLagrangianOptions& options, std::uint64_t seed) {
  return max_welfare(n_drivers, model, historical_bounds(model), options, seed);
}

}  // namespace cglab
