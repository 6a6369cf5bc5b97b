#include "jumpctrl/jump_driver.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace jumpctrl {

double MarkSpace::total_rate() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void MarkSpace::validate() const {
  if (labels.size() != weights.size())
    throw std::invalid_argument("mark space: labels and weights differ in size");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("mark space: weights must be positive and finite");
  }
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size())
    throw std::invalid_argument("mark space: duplicate labels");
}

MarkSpace MarkSpace::uniform(std::size_t n, double total_rate) {
  MarkSpace m;
  for (std::size_t i = 0; i < n; ++i) {
    m.labels.push_back("m" + std::to_string(i));
    m.weights.push_back(total_rate / static_cast<double>(n));
  }
  return m;
}

TimeGrid refine_grid(double horizon, std::size_t base_steps,
                     const std::vector<JumpEvent>& jumps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("refine_grid: horizon must be positive and finite");
  if (base_steps == 0) throw std::invalid_argument("refine_grid: base_steps must be >= 1");

  const double merge_tol = 1e-12 * horizon;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const double t = jumps[k].time;
    if (!(t > 0.0) || t > horizon + merge_tol)
      throw std::invalid_argument("refine_grid: jump time outside (0, horizon]");
    if (k > 0 && !(t > jumps[k - 1].time + merge_tol))
      throw std::invalid_argument("refine_grid: jump times must be strictly increasing");
  }

  TimeGrid g;
  g.horizon = horizon;
  g.times.reserve(base_steps + 1 + jumps.size());
  g.jump_mark.reserve(base_steps + 1 + jumps.size());

  std::size_t next_jump = 0;
  for (std::size_t k = 0; k <= base_steps; ++k) {
    const double tb = (static_cast<double>(k) * horizon) / static_cast<double>(base_steps);
    // insert all jumps strictly before this base node
    while (next_jump < jumps.size() && jumps[next_jump].time < tb - merge_tol) {
      g.times.push_back(jumps[next_jump].time);
      g.jump_mark.push_back(jumps[next_jump].mark);
      ++next_jump;
    }
    // a jump coinciding with the base node flags the node itself
    int mark = -1;
    if (next_jump < jumps.size() && std::abs(jumps[next_jump].time - tb) <= merge_tol) {
      mark = jumps[next_jump].mark;
      ++next_jump;
    }
    g.times.push_back(tb);
    g.jump_mark.push_back(mark);
  }
  if (next_jump != jumps.size())
    throw std::invalid_argument("refine_grid: jump beyond horizon");
  return g;
}

NoisePath sample_noise(SeedSpec seed, const MarkSpace& marks, double horizon,
                       std::size_t base_steps) {
  marks.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("sample_noise: horizon must be positive and finite");

  PathRng rng(seed);
  NoisePath path;
  path.base_steps = base_steps;

  const double rate = marks.total_rate();
  if (rate > 0.0) {
    double t = 0.0;
    for (;;) {
      t += rng.exponential(rate);
      if (t > horizon) break;
      path.jumps.push_back({t, 0});
    }
    for (auto& ev : path.jumps) {
      // categorical draw proportional to weights
      double u = rng.uniform() * rate;
      int mark = 0;
      for (std::size_t e = 0; e < marks.size(); ++e) {
        if (u < marks.weights[e] || e + 1 == marks.size()) {
          mark = static_cast<int>(e);
          break;
        }
        u -= marks.weights[e];
      }
      ev.mark = mark;
    }
  }

  path.grid = refine_grid(horizon, base_steps, path.jumps);
  path.brownian.resize(path.grid.n_intervals());
  for (std::size_t i = 0; i < path.brownian.size(); ++i)
    path.brownian[i] = std::sqrt(path.grid.dt(i)) * rng.normal();
  return path;
}

NoisePath coarsen_noise(const NoisePath& fine, std::size_t factor) {
  if (factor == 0 || fine.base_steps % factor != 0)
    throw std::invalid_argument("coarsen_noise: factor must divide base_steps");
  const std::size_t coarse_steps = fine.base_steps / factor;

  NoisePath out;
  out.base_steps = coarse_steps;
  out.jumps = fine.jumps;
  out.grid = refine_grid(fine.grid.horizon, coarse_steps, fine.jumps);

  // Sum fine increments between consecutive coarse nodes. Every coarse node
  // is also a fine node (same base mesh family plus identical jump times).
  const double tol = 1e-9 * fine.grid.horizon / static_cast<double>(fine.base_steps);
  out.brownian.assign(out.grid.n_intervals(), 0.0);
  std::size_t j = 0;  // fine interval cursor
  for (std::size_t i = 0; i < out.grid.n_intervals(); ++i) {
    const double t_end = out.grid.times[i + 1];
    double acc = 0.0;
    while (j < fine.brownian.size() && fine.grid.times[j + 1] <= t_end + tol) {
      acc += fine.brownian[j];
      ++j;
    }
    out.brownian[i] = acc;
  }
  if (j != fine.brownian.size())
    throw std::runtime_error("coarsen_noise: grid alignment failure");
  return out;
}

std::vector<std::size_t> base_node_indices(const TimeGrid& grid,
                                           std::size_t base_steps) {
  if (base_steps == 0)
    throw std::invalid_argument("base_node_indices: base_steps must be positive");
  const double dt = grid.horizon / static_cast<double>(base_steps);
  const double tol = 1e-12 * std::max(1.0, grid.horizon);
  std::vector<std::size_t> out(base_steps + 1);
  std::size_t i = 0;
  for (std::size_t s = 0; s <= base_steps; ++s) {
    const double target = static_cast<double>(s) * dt;
    while (i < grid.times.size() && grid.times[i] < target - tol) ++i;
    if (i >= grid.times.size() || std::abs(grid.times[i] - target) > tol)
      throw std::invalid_argument("base_node_indices: grid lacks a base node");
    out[s] = i;
  }
  return out;
}

}  // namespace jumpctrl
