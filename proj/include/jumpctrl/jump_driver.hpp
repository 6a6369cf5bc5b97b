#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jumpctrl/rng.hpp"

namespace jumpctrl {

// Finite mark alphabet with per-mark jump intensities. The driving process is
// a finite-activity Poisson random measure: total event rate is the sum of
// the weights, marks are drawn proportionally to them.
struct MarkSpace {
  std::vector<std::string> labels;
  std::vector<double> weights;

  std::size_t size() const { return labels.size(); }
  double total_rate() const;
  void validate() const;  // throws std::invalid_argument on bad data

  // n equally weighted marks with the given total rate.
  static MarkSpace uniform(std::size_t n, double total_rate);
};

// Time discretization of [0, horizon]: a uniform base mesh with jump times
// inserted exactly as extra nodes. jump_mark[i] is the mark index of the jump
// at times[i], or -1 when the node carries no jump. A node carries at most
// one jump.
struct TimeGrid {
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<int> jump_mark;

  std::size_t n_points() const { return times.size(); }
  std::size_t n_intervals() const { return times.empty() ? 0 : times.size() - 1; }
  double dt(std::size_t i) const { return times[i + 1] - times[i]; }
  bool is_jump(std::size_t i) const { return jump_mark[i] >= 0; }
};

struct JumpEvent {
  double time = 0.0;
  int mark = -1;
};

// One realization of the driving noise. brownian holds one increment per
// grid interval; jumps lists the events in time order and matches the grid's
// jump flags node for node.
struct NoisePath {
  TimeGrid grid;
  std::size_t base_steps = 0;
  std::vector<double> brownian;  // size = grid.n_intervals()
  std::vector<JumpEvent> jumps;
};

// Merge the uniform base mesh {k * horizon / base_steps} with the given jump
// times. Jump times must be strictly increasing, inside (0, horizon], and
// pairwise distinct; a jump landing on a base node (within 1e-12 * horizon)
// flags that node instead of inserting a new one.
TimeGrid refine_grid(double horizon, std::size_t base_steps,
                     const std::vector<JumpEvent>& jumps);

// Draw jump times (exponential gaps at the total rate), marks (categorical by
// weight), and Brownian increments on the refined grid. The draw order is
// fixed (gaps, then one mark per event, then increments), so a (master_seed,
// path_index) pair always yields the same path.
NoisePath sample_noise(SeedSpec seed, const MarkSpace& marks, double horizon,
                       std::size_t base_steps);

// Restrict a path to a coarser base mesh (factor divides base_steps): same
// jump events, Brownian increments summed between surviving nodes. Used for
// strong-convergence checks with coupled resolutions.
NoisePath coarsen_noise(const NoisePath& fine, std::size_t factor);

// Indices into grid.times of the base mesh nodes {k * horizon / base_steps},
// in order; size base_steps + 1. Throws when a base node is missing from the
// grid (the grid was not refined from this base mesh).
std::vector<std::size_t> base_node_indices(const TimeGrid& grid,
                                           std::size_t base_steps);

}  // namespace jumpctrl
