#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "jumpctrl/jump_driver.hpp"
#include "jumpctrl/rng.hpp"

namespace jumpctrl {

using Vec = std::vector<double>;

// n-dimensional uncontrolled SDE with d-dimensional Brownian motion, used by
// the existence and Lp-estimate harnesses; the controlled scalar solver is
// the main code path.
struct VectorSde {
  std::size_t dim = 1;
  std::size_t n_brownian = 1;
  double horizon = 1.0;
  Vec x0;
  MarkSpace marks;
  std::function<Vec(double t, const Vec& x)> drift;
  // row i holds the n_brownian loadings of component i
  std::function<std::vector<Vec>(double t, const Vec& x)> diffusion;
  std::function<Vec(double t, const Vec& x, std::size_t mark)> jump;
};

struct MultiNoise {
  TimeGrid grid;
  std::size_t n_brownian = 1;
  std::vector<Vec> brownian;  // per interval
};

MultiNoise sample_multi_noise(SeedSpec seed, const MarkSpace& marks, double horizon,
                              std::size_t base_steps, std::size_t n_brownian);

struct VectorPath {
  std::vector<Vec> values;
  std::vector<Vec> left;
};

VectorPath solve_vector(const VectorSde& sde, const MultiNoise& noise);

// Sup over the grid of the euclidean gap between consecutive solution-map
// iterates, starting from the constant x0 path.
std::vector<double> picard_distances_vector(const VectorSde& sde,
                                            const MultiNoise& noise,
                                            std::size_t n_iters);

struct VectorLpReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

VectorLpReport lp_estimate_check_vector(const VectorSde& s1, const VectorSde& s2,
                                        unsigned p_moment, std::size_t n_paths,
                                        std::size_t base_steps, std::uint64_t seed);

}  // namespace jumpctrl
