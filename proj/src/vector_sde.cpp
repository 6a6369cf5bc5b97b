#include "jumpctrl/vector_sde.hpp"

#include <cmath>
#include <stdexcept>

#include "jumpctrl/stats.hpp"

namespace jumpctrl {

namespace {

double norm2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void check_sde(const VectorSde& sde) {
  if (sde.dim == 0 || sde.n_brownian == 0 || sde.x0.size() != sde.dim)
    throw std::invalid_argument("VectorSde: inconsistent dimensions");
}

// Shared Euler sweep: coefficients evaluated along `frozen` when given (one
// solution-map application), along the path being built otherwise.
VectorPath euler_sweep(const VectorSde& sde, const MultiNoise& noise,
                       const VectorPath* frozen) {
  const TimeGrid& grid = noise.grid;
  VectorPath path;
  path.values.assign(grid.n_points(), Vec(sde.dim, 0.0));
  path.left.assign(grid.n_points(), Vec(sde.dim, 0.0));
  path.values[0] = path.left[0] = sde.x0;

  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    const double t = grid.times[i];
    const Vec& x_eval = frozen ? frozen->values[i] : path.values[i];
    const Vec b = sde.drift(t, x_eval);
    const auto sig = sde.diffusion(t, x_eval);
    Vec comp(sde.dim, 0.0);
    for (std::size_t e = 0; e < sde.marks.size(); ++e) {
      const Vec c = sde.jump(t, x_eval, e);
      for (std::size_t d = 0; d < sde.dim; ++d)
        comp[d] += c[d] * sde.marks.weights[e];
    }
    Vec next = path.values[i];
    for (std::size_t d = 0; d < sde.dim; ++d) {
      next[d] += (b[d] - comp[d]) * grid.dt(i);
      for (std::size_t w = 0; w < sde.n_brownian; ++w)
        next[d] += sig[d][w] * noise.brownian[i][w];
      if (!std::isfinite(next[d]) || std::abs(next[d]) > 1e12)
        throw std::runtime_error("vector state diverged");
    }
    path.left[i + 1] = next;
    const int mark = grid.jump_mark[i + 1];
    if (mark >= 0) {
      const Vec& x_jump = frozen ? frozen->left[i + 1] : next;
      const Vec c = sde.jump(grid.times[i + 1], x_jump, static_cast<std::size_t>(mark));
      for (std::size_t d = 0; d < sde.dim; ++d) next[d] += c[d];
    }
    path.values[i + 1] = next;
  }
  return path;
}

}  // namespace

MultiNoise sample_multi_noise(SeedSpec seed, const MarkSpace& marks, double horizon,
                              std::size_t base_steps, std::size_t n_brownian) {
  // Reuse the scalar sampler for jump times and the grid, then draw the
  // remaining Brownian components with the same stream.
  NoisePath scalar = sample_noise(seed, marks, horizon, base_steps);
  PathRng rng(seed);
  // Replay the scalar draw order: gaps and marks first, then increments.
  std::size_t n_events = scalar.jumps.size();
  for (std::size_t i = 0; i < n_events + 1; ++i) rng.exponential(1.0);
  for (std::size_t i = 0; i < n_events; ++i) rng.uniform();

  MultiNoise noise;
  noise.grid = scalar.grid;
  noise.n_brownian = n_brownian;
  noise.brownian.assign(noise.grid.n_intervals(), Vec(n_brownian, 0.0));
  for (std::size_t i = 0; i < noise.grid.n_intervals(); ++i) {
    const double sd = std::sqrt(noise.grid.dt(i));
    for (std::size_t w = 0; w < n_brownian; ++w)
      noise.brownian[i][w] = sd * rng.normal();
  }
  return noise;
}

VectorPath solve_vector(const VectorSde& sde, const MultiNoise& noise) {
  check_sde(sde);
  return euler_sweep(sde, noise, nullptr);
}

std::vector<double> picard_distances_vector(const VectorSde& sde,
                                            const MultiNoise& noise,
                                            std::size_t n_iters) {
  check_sde(sde);
  if (n_iters < 1)
    throw std::invalid_argument("picard_distances_vector: need n_iters >= 1");
  VectorPath prev;
  prev.values.assign(noise.grid.n_points(), sde.x0);
  prev.left.assign(noise.grid.n_points(), sde.x0);
  std::vector<double> distances;
  for (std::size_t k = 0; k < n_iters; ++k) {
    VectorPath next = euler_sweep(sde, noise, &prev);
    double dist = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
      dist = std::max(dist, norm2(next.values[i], prev.values[i]));
    distances.push_back(dist);
    prev = std::move(next);
  }
  return distances;
}

VectorLpReport lp_estimate_check_vector(const VectorSde& s1, const VectorSde& s2,
                                        unsigned p_moment, std::size_t n_paths,
                                        std::size_t base_steps, std::uint64_t seed) {
  check_sde(s1);
  check_sde(s2);
  if (p_moment < 2 || p_moment % 2 != 0)
    throw std::invalid_argument("lp_estimate_check_vector: p must be even >= 2");
  if (s1.marks.weights != s2.marks.weights)
    throw std::invalid_argument("lp_estimate_check_vector: mark rates differ");
  if (s1.dim != s2.dim || s1.n_brownian != s2.n_brownian ||
      s1.horizon != s2.horizon)
    throw std::invalid_argument("lp_estimate_check_vector: shapes differ");

  const double p = static_cast<double>(p_moment);
  std::vector<double> lhs(n_paths), rhs(n_paths);
  double dx0 = 0.0;
  for (std::size_t d = 0; d < s1.dim; ++d)
    dx0 += (s1.x0[d] - s2.x0[d]) * (s1.x0[d] - s2.x0[d]);
  dx0 = std::pow(std::sqrt(dx0), p);

  for (std::size_t path = 0; path < n_paths; ++path) {
    const MultiNoise noise = sample_multi_noise({seed, path}, s1.marks, s1.horizon,
                                                base_steps, s1.n_brownian);
    const VectorPath x1 = solve_vector(s1, noise);
    const VectorPath x2 = solve_vector(s2, noise);

    double sup = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_points(); ++i)
      sup = std::max(sup, norm2(x1.values[i], x2.values[i]));
    lhs[path] = std::pow(sup, p);

    double db_int = 0.0, ds_int = 0.0, dc_sum = 0.0;
    for (std::size_t i = 0; i < noise.grid.n_intervals(); ++i) {
      const double t = noise.grid.times[i];
      const Vec b1 = s1.drift(t, x1.values[i]), b2 = s2.drift(t, x1.values[i]);
      db_int += norm2(b1, b2) * noise.grid.dt(i);
      const auto g1 = s1.diffusion(t, x1.values[i]);
      const auto g2 = s2.diffusion(t, x1.values[i]);
      double frob = 0.0;
      for (std::size_t d = 0; d < s1.dim; ++d)
        for (std::size_t w = 0; w < s1.n_brownian; ++w)
          frob += (g1[d][w] - g2[d][w]) * (g1[d][w] - g2[d][w]);
      ds_int += frob * noise.grid.dt(i);
    }
    for (std::size_t i = 1; i < noise.grid.n_points(); ++i) {
      const int mark = noise.grid.jump_mark[i];
      if (mark < 0) continue;
      const Vec c1 = s1.jump(noise.grid.times[i], x1.left[i],
                             static_cast<std::size_t>(mark));
      const Vec c2 = s2.jump(noise.grid.times[i], x1.left[i],
                             static_cast<std::size_t>(mark));
      const double d = norm2(c1, c2);
      dc_sum += d * d;
    }
    rhs[path] = dx0 + std::pow(db_int, p) + std::pow(ds_int, p / 2.0) +
                std::pow(dc_sum, p / 2.0);
  }

  VectorLpReport rep;
  rep.lhs = mean_se(lhs).mean;
  rep.rhs = mean_se(rhs).mean;
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

}  // namespace jumpctrl
