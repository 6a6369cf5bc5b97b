#include "jumpctrl/calculus.hpp"

#include <cmath>
#include <stdexcept>

namespace jumpctrl {

MarkedIntegrand MarkedIntegrand::from_function(
    const TimeGrid& grid, std::size_t n_marks,
    const std::function<double(double t, std::size_t mark)>& f) {
  MarkedIntegrand h;
  h.n_marks = n_marks;
  h.values.resize(grid.n_points() * n_marks);
  for (std::size_t i = 0; i < grid.n_points(); ++i)
    for (std::size_t e = 0; e < n_marks; ++e) h.at(i, e) = f(grid.times[i], e);
  return h;
}

namespace {

void check_grid_size(std::size_t values, std::size_t points, const char* who) {
  if (values != points)
    throw std::invalid_argument(std::string(who) + ": integrand size does not match grid");
}

}  // namespace

IntegralPath ito_integral(const GridIntegrand& h, const NoisePath& noise) {
  check_grid_size(h.values.size(), noise.grid.n_points(), "ito_integral");
  IntegralPath out;
  out.values.resize(noise.grid.n_points());
  out.values[0] = 0.0;
  for (std::size_t i = 0; i < noise.grid.n_intervals(); ++i)
    out.values[i + 1] = out.values[i] + h.values[i] * noise.brownian[i];
  return out;
}

IntegralPath jump_integral_n(const MarkedIntegrand& h, const NoisePath& noise) {
  check_grid_size(h.values.size(), noise.grid.n_points() * h.n_marks,
                  "jump_integral_n");
  IntegralPath out;
  out.values.resize(noise.grid.n_points());
  out.values[0] = 0.0;
  for (std::size_t i = 1; i < noise.grid.n_points(); ++i) {
    double add = 0.0;
    const int mark = noise.grid.jump_mark[i];
    if (mark >= 0) add = h.at(i, static_cast<std::size_t>(mark));
    out.values[i] = out.values[i - 1] + add;
  }
  return out;
}

IntegralPath compensator(const MarkedIntegrand& h_pred, const MarkSpace& marks,
                         const TimeGrid& grid) {
  if (h_pred.n_marks != marks.size())
    throw std::invalid_argument("compensator: mark count mismatch");
  check_grid_size(h_pred.values.size(), grid.n_points() * h_pred.n_marks,
                  "compensator");
  IntegralPath out;
  out.values.resize(grid.n_points());
  out.values[0] = 0.0;
  for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
    double rate_weighted = 0.0;
    for (std::size_t e = 0; e < marks.size(); ++e)
      rate_weighted += h_pred.at(i, e) * marks.weights[e];
    out.values[i + 1] = out.values[i] + rate_weighted * grid.dt(i);
  }
  return out;
}

IntegralPath compensated_jump_integral(const MarkedIntegrand& h,
                                       const MarkedIntegrand& h_pred,
                                       const NoisePath& noise,
                                       const MarkSpace& marks) {
  if (h.n_marks != h_pred.n_marks)
    throw std::invalid_argument("compensated_jump_integral: mark count mismatch");
  // The predictable version is only constrained on the jump graph itself.
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
    const int mark = noise.grid.jump_mark[i];
    if (mark < 0) continue;
    const auto e = static_cast<std::size_t>(mark);
    if (h.at(i, e) != h_pred.at(i, e))
      throw std::invalid_argument(
          "compensated_jump_integral: h and h_pred disagree at a realized jump");
  }
  const IntegralPath n_part = jump_integral_n(h, noise);
  const IntegralPath drift = compensator(h_pred, marks, noise.grid);
  IntegralPath out;
  out.values.resize(n_part.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = n_part.values[i] - drift.values[i];
  return out;
}

double jump_of_integral(const MarkedIntegrand& h, const NoisePath& noise, double t) {
  const double tol = 1e-12 * noise.grid.horizon;
  for (std::size_t i = 0; i < noise.grid.n_points(); ++i) {
    if (std::abs(noise.grid.times[i] - t) <= tol) {
      const int mark = noise.grid.jump_mark[i];
      return mark >= 0 ? h.at(i, static_cast<std::size_t>(mark)) : 0.0;
    }
  }
  return 0.0;
}

IntegralPath bracket_of_jump_integral(const MarkedIntegrand& h, const NoisePath& noise) {
  IntegralPath out;
  out.values.resize(noise.grid.n_points());
  out.values[0] = 0.0;
  for (std::size_t i = 1; i < noise.grid.n_points(); ++i) {
    double add = 0.0;
    const int mark = noise.grid.jump_mark[i];
    if (mark >= 0) {
      const double v = h.at(i, static_cast<std::size_t>(mark));
      add = v * v;
    }
    out.values[i] = out.values[i - 1] + add;
  }
  return out;
}

}  // namespace jumpctrl
