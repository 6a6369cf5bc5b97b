#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "jumpctrl/jump_driver.hpp"

namespace jumpctrl {

// Sampled integrand for dB integrals: one value per grid point. The value at
// t_i multiplies the increment over (t_i, t_{i+1}], i.e. left-endpoint
// evaluation; storing only information available at t_i is what encodes
// predictability on the grid.
struct GridIntegrand {
  std::vector<double> values;
};

// Sampled integrand on grid x marks, row-major [point * n_marks + mark].
struct MarkedIntegrand {
  std::size_t n_marks = 0;
  std::vector<double> values;

  double at(std::size_t point, std::size_t mark) const {
    return values[point * n_marks + mark];
  }
  double& at(std::size_t point, std::size_t mark) {
    return values[point * n_marks + mark];
  }

  static MarkedIntegrand from_function(
      const TimeGrid& grid, std::size_t n_marks,
      const std::function<double(double t, std::size_t mark)>& f);
};

// Cadlag path of an integral sampled at the grid points; values[0] = 0.
struct IntegralPath {
  std::vector<double> values;
};

// Left-endpoint Ito sum: value at t_k is sum_{i<k} H(t_i) * dB_i.
IntegralPath ito_integral(const GridIntegrand& h, const NoisePath& noise);

// Integral against the raw jump measure N: at t_k, the sum of H(T_n, e_n)
// over jumps with T_n <= t_k. Charges only the realized jump graph.
IntegralPath jump_integral_n(const MarkedIntegrand& h, const NoisePath& noise);

// Compensator path of a predictable integrand: sum_{i<k} sum_e
// h_pred(t_i, e) * weight_e * dt_i (left-endpoint in time, all marks).
IntegralPath compensator(const MarkedIntegrand& h_pred, const MarkSpace& marks,
                         const TimeGrid& grid);

// Integral against the compensated measure: N-part of h minus the
// compensator of h_pred. h_pred is the caller-supplied predictable version;
// it must agree with h at every realized jump (node, mark), because the
// projection is pinned exactly on the jump graph. Off the graph h_pred is
// free, and it alone determines the drift part.
IntegralPath compensated_jump_integral(const MarkedIntegrand& h,
                                       const MarkedIntegrand& h_pred,
                                       const NoisePath& noise,
                                       const MarkSpace& marks);

// Jump of the compensated integral at time t: H(t, e) if the grid carries a
// jump with mark e at t, else 0. The drift part never contributes a jump.
double jump_of_integral(const MarkedIntegrand& h, const NoisePath& noise, double t);

// Quadratic covariation of the compensated integral with itself: at t_k, the
// sum of H(T_n, e_n)^2 over jumps with T_n <= t_k.
IntegralPath bracket_of_jump_integral(const MarkedIntegrand& h, const NoisePath& noise);

}  // namespace jumpctrl
