#include <doctest.h>

#include <cmath>
#include <memory>

#include "jumpctrl/adjoint.hpp"
#include "jumpctrl/benchmarks.hpp"
#include "jumpctrl/forward.hpp"

using namespace jumpctrl;

TEST_CASE("affine extraction recovers the coefficient structure") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const AffineModel m = extract_affine(bench.problem, bench.reference);
  CHECK(m.b1 == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(m.s1 == doctest::Approx(0.2).epsilon(1e-10));
  REQUIRE(m.c1.size() == 2);
  CHECK(m.c1[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(m.c1[1] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(m.f2 == doctest::Approx(0.21).epsilon(1e-10));
  CHECK(m.f1 == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(m.g2 == doctest::Approx(0.1391597684).epsilon(1e-9));
  // Closed loop folds u = -gain x into the drift slope.
  const double gain = lq_best_gain(LqParams{});
  CHECK(m.loop_b1 == doctest::Approx(-0.5 - gain).epsilon(1e-9));
  CHECK(m.loop_s1 == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(m.loop_c1[0] == doctest::Approx(0.25 - 0.35 * gain).epsilon(1e-9));
}

TEST_CASE("non-affine coefficients are refused by the closed form backend") {
  const BenchmarkInstance bench = make_benchmark("nlq_jump");
  CHECK_THROWS_AS(ClosedFormAdjoint(bench.problem, bench.reference, 64),
                  UnsupportedProblemError);
  const BenchmarkInstance bb = make_benchmark("bangbang");
  CHECK_THROWS_AS(ClosedFormAdjoint(bb.problem, bb.reference, 64),
                  UnsupportedProblemError);
}

TEST_CASE("quadratic-cost gain keeps the first adjoint slope stationary") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 256);
  const double target = 2.0 * 0.1391597684;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    CHECK(cf.alpha_at(t) == doctest::Approx(target).epsilon(1e-3));
    CHECK(std::abs(cf.beta_at(t)) <= 1e-10);
  }
}

TEST_CASE("second adjoint solves its scalar terminal value problem") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 256);
  // pi' = -rp pi - 2 qf with rp = 2 a + c^2 + rate gamma^2 = -0.7725
  const double rp = -0.7725;
  const double eq = 2.0 * 0.21 / 0.7725;
  const double piT = 2.0 * 0.1391597684;
  for (double t : {0.0, 0.4, 1.0}) {
    const double want = eq + (piT - eq) * std::exp(-rp * (t - 1.0));
    CHECK(cf.pi_at(t) == doctest::Approx(want).epsilon(1e-6));
  }
  const AdjointEval at = cf.eval(0.5, 2.0);
  CHECK(at.P == doctest::Approx(cf.pi_at(0.5)).epsilon(1e-12));
  CHECK(at.Q == 0.0);
  REQUIRE(at.n_marks == 2);
  CHECK(at.K[0] == 0.0);
}

TEST_CASE("state-independent problem has the textbook first adjoint") {
  const BenchmarkInstance bench = make_benchmark("deterministic_adjoint");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 128);
  // p_t = g_slope + f_slope (T - t), no x dependence, everything else zero.
  for (double t : {0.0, 0.3, 0.6, 1.0}) {
    const AdjointEval a = cf.eval(t, -1.7);
    CHECK(a.p == doctest::Approx(0.7 + (1.0 - t)).epsilon(1e-9));
    CHECK(std::abs(a.q) <= 1e-12);
    CHECK(std::abs(a.P) <= 1e-12);
    CHECK(std::abs(a.k[0]) <= 1e-12);
  }
}

TEST_CASE("terminal evaluation reads the terminal cost derivatives") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 64);
  const AdjointEval a = cf.eval(1.0, 1.3);
  CHECK(a.p == doctest::Approx(bench.problem.terminal_cost_x(1.3)).epsilon(1e-9));
  CHECK(a.P ==
        doctest::Approx(bench.problem.terminal_cost_xx(1.3)).epsilon(1e-9));
}

TEST_CASE("regression backend reproduces a deterministic adjoint") {
  const BenchmarkInstance bench = make_benchmark("deterministic_adjoint");
  const BaseMeshEnsemble ens =
      collect_base_mesh(bench.problem, bench.reference, 2000, 32, 314, 1);
  const RegressionAdjoint reg(bench.problem, ens, RegressionSpec{});
  for (double t : {0.0, 0.25, 0.5, 0.75}) {
    for (double x : {0.2, 0.5, 0.9}) {
      const AdjointEval a = reg.eval(t, x);
      CHECK(a.p == doctest::Approx(0.7 + (1.0 - t)).epsilon(1e-5));
    }
  }
  const AdjointEval at = reg.eval(1.0, 0.4);
  CHECK(at.p == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("regression backend tracks the closed form on the affine instance") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 32);
  const BaseMeshEnsemble ens =
      collect_base_mesh(bench.problem, bench.reference, 6000, 32, 2718, 1);
  const RegressionAdjoint reg(bench.problem, ens, RegressionSpec{});
  for (double t : {0.25, 0.5, 0.75}) {
    for (double x : {0.6, 1.0, 1.4}) {
      const AdjointEval a = cf.eval(t, x);
      const AdjointEval b = reg.eval(t, x);
      CHECK(b.p == doctest::Approx(a.p).epsilon(0.08));
      CHECK(b.P == doctest::Approx(a.P).epsilon(0.25));
    }
  }
}

TEST_CASE("ensemble collection lines up with the forward solver") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const BaseMeshEnsemble ens =
      collect_base_mesh(bench.problem, bench.reference, 3, 16, 99, 1);
  CHECK(ens.base_steps == 16);
  CHECK(ens.n_paths == 3);
  CHECK(ens.n_marks == 2);
  for (std::size_t path = 0; path < 3; ++path) {
    const NoisePath noise =
        sample_noise({99, path}, bench.problem.marks, 1.0, 16);
    const FeedbackSolve fs =
        solve_with_feedback(bench.problem, bench.reference, noise);
    const auto idx = base_node_indices(noise.grid, 16);
    for (std::size_t s = 0; s <= 16; ++s)
      CHECK(ens.state(s, path) == fs.state.values[idx[s]]);
    std::size_t total_jumps = 0;
    for (std::size_t s = 0; s < 16; ++s)
      for (std::size_t e = 0; e < 2; ++e)
        total_jumps += ens.n_jumps[(s * 2 + e) * 3 + path];
    CHECK(total_jumps == noise.jumps.size());
  }
}

TEST_CASE("adjoint path norms are finite and positive") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 64);
  const NoisePath noise = sample_noise({5, 0}, bench.problem.marks, 1.0, 64);
  const FeedbackSolve fs =
      solve_with_feedback(bench.problem, bench.reference, noise);
  const AdjointNorms norms = adjoint_norms(cf, bench.problem, fs.state, noise.grid);
  CHECK(norms.sup_p_sq > 0.0);
  CHECK(norms.int_q_sq > 0.0);
  CHECK(norms.int_k_sq > 0.0);
  CHECK(std::isfinite(norms.sup_p_sq + norms.int_q_sq + norms.int_k_sq));
}

TEST_CASE("duality gap vanishes exactly without a perturbation") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 64);
  SpikeSpec spike = bench.default_spike;
  spike.epsilon = 0.0;  // empty window: u_eps == u, both pairings are 0 = 0
  const DualityReport rep = duality_check(DualityIdentity::px, bench.problem,
                                          bench.reference, spike, cf, 50, 64, 7, 1);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.rhs == 0.0);
  CHECK(rep.diff == 0.0);
}

TEST_CASE("first pairing identity holds on the affine instance") {
  const BenchmarkInstance bench = make_benchmark("lq_jump");
  const ClosedFormAdjoint cf(bench.problem, bench.reference, 64);
  const DualityReport rep =
      duality_check(DualityIdentity::px, bench.problem, bench.reference,
                    bench.default_spike, cf, 4000, 64, 11, 1);
  CHECK(std::abs(rep.diff) <= 3.0 * rep.diff_se + 0.5 * rep.dt);
}
