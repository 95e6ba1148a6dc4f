#include "doctest.h"

#include <chrono>

#include "starsec/channel.hpp"
#include "starsec/fullcsi.hpp"
#include "starsec/rng.hpp"
#include "starsec/sca.hpp"

using namespace starsec;
using namespace starsec::fullcsi;

namespace {

BeamformingTask desk_task(int n, int m, std::uint64_t seed, DecodingOrder order,
                          double p_dbm = 15.0, bool zero_eve = false) {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = n;
  radio.num_bs_antennas = m;
  ChannelSet cs = sample_channels(geom, radio, seed);
  const double p = dbm_to_watt(p_dbm);
  return BeamformingTask::from_channels(cs, ElementLayout::full(n), UserMode::Both, order, p, p,
                                        radio.noise_power_watt, zero_eve);
}

}  // namespace

TEST_CASE("problem builder accounting matches the documented structure") {
  BeamformingTask task = desk_task(4, 2, 7, DecodingOrder{true});
  sca::BeamformingIterate local = make_initial_iterate(task, 3);
  LiftedProblem lp = build_problem24(task, local, 0.0, 1e-3);

  // Two lifted coefficient matrices of complex side N and the combiner of
  // side M: 2N^2 + M^2 real degrees of freedom in complex terms.
  const int n = 4, m = 2;
  const int matrix_dof = 2 * (2 * n * n + n) + (2 * m * m + m);
  CHECK(lp.w_side == 2 * m);
  CHECK(lp.ut_side == 2 * n);
  CHECK(lp.ur_side == 2 * n);
  const int matrix_vars = conic::svec_dim(2 * m) + 2 * conic::svec_dim(2 * n);
  CHECK(matrix_vars == matrix_dof);

  // Slack variables before epigraph auxiliaries: four bilinear bounds, the
  // strong-user SINR slack, two rank penalties, one ratio gap.
  CHECK(lp.core_scalars == 8);

  // One quadratic epigraph per polarization bound (four) plus the two
  // scalar squares of the product upper bound.
  CHECK(lp.soc_blocks == 6);
}

TEST_CASE("builder rejects infeasible local points and bad parameters") {
  BeamformingTask task = desk_task(3, 2, 8, DecodingOrder{true});
  sca::BeamformingIterate local = make_initial_iterate(task, 3);
  CHECK_THROWS_AS(build_problem24(task, local, -0.1, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(build_problem24(task, local, 0.0, 0.0), std::invalid_argument);
  local.local_coeff_t = 2.0 * CMat::Identity(3, 3);
  CHECK_THROWS_AS(build_problem24(task, local, 0.0, 1e-3), std::invalid_argument);
}

TEST_CASE("mu = 0 subproblem is feasible and solvable") {
  BeamformingTask task = desk_task(4, 2, 11, DecodingOrder{true});
  sca::BeamformingIterate local = make_initial_iterate(task, 5);
  LiftedProblem lp = build_problem24(task, local, 0.0, 1e-3);
  auto sol = conic::solve(lp.program);
  CHECK(sol.status == conic::SolveStatus::Optimal);
  // With mu = 0 the ratio rows cannot bind below xi = 1 + slack >= 1.
  CHECK(sol.x(lp.gap) >= 1.0 - 1e-6);
}

TEST_CASE("dinkelbach ratio update matches independent evaluation") {
  BeamformingTask task = desk_task(4, 2, 13, DecodingOrder{true});
  sca::BeamformingIterate it = make_initial_iterate(task, 5);
  it.strong_sinr_lb = 1.7;
  it.sig_lb_ou = 0.9;
  it.sig_lb_iu = 2.4;

  const double scale_i = task.p_iu / task.noise;
  const double scale_o = task.p_ou / task.noise;
  const double ge_iu =
      scale_i * (task.q_eve_iu.adjoint() * it.coeff_gram_t * task.q_eve_iu)(0).real();
  const double ge_ou =
      scale_o * (task.q_eve_ou.adjoint() * it.coeff_gram_r * task.q_eve_ou)(0).real();
  const double expect = std::min((1.0 + 1.7) / (1.0 + ge_iu), (1.0 + 0.9) / (1.0 + ge_ou));
  CHECK(dinkelbach_mu(task, it) == doctest::Approx(expect).epsilon(1e-9));

  // Both ratios equal: the update returns that common value.
  BeamformingTask quiet = desk_task(4, 2, 13, DecodingOrder{true}, 15.0, true);
  sca::BeamformingIterate it2 = make_initial_iterate(quiet, 5);
  it2.strong_sinr_lb = 1.0;
  it2.sig_lb_ou = 1.0;
  CHECK(dinkelbach_mu(quiet, it2) == doctest::Approx(2.0));
  it2.sig_lb_ou = 0.0;
  CHECK(dinkelbach_mu(quiet, it2) == doctest::Approx(1.0));
}

TEST_CASE("two-layer solve improves on the random start and keeps feasibility") {
  Tolerances tol;
  tol.max_inner = 12;
  BeamformingTask task = desk_task(4, 2, 21, DecodingOrder{true}, 15.0, true);
  auto t0 = std::chrono::steady_clock::now();
  TwoLayerResult res = two_layer_solve(task, tol, 1);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("two_layer_solve took ", dt, " s over ", res.inner_iterations, " inner iterations");

  sca::BeamformingIterate start = make_initial_iterate(task, 1);
  const double r_start = min_secrecy_capacity(task, start, task.p_iu, task.p_ou);
  const double r_end = min_secrecy_capacity(task, res.iterate, task.p_iu, task.p_ou);
  CHECK(r_end >= r_start - 1e-6);

  CHECK(res.iterate.combiner_gram.trace().real() == doctest::Approx(1.0).epsilon(1e-6));
  for (int i = 0; i < 4; ++i) {
    CHECK(res.iterate.coeff_gram_t(i, i).real() + res.iterate.coeff_gram_r(i, i).real() <=
          1.0 + 1e-6);
  }
  CHECK(sca::rank_one_extract(res.iterate.coeff_gram_t).ratio >= 0.999);
  CHECK(sca::rank_one_extract(res.iterate.combiner_gram).ratio >= 0.999);
  CHECK_FALSE(res.iterate.degraded);

  // Exact decoding-order inequality at the solution (matrix form).
  const double t_iu = (task.q_iu.adjoint() * res.iterate.combiner_gram * task.q_iu *
                       res.iterate.coeff_gram_t)
                          .trace()
                          .real();
  const double t_ou = (task.q_ou.adjoint() * res.iterate.combiner_gram * task.q_ou *
                       res.iterate.coeff_gram_r)
                          .trace()
                          .real();
  CHECK(task.p_ou * t_ou <= task.p_iu * t_iu * (1.0 + 1e-6));
}

TEST_CASE("inner Dinkelbach gap trace settles monotonically") {
  Tolerances tol;
  BeamformingTask task = desk_task(4, 2, 33, DecodingOrder{true});
  TwoLayerResult res = two_layer_solve(task, tol, 1);
  REQUIRE(res.gap_trace.size() >= 2);
  // Within the first penalty round the gap decreases after the ratio starts
  // updating; allow solver tolerance noise.
  for (std::size_t i = 2; i < res.gap_trace.size(); ++i) {
    if (res.gap_trace[i] > res.gap_trace[i - 1] + 5e-3) break;  // next penalty round
    CHECK(res.gap_trace[i] <= res.gap_trace[i - 1] + 5e-3);
  }
}

TEST_CASE("optimal_power_full: closed form against the exhaustive grid") {
  Rng rng(99);
  const double noise = 1.0;
  for (int trial = 0; trial < 25; ++trial) {
    const double z_iu = rng.uniform(0.5, 8.0);
    const double z_ou = rng.uniform(0.5, 8.0);
    const double ze_iu = rng.uniform(0.0, 2.5);
    const double ze_ou = rng.uniform(0.0, 2.5);
    const double cap_iu = rng.uniform(0.5, 4.0);
    const double cap_ou = rng.uniform(0.5, 4.0);
    DecodingOrder order{trial % 2 == 0};

    PowerPair p = optimal_power_full(z_iu, z_ou, ze_iu, ze_ou, noise, cap_iu, cap_ou, order);
    CHECK(p.p_iu <= cap_iu * (1 + 1e-9));
    CHECK(p.p_ou <= cap_ou * (1 + 1e-9));
    if (order.iu_first)
      CHECK(p.p_ou * z_ou <= p.p_iu * z_iu * (1 + 1e-9));
    else
      CHECK(p.p_iu * z_iu <= p.p_ou * z_ou * (1 + 1e-9));

    auto objective = [&](double pi, double po) {
      const double gi = order.iu_first ? pi * z_iu / (po * z_ou + 1.0) : pi * z_iu;
      const double go = order.iu_first ? po * z_ou : po * z_ou / (pi * z_iu + 1.0);
      const double ri = std::log2((1 + gi) / (1 + pi * ze_iu));
      const double ro = std::log2((1 + go) / (1 + po * ze_ou));
      return std::max(0.0, std::min(ri, ro));
    };
    const double closed = objective(p.p_iu, p.p_ou);
    double best = 0.0;
    const int gridn = 400;
    for (int a = 0; a <= gridn; ++a)
      for (int b = 0; b <= gridn; ++b) {
        const double pi = cap_iu * a / gridn;
        const double po = cap_ou * b / gridn;
        if (order.iu_first && po * z_ou > pi * z_iu) continue;
        if (!order.iu_first && pi * z_iu > po * z_ou) continue;
        best = std::max(best, objective(pi, po));
      }
    CHECK(closed >= best - 1e-3);
  }
  CHECK_THROWS_AS(optimal_power_full(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, DecodingOrder{true}),
                  std::domain_error);
}

TEST_CASE("first-decoded user transmits at its cap") {
  PowerPair p = optimal_power_full(2.0, 1.0, 0.3, 0.2, 1.0, 1.5, 2.5, DecodingOrder{true});
  CHECK(p.p_iu == doctest::Approx(1.5));
  PowerPair q = optimal_power_full(2.0, 1.0, 0.3, 0.2, 1.0, 1.5, 2.5, DecodingOrder{false});
  CHECK(q.p_ou == doctest::Approx(2.5));
}

TEST_CASE("no-crossing case saturates the second user's cap") {
  // Zero eavesdropper gains: both ratios grow with power, no crossing below
  // the cap as long as the order constraint allows it.
  PowerPair p = optimal_power_full(5.0, 1.0, 0.0, 0.0, 1.0, 2.0, 1.0, DecodingOrder{true});
  CHECK(p.p_ou == doctest::Approx(1.0));
}

TEST_CASE("ahb_solve_order: trace nondecreasing, caps and order respected") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  Tolerances tol;
  ChannelSet cs = sample_channels(geom, radio, 5150);

  FullCsiOutcome out = ahb_solve_order(cs, radio, tol, DecodingOrder{true});
  REQUIRE(out.objective_trace.size() >= 1);
  for (std::size_t i = 1; i < out.objective_trace.size(); ++i)
    CHECK(out.objective_trace[i] >= out.objective_trace[i - 1] - 1e-6);
  CHECK(out.p_iu <= radio.p_max_iu_watt * (1 + 1e-9));
  CHECK(out.p_ou <= radio.p_max_ou_watt * (1 + 1e-9));
  CHECK(out.objective >= 0.0);
  CHECK(out.w.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_NOTHROW(out.coeffs.validate());

  CVec ut = out.coeffs.transmit_vector();
  CVec ur = out.coeffs.reflect_vector();
  CascadedForms f = cascaded_forms(cs);
  const double sig_iu = out.p_iu * std::norm((out.w.adjoint() * f.q_iu * ut)(0));
  const double sig_ou = out.p_ou * std::norm((out.w.adjoint() * f.q_ou * ur)(0));
  CHECK(sig_ou <= sig_iu * (1 + 1e-6));
}

TEST_CASE("ahb objective grows with the power budget") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  Tolerances tol;
  ChannelSet cs = sample_channels(geom, radio, 7777);

  AhbOptions opt;
  opt.zero_eavesdropper = true;
  FullCsiOutcome hi = ahb_solve(cs, radio, tol, opt);

  RadioConfig lo_radio = radio;
  lo_radio.p_max_iu_watt = dbm_to_watt(5.0);
  lo_radio.p_max_ou_watt = dbm_to_watt(5.0);
  FullCsiOutcome lo = ahb_solve(cs, lo_radio, tol, opt);
  CHECK(hi.objective >= lo.objective - 1e-3);
}
