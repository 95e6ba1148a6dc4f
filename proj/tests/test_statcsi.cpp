#include "doctest.h"

#include "starsec/channel.hpp"
#include "starsec/rng.hpp"
#include "starsec/statcsi.hpp"

using namespace starsec;
using namespace starsec::statcsi;

TEST_CASE("sop closed form: limits and hand value") {
  SopParams p;
  p.effective_gain = 1.0;
  p.large_scale_product = 1.0;
  p.power = 1.0;
  p.noise = 1.0;

  p.rate_gap = 0.0;
  CHECK(sop_closed_form(p) == doctest::Approx(1.0));  // zero redundancy

  p.rate_gap = 1.0;
  CHECK(sop_closed_form(p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  p.power = 1e-12;
  CHECK(sop_closed_form(p) < 1e-9);  // P -> 0 limit

  p.power = 1.0;
  p.effective_gain = 0.0;
  CHECK(sop_closed_form(p) == doctest::Approx(0.0));  // no leakage path

  p.effective_gain = -0.1;
  CHECK_THROWS_AS(sop_closed_form(p), std::domain_error);
}

TEST_CASE("sop closed form: monotone in gap and power, bounded") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    SopParams p;
    p.effective_gain = rng.uniform(0.1, 5.0);
    p.large_scale_product = rng.uniform(0.1, 2.0);
    p.rate_gap = rng.uniform(0.01, 3.0);
    p.power = rng.uniform(0.01, 2.0);
    p.noise = rng.uniform(0.1, 2.0);
    const double v = sop_closed_form(p);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    SopParams q = p;
    q.rate_gap += 0.5;
    CHECK(sop_closed_form(q) <= v + 1e-12);
    q = p;
    q.power *= 2.0;
    CHECK(sop_closed_form(q) >= v - 1e-12);
  }
}

TEST_CASE("monte-carlo oracle agrees with the closed form") {
  Rng rng(77);
  const int n = 8;
  for (int trial = 0; trial < 4; ++trial) {
    CVec coeffs(n), user(n);
    for (int i = 0; i < n; ++i) {
      const double beta = rng.uniform(0.0, 1.0);
      coeffs(i) = std::sqrt(beta) * std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
      user(i) = rng.cnormal();
    }
    const double ls = 0.7, gap = 1.0, power = 1.3, noise = 0.9;
    auto est = sop_monte_carlo(coeffs, user, ls, gap, power, noise, 100000, 42 + trial);

    SopParams p;
    p.effective_gain = (coeffs.cwiseAbs2().cwiseProduct(user.cwiseAbs2())).sum();
    p.large_scale_product = ls;
    p.rate_gap = gap;
    p.power = power;
    p.noise = noise;
    const double cf = sop_closed_form(p);
    CHECK(std::abs(est.estimate - cf) <= std::max(0.01, 3.0 * est.std_error));

    // Phase independence: rotated coefficients give the same closed form and
    // statistically indistinguishable estimates.
    CVec rotated = coeffs;
    for (int i = 0; i < n; ++i) rotated(i) *= std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    auto est2 = sop_monte_carlo(rotated, user, ls, gap, power, noise, 100000, 4242 + trial);
    CHECK(std::abs(est2.estimate - est.estimate) <=
          3.0 * std::sqrt(est.std_error * est.std_error + est2.std_error * est2.std_error) +
              1e-6);
  }
  CVec zero = CVec::Zero(n);
  CVec user = Rng(1).cnormal_vector(n);
  auto est = sop_monte_carlo(zero, user, 1.0, 1.0, 1.0, 1.0, 2000, 1);
  CHECK(est.estimate == 0.0);
  CHECK_THROWS_AS(sop_monte_carlo(zero, user, 1.0, 1.0, 1.0, 1.0, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("optimal_power_stat: hand value, minimality, infeasibility") {
  RateConfig rates;
  rates.r_c_iu = 1.0;
  rates.r_s_iu = 0.0;
  rates.r_c_ou = 1.0;
  rates.r_s_ou = 0.0;
  StatPower p = optimal_power_stat(1.0, 1.0, 1.0, rates, 1.0, 10.0, 10.0, DecodingOrder{true});
  REQUIRE(p.feasible);
  CHECK(p.p_ou == doctest::Approx(1.0));
  CHECK(p.p_iu == doctest::Approx(2.0));

  RateConfig r0 = rates;
  r0.r_c_ou = 0.0;
  StatPower pz = optimal_power_stat(1.0, 1.0, 1.0, r0, 1.0, 10.0, 10.0, DecodingOrder{true});
  CHECK(pz.p_ou == doctest::Approx(0.0));

  StatPower pf = optimal_power_stat(1.0, 1.0, 1.0, rates, 1.0, 0.5, 0.5, DecodingOrder{true});
  CHECK_FALSE(pf.feasible);

  CHECK_THROWS_AS(optimal_power_stat(0.0, 1.0, 1.0, rates, 1.0, 1.0, 1.0, DecodingOrder{true}),
                  std::domain_error);

  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const double z_iu = rng.uniform(0.2, 5.0);
    const double z_ou = rng.uniform(0.2, 5.0);
    const double noise = rng.uniform(0.5, 2.0);
    RateConfig rr;
    rr.r_c_iu = rng.uniform(0.2, 2.0);
    rr.r_c_ou = rng.uniform(0.2, 2.0);
    rr.r_s_iu = 0.5 * rr.r_c_iu;
    rr.r_s_ou = 0.5 * rr.r_c_ou;
    DecodingOrder order{i % 2 == 0};
    StatPower q = optimal_power_stat(z_iu, z_ou, noise, rr, 1.0, 1e9, 1e9, order);
    REQUIRE(q.feasible);
    const double th_iu = std::exp2(rr.r_c_iu) - 1.0;
    const double th_ou = std::exp2(rr.r_c_ou) - 1.0;
    auto gamma_iu = [&](double pi, double po) {
      return pi * z_iu / ((order.iu_first ? po * z_ou : 0.0) + noise);
    };
    auto gamma_ou = [&](double pi, double po) {
      return po * z_ou / ((order.iu_first ? 0.0 : pi * z_iu) + noise);
    };
    CHECK(gamma_iu(q.p_iu, q.p_ou) >= th_iu * (1 - 1e-9));
    CHECK(gamma_ou(q.p_iu, q.p_ou) >= th_ou * (1 - 1e-9));
    if (order.iu_first)
      CHECK(gamma_ou(q.p_iu, q.p_ou) == doctest::Approx(th_ou).epsilon(1e-9));
    else
      CHECK(gamma_iu(q.p_iu, q.p_ou) == doctest::Approx(th_iu).epsilon(1e-9));
    if (order.iu_first)
      CHECK(q.p_ou * z_ou <= q.p_iu * z_iu * (1 + 1e-9));
    else
      CHECK(q.p_iu * z_iu <= q.p_ou * z_ou * (1 + 1e-9));
    auto feasible_at = [&](double pi, double po) {
      if (gamma_iu(pi, po) < th_iu * (1 - 1e-12)) return false;
      if (gamma_ou(pi, po) < th_ou * (1 - 1e-12)) return false;
      if (order.iu_first && po * z_ou > pi * z_iu * (1 + 1e-12)) return false;
      if (!order.iu_first && pi * z_iu > po * z_ou * (1 + 1e-12)) return false;
      return true;
    };
    CHECK(feasible_at(q.p_iu, q.p_ou));
    CHECK_FALSE(feasible_at(0.99 * q.p_iu, q.p_ou));
    if (q.p_ou > 1e-12) CHECK_FALSE(feasible_at(q.p_iu, 0.99 * q.p_ou));
  }
}

TEST_CASE("build_problem38 rejects zero rate gaps") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  ChannelSet cs = sample_channels(geom, radio, 9);
  RateConfig rates;
  rates.r_c_iu = 1.0;
  rates.r_s_iu = 1.0;  // zero gap
  rates.r_c_ou = 1.0;
  rates.r_s_ou = 0.5;
  const double p = dbm_to_watt(10.0);
  StatTask task = StatTask::from_channels(cs, fullcsi::ElementLayout::full(4),
                                          fullcsi::UserMode::Both, DecodingOrder{true}, p, p,
                                          radio.noise_power_watt, rates);
  auto local = fullcsi::make_initial_iterate(task.beam, 1);
  CHECK_THROWS_AS(build_problem38(task, local, 1e-3), std::invalid_argument);
}

TEST_CASE("problem38 epigraph equals the larger recomputed outage pressure") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  ChannelSet cs = sample_channels(geom, radio, 19);
  RateConfig rates;
  const double p = dbm_to_watt(10.0);
  StatTask task = StatTask::from_channels(cs, fullcsi::ElementLayout::full(4),
                                          fullcsi::UserMode::Both, DecodingOrder{true}, p, p,
                                          radio.noise_power_watt, rates);
  auto local = fullcsi::make_initial_iterate(task.beam, 1);
  auto lp = build_problem38(task, local, 1e-3);
  auto sol = conic::solve(lp.program);
  REQUIRE(sol.status == conic::SolveStatus::Optimal);

  CMat ut = conic::hermitian_unembed(
      conic::smat(Vec(sol.x.segment(lp.ut_start, conic::svec_dim(lp.ut_side)))));
  CMat ur = conic::hermitian_unembed(
      conic::smat(Vec(sol.x.segment(lp.ur_start, conic::svec_dim(lp.ur_side)))));
  const double w_iu = p * task.ls_prod_iu / (std::exp2(rates.gap_iu()) - 1.0);
  const double w_ou = p * task.ls_prod_ou / (std::exp2(rates.gap_ou()) - 1.0);
  double varsigma_iu = 0.0, varsigma_ou = 0.0;
  for (int i = 0; i < 4; ++i) {
    varsigma_iu += w_iu * task.small_iu_sq(i) * ut(i, i).real();
    varsigma_ou += w_ou * task.small_ou_sq(i) * ur(i, i).real();
  }
  const double epi = sol.x(lp.obj_epigraph) * lp.sop_weight_scale;
  const double maxv = std::max(varsigma_iu, varsigma_ou);
  CHECK(epi >= maxv * (1 - 1e-4) - 1e-9);
  CHECK(epi <= maxv * (1 + 1e-2) + 1e-9);
}

TEST_CASE("extended AHB: trace nonincreasing, outputs consistent") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  Tolerances tol;
  RateConfig rates;
  ChannelSet cs = sample_channels(geom, radio, 2024);

  StatCsiOutcome out = extended_ahb(cs, radio, rates, tol);
  REQUIRE(out.feasible);
  REQUIRE(out.objective_trace.size() >= 1);
  for (std::size_t i = 1; i < out.objective_trace.size(); ++i)
    CHECK(out.objective_trace[i] <= out.objective_trace[i - 1] + 1e-6);
  CHECK(out.max_sop == doctest::Approx(std::max(out.sop_iu, out.sop_ou)));
  CHECK(out.max_sop >= 0.0);
  CHECK(out.max_sop <= 1.0);
  CHECK(out.p_iu <= radio.p_max_iu_watt * (1 + 1e-9));
  CHECK(out.p_ou <= radio.p_max_ou_watt * (1 + 1e-9));
  CHECK_NOTHROW(out.coeffs.validate());
  CHECK(out.w.norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tiny caps lead to an infeasible outcome, not a crash") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  radio.p_max_iu_watt = 1e-9;
  radio.p_max_ou_watt = 1e-9;
  Tolerances tol;
  RateConfig rates;
  rates.r_c_iu = 4.0;
  rates.r_c_ou = 4.0;
  rates.r_s_iu = 3.0;
  rates.r_s_ou = 3.0;
  ChannelSet cs = sample_channels(geom, radio, 77);
  StatCsiOutcome out = extended_ahb(cs, radio, rates, tol);
  CHECK_FALSE(out.feasible);
}
