#include "doctest.h"

#include "starsec/channel.hpp"
#include "starsec/model.hpp"
#include "starsec/rng.hpp"

using namespace starsec;

namespace {

// Minimal hand-built channel set with unit effective gains: two elements,
// one BS antenna, each user served by its own element.
ChannelSet unit_channels() {
  ChannelSet cs;
  cs.g = CMat::Ones(2, 1);
  cs.h_is = CVec::Zero(2);
  cs.h_is(0) = 1.0;
  cs.h_os = CVec::Zero(2);
  cs.h_os(1) = 1.0;
  cs.h_es = CVec::Ones(2);
  cs.gain_bs = cs.gain_iu = cs.gain_ou = cs.gain_eve = 1.0;
  return cs;
}

StarCoefficients split_elements() {
  StarCoefficients c;
  c.beta_t = Vec::Zero(2);
  c.beta_t(0) = 1.0;
  c.beta_r = Vec::Zero(2);
  c.beta_r(1) = 1.0;
  c.theta_t = Vec::Zero(2);
  c.theta_r = Vec::Zero(2);
  return c;
}

}  // namespace

TEST_CASE("path_loss values and monotonicity") {
  CHECK(path_loss(1.0, 2.5, -30.0) == doctest::Approx(1e-3).epsilon(1e-12));
  // Hand evaluation of L0 * d^-alpha at the surface-user distance.
  CHECK(path_loss(5.0, 2.5, -30.0) == doctest::Approx(1.7889e-5).epsilon(1e-4));
  CHECK_THROWS_AS(path_loss(0.0, 2.5, -30.0), std::domain_error);
  CHECK_THROWS_AS(path_loss(-1.0, 2.5, -30.0), std::domain_error);

  double prev = path_loss(1.0, 2.5, -30.0);
  for (double d = 2.0; d < 1e9; d *= 10.0) {
    double cur = path_loss(d, 2.5, -30.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-18);  // d -> inf limit
  // Strictly decreasing in the exponent for d > 1.
  CHECK(path_loss(10.0, 2.6, -30.0) < path_loss(10.0, 2.5, -30.0));
}

TEST_CASE("legitimate_sinr matches the direct substitution example") {
  ChannelSet cs = unit_channels();
  StarCoefficients coeffs = split_elements();
  CVec w = CVec::Ones(1);

  auto [gi, go] = legitimate_sinr(cs, coeffs, w, 2.0, 1.0, DecodingOrder{true}, 1.0);
  CHECK(gi == doctest::Approx(2.0 / (1.0 + 1.0)));
  CHECK(go == doctest::Approx(1.0));

  auto [gz, go2] = legitimate_sinr(cs, coeffs, w, 0.0, 1.0, DecodingOrder{true}, 1.0);
  CHECK(gz == doctest::Approx(0.0));
  CHECK(go2 == doctest::Approx(1.0));

  CHECK_THROWS_AS(legitimate_sinr(cs, coeffs, CVec::Zero(1), 1.0, 1.0, DecodingOrder{true}, 1.0),
                  std::domain_error);
}

TEST_CASE("legitimate_sinr agrees with scalar-by-scalar expansion") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 6;
  radio.num_bs_antennas = 3;
  ChannelSet cs = sample_channels(geom, radio, 42);
  Rng rng(77);
  StarCoefficients coeffs;
  coeffs.beta_t.resize(6);
  coeffs.beta_r.resize(6);
  coeffs.theta_t.resize(6);
  coeffs.theta_r.resize(6);
  for (int i = 0; i < 6; ++i) {
    double s = rng.uniform();
    coeffs.beta_t(i) = s;
    coeffs.beta_r(i) = 1.0 - s;
    coeffs.theta_t(i) = rng.uniform(0, 2 * kPi);
    coeffs.theta_r(i) = rng.uniform(0, 2 * kPi);
  }
  CVec w = rng.cnormal_vector(3);
  w.normalize();
  const double p_iu = 0.01, p_ou = 0.02, noise = 1e-11;

  // Term-by-term expansion of the combined receive signal.
  Complex a = 0, b = 0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 6; ++n) {
      const Complex ut = std::sqrt(coeffs.beta_t(n)) * std::polar(1.0, coeffs.theta_t(n));
      const Complex ur = std::sqrt(coeffs.beta_r(n)) * std::polar(1.0, coeffs.theta_r(n));
      a += std::conj(w(m)) * std::conj(cs.g(n, m)) * ut * cs.h_is(n);
      b += std::conj(w(m)) * std::conj(cs.g(n, m)) * ur * cs.h_os(n);
    }
  const double gi_ref = p_iu * std::norm(a) / (p_ou * std::norm(b) + noise);
  const double go_ref = p_ou * std::norm(b) / noise;

  auto [gi, go] = legitimate_sinr(cs, coeffs, w, p_iu, p_ou, DecodingOrder{true}, noise);
  CHECK(gi == doctest::Approx(gi_ref).epsilon(1e-12));
  CHECK(go == doctest::Approx(go_ref).epsilon(1e-12));

  // Interference monotonicity: first-decoded user cannot gain from a
  // stronger interferer; second-decoded user is unaffected.
  auto [gi_hi, go_hi] = legitimate_sinr(cs, coeffs, w, p_iu, 2 * p_ou, DecodingOrder{true}, noise);
  CHECK(gi_hi <= gi + 1e-15);
  CHECK(go_hi == doctest::Approx(2 * go).epsilon(1e-12));
}

TEST_CASE("eavesdropper_snr basics") {
  ChannelSet cs = unit_channels();

  StarCoefficients zero_t = split_elements();
  zero_t.beta_t.setZero();
  auto [ge_i0, ge_o0] = eavesdropper_snr(cs, zero_t, 1.0, 1.0, 1.0);
  CHECK(ge_i0 == doctest::Approx(0.0));

  // Single element, unit channels, unit transmit amplitude, arbitrary phase.
  ChannelSet one;
  one.g = CMat::Ones(1, 1);
  one.h_is = CVec::Ones(1);
  one.h_os = CVec::Ones(1);
  one.h_es = CVec::Ones(1);
  StarCoefficients c1;
  c1.beta_t = Vec::Ones(1);
  c1.beta_r = Vec::Zero(1);
  c1.theta_t = Vec::Constant(1, 1.234);
  c1.theta_r = Vec::Zero(1);
  auto [ge_i, ge_o] = eavesdropper_snr(one, c1, 2.5, 1.0, 2.5);
  CHECK(ge_i == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ge_o == doctest::Approx(0.0));
}

TEST_CASE("eavesdropper_snr equals the element-wise cascade form") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 5;
  radio.num_bs_antennas = 2;
  ChannelSet cs = sample_channels(geom, radio, 4242);
  Rng rng(8);
  StarCoefficients coeffs;
  coeffs.beta_t.resize(5);
  coeffs.beta_r.resize(5);
  coeffs.theta_t.resize(5);
  coeffs.theta_r.resize(5);
  for (int i = 0; i < 5; ++i) {
    double s = rng.uniform();
    coeffs.beta_t(i) = 0.9 * s;
    coeffs.beta_r(i) = 0.9 * (1 - s);
    coeffs.theta_t(i) = rng.uniform(0, 2 * kPi);
    coeffs.theta_r(i) = rng.uniform(0, 2 * kPi);
  }
  const double p_iu = 0.003, p_ou = 0.007, noise = 3e-12;
  auto [ge_i, ge_o] = eavesdropper_snr(cs, coeffs, p_iu, p_ou, noise);

  CascadedForms f = cascaded_forms(cs);
  const Complex xi = (f.q_eve_iu.transpose() * coeffs.transmit_vector())(0);
  const Complex xo = (f.q_eve_ou.transpose() * coeffs.reflect_vector())(0);
  CHECK(ge_i == doctest::Approx(p_iu * std::norm(xi) / noise).epsilon(1e-12));
  CHECK(ge_o == doctest::Approx(p_ou * std::norm(xo) / noise).epsilon(1e-12));
}

TEST_CASE("secrecy_capacity") {
  CHECK(secrecy_capacity(3.0, 1.0) == doctest::Approx(1.0));
  CHECK(secrecy_capacity(1.0, 3.0) == doctest::Approx(0.0));
  CHECK(secrecy_capacity(0.7, 0.7) == doctest::Approx(0.0));
  CHECK_THROWS_AS(secrecy_capacity(-0.1, 0.0), std::domain_error);

  // Monotone in both arguments, always nonnegative.
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    double g = rng.uniform(0, 50), ge = rng.uniform(0, 50);
    double v = secrecy_capacity(g, ge);
    CHECK(v >= 0.0);
    CHECK(secrecy_capacity(g + 1.0, ge) >= v);
    CHECK(secrecy_capacity(g, ge + 1.0) <= v);
  }
}

TEST_CASE("config validation") {
  SystemGeometry geom;
  CHECK_NOTHROW(geom.validate());
  geom.alpha_bs = 0.0;
  CHECK_THROWS_AS(geom.validate(), std::invalid_argument);

  RadioConfig radio;
  CHECK_NOTHROW(radio.validate());
  radio.noise_power_watt = 0.0;
  CHECK_THROWS_AS(radio.validate(), std::invalid_argument);

  RateConfig rates;
  CHECK_NOTHROW(rates.validate());
  rates.r_s_iu = rates.r_c_iu + 0.1;
  CHECK_THROWS_AS(rates.validate(), std::invalid_argument);

  Tolerances tol;
  CHECK_NOTHROW(tol.validate());
  tol.penalty_growth = 1.0;
  CHECK_THROWS_AS(tol.validate(), std::invalid_argument);
}
