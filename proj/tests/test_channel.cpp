#include "doctest.h"

#include <sstream>

#include "starsec/channel.hpp"
#include "starsec/rng.hpp"

using namespace starsec;

TEST_CASE("same seed gives bit-identical channels") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 8;
  radio.num_bs_antennas = 4;
  ChannelSet a = sample_channels(geom, radio, 1234);
  ChannelSet b = sample_channels(geom, radio, 1234);
  CHECK(a.g == b.g);
  CHECK(a.h_is == b.h_is);
  CHECK(a.h_os == b.h_os);
  CHECK(a.h_es == b.h_es);
  ChannelSet c = sample_channels(geom, radio, 1235);
  CHECK(a.g != c.g);
}

TEST_CASE("large-scale gains equal the path-loss model") {
  SystemGeometry geom;
  RadioConfig radio;
  ChannelSet cs = sample_channels(geom, radio, 7);
  CHECK(cs.gain_bs ==
        doctest::Approx(path_loss(geom.dist_bs(), geom.alpha_bs, geom.reference_loss_db)));
  CHECK(cs.gain_iu ==
        doctest::Approx(path_loss(geom.dist_iu(), geom.alpha_iu, geom.reference_loss_db)));
  CHECK(cs.gain_eve ==
        doctest::Approx(path_loss(geom.dist_eve(), geom.alpha_eve, geom.reference_loss_db)));
}

TEST_CASE("Rician limit: large K gives the deterministic rank-one component") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 6;
  radio.num_bs_antennas = 3;
  radio.rician_factor = 1e14;
  ChannelSet cs = sample_channels(geom, radio, 99);
  // Steering outer product: all entries unit modulus, rank one.
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(cs.g_small(i, j)) == doctest::Approx(1.0).epsilon(1e-6));
  Eigen::JacobiSVD<CMat> svd(cs.g_small);
  CHECK(svd.singularValues()(1) < 1e-6 * svd.singularValues()(0));
}

TEST_CASE("Rayleigh-only G has matching empirical variance") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 2;
  radio.num_bs_antennas = 2;
  radio.rician_factor = 0.0;
  double acc = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    ChannelSet cs = sample_channels(geom, radio, 1000 + t);
    acc += cs.g.cwiseAbs2().sum() / 4.0;
  }
  const double var = acc / draws;
  ChannelSet ref = sample_channels(geom, radio, 0);
  CHECK(var == doctest::Approx(ref.gain_bs).epsilon(0.02));
}

TEST_CASE("user-link second moments match their large-scale gains") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 1;
  const int draws = 10000;
  double acc_iu = 0, acc_eve = 0;
  for (int t = 0; t < draws; ++t) {
    ChannelSet cs = sample_channels(geom, radio, 555000 + t);
    acc_iu += cs.h_is.cwiseAbs2().mean();
    acc_eve += cs.h_es.cwiseAbs2().mean();
  }
  ChannelSet ref = sample_channels(geom, radio, 0);
  // |h|^2 is exponential: stderr of the mean of N*draws entries is
  // gain/sqrt(N*draws).
  const double se_iu = ref.gain_iu / std::sqrt(4.0 * draws);
  const double se_eve = ref.gain_eve / std::sqrt(4.0 * draws);
  CHECK(std::abs(acc_iu / draws - ref.gain_iu) < 3 * se_iu);
  CHECK(std::abs(acc_eve / draws - ref.gain_eve) < 3 * se_eve);
}

TEST_CASE("cascaded forms: scalar case and bilinear identity") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 1;
  radio.num_bs_antennas = 1;
  ChannelSet cs = sample_channels(geom, radio, 31);
  CascadedForms f = cascaded_forms(cs);
  CHECK(f.q_iu(0, 0) == std::conj(cs.g(0, 0)) * cs.h_is(0));

  radio.num_ris_elements = 7;
  radio.num_bs_antennas = 3;
  cs = sample_channels(geom, radio, 32);
  f = cascaded_forms(cs);
  Rng rng(1);
  CVec w = rng.cnormal_vector(3);
  CVec u = rng.cnormal_vector(7);
  u = u.cwiseQuotient(u.cwiseAbs().cast<Complex>()) * std::sqrt(0.5);
  const Complex lhs = (w.adjoint() * (cs.g.adjoint() * (u.asDiagonal() * cs.h_is)))(0);
  const Complex rhs = (w.adjoint() * (f.q_iu * u))(0);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));

  ChannelSet no_eve = cs;
  no_eve.h_es.setZero();
  CascadedForms fz = cascaded_forms(no_eve);
  CHECK(fz.q_eve_iu.norm() == 0.0);
  CHECK(fz.q_eve_ou.norm() == 0.0);
}

TEST_CASE("cascaded forms are linear in the underlying channels") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 4;
  radio.num_bs_antennas = 2;
  ChannelSet a = sample_channels(geom, radio, 61);
  ChannelSet b = a;
  b.h_is *= 2.0;
  CascadedForms fa = cascaded_forms(a);
  CascadedForms fb = cascaded_forms(b);
  CHECK((fb.q_iu - 2.0 * fa.q_iu).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((fb.q_eve_iu - 2.0 * fa.q_eve_iu).cwiseAbs().maxCoeff() < 1e-15);

  b = a;
  b.g *= 3.0;
  fb = cascaded_forms(b);
  CHECK((fb.q_iu - 3.0 * fa.q_iu).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dump/load round trip") {
  SystemGeometry geom;
  RadioConfig radio;
  radio.num_ris_elements = 3;
  radio.num_bs_antennas = 2;
  ChannelSet cs = sample_channels(geom, radio, 101);
  std::stringstream ss;
  dump_channels(cs, ss);
  ChannelSet back = load_channels(ss);
  CHECK((back.g - cs.g).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.h_is - cs.h_is).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.h_es - cs.h_es).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.gain_bs == cs.gain_bs);
}
