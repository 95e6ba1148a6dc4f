#include "doctest.h"

#include "starsec/rng.hpp"
#include "starsec/sca.hpp"

using namespace starsec;
using namespace starsec::sca;

namespace {

CMat random_psd(Rng& rng, int side) {
  CMat a = rng.cnormal_matrix(side, side);
  return a * a.adjoint();
}

}  // namespace

TEST_CASE("polarization identity: scalar and degenerate cases") {
  CMat q = CMat::Ones(1, 1);
  CMat w = CMat::Constant(1, 1, 4.0);
  CMat u = CMat::Constant(1, 1, 9.0);
  CHECK(polarization_value(q, w, u) == doctest::Approx(36.0));

  CHECK(polarization_value(q, w, CMat::Zero(1, 1)) == doctest::Approx(0.0));

  CMat bad = CMat::Ones(2, 2);
  CHECK_THROWS_AS(polarization_value(q, w, bad), std::invalid_argument);
}

TEST_CASE("polarization identity equals the direct trace") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform() * 4);
    const int n = 2 + static_cast<int>(rng.uniform() * 6);
    CMat q = rng.cnormal_matrix(m, n);
    CMat w = random_psd(rng, m);
    CMat u = random_psd(rng, n);
    const double direct = (q.adjoint() * w * q * u).trace().real();
    const double via_norms = polarization_value(q, w, u);
    CHECK(via_norms == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("polarization bounds sandwich and are tight at the local point") {
  Rng rng(23);
  const int m = 3, n = 5;
  CMat q = rng.cnormal_matrix(m, n);
  CMat w0 = random_psd(rng, m);
  CMat u0 = random_psd(rng, n);

  auto at_local = polarization_bounds(q, w0, u0, w0, u0);
  const double truth0 = polarization_value(q, w0, u0);
  CHECK(at_local.lower == doctest::Approx(truth0).epsilon(1e-9));
  CHECK(at_local.upper == doctest::Approx(truth0).epsilon(1e-9));

  for (int trial = 0; trial < 100; ++trial) {
    CMat w = w0 + 0.3 * random_psd(rng, m);
    CMat u = u0 + 0.3 * random_psd(rng, n);
    const double truth = polarization_value(q, w, u);
    auto b = polarization_bounds(q, w, u, w0, u0);
    const double slack = 1e-9 * std::max(1.0, std::abs(truth));
    CHECK(b.lower <= truth + slack);
    CHECK(b.upper >= truth - slack);
  }
}

TEST_CASE("lemma-1 upper bound: tangency and majorization") {
  // At the tangency point the bound is exact.
  CHECK(lemma1_upper(1.0, 2.0, 1.0, 1.0, 1.0) == doctest::Approx(4.0));
  // Off the tangency weight it strictly majorizes.
  CHECK(lemma1_upper(1.0, 2.0, 2.0, 1.0, 1.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(lemma1_upper(1.0, 1.0, 0.0, 1.0, 1.0), std::domain_error);

  Rng rng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    const double t = rng.uniform(0.01, 10.0);
    const double phi = rng.uniform(0.01, 10.0);
    const double p = rng.uniform(0.01, 5.0);
    const double noise = rng.uniform(0.01, 2.0);
    const double weight = rng.uniform(0.01, 10.0);
    const double product = (p * t + noise) * phi;
    CHECK(lemma1_upper(t, phi, weight, p, noise) >= product - 1e-12 * product);

    // Tangency and matching finite-difference partials at the stated weight.
    const double wstar = phi / (p * t + noise);
    CHECK(lemma1_upper(t, phi, wstar, p, noise) ==
          doctest::Approx(product).epsilon(1e-12));
    const double eps = 1e-6;
    const double d_t = (lemma1_upper(t + eps, phi, wstar, p, noise) -
                        lemma1_upper(t - eps, phi, wstar, p, noise)) /
                       (2 * eps);
    const double d_t_ref = ((p * (t + eps) + noise) * phi - (p * (t - eps) + noise) * phi) /
                           (2 * eps);
    CHECK(d_t == doctest::Approx(d_t_ref).epsilon(1e-6));
    const double d_phi = (lemma1_upper(t, phi + eps, wstar, p, noise) -
                          lemma1_upper(t, phi - eps, wstar, p, noise)) /
                         (2 * eps);
    const double d_phi_ref = (p * t + noise);
    CHECK(d_phi == doctest::Approx(d_phi_ref).epsilon(1e-6));
  }
}

TEST_CASE("dc penalty row") {
  Rng rng(31);
  CVec u1 = rng.cnormal_vector(4);
  u1.normalize();
  CHECK(dc_penalty_row(CMat(u1 * u1.adjoint()), u1) == doctest::Approx(0.0).epsilon(1e-12));

  CMat eye = CMat::Identity(2, 2);
  CVec e1 = CVec::Zero(2);
  e1(0) = 1.0;
  CHECK(dc_penalty_row(eye, e1) == doctest::Approx(1.0));

  // Equals the sum of the non-leading eigenvalues at the top eigenvector.
  CMat psd = random_psd(rng, 5);
  Eigen::SelfAdjointEigenSolver<CMat> eig(psd);
  CVec top = eig.eigenvectors().col(4);
  const double tail = eig.eigenvalues().head(4).sum();
  CHECK(dc_penalty_row(psd, top) == doctest::Approx(tail).epsilon(1e-10));
  CHECK(dc_penalty_row(psd, top) >= 0.0);
}

TEST_CASE("rank-one extraction ratio") {
  Rng rng(37);
  CVec v = rng.cnormal_vector(6);
  auto pure = rank_one_extract(CMat(v * v.adjoint()));
  CHECK(pure.ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((pure.vector * pure.vector.adjoint() - v * v.adjoint()).cwiseAbs().maxCoeff() <
        1e-9 * v.squaredNorm());

  const int n = 8;
  auto spread = rank_one_extract(CMat(CMat::Identity(n, n) / double(n)));
  CHECK(spread.ratio == doctest::Approx(1.0 / n).epsilon(1e-12));
}
