#pragma once

#include "starsec/common.hpp"

namespace starsec {
namespace sca {

// Lifted iterate shared by both alternating pipelines. Matrices are complex
// Hermitian; scalar slacks are stored in noise-normalized units.
struct BeamformingIterate {
  CMat combiner_gram;  // receive beamforming Gram matrix, trace 1
  CMat coeff_gram_t;   // transmission-side coefficient Gram
  CMat coeff_gram_r;   // reflection-side coefficient Gram
  CMat local_combiner;
  CMat local_coeff_t;
  CMat local_coeff_r;
  double sig_lb_iu = 0.0;  // lower/upper slacks for the bilinear signal terms
  double sig_lb_ou = 0.0;
  double sig_ub_iu = 0.0;
  double sig_ub_ou = 0.0;
  double strong_sinr_lb = 0.0;   // SINR slack of the first-decoded user
  double amgm_weight = 1.0;      // tangency parameter of the product bound
  double rank_gap_t = 0.0;       // DC penalty values at the solution
  double rank_gap_r = 0.0;
  double dinkelbach_gap = 0.0;   // objective slack measuring the ratio gap
  double dinkelbach_ratio = 0.0;
  double penalty_scale = 1e-3;
  CVec top_vec_t;
  CVec top_vec_r;
  bool degraded = false;  // rank quality not reached within iteration caps
};

// Exact bilinear value Tr(q^H W q U) computed through the difference of
// squared Frobenius norms; agrees with the direct trace to round-off.
double polarization_value(const CMat& q, const CMat& w, const CMat& u);

struct PolarizationBounds {
  double lower;
  double upper;
};

// First-order certificates around local points (w_local, u_local): the
// returned pair sandwiches the true bilinear value and is tight at the
// local point.
PolarizationBounds polarization_bounds(const CMat& q, const CMat& w, const CMat& u,
                                       const CMat& w_local, const CMat& u_local);

// Convex upper bound (1/2)(weight*(p*t_upper + noise)^2 + phi^2/weight) of
// the product (p*t_upper + noise)*phi; tight with matching gradients at
// weight = phi / (p*t_upper + noise).
double lemma1_upper(double t_upper, double phi, double weight, double power, double noise);

// Trace minus Rayleigh quotient along the given unit direction; zero exactly
// for rank-one matrices aligned with it.
double dc_penalty_row(const CMat& u, const CVec& top);

struct RankOneExtract {
  CVec vector;   // scaled so that vector*vector^H has the trace of the input
  CVec unit;     // unit-norm direction
  double ratio;  // top eigenvalue over trace
};

RankOneExtract rank_one_extract(const CMat& psd);

}  // namespace sca
}  // namespace starsec
