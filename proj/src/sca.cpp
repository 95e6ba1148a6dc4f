#include "starsec/sca.hpp"

#include <cmath>

#include "starsec/conic.hpp"

namespace starsec {
namespace sca {

namespace {

void check_shapes(const CMat& q, const CMat& w, const CMat& u) {
  if (w.rows() != w.cols() || u.rows() != u.cols() || q.rows() != w.rows() ||
      q.cols() != u.rows())
    throw std::invalid_argument("polarization: dimension mismatch");
}

}  // namespace

double polarization_value(const CMat& q, const CMat& w, const CMat& u) {
  check_shapes(q, w, u);
  const CMat a = q.adjoint() * w * q;
  const double plus = (a + u).squaredNorm();
  const double minus = (a - u).squaredNorm();
  return 0.25 * (plus - minus);
}

PolarizationBounds polarization_bounds(const CMat& q, const CMat& w, const CMat& u,
                                       const CMat& w_local, const CMat& u_local) {
  check_shapes(q, w, u);
  check_shapes(q, w_local, u_local);
  const CMat a = q.adjoint() * w * q;
  const CMat a_local = q.adjoint() * w_local * q;
  const CMat fp = a + u;
  const CMat fm = a - u;
  const CMat fp_local = a_local + u_local;
  const CMat fm_local = a_local - u_local;

  // Tangent under-estimate of ||f_plus||^2 minus the exact ||f_minus||^2.
  const double lower = 0.25 * (2.0 * (fp.cwiseProduct(fp_local.conjugate())).sum().real() -
                               fp_local.squaredNorm() - fm.squaredNorm());
  // Exact ||f_plus||^2 minus the tangent under-estimate of ||f_minus||^2.
  const double upper = 0.25 * (fp.squaredNorm() -
                               2.0 * (fm.cwiseProduct(fm_local.conjugate())).sum().real() +
                               fm_local.squaredNorm());
  return {lower, upper};
}

double lemma1_upper(double t_upper, double phi, double weight, double power, double noise) {
  if (weight <= 0) throw std::domain_error("lemma1_upper: weight must be positive");
  const double g = power * t_upper + noise;
  return 0.5 * (weight * g * g + phi * phi / weight);
}

double dc_penalty_row(const CMat& u, const CVec& top) {
  const double trace = u.trace().real();
  const double quad = (top.adjoint() * u * top)(0).real();
  return trace - quad;
}

RankOneExtract rank_one_extract(const CMat& psd) {
  auto [lmax, vec] = conic::leading_eigenvector(psd);
  const double trace = psd.trace().real();
  RankOneExtract out;
  out.unit = vec;
  if (trace <= 1e-300) {
    out.vector = CVec::Zero(psd.rows());
    out.ratio = 1.0;
    return out;
  }
  out.vector = std::sqrt(std::max(lmax, 0.0)) * vec;
  out.ratio = lmax / trace;
  return out;
}

}  // namespace sca
}  // namespace starsec
