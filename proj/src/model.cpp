#include "starsec/model.hpp"

#include <cmath>

#include "starsec/channel.hpp"

namespace starsec {

CVec StarCoefficients::transmit_vector() const {
  CVec u(beta_t.size());
  for (int n = 0; n < beta_t.size(); ++n)
    u(n) = std::sqrt(beta_t(n)) * std::polar(1.0, theta_t(n));
  return u;
}

CVec StarCoefficients::reflect_vector() const {
  CVec u(beta_r.size());
  for (int n = 0; n < beta_r.size(); ++n)
    u(n) = std::sqrt(beta_r(n)) * std::polar(1.0, theta_r(n));
  return u;
}

void StarCoefficients::validate() const {
  const auto n = beta_t.size();
  if (beta_r.size() != n || theta_t.size() != n || theta_r.size() != n)
    throw std::invalid_argument("StarCoefficients: inconsistent sizes");
  for (int i = 0; i < n; ++i) {
    if (!(beta_t(i) >= -1e-12 && beta_t(i) <= 1.0 + 1e-9) ||
        !(beta_r(i) >= -1e-12 && beta_r(i) <= 1.0 + 1e-9))
      throw std::invalid_argument("StarCoefficients: amplitude out of [0,1]");
    if (beta_t(i) + beta_r(i) > 1.0 + 1e-9)
      throw std::invalid_argument("StarCoefficients: energy conservation violated");
  }
}

StarCoefficients coefficients_from_vectors(const CVec& u_t, const CVec& u_r) {
  StarCoefficients c;
  const int n = static_cast<int>(u_t.size());
  c.beta_t.resize(n);
  c.beta_r.resize(n);
  c.theta_t.resize(n);
  c.theta_r.resize(n);
  for (int i = 0; i < n; ++i) {
    c.beta_t(i) = std::norm(u_t(i));
    c.beta_r(i) = std::norm(u_r(i));
    double at = std::arg(u_t(i));
    double ar = std::arg(u_r(i));
    c.theta_t(i) = at < 0 ? at + 2.0 * kPi : at;
    c.theta_r(i) = ar < 0 ? ar + 2.0 * kPi : ar;
  }
  return c;
}

void SystemGeometry::validate() const {
  if (!bs_pos.allFinite() || !ris_pos.allFinite() || !eve_pos.allFinite() ||
      !iu_pos.allFinite() || !ou_pos.allFinite())
    throw std::invalid_argument("SystemGeometry: non-finite position");
  if (alpha_bs <= 0 || alpha_iu <= 0 || alpha_ou <= 0 || alpha_eve <= 0)
    throw std::invalid_argument("SystemGeometry: path-loss exponents must be positive");
}

void RadioConfig::validate() const {
  if (num_bs_antennas < 1 || num_ris_elements < 1)
    throw std::invalid_argument("RadioConfig: antenna/element counts must be >= 1");
  if (noise_power_watt <= 0) throw std::invalid_argument("RadioConfig: noise power must be > 0");
  if (rician_factor < 0) throw std::invalid_argument("RadioConfig: Rician factor must be >= 0");
  if (p_max_iu_watt <= 0 || p_max_ou_watt <= 0)
    throw std::invalid_argument("RadioConfig: power limits must be > 0");
}

void RateConfig::validate() const {
  if (r_s_iu < 0 || r_s_ou < 0 || r_s_iu > r_c_iu || r_s_ou > r_c_ou)
    throw std::invalid_argument("RateConfig: require 0 <= r_s <= r_c per user");
}

void Tolerances::validate() const {
  if (inner_tol <= 0 || penalty_tol <= 0 || alt_tol <= 0 || penalty_init <= 0)
    throw std::invalid_argument("Tolerances: thresholds must be positive");
  if (penalty_growth <= 1.0) throw std::invalid_argument("Tolerances: growth factor must exceed 1");
  if (max_inner < 1 || max_outer < 1 || max_alt < 1)
    throw std::invalid_argument("Tolerances: iteration caps must be >= 1");
}

double path_loss(double distance, double exponent, double reference_loss_db) {
  if (!(distance > 0)) throw std::domain_error("path_loss: distance must be positive");
  return db_to_linear(reference_loss_db) * std::pow(distance, -exponent);
}

std::pair<double, double> legitimate_sinr(const ChannelSet& channels,
                                          const StarCoefficients& coeffs, const CVec& w,
                                          double p_iu, double p_ou, DecodingOrder order,
                                          double noise_power) {
  const double wn = w.norm();
  if (wn < 1e-12) throw std::domain_error("legitimate_sinr: zero-norm combiner");
  coeffs.validate();

  const CVec u_t = coeffs.transmit_vector();
  const CVec u_r = coeffs.reflect_vector();
  const CMat theta_t = u_t.asDiagonal();
  const CMat theta_r = u_r.asDiagonal();

  const Complex a_iu = (w.adjoint() * (channels.g.adjoint() * (theta_t * channels.h_is)))(0);
  const Complex a_ou = (w.adjoint() * (channels.g.adjoint() * (theta_r * channels.h_os)))(0);
  const double sig_iu = p_iu * std::norm(a_iu);
  const double sig_ou = p_ou * std::norm(a_ou);
  const double noise = noise_power * wn * wn;

  double gamma_iu, gamma_ou;
  if (order.iu_first) {
    gamma_iu = sig_iu / (sig_ou + noise);
    gamma_ou = sig_ou / noise;
  } else {
    gamma_iu = sig_iu / noise;
    gamma_ou = sig_ou / (sig_iu + noise);
  }
  return {clamp_tiny_negative(gamma_iu), clamp_tiny_negative(gamma_ou)};
}

std::pair<double, double> eavesdropper_snr(const ChannelSet& channels,
                                           const StarCoefficients& coeffs, double p_iu,
                                           double p_ou, double noise_power) {
  coeffs.validate();
  const CVec u_t = coeffs.transmit_vector();
  const CVec u_r = coeffs.reflect_vector();

  const Complex e_iu = (channels.h_es.adjoint() * (u_t.asDiagonal() * channels.h_is))(0);
  const Complex e_ou = (channels.h_es.adjoint() * (u_r.asDiagonal() * channels.h_os))(0);
  return {p_iu * std::norm(e_iu) / noise_power, p_ou * std::norm(e_ou) / noise_power};
}

double secrecy_capacity(double gamma, double gamma_eve) {
  if (gamma < 0 || gamma_eve < 0) throw std::domain_error("secrecy_capacity: negative SNR");
  return std::max(0.0, log2p1(gamma) - log2p1(gamma_eve));
}

}  // namespace starsec
