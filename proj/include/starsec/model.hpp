#pragma once

#include <array>
#include <optional>

#include "starsec/common.hpp"
#include "starsec/star_coefficients.hpp"

namespace starsec {

struct ChannelSet;  // channel.hpp

// Node placement and large-scale propagation parameters. Defaults follow the
// desk setup: BS (0,5,0), surface (50,10,0), eavesdropper (0,0,0), indoor
// user (50,15,0), outdoor user (50,-15,0), reference loss -30 dB, exponent
// 2.2 on the surface-BS link and 2.5 elsewhere.
struct SystemGeometry {
  Eigen::Vector3d bs_pos{0.0, 5.0, 0.0};
  Eigen::Vector3d ris_pos{50.0, 10.0, 0.0};
  Eigen::Vector3d eve_pos{0.0, 0.0, 0.0};
  Eigen::Vector3d iu_pos{50.0, 15.0, 0.0};
  Eigen::Vector3d ou_pos{50.0, -15.0, 0.0};
  double alpha_bs = 2.2;
  double alpha_iu = 2.5;
  double alpha_ou = 2.5;
  double alpha_eve = 2.5;
  double reference_loss_db = -30.0;

  void validate() const;

  double dist_bs() const { return (ris_pos - bs_pos).norm(); }
  double dist_iu() const { return (ris_pos - iu_pos).norm(); }
  double dist_ou() const { return (ris_pos - ou_pos).norm(); }
  double dist_eve() const { return (ris_pos - eve_pos).norm(); }
};

struct RadioConfig {
  int num_bs_antennas = 4;
  int num_ris_elements = 8;
  double noise_power_watt = dbm_to_watt(-115.0);
  double rician_factor = db_to_linear(3.0);  // value not pinned by the setup; knob
  double p_max_iu_watt = dbm_to_watt(15.0);
  double p_max_ou_watt = dbm_to_watt(15.0);

  void validate() const;
};

// Wiretap code rates (bits/s/Hz). Codeword rate >= secrecy rate per user.
struct RateConfig {
  double r_c_iu = 1.0;
  double r_c_ou = 1.0;
  double r_s_iu = 0.9;
  double r_s_ou = 0.9;

  void validate() const;
  double gap_iu() const { return r_c_iu - r_s_iu; }
  double gap_ou() const { return r_c_ou - r_s_ou; }
};

// Successive-decoding order at the BS: exactly one user is decoded first
// (and suffers the other as interference).
struct DecodingOrder {
  bool iu_first = true;

  int u_iu() const { return iu_first ? 1 : 0; }
  int u_ou() const { return iu_first ? 0 : 1; }
  static std::array<DecodingOrder, 2> both() { return {DecodingOrder{true}, DecodingOrder{false}}; }
};

struct Tolerances {
  double inner_tol = 1e-3;    // Dinkelbach-gap convergence in the inner loop
  double penalty_tol = 1e-3;  // rank-penalty sum for the outer loop
  double alt_tol = 1e-4;      // alternating objective convergence
  double penalty_init = 1e-3;
  double penalty_growth = 5.0;
  int max_inner = 25;
  int max_outer = 8;
  int max_alt = 30;

  void validate() const;
};

struct SecrecyReport {
  double gamma_iu = 0.0;
  double gamma_ou = 0.0;
  double gamma_eve_iu = 0.0;
  double gamma_eve_ou = 0.0;
  double secrecy_capacity_iu = 0.0;
  double secrecy_capacity_ou = 0.0;
  double min_secrecy_capacity = 0.0;
  std::optional<double> sop_iu;
  std::optional<double> sop_ou;
  std::optional<double> max_sop;
  bool iu_first = true;
};

// Large-scale gain 10^(L0/10) * d^(-alpha).
double path_loss(double distance, double exponent, double reference_loss_db);

// Exact per-user SINR/SNR after receive combining, for the given decoding
// order: the first-decoded user sees the other signal as interference, the
// second is interference-free.
std::pair<double, double> legitimate_sinr(const ChannelSet& channels,
                                          const StarCoefficients& coeffs, const CVec& w,
                                          double p_iu, double p_ou, DecodingOrder order,
                                          double noise_power);

// Worst-case eavesdropper SNRs: interference-free decoding of both signals.
std::pair<double, double> eavesdropper_snr(const ChannelSet& channels,
                                           const StarCoefficients& coeffs, double p_iu,
                                           double p_ou, double noise_power);

// [log2(1+gamma) - log2(1+gamma_e)]^+
double secrecy_capacity(double gamma, double gamma_eve);

}  // namespace starsec
