#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "starsec/channel.hpp"
#include "starsec/fullcsi.hpp"
#include "starsec/model.hpp"
#include "starsec/sca.hpp"

namespace starsec {
namespace statcsi {

// Ingredients of the closed-form secrecy-outage probability for one user.
struct SopParams {
  double effective_gain = 0.0;       // sum_n beta_n |h_small_n|^2
  double large_scale_product = 0.0;  // pathloss(eve link) * pathloss(user link)
  double rate_gap = 0.0;             // codeword rate minus secrecy rate (bits/s/Hz)
  double power = 0.0;                // transmit power (watts)
  double noise = 0.0;                // noise power (watts)
};

// exp(-(2^gap - 1) * noise / (P * large_scale_product * effective_gain)).
double sop_closed_form(const SopParams& params);

struct SopEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

// Monte-Carlo oracle: draws fresh eavesdropper small-scale vectors and
// counts outage events directly from the leakage power. side_coeffs are the
// per-element complex coefficients sqrt(beta) e^{j theta} of the relevant
// side; user_small is the user's small-scale channel.
SopEstimate sop_monte_carlo(const CVec& side_coeffs, const CVec& user_small,
                            double large_scale_product, double rate_gap, double power,
                            double noise, int trials, std::uint64_t seed);

// Full task description of the max-SOP minimization subproblem.
struct StatTask {
  fullcsi::BeamformingTask beam;
  Vec small_iu_sq;  // |h_small|^2 restricted to the transmit-side elements
  Vec small_ou_sq;  // restricted to the reflection-side elements
  double ls_prod_iu = 0.0;
  double ls_prod_ou = 0.0;
  RateConfig rates;
  double rate_factor = 1.0;  // pre-log correction (2 for time-shared schemes)

  static StatTask from_channels(const ChannelSet& channels, const fullcsi::ElementLayout& layout,
                                fullcsi::UserMode mode, DecodingOrder order, double p_iu,
                                double p_ou, double noise, const RateConfig& rates,
                                double rate_factor = 1.0);
};

// Assembles the rank-penalized epigraph form of the max-SOP subproblem.
// Throws std::invalid_argument when a required rate gap is zero (the outage
// probability is then identically one).
fullcsi::LiftedProblem build_problem38(const StatTask& task, const sca::BeamformingIterate& local,
                                       double tau);

struct StatPower {
  bool feasible = false;
  double p_iu = 0.0;
  double p_ou = 0.0;
};

// Minimal powers meeting the codeword-rate constraints and the decoding
// order; infeasible when a cap is exceeded.
StatPower optimal_power_stat(double z_iu, double z_ou, double noise, const RateConfig& rates,
                             double rate_factor, double p_max_iu, double p_max_ou,
                             DecodingOrder order);

struct StatCsiOutcome {
  sca::BeamformingIterate iterate;
  CVec w;
  StarCoefficients coeffs;
  double p_iu = 0.0;
  double p_ou = 0.0;
  double sop_iu = 1.0;
  double sop_ou = 1.0;
  double max_sop = 1.0;
  DecodingOrder order;
  std::vector<double> objective_trace;  // max SOP per alternation
  bool feasible = false;
  bool degraded = false;
  int alternations = 0;
};

struct ExtendedAhbOptions {
  std::optional<fullcsi::ElementLayout> layout;
  std::uint64_t init_seed = 1;
};

// Extended alternation for the statistical-CSI metric; runs both decoding
// orders and keeps the lower max-SOP among the feasible ones.
StatCsiOutcome extended_ahb(const ChannelSet& channels, const RadioConfig& radio,
                            const RateConfig& rates, const Tolerances& tol,
                            const ExtendedAhbOptions& options = {});

StatCsiOutcome extended_ahb_order(const ChannelSet& channels, const RadioConfig& radio,
                                  const RateConfig& rates, const Tolerances& tol,
                                  DecodingOrder order, const ExtendedAhbOptions& options = {});

// One-user variant for time-shared baselines; rate_factor is the pre-log
// correction applied to the codeword/secrecy rates (2 for two slots).
StatCsiOutcome extended_ahb_single(const ChannelSet& channels, const RadioConfig& radio,
                                   const RateConfig& rates, const Tolerances& tol,
                                   fullcsi::UserMode mode, double rate_factor,
                                   const ExtendedAhbOptions& options = {});

}  // namespace statcsi
}  // namespace starsec
