#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "starsec/channel.hpp"
#include "starsec/conic.hpp"
#include "starsec/model.hpp"
#include "starsec/sca.hpp"

namespace starsec {
namespace fullcsi {

// Which surface elements feed each side; conventional surfaces split the
// array, the energy-splitting surface uses every element on both sides.
struct ElementLayout {
  std::vector<int> t_elements;
  std::vector<int> r_elements;

  static ElementLayout full(int n);
  static ElementLayout split(int n);  // floor(n/2) transmit-only, rest reflect-only
};

enum class UserMode { Both, IuOnly, OuOnly };

// One joint-beamforming subproblem instance at fixed powers. Cascades are
// restricted to the layout's element sets and kept in physical units; the
// builder normalizes internally.
struct BeamformingTask {
  CMat q_iu;  // M x |t_elements|
  CMat q_ou;  // M x |r_elements|
  CVec q_eve_iu;
  CVec q_eve_ou;
  ElementLayout layout;
  UserMode mode = UserMode::Both;
  DecodingOrder order;
  double p_iu = 0.0;
  double p_ou = 0.0;
  double noise = 1.0;

  static BeamformingTask from_channels(const ChannelSet& channels, const ElementLayout& layout,
                                       UserMode mode, DecodingOrder order, double p_iu,
                                       double p_ou, double noise, bool zero_eavesdropper);
};

// Variable bookkeeping of one assembled subproblem (indices into x).
struct LiftedProblem {
  conic::ConeProgram program;
  int w_start = -1, w_side = 0;
  int ut_start = -1, ut_side = 0;
  int ur_start = -1, ur_side = 0;
  int lb_iu = -1, lb_ou = -1, ub_iu = -1, ub_ou = -1;
  int strong_sinr = -1;
  int rank_t = -1, rank_r = -1;
  int gap = -1;              // Dinkelbach slack
  int obj_epigraph = -1;     // statistical pipeline only
  int sop_weight_iu = -1, sop_weight_ou = -1;
  double sop_weight_scale = 1.0;
  double gamma0_iu = 1.0;    // per-user signal-slack normalizations
  double gamma0_ou = 1.0;
  int core_scalars = 0;      // slack variables before epigraph auxiliaries
  int soc_blocks = 0;
};

// Assembles the rank-penalized Dinkelbach subproblem at the given local
// points. Throws std::invalid_argument if the local point violates the
// surface energy constraints.
LiftedProblem build_problem24(const BeamformingTask& task, const sca::BeamformingIterate& local,
                              double mu, double tau);

// Ratio update from a solved iterate (both ratios evaluated exactly from the
// normalized signal and leakage terms).
double dinkelbach_mu(const BeamformingTask& task, const sca::BeamformingIterate& iterate);

struct TwoLayerResult {
  sca::BeamformingIterate iterate;
  std::vector<double> gap_trace;  // Dinkelbach slack per inner iteration
  int inner_iterations = 0;
  int outer_iterations = 0;
};

// Raised when a convexified subproblem has an empty feasible set (possible
// around a poor local point for the disfavored decoding order).
struct SubproblemInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Default local-point initialization: maximum-ratio style combiner from the
// summed cascades, half-energy surface coefficients with random phases.
// strong_bias > 0.5 skews the energy split and the combiner toward the
// first-decoded user (used to restore feasibility of the first subproblem).
sca::BeamformingIterate make_initial_iterate(const BeamformingTask& task, std::uint64_t seed,
                                             double strong_bias = 0.5);

// Symmetrizes, re-projects and restores energy feasibility of solved
// matrices so they can serve as the next local points.
void sanitize_iterate(const BeamformingTask& task, sca::BeamformingIterate& it);

// Two-layer loop: inner SCA/Dinkelbach until the gap stabilizes, outer
// penalty growth until the rank penalties vanish and the extracted factors
// are numerically rank one.
TwoLayerResult two_layer_solve(const BeamformingTask& task, const Tolerances& tol,
                               std::uint64_t init_seed,
                               const std::optional<sca::BeamformingIterate>& warm_start = {});

struct PowerPair {
  double p_iu = 0.0;
  double p_ou = 0.0;
};

// Closed-form max-min power policy at fixed beamforming. Z values are the
// effective legitimate/eavesdropper channel gains (trace forms).
PowerPair optimal_power_full(double z_iu, double z_ou, double z_eve_iu, double z_eve_ou,
                             double noise, double p_max_iu, double p_max_ou,
                             DecodingOrder order);

// Exact min secrecy capacity of the lifted iterate at the given powers.
double min_secrecy_capacity(const BeamformingTask& task, const sca::BeamformingIterate& it,
                            double p_iu, double p_ou);

struct FullCsiOutcome {
  sca::BeamformingIterate iterate;
  CVec w;               // extracted receive beamforming vector (unit norm)
  StarCoefficients coeffs;  // full-length surface coefficients
  double p_iu = 0.0;
  double p_ou = 0.0;
  DecodingOrder order;
  std::vector<double> objective_trace;
  double objective = 0.0;
  SecrecyReport report;
  bool degraded = false;
  int alternations = 0;
};

struct AhbOptions {
  std::optional<ElementLayout> layout;  // defaults to every element on both sides
  bool zero_eavesdropper = false;
  std::uint64_t init_seed = 1;
};

// Alternating hybrid beamforming: alternates the two-layer joint
// beamforming stage with the closed-form power policy, for both decoding
// orders, and keeps the better outcome.
FullCsiOutcome ahb_solve(const ChannelSet& channels, const RadioConfig& radio,
                         const Tolerances& tol, const AhbOptions& options = {});

// Single decoding order variant (used by the alternation and baselines).
FullCsiOutcome ahb_solve_order(const ChannelSet& channels, const RadioConfig& radio,
                               const Tolerances& tol, DecodingOrder order,
                               const AhbOptions& options = {});

// One-user subproblem (time-shared baselines): the user transmits at its
// cap, only the relevant surface side is optimized. The reported capacity is
// NOT pre-log corrected; time-sharing factors are the caller's business.
FullCsiOutcome ahb_solve_single(const ChannelSet& channels, const RadioConfig& radio,
                                const Tolerances& tol, UserMode mode,
                                const AhbOptions& options = {});

}  // namespace fullcsi
}  // namespace starsec
