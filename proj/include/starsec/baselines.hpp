#pragma once

#include <cstdint>
#include <optional>

#include "starsec/channel.hpp"
#include "starsec/fullcsi.hpp"
#include "starsec/model.hpp"
#include "starsec/star_coefficients.hpp"
#include "starsec/statcsi.hpp"

namespace starsec {
namespace baselines {

enum class SchemeKind { StarNoma, StarOma, CRisNoma, CRisOma, RandomPhase };

const char* to_string(SchemeKind kind);
std::optional<SchemeKind> scheme_from_string(const std::string& name);

struct SchemeSpec {
  SchemeKind kind = SchemeKind::StarNoma;
  std::optional<int> quantization_bits;  // snap surface coefficients to q bits
};

// Uniform random phases; per-element energy split s / (1 - s) with s
// uniform on [0,1] (the energy-splitting constraint holds by construction).
StarCoefficients random_coefficients(int n, std::uint64_t seed);

// Nearest-grid snap: phases on {2 pi k / 2^q} under circular distance,
// amplitude-squared values on {k / (2^q - 1)}. If snapping breaks energy
// conservation on an element, the larger coefficient drops one grid step.
StarCoefficients quantize_coefficients(const StarCoefficients& continuous, int bits);

struct SchemeEvaluation {
  double metric = 0.0;  // min secrecy capacity (full) or max SOP (statistical)
  bool infeasible = false;
  SecrecyReport report;
};

SchemeEvaluation evaluate_scheme_full(const SchemeSpec& spec, const ChannelSet& channels,
                                      const RadioConfig& radio, const Tolerances& tol,
                                      std::uint64_t seed);

SchemeEvaluation evaluate_scheme_stat(const SchemeSpec& spec, const ChannelSet& channels,
                                      const RadioConfig& radio, const RateConfig& rates,
                                      const Tolerances& tol, std::uint64_t seed);

// Min achievable rate with the eavesdropper terms removed, optionally after
// snapping the optimized surface coefficients to a q-bit grid (the receive
// vector and powers are re-derived in closed form at the snapped point).
double transmission_rate_no_eve(const ChannelSet& channels, const RadioConfig& radio,
                                const Tolerances& tol, std::uint64_t seed,
                                std::optional<int> quantization_bits = {});

}  // namespace baselines
}  // namespace starsec
