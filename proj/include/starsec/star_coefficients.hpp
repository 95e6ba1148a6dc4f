#pragma once

#include "starsec/common.hpp"

namespace starsec {

// Per-element energy-splitting surface state: amplitude-squared coefficients
// for the transmission and reflection sides plus the two phase profiles.
// Energy conservation requires beta_t[n] + beta_r[n] <= 1 per element.
struct StarCoefficients {
  Vec beta_t;   // amplitude-squared, transmission side, in [0,1]
  Vec beta_r;   // amplitude-squared, reflection side, in [0,1]
  Vec theta_t;  // phases in [0, 2*pi)
  Vec theta_r;

  int size() const { return static_cast<int>(beta_t.size()); }

  // Complex per-element coefficient vectors sqrt(beta) * exp(j*theta).
  CVec transmit_vector() const;
  CVec reflect_vector() const;

  // Throws if shapes disagree, any beta lies outside [0,1], or the
  // energy-conservation bound is violated beyond 1e-9.
  void validate() const;
};

StarCoefficients coefficients_from_vectors(const CVec& u_t, const CVec& u_r);

}  // namespace starsec
