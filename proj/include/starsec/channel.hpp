#pragma once

#include <cstdint>
#include <iosfwd>

#include "starsec/common.hpp"
#include "starsec/model.hpp"

namespace starsec {

// One realization of all links. Amplitude convention: each entry is
// sqrt(large-scale power gain) times a unit-variance small-scale coefficient.
// The surface-BS link is Rician, user/eavesdropper links are Rayleigh.
struct ChannelSet {
  CMat g;      // N x M, surface -> BS (includes path loss)
  CVec h_is;   // N, surface -> indoor user
  CVec h_os;   // N, surface -> outdoor user
  CVec h_es;   // N, surface -> eavesdropper
  double gain_bs = 0.0;   // large-scale power gains per link
  double gain_iu = 0.0;
  double gain_ou = 0.0;
  double gain_eve = 0.0;
  CMat g_small;    // normalized small-scale component of g (unit variance mix)
  CVec h_is_small;
  CVec h_os_small;
  CVec h_es_small;

  int elements() const { return static_cast<int>(g.rows()); }
  int antennas() const { return static_cast<int>(g.cols()); }
};

// Cascaded two-hop forms: per-user M x N matrices q_u with
// w^H (G^H diag(coeff) h_u) = w^H q_u u, and the N-vector eavesdropper
// cascades h_es (conj) element-wise with each user link.
struct CascadedForms {
  CMat q_iu;      // M x N
  CMat q_ou;      // M x N
  CVec q_eve_iu;  // N
  CVec q_eve_ou;  // N
};

// Deterministic per-seed sampling. The LoS component of the surface-BS link
// uses half-wavelength uniform-linear-array steering vectors with angles
// taken from the geometry (a documented convention; the setup leaves the
// array geometry open).
ChannelSet sample_channels(const SystemGeometry& geometry, const RadioConfig& radio,
                           std::uint64_t rng_seed);

CascadedForms cascaded_forms(const ChannelSet& channels);

// Plain-text fixture format (complex entries as "re,im").
void dump_channels(const ChannelSet& channels, std::ostream& os);
ChannelSet load_channels(std::istream& is);

}  // namespace starsec
