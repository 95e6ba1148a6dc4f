#include "starsec/channel.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "starsec/rng.hpp"

namespace starsec {

namespace {

// Half-wavelength ULA steering vector for an azimuth measured in the x-y
// plane of the deployment.
CVec steering(int size, double azimuth) {
  CVec a(size);
  for (int i = 0; i < size; ++i) a(i) = std::polar(1.0, kPi * i * std::sin(azimuth));
  return a;
}

void write_cmat(std::ostream& os, const CMat& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << m(r, c).real() << ',' << m(r, c).imag();
    }
    os << '\n';
  }
}

CMat read_cmat(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  is >> rows >> cols;
  if (!is || rows < 0 || cols < 0) throw std::runtime_error("channel load: bad matrix header");
  CMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      is >> tok;
      auto comma = tok.find(',');
      if (comma == std::string::npos) throw std::runtime_error("channel load: bad complex token");
      m(r, c) = Complex(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
    }
  return m;
}

}  // namespace

ChannelSet sample_channels(const SystemGeometry& geometry, const RadioConfig& radio,
                           std::uint64_t rng_seed) {
  geometry.validate();
  radio.validate();
  const int n = radio.num_ris_elements;
  const int m = radio.num_bs_antennas;

  ChannelSet cs;
  cs.gain_bs = path_loss(geometry.dist_bs(), geometry.alpha_bs, geometry.reference_loss_db);
  cs.gain_iu = path_loss(geometry.dist_iu(), geometry.alpha_iu, geometry.reference_loss_db);
  cs.gain_ou = path_loss(geometry.dist_ou(), geometry.alpha_ou, geometry.reference_loss_db);
  cs.gain_eve = path_loss(geometry.dist_eve(), geometry.alpha_eve, geometry.reference_loss_db);

  // Independent substreams per link so adding antennas/elements to one link
  // does not shift the draws of another.
  Rng rng_g(rng_seed, {0x47});
  Rng rng_iu(rng_seed, {0x49});
  Rng rng_ou(rng_seed, {0x4f});
  Rng rng_eve(rng_seed, {0x45});

  const Eigen::Vector3d d = geometry.bs_pos - geometry.ris_pos;
  const double az = std::atan2(d.y(), d.x());
  const CMat los = steering(n, az) * steering(m, az).adjoint();
  const CMat nlos = rng_g.cnormal_matrix(n, m);
  const double k = radio.rician_factor;
  cs.g_small = std::sqrt(k / (1.0 + k)) * los + std::sqrt(1.0 / (1.0 + k)) * nlos;
  cs.g = std::sqrt(cs.gain_bs) * cs.g_small;

  cs.h_is_small = rng_iu.cnormal_vector(n);
  cs.h_os_small = rng_ou.cnormal_vector(n);
  cs.h_es_small = rng_eve.cnormal_vector(n);
  cs.h_is = std::sqrt(cs.gain_iu) * cs.h_is_small;
  cs.h_os = std::sqrt(cs.gain_ou) * cs.h_os_small;
  cs.h_es = std::sqrt(cs.gain_eve) * cs.h_es_small;
  return cs;
}

CascadedForms cascaded_forms(const ChannelSet& channels) {
  CascadedForms f;
  f.q_iu = channels.g.adjoint() * CMat(channels.h_is.asDiagonal());
  f.q_ou = channels.g.adjoint() * CMat(channels.h_os.asDiagonal());
  f.q_eve_iu = channels.h_es.conjugate().cwiseProduct(channels.h_is);
  f.q_eve_ou = channels.h_es.conjugate().cwiseProduct(channels.h_os);
  return f;
}

void dump_channels(const ChannelSet& channels, std::ostream& os) {
  os.precision(17);
  os << "star-secrecy-channels 1\n";
  os << channels.gain_bs << ' ' << channels.gain_iu << ' ' << channels.gain_ou << ' '
     << channels.gain_eve << '\n';
  write_cmat(os, channels.g);
  write_cmat(os, channels.h_is);
  write_cmat(os, channels.h_os);
  write_cmat(os, channels.h_es);
  write_cmat(os, channels.g_small);
  write_cmat(os, channels.h_is_small);
  write_cmat(os, channels.h_os_small);
  write_cmat(os, channels.h_es_small);
}

ChannelSet load_channels(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "star-secrecy-channels" || version != 1)
    throw std::runtime_error("channel load: unrecognized header");
  ChannelSet cs;
  is >> cs.gain_bs >> cs.gain_iu >> cs.gain_ou >> cs.gain_eve;
  cs.g = read_cmat(is);
  cs.h_is = read_cmat(is);
  cs.h_os = read_cmat(is);
  cs.h_es = read_cmat(is);
  cs.g_small = read_cmat(is);
  cs.h_is_small = read_cmat(is);
  cs.h_os_small = read_cmat(is);
  cs.h_es_small = read_cmat(is);
  return cs;
}

}  // namespace starsec
