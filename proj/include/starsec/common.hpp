#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace starsec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

inline double log2p1(double snr) { return std::log2(1.0 + snr); }

// Clamps tiny negative floating-point residue to zero; genuinely negative
// values are left alone so callers can detect them.
inline double clamp_tiny_negative(double v, double tol = 1e-12) {
  return (v < 0.0 && v > -tol) ? 0.0 : v;
}

}  // namespace starsec
