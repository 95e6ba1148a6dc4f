// Homogeneous self-dual embedding interior-point solver over the
// NonNeg x SecondOrder x Psd cone product, with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step. The KKT system is reduced onto the
// primal variables and factorized densely, which is the right trade-off for
// the problem sizes produced by the beamforming builders (a few hundred
// variables).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "starsec/conic.hpp"

namespace starsec {
namespace conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Block {
  ConeKind kind = ConeKind::NonNeg;
  int size = 0;    // rows for NonNeg/SOC, matrix side for PSD
  int rows = 0;
  int offset = 0;  // row offset within the cone (non-equality) rows
  // PSD fast path: block rows are -I over a contiguous variable range.
  bool identity = false;
  int identity_col = 0;
  Mat dense_g;  // generic PSD path
  Mat jgram;    // SOC: packed G^T J G over the support columns
  Mat packed_g; // SOC: rows x support columns
  std::vector<std::pair<int, int>> support;  // (global start, length) runs
  std::vector<std::vector<std::pair<int, double>>> nn_rows;  // NonNeg supports

  // Nesterov-Todd scaling state.
  Vec nn_w;       // sqrt(s/z)
  double soc_eta2 = 1.0;
  Vec soc_wbar;
  Mat psd_r, psd_rinv;
  Vec psd_lam;
  Mat psd_m;  // (R R^T)^{-1}
};

Mat smat_side(const Vec& v, int side) {
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  Mat x(side, side);
  int k = 0;
  for (int c = 0; c < side; ++c) {
    x(c, c) = v(k++);
    for (int r = c + 1; r < side; ++r) {
      x(r, c) = x(c, r) = inv_rt2 * v(k++);
    }
  }
  return x;
}

Vec svec_side(const Mat& x) {
  const int side = static_cast<int>(x.rows());
  const double rt2 = std::sqrt(2.0);
  Vec v(svec_dim(side));
  int k = 0;
  for (int c = 0; c < side; ++c) {
    v(k++) = x(c, c);
    for (int r = c + 1; r < side; ++r) v(k++) = rt2 * 0.5 * (x(r, c) + x(c, r));
  }
  return v;
}

class HsdSolver {
 public:
  HsdSolver(const ConeProgram& program, const SolveOptions& options);
  ConeSolution run();

 private:
  using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  void setup(const ConeProgram& program);
  void identity_scaling();
  bool update_scaling();
  void factorize();
  void kkt_solve(const Vec& bx, const Vec& by, const Vec& bz, Vec& dx, Vec& dy, Vec& dz,
                 bool refine);
  void kkt_solve_raw(const Vec& r1, const Vec& by, Vec& dx, Vec& dy) const;
  mutable double last_refine_err_ = 0.0;

  Vec scale_w(const Vec& v) const;
  Vec scale_wt(const Vec& v) const;
  Vec apply_w2inv(const Vec& v) const;
  Vec apply_w2(const Vec& v) const;
  Vec cone_product(const Vec& u, const Vec& v) const;
  Vec lambda_divide(const Vec& d) const;
  Vec cone_identity() const;
  double max_step(const Vec& d) const;  // boundary step for lambda + alpha d
  Vec bring_to_cone(const Vec& r) const;

  SolveOptions opts_;
  int n_ = 0, p_ = 0, m_ = 0;
  Vec c_;
  Mat aeq_;
  Vec beq_;
  SpMat g_;
  Vec h_;
  std::vector<Block> blocks_;
  double degree_ = 0.0;

  // Scaling bookkeeping for reporting in original units.
  double cost_scale_ = 1.0;
  Vec row_scale_;     // per cone row
  Vec eq_scale_;      // per equality row
  Vec col_scale_;     // per variable (1 for matrix svec columns)
  std::vector<int> cone_to_orig_;
  std::vector<int> eq_to_orig_;
  double norm_c0_ = 0.0, norm_h0_ = 0.0, norm_b0_ = 0.0;

  using LdMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LdVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  Eigen::LLT<Mat> h_llt_;
  Eigen::LLT<Mat> schur_llt_;
  Eigen::LLT<LdMat> h_llt_ld_;
  Eigen::LLT<LdMat> schur_llt_ld_;
  double reg_ = 1e-10;

  // Iterates.
  Vec x_, y_, z_, s_, lambda_;
  double tau_ = 1.0, kap_ = 1.0;
};

HsdSolver::HsdSolver(const ConeProgram& program, const SolveOptions& options) : opts_(options) {
  setup(program);
}

void HsdSolver::setup(const ConeProgram& program) {
  program.validate();
  n_ = program.num_vars;

  // Split rows into equalities (Zero blocks) and cone rows, applying
  // per-block equilibration on the way.
  int orig_row = 0;
  std::vector<Eigen::Triplet<double>> g_trips;
  std::vector<double> h_vals, beq_vals, row_scales, eq_scales;
  std::vector<std::vector<std::pair<int, double>>> eq_rows;

  Eigen::SparseMatrix<double, Eigen::RowMajor> a_row(program.constraint);

  for (const auto& cb : program.cones) {
    const int rows = cb.rows();
    if (cb.kind == ConeKind::Zero) {
      for (int r = 0; r < rows; ++r) {
        std::vector<std::pair<int, double>> row;
        double mx = std::abs(program.rhs(orig_row + r));
        for (SpMat::InnerIterator it(a_row, orig_row + r); it; ++it) {
          row.emplace_back(static_cast<int>(it.col()), it.value());
          mx = std::max(mx, std::abs(it.value()));
        }
        const double e = mx > 0 ? 1.0 / mx : 1.0;
        for (auto& t : row) t.second *= e;
        eq_rows.push_back(std::move(row));
        beq_vals.push_back(e * program.rhs(orig_row + r));
        eq_scales.push_back(e);
        eq_to_orig_.push_back(orig_row + r);
      }
      orig_row += rows;
      continue;
    }

    Block blk;
    blk.kind = cb.kind;
    blk.size = cb.size;
    blk.rows = rows;
    blk.offset = static_cast<int>(h_vals.size());

    // Identity detection for PSD variable blocks.
    if (cb.kind == ConeKind::Psd) {
      blk.identity = true;
      int first_col = -1;
      for (int r = 0; r < rows && blk.identity; ++r) {
        int nnz = 0, col = -1;
        double val = 0;
        for (SpMat::InnerIterator it(a_row, orig_row + r); it; ++it) {
          ++nnz;
          col = static_cast<int>(it.col());
          val = it.value();
        }
        if (nnz != 1 || std::abs(val + 1.0) > 0 || program.rhs(orig_row + r) != 0.0) {
          blk.identity = false;
          break;
        }
        if (r == 0) {
          first_col = col;
        } else if (col != first_col + r) {
          blk.identity = false;
        }
      }
      if (blk.identity) blk.identity_col = first_col;
    }

    double block_scale = 1.0;
    if (!(cb.kind == ConeKind::Psd && blk.identity)) {
      double mx = 0;
      for (int r = 0; r < rows; ++r) {
        mx = std::max(mx, std::abs(program.rhs(orig_row + r)));
        for (SpMat::InnerIterator it(a_row, orig_row + r); it; ++it)
          mx = std::max(mx, std::abs(it.value()));
      }
      if (cb.kind == ConeKind::NonNeg) {
        // each NonNeg row is its own cone; scaled per row below
      } else if (mx > 0) {
        block_scale = 1.0 / mx;
      }
    }

    for (int r = 0; r < rows; ++r) {
      double e = block_scale;
      if (cb.kind == ConeKind::NonNeg) {
        double mx = std::abs(program.rhs(orig_row + r));
        for (SpMat::InnerIterator it(a_row, orig_row + r); it; ++it)
          mx = std::max(mx, std::abs(it.value()));
        e = mx > 0 ? 1.0 / mx : 1.0;
      }
      const int out_row = static_cast<int>(h_vals.size());
      for (SpMat::InnerIterator it(a_row, orig_row + r); it; ++it)
        g_trips.emplace_back(out_row, static_cast<int>(it.col()), e * it.value());
      h_vals.push_back(e * program.rhs(orig_row + r));
      row_scales.push_back(e);
      cone_to_orig_.push_back(orig_row + r);
    }

    if (cb.kind == ConeKind::NonNeg)
      degree_ += rows;
    else if (cb.kind == ConeKind::SecondOrder)
      degree_ += 1;
    else
      degree_ += cb.size;
    blocks_.push_back(std::move(blk));
    orig_row += rows;
  }

  m_ = static_cast<int>(h_vals.size());
  p_ = static_cast<int>(beq_vals.size());
  g_.resize(m_, n_);
  g_.setFromTriplets(g_trips.begin(), g_trips.end());
  h_ = Eigen::Map<const Vec>(h_vals.data(), m_);
  row_scale_ = Eigen::Map<const Vec>(row_scales.data(), m_);
  aeq_ = Mat::Zero(p_, n_);
  for (int r = 0; r < p_; ++r)
    for (const auto& [col, val] : eq_rows[r]) aeq_(r, col) = val;
  beq_ = Eigen::Map<const Vec>(beq_vals.data(), std::max(p_, 0));
  eq_scale_ = Eigen::Map<const Vec>(eq_scales.data(), std::max(p_, 0));

  // Column equilibration for scalar variables. Matrix svec columns stay at
  // unit scale so the PSD blocks keep their identity structure.
  col_scale_ = Vec::Ones(n_);
  {
    std::vector<bool> locked(n_, false);
    for (const auto& blk : blocks_)
      if (blk.kind == ConeKind::Psd && blk.identity)
        for (int j = 0; j < blk.rows; ++j) locked[blk.identity_col + j] = true;
    Vec colmax = Vec::Zero(n_);
    for (int r = 0; r < m_; ++r)
      for (SpMat::InnerIterator it(g_, r); it; ++it)
        colmax(it.col()) = std::max(colmax(it.col()), std::abs(it.value()));
    for (int r = 0; r < p_; ++r)
      for (int j = 0; j < n_; ++j) colmax(j) = std::max(colmax(j), std::abs(aeq_(r, j)));
    for (int j = 0; j < n_; ++j)
      if (!locked[j] && colmax(j) > 0) col_scale_(j) = 1.0 / colmax(j);
    for (int r = 0; r < m_; ++r)
      for (SpMat::InnerIterator it(g_, r); it; ++it) it.valueRef() *= col_scale_(it.col());
    for (int r = 0; r < p_; ++r)
      for (int j = 0; j < n_; ++j) aeq_(r, j) *= col_scale_(j);
  }

  cost_scale_ = std::max(1.0, (program.objective.cwiseProduct(col_scale_)).cwiseAbs().maxCoeff());
  c_ = program.objective.cwiseProduct(col_scale_) / cost_scale_;
  norm_c0_ = program.objective.norm();
  norm_h0_ = 0.0;
  for (int r = 0; r < m_; ++r) norm_h0_ += std::pow(h_(r) / row_scale_(r), 2);
  norm_h0_ = std::sqrt(norm_h0_);
  norm_b0_ = 0.0;
  for (int r = 0; r < p_; ++r) norm_b0_ += std::pow(beq_(r) / eq_scale_(r), 2);
  norm_b0_ = std::sqrt(norm_b0_);

  // Precompute per-block Gram data for the KKT reduction.
  for (auto& blk : blocks_) {
    if (blk.kind == ConeKind::NonNeg) {
      blk.nn_rows.resize(blk.rows);
      for (int r = 0; r < blk.rows; ++r)
        for (SpMat::InnerIterator it(g_, blk.offset + r); it; ++it)
          blk.nn_rows[r].emplace_back(static_cast<int>(it.col()), it.value());
    } else if (blk.kind == ConeKind::SecondOrder) {
      // Support columns of the block, as contiguous runs.
      std::vector<bool> used(n_, false);
      for (int r = 0; r < blk.rows; ++r)
        for (SpMat::InnerIterator it(g_, blk.offset + r); it; ++it) used[it.col()] = true;
      std::vector<int> cols;
      for (int j = 0; j < n_; ++j)
        if (used[j]) cols.push_back(j);
      const int sup = static_cast<int>(cols.size());
      std::vector<int> col_to_packed(n_, -1);
      for (int j = 0; j < sup; ++j) col_to_packed[cols[j]] = j;
      int run_start = 0;
      for (int j = 1; j <= sup; ++j) {
        if (j == sup || cols[j] != cols[j - 1] + 1) {
          blk.support.emplace_back(cols[run_start], j - run_start);
          run_start = j;
        }
      }
      Mat gt = Mat::Zero(blk.rows, sup);
      for (int r = 0; r < blk.rows; ++r)
        for (SpMat::InnerIterator it(g_, blk.offset + r); it; ++it)
          gt(r, col_to_packed[it.col()]) = it.value();
      Mat j = -Mat::Identity(blk.rows, blk.rows);
      j(0, 0) = 1.0;
      blk.jgram = gt.transpose() * j * gt;
      blk.packed_g = std::move(gt);
    } else if (blk.kind == ConeKind::Psd && !blk.identity) {
      blk.dense_g = Mat::Zero(blk.rows, n_);
      for (int r = 0; r < blk.rows; ++r)
        for (SpMat::InnerIterator it(g_, blk.offset + r); it; ++it)
          blk.dense_g(r, it.col()) = it.value();
    }
  }
}

void HsdSolver::identity_scaling() {
  for (auto& blk : blocks_) {
    switch (blk.kind) {
      case ConeKind::NonNeg:
        blk.nn_w = Vec::Ones(blk.rows);
        break;
      case ConeKind::SecondOrder:
        blk.soc_eta2 = 1.0;
        blk.soc_wbar = Vec::Zero(blk.rows);
        blk.soc_wbar(0) = 1.0;
        break;
      case ConeKind::Psd:
        blk.psd_r = Mat::Identity(blk.size, blk.size);
        blk.psd_rinv = blk.psd_r;
        blk.psd_m = blk.psd_r;
        blk.psd_lam = Vec::Ones(blk.size);
        break;
      default:
        break;
    }
  }
}

bool HsdSolver::update_scaling() {
  for (auto& blk : blocks_) {
    const auto s = s_.segment(blk.offset, blk.rows);
    const auto z = z_.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      if ((s.array() <= 0).any() || (z.array() <= 0).any()) return false;
      blk.nn_w = (s.array() / z.array()).sqrt().matrix();
    } else if (blk.kind == ConeKind::SecondOrder) {
      const double sres = s(0) * s(0) - s.tail(blk.rows - 1).squaredNorm();
      const double zres = z(0) * z(0) - z.tail(blk.rows - 1).squaredNorm();
      if (sres <= 0 || zres <= 0) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      Vec sbar = s / snorm, zbar = z / znorm;
      blk.soc_eta2 = snorm / znorm;
      double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
      Vec wbar(blk.rows);
      wbar(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
      wbar.tail(blk.rows - 1) =
          (0.5 / gamma) * (sbar.tail(blk.rows - 1) - zbar.tail(blk.rows - 1));
      blk.soc_wbar = std::move(wbar);
    } else {
      Mat sm = smat_side(s, blk.size);
      Mat zm = smat_side(z, blk.size);
      Eigen::LLT<Mat> ls(sm), lz(zm);
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      Mat l_s = ls.matrixL();
      Mat l_z = lz.matrixL();
      Eigen::JacobiSVD<Mat> svd(l_z.transpose() * l_s,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
      Vec sig = svd.singularValues();
      if ((sig.array() <= 0).any()) return false;
      Vec sig_isqrt = sig.array().rsqrt().matrix();
      blk.psd_r = l_s * svd.matrixV() * sig_isqrt.asDiagonal();
      blk.psd_rinv = sig_isqrt.asDiagonal() * svd.matrixU().transpose() * l_z.transpose();
      blk.psd_lam = sig;
      blk.psd_m = blk.psd_rinv.transpose() * blk.psd_rinv;
      blk.psd_m = 0.5 * (blk.psd_m + blk.psd_m.transpose().eval());
    }
  }
  lambda_ = scale_w(z_);
  return true;
}

Vec HsdSolver::scale_w(const Vec& v) const {
  Vec out(m_);
  for (const auto& blk : blocks_) {
    const auto vi = v.segment(blk.offset, blk.rows);
    auto oi = out.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      oi = blk.nn_w.cwiseProduct(vi);
    } else if (blk.kind == ConeKind::SecondOrder) {
      const Vec& w = blk.soc_wbar;
      const double eta = std::sqrt(blk.soc_eta2);
      const double zeta = w.tail(blk.rows - 1).dot(vi.tail(blk.rows - 1));
      oi(0) = eta * (w(0) * vi(0) + zeta);
      oi.tail(blk.rows - 1) =
          eta * (vi.tail(blk.rows - 1) + (vi(0) + zeta / (1.0 + w(0))) * w.tail(blk.rows - 1));
    } else {
      Mat vm = smat_side(vi, blk.size);
      oi = svec_side(blk.psd_r.transpose() * vm * blk.psd_r);
    }
  }
  return out;
}

Vec HsdSolver::scale_wt(const Vec& v) const {
  Vec out(m_);
  for (const auto& blk : blocks_) {
    const auto vi = v.segment(blk.offset, blk.rows);
    auto oi = out.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      oi = blk.nn_w.cwiseProduct(vi);
    } else if (blk.kind == ConeKind::SecondOrder) {
      const Vec& w = blk.soc_wbar;
      const double eta = std::sqrt(blk.soc_eta2);
      const double zeta = w.tail(blk.rows - 1).dot(vi.tail(blk.rows - 1));
      oi(0) = eta * (w(0) * vi(0) + zeta);
      oi.tail(blk.rows - 1) =
          eta * (vi.tail(blk.rows - 1) + (vi(0) + zeta / (1.0 + w(0))) * w.tail(blk.rows - 1));
    } else {
      Mat vm = smat_side(vi, blk.size);
      oi = svec_side(blk.psd_r * vm * blk.psd_r.transpose());
    }
  }
  return out;
}

Vec HsdSolver::apply_w2inv(const Vec& v) const {
  Vec out(m_);
  for (const auto& blk : blocks_) {
    const auto vi = v.segment(blk.offset, blk.rows);
    auto oi = out.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      oi = vi.cwiseQuotient(blk.nn_w.cwiseAbs2());
    } else if (blk.kind == ConeKind::SecondOrder) {
      // (W^2)^{-1} = eta^{-2} (2 u u^T - J), u = J wbar.
      Vec u = -blk.soc_wbar;
      u(0) = blk.soc_wbar(0);
      Vec jv = -vi;
      jv(0) = vi(0);
      oi = (2.0 * u.dot(vi)) * u - jv;
      oi /= blk.soc_eta2;
    } else {
      Mat vm = smat_side(vi, blk.size);
      oi = svec_side(blk.psd_m * vm * blk.psd_m);
    }
  }
  return out;
}

Vec HsdSolver::apply_w2(const Vec& v) const {
  Vec out(m_);
  for (const auto& blk : blocks_) {
    const auto vi = v.segment(blk.offset, blk.rows);
    auto oi = out.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      oi = vi.cwiseProduct(blk.nn_w.cwiseAbs2());
    } else if (blk.kind == ConeKind::SecondOrder) {
      Vec jv = -vi;
      jv(0) = vi(0);
      oi = blk.soc_eta2 * ((2.0 * blk.soc_wbar.dot(vi)) * blk.soc_wbar - jv);
    } else {
      Mat vm = smat_side(vi, blk.size);
      Mat rrt = blk.psd_r * blk.psd_r.transpose();
      oi = svec_side(rrt * vm * rrt);
    }
  }
  return out;
}

Vec HsdSolver::cone_product(const Vec& u, const Vec& v) const {
  Vec out(m_);
  for (const auto& blk : blocks_) {
    const auto ui = u.segment(blk.offset, blk.rows);
    const auto vi = v.segment(blk.offset, blk.rows);
    auto oi = out.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      oi = ui.cwiseProduct(vi);
    } else if (blk.kind == ConeKind::SecondOrder) {
      oi(0) = ui.dot(vi);
      oi.tail(blk.rows - 1) = ui(0) * vi.tail(blk.rows - 1) + vi(0) * ui.tail(blk.rows - 1);
    } else {
      Mat um = smat_side(ui, blk.size);
      Mat vm = smat_side(vi, blk.size);
      oi = svec_side(0.5 * (um * vm + vm * um));
    }
  }
  return out;
}

Vec HsdSolver::lambda_divide(const Vec& d) const {
  Vec out(m_);
  for (const auto& blk : blocks_) {
    const auto li = lambda_.segment(blk.offset, blk.rows);
    const auto di = d.segment(blk.offset, blk.rows);
    auto oi = out.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      oi = di.cwiseQuotient(li);
    } else if (blk.kind == ConeKind::SecondOrder) {
      const double rho = li(0) * li(0) - li.tail(blk.rows - 1).squaredNorm();
      const double zeta = li.tail(blk.rows - 1).dot(di.tail(blk.rows - 1));
      oi(0) = (li(0) * di(0) - zeta) / rho;
      oi.tail(blk.rows - 1) = ((zeta / li(0) - di(0)) / rho) * li.tail(blk.rows - 1) +
                              di.tail(blk.rows - 1) / li(0);
    } else {
      // With the SVD-based scaling lambda is diagonal.
      Mat dm = smat_side(di, blk.size);
      Mat xm(blk.size, blk.size);
      for (int i = 0; i < blk.size; ++i)
        for (int j = 0; j < blk.size; ++j)
          xm(i, j) = 2.0 * dm(i, j) / (blk.psd_lam(i) + blk.psd_lam(j));
      oi = svec_side(xm);
    }
  }
  return out;
}

Vec HsdSolver::cone_identity() const {
  Vec e = Vec::Zero(m_);
  for (const auto& blk : blocks_) {
    if (blk.kind == ConeKind::NonNeg) {
      e.segment(blk.offset, blk.rows).setOnes();
    } else if (blk.kind == ConeKind::SecondOrder) {
      e(blk.offset) = 1.0;
    } else {
      int k = blk.offset;
      for (int c = 0; c < blk.size; ++c) {
        e(k) = 1.0;
        k += blk.size - c;
      }
    }
  }
  return e;
}

double HsdSolver::max_step(const Vec& d) const {
  double alpha = kInf;
  for (const auto& blk : blocks_) {
    const auto li = lambda_.segment(blk.offset, blk.rows);
    const auto di = d.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      for (int i = 0; i < blk.rows; ++i)
        if (di(i) < 0) alpha = std::min(alpha, -li(i) / di(i));
    } else if (blk.kind == ConeKind::SecondOrder) {
      const double aq = di(0) * di(0) - di.tail(blk.rows - 1).squaredNorm();
      const double bq = li(0) * di(0) - li.tail(blk.rows - 1).dot(di.tail(blk.rows - 1));
      const double cq = li(0) * li(0) - li.tail(blk.rows - 1).squaredNorm();
      const double disc = bq * bq - aq * cq;
      double bound = kInf;
      if (std::abs(aq) < 1e-14 * std::max(1.0, cq)) {
        if (bq < 0) bound = -cq / (2.0 * bq);
      } else if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double r1 = (-bq - sq) / aq;
        const double r2 = (-bq + sq) / aq;
        if (r1 > 0) bound = std::min(bound, r1);
        if (r2 > 0) bound = std::min(bound, r2);
      }
      if (di(0) < 0) bound = std::min(bound, -li(0) / di(0));
      alpha = std::min(alpha, bound);
    } else {
      Mat dm = smat_side(di, blk.size);
      for (int i = 0; i < blk.size; ++i)
        for (int j = 0; j < blk.size; ++j)
          dm(i, j) /= std::sqrt(blk.psd_lam(i) * blk.psd_lam(j));
      Eigen::SelfAdjointEigenSolver<Mat> eig(dm, Eigen::EigenvaluesOnly);
      const double lmin = eig.eigenvalues().minCoeff();
      if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
    }
  }
  return alpha;
}

Vec HsdSolver::bring_to_cone(const Vec& r) const {
  Vec s = r;
  for (const auto& blk : blocks_) {
    auto si = s.segment(blk.offset, blk.rows);
    if (blk.kind == ConeKind::NonNeg) {
      const double mn = si.minCoeff();
      if (mn <= 0) si.array() += 1.0 - mn;
    } else if (blk.kind == ConeKind::SecondOrder) {
      const double margin = si(0) - si.tail(blk.rows - 1).norm();
      if (margin <= 0) si(0) += 1.0 - margin;
    } else {
      Mat sm = smat_side(si, blk.size);
      Eigen::SelfAdjointEigenSolver<Mat> eig(sm, Eigen::EigenvaluesOnly);
      const double lmin = eig.eigenvalues().minCoeff();
      if (lmin <= 0) {
        int k = blk.offset;
        for (int c = 0; c < blk.size; ++c) {
          s(k) += 1.0 - lmin;
          k += blk.size - c;
        }
      }
    }
  }
  return s;
}

void HsdSolver::factorize() {
  const auto tstart = std::chrono::steady_clock::now();
  Mat hmat = Mat::Zero(n_, n_);
  for (const auto& blk : blocks_) {
    if (blk.kind == ConeKind::NonNeg) {
      for (int r = 0; r < blk.rows; ++r) {
        const double w2 = 1.0 / (blk.nn_w(r) * blk.nn_w(r));
        const auto& entries = blk.nn_rows[r];
        for (std::size_t a = 0; a < entries.size(); ++a)
          for (std::size_t b = 0; b <= a; ++b) {
            const double v = w2 * entries[a].second * entries[b].second;
            hmat(entries[a].first, entries[b].first) += v;
            if (a != b) hmat(entries[b].first, entries[a].first) += v;
          }
      }
    } else if (blk.kind == ConeKind::SecondOrder) {
      Vec u = -blk.soc_wbar;
      u(0) = blk.soc_wbar(0);
      Vec gu = blk.packed_g.transpose() * u;
      Mat packed = (2.0 / blk.soc_eta2) * (gu * gu.transpose()) - blk.jgram / blk.soc_eta2;
      int arow = 0;
      for (const auto& [ga, la] : blk.support) {
        int acol = 0;
        for (const auto& [gb, lb] : blk.support) {
          hmat.block(ga, gb, la, lb) += packed.block(arow, acol, la, lb);
          acol += lb;
        }
        arow += la;
      }
    } else if (blk.identity) {
      Mat ksym = congruence_coefficients(blk.psd_m);
      hmat.block(blk.identity_col, blk.identity_col, blk.rows, blk.rows) += ksym;
    } else {
      Mat y(blk.rows, n_);
      for (int col = 0; col < n_; ++col) {
        Mat vm = smat_side(blk.dense_g.col(col), blk.size);
        y.col(col) = svec_side(blk.psd_m * vm * blk.psd_m);
      }
      hmat.noalias() += blk.dense_g.transpose() * y;
    }
  }

  if (std::getenv("STARSEC_TIME_FACTOR")) {
    static double acc_assemble = 0;
    acc_assemble += std::chrono::duration<double>(std::chrono::steady_clock::now() - tstart).count();
    std::fprintf(stderr, "[factor] assemble-cum %.3f s\n", acc_assemble);
  }
  const double base = hmat.diagonal().cwiseAbs().maxCoeff();
  if (opts_.extended_precision) {
    LdMat hl = hmat.cast<long double>();
    long double reg = static_cast<long double>(std::max(reg_, 1e-16 * std::max(1.0, base)));
    for (int attempt = 0; attempt < 6; ++attempt) {
      LdMat hreg = hl + reg * LdMat::Identity(n_, n_);
      h_llt_ld_.compute(hreg);
      if (h_llt_ld_.info() == Eigen::Success) break;
      reg *= 100.0;
    }
    if (p_ > 0) {
      LdMat hinv_at = h_llt_ld_.solve(aeq_.cast<long double>().transpose().eval());
      LdMat schur = aeq_.cast<long double>() * hinv_at;
      schur += static_cast<long double>(1e-16) *
               std::max(static_cast<long double>(1.0),
                        schur.diagonal().cwiseAbs().maxCoeff()) *
               LdMat::Identity(p_, p_);
      schur_llt_ld_.compute(schur);
    }
    return;
  }
  double reg = std::max(reg_, 1e-13 * std::max(1.0, base));
  for (int attempt = 0; attempt < 6; ++attempt) {
    Mat hreg = hmat + reg * Mat::Identity(n_, n_);
    h_llt_.compute(hreg);
    if (h_llt_.info() == Eigen::Success) break;
    reg *= 100.0;
  }
  if (p_ > 0) {
    Mat hinv_at = h_llt_.solve(aeq_.transpose());
    Mat schur = aeq_ * hinv_at;
    schur += 1e-13 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff()) *
             Mat::Identity(p_, p_);
    schur_llt_.compute(schur);
  }
}

void HsdSolver::kkt_solve_raw(const Vec& r1, const Vec& by, Vec& dx, Vec& dy) const {
  if (opts_.extended_precision) {
    LdVec r1l = r1.cast<long double>();
    LdVec t = h_llt_ld_.solve(r1l);
    if (p_ > 0) {
      LdVec dyl = schur_llt_ld_.solve(aeq_.cast<long double>() * t - by.cast<long double>());
      LdVec dxl = h_llt_ld_.solve(r1l - aeq_.cast<long double>().transpose() * dyl);
      dy = dyl.cast<double>();
      dx = dxl.cast<double>();
    } else {
      dy.resize(0);
      dx = t.cast<double>();
    }
    return;
  }
  Vec t = h_llt_.solve(r1);
  if (p_ > 0) {
    dy = schur_llt_.solve(aeq_ * t - by);
    dx = h_llt_.solve(r1 - aeq_.transpose() * dy);
  } else {
    dy.resize(0);
    dx = t;
  }
}

void HsdSolver::kkt_solve(const Vec& bx, const Vec& by, const Vec& bz, Vec& dx, Vec& dy,
                          Vec& dz, bool refine) {
  Vec r1 = bx + g_.transpose() * apply_w2inv(bz);
  kkt_solve_raw(r1, by, dx, dy);
  dz = apply_w2inv(g_ * dx - bz);

  if (!refine) return;
  const double ref = 1.0 + std::max({bx.lpNorm<Eigen::Infinity>(),
                                     p_ > 0 ? by.lpNorm<Eigen::Infinity>() : 0.0,
                                     bz.lpNorm<Eigen::Infinity>()});
  double err_prev = std::numeric_limits<double>::max();
  Vec bdx = dx, bdy = dy, bdz = dz;
  for (int pass = 0; pass < 3; ++pass) {
    Vec ex = bx - (g_.transpose() * dz);
    if (p_ > 0) ex -= aeq_.transpose() * dy;
    Vec ey = p_ > 0 ? Vec(by - aeq_ * dx) : Vec();
    Vec ez = bz - (g_ * dx - apply_w2(dz));
    const double err = std::max({ex.lpNorm<Eigen::Infinity>(),
                                 p_ > 0 ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                                 ez.lpNorm<Eigen::Infinity>()});
    if (err >= err_prev) {
      // Diverging refinement: keep the best correction seen.
      dx = bdx;
      dy = bdy;
      dz = bdz;
      break;
    }
    last_refine_err_ = err / ref;
    bdx = dx;
    bdy = dy;
    bdz = dz;
    err_prev = err;
    if (err < 1e-12 * ref) break;
    Vec cx, cy, cz;
    Vec cr1 = ex + g_.transpose() * apply_w2inv(ez);
    kkt_solve_raw(cr1, ey, cx, cy);
    cz = apply_w2inv(g_ * cx - ez);
    dx += cx;
    if (p_ > 0) dy += cy;
    dz += cz;
  }
}

ConeSolution HsdSolver::run() {
  ConeSolution sol;

  // Initial point: least-norm style solves with identity scaling.
  identity_scaling();
  factorize();
  Vec dx, dy, dz;
  kkt_solve(Vec::Zero(n_), beq_, h_, dx, dy, dz, true);
  x_ = dx;
  s_ = bring_to_cone(-dz);
  kkt_solve(-c_, p_ > 0 ? Vec::Zero(p_) : Vec(), Vec::Zero(m_), dx, dy, dz, true);
  y_ = p_ > 0 ? dy : Vec();
  z_ = bring_to_cone(dz);
  tau_ = 1.0;
  kap_ = 1.0;

  double best_score = kInf;
  int best_iter = 0;
  Vec best_x = x_, best_y = y_, best_z = z_, best_s = s_;
  double best_tau = tau_, best_kap = kap_;
  double best_pres = kInf, best_dres = kInf, best_gap = kInf, best_obj = 0;

  const double tol = opts_.tolerance;
  const Vec e = cone_identity();

  SolveStatus status = SolveStatus::MaxIterations;
  int iter = 0;
  for (iter = 0; iter <= opts_.max_iterations; ++iter) {
    // Residuals of the homogeneous embedding.
    Vec px = g_.transpose() * z_ + c_ * tau_;
    if (p_ > 0) px += aeq_.transpose() * y_;
    Vec py = p_ > 0 ? Vec(aeq_ * x_ - beq_ * tau_) : Vec();
    Vec pz = g_ * x_ + s_ - h_ * tau_;
    const double cx = c_.dot(x_);
    const double by = p_ > 0 ? beq_.dot(y_) : 0.0;
    const double hz = h_.dot(z_);
    const double ptau = kap_ + cx + by + hz;

    // Statistics in original units.
    const double pcost = cost_scale_ * cx / tau_;
    const double dcost = -cost_scale_ * (hz + by) / tau_;
    double pres_z = 0.0;
    for (int r = 0; r < m_; ++r) pres_z += std::pow(pz(r) / row_scale_(r), 2);
    pres_z = std::sqrt(pres_z) / std::max(1.0, norm_h0_);
    double pres_y = 0.0;
    for (int r = 0; r < p_; ++r) pres_y += std::pow(py(r) / eq_scale_(r), 2);
    pres_y = std::sqrt(pres_y) / std::max(1.0, norm_b0_);
    const double pres = std::max(pres_z, pres_y) / tau_;
    const double dres = cost_scale_ * px.cwiseQuotient(col_scale_).norm() /
                        std::max(1.0, norm_c0_) / tau_;
    const double gap = cost_scale_ * s_.dot(z_) / (tau_ * tau_);
    const double relgap = std::abs(gap) / std::max({1.0, std::abs(pcost), std::abs(dcost)});

    if (opts_.verbose) {
      std::printf(
          "it %3d pcost % .6e dcost % .6e pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e ref %.1e\n",
          iter, pcost, dcost, pres, dres, relgap, tau_, kap_, last_refine_err_);
    }

    const double score = std::max({pres, dres, relgap});
    if (iter > 8 && score > 1e3 * best_score) break;            // numerical breakdown
    if (best_score < 1e-3 && iter - best_iter > 12) break;       // converged then stalled
    if (score < best_score) {
      best_iter = iter;
      best_score = score;
      best_x = x_;
      best_y = y_;
      best_z = z_;
      best_s = s_;
      best_tau = tau_;
      best_kap = kap_;
      best_pres = pres;
      best_dres = dres;
      best_gap = relgap;
      best_obj = pcost;
    }

    if (pres <= tol && dres <= tol && relgap <= tol) {
      status = SolveStatus::Optimal;
      best_x = x_; best_y = y_; best_z = z_; best_s = s_;
      best_tau = tau_; best_kap = kap_;
      best_pres = pres; best_dres = dres; best_gap = relgap; best_obj = pcost;
      break;
    }

    // Infeasibility certificates.
    const double ny = p_ > 0 ? y_.norm() : 0.0;
    const double nz = z_.norm();
    const double nx = x_.norm();
    const double ns = s_.norm();
    Vec hresx = g_.transpose() * z_;
    if (p_ > 0) hresx += aeq_.transpose() * y_;
    hresx = hresx.cwiseQuotient(col_scale_);
    if (hz + by < -tol * std::max(1.0, ny + nz) && tau_ < kap_) {
      if (hresx.norm() / std::max(1.0, ny + nz) < tol * 0.1 ||
          hresx.norm() < tol * std::abs(hz + by)) {
        status = SolveStatus::PrimalInfeasible;
        best_x = x_; best_y = y_; best_z = z_; best_s = s_;
        best_tau = tau_; best_kap = kap_;
        break;
      }
    }
    if (cx < -tol * std::max(1.0, nx) && tau_ < kap_) {
      const double hresy = p_ > 0 ? (aeq_ * x_).norm() : 0.0;
      const double hresz = (g_ * x_ + s_).norm();
      if (std::max(hresy / std::max(1.0, nx), hresz / std::max(1.0, nx + ns)) <
          tol * 0.1) {
        status = SolveStatus::DualInfeasible;
        best_x = x_; best_y = y_; best_z = z_; best_s = s_;
        best_tau = tau_; best_kap = kap_;
        break;
      }
    }

    if (iter == opts_.max_iterations) break;

    if (!update_scaling()) break;
    factorize();

    const double mu = (s_.dot(z_) + tau_ * kap_) / (degree_ + 1.0);

    // Static solve used by both directions.
    Vec vx, vy, vz;
    kkt_solve(-c_, beq_, h_, vx, vy, vz, true);
    const double dot_v = c_.dot(vx) + (p_ > 0 ? beq_.dot(vy) : 0.0) + h_.dot(vz);
    double dtau_denom = dot_v - kap_ / tau_;
    if (std::abs(dtau_denom) < 1e-14) dtau_denom = -1e-14;

    // Affine (predictor) direction.
    Vec ux, uy, uz;
    kkt_solve(-px, p_ > 0 ? Vec(-py) : Vec(), s_ - pz, ux, uy, uz, true);
    const double dot_u =
        c_.dot(ux) + (p_ > 0 ? beq_.dot(uy) : 0.0) + h_.dot(uz);
    const double dtau_aff = (kap_ - ptau - dot_u) / dtau_denom;
    Vec dz_aff = uz + dtau_aff * vz;
    Vec wdz_aff = scale_w(dz_aff);
    Vec wts_aff = -wdz_aff - lambda_;  // W^{-T} ds for the affine step
    const double dkap_aff = -kap_ - (kap_ / tau_) * dtau_aff;

    double alpha_aff = std::min(max_step(wts_aff), max_step(wdz_aff));
    if (dtau_aff < 0) alpha_aff = std::min(alpha_aff, -tau_ / dtau_aff);
    if (dkap_aff < 0) alpha_aff = std::min(alpha_aff, -kap_ / dkap_aff);
    alpha_aff = std::min(alpha_aff, 1.0);

    double sigma = std::pow(1.0 - alpha_aff, 3);
    sigma = std::clamp(sigma, 1e-4, 0.999);

    // Combined (corrector) direction.
    Vec ds = sigma * mu * e - cone_product(lambda_, lambda_) -
             cone_product(wts_aff, wdz_aff);
    const double dkap_rhs = sigma * mu - tau_ * kap_ - dtau_aff * dkap_aff;
    const double eta = 1.0 - sigma;
    Vec lam_div = lambda_divide(ds);
    Vec bz2 = -eta * pz - scale_wt(lam_div);
    kkt_solve(-eta * px, p_ > 0 ? Vec(-eta * py) : Vec(), bz2, ux, uy, uz, true);
    const double dot_u2 =
        c_.dot(ux) + (p_ > 0 ? beq_.dot(uy) : 0.0) + h_.dot(uz);
    const double dtau = (-eta * ptau - dkap_rhs / tau_ - dot_u2) / dtau_denom;
    Vec dxs = ux + dtau * vx;
    Vec dys = p_ > 0 ? Vec(uy + dtau * vy) : Vec();
    Vec dzs = uz + dtau * vz;
    Vec wdz = scale_w(dzs);
    Vec wts = lam_div - wdz;  // W^{-T} ds
    Vec dss = scale_wt(wts);
    const double dkap = (dkap_rhs - kap_ * dtau) / tau_;

    double alpha = std::min(max_step(wts), max_step(wdz));
    if (dtau < 0) alpha = std::min(alpha, -tau_ / dtau);
    if (dkap < 0) alpha = std::min(alpha, -kap_ / dkap);
    alpha = std::min(0.99 * alpha, 1.0);

    x_ += alpha * dxs;
    if (p_ > 0) y_ += alpha * dys;
    z_ += alpha * dzs;
    s_ += alpha * dss;
    tau_ += alpha * dtau;
    kap_ += alpha * dkap;
  }

  // Report in original row order and units.
  const int total_rows = static_cast<int>(cone_to_orig_.size() + eq_to_orig_.size());
  sol.x = best_x.cwiseProduct(col_scale_) / best_tau;
  sol.y = Vec::Zero(total_rows);
  sol.s = Vec::Zero(total_rows);
  for (int r = 0; r < m_; ++r) {
    sol.s(cone_to_orig_[r]) = best_s(r) / best_tau / row_scale_(r);
    sol.y(cone_to_orig_[r]) = cost_scale_ * row_scale_(r) * best_z(r) / best_tau;
  }
  for (int r = 0; r < p_; ++r)
    sol.y(eq_to_orig_[r]) = cost_scale_ * eq_scale_(r) * best_y(r) / best_tau;
  sol.status = status;
  sol.objective = cost_scale_ * c_.dot(best_x) / best_tau;
  sol.primal_residual = best_pres;
  sol.dual_residual = best_dres;
  sol.duality_gap = best_gap;
  sol.iterations = iter;
  if (status == SolveStatus::PrimalInfeasible || status == SolveStatus::DualInfeasible) {
    // Certificate rays are reported unnormalized by tau.
    sol.x = best_x.cwiseProduct(col_scale_);
    for (int r = 0; r < m_; ++r) {
      sol.s(cone_to_orig_[r]) = best_s(r) / row_scale_(r);
      sol.y(cone_to_orig_[r]) = cost_scale_ * row_scale_(r) * best_z(r);
    }
    for (int r = 0; r < p_; ++r)
      sol.y(eq_to_orig_[r]) = cost_scale_ * eq_scale_(r) * best_y(r);
  }
  return sol;
}

}  // namespace

ConeSolution solve(const ConeProgram& program, const SolveOptions& options) {
  HsdSolver solver(program, options);
  return solver.run();
}

}  // namespace conic
}  // namespace starsec
