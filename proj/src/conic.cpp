#include "starsec/conic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace starsec {
namespace conic {

Vec svec(const Mat& x) {
  const int n = static_cast<int>(x.rows());
  const double rt2 = std::sqrt(2.0);
  Vec v(svec_dim(n));
  int k = 0;
  for (int c = 0; c < n; ++c) {
    v(k++) = x(c, c);
    for (int r = c + 1; r < n; ++r) v(k++) = rt2 * 0.5 * (x(r, c) + x(c, r));
  }
  return v;
}

Mat smat(const Vec& v) {
  const int dim = static_cast<int>(v.size());
  const int n = static_cast<int>(std::round((std::sqrt(8.0 * dim + 1.0) - 1.0) / 2.0));
  if (svec_dim(n) != dim) throw std::invalid_argument("smat: length is not a triangular number");
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  Mat x(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    x(c, c) = v(k++);
    for (int r = c + 1; r < n; ++r) {
      x(r, c) = inv_rt2 * v(k);
      x(c, r) = inv_rt2 * v(k);
      ++k;
    }
  }
  return x;
}

Mat complex_embed(const CMat& m) {
  const int r = static_cast<int>(m.rows());
  const int c = static_cast<int>(m.cols());
  Mat t(2 * r, 2 * c);
  const Mat a = m.real();
  const Mat b = m.imag();
  t.topLeftCorner(r, c) = a;
  t.bottomRightCorner(r, c) = a;
  t.topRightCorner(r, c) = -b;
  t.bottomLeftCorner(r, c) = b;
  return t;
}

Mat hermitian_embed(const CMat& h) {
  if (h.cols() != h.rows()) throw std::invalid_argument("hermitian_embed: square input required");
  return complex_embed(h);
}

CMat hermitian_unembed(const Mat& t) {
  const int side = static_cast<int>(t.rows());
  if (t.cols() != side || side % 2 != 0)
    throw std::invalid_argument("hermitian_unembed: even-sided square input required");
  const int n = side / 2;
  Mat a = 0.5 * (t.topLeftCorner(n, n) + t.bottomRightCorner(n, n));
  Mat b = 0.5 * (t.bottomLeftCorner(n, n) - t.topRightCorner(n, n));
  CMat h = a.cast<Complex>() + Complex(0, 1) * b.cast<Complex>();
  return 0.5 * (h + h.adjoint().eval());
}

Mat psd_project(const Mat& symmetric) {
  const double skew = (symmetric - symmetric.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  if (skew > 1e-9 * scale) throw std::domain_error("psd_project: input is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (symmetric + symmetric.transpose()));
  Vec d = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

CMat psd_project(const CMat& hermitian) {
  const double skew = (hermitian - hermitian.adjoint()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, hermitian.cwiseAbs().maxCoeff());
  if (skew > 1e-9 * scale) throw std::domain_error("psd_project: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (hermitian + hermitian.adjoint()));
  Vec d = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().adjoint();
}

std::pair<double, CVec> leading_eigenvector(const CMat& hermitian) {
  const double skew = (hermitian - hermitian.adjoint()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, hermitian.cwiseAbs().maxCoeff());
  if (skew > 1e-9 * scale) throw std::domain_error("leading_eigenvector: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (hermitian + hermitian.adjoint()));
  const int last = static_cast<int>(hermitian.rows()) - 1;
  CVec v = eig.eigenvectors().col(last);
  v.normalize();
  return {eig.eigenvalues()(last), v};
}

Mat congruence_coefficients(const Mat& b) {
  const int in_side = static_cast<int>(b.rows());
  const int out_side = static_cast<int>(b.cols());
  const double rt2 = std::sqrt(2.0);
  Mat k(svec_dim(out_side), svec_dim(in_side));
  int col = 0;
  for (int j = 0; j < in_side; ++j) {
    for (int i = j; i < in_side; ++i) {
      // Basis matrix E_ij (symmetrized); image is B^T E B.
      int row = 0;
      const double in_scale = (i == j) ? 1.0 : 1.0 / rt2;
      for (int q = 0; q < out_side; ++q) {
        for (int p = q; p < out_side; ++p) {
          double v = b(i, p) * b(j, q) + b(j, p) * b(i, q);
          if (i == j) v *= 0.5;
          const double out_scale = (p == q) ? 1.0 : rt2;
          k(row++, col) = out_scale * in_scale * v;
        }
      }
      ++col;
    }
  }
  return k;
}

void ConeProgram::validate() const {
  if (num_vars <= 0) throw std::invalid_argument("ConeProgram: no variables");
  if (objective.size() != num_vars)
    throw std::invalid_argument("ConeProgram: objective length mismatch");
  int rows = 0;
  for (const auto& block : cones) {
    if (block.size <= 0) throw std::invalid_argument("ConeProgram: non-positive cone block");
    if (block.kind == ConeKind::SecondOrder && block.size < 1)
      throw std::invalid_argument("ConeProgram: second-order block too small");
    rows += block.rows();
  }
  if (rows != rhs.size() || constraint.rows() != rhs.size())
    throw std::invalid_argument("ConeProgram: cone blocks do not cover the constraint rows");
  if (constraint.cols() != num_vars)
    throw std::invalid_argument("ConeProgram: constraint column mismatch");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

void dump_program(const ConeProgram& program, std::ostream& os) {
  os.precision(17);
  os << "star-secrecy-coneprog 1\n";
  os << program.num_vars << ' ' << program.rhs.size() << ' ' << program.cones.size() << '\n';
  for (const auto& block : program.cones) {
    os << static_cast<int>(block.kind) << ' ' << block.size << '\n';
  }
  for (int i = 0; i < program.num_vars; ++i) {
    if (i) os << ' ';
    os << program.objective(i);
  }
  os << '\n';
  for (Eigen::Index i = 0; i < program.rhs.size(); ++i) {
    if (i) os << ' ';
    os << program.rhs(i);
  }
  os << '\n';
  os << program.constraint.nonZeros() << '\n';
  for (int outer = 0; outer < program.constraint.outerSize(); ++outer)
    for (Eigen::SparseMatrix<double>::InnerIterator it(program.constraint, outer); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

ConeProgram load_program(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "star-secrecy-coneprog" || version != 1)
    throw std::runtime_error("cone program load: unrecognized header");
  ConeProgram p;
  Eigen::Index rows = 0;
  std::size_t blocks = 0;
  is >> p.num_vars >> rows >> blocks;
  p.cones.resize(blocks);
  for (auto& block : p.cones) {
    int kind = 0;
    is >> kind >> block.size;
    block.kind = static_cast<ConeKind>(kind);
  }
  p.objective.resize(p.num_vars);
  for (int i = 0; i < p.num_vars; ++i) is >> p.objective(i);
  p.rhs.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) is >> p.rhs(i);
  std::size_t nnz = 0;
  is >> nnz;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (std::size_t i = 0; i < nnz; ++i) {
    int r = 0, c = 0;
    double v = 0;
    is >> r >> c >> v;
    trips.emplace_back(r, c, v);
  }
  p.constraint.resize(rows, p.num_vars);
  p.constraint.setFromTriplets(trips.begin(), trips.end());
  if (!is) throw std::runtime_error("cone program load: truncated data");
  p.validate();
  return p;
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  for (auto& t : terms) t.second *= k;
  constant *= k;
  return *this;
}

int ProgramBuilder::add_variable(double objective_coeff) {
  obj_.push_back(objective_coeff);
  return num_vars_++;
}

int ProgramBuilder::add_variables(int count) {
  const int first = num_vars_;
  obj_.insert(obj_.end(), count, 0.0);
  num_vars_ += count;
  return first;
}

void ProgramBuilder::set_objective(int var, double coeff) { obj_.at(var) = coeff; }

void ProgramBuilder::push_rows(ConeKind kind, int size, const std::vector<LinExpr>& exprs) {
  const int base = static_cast<int>(rhs_.size());
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    const int row = base + static_cast<int>(i);
    // Row encodes expr(x) = b - A x, i.e. slack s = expr.
    for (const auto& [var, coeff] : exprs[i].terms) triplets_.emplace_back(row, var, -coeff);
    rhs_.push_back(exprs[i].constant);
  }
  cones_.push_back(ConeBlock{kind, size});
}

void ProgramBuilder::add_equality(const LinExpr& expr) {
  push_rows(ConeKind::Zero, 1, {expr});
}

void ProgramBuilder::add_nonneg(const LinExpr& expr) {
  push_rows(ConeKind::NonNeg, 1, {expr});
}

void ProgramBuilder::add_quad_epigraph(const std::vector<LinExpr>& v, const LinExpr& t) {
  // ||v||^2 <= t  <=>  ||(v, (t-1)/2)|| <= (t+1)/2.
  std::vector<LinExpr> rows;
  rows.reserve(v.size() + 2);
  LinExpr head = t;
  head *= 0.5;
  head.constant += 0.5;
  rows.push_back(head);
  for (const auto& e : v) rows.push_back(e);
  LinExpr tail = t;
  tail *= 0.5;
  tail.constant -= 0.5;
  rows.push_back(tail);
  push_rows(ConeKind::SecondOrder, static_cast<int>(rows.size()), rows);
  ++soc_blocks_;
}

void ProgramBuilder::add_psd_variable_block(int start_var, int side) {
  std::vector<LinExpr> rows;
  rows.reserve(svec_dim(side));
  for (int i = 0; i < svec_dim(side); ++i) rows.push_back(LinExpr::var(start_var + i));
  push_rows(ConeKind::Psd, side, rows);
}

void ProgramBuilder::add_psd_rows(const std::vector<LinExpr>& svec_entries, int side) {
  if (static_cast<int>(svec_entries.size()) != svec_dim(side))
    throw std::invalid_argument("add_psd_rows: entry count does not match side");
  push_rows(ConeKind::Psd, side, svec_entries);
}

ConeProgram ProgramBuilder::build() const {
  ConeProgram p;
  p.num_vars = num_vars_;
  p.objective = Eigen::Map<const Vec>(obj_.data(), num_vars_);
  p.rhs = Eigen::Map<const Vec>(rhs_.data(), rhs_.size());
  p.constraint.resize(static_cast<Eigen::Index>(rhs_.size()), num_vars_);
  p.constraint.setFromTriplets(triplets_.begin(), triplets_.end());
  p.cones = cones_;
  p.validate();
  return p;
}

}  // namespace conic
}  // namespace starsec
