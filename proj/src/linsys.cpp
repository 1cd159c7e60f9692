#include "stdg/linsys.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stdg {

BlockSparseMatrix::BlockSparseMatrix(int num_blocks, int block_dim) : dim_(block_dim), rows_(num_blocks) {
  if (num_blocks < 0 || block_dim <= 0) throw std::invalid_argument("BlockSparseMatrix: bad dimensions");
}

Eigen::MatrixXd& BlockSparseMatrix::block(int i, int j) {
  if (i < 0 || i >= num_blocks() || j < 0 || j >= num_blocks()) throw std::out_of_range("BlockSparseMatrix::block");
  Row& row = rows_[i];
  for (std::size_t k = 0; k < row.cols.size(); ++k)
    if (row.cols[k] == j) return row.blocks[k];
  row.cols.push_back(j);
  row.blocks.push_back(Eigen::MatrixXd::Zero(dim_, dim_));
  return row.blocks.back();
}

const Eigen::MatrixXd* BlockSparseMatrix::find(int i, int j) const {
  const Row& row = rows_.at(i);
  for (std::size_t k = 0; k < row.cols.size(); ++k)
    if (row.cols[k] == j) return &row.blocks[k];
  return nullptr;
}

void BlockSparseMatrix::add_to_block(int i, int j, const Eigen::MatrixXd& value) {
  if (value.rows() != dim_ || value.cols() != dim_) throw std::invalid_argument("add_to_block: block size mismatch");
  block(i, j) += value;
}

Eigen::MatrixXd BlockSparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < num_blocks(); ++i)
    for (std::size_t k = 0; k < rows_[i].cols.size(); ++k)
      d.block(i * dim_, rows_[i].cols[k] * dim_, dim_, dim_) = rows_[i].blocks[k];
  return d;
}

double BlockSparseMatrix::symmetry_defect() const {
  double defect = 0.0;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(dim_, dim_);
  for (int i = 0; i < num_blocks(); ++i)
    for (std::size_t k = 0; k < rows_[i].cols.size(); ++k) {
      const Eigen::MatrixXd* t = find(rows_[i].cols[k], i);
      defect = std::max(defect, (rows_[i].blocks[k] - (t ? t->transpose() : zero.transpose())).cwiseAbs().maxCoeff());
    }
  return defect;
}

void matvec(const BlockSparseMatrix& a, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  if (x.size() != a.size())
    throw std::invalid_argument("matvec: vector of length " + std::to_string(x.size()) + " for matrix of size " +
                                std::to_string(a.size()));
  const int d = a.block_dim();
  y.setZero(a.size());
  for (int i = 0; i < a.num_blocks(); ++i) {
    auto yi = y.segment(i * d, d);
    const auto& cols = a.row_columns(i);
    const auto& blocks = a.row_blocks(i);
    for (std::size_t k = 0; k < cols.size(); ++k) yi.noalias() += blocks[k] * x.segment(cols[k] * d, d);
  }
}

Eigen::VectorXd matvec(const BlockSparseMatrix& a, const Eigen::VectorXd& x) {
  Eigen::VectorXd y;
  matvec(a, x, y);
  return y;
}

void project_constant_mode(Eigen::VectorXd& x) {
  if (x.size() == 0) return;
  x.array() -= x.mean();
}

BlockJacobi::BlockJacobi(const BlockSparseMatrix& a) : dim_(a.block_dim()), inv_(a.num_blocks()) {
  for (int i = 0; i < a.num_blocks(); ++i) {
    const Eigen::MatrixXd* d = a.find(i, i);
    if (!d) throw std::invalid_argument("BlockJacobi: missing diagonal block " + std::to_string(i));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(*d);
    if (!lu.isInvertible()) throw std::runtime_error("BlockJacobi: singular diagonal block " + std::to_string(i));
    inv_[i] = lu.inverse();
  }
}

void BlockJacobi::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  z.resize(r.size());
  for (std::size_t i = 0; i < inv_.size(); ++i) z.segment(i * dim_, dim_).noalias() = inv_[i] * r.segment(i * dim_, dim_);
}

namespace {

struct Precond {
  BlockJacobi owned;
  const BlockJacobi* use;
  Precond(const BlockSparseMatrix& a, const BlockJacobi* given) : use(given) {
    if (!use) {
      owned = BlockJacobi(a);
      use = &owned;
    }
  }
};

}  // namespace

SolveResult cg_solve(const BlockSparseMatrix& a, const Eigen::VectorXd& b_in, const SolveOptions& opts,
                     const Eigen::VectorXd* x0) {
  if (b_in.size() != a.size()) throw std::invalid_argument("cg_solve: right-hand side size mismatch");
  Precond pc(a, opts.preconditioner);
  auto project = [&](Eigen::VectorXd& v) {
    if (opts.project_constant) project_constant_mode(v);
  };

  Eigen::VectorXd b = b_in;
  project(b);
  const double bnorm = b.norm();
  SolveResult res;
  res.x = x0 ? *x0 : Eigen::VectorXd::Zero(a.size());
  project(res.x);
  if (bnorm == 0.0) {
    res.x.setZero();
    res.report = {0, 0.0, true};
    return res;
  }

  auto true_residual = [&] {
    Eigen::VectorXd r = b - matvec(a, res.x);
    project(r);
    return r;
  };
  Eigen::VectorXd r = true_residual();
  Eigen::VectorXd z, p, ap;
  int it = 0;
  int restarts = 0;
  // Restarts from the true residual whenever the recurrence claims convergence early.
  while (it < opts.max_iter && r.norm() > opts.tol * bnorm) {
    pc.use->apply(r, z);
    project(z);
    p = z;
    double rz = r.dot(z);
    while (it < opts.max_iter && r.norm() > opts.tol * bnorm) {
      matvec(a, p, ap);
      project(ap);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      res.x += alpha * p;
      r -= alpha * ap;
      pc.use->apply(r, z);
      project(z);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
      ++it;
    }
    r = true_residual();
    if (++restarts > 5) break;
  }
  project(res.x);
  res.report.iterations = it;
  res.report.relative_residual = true_residual().norm() / bnorm;
  res.report.converged = res.report.relative_residual <= opts.tol;
  return res;
}

SolveResult bicgstab_solve(const BlockSparseMatrix& a, const Eigen::VectorXd& b, const SolveOptions& opts,
                           const Eigen::VectorXd* x0) {
  if (b.size() != a.size()) throw std::invalid_argument("bicgstab_solve: right-hand side size mismatch");
  Precond pc(a, opts.preconditioner);
  SolveResult res;
  res.x = x0 ? *x0 : Eigen::VectorXd::Zero(a.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x.setZero();
    res.report = {0, 0.0, true};
    return res;
  }
  Eigen::VectorXd r = b - matvec(a, res.x);
  int it = 0;
  int restarts = 0;
  while (it < opts.max_iter && r.norm() > opts.tol * bnorm && restarts < 20) {
    const Eigen::VectorXd r_hat = r;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(a.size()), v = p, s, t, y, zv;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    while (it < opts.max_iter && r.norm() > opts.tol * bnorm) {
      const double rho_new = r_hat.dot(r);
      if (rho_new == 0.0) break;
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      p = r + beta * (p - omega * v);
      pc.use->apply(p, y);
      matvec(a, y, v);
      alpha = rho / r_hat.dot(v);
      s = r - alpha * v;
      ++it;
      if (s.norm() <= opts.tol * bnorm) {
        res.x += alpha * y;
        r = s;
        break;
      }
      pc.use->apply(s, zv);
      matvec(a, zv, t);
      const double tt = t.dot(t);
      if (tt == 0.0) break;
      omega = t.dot(s) / tt;
      res.x += alpha * y + omega * zv;
      r = s - omega * t;
      if (omega == 0.0) break;
    }
    r = b - matvec(a, res.x);
    ++restarts;
  }
  res.report.iterations = it;
  res.report.relative_residual = (b - matvec(a, res.x)).norm() / bnorm;
  res.report.converged = res.report.relative_residual <= opts.tol;
  return res;
}

}  // namespace stdg
