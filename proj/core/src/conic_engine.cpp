#include "conelab/conic_engine.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace conelab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

constexpr double kSqrt2 = 1.4142135623730951;

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

int svec_dim(int m) { return m * (m + 1) / 2; }

int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

int LpConeDims::rows() const {
  int r = nonneg;
  for (int m : psd_dims) r += svec_dim(m);
  return r;
}

RealVector svec_sym(const RealMatrix& s) {
  int m = static_cast<int>(s.rows());
  RealVector v(svec_dim(m));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i <= j; ++i)
      v(svec_index(i, j)) =
          (i == j) ? s(i, i) : kSqrt2 * 0.5 * (s(i, j) + s(j, i));
  return v;
}

RealMatrix smat_sym(const RealVector& v, int m) {
  if (v.size() != svec_dim(m)) fail("smat_sym: size mismatch");
  RealMatrix s(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i <= j; ++i) {
      double val = v(svec_index(i, j));
      if (i == j) {
        s(i, i) = val;
      } else {
        s(i, j) = val / kSqrt2;
        s(j, i) = s(i, j);
      }
    }
  return s;
}

RealMatrix svec_congruence_matrix(const RealMatrix& q) {
  int m = static_cast<int>(q.rows());
  int M = svec_dim(m);
  RealMatrix k(M, M);
  for (int l = 0; l < m; ++l)
    for (int kk = 0; kk <= l; ++kk) {
      int col = svec_index(kk, l);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j; ++i) {
          int row = svec_index(i, j);
          double val;
          if (i == j && kk == l) {
            val = q(i, kk) * q(i, kk);
          } else if (i == j) {
            val = kSqrt2 * q(i, kk) * q(i, l);
          } else if (kk == l) {
            val = kSqrt2 * q(i, kk) * q(j, kk);
          } else {
            val = q(i, kk) * q(j, l) + q(i, l) * q(j, kk);
          }
          k(row, col) = val;
        }
    }
  return k;
}

RealMatrix embed_complex(const Matrix& x) {
  int d = static_cast<int>(x.rows());
  RealMatrix out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = x.real();
  out.bottomRightCorner(d, d) = x.real();
  out.topRightCorner(d, d) = -x.imag();
  out.bottomLeftCorner(d, d) = x.imag();
  return out;
}

Matrix complexify_dual(const RealMatrix& z) {
  int d = static_cast<int>(z.rows()) / 2;
  if (z.rows() != 2 * d || z.cols() != 2 * d) fail("complexify_dual: odd dimension");
  Matrix out =
      (z.topLeftCorner(d, d) + z.bottomRightCorner(d, d)).cast<Complex>() +
      Complex(0.0, 1.0) *
          (z.bottomLeftCorner(d, d) - z.topRightCorner(d, d)).cast<Complex>();
  return (out + out.adjoint()) / 2.0;
}

// ---------------------------------------------------------------------------
// Interior point solver

namespace {

struct BlockScaling {
  RealMatrix r, rti, q;  // q = rti * rti', the inverse NT congruence
  RealVector lam;
};

struct Scaling {
  RealVector w_nn, lam_nn;
  std::vector<BlockScaling> blocks;
};

// rhs - K*sol with error-free product transforms and compensated sums; the
// refinement loop needs residuals well below eps*|K|*|sol|, which a plain
// matvec cannot deliver once the scaling matrices degenerate
RealVector accurate_residual(const RealMatrix& K, const RealVector& sol,
                             const RealVector& rhs) {
  Eigen::Index n = rhs.size();
  RealVector r = rhs;
  RealVector comp = RealVector::Zero(n);
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    double xj = sol(j);
    if (xj == 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      double kij = K(i, j);
      if (kij == 0.0) continue;
      double p = kij * xj;
      double ep = std::fma(kij, xj, -p);
      double t = r(i) - p;
      double bb = t - r(i);
      double es = (r(i) - (t - bb)) + ((-p) - bb);
      r(i) = t;
      comp(i) += es - ep;
    }
  }
  return r + comp;
}

// factor f with f*f' = s; Cholesky when possible, eigenvalue fallback
RealMatrix psd_factor(const RealMatrix& s) {
  Eigen::LLT<RealMatrix> llt(s);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(s);
  RealVector lam = es.eigenvalues();
  double floor_val = 1e-14 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    lam(i) = std::sqrt(std::max(lam(i), floor_val));
  return es.eigenvectors() * lam.asDiagonal();
}

class HsdeSolver {
 public:
  HsdeSolver(const RealVector& c, const SparseReal& A, const RealVector& b,
             const SparseReal& G, const RealVector& h, const LpConeDims& cone,
             const SolverOptions& opts)
      : c_(c), A_(A), b_(b), G_(G), h_(h), opts_(opts) {
    n_ = static_cast<int>(c.size());
    p_ = static_cast<int>(A.rows());
    m_ = cone.rows();
    nn_ = cone.nonneg;
    if (G.rows() != m_ || G.cols() != n_) fail("solve_cone_lp: G shape mismatch");
    if (h.size() != m_) fail("solve_cone_lp: h size mismatch");
    if (p_ > 0 && (A.cols() != n_ || b.size() != p_))
      fail("solve_cone_lp: A/b shape mismatch");
    if (m_ == 0) fail("solve_cone_lp: need at least one cone row");

    int off = nn_;
    nu_ = nn_;
    for (int m : cone.psd_dims) {
      Block blk;
      blk.m = m;
      blk.offset = off;
      blk.sdim = svec_dim(m);
      blk.idx2ij.resize(blk.sdim);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j; ++i) blk.idx2ij[svec_index(i, j)] = {i, j};
      off += blk.sdim;
      nu_ += m;
      blocks_.push_back(std::move(blk));
    }
    if (off != m_) fail("solve_cone_lp: cone spec does not cover G rows");

    build_structure();
    aug_mode_ = (n_ + p_ + m_) <= 1200;
    data_norm_ = 1.0;
    if (n_ > 0) data_norm_ = std::max(data_norm_, c.cwiseAbs().maxCoeff());
    if (p_ > 0) data_norm_ = std::max(data_norm_, b.cwiseAbs().maxCoeff());
    data_norm_ = std::max(data_norm_, h.cwiseAbs().maxCoeff());
    norm_b_ = p_ > 0 ? b.norm() : 0.0;
    norm_h_ = h.norm();
    norm_c_ = c.norm();
  }

  ConeLPResult run();

 private:
  struct Block {
    int m = 0, offset = 0, sdim = 0;
    std::vector<std::pair<int, int>> idx2ij;
  };

  void build_structure() {
    nn_rows_.assign(nn_, {});
    bcols_.resize(blocks_.size());
    for (size_t b = 0; b < blocks_.size(); ++b)
      bcols_[b].cols.assign(n_, {});
    std::vector<int> row_block(m_, -1), row_local(m_, -1);
    for (size_t b = 0; b < blocks_.size(); ++b)
      for (int r = 0; r < blocks_[b].sdim; ++r) {
        row_block[blocks_[b].offset + r] = static_cast<int>(b);
        row_local[blocks_[b].offset + r] = r;
      }
    for (int col = 0; col < G_.outerSize(); ++col)
      for (SparseReal::InnerIterator it(G_, col); it; ++it) {
        int r = static_cast<int>(it.row());
        if (r < nn_) {
          nn_rows_[r].push_back({col, it.value()});
        } else {
          bcols_[row_block[r]].cols[col].push_back({row_local[r], it.value()});
        }
      }
    for (size_t b = 0; b < blocks_.size(); ++b) {
      for (int col = 0; col < n_; ++col)
        if (!bcols_[b].cols[col].empty()) bcols_[b].active.push_back(col);
    }
  }

  // ---- scaled-space helpers ----

  Scaling compute_scaling(const RealVector& s, const RealVector& z) const {
    Scaling sc;
    sc.w_nn.resize(nn_);
    sc.lam_nn.resize(nn_);
    for (int i = 0; i < nn_; ++i) {
      sc.w_nn(i) = std::sqrt(s(i) / z(i));
      sc.lam_nn(i) = std::sqrt(s(i) * z(i));
    }
    for (const Block& blk : blocks_) {
      RealMatrix S = smat_sym(s.segment(blk.offset, blk.sdim), blk.m);
      RealMatrix Z = smat_sym(z.segment(blk.offset, blk.sdim), blk.m);
      RealMatrix Ls = psd_factor(S);
      RealMatrix Lz = psd_factor(Z);
      Eigen::JacobiSVD<RealMatrix> svd(Lz.transpose() * Ls,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
      RealVector sig = svd.singularValues();
      RealVector isq(blk.m);
      for (int i = 0; i < blk.m; ++i) isq(i) = 1.0 / std::sqrt(sig(i));
      BlockScaling bs;
      bs.r = Ls * svd.matrixV() * isq.asDiagonal();
      bs.rti = Lz * svd.matrixU() * isq.asDiagonal();
      bs.q = bs.rti * bs.rti.transpose();
      bs.lam = sig;
      sc.blocks.push_back(std::move(bs));
    }
    return sc;
  }

  RealVector lambda_vector(const Scaling& sc) const {
    RealVector v = RealVector::Zero(m_);
    v.head(nn_) = sc.lam_nn;
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const Block& blk = blocks_[b];
      for (int i = 0; i < blk.m; ++i)
        v(blk.offset + svec_index(i, i)) = sc.blocks[b].lam(i);
    }
    return v;
  }

  enum class Op { W, WT, WinvWinvT };

  RealVector apply_scaling(const Scaling& sc, const RealVector& v, Op op) const {
    RealVector out(m_);
    for (int i = 0; i < nn_; ++i) {
      double w = sc.w_nn(i);
      out(i) = (op == Op::WinvWinvT) ? v(i) / (w * w)
                                     : v(i) * w;
    }
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const Block& blk = blocks_[b];
      RealMatrix V = smat_sym(v.segment(blk.offset, blk.sdim), blk.m);
      const BlockScaling& bs = sc.blocks[b];
      RealMatrix res;
      switch (op) {
        case Op::W: res = bs.r.transpose() * V * bs.r; break;
        case Op::WT: res = bs.r * V * bs.r.transpose(); break;
        case Op::WinvWinvT: res = bs.q * V * bs.q; break;
      }
      out.segment(blk.offset, blk.sdim) = svec_sym(res);
    }
    return out;
  }

  // solve lambda o u = rhs in the Jordan algebra; lambda is diagonal
  RealVector jordan_div_lambda(const Scaling& sc, const RealVector& rhs) const {
    RealVector out(m_);
    for (int i = 0; i < nn_; ++i) out(i) = rhs(i) / sc.lam_nn(i);
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const Block& blk = blocks_[b];
      const RealVector& lam = sc.blocks[b].lam;
      for (int r = 0; r < blk.sdim; ++r) {
        auto [i, j] = blk.idx2ij[r];
        out(blk.offset + r) = 2.0 * rhs(blk.offset + r) / (lam(i) + lam(j));
      }
    }
    return out;
  }

  RealVector jordan_product(const RealVector& u, const RealVector& v) const {
    RealVector out(m_);
    for (int i = 0; i < nn_; ++i) out(i) = u(i) * v(i);
    for (const Block& blk : blocks_) {
      RealMatrix U = smat_sym(u.segment(blk.offset, blk.sdim), blk.m);
      RealMatrix V = smat_sym(v.segment(blk.offset, blk.sdim), blk.m);
      RealMatrix P = 0.5 * (U * V + V * U);
      out.segment(blk.offset, blk.sdim) = svec_sym(P);
    }
    return out;
  }

  RealVector identity_element() const {
    RealVector e = RealVector::Zero(m_);
    e.head(nn_).setOnes();
    for (const Block& blk : blocks_)
      for (int i = 0; i < blk.m; ++i) e(blk.offset + svec_index(i, i)) = 1.0;
    return e;
  }

  // largest step a with lambda + a*dir staying in the cone (scaled space)
  double step_to_boundary(const Scaling& sc, const RealVector& dir) const {
    double bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn_; ++i)
      if (dir(i) < 0) bound = std::min(bound, -sc.lam_nn(i) / dir(i));
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const Block& blk = blocks_[b];
      const RealVector& lam = sc.blocks[b].lam;
      RealMatrix T(blk.m, blk.m);
      for (int j = 0; j < blk.m; ++j)
        for (int i = 0; i <= j; ++i) {
          double v = smat_entry(dir, blk, i, j) / std::sqrt(lam(i) * lam(j));
          T(i, j) = v;
          T(j, i) = v;
        }
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(T);
      double mn = es.eigenvalues().minCoeff();
      if (mn < 0) bound = std::min(bound, -1.0 / mn);
    }
    return bound;
  }

  static double smat_entry(const RealVector& v, const Block& blk, int i, int j) {
    double val = v(blk.offset + svec_index(std::min(i, j), std::max(i, j)));
    return (i == j) ? val : val / kSqrt2;
  }

  // ---- KKT ----

  // H = G' (W'W)^{-1} G assembled blockwise; identity=true uses W = I
  RealMatrix assemble_h(const Scaling* sc) const {
    RealMatrix H = RealMatrix::Zero(n_, n_);
    for (int r = 0; r < nn_; ++r) {
      double d = 1.0;
      if (sc) {
        double w = sc->w_nn(r);
        d = 1.0 / (w * w);
      }
      const auto& row = nn_rows_[r];
      for (const auto& [ci, vi] : row)
        for (const auto& [cj, vj] : row)
          if (ci >= cj) H(ci, cj) += d * vi * vj;
    }
    RealMatrix U;
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const Block& blk = blocks_[b];
      const auto& cols = bcols_[b].cols;
      const auto& active = bcols_[b].active;
      if (!sc) {
        // Q = I: plain sparse dot products
        for (size_t pj = 0; pj < active.size(); ++pj) {
          int j = active[pj];
          for (size_t pi = pj; pi < active.size(); ++pi) {
            int i = active[pi];
            double acc = 0.0;
            auto a = cols[i].begin();
            auto c = cols[j].begin();
            while (a != cols[i].end() && c != cols[j].end()) {
              if (a->first < c->first) ++a;
              else if (c->first < a->first) ++c;
              else { acc += a->second * c->second; ++a; ++c; }
            }
            H(i, j) += acc;
          }
        }
        continue;
      }
      const RealMatrix& q = sc->blocks[b].q;
      U.resize(blk.m, blk.m);
      for (size_t pj = 0; pj < active.size(); ++pj) {
        int j = active[pj];
        U.setZero();
        for (const auto& [ridx, v] : cols[j]) {
          auto [a, c] = blk.idx2ij[ridx];
          if (a == c) {
            U.noalias() += v * (q.col(a) * q.col(a).transpose());
          } else {
            double w = v / kSqrt2;
            U.noalias() += w * (q.col(a) * q.col(c).transpose());
            U.noalias() += w * (q.col(c) * q.col(a).transpose());
          }
        }
        for (size_t pi = pj; pi < active.size(); ++pi) {
          int i = active[pi];
          double acc = 0.0;
          for (const auto& [ridx, v] : cols[i]) {
            auto [a, c] = blk.idx2ij[ridx];
            acc += v * ((a == c) ? U(a, a) : kSqrt2 * U(a, c));
          }
          H(i, j) += acc;
        }
      }
    }
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < j; ++i) H(i, j) = H(j, i);
    return H;
  }

  struct Kkt {
    RealMatrix K;       // unregularized system matrix, target of refinement
    int pos_rows = 0;   // leading rows shifted by +reg, the rest by -reg
    double reg = 1e-10;
    Eigen::LLT<RealMatrix> llt;
    Eigen::PartialPivLU<RealMatrix> lu;
    Eigen::FullPivLU<RealMatrix> full_lu;
    enum class Mode { Llt, Lu, FullLu } mode = Mode::Llt;

    RealMatrix regularized() const {
      // static regularization stabilizes the endgame factorizations; the
      // refinement loop still targets the unregularized system
      // absolute, not norm-scaled: near the optimum the matrix mixes huge and
      // tiny rows and a norm-scaled shift would swamp the small ones
      RealMatrix Kreg = K;
      for (int i = 0; i < K.rows(); ++i)
        Kreg(i, i) += (i < pos_rows) ? reg : -reg;
      return Kreg;
    }

    void factor(RealMatrix Kin, int pos, bool spd) {
      K = std::move(Kin);
      pos_rows = pos;
      RealMatrix Kreg = regularized();
      if (spd) {
        llt.compute(Kreg);
        if (llt.info() == Eigen::Success) {
          mode = Mode::Llt;
          return;
        }
      }
      lu.compute(Kreg);
      mode = Mode::Lu;
    }

    void base_solve(const RealVector& r, RealVector& out) {
      switch (mode) {
        case Mode::Llt: out = llt.solve(r); break;
        case Mode::Lu: out = lu.solve(r); break;
        case Mode::FullLu: out = full_lu.solve(r); break;
      }
    }

    void refine(const RealVector& rhs, RealVector& sol, double scale) {
      for (int round = 0; round < 6; ++round) {
        RealVector res = accurate_residual(K, sol, rhs);
        if (res.cwiseAbs().maxCoeff() <= 1e-15 * scale) break;
        RealVector corr;
        base_solve(res, corr);
        sol += corr;
      }
    }

    void solve(const RealVector& rhs, RealVector& sol) {
      base_solve(rhs, sol);
      double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
      refine(rhs, sol, scale);
      RealVector res = accurate_residual(K, sol, rhs);
      if (res.cwiseAbs().maxCoeff() > 1e-6 * scale && mode != Mode::FullLu) {
        // factorization too inaccurate; redo with full pivoting
        full_lu.compute(regularized());
        mode = Mode::FullLu;
        base_solve(rhs, sol);
        refine(rhs, sol, scale);
      }
    }
  };

  // Normal-equations form condenses the cone block into H = G' (W'W)^{-1} G,
  // which squares the conditioning and caps the attainable accuracy around
  // sqrt(eps); the augmented form keeps the cone rows explicit so iterative
  // refinement still contracts at small mu.  Augmented costs a dense LU of
  // side n+p+m, so it is reserved for moderate problem sizes.
  RealMatrix assemble_aug(const Scaling* sc) const {
    int N = n_ + p_ + m_;
    RealMatrix K = RealMatrix::Zero(N, N);
    if (p_ > 0)
      for (int col = 0; col < A_.outerSize(); ++col)
        for (SparseReal::InnerIterator it(A_, col); it; ++it) {
          K(n_ + it.row(), col) = it.value();
          K(col, n_ + it.row()) = it.value();
        }
    int zoff = n_ + p_;
    for (int col = 0; col < G_.outerSize(); ++col)
      for (SparseReal::InnerIterator it(G_, col); it; ++it) {
        K(zoff + it.row(), col) = it.value();
        K(col, zoff + it.row()) = it.value();
      }
    for (int i = 0; i < nn_; ++i) {
      double w2 = sc ? sc->w_nn(i) * sc->w_nn(i) : 1.0;
      K(zoff + i, zoff + i) = -w2;
    }
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const Block& blk = blocks_[b];
      if (!sc) {
        for (int r = 0; r < blk.sdim; ++r)
          K(zoff + blk.offset + r, zoff + blk.offset + r) = -1.0;
        continue;
      }
      // W'W acts on svec space as congruence by r r'
      const RealMatrix& r = sc->blocks[b].r;
      RealMatrix M = svec_congruence_matrix(RealMatrix(r * r.transpose()));
      K.block(zoff + blk.offset, zoff + blk.offset, blk.sdim, blk.sdim) = -M;
    }
    return K;
  }

  void factor_kkt(Kkt& kkt, const Scaling* sc) const {
    if (aug_mode_) {
      kkt.factor(assemble_aug(sc), n_, false);
      return;
    }
    RealMatrix H = assemble_h(sc);
    if (p_ == 0) {
      kkt.factor(std::move(H), n_, true);
      return;
    }
    RealMatrix K = RealMatrix::Zero(n_ + p_, n_ + p_);
    K.topLeftCorner(n_, n_) = H;
    K.topRightCorner(n_, p_) = RealMatrix(SparseReal(A_.transpose()));
    K.bottomLeftCorner(p_, n_) = RealMatrix(A_);
    kkt.factor(std::move(K), n_, false);
  }

  // solve the scaled Newton optimality system
  //   A' y + G' z = ra,   A x = rb,   G x - W'W z = rc
  void newton_solve(Kkt& kkt, const Scaling* sc, const RealVector& ra,
                    const RealVector& rb, const RealVector& rc, RealVector& x,
                    RealVector& y, RealVector& z) const {
    if (aug_mode_) {
      RealVector rhs(n_ + p_ + m_);
      rhs.head(n_) = ra;
      if (p_ > 0) rhs.segment(n_, p_) = rb;
      rhs.tail(m_) = rc;
      RealVector sol;
      kkt.solve(rhs, sol);
      x = sol.head(n_);
      y = p_ > 0 ? RealVector(sol.segment(n_, p_)) : RealVector(0);
      z = sol.tail(m_);
      return;
    }
    auto q = [&](const RealVector& v) {
      return sc ? apply_scaling(*sc, v, Op::WinvWinvT) : v;
    };
    RealVector rhs(n_ + p_);
    rhs.head(n_) = ra + gT(q(rc));
    if (p_ > 0) rhs.tail(p_) = rb;
    RealVector sol;
    kkt.solve(rhs, sol);
    x = sol.head(n_);
    y = p_ > 0 ? RealVector(sol.tail(p_)) : RealVector(0);
    z = q(G_ * x - rc);
  }

  // shift a candidate point into the interior of the cone
  RealVector interior_shift(const RealVector& v) const {
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn_; ++i) mn = std::min(mn, v(i));
    for (const Block& blk : blocks_) {
      RealMatrix V = smat_sym(v.segment(blk.offset, blk.sdim), blk.m);
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(V);
      mn = std::min(mn, es.eigenvalues().minCoeff());
    }
    if (mn > 1e-6) return v;
    return v + (1.0 + std::abs(mn)) * identity_element();
  }

  RealVector gT(const RealVector& v) const { return G_.transpose() * v; }

  // data
  const RealVector& c_;
  const SparseReal& A_;
  const RealVector& b_;
  const SparseReal& G_;
  const RealVector& h_;
  SolverOptions opts_;
  int n_ = 0, p_ = 0, m_ = 0, nn_ = 0;
  bool aug_mode_ = false;
  double nu_ = 0.0;
  double data_norm_ = 1.0, norm_b_ = 0.0, norm_h_ = 0.0, norm_c_ = 0.0;
  std::vector<Block> blocks_;
  std::vector<std::vector<std::pair<int, double>>> nn_rows_;
  struct BlockCols {
    std::vector<std::vector<std::pair<int, double>>> cols;
    std::vector<int> active;
  };
  std::vector<BlockCols> bcols_;
};

ConeLPResult HsdeSolver::run() {
  ConeLPResult res;
  Kkt kkt;

  // initialization with identity scaling
  factor_kkt(kkt, nullptr);
  RealVector x, y, z, s;
  {
    RealVector x1, y1, zdump;
    newton_solve(kkt, nullptr, RealVector::Zero(n_), b_, h_, x1, y1, zdump);
    s = interior_shift(h_ - G_ * x1);
    RealVector x2, y2, z2;
    newton_solve(kkt, nullptr, -c_, RealVector::Zero(p_),
                 RealVector::Zero(m_), x2, y2, z2);
    z = interior_shift(G_ * x2);
    x = x1;
    y = y2;
  }
  double tau = 1.0, kappa = 1.0;
  int stalls = 0;

  // endgame steps can destroy feasibility once the KKT system degenerates, so
  // remember the most balanced iterate seen
  struct Snapshot {
    RealVector x, y, z, s;
    double tau = 1.0, kappa = 1.0;
    double merit = std::numeric_limits<double>::infinity();
  } best;

  auto fill_point = [&](ConeLPResult& r) {
    r.x = x / tau;
    r.y = y / tau;
    r.z = z / tau;
    r.s = s / tau;
    r.primal_objective = c_.dot(r.x);
    r.dual_objective = -(p_ > 0 ? b_.dot(r.y) : 0.0) - h_.dot(r.z);
    r.gap = r.s.dot(r.z);
  };

  for (int iter = 0; iter <= opts_.max_iterations; ++iter) {
    res.iterations = iter;

    RealVector rx = gT(z) + c_ * tau;
    if (p_ > 0) rx += A_.transpose() * y;
    RealVector ry = p_ > 0 ? RealVector(A_ * x - b_ * tau) : RealVector(0);
    RealVector rz = G_ * x + s - h_ * tau;
    double bty = p_ > 0 ? b_.dot(y) : 0.0;
    double rt = c_.dot(x) + bty + h_.dot(z) + kappa;

    double gap = s.dot(z);
    double mu = (gap + tau * kappa) / (nu_ + 1.0);

    double pres = std::max(p_ > 0 ? ry.norm() / (tau * (1.0 + norm_b_)) : 0.0,
                           rz.norm() / (tau * (1.0 + norm_h_)));
    double dres = rx.norm() / (tau * (1.0 + norm_c_));
    double pobj = c_.dot(x) / tau;
    double dobj = -(bty + h_.dot(z)) / tau;
    double agap = gap / (tau * tau);
    double relgap = agap / std::max(1.0, std::min(std::abs(pobj), std::abs(dobj)));

    if (opts_.verbose) {
      std::cerr << "iter " << iter << " pres " << pres << " dres " << dres << " gap "
                << agap << " pobj " << pobj << " dobj " << dobj << " tau " << tau
                << " kappa " << kappa << "\n";
    }

    double merit = std::max({pres, dres, std::min(agap, relgap)});
    if (merit < best.merit) {
      best = {x, y, z, s, tau, kappa, merit};
    }

    if (pres <= opts_.tol && dres <= opts_.tol &&
        (agap <= opts_.tol || relgap <= opts_.tol)) {
      res.status = SolveStatus::Optimal;
      fill_point(res);
      res.primal_residual = pres;
      res.dual_residual = dres;
      return res;
    }

    // certificate checks
    double bhz = bty + h_.dot(z);
    if (bhz < 0) {
      RealVector axz = gT(z);
      if (p_ > 0) axz += A_.transpose() * y;
      if (axz.norm() / (-bhz) <= opts_.tol * data_norm_) {
        res.status = SolveStatus::Infeasible;
        res.y = y / (-bhz);
        res.z = z / (-bhz);
        res.x = RealVector::Zero(n_);
        res.s = RealVector::Zero(m_);
        res.gap = 0;
        return res;
      }
    }
    double ctx = c_.dot(x);
    if (ctx < 0) {
      double axn = p_ > 0 ? (A_ * x).norm() : 0.0;
      double gxs = (G_ * x + s).norm();
      if (std::max(axn, gxs) / (-ctx) <= opts_.tol * data_norm_) {
        res.status = SolveStatus::Unbounded;
        res.x = x / (-ctx);
        res.s = s / (-ctx);
        res.y = RealVector::Zero(p_);
        res.z = RealVector::Zero(m_);
        res.gap = 0;
        return res;
      }
    }

    if (iter == opts_.max_iterations) break;

    Scaling sc = compute_scaling(s, z);
    RealVector lam = lambda_vector(sc);
    factor_kkt(kkt, &sc);

    // constant-part direction, reused by both predictor and corrector
    RealVector x1, y1, z1;
    newton_solve(kkt, &sc, -c_, b_, h_, x1, y1, z1);
    double denom = c_.dot(x1) + (p_ > 0 ? b_.dot(y1) : 0.0) + h_.dot(z1) - kappa / tau;

    auto direction = [&](const RealVector& dc, double rhs_tau, double fres,
                         RealVector& dx, RealVector& dy, RealVector& dz,
                         RealVector& dstilde, double& dtau, double& dkappa) {
      RealVector wtdc = apply_scaling(sc, dc, Op::WT);
      RealVector rhs3 = -fres * rz - wtdc;
      RealVector x2, y2, z2;
      newton_solve(kkt, &sc, RealVector(-fres * rx),
                   p_ > 0 ? RealVector(-fres * ry) : RealVector(0), rhs3, x2,
                   y2, z2);
      double num = -fres * rt - rhs_tau / tau -
                   (c_.dot(x2) + (p_ > 0 ? b_.dot(y2) : 0.0) + h_.dot(z2));
      dtau = num / denom;
      dx = x2 + dtau * x1;
      dy = p_ > 0 ? RealVector(y2 + dtau * y1) : RealVector(0);
      dz = z2 + dtau * z1;
      RealVector dztilde = apply_scaling(sc, dz, Op::W);
      dstilde = dc - dztilde;
      dkappa = (rhs_tau - kappa * dtau) / tau;
    };

    // predictor (affine)
    RealVector dx_a, dy_a, dz_a, dst_a;
    double dtau_a, dkap_a;
    {
      RealVector dc = -lam;  // lambda^{-1} o (-lambda o lambda)
      direction(dc, -tau * kappa, 1.0, dx_a, dy_a, dz_a, dst_a, dtau_a, dkap_a);
    }
    RealVector dzt_a = apply_scaling(sc, dz_a, Op::W);
    double alpha_a = step_to_boundary(sc, dzt_a);
    alpha_a = std::min(alpha_a, step_to_boundary(sc, dst_a));
    if (dtau_a < 0) alpha_a = std::min(alpha_a, -tau / dtau_a);
    if (dkap_a < 0) alpha_a = std::min(alpha_a, -kappa / dkap_a);
    alpha_a = std::min(alpha_a, 1.0);

    double mu_aff = ((lam + alpha_a * dst_a).dot(lam + alpha_a * dzt_a) +
                     (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkap_a)) /
                    (nu_ + 1.0);
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    // corrector (combined)
    RealVector dx, dy, dz, dst;
    double dtau, dkap;
    {
      RealVector rhs_c = -jordan_product(lam, lam) - jordan_product(dst_a, dzt_a) +
                         sigma * mu * identity_element();
      RealVector dc = jordan_div_lambda(sc, rhs_c);
      double rhs_tau = -tau * kappa - dtau_a * dkap_a + sigma * mu;
      direction(dc, rhs_tau, 1.0 - sigma, dx, dy, dz, dst, dtau, dkap);
    }
    RealVector dzt = apply_scaling(sc, dz, Op::W);
    double alpha = step_to_boundary(sc, dzt);
    alpha = std::min(alpha, step_to_boundary(sc, dst));
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0) alpha = std::min(alpha, -kappa / dkap);
    alpha = std::min(1.0, 0.99 * alpha);

    // exact steps never worsen the optimality measures beyond the intended
    // recentering, so a blowup means the direction is dominated by
    // factorization noise; damp it instead.  The merit must include the gap:
    // recentering steps legitimately trade a little residual for gap progress.
    RealVector ds = apply_scaling(sc, dst, Op::WT);
    double phi_cur = std::max({pres, dres, std::min(agap, relgap)});
    auto trial_merit = [&](double a) {
      RealVector xt = x + a * dx;
      RealVector zt = z + a * dz;
      RealVector st = s + a * ds;
      double tt = tau + a * dtau;
      RealVector rxt = gT(zt) + c_ * tt;
      double btyt = 0.0;
      if (p_ > 0) {
        RealVector yt = y + a * dy;
        rxt += A_.transpose() * yt;
        btyt = b_.dot(yt);
      }
      double prest = (G_ * xt + st - h_ * tt).norm() / (tt * (1.0 + norm_h_));
      if (p_ > 0)
        prest = std::max(prest, (A_ * xt - b_ * tt).norm() / (tt * (1.0 + norm_b_)));
      double drest = rxt.norm() / (tt * (1.0 + norm_c_));
      double gapt = st.dot(zt) / (tt * tt);
      double pobjt = c_.dot(xt) / tt;
      double dobjt = -(btyt + h_.dot(zt)) / tt;
      double relgapt =
          gapt / std::max(1.0, std::min(std::abs(pobjt), std::abs(dobjt)));
      return std::max({prest, drest, std::min(gapt, relgapt)});
    };
    bool accepted = false;
    for (int halvings = 0; halvings < 6; ++halvings) {
      if (trial_merit(alpha) <= 1.2 * phi_cur + 0.05 * opts_.tol) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    if (alpha < 1e-8) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }

    x += alpha * dx;
    if (p_ > 0) y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkap;
  }

  if (best.merit < std::numeric_limits<double>::infinity()) {
    x = best.x;
    y = best.y;
    z = best.z;
    s = best.s;
    tau = best.tau;
    kappa = best.kappa;
  }
  res.status = SolveStatus::MaxIterations;
  fill_point(res);
  {
    RealVector rx = gT(z) + c_ * tau;
    if (p_ > 0) rx += A_.transpose() * y;
    res.dual_residual = rx.norm() / (tau * (1.0 + norm_c_));
    double pr = (G_ * x + s - h_ * tau).norm() / (tau * (1.0 + norm_h_));
    if (p_ > 0)
      pr = std::max(pr, (A_ * x - b_ * tau).norm() / (tau * (1.0 + norm_b_)));
    res.primal_residual = pr;
  }
  return res;
}

// Row reduction of the equality system: keep an independent subset, verify the
// dropped rows are consistent, and remember the mapping for dual recovery.
struct EqReduction {
  SparseReal A;
  RealVector b;
  std::vector<int> kept;
  bool inconsistent = false;
  RealVector certificate;  // full-length y with b'y < 0 when inconsistent
};

EqReduction reduce_equalities(const SparseReal& A, const RealVector& b, int n) {
  EqReduction red;
  int p = static_cast<int>(A.rows());
  if (p == 0) {
    red.A = A;
    red.b = b;
    return red;
  }
  RealMatrix At = RealMatrix(A.transpose());  // n x p
  Eigen::ColPivHouseholderQR<RealMatrix> qr(At);
  double rmax = std::abs(qr.matrixR()(0, 0));
  double thresh = std::max(1e-11 * std::max(1.0, rmax), 1e-13);
  int rank = 0;
  for (int i = 0; i < std::min<int>(p, n); ++i)
    if (std::abs(qr.matrixR()(i, i)) > thresh) ++rank;

  Eigen::VectorXi perm = qr.colsPermutation().indices();
  red.kept.assign(perm.data(), perm.data() + rank);
  std::sort(red.kept.begin(), red.kept.end());

  if (rank < p) {
    // dropped rows must be consistent linear combinations of the kept ones
    RealMatrix R11 = qr.matrixR().topLeftCorner(rank, rank);
    RealMatrix R12 = qr.matrixR().topRows(rank).rightCols(p - rank);
    RealMatrix gamma =
        R11.triangularView<Eigen::Upper>().solve(R12);  // rank x (p - rank)
    double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
    for (int k = 0; k < p - rank; ++k) {
      int drop_row = perm(rank + k);
      double combo = 0.0;
      for (int i = 0; i < rank; ++i) combo += gamma(i, k) * b(perm(i));
      double viol = b(drop_row) - combo;
      if (std::abs(viol) > 1e-9 * bscale) {
        red.inconsistent = true;
        RealVector cert = RealVector::Zero(p);
        double sgn = viol > 0 ? -1.0 : 1.0;
        cert(drop_row) = sgn;
        for (int i = 0; i < rank; ++i) cert(perm(i)) = -sgn * gamma(i, k);
        red.certificate = cert / std::abs(viol);
        return red;
      }
    }
  }

  if (rank == p) {
    red.A = A;
    red.b = b;
    return red;
  }
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> row_map(p, -1);
  for (int i = 0; i < rank; ++i) row_map[red.kept[i]] = i;
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseReal::InnerIterator it(A, col); it; ++it) {
      int nr = row_map[it.row()];
      if (nr >= 0) trip.emplace_back(nr, col, it.value());
    }
  red.A = SparseReal(rank, n);
  red.A.setFromTriplets(trip.begin(), trip.end());
  red.b.resize(rank);
  for (int i = 0; i < rank; ++i) red.b(i) = b(red.kept[i]);
  return red;
}

}  // namespace

ConeLPResult solve_cone_lp(const RealVector& c, const SparseReal& A, const RealVector& b,
                           const SparseReal& G, const RealVector& h, const LpConeDims& cone,
                           const SolverOptions& opts) {
  int p = static_cast<int>(A.rows());
  EqReduction red = reduce_equalities(A, b, static_cast<int>(c.size()));
  if (red.inconsistent) {
    ConeLPResult res;
    res.status = SolveStatus::Infeasible;
    res.x = RealVector::Zero(c.size());
    res.s = RealVector::Zero(cone.rows());
    res.z = RealVector::Zero(cone.rows());
    res.y = red.certificate;
    return res;
  }
  HsdeSolver solver(c, red.A, red.b, G, h, cone, opts);
  ConeLPResult res = solver.run();
  if (static_cast<int>(red.A.rows()) < p) {
    // scatter reduced duals back to the caller's row numbering
    RealVector yfull = RealVector::Zero(p);
    for (size_t i = 0; i < red.kept.size(); ++i) yfull(red.kept[i]) = res.y(i);
    res.y = yfull;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Modeling layer

MatrixExpr MatrixExpr::constant_expr(DimProfile dims, const Matrix& value) {
  MatrixExpr e;
  if (value.rows() != dims.total_dim() || value.cols() != dims.total_dim())
    fail("constant_expr: matrix does not match profile " + dims.describe());
  e.dims_ = std::move(dims);
  e.constant_ = value;
  return e;
}

namespace {

Matrix expr_constant_or_zero(const MatrixExpr& e) {
  if (e.constant().size() == 0)
    return Matrix::Zero(e.dim(), e.dim());
  return e.constant();
}

}  // namespace

MatrixExpr MatrixExpr::plus(const MatrixExpr& other) const {
  if (!dims_.same_dims(other.dims_))
    fail("MatrixExpr: adding expressions on different layouts " + dims_.describe() +
         " vs " + other.dims_.describe());
  MatrixExpr out = *this;
  out.terms_.insert(out.terms_.end(), other.terms_.begin(), other.terms_.end());
  out.sterms_.insert(out.sterms_.end(), other.sterms_.begin(), other.sterms_.end());
  out.constant_ = expr_constant_or_zero(*this) + expr_constant_or_zero(other);
  return out;
}

MatrixExpr MatrixExpr::minus(const MatrixExpr& other) const {
  return plus(other.scaled(-1.0));
}

MatrixExpr MatrixExpr::scaled(double a) const {
  MatrixExpr out = *this;
  for (MatrixTerm& t : out.terms_) t.scale *= a;
  for (ScalarMatrixTerm& t : out.sterms_) t.coeff *= a;
  if (out.constant_.size() > 0) out.constant_ *= a;
  return out;
}

MatrixExpr MatrixExpr::add_constant(const Matrix& value) const {
  MatrixExpr out = *this;
  out.constant_ = expr_constant_or_zero(*this) + value;
  return out;
}

MatrixExpr MatrixExpr::transformed(DimProfile new_dims,
                                   const std::function<Matrix(const Matrix&)>& fn) const {
  MatrixExpr out;
  out.dims_ = std::move(new_dims);
  for (const MatrixTerm& t : terms_) {
    MatrixTerm nt;
    nt.var_id = t.var_id;
    nt.scale = 1.0;
    if (t.map) {
      auto inner = t.map;
      double sc = t.scale;
      nt.map = [fn, inner, sc](const Matrix& x) { return fn(Matrix(sc * inner(x))); };
    } else {
      double sc = t.scale;
      nt.map = [fn, sc](const Matrix& x) { return fn(Matrix(sc * x)); };
    }
    out.terms_.push_back(std::move(nt));
  }
  for (const ScalarMatrixTerm& t : sterms_)
    out.sterms_.push_back({t.scalar_id, fn(t.coeff)});
  if (constant_.size() > 0) out.constant_ = fn(constant_);
  return out;
}

MatrixExpr MatrixExpr::partial_transpose_expr(
    const std::vector<std::string>& labels) const {
  std::vector<int> idx = dims_.indices_of(labels);
  std::vector<int> dvec = dims_.dims();
  return transformed(dims_, [dvec, idx](const Matrix& x) {
    return partial_transpose_m(x, dvec, idx);
  });
}

MatrixExpr MatrixExpr::partial_trace_expr(const std::vector<std::string>& labels) const {
  std::vector<int> idx = dims_.indices_of(labels);
  std::vector<int> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Factor> remaining;
  for (int i = 0; i < dims_.factor_count(); ++i)
    if (!std::binary_search(sorted.begin(), sorted.end(), i))
      remaining.push_back(dims_.factor(i));
  std::vector<int> dvec = dims_.dims();
  return transformed(DimProfile(remaining), [dvec, idx](const Matrix& x) {
    return partial_trace_m(x, dvec, idx);
  });
}

Matrix MatrixExpr::evaluate(const std::map<int, Matrix>& var_values,
                            const std::vector<double>& scalar_values) const {
  Matrix out = expr_constant_or_zero(*this);
  for (const MatrixTerm& t : terms_) {
    auto it = var_values.find(t.var_id);
    if (it == var_values.end()) fail("MatrixExpr::evaluate: missing variable value");
    out += t.scale * (t.map ? t.map(it->second) : it->second);
  }
  for (const ScalarMatrixTerm& t : sterms_) {
    if (t.scalar_id < 0 || t.scalar_id >= static_cast<int>(scalar_values.size()))
      fail("MatrixExpr::evaluate: missing scalar value");
    out += scalar_values[static_cast<size_t>(t.scalar_id)] * t.coeff;
  }
  return out;
}

ScalarExpr& ScalarExpr::add_inner(VarRef v, const Matrix& c) {
  inner_terms.push_back({v.id, c});
  return *this;
}

ScalarExpr& ScalarExpr::add_scalar(ScalarRef v, double coeff) {
  scalar_terms.push_back({v.id, coeff});
  return *this;
}

ScalarExpr& ScalarExpr::add_constant(double c) {
  constant += c;
  return *this;
}

const Matrix& SolveReport::value_of(VarRef v) const {
  auto it = var_values.find(v.id);
  if (it == var_values.end()) fail("SolveReport: no value for variable");
  return it->second;
}

double SolveReport::value_of(ScalarRef v) const {
  if (v.id < 0 || v.id >= static_cast<int>(scalar_values.size()))
    fail("SolveReport: no value for scalar");
  return scalar_values[static_cast<size_t>(v.id)];
}

VarRef ConicProgram::add_hermitian_variable(DimProfile dims, const std::string& name) {
  vars_.push_back({std::move(dims), name});
  return {static_cast<int>(vars_.size()) - 1};
}

ScalarRef ConicProgram::add_scalar_variable(const std::string& name) {
  scalar_names_.push_back(name);
  return {static_cast<int>(scalar_names_.size()) - 1};
}

MatrixExpr ConicProgram::var(VarRef v) const {
  if (v.id < 0 || v.id >= static_cast<int>(vars_.size()))
    fail("ConicProgram::var: bad reference");
  MatrixExpr e;
  e.dims_ = vars_[static_cast<size_t>(v.id)].dims;
  MatrixTerm t;
  t.var_id = v.id;
  e.terms_.push_back(std::move(t));
  return e;
}

MatrixExpr ConicProgram::scalar_term_expr(ScalarRef s, DimProfile dims,
                                          const Matrix& coeff) const {
  if (s.id < 0 || s.id >= static_cast<int>(scalar_names_.size()))
    fail("ConicProgram::scalar_term_expr: bad reference");
  if (coeff.rows() != dims.total_dim() || coeff.cols() != dims.total_dim())
    fail("ConicProgram::scalar_term_expr: coefficient shape mismatch");
  MatrixExpr e;
  e.dims_ = std::move(dims);
  e.sterms_.push_back({s.id, coeff});
  return e;
}

DimProfile ConicProgram::var_dims(VarRef v) const {
  if (v.id < 0 || v.id >= static_cast<int>(vars_.size()))
    fail("ConicProgram::var_dims: bad reference");
  return vars_[static_cast<size_t>(v.id)].dims;
}

int ConicProgram::add_matrix_equality(const MatrixExpr& e, const Matrix& rhs) {
  if (rhs.rows() != e.dim() || rhs.cols() != e.dim())
    fail("add_matrix_equality: rhs shape mismatch");
  equalities_.push_back({e, rhs, next_group_});
  return next_group_++;
}

int ConicProgram::add_psd(const MatrixExpr& e) {
  psd_cons_.push_back({e, next_group_});
  return next_group_++;
}

int ConicProgram::add_nonneg(const ScalarExpr& e) {
  ScalarExpr neg = e;
  for (auto& t : neg.inner_terms) t.second = -t.second;
  for (auto& t : neg.scalar_terms) t.second = -t.second;
  neg.constant = 0.0;
  rows_.push_back({neg, e.constant, next_group_});  // -expr_lin <= expr_const
  return next_group_++;
}

int ConicProgram::add_upper_bound(const ScalarExpr& e, double ub) {
  ScalarExpr lin = e;
  lin.constant = 0.0;
  rows_.push_back({lin, ub - e.constant, next_group_});
  return next_group_++;
}

int ConicProgram::add_scalar_equality(const ScalarExpr& e, double rhs) {
  ScalarExpr lin = e;
  lin.constant = 0.0;
  scalar_equalities_.push_back({lin, rhs - e.constant, next_group_});
  return next_group_++;
}

void ConicProgram::maximize(const ScalarExpr& objective) {
  objective_ = objective;
  maximize_ = true;
  objective_set_ = true;
}

void ConicProgram::minimize(const ScalarExpr& objective) {
  objective_ = objective;
  maximize_ = false;
  objective_set_ = true;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

struct ParamLayout {
  // per hermitian variable
  std::vector<int> var_offset, var_dim, var_params;
  // scalars appended after matrix variables
  std::vector<int> scalar_offset;
  int total = 0;
  bool real_mode = false;
};

int param_count(int d, bool real_mode) { return real_mode ? svec_dim(d) : d * d; }

// k-th orthonormal Hermitian (or real symmetric) basis element
Matrix basis_element(int d, int k, bool real_mode) {
  Matrix b = Matrix::Zero(d, d);
  if (real_mode) {
    for (int j = 0; j < d; ++j)
      for (int i = 0; i <= j; ++i)
        if (svec_index(i, j) == k) {
          if (i == j) b(i, i) = 1.0;
          else { b(i, j) = 1.0 / kSqrt2; b(j, i) = 1.0 / kSqrt2; }
          return b;
        }
    fail("basis_element: index out of range");
  }
  int idx = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        if (idx == k) { b(i, i) = 1.0; return b; }
        ++idx;
      } else {
        if (idx == k) { b(i, j) = 1.0 / kSqrt2; b(j, i) = 1.0 / kSqrt2; return b; }
        ++idx;
        if (idx == k) {
          b(i, j) = Complex(0.0, 1.0 / kSqrt2);
          b(j, i) = Complex(0.0, -1.0 / kSqrt2);
          return b;
        }
        ++idx;
      }
    }
  fail("basis_element: index out of range");
}

// X = sum_k x_k B_k
Matrix decode_variable(const RealVector& x, int offset, int d, bool real_mode) {
  Matrix out = Matrix::Zero(d, d);
  int idx = offset;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        out(i, i) = x(idx++);
      } else if (real_mode) {
        double v = x(idx++) / kSqrt2;
        out(i, j) = v;
        out(j, i) = v;
      } else {
        double re = x(idx++);
        double im = x(idx++);
        out(i, j) = Complex(re, im) / kSqrt2;
        out(j, i) = std::conj(out(i, j));
      }
    }
  return out;
}

// coefficients of Re<C, X> over the parameter basis
void inner_coefficients(const Matrix& c, int offset, bool real_mode,
                        std::vector<std::pair<int, double>>& out) {
  Matrix ch = (c + c.adjoint()) / 2.0;
  int d = static_cast<int>(ch.rows());
  int idx = offset;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        if (ch(i, i).real() != 0.0) out.push_back({idx, ch(i, i).real()});
        ++idx;
      } else {
        double re = kSqrt2 * ch(i, j).real();
        double im = kSqrt2 * ch(i, j).imag();
        if (re != 0.0) out.push_back({idx, re});
        ++idx;
        if (!real_mode) {
          if (im != 0.0) out.push_back({idx, im});
          ++idx;
        }
      }
    }
}

bool matrix_exactly_real(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j).imag() != 0.0) return false;
  return true;
}

struct RealModeAbort {};

class Compiler {
 public:
  Compiler(const std::vector<std::pair<DimProfile, std::string>>& vars, int scalars,
           bool real_mode)
      : real_mode_(real_mode) {
    layout_.real_mode = real_mode;
    int off = 0;
    for (const auto& [dims, name] : vars) {
      int d = dims.total_dim();
      layout_.var_offset.push_back(off);
      layout_.var_dim.push_back(d);
      layout_.var_params.push_back(param_count(d, real_mode));
      off += param_count(d, real_mode);
    }
    for (int i = 0; i < scalars; ++i) {
      layout_.scalar_offset.push_back(off);
      ++off;
    }
    layout_.total = off;
  }

  const ParamLayout& layout() const { return layout_; }

  // walks every parameter that can influence the expression, passing the
  // expression's matrix-valued derivative for that parameter
  void for_each_param(const MatrixExpr& e,
                      const std::function<void(int, const Matrix&)>& cb) const {
    std::map<int, std::vector<const MatrixTerm*>> by_var;
    for (const MatrixTerm& t : e.terms()) by_var[t.var_id].push_back(&t);
    for (const auto& [vid, terms] : by_var) {
      int d = layout_.var_dim[static_cast<size_t>(vid)];
      int pc = layout_.var_params[static_cast<size_t>(vid)];
      for (int k = 0; k < pc; ++k) {
        Matrix b = basis_element(d, k, real_mode_);
        Matrix m = Matrix::Zero(e.dim(), e.dim());
        for (const MatrixTerm* t : terms)
          m += t->scale * (t->map ? t->map(b) : b);
        if (real_mode_ && !matrix_exactly_real(m)) throw RealModeAbort{};
        double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-11 * scale)
          fail("conic model: a matrix expression is not Hermitian preserving");
        cb(layout_.var_offset[static_cast<size_t>(vid)] + k, m);
      }
    }
    std::map<int, Matrix> sacc;
    for (const ScalarMatrixTerm& t : e.scalar_terms()) {
      Matrix c = (t.coeff + t.coeff.adjoint()) / 2.0;
      auto [it, fresh] = sacc.try_emplace(t.scalar_id, c);
      if (!fresh) it->second += c;
    }
    for (const auto& [sid, m] : sacc) {
      if (real_mode_ && !matrix_exactly_real(m)) throw RealModeAbort{};
      cb(layout_.scalar_offset[static_cast<size_t>(sid)], m);
    }
  }

  void scalar_coefficients(const ScalarExpr& e, RealVector& out) const {
    std::vector<std::pair<int, double>> coeffs;
    for (const auto& [vid, c] : e.inner_terms) {
      if (real_mode_ && !matrix_exactly_real(Matrix((c + c.adjoint()) / 2.0)))
        throw RealModeAbort{};
      inner_coefficients(c, layout_.var_offset[static_cast<size_t>(vid)], real_mode_,
                         coeffs);
    }
    for (const auto& [sid, v] : e.scalar_terms)
      coeffs.push_back({layout_.scalar_offset[static_cast<size_t>(sid)], v});
    for (const auto& [idx, v] : coeffs) out(idx) += v;
  }

 private:
  bool real_mode_;
  ParamLayout layout_;
};

// row bookkeeping for equality groups: kind, row, col within the group's
// matrix, in emission order
struct EqRowInfo {
  char kind;  // 'R' or 'I', or 'S' for scalar equalities
  int r = 0, cidx = 0;
};

}  // namespace

bool ConicProgram::probe_real_mode() const {
  auto real_const = [](const Matrix& m) {
    return m.size() == 0 || matrix_exactly_real(m);
  };
  for (const auto& eq : equalities_)
    if (!real_const(eq.expr.constant()) || !real_const(eq.rhs)) return false;
  for (const auto& pc : psd_cons_)
    if (!real_const(pc.expr.constant())) return false;
  auto scalar_ok = [&](const ScalarExpr& e) {
    for (const auto& [vid, c] : e.inner_terms) {
      (void)vid;
      if (!matrix_exactly_real(Matrix((c + c.adjoint()) / 2.0))) return false;
    }
    return true;
  };
  if (!scalar_ok(objective_)) return false;
  for (const auto& r : rows_)
    if (!scalar_ok(r.expr)) return false;
  for (const auto& se : scalar_equalities_)
    if (!scalar_ok(se.expr)) return false;

  // probe every term's map on fixed random real matrices; a complex-coefficient
  // map leaks imaginary parts with probability one
  std::mt19937_64 gen(0x5eedULL);
  auto unit = [&gen]() {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
  };
  auto check_terms = [&](const MatrixExpr& e) {
    for (const MatrixTerm& t : e.terms()) {
      if (!t.map) continue;
      int d = vars_[static_cast<size_t>(t.var_id)].dims.total_dim();
      for (int rep = 0; rep < 2; ++rep) {
        Matrix probe(d, d);
        for (int j = 0; j < d; ++j)
          for (int i = 0; i < d; ++i) probe(i, j) = unit();
        if (!matrix_exactly_real(t.map(probe))) return false;
      }
    }
    return true;
  };
  for (const auto& eq : equalities_)
    if (!check_terms(eq.expr)) return false;
  for (const auto& pc : psd_cons_)
    if (!check_terms(pc.expr)) return false;
  return true;
}

SolveReport ConicProgram::solve(const SolverOptions& opts) const {
  bool try_real = probe_real_mode();
  for (int attempt = 0; attempt < 2; ++attempt) {
    bool real_mode = try_real && attempt == 0;
    if (!try_real && attempt == 0) continue;
    try {
      // ---- emission ----
      std::vector<std::pair<DimProfile, std::string>> vinfo;
      for (const auto& v : vars_) vinfo.push_back({v.dims, v.name});
      Compiler comp(vinfo, static_cast<int>(scalar_names_.size()), real_mode);
      int n = comp.layout().total;
      if (n == 0) fail("ConicProgram: no variables");

      std::vector<Eigen::Triplet<double>> atrip, gtrip;
      std::vector<double> bvals, hvals;
      // equality groups: row ranges + per-row reconstruction info
      std::map<int, std::pair<int, std::vector<EqRowInfo>>> eq_rows;
      std::map<int, int> sceq_rows;

      for (const auto& eq : equalities_) {
        int base = static_cast<int>(bvals.size());
        std::vector<EqRowInfo> info;
        int d = eq.expr.dim();
        Matrix c0 = eq.expr.constant().size() ? eq.expr.constant()
                                              : Matrix::Zero(d, d);
        Matrix target = eq.rhs - c0;
        // row layout: for each upper-triangle entry a Re row, then an Im row
        std::vector<std::pair<int, int>> entries;
        for (int cc = 0; cc < d; ++cc)
          for (int rr = 0; rr <= cc; ++rr) entries.push_back({rr, cc});
        std::vector<int> re_row(entries.size()), im_row(entries.size(), -1);
        for (size_t eidx = 0; eidx < entries.size(); ++eidx) {
          auto [rr, cc] = entries[eidx];
          re_row[eidx] = static_cast<int>(bvals.size());
          bvals.push_back(target(rr, cc).real());
          info.push_back({'R', rr, cc});
          if (rr != cc && !real_mode) {
            im_row[eidx] = static_cast<int>(bvals.size());
            bvals.push_back(target(rr, cc).imag());
            info.push_back({'I', rr, cc});
          }
        }
        comp.for_each_param(eq.expr, [&](int col, const Matrix& m) {
          for (size_t eidx = 0; eidx < entries.size(); ++eidx) {
            auto [rr, cc] = entries[eidx];
            Complex v = m(rr, cc);
            if (v.real() != 0.0) atrip.emplace_back(re_row[eidx], col, v.real());
            if (im_row[eidx] >= 0 && v.imag() != 0.0)
              atrip.emplace_back(im_row[eidx], col, v.imag());
          }
        });
        eq_rows[eq.group] = {base, std::move(info)};
      }

      for (const auto& se : scalar_equalities_) {
        int row = static_cast<int>(bvals.size());
        bvals.push_back(se.rhs);
        RealVector coeffs = RealVector::Zero(n);
        comp.scalar_coefficients(se.expr, coeffs);
        for (int k = 0; k < n; ++k)
          if (coeffs(k) != 0.0) atrip.emplace_back(row, k, coeffs(k));
        sceq_rows[se.group] = row;
      }

      // nonneg rows of G: lin <= rhs becomes  lin + slack = rhs
      std::map<int, int> row_groups;
      for (const auto& rc : rows_) {
        int row = static_cast<int>(hvals.size());
        hvals.push_back(rc.rhs);
        RealVector coeffs = RealVector::Zero(n);
        comp.scalar_coefficients(rc.expr, coeffs);
        for (int k = 0; k < n; ++k)
          if (coeffs(k) != 0.0) gtrip.emplace_back(row, k, coeffs(k));
        row_groups[rc.group] = row;
      }

      LpConeDims cone;
      cone.nonneg = static_cast<int>(hvals.size());
      std::map<int, std::pair<int, int>> psd_blocks;  // group -> (offset, side)
      for (const auto& pc : psd_cons_) {
        int d = pc.expr.dim();
        int side = real_mode ? d : 2 * d;
        int base = static_cast<int>(hvals.size());
        Matrix c0 = pc.expr.constant().size() ? pc.expr.constant()
                                              : Matrix::Zero(d, d);
        if (real_mode && !matrix_exactly_real(c0)) throw RealModeAbort{};
        RealVector hseg =
            real_mode ? svec_sym(c0.real()) : svec_sym(embed_complex(c0));
        for (int k = 0; k < hseg.size(); ++k) hvals.push_back(hseg(k));
        comp.for_each_param(pc.expr, [&](int col, const Matrix& m) {
          RealVector colv =
              real_mode ? svec_sym(m.real()) : svec_sym(embed_complex(m));
          for (int k = 0; k < colv.size(); ++k)
            if (colv(k) != 0.0) gtrip.emplace_back(base + k, col, -colv(k));
        });
        cone.psd_dims.push_back(side);
        psd_blocks[pc.group] = {base, side};
      }

      if (cone.rows() == 0)
        fail("ConicProgram: program has no conic constraints");

      RealVector c = RealVector::Zero(n);
      if (objective_set_) {
        comp.scalar_coefficients(objective_, c);
        if (maximize_) c = -c;
      }

      int p = static_cast<int>(bvals.size());
      int mrows = static_cast<int>(hvals.size());
      SparseReal A(p, n), G(mrows, n);
      A.setFromTriplets(atrip.begin(), atrip.end());
      G.setFromTriplets(gtrip.begin(), gtrip.end());
      RealVector b(p), h(mrows);
      for (int k = 0; k < p; ++k) b(k) = bvals[static_cast<size_t>(k)];
      for (int k = 0; k < mrows; ++k) h(k) = hvals[static_cast<size_t>(k)];

      ConeLPResult lp = solve_cone_lp(c, A, b, G, h, cone, opts);

      // ---- decode ----
      SolveReport sol;
      sol.status = lp.status;
      sol.iterations = lp.iterations;
      sol.primal_residual = lp.primal_residual;
      sol.dual_residual = lp.dual_residual;
      sol.is_certificate =
          lp.status == SolveStatus::Infeasible || lp.status == SolveStatus::Unbounded;

      if (lp.status != SolveStatus::Infeasible) {
        for (size_t v = 0; v < vars_.size(); ++v)
          sol.var_values[static_cast<int>(v)] =
              decode_variable(lp.x, comp.layout().var_offset[v],
                              comp.layout().var_dim[v], real_mode);
        for (size_t sidx = 0; sidx < scalar_names_.size(); ++sidx)
          sol.scalar_values.push_back(lp.x(comp.layout().scalar_offset[sidx]));
      }

      if (lp.status == SolveStatus::Optimal ||
          lp.status == SolveStatus::MaxIterations ||
          lp.status == SolveStatus::Infeasible) {
        for (const auto& [group, rows] : eq_rows) {
          const auto& [base, info] = rows;
          int d = 0;
          for (const auto& eq : equalities_)
            if (eq.group == group) d = eq.expr.dim();
          Matrix dual = Matrix::Zero(d, d);
          int row = base;
          for (const EqRowInfo& ri : info) {
            double yv = lp.y.size() > row ? lp.y(row) : 0.0;
            if (ri.kind == 'R') {
              if (ri.r == ri.cidx) {
                dual(ri.r, ri.r) += yv;
              } else {
                dual(ri.r, ri.cidx) += yv / 2.0;
                dual(ri.cidx, ri.r) += yv / 2.0;
              }
            } else {
              dual(ri.r, ri.cidx) += Complex(0.0, yv / 2.0);
              dual(ri.cidx, ri.r) += Complex(0.0, -yv / 2.0);
            }
            ++row;
          }
          sol.equality_duals[group] = dual;
        }
        for (const auto& [group, row] : sceq_rows)
          if (lp.y.size() > row) sol.nonneg_duals[group] = lp.y(row);
        for (const auto& [group, row] : row_groups)
          if (lp.z.size() > row) sol.nonneg_duals[group] = lp.z(row);
        for (const auto& [group, blockinfo] : psd_blocks) {
          auto [offset, side] = blockinfo;
          RealVector seg = lp.z.segment(offset, svec_dim(side));
          RealMatrix zb = smat_sym(seg, side);
          sol.psd_duals[group] =
              real_mode ? Matrix(zb.cast<Complex>()) : complexify_dual(zb);
        }
      }

      double internal_p = lp.primal_objective;
      double internal_d = lp.dual_objective;
      if (lp.status == SolveStatus::Optimal ||
          lp.status == SolveStatus::MaxIterations) {
        if (maximize_) {
          sol.primal_value = -internal_p + objective_.constant;
          sol.dual_value = -internal_d + objective_.constant;
        } else {
          sol.primal_value = internal_p + objective_.constant;
          sol.dual_value = internal_d + objective_.constant;
        }
        sol.gap = std::abs(sol.primal_value - sol.dual_value);
      }
      return sol;
    } catch (const RealModeAbort&) {
      try_real = false;
      continue;
    }
  }
  fail("ConicProgram::solve: unreachable");
}

}  // namespace conelab
