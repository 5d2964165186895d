#include "conelab/operator_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace conelab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

long long product_of(const std::vector<int>& dims) {
  long long p = 1;
  for (int d : dims) p *= d;
  return p;
}

// stride[m] = product of dims after m; composite index = sum_m i_m * stride[m].
std::vector<long long> strides_for(const std::vector<int>& dims) {
  std::vector<long long> s(dims.size(), 1);
  for (int m = static_cast<int>(dims.size()) - 2; m >= 0; --m)
    s[m] = s[m + 1] * dims[m + 1];
  return s;
}

// Composite offsets contributed by a factor subset, enumerated in row-major
// order over that subset.
std::vector<long long> subset_offsets(const std::vector<int>& dims,
                                      const std::vector<long long>& strides,
                                      const std::vector<int>& subset) {
  long long n = 1;
  for (int m : subset) n *= dims[m];
  std::vector<long long> out(static_cast<size_t>(n), 0);
  for (long long i = 0; i < n; ++i) {
    long long rem = i;
    long long off = 0;
    for (int k = static_cast<int>(subset.size()) - 1; k >= 0; --k) {
      int m = subset[k];
      off += (rem % dims[m]) * strides[m];
      rem /= dims[m];
    }
    out[static_cast<size_t>(i)] = off;
  }
  return out;
}

std::vector<int> checked_subset(const std::vector<int>& subset, int n_factors,
                                const char* what) {
  std::vector<int> s = subset;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (s.size() != subset.size()) {
    std::ostringstream os;
    os << what << ": repeated factor index";
    fail(os.str());
  }
  for (int m : s)
    if (m < 0 || m >= n_factors) {
      std::ostringstream os;
      os << what << ": factor index " << m << " out of range [0," << n_factors << ")";
      fail(os.str());
    }
  return s;
}

void check_square(const Matrix& x, long long total, const char* what) {
  if (x.rows() != total || x.cols() != total) {
    std::ostringstream os;
    os << what << ": matrix is " << x.rows() << "x" << x.cols()
       << " but factor dims give " << total;
    fail(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DimProfile

DimProfile::DimProfile(std::initializer_list<Factor> factors) : factors_(factors) {
  validate();
}

DimProfile::DimProfile(std::vector<Factor> factors) : factors_(std::move(factors)) {
  validate();
}

void DimProfile::validate() {
  std::set<std::string> seen;
  total_ = 1;
  for (const Factor& f : factors_) {
    if (f.dim < 1) fail("DimProfile: factor '" + f.label + "' has dim " +
                        std::to_string(f.dim));
    if (f.label.empty()) fail("DimProfile: empty factor label");
    if (!seen.insert(f.label).second)
      fail("DimProfile: duplicate factor label '" + f.label + "'");
    total_ *= f.dim;
  }
}

const Factor& DimProfile::factor(int i) const {
  if (i < 0 || i >= factor_count())
    fail("DimProfile: factor index " + std::to_string(i) + " out of range");
  return factors_[static_cast<size_t>(i)];
}

std::vector<int> DimProfile::dims() const {
  std::vector<int> d;
  d.reserve(factors_.size());
  for (const Factor& f : factors_) d.push_back(f.dim);
  return d;
}

std::vector<std::string> DimProfile::labels() const {
  std::vector<std::string> l;
  l.reserve(factors_.size());
  for (const Factor& f : factors_) l.push_back(f.label);
  return l;
}

bool DimProfile::has_label(const std::string& label) const {
  for (const Factor& f : factors_)
    if (f.label == label) return true;
  return false;
}

int DimProfile::index_of(const std::string& label) const {
  for (size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].label == label) return static_cast<int>(i);
  fail("DimProfile: no factor labeled '" + label + "' in " + describe());
}

std::vector<int> DimProfile::indices_of(const std::vector<std::string>& labels) const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const std::string& l : labels) out.push_back(index_of(l));
  return out;
}

bool DimProfile::operator==(const DimProfile& other) const {
  if (factors_.size() != other.factors_.size()) return false;
  for (size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].label != other.factors_[i].label ||
        factors_[i].dim != other.factors_[i].dim)
      return false;
  return true;
}

bool DimProfile::same_dims(const DimProfile& other) const {
  if (factors_.size() != other.factors_.size()) return false;
  for (size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].dim != other.factors_[i].dim) return false;
  return true;
}

std::string DimProfile::describe() const {
  std::ostringstream os;
  for (size_t i = 0; i < factors_.size(); ++i) {
    if (i) os << " (x) ";
    os << factors_[i].label << ":" << factors_[i].dim;
  }
  if (factors_.empty()) os << "(scalar)";
  return os.str();
}

// ---------------------------------------------------------------------------
// HermitianOperator

HermitianOperator::HermitianOperator(DimProfile dims, const Matrix& entries)
    : dims_(std::move(dims)) {
  if (entries.rows() != entries.cols())
    fail("HermitianOperator: matrix is not square");
  if (entries.rows() != dims_.total_dim()) {
    std::ostringstream os;
    os << "HermitianOperator: matrix dim " << entries.rows() << " does not match "
       << dims_.describe();
    fail(os.str());
  }
  double dev = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  if (dev > 1e-9 * scale)
    std::cerr << "warning: symmetrizing operator with hermiticity deviation " << dev
              << " on " << dims_.describe() << "\n";
  mat_ = (entries + entries.adjoint()) / 2.0;
}

// ---------------------------------------------------------------------------
// Kraus / Choi

KrausSet kraus_cp(std::vector<Matrix> ops) {
  if (ops.empty()) fail("kraus_cp: empty operator list");
  KrausSet k;
  k.output_dim = static_cast<int>(ops[0].rows());
  k.input_dim = static_cast<int>(ops[0].cols());
  for (const Matrix& m : ops)
    if (m.rows() != k.output_dim || m.cols() != k.input_dim)
      fail("kraus_cp: inconsistent operator shapes");
  k.left = std::move(ops);
  return k;
}

KrausSet kraus_general(std::vector<Matrix> left, std::vector<Matrix> right) {
  if (left.empty() || left.size() != right.size())
    fail("kraus_general: left/right lists must be non-empty and equal length");
  KrausSet k;
  k.output_dim = static_cast<int>(left[0].rows());
  k.input_dim = static_cast<int>(left[0].cols());
  for (size_t i = 0; i < left.size(); ++i)
    if (left[i].rows() != k.output_dim || left[i].cols() != k.input_dim ||
        right[i].rows() != k.output_dim || right[i].cols() != k.input_dim)
      fail("kraus_general: inconsistent operator shapes");
  k.left = std::move(left);
  k.right = std::move(right);
  return k;
}

ChoiOperator::ChoiOperator(HermitianOperator op, int in_factor_count, Tristate cp,
                           Tristate tp, Tristate unital)
    : op_(std::move(op)), in_factors_(in_factor_count), cp_(cp), tp_(tp), unital_(unital) {
  int n = op_.dims().factor_count();
  if (in_factors_ < 1 || in_factors_ >= n)
    fail("ChoiOperator: in_factor_count " + std::to_string(in_factors_) +
         " invalid for " + op_.dims().describe());
  const Matrix& j = op_.matrix();
  double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
  if (cp_ == Tristate::Yes) {
    if (min_eigenvalue(j) < -1e-9 * scale)
      fail("ChoiOperator: matrix claimed completely positive but has eigenvalue " +
           std::to_string(min_eigenvalue(j)));
  }
  std::vector<int> d = op_.dims().dims();
  std::vector<int> out_idx(static_cast<size_t>(n - in_factors_));
  std::iota(out_idx.begin(), out_idx.end(), in_factors_);
  std::vector<int> in_idx(static_cast<size_t>(in_factors_));
  std::iota(in_idx.begin(), in_idx.end(), 0);
  if (tp_ == Tristate::Yes) {
    Matrix marg = partial_trace_m(j, d, out_idx);
    if ((marg - Matrix::Identity(marg.rows(), marg.cols())).cwiseAbs().maxCoeff() >
        1e-9 * scale)
      fail("ChoiOperator: matrix claimed trace preserving but output marginal is not I");
  }
  if (unital_ == Tristate::Yes) {
    Matrix marg = partial_trace_m(j, d, in_idx);
    if ((marg - Matrix::Identity(marg.rows(), marg.cols())).cwiseAbs().maxCoeff() >
        1e-9 * scale)
      fail("ChoiOperator: matrix claimed unital but input marginal is not I");
  }
}

DimProfile ChoiOperator::in_profile() const {
  std::vector<Factor> f(op_.dims().factors().begin(),
                        op_.dims().factors().begin() + in_factors_);
  return DimProfile(f);
}

DimProfile ChoiOperator::out_profile() const {
  std::vector<Factor> f(op_.dims().factors().begin() + in_factors_,
                        op_.dims().factors().end());
  return DimProfile(f);
}

int ChoiOperator::in_dim() const { return in_profile().total_dim(); }
int ChoiOperator::out_dim() const { return out_profile().total_dim(); }

// ---------------------------------------------------------------------------
// vec / tensor-index plumbing

Vector vec(const Matrix& x) {
  return Eigen::Map<const Vector>(x.data(), x.size());
}

Matrix unvec(const Vector& v, int rows, int cols) {
  if (v.size() != static_cast<long long>(rows) * cols)
    fail("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

RealMatrix kron_real(const RealMatrix& a, const RealMatrix& b) {
  RealMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix partial_trace_m(const Matrix& x, const std::vector<int>& dims,
                       const std::vector<int>& traced) {
  long long total = product_of(dims);
  check_square(x, total, "partial_trace");
  std::vector<int> tr = checked_subset(traced, static_cast<int>(dims.size()),
                                       "partial_trace");
  std::vector<int> kept;
  for (int m = 0; m < static_cast<int>(dims.size()); ++m)
    if (!std::binary_search(tr.begin(), tr.end(), m)) kept.push_back(m);
  std::vector<long long> st = strides_for(dims);
  std::vector<long long> koff = subset_offsets(dims, st, kept);
  std::vector<long long> toff = subset_offsets(dims, st, tr);
  long long dk = static_cast<long long>(koff.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (long long r = 0; r < dk; ++r)
    for (long long c = 0; c < dk; ++c) {
      Complex acc = 0.0;
      for (long long t : toff) acc += x(koff[r] + t, koff[c] + t);
      out(r, c) = acc;
    }
  return out;
}

Matrix partial_transpose_m(const Matrix& x, const std::vector<int>& dims,
                           const std::vector<int>& transposed) {
  long long total = product_of(dims);
  check_square(x, total, "partial_transpose");
  std::vector<int> tr = checked_subset(transposed, static_cast<int>(dims.size()),
                                       "partial_transpose");
  std::vector<int> kept;
  for (int m = 0; m < static_cast<int>(dims.size()); ++m)
    if (!std::binary_search(tr.begin(), tr.end(), m)) kept.push_back(m);
  std::vector<long long> st = strides_for(dims);
  std::vector<long long> koff = subset_offsets(dims, st, kept);
  std::vector<long long> toff = subset_offsets(dims, st, tr);
  Matrix out(total, total);
  for (long long kr : koff)
    for (long long kc : koff)
      for (long long tr1 : toff)
        for (long long tc1 : toff)
          out(kr + tc1, kc + tr1) = x(kr + tr1, kc + tc1);
  return out;
}

Matrix permute_factors_m(const Matrix& x, const std::vector<int>& dims,
                         const std::vector<int>& new_order) {
  long long total = product_of(dims);
  check_square(x, total, "permute_factors");
  int n = static_cast<int>(dims.size());
  std::vector<int> check = checked_subset(new_order, n, "permute_factors");
  if (static_cast<int>(check.size()) != n)
    fail("permute_factors: new_order is not a permutation");
  std::vector<int> new_dims(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) new_dims[static_cast<size_t>(k)] = dims[new_order[k]];
  std::vector<long long> old_st = strides_for(dims);
  std::vector<long long> new_st = strides_for(new_dims);
  std::vector<long long> map(static_cast<size_t>(total));
  for (long long idx = 0; idx < total; ++idx) {
    // digits of idx in the old layout
    std::vector<long long> digit(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m)
      digit[static_cast<size_t>(m)] = (idx / old_st[m]) % dims[m];
    long long nidx = 0;
    for (int k = 0; k < n; ++k) nidx += digit[static_cast<size_t>(new_order[k])] * new_st[k];
    map[static_cast<size_t>(idx)] = nidx;
  }
  Matrix out(total, total);
  for (long long r = 0; r < total; ++r)
    for (long long c = 0; c < total; ++c) out(map[r], map[c]) = x(r, c);
  return out;
}

// ---------------------------------------------------------------------------
// Labeled wrappers

HermitianOperator partial_trace(const HermitianOperator& x, const std::string& label) {
  return partial_trace(x, std::vector<std::string>{label});
}

HermitianOperator partial_trace(const HermitianOperator& x,
                                const std::vector<std::string>& labels) {
  std::vector<int> idx = x.dims().indices_of(labels);
  std::vector<int> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  Matrix m = partial_trace_m(x.matrix(), x.dims().dims(), idx);
  std::vector<Factor> remaining;
  for (int i = 0; i < x.dims().factor_count(); ++i)
    if (!std::binary_search(sorted.begin(), sorted.end(), i))
      remaining.push_back(x.dims().factor(i));
  if (remaining.empty())
    fail("partial_trace: tracing out every factor; use trace() instead");
  return HermitianOperator(DimProfile(remaining), m);
}

HermitianOperator partial_transpose(const HermitianOperator& x, const std::string& label) {
  return partial_transpose(x, std::vector<std::string>{label});
}

HermitianOperator partial_transpose(const HermitianOperator& x,
                                    const std::vector<std::string>& labels) {
  std::vector<int> idx = x.dims().indices_of(labels);
  return HermitianOperator(x.dims(),
                           partial_transpose_m(x.matrix(), x.dims().dims(), idx));
}

HermitianOperator permute_factors(const HermitianOperator& x,
                                  const std::vector<std::string>& new_order) {
  std::vector<int> idx = x.dims().indices_of(new_order);
  if (static_cast<int>(idx.size()) != x.dims().factor_count())
    fail("permute_factors: new order must list every factor once");
  Matrix m = permute_factors_m(x.matrix(), x.dims().dims(), idx);
  std::vector<Factor> f;
  for (int i : idx) f.push_back(x.dims().factor(i));
  return HermitianOperator(DimProfile(f), m);
}

HermitianOperator relabel(const HermitianOperator& x,
                          const std::vector<std::string>& labels) {
  if (static_cast<int>(labels.size()) != x.dims().factor_count())
    fail("relabel: label count mismatch");
  std::vector<Factor> f = x.dims().factors();
  for (size_t i = 0; i < f.size(); ++i) f[i].label = labels[i];
  return HermitianOperator(DimProfile(f), x.matrix());
}

HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b) {
  std::vector<Factor> f = a.dims().factors();
  for (const Factor& g : b.dims().factors()) {
    if (a.dims().has_label(g.label))
      fail("tensor: factor label '" + g.label + "' appears on both sides");
    f.push_back(g);
  }
  return HermitianOperator(DimProfile(f), kron(a.matrix(), b.matrix()));
}

HermitianOperator identity_on(const DimProfile& dims) {
  return HermitianOperator(dims, Matrix::Identity(dims.total_dim(), dims.total_dim()));
}

HermitianOperator swap_operator(int d) {
  if (d < 1) fail("swap_operator: dim must be >= 1");
  Matrix f = Matrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) f(i * d + j, j * d + i) = 1.0;
  return HermitianOperator(DimProfile{{"A", d}, {"B", d}}, f);
}

// ---------------------------------------------------------------------------
// Choi construction and use

ChoiOperator choi_from_operator(HermitianOperator op, int in_factor_count) {
  const Matrix& m = op.matrix();
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  std::vector<int> d = op.dims().dims();
  int n = op.dims().factor_count();
  std::vector<int> out_idx(static_cast<size_t>(n - in_factor_count));
  std::iota(out_idx.begin(), out_idx.end(), in_factor_count);
  std::vector<int> in_idx(static_cast<size_t>(in_factor_count));
  std::iota(in_idx.begin(), in_idx.end(), 0);

  Tristate cp = min_eigenvalue(m) >= -1e-9 * scale ? Tristate::Yes : Tristate::No;
  Matrix out_marg = partial_trace_m(m, d, out_idx);
  Tristate tp = (out_marg - Matrix::Identity(out_marg.rows(), out_marg.cols()))
                            .cwiseAbs()
                            .maxCoeff() <= 1e-9 * scale
                    ? Tristate::Yes
                    : Tristate::No;
  Matrix in_marg = partial_trace_m(m, d, in_idx);
  Tristate unital = (in_marg - Matrix::Identity(in_marg.rows(), in_marg.cols()))
                            .cwiseAbs()
                            .maxCoeff() <= 1e-9 * scale
                        ? Tristate::Yes
                        : Tristate::No;
  return ChoiOperator(std::move(op), in_factor_count, cp, tp, unital);
}

ChoiOperator vec_choi(const KrausSet& k) {
  DimProfile profile{{"in", k.input_dim}, {"out", k.output_dim}};
  return vec_choi(k, profile, 1);
}

ChoiOperator vec_choi(const KrausSet& k, const DimProfile& profile, int in_factor_count) {
  if (in_factor_count < 1 || in_factor_count >= profile.factor_count())
    fail("vec_choi: invalid input factor count");
  long long din = 1, dout = 1;
  for (int i = 0; i < profile.factor_count(); ++i)
    (i < in_factor_count ? din : dout) *= profile.factor(i).dim;
  if (din != k.input_dim || dout != k.output_dim)
    fail("vec_choi: profile dims do not match Kraus shapes");
  long long n = din * dout;
  Matrix j = Matrix::Zero(n, n);
  const std::vector<Matrix>& right = k.right_or_left();
  for (size_t m = 0; m < k.left.size(); ++m) {
    Vector vl = vec(k.left[m]);
    Vector vr = vec(right[m]);
    j += vl * vr.adjoint();
  }
  return choi_from_operator(HermitianOperator(profile, j), in_factor_count);
}

KrausSet choi_kraus(const ChoiOperator& j, double tol) {
  const Matrix& m = j.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int din = j.in_dim(), dout = j.out_dim();
  std::vector<Matrix> ops;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam < -tol * scale)
      fail("choi_kraus: matrix is not completely positive (eigenvalue " +
           std::to_string(lam) + ")");
    if (lam > tol * scale)
      ops.push_back(std::sqrt(lam) * unvec(es.eigenvectors().col(i), dout, din));
  }
  if (ops.empty()) ops.push_back(Matrix::Zero(dout, din));
  return kraus_cp(std::move(ops));
}

Matrix apply_via_choi_m(const Matrix& choi, int d_in, int d_out, const Matrix& x) {
  if (choi.rows() != static_cast<long long>(d_in) * d_out)
    fail("apply_via_choi: Choi dim mismatch");
  if (x.rows() != d_in || x.cols() != d_in)
    fail("apply_via_choi: argument dim mismatch");
  Matrix lifted = choi * kron(x.transpose(), Matrix::Identity(d_out, d_out));
  return partial_trace_m(lifted, {d_in, d_out}, {0});
}

HermitianOperator apply_via_choi(const ChoiOperator& j, const HermitianOperator& x) {
  if (!x.dims().same_dims(j.in_profile())) {
    std::ostringstream os;
    os << "apply_via_choi: argument " << x.dims().describe()
       << " does not match map input " << j.in_profile().describe();
    fail(os.str());
  }
  Matrix y = apply_via_choi_m(j.matrix(), j.in_dim(), j.out_dim(), x.matrix());
  return HermitianOperator(j.out_profile(), y);
}

ChoiOperator adjoint_choi(const ChoiOperator& j) {
  int n = j.dims().factor_count();
  int nin = j.in_factor_count();
  std::vector<int> order;
  for (int i = nin; i < n; ++i) order.push_back(i);
  for (int i = 0; i < nin; ++i) order.push_back(i);
  Matrix m = permute_factors_m(j.matrix().conjugate(), j.dims().dims(), order);
  std::vector<Factor> f;
  for (int i : order) f.push_back(j.dims().factor(i));
  return ChoiOperator(HermitianOperator(DimProfile(f), m), n - nin, j.cp(), j.unital(),
                      j.tp());
}

// ---------------------------------------------------------------------------
// Twirls and pinchings

Matrix werner_twirl_m(const Matrix& x, int d) {
  long long n = static_cast<long long>(d) * d;
  if (x.rows() != n || x.cols() != n) fail("werner_twirl: dim mismatch");
  Matrix f = swap_operator(d).matrix();
  double t1 = x.trace().real();
  double tf = (f * x).trace().real();
  double dd = static_cast<double>(d);
  double det = dd * dd * (dd * dd - 1.0);
  double a = (dd * dd * t1 - dd * tf) / det;
  double b = (dd * dd * tf - dd * t1) / det;
  return a * Matrix::Identity(n, n) + b * f;
}

HermitianOperator werner_twirl(const HermitianOperator& x) {
  if (x.dims().factor_count() != 2 || x.dims().factor(0).dim != x.dims().factor(1).dim)
    fail("werner_twirl: needs two factors of equal dim, got " + x.dims().describe());
  return HermitianOperator(x.dims(), werner_twirl_m(x.matrix(), x.dims().factor(0).dim));
}

Matrix pinching_m(const Matrix& x, const std::vector<Matrix>& projectors) {
  if (projectors.empty()) fail("pinching: empty projector list");
  long long n = x.rows();
  Matrix sum = Matrix::Zero(n, n);
  for (size_t i = 0; i < projectors.size(); ++i) {
    const Matrix& p = projectors[i];
    if (p.rows() != n || p.cols() != n) fail("pinching: projector dim mismatch");
    if ((p - p.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
      fail("pinching: projector " + std::to_string(i) + " is not Hermitian");
    if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10)
      fail("pinching: projector " + std::to_string(i) + " is not idempotent");
    for (size_t k = 0; k < i; ++k)
      if ((projectors[k] * p).cwiseAbs().maxCoeff() > 1e-10)
        fail("pinching: projectors " + std::to_string(k) + " and " + std::to_string(i) +
             " are not orthogonal");
    sum += p;
  }
  if ((sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
    fail("pinching: projectors do not sum to the identity");
  Matrix out = Matrix::Zero(n, n);
  for (const Matrix& p : projectors) out += p * x * p;
  return out;
}

HermitianOperator pinching(const HermitianOperator& x,
                           const std::vector<Matrix>& projectors) {
  return HermitianOperator(x.dims(), pinching_m(x.matrix(), projectors));
}

// ---------------------------------------------------------------------------
// Distances

namespace {

void check_psd_input(const Matrix& x, const char* what) {
  double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if ((x - x.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    fail(std::string(what) + ": input is not Hermitian");
  if (min_eigenvalue((x + x.adjoint()) / 2.0) < -1e-9 * scale)
    fail(std::string(what) + ": input is not positive semidefinite");
}

}  // namespace

double fidelity_m(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows()) fail("fidelity: dim mismatch");
  check_psd_input(rho, "fidelity");
  check_psd_input(sigma, "fidelity");
  Matrix sr = matrix_sqrt_psd((rho + rho.adjoint()) / 2.0);
  Matrix ss = matrix_sqrt_psd((sigma + sigma.adjoint()) / 2.0);
  Eigen::JacobiSVD<Matrix> svd(sr * ss);
  return svd.singularValues().sum();
}

double fidelity(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (!rho.dims().same_dims(sigma.dims()))
    fail("fidelity: operands live on different factor layouts");
  if (rho.trace() > 1.0 + 1e-9 || sigma.trace() > 1.0 + 1e-9)
    fail("fidelity: defined for subnormalized states, got traces " +
         std::to_string(rho.trace()) + ", " + std::to_string(sigma.trace()));
  return fidelity_m(rho.matrix(), sigma.matrix());
}

double purified_distance(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (std::abs(rho.trace() - 1.0) > 1e-9 || std::abs(sigma.trace() - 1.0) > 1e-9)
    fail("purified_distance: defined here for normalized states only");
  double f = fidelity(rho, sigma);
  double v = 1.0 - f * f;
  return std::sqrt(std::max(0.0, v));
}

double trace_distance(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (!rho.dims().same_dims(sigma.dims()))
    fail("trace_distance: operands live on different factor layouts");
  double tn = trace_norm(rho.matrix() - sigma.matrix());
  return 0.5 * (tn + std::abs(rho.trace() - sigma.trace()));
}

// ---------------------------------------------------------------------------
// Reference states

Vector max_entangled_vec(int d) {
  Vector v = Vector::Zero(static_cast<long long>(d) * d);
  for (int i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
  return v;
}

Vector max_coherent_vec(int d) {
  return Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
}

HermitianOperator max_entangled(int d) {
  Vector v = max_entangled_vec(d);
  return HermitianOperator(DimProfile{{"A", d}, {"B", d}}, v * v.adjoint());
}

HermitianOperator max_coherent(int d) {
  Vector v = max_coherent_vec(d);
  return HermitianOperator(DimProfile{{"A", d}}, v * v.adjoint());
}

Matrix basis_state(int d, int i) {
  Matrix m = Matrix::Zero(d, d);
  m(i, i) = 1.0;
  return m;
}

Matrix support_projector(const Matrix& x, double tol) {
  Matrix h = (x + x.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Matrix p = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > tol)
      p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return p;
}

// ---------------------------------------------------------------------------
// Permutation-phase instruments

std::pair<ChoiOperator, int> pio_choi(const PioSpec& spec) {
  size_t n = spec.permutations.size();
  if (n == 0 || spec.phases.size() != n || spec.projector_supports.size() != n)
    fail("pio_choi: permutation, phase, and support lists must have equal length");
  int d = static_cast<int>(spec.permutations[0].size());
  if (d < 1) fail("pio_choi: empty permutation");
  std::vector<char> covered(static_cast<size_t>(d), 0);
  int max_rank = 0;
  std::vector<Matrix> kraus;
  for (size_t i = 0; i < n; ++i) {
    const auto& perm = spec.permutations[i];
    const auto& phase = spec.phases[i];
    const auto& supp = spec.projector_supports[i];
    if (static_cast<int>(perm.size()) != d || static_cast<int>(phase.size()) != d)
      fail("pio_choi: permutation/phase length mismatch at index " + std::to_string(i));
    std::vector<char> hit(static_cast<size_t>(d), 0);
    for (int v : perm) {
      if (v < 0 || v >= d || hit[static_cast<size_t>(v)])
        fail("pio_choi: entry " + std::to_string(i) + " is not a permutation");
      hit[static_cast<size_t>(v)] = 1;
    }
    Matrix k = Matrix::Zero(d, d);
    for (int a : supp) {
      if (a < 0 || a >= d || covered[static_cast<size_t>(a)])
        fail("pio_choi: projector supports must partition the basis");
      covered[static_cast<size_t>(a)] = 1;
      k(perm[static_cast<size_t>(a)], a) =
          std::exp(Complex(0.0, phase[static_cast<size_t>(a)]));
    }
    max_rank = std::max(max_rank, static_cast<int>(supp.size()));
    kraus.push_back(std::move(k));
  }
  for (char c : covered)
    if (!c) fail("pio_choi: projector supports must cover the basis");
  return {vec_choi(kraus_cp(std::move(kraus))), max_rank};
}

// ---------------------------------------------------------------------------
// Numeric helpers

Matrix matrix_sqrt_psd(const Matrix& x, double clamp_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((x + x.adjoint()) / 2.0);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  RealVector lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -clamp_tol * scale)
      fail("matrix_sqrt_psd: eigenvalue " + std::to_string(lam(i)) + " is negative");
    lam(i) = std::sqrt(std::max(lam(i), 0.0));
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((hermitian + hermitian.adjoint()) / 2.0);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((hermitian + hermitian.adjoint()) / 2.0);
  return es.eigenvalues().maxCoeff();
}

double trace_norm(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues().sum();
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  return (a - b).norm();
}

bool approx_equal(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace conelab
