#include "conelab/random_ops.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>

namespace conelab {

double Rng::uniform() {
  // 53 high bits of the raw draw, scaled into [0, 1).
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
  if (bound == 0) throw std::runtime_error("Rng::uniform_int: zero bound");
  // Rejection sampling keeps the distribution exactly uniform.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw = gen_();
  while (draw >= limit) draw = gen_();
  return draw % bound;
}

Matrix random_ginibre(Rng& rng, int rows, int cols) {
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      g(i, j) = Complex(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
  return g;
}

Matrix random_unitary(Rng& rng, int d) {
  Matrix g = random_ginibre(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase ambiguity of QR so the map g -> q is well defined.
  for (int i = 0; i < d; ++i) {
    Complex rii = r(i, i);
    double a = std::abs(rii);
    if (a > 0) q.col(i) *= rii / a;
  }
  return q;
}

Matrix random_psd(Rng& rng, int d, int rank) {
  if (rank < 0) rank = d;
  if (rank == 0) return Matrix::Zero(d, d);
  Matrix g = random_ginibre(rng, d, rank);
  return g * g.adjoint();
}

Matrix random_density(Rng& rng, int d, int rank) {
  Matrix p = random_psd(rng, d, rank);
  double t = p.trace().real();
  if (t <= 0) throw std::runtime_error("random_density: degenerate draw");
  return p / t;
}

Matrix random_hermitian(Rng& rng, int d) {
  Matrix g = random_ginibre(rng, d, d);
  return (g + g.adjoint()) / 2.0;
}

Vector random_pure(Rng& rng, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
  return v / v.norm();
}

KrausSet random_kraus_cp(Rng& rng, int d_in, int d_out, int count) {
  // Columns of a random isometry d_in -> d_out * count, split by environment
  // index; sum_k K_k^+ K_k = I so the channel is trace preserving.
  int big = d_out * count;
  if (big < d_in)
    throw std::runtime_error("random_kraus_cp: need d_out*count >= d_in for an isometry");
  Matrix g = random_ginibre(rng, big, d_in);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix v = Matrix(qr.householderQ()).leftCols(d_in);
  std::vector<Matrix> ops;
  for (int k = 0; k < count; ++k) ops.push_back(v.middleRows(k * d_out, d_out));
  return kraus_cp(std::move(ops));
}

ChoiOperator random_cptp_choi(Rng& rng, int d_in, int d_out) {
  return vec_choi(random_kraus_cp(rng, d_in, d_out, d_out));
}

}  // namespace conelab
