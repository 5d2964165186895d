#pragma once

#include "conelab/operator_core.hpp"

#include <cstdint>
#include <random>

namespace conelab {

// Deterministic sampling across toolchains: mt19937_64 raw draws are mapped to
// doubles by hand instead of going through std::*_distribution, whose output
// is implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform();                       // [0, 1)
  double gaussian();                      // Box-Muller, standard normal
  std::uint64_t uniform_int(std::uint64_t bound);  // [0, bound)

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

Matrix random_ginibre(Rng& rng, int rows, int cols);
Matrix random_unitary(Rng& rng, int d);
Matrix random_psd(Rng& rng, int d, int rank = -1);
Matrix random_density(Rng& rng, int d, int rank = -1);
Matrix random_hermitian(Rng& rng, int d);
Vector random_pure(Rng& rng, int d);

// Choi matrix of a Haar-ish random channel from a Stinespring isometry with
// environment dimension d_out.
ChoiOperator random_cptp_choi(Rng& rng, int d_in, int d_out);
KrausSet random_kraus_cp(Rng& rng, int d_in, int d_out, int count);

}  // namespace conelab
