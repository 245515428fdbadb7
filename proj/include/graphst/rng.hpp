#pragma once

#include <cstdint>
#include <string_view>

#include "graphst/matrix.hpp"

namespace graphst {

// Counter-based 64-bit random stream (splitmix64). Identical seeds produce
// identical draw sequences on every platform; `fork` derives an independent
// labeled sub-stream without advancing the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int n);                 // [0, n)
  double gaussian();                      // standard normal via Box-Muller
  double gaussian(double mu, double sigma);
  int poisson(double rate);
  bool bernoulli(double p);

  Rng fork(std::string_view label) const;

 private:
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Tensor of i.i.d. Normal(mu, sigma^2) entries from the given stream.
Matrix gaussian_matrix(Rng& rng, int rows, int cols, double mu, double sigma);

}  // namespace graphst
