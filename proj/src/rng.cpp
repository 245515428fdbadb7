#include "graphst/rng.hpp"

#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

namespace {

std::uint64_t splitmix64(std::uint64_t& counter) {
  std::uint64_t z = (counter += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : counter_(seed) {}

std::uint64_t Rng::next_u64() { return splitmix64(counter_); }

double Rng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  if (n <= 0) throw ConfigError("uniform_int: n must be positive");
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::gaussian(double mu, double sigma) {
  if (sigma < 0.0) throw ConfigError("gaussian: sigma must be non-negative");
  if (sigma == 0.0) return mu;
  return mu + sigma * gaussian();
}

int Rng::poisson(double rate) {
  if (rate < 0.0) throw ConfigError("poisson: rate must be non-negative");
  if (rate == 0.0) return 0;
  // Knuth's method; rates here are small.
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > limit);
  return k - 1;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Rng Rng::fork(std::string_view label) const {
  std::uint64_t child = counter_ ^ fnv1a(label);
  // One mixing round so that fork("a") and fork("b") decorrelate fully.
  return Rng(splitmix64(child));
}

Matrix gaussian_matrix(Rng& rng, int rows, int cols, double mu, double sigma) {
  if (sigma < 0.0) throw ConfigError("gaussian_matrix: sigma must be non-negative");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.gaussian(mu, sigma);
  return m;
}

}  // namespace graphst
