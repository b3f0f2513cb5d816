#include "slipstokes/random.hpp"

#include "slipstokes/errors.hpp"

#include <cmath>
#include <numbers>

namespace slipstokes {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SampleRng::SampleRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

std::uint64_t SampleRng::next_u64() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

double SampleRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SampleRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Eigen::VectorXd SampleRng::normal_vector(int count) {
  Eigen::VectorXd v(count);
  for (int k = 0; k < count; ++k) v[k] = normal();
  return v;
}

Eigen::VectorXd random_stream_modal(const EigenBasis& basis, SampleRng& rng, int modes) {
  if (modes < 1 || modes > basis.size()) {
    throw Error(ErrorKind::InvalidInput, "random sampler mode count out of range");
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(basis.size());
  for (int i = 0; i < modes; ++i) a[i] = rng.normal() / std::sqrt(basis.eigenvalue(i));
  return a;
}

}  // namespace slipstokes
