#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace symtrack {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives an independent stream key from (seed, domain, index). Streams keyed
// this way never share draws, which is what makes per-env parallelism safe.
inline std::uint64_t derive_key(std::uint64_t seed, std::string_view domain,
                                std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = (h ^ mix64(seed + 0x9E3779B97F4A7C15ull)) * 0x100000001b3ull;
  for (char c : domain) {
    h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  }
  h = (h ^ mix64(index + 0x632BE59BD9B4E019ull)) * 0x100000001b3ull;
  return mix64(h);
}

// Counter-style SplitMix64 stream. The n-th output is a pure function of
// (key, n), so replaying a stream is exact regardless of platform or thread
// schedule.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with a cached spare; consumes exactly two uniforms per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // (0, 1]: avoids log(0) without a rejection loop.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::Vector3d normal3() {
    Eigen::Vector3d z;
    z << normal(), normal(), normal();
    return z;
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  // Uniform in the centered cube [-half_width, half_width]^3.
  Eigen::Vector3d uniform_box(double half_width) {
    Eigen::Vector3d z;
    z << uniform(-half_width, half_width), uniform(-half_width, half_width),
        uniform(-half_width, half_width);
    return z;
  }

  // Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    while (true) {
      Eigen::Vector3d z = normal3();
      double n = z.norm();
      if (n > 1e-12) return z / n;
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace symtrack
