#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace stableheat {

/// Philox4x32-10 counter-based generator. Output is a pure function of
/// (key, counter), so streams keyed by (path, step) can be evaluated in any
/// order on any thread and still reproduce bit-identically.
struct Philox4x32 {
  struct Block {
    std::uint32_t v[4];
  };

  static Block round10(std::uint32_t k0, std::uint32_t k1, Block ctr) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr.v[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr.v[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = Block{{hi1 ^ ctr.v[1] ^ k0, lo1, hi0 ^ ctr.v[3] ^ k1, lo0}};
      k0 += kW0;
      k1 += kW1;
    }
    return ctr;
  }
};

/// One logical Gaussian stream for a (seed, path, step) triple. Normals come
/// from Box-Muller pairs on Philox output; draw index i is encoded in the
/// counter, so stream(i) is random access.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t path_id, std::uint64_t step_id)
      : k0_(static_cast<std::uint32_t>(seed) ^ static_cast<std::uint32_t>(path_id >> 32)),
        k1_(static_cast<std::uint32_t>(seed >> 32) ^ static_cast<std::uint32_t>(step_id >> 32)),
        c0_(static_cast<std::uint32_t>(path_id)),
        c1_(static_cast<std::uint32_t>(step_id)) {}

  /// i-th and (i+1)-th standard normals of the stream (one Philox block).
  void normal_pair(std::uint32_t pair_index, double& z0, double& z1) const {
    const Philox4x32::Block out =
        Philox4x32::round10(k0_, k1_, Philox4x32::Block{{c0_, c1_, pair_index, 0x5748u}});
    const double u1 = to_unit_open(out.v[0], out.v[1]);
    const double u2 = to_unit_open(out.v[2], out.v[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    z0 = r * std::cos(phi);
    z1 = r * std::sin(phi);
  }

  /// Fills v with consecutive standard normals starting at draw 0.
  void fill_normals(Eigen::VectorXd& v) const {
    const int n = static_cast<int>(v.size());
    for (int i = 0; i < n; i += 2) {
      double z0, z1;
      normal_pair(static_cast<std::uint32_t>(i / 2), z0, z1);
      v[i] = z0;
      if (i + 1 < n) v[i + 1] = z1;
    }
  }

 private:
  // 64 bits -> double in (0, 1); never 0, so log() is safe.
  static double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint32_t k0_, k1_, c0_, c1_;
};

}  // namespace stableheat
