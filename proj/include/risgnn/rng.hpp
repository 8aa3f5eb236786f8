// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace risgnn {

// Counter-seeded stream built on splitmix64. Unlike std::normal_distribution,
// every draw is fully specified here, so the same seed produces bit-identical
// values on any platform. derive() gives an independent substream, which is
// what makes per-sample generation order-independent and parallel-safe.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; the cosine twin is cached so draws come in deterministic pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        // uniform() can return exactly 0; log needs (0, 1].
        u1 = 1.0 - u1;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Circularly symmetric complex Gaussian with E[|z|^2] = variance.
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal(0.0, s);
        const double im = normal(0.0, s);
        return {re, im};
    }

    // Independent substream for index `id`, regardless of how much this
    // stream has been consumed.
    Rng derive(std::uint64_t id) const {
        Rng child(seed_ ^ (0x632be59bd9b4e019ULL * (id + 1)));
        child.next_u64();
        return child;
    }

  private:
    std::uint64_t seed_;
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace risgnn
