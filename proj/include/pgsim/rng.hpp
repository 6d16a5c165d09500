#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pgsim {

/// SplitMix64 finalizer. Per-stream seeds are derived as
/// split_seed(master, stream) = splitmix64(master + (stream + 1) * golden_gamma).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Deterministic source of uniform and standard-normal deviates.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard.
/// Uniforms take the top 53 bits; normals use the Marsaglia polar method
/// (only sqrt and log), so a seed reproduces the same stream on every conforming
/// platform. std::normal_distribution is avoided because its algorithm is
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pgsim
