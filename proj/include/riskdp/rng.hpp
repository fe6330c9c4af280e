#pragma once
// Deterministic random number generation. The generator is xoshiro256++
// seeded through splitmix64 (both are published reference algorithms), so a
// fixed seed reproduces the same stream on every platform. All sampling
// routines are implemented on top of the raw uniform stream; none of them
// delegate to <random> distributions, whose outputs are not portable.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "riskdp/errors.hpp"

namespace riskdp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a master seed and a stream index.
/// Used to give replicas, trajectories and fits their own streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9E3779B97F4A7C15ull * (index + 1));
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(static_cast<double>(n) * uniform());
    }

    /// Standard normal via the Marsaglia polar method (second value discarded
    /// so the stream consumption is easy to reason about).
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze; alpha < 1 is boosted
    /// through Gamma(alpha + 1) * U^(1/alpha).
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw ValidationError("gamma: alpha must be > 0");
        if (alpha < 1.0) {
            const double u = uniform();
            return gamma(alpha + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Beta(a, b) as Ga / (Ga + Gb); always in [0, 1].
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        const double s = x + y;
        if (s <= 0.0) return 0.5;
        const double r = x / s;
        return r < 0.0 ? 0.0 : (r > 1.0 ? 1.0 : r);
    }

    /// Flat Dirichlet sample (all concentrations 1) on the (n-1)-simplex.
    void dirichlet(std::span<double> out) {
        double sum = 0.0;
        for (auto& w : out) {
            // Gamma(1) is a unit exponential.
            double u = uniform();
            w = -std::log(u > 0.0 ? u : 0x1.0p-53);
            sum += w;
        }
        for (auto& w : out) w /= sum;
    }

    std::vector<double> dirichlet(int n) {
        std::vector<double> out(static_cast<std::size_t>(n));
        dirichlet(std::span<double>(out));
        return out;
    }

    /// Index sample from an explicit probability vector (cumulative scan).
    int discrete(std::span<const double> probs) {
        const double r = uniform();
        double acc = 0.0;
        for (std::size_t idx = 0; idx < probs.size(); ++idx) {
            acc += probs[idx];
            if (r < acc) return static_cast<int>(idx);
        }
        return static_cast<int>(probs.size()) - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace riskdp
