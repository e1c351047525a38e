#pragma once

// Oracles shared by the unit suites and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pgmn/model.hpp"
#include "pgmn/numkit.hpp"
#include "pgmn/train.hpp"

namespace pgmn::testkit {

struct GradCheckStats {
    std::size_t configs = 0;
    std::size_t entries = 0;
    std::size_t failures = 0;
    std::size_t rejected = 0; // draws discarded for sitting near a ReLU kink
    double worst_rel = 0.0; // among entries above the absolute floor
    double worst_abs = 0.0;
};

inline bool near_kink(const ForwardTrace& t, double margin)
{
    for (const Vec64* v : {&t.pre_hd, &t.pre_he, &t.pre_zd, &t.pre_ze}) {
        for (double x : v->values) {
            if (std::abs(x) < margin) {
                return true;
            }
        }
    }
    return false;
}

inline PgmnParams random_params(const PgmnDims& dims, std::mt19937_64& rng, bool memory_unit)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PgmnParams p(dims);
    for (auto t : p.tensors()) {
        for (double& v : t) {
            v = u(rng);
        }
    }
    if (!memory_unit) {
        // Same shape as init_params produces for the ablated variant.
        p = PgmnParams(dims);
        p.memory_unit = false;
        for (auto t : p.tensors()) {
            for (double& v : t) {
                v = u(rng);
            }
        }
        std::fill(p.memory.values.begin(), p.memory.values.end(), 0.0);
        std::fill(p.w_pi3.values.begin(), p.w_pi3.values.end(), 0.0);
        for (std::size_t r = 0; r < dims.d_z; ++r) {
            for (std::size_t c = dims.d; c < dims.d + dims.d_m; ++c) {
                p.w_zd(r, c) = 0.0;
                p.w_ze(r, c) = 0.0;
            }
        }
    }
    return p;
}

/// Analytic gradients against central differences over random draws, rejecting
/// draws whose pre-activations sit within 1e-3 of a kink.
inline GradCheckStats gradient_sweep(std::size_t configs, std::uint64_t seed, double h = 1e-5, double rel = 1e-5,
                                     double abs_floor = 1e-8)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution mostly(0.85);
    GradCheckStats stats;
    while (stats.configs < configs) {
        const PgmnDims dims{dim(rng), dim(rng), dim(rng)};
        const bool mu = mostly(rng);
        const auto p = random_params(dims, rng, mu);
        MaskedSample s;
        s.x_d = u(rng);
        s.m_d = coin(rng) ? 1 : 0;
        s.x_e = u(rng);
        s.m_e = coin(rng) ? 1 : 0;
        s.y = u(rng) * 3.0;
        const auto trace = forward(s, p);
        if (near_kink(trace, 1e-3)) {
            ++stats.rejected;
            continue;
        }
        const auto analytic = backward(trace, s, p).second;
        const auto numeric =
            finite_diff_grad<Gradients>([&s](const PgmnParams& q) { return sample_loss(s, q); }, p, h);
        const auto at = analytic.tensors();
        const auto nt = numeric.tensors();
        for (std::size_t i = 0; i < at.size(); ++i) {
            for (std::size_t j = 0; j < at[i].size(); ++j) {
                const double a = at[i][j];
                const double n = nt[i][j];
                const double scale = std::max(std::abs(a), std::abs(n));
                const double err = std::abs(a - n);
                ++stats.entries;
                stats.worst_abs = std::max(stats.worst_abs, err);
                if (err > abs_floor + rel * scale) {
                    ++stats.failures;
                }
                if (err > abs_floor) {
                    stats.worst_rel = std::max(stats.worst_rel, err / std::max(scale, 1e-300));
                }
            }
        }
        ++stats.configs;
    }
    return stats;
}

} // namespace pgmn::testkit
