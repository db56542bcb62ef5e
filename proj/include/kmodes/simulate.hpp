#ifndef KMODES_SIMULATE_HPP
#define KMODES_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cluster_state.hpp"
#include "dataset.hpp"
#include "rng.hpp"

/**
 * @file simulate.hpp
 *
 * @brief Synthetic categorical data from a nested continuous-time Markov
 * chain.
 *
 * All categories exchange at equal rates, so the chain admits a closed-form
 * transition probability and no event-by-event simulation is needed: after
 * time t a coordinate has changed with probability
 *
 *     q(t) = ((J-1)/J) * (1 - exp(-t/3)),
 *
 * and conditional on change the new category is uniform over the other J-1.
 * The rate constant 1/3 calibrates the time axis so that, with J = 4,
 * t in {0.5, 1.0, 1.2, 2.0} induces change probabilities of roughly
 * {0.12, 0.21, 0.25, 0.36}.
 *
 * Generation is two-level: K cluster modes evolve from a uniform random
 * ancestor for a fixed inner time t0 (chosen so each coordinate changes with
 * probability 0.70), then each observation evolves from its cluster's mode
 * for the outer time t. Cluster proportions are Dirichlet(1,...,1) and sizes
 * multinomial; draws with an empty cluster or duplicate modes are rejected
 * and redrawn.
 */

namespace kmodes {

/// Probability that a coordinate differs from its start after time t.
inline double ctmc_change_prob(double t, std::int32_t categories) {
    if (t < 0 || categories < 2) throw std::invalid_argument("ctmc_change_prob: bad arguments");
    const double j = static_cast<double>(categories);
    return ((j - 1.0) / j) * (1.0 - std::exp(-t / 3.0));
}

/// Inner evolution time giving the target per-coordinate change probability.
inline double ctmc_time_for_change_prob(double prob, std::int32_t categories) {
    const double j = static_cast<double>(categories);
    const double ceiling = (j - 1.0) / j;
    if (prob <= 0 || prob >= ceiling) {
        throw std::invalid_argument("change probability " + std::to_string(prob) +
                                    " unreachable with " + std::to_string(categories) + " categories");
    }
    return -3.0 * std::log(1.0 - prob / ceiling);
}

/// One CTMC realization: keep the category, or jump uniformly to another.
inline std::int32_t ctmc_step(std::int32_t code, double t, std::int32_t categories, Rng& rng) {
    if (code < 0 || code >= categories) throw std::invalid_argument("ctmc_step: code out of range");
    if (rng.uniform01() < ctmc_change_prob(t, categories)) {
        const auto alt = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(categories - 1)));
        return alt >= code ? alt + 1 : alt;
    }
    return code;
}

struct SimConfig {
    std::int32_t n = 1000;
    std::int32_t p = 10;
    std::int32_t k = 5;
    std::int32_t categories = 4;
    /// Outer (mode-to-observation) evolution time; larger is harder to cluster.
    double t = 1.0;
    /// Inner (ancestor-to-mode) change probability; fixed at 0.70.
    double inner_change_prob = 0.70;
    std::uint64_t seed = 0;
    std::int64_t max_rejections = 1000000;
};

struct SimRejections {
    std::int64_t empty_cluster = 0;
    std::int64_t duplicate_modes = 0;
};

struct SimOutput {
    Dataset dataset;
    std::vector<std::int32_t> labels;
    std::vector<Mode> true_modes;
    std::vector<double> proportions;
    SimRejections rejections;
    double t0 = 0.0;
};

namespace sim_internal {

inline std::vector<std::vector<std::string>> identity_categories(std::int32_t p, std::int32_t j) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(j));
    for (std::int32_t c = 0; c < j; ++c) names.push_back(std::to_string(c));
    return std::vector<std::vector<std::string>>(static_cast<std::size_t>(p), names);
}

}

inline SimOutput simulate(const SimConfig& cfg) {
    if (cfg.n < cfg.k || cfg.k < 1 || cfg.categories < 2 || cfg.t <= 0) {
        throw std::invalid_argument("simulate: invalid configuration");
    }
    // K distinct modes must exist in the category space.
    {
        double space = 1.0;
        for (std::int32_t l = 0; l < cfg.p && space <= static_cast<double>(cfg.k); ++l) {
            space *= static_cast<double>(cfg.categories);
        }
        if (space < static_cast<double>(cfg.k)) {
            throw std::invalid_argument("simulate: K exceeds the number of distinct mode vectors");
        }
    }
    const double t0 = ctmc_time_for_change_prob(cfg.inner_change_prob, cfg.categories);

    Rng rng(cfg.seed);
    SimRejections rej;

    // Cluster proportions and sizes.
    std::vector<double> pi(static_cast<std::size_t>(cfg.k));
    double total = 0.0;
    for (auto& v : pi) { v = rng.exponential(); total += v; }
    for (auto& v : pi) v /= total;

    std::vector<std::int32_t> sizes(static_cast<std::size_t>(cfg.k));
    std::vector<double> cdf(static_cast<std::size_t>(cfg.k));
    {
        double acc = 0.0;
        for (std::int32_t k = 0; k < cfg.k; ++k) {
            acc += pi[static_cast<std::size_t>(k)];
            cdf[static_cast<std::size_t>(k)] = acc;
        }
        cdf.back() = 1.0;
    }
    for (;;) {
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::int32_t i = 0; i < cfg.n; ++i) {
            const double u = rng.uniform01();
            std::int32_t k = 0;
            while (u >= cdf[static_cast<std::size_t>(k)]) ++k;
            ++sizes[static_cast<std::size_t>(k)];
        }
        bool ok = true;
        for (const auto s : sizes) ok = ok && (s > 0);
        if (ok) break;
        if (++rej.empty_cluster > cfg.max_rejections) {
            throw std::runtime_error("simulate: exceeded rejection cap while redrawing cluster sizes");
        }
    }

    // Ancestor, then modes evolved from it until pairwise distinct.
    std::vector<std::int32_t> ancestor(static_cast<std::size_t>(cfg.p));
    for (auto& c : ancestor) c = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.categories)));

    std::vector<Mode> modes(static_cast<std::size_t>(cfg.k));
    for (;;) {
        for (auto& m : modes) {
            m.values.resize(static_cast<std::size_t>(cfg.p));
            for (std::int32_t l = 0; l < cfg.p; ++l) {
                m.values[static_cast<std::size_t>(l)] = ctmc_step(ancestor[static_cast<std::size_t>(l)], t0, cfg.categories, rng);
            }
        }
        bool distinct = true;
        for (std::size_t a = 0; a < modes.size() && distinct; ++a) {
            for (std::size_t b = a + 1; b < modes.size(); ++b) {
                if (modes[a].values == modes[b].values) { distinct = false; break; }
            }
        }
        if (distinct) break;
        if (++rej.duplicate_modes > cfg.max_rejections) {
            throw std::runtime_error("simulate: exceeded rejection cap while redrawing modes");
        }
    }

    // Observations, blocked by cluster.
    std::vector<std::int32_t> codes(static_cast<std::size_t>(cfg.n) * static_cast<std::size_t>(cfg.p));
    std::vector<std::int32_t> labels(static_cast<std::size_t>(cfg.n));
    std::size_t row = 0;
    for (std::int32_t k = 0; k < cfg.k; ++k) {
        const auto& m = modes[static_cast<std::size_t>(k)];
        for (std::int32_t s = 0; s < sizes[static_cast<std::size_t>(k)]; ++s, ++row) {
            labels[row] = k;
            for (std::int32_t l = 0; l < cfg.p; ++l) {
                codes[row * static_cast<std::size_t>(cfg.p) + static_cast<std::size_t>(l)] =
                    ctmc_step(m.values[static_cast<std::size_t>(l)], cfg.t, cfg.categories, rng);
            }
        }
    }

    Dataset ds(cfg.n, sim_internal::identity_categories(cfg.p, cfg.categories), std::move(codes),
               {}, {}, labels, [&] {
                   std::vector<std::string> names;
                   for (std::int32_t k = 0; k < cfg.k; ++k) names.push_back(std::to_string(k));
                   return names;
               }());

    SimOutput out{std::move(ds), std::move(labels), std::move(modes), std::move(pi), rej, t0};
    return out;
}

}

#endif
