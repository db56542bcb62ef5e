#ifndef KMODES_TEST_ORACLES_HPP
#define KMODES_TEST_ORACLES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kmodes/cluster_state.hpp"
#include "kmodes/dataset.hpp"
#include "kmodes/rng.hpp"

// Brute-force reference computations, deliberately independent of the
// incremental state engine: plain tallies and distance sums only.

namespace oracles {

struct NaiveState {
    std::vector<std::vector<std::int32_t>> modes;  // [k][l]
    std::vector<std::vector<std::int32_t>> minors; // [k][l]
    std::vector<std::int32_t> sizes;
    std::int64_t objective = 0;
};

inline NaiveState naive_state(const kmodes::Dataset& ds, const std::vector<std::int32_t>& assign,
                              std::int32_t k_count) {
    NaiveState out;
    out.modes.assign(k_count, std::vector<std::int32_t>(ds.p(), 0));
    out.minors.assign(k_count, std::vector<std::int32_t>(ds.p(), 0));
    out.sizes.assign(k_count, 0);
    for (const auto k : assign) ++out.sizes[k];

    for (std::int32_t k = 0; k < k_count; ++k) {
        for (std::int32_t l = 0; l < ds.p(); ++l) {
            std::vector<std::int64_t> tally(ds.category_count(l), 0);
            for (std::int32_t i = 0; i < ds.n(); ++i) {
                if (assign[i] == k) ++tally[ds.code(i, l)];
            }
            std::int32_t mode = 0;
            for (std::int32_t c = 1; c < ds.category_count(l); ++c) {
                if (tally[c] > tally[mode]) mode = c;
            }
            std::int32_t minor = (mode == 0) ? 1 : 0;
            for (std::int32_t c = 0; c < ds.category_count(l); ++c) {
                if (c != mode && tally[c] > tally[minor]) minor = c;
            }
            out.modes[k][l] = mode;
            out.minors[k][l] = minor;
        }
    }
    // Objective by the distance-sum route.
    for (std::int32_t i = 0; i < ds.n(); ++i) {
        const auto k = assign[i];
        for (std::int32_t l = 0; l < ds.p(); ++l) {
            out.objective += (ds.code(i, l) != out.modes[k][l]);
        }
    }
    return out;
}

inline std::int64_t naive_objective(const kmodes::Dataset& ds, const std::vector<std::int32_t>& assign,
                                    std::int32_t k_count) {
    return naive_state(ds, assign, k_count).objective;
}

// Random dataset with identity-coded categories; each column gets between 2
// and max_j categories.
inline kmodes::Dataset random_dataset(kmodes::Rng& rng, std::int32_t n, std::int32_t p, std::int32_t max_j) {
    std::vector<std::vector<std::string>> cats(p);
    std::vector<std::int32_t> col_j(p);
    for (std::int32_t l = 0; l < p; ++l) {
        col_j[l] = 2 + static_cast<std::int32_t>(rng.below(max_j - 1));
        for (std::int32_t c = 0; c < col_j[l]; ++c) cats[l].push_back(std::to_string(c));
    }
    std::vector<std::int32_t> codes(static_cast<std::size_t>(n) * p);
    for (auto& c : codes) c = 0;
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t l = 0; l < p; ++l) {
            codes[static_cast<std::size_t>(i) * p + l] = static_cast<std::int32_t>(rng.below(col_j[l]));
        }
    }
    return kmodes::Dataset(n, std::move(cats), std::move(codes));
}

inline std::vector<std::int32_t> random_assignment(kmodes::Rng& rng, std::int32_t n, std::int32_t k_count) {
    std::vector<std::int32_t> assign(n);
    for (auto& a : assign) a = static_cast<std::int32_t>(rng.below(k_count));
    return assign;
}

// Two-cluster instance with combined cost 6 where the observation in the
// first cluster is at Hamming distance 2 from its own mode and 3 from the
// other, yet moving it lowers the combined cost to 5: two sites favor the
// move through count ties in the target, one site opposes it. Distance
// comparison (H97) keeps the observation in place; the exact move cost finds
// the improvement.
//
// Rows 0..3 are cluster 0 (row 1 is the mover X = (b,b,a)); rows 4..6 are
// cluster 1. Column categories in first-appearance order: a < b < c.
struct TieInstance {
    kmodes::Dataset dataset;
    std::vector<std::int32_t> assign;
    std::int32_t mover;
    std::int32_t source;
    std::int32_t target;
};

inline TieInstance tie_move_instance() {
    const std::string csv =
        "a,a,a\n"
        "b,b,a\n"
        "a,a,a\n"
        "a,a,a\n"
        "a,b,b\n"
        "b,a,b\n"
        "c,c,b\n";
    kmodes::Dataset ds = kmodes::parse_delimited(csv);
    std::vector<std::int32_t> assign{0, 0, 0, 0, 1, 1, 1};
    return TieInstance{std::move(ds), std::move(assign), 1, 0, 1};
}

}

#endif
