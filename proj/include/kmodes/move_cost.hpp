#ifndef KMODES_MOVE_COST_HPP
#define KMODES_MOVE_COST_HPP

#include <cstdint>
#include <optional>

#include "cluster_state.hpp"

/**
 * @file move_cost.hpp
 *
 * @brief Exact costs of removing an observation from, or adding it to, a
 * cluster, evaluated from the count tensor.
 *
 * All functions are pure reads of the state and safe under concurrent
 * readers.
 */

namespace kmodes {

/**
 * Cost of observation i's membership in its current cluster: the number of
 * coordinates where its value either mismatches the mode or holds the mode
 * in a count tie with the minor mode. Equals the exact decrease of the
 * objective if i were removed.
 */
inline std::int64_t membership_cost(const ClusterState& st, std::int32_t i) {
    const auto k = st.assign(i);
    const auto row = st.dataset().row(i);
    std::int64_t cost = 0;
    for (std::int32_t l = 0; l < st.p(); ++l) {
        const auto x = row[static_cast<std::size_t>(l)];
        if (x != st.mode(k, l)) {
            ++cost;
        } else if (st.count(k, l, x) == st.count(k, l, st.minor_mode(k, l))) {
            ++cost;
        }
    }
    return cost;
}

/**
 * Cost of adding observation i to cluster r (which must not be its current
 * cluster): the number of coordinates where its value would fail to reach
 * mode status. Equals the exact increase of the objective if i joined r.
 *
 * The sum is accumulated coordinate by coordinate and the calculation aborts
 * (returns nullopt) as soon as the partial sum exceeds `bound`; a partial sum
 * equal to the bound keeps going, so an equal-cost candidate completes and
 * can still win a lowest-index tie-break.
 */
inline std::optional<std::int64_t> join_cost(const ClusterState& st, std::int32_t i, std::int32_t r,
                                             std::int64_t bound) {
    const auto row = st.dataset().row(i);
    std::int64_t cost = 0;
    for (std::int32_t l = 0; l < st.p(); ++l) {
        const auto x = row[static_cast<std::size_t>(l)];
        cost += (st.count(r, l, st.mode(r, l)) >= st.count(r, l, x) + 1);
        if (cost > bound) return std::nullopt;
    }
    return cost;
}

/// Unbounded join cost.
inline std::int64_t join_cost(const ClusterState& st, std::int32_t i, std::int32_t r) {
    const auto row = st.dataset().row(i);
    std::int64_t cost = 0;
    for (std::int32_t l = 0; l < st.p(); ++l) {
        const auto x = row[static_cast<std::size_t>(l)];
        cost += (st.count(r, l, st.mode(r, l)) >= st.count(r, l, x) + 1);
    }
    return cost;
}

/// Exact change in the objective if i moved from its cluster to r.
inline std::int64_t move_delta(const ClusterState& st, std::int32_t i, std::int32_t r) {
    return join_cost(st, i, r) - membership_cost(st, i);
}

/// Full evaluation of the best move for one observation, scanning every
/// other cluster. Diagnostic helper; the optimizers inline their own scans.
struct MoveEvaluation {
    std::int32_t obs = -1;
    std::int32_t source = -1;
    std::int64_t membership_cost = 0;
    std::optional<std::int32_t> best_target;
    std::int64_t best_join_cost = 0;
    std::int64_t delta = 0;
};

inline MoveEvaluation evaluate_move(const ClusterState& st, std::int32_t i) {
    MoveEvaluation ev;
    ev.obs = i;
    ev.source = st.assign(i);
    ev.membership_cost = membership_cost(st, i);
    for (std::int32_t r = 0; r < st.k_count(); ++r) {
        if (r == ev.source) continue;
        const auto c = join_cost(st, i, r);
        if (!ev.best_target || c < ev.best_join_cost) {
            ev.best_target = r;
            ev.best_join_cost = c;
        }
    }
    if (ev.best_target) ev.delta = ev.best_join_cost - ev.membership_cost;
    return ev;
}

}

#endif
