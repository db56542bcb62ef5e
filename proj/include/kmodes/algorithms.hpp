#ifndef KMODES_ALGORITHMS_HPP
#define KMODES_ALGORITHMS_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cluster_state.hpp"
#include "dataset.hpp"
#include "move_cost.hpp"
#include "rng.hpp"

/**
 * @file algorithms.hpp
 *
 * @brief The three k-modes optimizers and the shared-initialization batch
 * runner.
 *
 * H97 is the classic alternating scheme: assign each observation to the
 * nearest mode, update the affected modes, repeat until a full pass makes no
 * reassignment. It moves an observation only when another mode is strictly
 * closer in Hamming distance.
 *
 * OT (optimal transfer) instead evaluates the exact change in the objective
 * for each candidate move, using the incremental costs of leaving and
 * joining a cluster, and takes the best strictly improving move. It can
 * detect improvements that are invisible to distance comparison, because
 * leaving a cluster where the observation's value is tied for the mode, or
 * joining one where it would tie the mode count, shifts the objective
 * without shifting distances.
 *
 * OTQT alternates the optimal transfer stage with a cheap quick transfer
 * stage that only reconsiders each observation's recorded closest/
 * second-closest pair, in the spirit of Hartigan & Wong (1979).
 *
 * Bookkeeping follows the Hartigan-Wong discipline: a "live set" of clusters
 * whose membership changed during the last cycle limits the candidate scan,
 * and a "cost set" marks clusters whose cached membership costs are stale.
 * Join costs are evaluated with a branch-and-bound bound equal to the best
 * candidate so far, aborting a candidate as soon as it cannot win.
 */

namespace kmodes {

enum class Algorithm { H97, OT, OTQT };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::H97: return "h97";
        case Algorithm::OT: return "ot";
        default: return "otqt";
    }
}

inline std::optional<Algorithm> algorithm_from_string(std::string_view s) {
    if (s == "h97" || s == "H97") return Algorithm::H97;
    if (s == "ot" || s == "OT") return Algorithm::OT;
    if (s == "otqt" || s == "OTQT") return Algorithm::OTQT;
    return std::nullopt;
}

/// Outcome of a single optimizer run.
struct RunResult {
    Algorithm algorithm = Algorithm::OTQT;
    std::int32_t k = 0;
    std::int32_t init_id = 0;
    std::uint64_t seed = 0;
    std::int64_t final_objective = 0;
    /// Optimal-transfer passes (H97: reallocation cycles, including the final
    /// quiet one).
    std::int32_t main_passes = 0;
    /// Completed quick-transfer sweeps through the data (OTQT only).
    std::int32_t quick_passes = 0;
    std::int64_t transfers = 0;
    double wall_seconds = 0.0;
    std::vector<std::int32_t> assignment;
    std::optional<double> ari;
    /// H97 only: some cluster was emptied during the run (its mode froze).
    bool empty_cluster_flag = false;
};

/// Optional instrumentation for invariant audits in tests.
struct RunAudit {
    std::vector<std::int64_t> transfer_deltas;
    std::int64_t initial_objective = 0;
    bool empty_cluster_violation = false;
    bool duplicate_mode_violation = false;
    std::int32_t passes_checked = 0;
};

namespace algo_internal {

inline void check_pass_invariants(const ClusterState& st, RunAudit* audit) {
    if (!audit) return;
    ++audit->passes_checked;
    for (std::int32_t k = 0; k < st.k_count(); ++k) {
        if (st.size(k) == 0) audit->empty_cluster_violation = true;
    }
    for (std::int32_t a = 0; a < st.k_count(); ++a) {
        for (std::int32_t b = a + 1; b < st.k_count(); ++b) {
            if (hamming(st.mode_row(a), st.mode_row(b)) == 0) audit->duplicate_mode_violation = true;
        }
    }
}

inline void require_distinct_modes(const std::vector<Mode>& modes) {
    for (std::size_t a = 0; a < modes.size(); ++a) {
        for (std::size_t b = a + 1; b < modes.size(); ++b) {
            if (modes[a].values == modes[b].values) {
                throw std::invalid_argument("initial modes must be pairwise distinct");
            }
        }
    }
}

/* Shared engine for OT and OTQT, operating on a state that has already been
 * assigned (either by the getting-started pass or supplied externally). */
class TransferEngine {
public:
    TransferEngine(ClusterState& st, const std::vector<std::int32_t>& order, RunAudit* audit)
        : st_(st), order_(order), audit_(audit),
          live_(static_cast<std::size_t>(st.k_count()), 1),
          qt_last_update_(static_cast<std::size_t>(st.k_count()), 0),
          qt_touched_(static_cast<std::size_t>(st.k_count()), 0),
          mcost_(static_cast<std::size_t>(st.n()), 0) {}

    std::int64_t transfers = 0;
    std::int32_t ot_passes = 0;
    std::int32_t qt_sweeps = 0;

    void run(bool with_quick_stage) {
        // All clusters start in the live and cost sets, so the first pass
        // refreshes every membership cost and scans every candidate.
        std::fill(live_.begin(), live_.end(), std::uint8_t{1});
        for (;;) {
            const bool any = optimal_transfer_pass();
            check_pass_invariants(st_, audit_);
            if (!any) return;
            if (with_quick_stage) quick_transfer_stage();
        }
    }

private:
    /* One pass through the observations. A cached membership cost is
     * refreshed when the observation's cluster is live, i.e. changed since
     * the cost was computed (clusters touched in the previous pass, in the
     * quick stage, or earlier in this pass). Candidates are the live
     * clusters, with the recorded second-closest scanned first to prime the
     * branch-and-bound bound; when the observation's own cluster is live its
     * membership cost has changed, so every earlier rejection is stale and
     * all clusters are scanned (the Hartigan-Wong live-set discipline, which
     * makes terminal states true fixed points). Returns whether any transfer
     * happened; at the end the live set shrinks to the clusters touched in
     * this pass. */
    bool optimal_transfer_pass() {
        ++ot_passes;
        std::vector<std::uint8_t> touched(static_cast<std::size_t>(st_.k_count()), 0);
        bool any = false;

        for (const auto i : order_) {
            const auto k = st_.assign(i);
            const bool own_live = live_[static_cast<std::size_t>(k)];
            if (own_live) mcost_[static_cast<std::size_t>(i)] = membership_cost(st_, i);
            const auto mc = mcost_[static_cast<std::size_t>(i)];

            std::int64_t best_cost = mc;
            std::int32_t best_target = -1;
            const auto second = st_.nearest(i).second;
            if (second >= 0 && second != k && (own_live || live_[static_cast<std::size_t>(second)])) {
                if (const auto c = join_cost(st_, i, second, best_cost)) {
                    best_cost = *c;
                    best_target = second;
                }
            }
            for (std::int32_t r = 0; r < st_.k_count(); ++r) {
                if (r == k || r == second || !(own_live || live_[static_cast<std::size_t>(r)])) continue;
                if (const auto c = join_cost(st_, i, r, best_cost)) {
                    if (*c < best_cost || (*c == best_cost && best_target >= 0 && r < best_target)) {
                        best_cost = *c;
                        best_target = r;
                    }
                }
            }

            if (best_target >= 0 && best_cost < mc) {
                const auto out = st_.apply_transfer(i, best_target);
                if (audit_) audit_->transfer_deltas.push_back(out.objective_delta);
                ++transfers;
                any = true;
                live_[static_cast<std::size_t>(k)] = 1;
                live_[static_cast<std::size_t>(best_target)] = 1;
                touched[static_cast<std::size_t>(k)] = 1;
                touched[static_cast<std::size_t>(best_target)] = 1;
            }
        }

        live_ = std::move(touched);
        return any;
    }

    /* Quick transfer: cycle through the observations considering only the
     * recorded closest/second-closest pair, while either member of the pair
     * has changed within the last n visits. Exits after n consecutive visits
     * without a transfer. Transfers here mark clusters live for the next
     * optimal-transfer pass but never touch the cost cache of untouched
     * clusters. */
    void quick_transfer_stage() {
        const auto n = static_cast<std::int64_t>(order_.size());
        std::fill(qt_touched_.begin(), qt_touched_.end(), std::uint8_t{0});
        std::int64_t step = 0;
        for (std::int32_t k = 0; k < st_.k_count(); ++k) {
            qt_last_update_[static_cast<std::size_t>(k)] = live_[static_cast<std::size_t>(k)] ? 0 : -n - 1;
        }
        const auto qt_live = [&](std::int32_t c) { return qt_last_update_[static_cast<std::size_t>(c)] >= step - n; };

        std::int64_t quiet = 0;
        std::size_t pos = 0;
        while (quiet < n) {
            if (pos == order_.size()) {
                pos = 0;
                ++qt_sweeps;
            }
            const auto i = order_[pos];
            ++pos;
            ++step;
            ++quiet;

            const auto k = st_.assign(i);
            const auto r = st_.nearest(i).second;
            if (r < 0 || r == k) continue;
            if (!qt_live(k) && !qt_live(r)) continue;
            if (qt_live(k)) mcost_[static_cast<std::size_t>(i)] = membership_cost(st_, i);
            const auto mc = mcost_[static_cast<std::size_t>(i)];
            const auto c = join_cost(st_, i, r, mc);
            if (c && *c < mc) {
                const auto out = st_.apply_transfer(i, r);
                if (audit_) audit_->transfer_deltas.push_back(out.objective_delta);
                ++transfers;
                quiet = 0;
                qt_last_update_[static_cast<std::size_t>(k)] = step;
                qt_last_update_[static_cast<std::size_t>(r)] = step;
                qt_touched_[static_cast<std::size_t>(k)] = 1;
                qt_touched_[static_cast<std::size_t>(r)] = 1;
                check_pass_invariants_sampled();
            }
        }
        if (pos == order_.size()) ++qt_sweeps;

        for (std::int32_t k = 0; k < st_.k_count(); ++k) {
            if (qt_touched_[static_cast<std::size_t>(k)]) live_[static_cast<std::size_t>(k)] = 1;
        }
        check_pass_invariants(st_, audit_);
    }

    void check_pass_invariants_sampled() {
        // Nonemptiness must hold after every quick transfer as well; the
        // duplicate-mode scan is deferred to stage boundaries.
        if (!audit_) return;
        for (std::int32_t k = 0; k < st_.k_count(); ++k) {
            if (st_.size(k) == 0) audit_->empty_cluster_violation = true;
        }
    }

    ClusterState& st_;
    const std::vector<std::int32_t>& order_;
    RunAudit* audit_;
    std::vector<std::uint8_t> live_;
    std::vector<std::int64_t> qt_last_update_;
    std::vector<std::uint8_t> qt_touched_;
    std::vector<std::int64_t> mcost_;
};

/* Getting-started pass: assign each observation, in visiting order, to the
 * nearest of the evolving modes (ties to the lowest index), updating the
 * receiving cluster immediately. The recorded closest/second-closest pair is
 * the one seen at visit time; it goes stale as later assignments move the
 * modes, which the transfer stages tolerate. */
inline ClusterState getting_started(const Dataset& ds, const std::vector<Mode>& init_modes,
                                    const std::vector<std::int32_t>& order) {
    ClusterState st = ClusterState::seeded(ds, init_modes);
    for (const auto i : order) {
        const auto np = st.nearest_by_distance(i);
        st.add_observation(i, np.closest);
        st.set_nearest(i, np);
    }
    st.recompute_minor_modes();
    return st;
}

}

/**
 * Draws K initial modes by sampling K distinct observations (distinct as
 * code vectors) uniformly without replacement. Deterministic given the
 * stream. Throws if the dataset has fewer than K distinct rows.
 */
inline std::vector<Mode> init_random_modes(const Dataset& ds, std::int32_t k_count, Rng& rng) {
    auto reps = ds.distinct_row_indices();
    if (static_cast<std::int32_t>(reps.size()) < k_count) {
        throw std::runtime_error("infeasible K: dataset has only " + std::to_string(reps.size()) +
                                 " distinct rows, need " + std::to_string(k_count));
    }
    std::vector<Mode> modes;
    modes.reserve(static_cast<std::size_t>(k_count));
    // Partial Fisher-Yates over the distinct-row list.
    for (std::int32_t j = 0; j < k_count; ++j) {
        const auto pick = j + static_cast<std::int32_t>(rng.below(reps.size() - static_cast<std::size_t>(j)));
        std::swap(reps[static_cast<std::size_t>(j)], reps[static_cast<std::size_t>(pick)]);
        const auto row = ds.row(reps[static_cast<std::size_t>(j)]);
        modes.push_back(Mode{{row.begin(), row.end()}});
    }
    return modes;
}

/**
 * The optimal-transfer algorithm: getting-started pass, then repeated
 * optimal-transfer passes until a pass makes no transfer.
 */
inline RunResult ot_run(const Dataset& ds, const std::vector<Mode>& init_modes,
                        const std::vector<std::int32_t>& order, RunAudit* audit = nullptr) {
    algo_internal::require_distinct_modes(init_modes);
    RunResult res;
    res.algorithm = Algorithm::OT;
    res.k = static_cast<std::int32_t>(init_modes.size());
    const auto t0 = std::chrono::steady_clock::now();
    ClusterState st = algo_internal::getting_started(ds, init_modes, order);
    if (audit) audit->initial_objective = st.objective();
    algo_internal::TransferEngine engine(st, order, audit);
    engine.run(/*with_quick_stage=*/false);
    const auto t1 = std::chrono::steady_clock::now();
    res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.final_objective = st.objective();
    res.main_passes = engine.ot_passes;
    res.transfers = engine.transfers;
    res.assignment = st.assignments();
    return res;
}

/**
 * The full algorithm: optimal transfer alternating with quick transfer,
 * terminating when an optimal-transfer pass makes no transfer.
 */
inline RunResult otqt_run(const Dataset& ds, const std::vector<Mode>& init_modes,
                          const std::vector<std::int32_t>& order, RunAudit* audit = nullptr) {
    algo_internal::require_distinct_modes(init_modes);
    RunResult res;
    res.algorithm = Algorithm::OTQT;
    res.k = static_cast<std::int32_t>(init_modes.size());
    const auto t0 = std::chrono::steady_clock::now();
    ClusterState st = algo_internal::getting_started(ds, init_modes, order);
    if (audit) audit->initial_objective = st.objective();
    algo_internal::TransferEngine engine(st, order, audit);
    engine.run(/*with_quick_stage=*/true);
    const auto t1 = std::chrono::steady_clock::now();
    res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.final_objective = st.objective();
    res.main_passes = engine.ot_passes;
    res.quick_passes = engine.qt_sweeps;
    res.transfers = engine.transfers;
    res.assignment = st.assignments();
    return res;
}

/**
 * Runs the transfer stages from an explicit assignment instead of the
 * getting-started pass, with every cluster initially live. Used to continue
 * from a known state (e.g. another algorithm's terminal state).
 */
inline RunResult ot_from_assignment(const Dataset& ds, std::span<const std::int32_t> assign,
                                    std::int32_t k_count, bool with_quick_stage = false,
                                    RunAudit* audit = nullptr) {
    RunResult res;
    res.algorithm = with_quick_stage ? Algorithm::OTQT : Algorithm::OT;
    res.k = k_count;
    ClusterState st = ClusterState::build(ds, assign, k_count);
    if (audit) audit->initial_objective = st.objective();
    // The transfer stages expect nearest(i).closest to be the assigned
    // cluster; repoint it and keep the best other cluster as second.
    for (std::int32_t i = 0; i < ds.n(); ++i) {
        const auto k = st.assign(i);
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::int32_t best_r = -1;
        for (std::int32_t r = 0; r < k_count; ++r) {
            if (r == k) continue;
            const auto d = hamming(ds.row(i), st.mode_row(r));
            if (d < best) { best = d; best_r = r; }
        }
        st.set_nearest(i, NearestPair{k, best_r});
    }
    std::vector<std::int32_t> order(static_cast<std::size_t>(ds.n()));
    for (std::int32_t i = 0; i < ds.n(); ++i) order[static_cast<std::size_t>(i)] = i;
    algo_internal::TransferEngine engine(st, order, audit);
    engine.run(with_quick_stage);
    res.final_objective = st.objective();
    res.main_passes = engine.ot_passes;
    res.quick_passes = engine.qt_sweeps;
    res.transfers = engine.transfers;
    res.assignment = st.assignments();
    return res;
}

namespace algo_internal {

/* Lean state for H97: counts, sizes and modes only. Modes are recomputed by
 * scanning the affected column counts, which is all Huang's procedure needs;
 * no minor modes, no incremental objective. */
class H97State {
public:
    H97State(const Dataset& ds, const std::vector<Mode>& init_modes)
        : ds_(&ds), k_(static_cast<std::int32_t>(init_modes.size())) {
        col_offset_.resize(static_cast<std::size_t>(ds.p()) + 1, 0);
        for (std::int32_t l = 0; l < ds.p(); ++l) {
            col_offset_[static_cast<std::size_t>(l) + 1] =
                col_offset_[static_cast<std::size_t>(l)] + static_cast<std::size_t>(ds.category_count(l));
        }
        counts_.assign(static_cast<std::size_t>(k_) * col_offset_.back(), 0);
        sizes_.assign(static_cast<std::size_t>(k_), 0);
        modes_.resize(static_cast<std::size_t>(k_));
        for (std::int32_t k = 0; k < k_; ++k) modes_[static_cast<std::size_t>(k)] = init_modes[static_cast<std::size_t>(k)].values;
        assign_.assign(static_cast<std::size_t>(ds.n()), -1);
    }

    /// From an explicit assignment; modes recomputed from the member counts.
    H97State(const Dataset& ds, std::span<const std::int32_t> assign, std::int32_t k_count)
        : ds_(&ds), k_(k_count) {
        col_offset_.resize(static_cast<std::size_t>(ds.p()) + 1, 0);
        for (std::int32_t l = 0; l < ds.p(); ++l) {
            col_offset_[static_cast<std::size_t>(l) + 1] =
                col_offset_[static_cast<std::size_t>(l)] + static_cast<std::size_t>(ds.category_count(l));
        }
        counts_.assign(static_cast<std::size_t>(k_) * col_offset_.back(), 0);
        sizes_.assign(static_cast<std::size_t>(k_), 0);
        modes_.assign(static_cast<std::size_t>(k_), std::vector<std::int32_t>(static_cast<std::size_t>(ds.p()), 0));
        assign_.assign(assign.begin(), assign.end());
        for (std::int32_t i = 0; i < ds.n(); ++i) {
            const auto k = assign_[static_cast<std::size_t>(i)];
            ++sizes_[static_cast<std::size_t>(k)];
            for (std::int32_t l = 0; l < ds.p(); ++l) ++count_ref(k, l, ds.row(i)[static_cast<std::size_t>(l)]);
        }
        for (std::int32_t k = 0; k < k_; ++k) {
            if (sizes_[static_cast<std::size_t>(k)] > 0) {
                for (std::int32_t l = 0; l < ds.p(); ++l) rescan_mode(k, l);
            }
        }
    }

    std::int32_t nearest_mode(std::int32_t i) const {
        const auto row = ds_->row(i);
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::int32_t best_k = 0;
        for (std::int32_t k = 0; k < k_; ++k) {
            const auto d = hamming(row, std::span<const std::int32_t>(modes_[static_cast<std::size_t>(k)]));
            if (d < best) { best = d; best_k = k; }
        }
        return best_k;
    }

    void add(std::int32_t i, std::int32_t k) {
        assign_[static_cast<std::size_t>(i)] = k;
        ++sizes_[static_cast<std::size_t>(k)];
        const auto row = ds_->row(i);
        for (std::int32_t l = 0; l < ds_->p(); ++l) {
            const auto x = row[static_cast<std::size_t>(l)];
            ++count_ref(k, l, x);
            // Adding can only promote x itself.
            auto& mu = modes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
            if (x != mu) {
                const auto cx = count_ref(k, l, x);
                const auto cm = count_ref(k, l, mu);
                if (cx > cm || (cx == cm && x < mu)) mu = x;
            }
        }
    }

    /// Moves i to k2, updating both affected modes from full counts. Returns
    /// true if the source cluster was emptied (its mode freezes).
    bool move(std::int32_t i, std::int32_t k2) {
        const auto k1 = assign_[static_cast<std::size_t>(i)];
        const auto row = ds_->row(i);
        --sizes_[static_cast<std::size_t>(k1)];
        ++sizes_[static_cast<std::size_t>(k2)];
        assign_[static_cast<std::size_t>(i)] = k2;
        for (std::int32_t l = 0; l < ds_->p(); ++l) {
            const auto x = row[static_cast<std::size_t>(l)];
            --count_ref(k1, l, x);
            ++count_ref(k2, l, x);
            if (sizes_[static_cast<std::size_t>(k1)] > 0 &&
                x == modes_[static_cast<std::size_t>(k1)][static_cast<std::size_t>(l)]) {
                rescan_mode(k1, l);
            }
            auto& mu2 = modes_[static_cast<std::size_t>(k2)][static_cast<std::size_t>(l)];
            if (x != mu2) {
                const auto cx = count_ref(k2, l, x);
                const auto cm = count_ref(k2, l, mu2);
                if (cx > cm || (cx == cm && x < mu2)) mu2 = x;
            }
        }
        return sizes_[static_cast<std::size_t>(k1)] == 0;
    }

    std::int64_t objective() const {
        std::int64_t w = 0;
        for (std::int32_t i = 0; i < ds_->n(); ++i) {
            w += hamming(ds_->row(i), std::span<const std::int32_t>(modes_[static_cast<std::size_t>(assign_[static_cast<std::size_t>(i)])]));
        }
        return w;
    }

    std::int32_t assign(std::int32_t i) const { return assign_[static_cast<std::size_t>(i)]; }
    const std::vector<std::int32_t>& assignments() const { return assign_; }
    const std::vector<std::int32_t>& mode(std::int32_t k) const { return modes_[static_cast<std::size_t>(k)]; }

private:
    std::int32_t& count_ref(std::int32_t k, std::int32_t l, std::int32_t c) {
        return counts_[static_cast<std::size_t>(k) * col_offset_.back() + col_offset_[static_cast<std::size_t>(l)] + c];
    }
    void rescan_mode(std::int32_t k, std::int32_t l) {
        std::int32_t best = 0;
        auto best_count = count_ref(k, l, 0);
        for (std::int32_t c = 1; c < ds_->category_count(l); ++c) {
            const auto cc = count_ref(k, l, c);
            if (cc > best_count) { best = c; best_count = cc; }
        }
        modes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = best;
    }

    const Dataset* ds_;
    std::int32_t k_;
    std::vector<std::size_t> col_offset_;
    std::vector<std::int32_t> counts_;
    std::vector<std::int32_t> sizes_;
    std::vector<std::vector<std::int32_t>> modes_;
    std::vector<std::int32_t> assign_;
};

/// Reallocation passes shared by h97_run and h97_from_assignment.
inline void h97_reallocate(H97State& st, const Dataset& ds, const std::vector<std::int32_t>& order,
                           RunResult& res) {
    for (;;) {
        ++res.main_passes;
        bool moved = false;
        for (const auto i : order) {
            const auto k = st.assign(i);
            const auto d_cur = hamming(ds.row(i), std::span<const std::int32_t>(st.mode(k)));
            std::int64_t best = d_cur;
            std::int32_t best_k = -1;
            for (std::int32_t k2 = 0; k2 < static_cast<std::int32_t>(res.k); ++k2) {
                if (k2 == k) continue;
                const auto d = hamming(ds.row(i), std::span<const std::int32_t>(st.mode(k2)));
                if (d < best) { best = d; best_k = k2; }
            }
            if (best_k >= 0) {
                if (st.move(i, best_k)) res.empty_cluster_flag = true;
                ++res.transfers;
                moved = true;
            }
        }
        if (!moved) break;
    }
}

}

/**
 * Huang's k-modes: sequential nearest-mode allocation with immediate mode
 * updates, then reallocation passes until stable. An emptied cluster keeps
 * its last mode (and may regain members); the run is flagged when that
 * happens.
 */
inline RunResult h97_run(const Dataset& ds, const std::vector<Mode>& init_modes,
                         const std::vector<std::int32_t>& order) {
    algo_internal::require_distinct_modes(init_modes);
    RunResult res;
    res.algorithm = Algorithm::H97;
    res.k = static_cast<std::int32_t>(init_modes.size());
    const auto t0 = std::chrono::steady_clock::now();
    algo_internal::H97State st(ds, init_modes);
    for (const auto i : order) st.add(i, st.nearest_mode(i));
    algo_internal::h97_reallocate(st, ds, order, res);
    const auto t1 = std::chrono::steady_clock::now();
    res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.final_objective = st.objective();
    res.assignment = st.assignments();
    return res;
}

/// H97 reallocation passes from an explicit assignment (no initial
/// allocation pass); modes are computed from the assignment's counts.
inline RunResult h97_from_assignment(const Dataset& ds, std::span<const std::int32_t> assign,
                                     std::int32_t k_count, const std::vector<std::int32_t>& order) {
    RunResult res;
    res.algorithm = Algorithm::H97;
    res.k = k_count;
    algo_internal::H97State st(ds, assign, k_count);
    algo_internal::h97_reallocate(st, ds, order, res);
    res.final_objective = st.objective();
    res.assignment = st.assignments();
    return res;
}

/// Shared initialization for one (K, init_id) slot: modes plus visiting order.
struct Initialization {
    std::vector<Mode> modes;
    std::vector<std::int32_t> order;
    std::uint64_t seed = 0;
};

inline Initialization make_initialization(const Dataset& ds, std::int32_t k_count,
                                          std::uint64_t master_seed, std::int32_t init_id) {
    Initialization init;
    init.seed = derive_seed({master_seed, static_cast<std::uint64_t>(k_count), static_cast<std::uint64_t>(init_id)});
    Rng rng(init.seed);
    init.modes = init_random_modes(ds, k_count, rng);
    init.order = shuffle_order(ds, rng);
    return init;
}

struct BatchOptions {
    std::vector<std::int32_t> k_values;
    std::int32_t n_inits = 1;
    std::vector<Algorithm> algorithms{Algorithm::H97, Algorithm::OT, Algorithm::OTQT};
    std::uint64_t master_seed = 0;
    std::int32_t threads = 1;
};

/**
 * Runs every requested algorithm on shared initializations: for each
 * (K, init_id) one set of initial modes and one visiting order are derived
 * from (master_seed, K, init_id) and fed identically to all algorithms.
 * Results are ordered by (K, init_id, algorithm) and, timing aside,
 * independent of the thread count. ARI against the dataset's labels, when
 * present, is computed outside the timed section.
 *
 * K values with fewer distinct rows than K are rejected up front.
 */
template<typename AriFn>
std::vector<RunResult> run_batch(const Dataset& ds, const BatchOptions& opts, AriFn&& ari_fn) {
    const auto n_algs = opts.algorithms.size();
    if (opts.n_inits < 1) throw std::invalid_argument("run_batch: need at least one initialization");
    const auto distinct = static_cast<std::int32_t>(ds.distinct_row_indices().size());
    for (const auto k : opts.k_values) {
        if (k < 1) throw std::invalid_argument("run_batch: K must be positive");
        if (k > distinct) {
            throw std::runtime_error("infeasible K=" + std::to_string(k) + ": dataset has only " +
                                     std::to_string(distinct) + " distinct rows");
        }
    }

    const std::size_t n_slots = opts.k_values.size() * static_cast<std::size_t>(opts.n_inits);
    std::vector<RunResult> results(n_slots * n_algs);

    const auto run_slot = [&](std::size_t slot) {
        const auto k = opts.k_values[slot / static_cast<std::size_t>(opts.n_inits)];
        const auto init_id = static_cast<std::int32_t>(slot % static_cast<std::size_t>(opts.n_inits));
        const auto init = make_initialization(ds, k, opts.master_seed, init_id);
        for (std::size_t a = 0; a < n_algs; ++a) {
            RunResult r;
            switch (opts.algorithms[a]) {
                case Algorithm::H97: r = h97_run(ds, init.modes, init.order); break;
                case Algorithm::OT: r = ot_run(ds, init.modes, init.order); break;
                case Algorithm::OTQT: r = otqt_run(ds, init.modes, init.order); break;
            }
            r.init_id = init_id;
            r.seed = init.seed;
            if (ds.has_labels()) r.ari = ari_fn(r.assignment, ds.labels());
            results[slot * n_algs + a] = std::move(r);
        }
    };

    const auto threads = std::max(1, opts.threads);
    if (threads == 1 || n_slots <= 1) {
        for (std::size_t s = 0; s < n_slots; ++s) run_slot(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const auto worker = [&] {
            for (;;) {
                const auto s = next.fetch_add(1);
                if (s >= n_slots) return;
                run_slot(s);
            }
        };
        const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n_slots);
        pool.reserve(n_workers);
        for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

/// run_batch without an ARI scorer (the ari field stays unset).
inline std::vector<RunResult> run_batch(const Dataset& ds, const BatchOptions& opts) {
    return run_batch(ds, opts, [](const std::vector<std::int32_t>&, const std::vector<std::int32_t>&) {
        return std::optional<double>{};
    });
}

/**
 * Suggested number of initializations: the smallest integer multiple alpha
 * such that alpha * n * p_prime * max(K) exceeds 500,000, following the
 * sizing rule used for the benchmark experiments.
 */
struct AlphaRule {
    std::int64_t alpha = 0;
    std::int64_t suggested_runs = 0;
};

inline AlphaRule alpha_rule(std::int64_t n, double p_prime, std::int64_t max_k) {
    if (n < 1 || p_prime <= 0 || max_k < 1) throw std::invalid_argument("alpha rule: bad inputs");
    const double unit = static_cast<double>(n) * p_prime * static_cast<double>(max_k);
    std::int64_t alpha = static_cast<std::int64_t>(500000.0 / unit);
    while (static_cast<double>(alpha) * unit <= 500000.0) ++alpha;
    AlphaRule out;
    out.alpha = alpha;
    out.suggested_runs = static_cast<std::int64_t>(static_cast<double>(alpha) * unit);
    return out;
}

}

#endif
