#ifndef KMODES_CLUSTER_STATE_HPP
#define KMODES_CLUSTER_STATE_HPP

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"

/**
 * @file cluster_state.hpp
 *
 * @brief Exact incremental maintenance of a k-modes clustering state.
 *
 * The state keeps, for every cluster k, coordinate l and category c, the
 * integer count of members of k whose value at l is c. Modes and minor modes
 * (the best non-mode category per coordinate) are maintained incrementally as
 * observations move between clusters, using only integer comparisons. The
 * objective is the total count mass off the modes,
 *
 *     W = sum_k sum_l sum_{c != mode(k,l)} count(k,l,c),
 *
 * and is updated by the exact cost of each move, so a state reached through
 * any sequence of transfers is identical, field for field, to one rebuilt
 * from scratch on the final assignment.
 *
 * Tie rules everywhere: among tied counts the category with the lowest code
 * (= earliest first appearance in the input) wins. For a column with a
 * unanimous value the minor mode is the lowest-coded other category, with
 * count zero; every column has at least two categories, so it always exists.
 */

namespace kmodes {

/// A length-p vector of category codes.
struct Mode {
    std::vector<std::int32_t> values;

    bool operator==(const Mode&) const = default;
};

/// Hamming distance: the number of mismatching coordinates.
inline std::int64_t hamming(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming: length mismatch");
    std::int64_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

/// Closest and second-closest cluster for one observation, as last recorded.
struct NearestPair {
    std::int32_t closest = -1;
    std::int32_t second = -1;
};

/// Outcome of a single transfer.
struct TransferOutcome {
    std::int64_t objective_delta = 0;
    bool emptied_source = false;
};

class ClusterState {
public:
    /**
     * Builds the state from scratch for a given assignment. Empty clusters
     * are tolerated (they get the canonical zero-count mode, category 0, and
     * minor mode, category 1) but flagged via `empty_cluster_seen()`.
     * The nearest/second-nearest fields are computed from the final modes.
     */
    static ClusterState build(const Dataset& ds, std::span<const std::int32_t> assign, std::int32_t k_count) {
        ClusterState st(ds, k_count);
        if (assign.size() != static_cast<std::size_t>(ds.n())) {
            throw std::invalid_argument("build: assignment length mismatch");
        }
        for (std::int32_t i = 0; i < ds.n(); ++i) {
            const auto k = assign[static_cast<std::size_t>(i)];
            if (k < 0 || k >= k_count) throw std::invalid_argument("build: cluster id out of range");
            st.assign_[static_cast<std::size_t>(i)] = k;
            ++st.sizes_[static_cast<std::size_t>(k)];
            const auto r = ds.row(i);
            for (std::int32_t l = 0; l < ds.p(); ++l) ++st.count_ref(k, l, r[static_cast<std::size_t>(l)]);
        }
        for (std::int32_t k = 0; k < k_count; ++k) {
            if (st.sizes_[static_cast<std::size_t>(k)] == 0) st.empty_seen_ = true;
            for (std::int32_t l = 0; l < ds.p(); ++l) st.rescan_mode_and_minor(k, l);
        }
        st.recompute_objective();
        for (std::int32_t i = 0; i < ds.n(); ++i) st.nearest_[static_cast<std::size_t>(i)] = st.nearest_by_distance(i);
        return st;
    }

    /**
     * A state with all clusters empty, seeded with the given modes. Used by
     * the optimizers: the seed modes attract the first members, after which
     * modes evolve with the counts. Observations are unassigned until
     * `add_observation`.
     */
    static ClusterState seeded(const Dataset& ds, const std::vector<Mode>& init_modes) {
        ClusterState st(ds, static_cast<std::int32_t>(init_modes.size()));
        for (std::size_t k = 0; k < init_modes.size(); ++k) {
            const auto& m = init_modes[k];
            if (m.values.size() != static_cast<std::size_t>(ds.p())) {
                throw std::invalid_argument("seeded: mode length mismatch");
            }
            for (std::int32_t l = 0; l < ds.p(); ++l) {
                const auto mu = m.values[static_cast<std::size_t>(l)];
                if (mu < 0 || mu >= ds.category_count(l)) throw std::invalid_argument("seeded: mode code out of range");
                st.mode_ref(static_cast<std::int32_t>(k), l) = mu;
                st.minor_ref(static_cast<std::int32_t>(k), l) = (mu == 0) ? 1 : 0;
            }
        }
        return st;
    }

    std::int32_t k_count() const { return k_; }
    std::int32_t n() const { return data_->n(); }
    std::int32_t p() const { return data_->p(); }
    const Dataset& dataset() const { return *data_; }

    std::int32_t assign(std::int32_t i) const { return assign_[static_cast<std::size_t>(i)]; }
    std::int32_t size(std::int32_t k) const { return sizes_[static_cast<std::size_t>(k)]; }
    std::int64_t objective() const { return objective_; }
    bool empty_cluster_seen() const { return empty_seen_; }

    std::int32_t count(std::int32_t k, std::int32_t l, std::int32_t c) const {
        return counts_[static_cast<std::size_t>(k) * cat_total_ + col_offset_[static_cast<std::size_t>(l)] + c];
    }
    std::int32_t mode(std::int32_t k, std::int32_t l) const { return modes_[static_cast<std::size_t>(k) * p() + l]; }
    std::int32_t minor_mode(std::int32_t k, std::int32_t l) const { return minors_[static_cast<std::size_t>(k) * p() + l]; }

    std::span<const std::int32_t> mode_row(std::int32_t k) const {
        return {modes_.data() + static_cast<std::size_t>(k) * p(), static_cast<std::size_t>(p())};
    }
    Mode mode_copy(std::int32_t k) const {
        const auto s = mode_row(k);
        return Mode{{s.begin(), s.end()}};
    }

    const NearestPair& nearest(std::int32_t i) const { return nearest_[static_cast<std::size_t>(i)]; }
    void set_nearest(std::int32_t i, NearestPair np) { nearest_[static_cast<std::size_t>(i)] = np; }

    const std::vector<std::int32_t>& assignments() const { return assign_; }

    /**
     * Assigns a so-far-unassigned observation to cluster k. The objective
     * grows by the exact insertion cost (the number of coordinates where the
     * value fails to reach mode status), and the cluster's modes are repaired
     * by the promotion rule. Minor modes are only guaranteed canonical while
     * all counts are real, so optimizers recompute them once seeding ends.
     */
    void add_observation(std::int32_t i, std::int32_t k) {
        const auto r = data_->row(i);
        std::int64_t cost = 0;
        for (std::int32_t l = 0; l < p(); ++l) {
            cost += (count(k, l, mode(k, l)) >= count(k, l, r[static_cast<std::size_t>(l)]) + 1);
        }
        objective_ += cost;
        assign_[static_cast<std::size_t>(i)] = k;
        ++sizes_[static_cast<std::size_t>(k)];
        for (std::int32_t l = 0; l < p(); ++l) {
            const auto x = r[static_cast<std::size_t>(l)];
            ++count_ref(k, l, x);
            promote_after_increment(k, l, x);
        }
    }

    /**
     * Moves observation i from its current cluster to r. The objective
     * changes by exactly the move cost (insertion cost into r minus removal
     * cost from the source); source and target modes and minor modes are
     * repaired in place. The observation's nearest pair becomes
     * (r, old cluster). Emptying the source is tolerated but flagged.
     */
    TransferOutcome apply_transfer(std::int32_t i, std::int32_t r) {
        const auto k = assign_[static_cast<std::size_t>(i)];
        if (r == k) throw std::invalid_argument("apply_transfer: target equals current cluster");
        const auto row = data_->row(i);

        std::int64_t delta = 0;
        for (std::int32_t l = 0; l < p(); ++l) {
            const auto x = row[static_cast<std::size_t>(l)];
            delta += (count(r, l, mode(r, l)) >= count(r, l, x) + 1);
            const bool is_mode = (x == mode(k, l));
            delta -= (is_mode && count(k, l, x) == count(k, l, minor_mode(k, l)));
            delta -= !is_mode;
        }

        --sizes_[static_cast<std::size_t>(k)];
        ++sizes_[static_cast<std::size_t>(r)];
        assign_[static_cast<std::size_t>(i)] = r;
        for (std::int32_t l = 0; l < p(); ++l) {
            const auto x = row[static_cast<std::size_t>(l)];
            --count_ref(k, l, x);
            ++count_ref(r, l, x);
            repair_source_after_decrement(k, l, x);
            promote_after_increment(r, l, x);
        }
        objective_ += delta;
        nearest_[static_cast<std::size_t>(i)] = {r, k};

        TransferOutcome out;
        out.objective_delta = delta;
        out.emptied_source = (sizes_[static_cast<std::size_t>(k)] == 0);
        if (out.emptied_source) empty_seen_ = true;
        return out;
    }

    /// Recomputes every minor mode from the counts (canonical form).
    void recompute_minor_modes() {
        for (std::int32_t k = 0; k < k_; ++k) {
            for (std::int32_t l = 0; l < p(); ++l) rescan_minor(k, l);
        }
    }

    /// Closest and second-closest clusters by Hamming distance to the current
    /// modes, ties to the lowest index.
    NearestPair nearest_by_distance(std::int32_t i) const {
        const auto r = data_->row(i);
        NearestPair np;
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::int64_t second = std::numeric_limits<std::int64_t>::max();
        for (std::int32_t k = 0; k < k_; ++k) {
            const auto d = hamming(r, mode_row(k));
            if (d < best) {
                second = best; np.second = np.closest;
                best = d; np.closest = k;
            } else if (d < second) {
                second = d; np.second = k;
            }
        }
        return np;
    }

private:
    ClusterState(const Dataset& ds, std::int32_t k_count)
        : data_(&ds), k_(k_count) {
        if (k_ < 1) throw std::invalid_argument("cluster state: need at least one cluster");
        col_offset_.resize(static_cast<std::size_t>(ds.p()) + 1, 0);
        for (std::int32_t l = 0; l < ds.p(); ++l) {
            if (ds.category_count(l) < 2) throw std::invalid_argument("cluster state: column with fewer than 2 categories");
            col_offset_[static_cast<std::size_t>(l) + 1] = col_offset_[static_cast<std::size_t>(l)] + static_cast<std::size_t>(ds.category_count(l));
        }
        cat_total_ = col_offset_.back();
        counts_.assign(static_cast<std::size_t>(k_) * cat_total_, 0);
        modes_.assign(static_cast<std::size_t>(k_) * static_cast<std::size_t>(ds.p()), 0);
        minors_.assign(static_cast<std::size_t>(k_) * static_cast<std::size_t>(ds.p()), 1);
        sizes_.assign(static_cast<std::size_t>(k_), 0);
        assign_.assign(static_cast<std::size_t>(ds.n()), -1);
        nearest_.assign(static_cast<std::size_t>(ds.n()), NearestPair{});
    }

    std::int32_t& count_ref(std::int32_t k, std::int32_t l, std::int32_t c) {
        return counts_[static_cast<std::size_t>(k) * cat_total_ + col_offset_[static_cast<std::size_t>(l)] + c];
    }
    std::int32_t& mode_ref(std::int32_t k, std::int32_t l) { return modes_[static_cast<std::size_t>(k) * p() + l]; }
    std::int32_t& minor_ref(std::int32_t k, std::int32_t l) { return minors_[static_cast<std::size_t>(k) * p() + l]; }

    /* Target-side repair after count(r,l,x) grew by one. If x was already the
     * mode nothing can change. If x now beats the mode (by count, or by rank
     * on a tie) it takes mode status and the old mode becomes the minor mode;
     * otherwise x may displace the minor mode alone. */
    void promote_after_increment(std::int32_t k, std::int32_t l, std::int32_t x) {
        auto& mu = mode_ref(k, l);
        if (x == mu) return;
        const auto cx = count(k, l, x);
        const auto cmu = count(k, l, mu);
        auto& mi = minor_ref(k, l);
        if (cx > cmu || (cx == cmu && x < mu)) {
            mi = mu;
            mu = x;
        } else if (x != mi) {
            const auto cmi = count(k, l, mi);
            if (cx > cmi || (cx == cmi && x < mi)) mi = x;
        }
    }

    /* Source-side repair after count(k,l,x) shrank by one; counts here are
     * post-decrement. Three cases:
     *  - x was the mode and is now tied with the minor mode: the lower-ranked
     *    of the two keeps mode status. When the minor mode wins, the new
     *    minor mode is the lowest-ranked category in (old minor, x] tied at
     *    the same count (x itself always qualifies, so the scan terminates).
     *  - x was the mode and fell one below the minor mode: the minor mode is
     *    promoted unconditionally. The new minor mode is the next category
     *    above the old minor tied at its count or, failing that, the first
     *    category at x's new count, which is found at or before x.
     *  - x was the minor mode: its count dropped, so rescan for the best
     *    non-mode category.
     */
    void repair_source_after_decrement(std::int32_t k, std::int32_t l, std::int32_t x) {
        auto& mu = mode_ref(k, l);
        auto& mi = minor_ref(k, l);
        if (x == mu) {
            const auto cmu = count(k, l, mu);
            const auto cmi = count(k, l, mi);
            if (cmu == cmi) {
                if (mi < mu) {
                    mu = mi;
                    std::int32_t c = mi + 1;
                    while (count(k, l, c) != cmi) ++c;
                    mi = c; // c <= x by construction
                }
            } else if (cmu == cmi - 1) {
                const auto old_minor = mi;
                mu = mi;
                std::int32_t found = -1;
                for (std::int32_t c = old_minor + 1; c < data_->category_count(l); ++c) {
                    if (count(k, l, c) == cmi) { found = c; break; }
                }
                if (found < 0) {
                    for (std::int32_t c = 0; ; ++c) {
                        if (c != mu && count(k, l, c) == cmu) { found = c; break; }
                    }
                }
                mi = found;
            }
        } else if (x == mi) {
            rescan_minor(k, l);
        }
    }

    void rescan_minor(std::int32_t k, std::int32_t l) {
        const auto mu = mode(k, l);
        std::int32_t best = (mu == 0) ? 1 : 0;
        auto best_count = count(k, l, best);
        for (std::int32_t c = best + 1; c < data_->category_count(l); ++c) {
            if (c == mu) continue;
            const auto cc = count(k, l, c);
            if (cc > best_count) { best = c; best_count = cc; }
        }
        minor_ref(k, l) = best;
    }

    void rescan_mode_and_minor(std::int32_t k, std::int32_t l) {
        std::int32_t best = 0;
        auto best_count = count(k, l, 0);
        for (std::int32_t c = 1; c < data_->category_count(l); ++c) {
            const auto cc = count(k, l, c);
            if (cc > best_count) { best = c; best_count = cc; }
        }
        mode_ref(k, l) = best;
        rescan_minor(k, l);
    }

    void recompute_objective() {
        std::int64_t w = 0;
        for (std::int32_t k = 0; k < k_; ++k) {
            for (std::int32_t l = 0; l < p(); ++l) {
                w += sizes_[static_cast<std::size_t>(k)] - count(k, l, mode(k, l));
            }
        }
        objective_ = w;
    }

    const Dataset* data_;
    std::int32_t k_;
    std::size_t cat_total_ = 0;
    std::vector<std::size_t> col_offset_;
    std::vector<std::int32_t> counts_;
    std::vector<std::int32_t> modes_;
    std::vector<std::int32_t> minors_;
    std::vector<std::int32_t> sizes_;
    std::vector<std::int32_t> assign_;
    std::vector<NearestPair> nearest_;
    std::int64_t objective_ = 0;
    bool empty_seen_ = false;
};

}

#endif
