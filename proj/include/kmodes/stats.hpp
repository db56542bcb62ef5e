#ifndef KMODES_STATS_HPP
#define KMODES_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "algorithms.hpp"

/**
 * @file stats.hpp
 *
 * @brief Scoring and the paired statistical comparison machinery: adjusted
 * Rand index, target definition, paired sign test with Holm correction and
 * probit transform, rate-ratio confidence intervals, and wait-time tests
 * (Wald with overlap covariance, Fieller interval for the time ratio).
 *
 * Everything here is a pure function of its inputs.
 */

namespace kmodes {

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/**
 * Standard normal quantile, Wichura's PPND16 rational approximation
 * (Applied Statistics algorithm AS 241), good to ~1e-15 relative error.
 */
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                  1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                  4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                     1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                   4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                     1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                   2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                     2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                   5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                     7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                   5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

/**
 * Hubert-Arabie adjusted Rand index between two labelings. 1 for identical
 * partitions (including the degenerate all-trivial cases, where the
 * chance-corrected denominator vanishes).
 */
inline double ari(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("ari: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("ari: need at least 2 observations");
    const auto n = a.size();

    // Compact labels, then a dense contingency table.
    const auto compact = [](std::span<const std::int32_t> v, std::vector<std::int32_t>& out) {
        std::vector<std::int32_t> map;
        out.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto lab = v[i];
            std::int32_t idx = -1;
            for (std::size_t m = 0; m < map.size(); ++m) {
                if (map[m] == lab) { idx = static_cast<std::int32_t>(m); break; }
            }
            if (idx < 0) {
                idx = static_cast<std::int32_t>(map.size());
                map.push_back(lab);
            }
            out[i] = idx;
        }
        return map.size();
    };
    std::vector<std::int32_t> ca, cb;
    const auto ka = compact(a, ca);
    const auto kb = compact(b, cb);

    std::vector<std::int64_t> table(ka * kb, 0), rows(ka, 0), cols(kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++table[static_cast<std::size_t>(ca[i]) * kb + static_cast<std::size_t>(cb[i])];
        ++rows[static_cast<std::size_t>(ca[i])];
        ++cols[static_cast<std::size_t>(cb[i])];
    }

    const auto choose2 = [](std::int64_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };
    double index = 0.0, row_sum = 0.0, col_sum = 0.0;
    for (const auto v : table) index += choose2(v);
    for (const auto v : rows) row_sum += choose2(v);
    for (const auto v : cols) col_sum += choose2(v);
    const double expected = row_sum * col_sum / choose2(static_cast<std::int64_t>(n));
    const double max_index = 0.5 * (row_sum + col_sum);
    const double denom = max_index - expected;
    if (denom == 0.0) {
        // Only reachable when both partitions are forced identical
        // (both one cluster, or both all singletons).
        return 1.0;
    }
    return (index - expected) / denom;
}

inline double ari(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
    return ari(std::span<const std::int32_t>(a), std::span<const std::int32_t>(b));
}

enum class TargetMode { exact_min, percentile_5 };

inline const char* to_string(TargetMode m) {
    return m == TargetMode::exact_min ? "exact_min" : "percentile_5";
}

/**
 * The target objective a run must reach to count as a hit: the global
 * minimum over all runs or, when the minimum is achieved fewer than
 * `min_hits` times (or on request), the nearest-rank 5th percentile of all
 * achieved optima. A run hits when final_objective <= target.
 */
inline std::pair<std::int64_t, TargetMode> target_objective(const std::vector<RunResult>& results,
                                                            TargetMode mode, std::int32_t min_hits = 30) {
    if (results.empty()) throw std::invalid_argument("target_objective: no results");
    std::vector<std::int64_t> objectives;
    objectives.reserve(results.size());
    for (const auto& r : results) objectives.push_back(r.final_objective);
    const auto min_obj = *std::min_element(objectives.begin(), objectives.end());
    if (mode == TargetMode::exact_min) {
        const auto hits = std::count(objectives.begin(), objectives.end(), min_obj);
        if (hits >= min_hits) return {min_obj, TargetMode::exact_min};
    }
    std::sort(objectives.begin(), objectives.end());
    // Nearest-rank percentile; objectives are integers, interpolation would
    // fabricate unachievable targets.
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.05 * static_cast<double>(objectives.size())));
    return {objectives[std::max<std::size_t>(rank, 1) - 1], TargetMode::percentile_5};
}

/// Binomial(n, 1/2) lower tail P(N <= m). Exact term recurrence for small n
/// (all quantities representable); log-space accumulation for large n, where
/// the leading term 2^-n would underflow.
inline double binomial_half_cdf(std::int64_t m, std::int64_t n) {
    if (m < 0) return 0.0;
    if (m >= n) return 1.0;
    if (n <= 1000) {
        double term = std::ldexp(1.0, static_cast<int>(-n)); // C(n,0)/2^n
        double sum = term;
        for (std::int64_t j = 0; j < m; ++j) {
            term *= static_cast<double>(n - j) / static_cast<double>(j + 1);
            sum += term;
        }
        return std::min(sum, 1.0);
    }
    const double log_half_n = static_cast<double>(n) * std::log(2.0);
    double log_sum = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j <= m; ++j) {
        const double log_term = std::lgamma(static_cast<double>(n + 1)) -
                                std::lgamma(static_cast<double>(j + 1)) -
                                std::lgamma(static_cast<double>(n - j + 1)) - log_half_n;
        const double hi = std::max(log_sum, log_term);
        log_sum = hi + std::log1p(std::exp(std::min(log_sum, log_term) - hi));
    }
    return std::min(std::exp(log_sum), 1.0);
}

/**
 * Paired sign test on hit/miss counts, smoothed with one pseudo-count on
 * each side: under no difference, N10 ~ Bin(n10+n01+2, 1/2). Returns the
 * left tail P(N <= n10+1) when n10 <= n01; otherwise the complementary form
 * P(N01 <= n01) = 1 - P(N10 <= n10+1), which keeps extreme tails precise.
 */
inline double paired_sign_test(std::int64_t n10, std::int64_t n01) {
    if (n10 < 0 || n01 < 0) throw std::invalid_argument("paired_sign_test: negative counts");
    const auto total = n10 + n01 + 2;
    // The complementary form P(N01 <= n01) = 1 - P(N10 <= n10+1) equals the
    // lower tail P(N <= n01) by the symmetry of Bin(total, 1/2); computing it
    // directly keeps extreme tails at full precision instead of cancelling.
    const double value = n10 <= n01 ? binomial_half_cdf(n10 + 1, total)
                                    : binomial_half_cdf(n01, total);
    // True underflow saturates rather than hitting exact zero, keeping the
    // probit transform finite downstream.
    return std::max(value, std::numeric_limits<double>::min());
}

/**
 * Holm's step-down adjustment with enforced monotonicity, capped at 0.5.
 */
inline std::vector<double> holm_adjust(const std::vector<double>& ps) {
    const auto m = ps.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return ps[x] < ps[y]; });
    std::vector<double> adjusted(m);
    double running = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double scaled = static_cast<double>(m - r) * ps[idx[r]];
        running = std::max(running, scaled);
        adjusted[idx[r]] = std::min(running, 0.5);
    }
    return adjusted;
}

/**
 * Maps a signed tail value to the real line: -sign(x) * Phi^{-1}(|x|).
 * The sign of x encodes direction (callers negate when n10 > n01); positive
 * output means the data favor the second algorithm, growing without bound
 * as the tail shrinks.
 */
inline double probit_transform(double x) {
    if (x == 0.0 || std::abs(x) > 1.0) throw std::invalid_argument("probit_transform: |x| must be in (0,1]");
    if (std::abs(x) == 1.0) return x > 0 ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity();
    const double sign = x > 0 ? 1.0 : -1.0;
    return -sign * normal_quantile(std::abs(x)) + 0.0; // +0.0 normalizes -0

}

struct RateRatio {
    double ratio = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Smoothed rate ratio (n10+1)/(n01+1) with a 95% log-scale Wald interval.
inline RateRatio rate_ratio_ci(std::int64_t n10, std::int64_t n01) {
    if (n10 < 0 || n01 < 0) throw std::invalid_argument("rate_ratio_ci: negative counts");
    const double a = static_cast<double>(n10 + 1);
    const double b = static_cast<double>(n01 + 1);
    const double r = a / b;
    const double q = normal_quantile(0.975);
    const double margin = std::exp(q * std::sqrt(1.0 / a + 1.0 / b));
    return {r, r / margin, r * margin};
}

/**
 * @brief One wait: the cumulative run time between successive target strikes.
 *
 * Window indices are 1-based initialization counts, so a wait spans the
 * half-open window (left, right] and two waits from different algorithms
 * share exactly max(0, min(right) - max(left)) initializations.
 */
struct WaitTime {
    double seconds = 0.0;
    std::int64_t left = 0;
    std::int64_t right = 0;
};

/**
 * Splits a time-ordered sequence of runs of one algorithm into wait times
 * between target strikes. `hit` and `seconds` must be parallel, ordered by
 * initialization.
 */
inline std::vector<WaitTime> wait_times(const std::vector<std::int64_t>& objectives,
                                        const std::vector<double>& seconds, std::int64_t target) {
    if (objectives.size() != seconds.size()) throw std::invalid_argument("wait_times: length mismatch");
    std::vector<WaitTime> waits;
    double acc = 0.0;
    std::int64_t last_strike = 0;
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        acc += seconds[i];
        if (objectives[i] <= target) {
            const auto here = static_cast<std::int64_t>(i) + 1;
            waits.push_back({acc, last_strike, here});
            last_strike = here;
            acc = 0.0;
        }
    }
    return waits;
}

/// Wait times for one algorithm's runs, ordered by initialization.
inline std::vector<WaitTime> wait_times(const std::vector<RunResult>& results, std::int64_t target) {
    std::vector<std::int64_t> objectives;
    std::vector<double> seconds;
    objectives.reserve(results.size());
    seconds.reserve(results.size());
    for (const auto& r : results) {
        objectives.push_back(r.final_objective);
        seconds.push_back(r.wall_seconds);
    }
    return wait_times(objectives, seconds, target);
}

namespace stats_internal {

inline double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double acc = 0.0;
    for (const auto x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

/// Shared-initialization count between two wait windows.
inline double window_overlap(const WaitTime& a, const WaitTime& b) {
    const auto lo = std::max(a.left, b.left);
    const auto hi = std::min(a.right, b.right);
    return hi > lo ? static_cast<double>(hi - lo) : 0.0;
}

}

struct WaldWaitTest {
    double statistic = 0.0;
    double p_value = 1.0;
    double mean1 = 0.0;
    double mean2 = 0.0;
    double var_mean1 = 0.0;
    double var_mean2 = 0.0;
    double cov_means = 0.0;
};

/**
 * Wald test of equal mean wait times for two algorithms run on the same
 * initializations. Waits overlapping in initializations are correlated; the
 * covariance between two waits is c12 times the number of initializations
 * their windows share, with c12 the sample covariance of the paired per-
 * initialization run times. Throws on fewer than two waits per side or a
 * non-positive variance estimate.
 */
inline WaldWaitTest wald_wait_test(const std::vector<WaitTime>& w1, const std::vector<WaitTime>& w2,
                                   double c12) {
    if (w1.empty() || w2.empty()) throw std::invalid_argument("wald_wait_test: empty wait list");
    const auto n1 = static_cast<double>(w1.size());
    const auto n2 = static_cast<double>(w2.size());
    std::vector<double> t1, t2;
    for (const auto& w : w1) t1.push_back(w.seconds);
    for (const auto& w : w2) t2.push_back(w.seconds);

    WaldWaitTest out;
    out.mean1 = stats_internal::sample_mean(t1);
    out.mean2 = stats_internal::sample_mean(t2);
    out.var_mean1 = stats_internal::sample_variance(t1) / n1;
    out.var_mean2 = stats_internal::sample_variance(t2) / n2;

    double cov_sum = 0.0;
    for (const auto& a : w1) {
        for (const auto& b : w2) cov_sum += stats_internal::window_overlap(a, b);
    }
    out.cov_means = c12 * cov_sum / (n1 * n2);

    const double var = out.var_mean1 + out.var_mean2 - 2.0 * out.cov_means;
    const double diff = out.mean1 - out.mean2;
    if (var <= 0.0) {
        if (diff == 0.0) {
            out.statistic = 0.0;
            out.p_value = 1.0;
            return out;
        }
        throw std::runtime_error("wald_wait_test: degenerate variance estimate");
    }
    out.statistic = diff / std::sqrt(var);
    out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(out.statistic)));
    return out;
}

struct FiellerInterval {
    bool bounded = false;
    double lo = 0.0;
    double hi = 0.0;
};

/**
 * Fieller 95% confidence set for the ratio mean1/mean2 given the means, the
 * variances of the means and their covariance. When the denominator mean is
 * not significantly nonzero the set is unbounded (exclusive or the whole
 * line) and only the flag is meaningful.
 */
inline FiellerInterval fieller_ci(double mean1, double mean2, double var1, double var2, double cov12) {
    if (mean2 == 0.0) throw std::invalid_argument("fieller_ci: zero denominator mean");
    const double q = normal_quantile(0.975);
    const double q2 = q * q;
    const double a = mean2 * mean2 - q2 * var2;
    const double b = mean1 * mean2 - q2 * cov12;
    const double c = mean1 * mean1 - q2 * var1;
    FiellerInterval out;
    if (a <= 0.0) return out; // denominator not significantly nonzero
    const double disc = b * b - a * c;
    if (disc < 0.0) return out; // numerically empty; treat as unbounded flag
    const double root = std::sqrt(disc);
    out.bounded = true;
    out.lo = (b - root) / a;
    out.hi = (b + root) / a;
    return out;
}

/**
 * @brief Full paired comparison of two algorithms at one K.
 */
struct ComparisonReport {
    std::int32_t k = 0;
    Algorithm first = Algorithm::H97;
    Algorithm second = Algorithm::OTQT;
    std::int64_t target = 0;
    TargetMode target_mode = TargetMode::exact_min;
    std::int64_t n10 = 0;
    std::int64_t n01 = 0;
    double left_tail = 0.0;
    double holm_adjusted = 0.0; ///< filled by the caller once the family is known
    double probit_value = 0.0;  ///< likewise derived from the adjusted value
    RateRatio rate_ratio;
    std::int64_t strikes1 = 0;
    std::int64_t strikes2 = 0;
    std::optional<WaldWaitTest> wald;
    std::optional<FiellerInterval> fieller;
    std::string wait_note;
};

/**
 * Accuracy and wait-time comparison of two aligned result sequences (same
 * initializations, same order). Holm adjustment happens across a family of
 * reports via `finish_probits`.
 */
inline ComparisonReport compare_pair(const std::vector<RunResult>& first,
                                     const std::vector<RunResult>& second,
                                     std::int64_t target, TargetMode mode_used) {
    if (first.size() != second.size() || first.empty()) {
        throw std::invalid_argument("compare_pair: result sequences must be aligned");
    }
    ComparisonReport rep;
    rep.k = first.front().k;
    rep.first = first.front().algorithm;
    rep.second = second.front().algorithm;
    rep.target = target;
    rep.target_mode = mode_used;

    std::vector<std::int64_t> obj1, obj2;
    std::vector<double> sec1, sec2;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const bool hit1 = first[i].final_objective <= target;
        const bool hit2 = second[i].final_objective <= target;
        rep.n10 += (hit1 && !hit2);
        rep.n01 += (!hit1 && hit2);
        obj1.push_back(first[i].final_objective);
        obj2.push_back(second[i].final_objective);
        sec1.push_back(first[i].wall_seconds);
        sec2.push_back(second[i].wall_seconds);
    }
    rep.left_tail = paired_sign_test(rep.n10, rep.n01);
    rep.rate_ratio = rate_ratio_ci(rep.n10, rep.n01);

    const auto w1 = wait_times(obj1, sec1, target);
    const auto w2 = wait_times(obj2, sec2, target);
    rep.strikes1 = static_cast<std::int64_t>(w1.size());
    rep.strikes2 = static_cast<std::int64_t>(w2.size());

    // c12: sample covariance of the paired per-initialization run times.
    double c12 = 0.0;
    {
        const double m1 = stats_internal::sample_mean(sec1);
        const double m2 = stats_internal::sample_mean(sec2);
        if (sec1.size() >= 2) {
            double acc = 0.0;
            for (std::size_t i = 0; i < sec1.size(); ++i) acc += (sec1[i] - m1) * (sec2[i] - m2);
            c12 = acc / static_cast<double>(sec1.size() - 1);
        }
    }
    if (w1.size() >= 2 && w2.size() >= 2) {
        try {
            rep.wald = wald_wait_test(w1, w2, c12);
            rep.fieller = fieller_ci(rep.wald->mean1, rep.wald->mean2, rep.wald->var_mean1,
                                     rep.wald->var_mean2, rep.wald->cov_means);
        } catch (const std::exception& e) {
            rep.wait_note = e.what();
        }
    } else {
        rep.wait_note = "too few target strikes for wait-time tests";
    }
    return rep;
}

/**
 * Completes a family of reports: Holm-adjusts the left tails across the
 * family, caps at 0.5, negates the direction of reports with n10 > n01 and
 * applies the probit transform, in that order.
 */
inline void finish_probits(std::vector<ComparisonReport>& family) {
    if (family.empty()) return;
    std::vector<double> ps;
    ps.reserve(family.size());
    for (const auto& r : family) ps.push_back(r.left_tail);
    const auto adjusted = holm_adjust(ps);
    for (std::size_t i = 0; i < family.size(); ++i) {
        family[i].holm_adjusted = adjusted[i];
        const double signed_value = family[i].n10 > family[i].n01 ? -adjusted[i] : adjusted[i];
        family[i].probit_value = probit_transform(signed_value);
    }
}

}

#endif
