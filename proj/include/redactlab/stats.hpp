// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace redactlab::stats {

class StatsError : public std::runtime_error {
public:
    explicit StatsError(const std::string& what) : std::runtime_error(what) {}
};

// --- special functions -------------------------------------------------------

namespace detail {

/// Continued fraction for the regularized incomplete beta, evaluated with the
/// modified Lentz algorithm (Numerical Recipes form).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 512;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

/// Regularized incomplete beta I_x(a, b), accurate to ~1e-14 over the ranges
/// the t and F tails need. The symmetry transform keeps the continued
/// fraction in its fast-converging region.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || std::isnan(x))
        return std::numeric_limits<double>::quiet_NaN();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a t statistic with (possibly fractional) df.
inline double t_two_sided_p(double t, double df) {
    if (df <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

/// Upper-tail probability P(F(d1, d2) > w).
inline double f_tail_p(double w, double d1, double d2) {
    if (d1 <= 0.0 || d2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (w <= 0.0) return 1.0;
    if (std::isinf(w)) return 0.0;
    double x = d2 / (d2 + d1 * w);
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v, double mean) {
    double ss = 0;
    for (double x : v) {
        double d = x - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(v.size() - 1);
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace detail

// --- domain types -------------------------------------------------------------

/// A labeled vector of 1..9 ratings (one journal or keyword group).
struct RatingGroup {
    std::string label;
    std::vector<int> values;
};

inline void check_group(const RatingGroup& g) {
    if (g.values.empty()) throw StatsError("group \"" + g.label + "\" is empty");
    for (int v : g.values)
        if (v < 1 || v > 9)
            throw StatsError("group \"" + g.label + "\" has out-of-range rating " +
                             std::to_string(v));
}

struct DistributionRow {
    std::string label;
    int rating = 0;
    std::size_t count = 0;
    double percentage = 0;  // rounded to one decimal place
};

struct MeanSe {
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
    bool degenerate = false;  // n == 1: se reported as 0
};

enum class MeanTestVariant { welch, pooled };
enum class LeveneCentering { mean, median };

inline std::string to_string(MeanTestVariant v) {
    return v == MeanTestVariant::welch ? "welch" : "pooled";
}
inline std::string to_string(LeveneCentering c) {
    return c == LeveneCentering::mean ? "mean" : "median";
}

struct TestConfig {
    MeanTestVariant mean_variant = MeanTestVariant::welch;
    // Median centering (Brown-Forsythe) reproduces the reference variance
    // p-values; mean centering is available for comparison.
    LeveneCentering centering = LeveneCentering::median;
};

struct PairwiseCell {
    std::string label_a;
    std::string label_b;
    double mean_p = std::numeric_limits<double>::quiet_NaN();
    double variance_p = std::numeric_limits<double>::quiet_NaN();
    std::string error;  // non-empty when either test failed for this pair
};

struct PairwiseMatrix {
    std::vector<std::string> labels;  // deterministic (input) order
    std::vector<PairwiseCell> cells;  // all unordered pairs, row-major upper triangle
    TestConfig config;

    const PairwiseCell* find(const std::string& a, const std::string& b) const {
        for (const auto& c : cells)
            if ((c.label_a == a && c.label_b == b) || (c.label_a == b && c.label_b == a))
                return &c;
        return nullptr;
    }
};

// --- operations ----------------------------------------------------------------

/// One row per (group, observed rating), percentages rounded to one decimal.
inline std::vector<DistributionRow> distribution_table(const std::vector<RatingGroup>& groups) {
    std::vector<DistributionRow> rows;
    for (const auto& g : groups) {
        check_group(g);
        std::map<int, std::size_t> counts;
        for (int v : g.values) ++counts[v];
        for (auto [rating, count] : counts) {
            double pct = 100.0 * static_cast<double>(count) / static_cast<double>(g.values.size());
            rows.push_back({g.label, rating, count, std::round(pct * 10.0) / 10.0});
        }
    }
    return rows;
}

inline MeanSe mean_se(const std::vector<double>& values) {
    if (values.empty()) throw StatsError("mean_se: empty sample");
    MeanSe r;
    r.n = values.size();
    r.mean = detail::mean_of(values);
    if (r.n == 1) {
        r.se = 0;
        r.degenerate = true;
    } else {
        r.se = std::sqrt(detail::sample_variance(values, r.mean) /
                         static_cast<double>(r.n));
    }
    return r;
}

inline MeanSe mean_se(const std::vector<int>& values) {
    return mean_se(std::vector<double>(values.begin(), values.end()));
}

/// Two-sided two-sample t-test. Zero variance in both samples is resolved by
/// convention: p = 1 for equal means, p = 0 otherwise.
inline double mean_diff_test(const std::vector<double>& a, const std::vector<double>& b,
                             MeanTestVariant variant = MeanTestVariant::welch) {
    if (a.size() < 2 || b.size() < 2)
        throw StatsError("mean_diff_test: each sample needs n >= 2");
    double na = static_cast<double>(a.size());
    double nb = static_cast<double>(b.size());
    double ma = detail::mean_of(a);
    double mb = detail::mean_of(b);
    double va = detail::sample_variance(a, ma);
    double vb = detail::sample_variance(b, mb);
    if (va == 0.0 && vb == 0.0) return ma == mb ? 1.0 : 0.0;

    double t, df;
    if (variant == MeanTestVariant::welch) {
        double sa = va / na;
        double sb = vb / nb;
        t = (ma - mb) / std::sqrt(sa + sb);
        df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    } else {
        double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
        df = na + nb - 2.0;
    }
    return detail::t_two_sided_p(t, df);
}

/// Levene's test for variance homogeneity: W statistic on absolute deviations
/// from the group center, referred to F(1, n_a + n_b - 2). Degenerate samples
/// (all deviations zero) return p = 1 by convention.
inline double variance_diff_test(const std::vector<double>& a, const std::vector<double>& b,
                                 LeveneCentering centering = LeveneCentering::median) {
    if (a.size() < 2 || b.size() < 2)
        throw StatsError("variance_diff_test: each sample needs n >= 2");
    auto deviations = [&](const std::vector<double>& v) {
        double center = centering == LeveneCentering::mean ? detail::mean_of(v)
                                                           : detail::median_of(v);
        std::vector<double> z;
        z.reserve(v.size());
        for (double x : v) z.push_back(std::fabs(x - center));
        return z;
    };
    std::vector<double> za = deviations(a);
    std::vector<double> zb = deviations(b);
    double na = static_cast<double>(za.size());
    double nb = static_cast<double>(zb.size());
    double n = na + nb;
    double mza = detail::mean_of(za);
    double mzb = detail::mean_of(zb);
    double mz = (na * mza + nb * mzb) / n;

    double between = na * (mza - mz) * (mza - mz) + nb * (mzb - mz) * (mzb - mz);
    double within = 0;
    for (double z : za) within += (z - mza) * (z - mza);
    for (double z : zb) within += (z - mzb) * (z - mzb);
    if (within == 0.0 && between == 0.0) return 1.0;
    if (within == 0.0) return 0.0;

    double w = (n - 2.0) * between / within;  // k = 2 groups
    return detail::f_tail_p(w, 1.0, n - 2.0);
}

namespace detail {

inline std::vector<double> as_doubles(const std::vector<int>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace detail

inline double mean_diff_test(const RatingGroup& a, const RatingGroup& b,
                             MeanTestVariant variant = MeanTestVariant::welch) {
    check_group(a);
    check_group(b);
    return mean_diff_test(detail::as_doubles(a.values), detail::as_doubles(b.values), variant);
}

inline double variance_diff_test(const RatingGroup& a, const RatingGroup& b,
                                 LeveneCentering centering = LeveneCentering::median) {
    check_group(a);
    check_group(b);
    return variance_diff_test(detail::as_doubles(a.values), detail::as_doubles(b.values),
                              centering);
}

/// Both tests applied to every unordered pair, labels kept in input order.
/// Per-pair failures are recorded in the cell, not thrown.
inline PairwiseMatrix pairwise_matrix(const std::vector<RatingGroup>& groups,
                                      const TestConfig& config = {}) {
    if (groups.size() < 2) throw StatsError("pairwise_matrix: need at least 2 groups");
    PairwiseMatrix m;
    m.config = config;
    for (const auto& g : groups) m.labels.push_back(g.label);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            PairwiseCell cell;
            cell.label_a = groups[i].label;
            cell.label_b = groups[j].label;
            try {
                cell.mean_p = mean_diff_test(groups[i], groups[j], config.mean_variant);
                cell.variance_p = variance_diff_test(groups[i], groups[j], config.centering);
            } catch (const StatsError& e) {
                cell.error = e.what();
            }
            m.cells.push_back(std::move(cell));
        }
    }
    return m;
}

/// Per-keyword mean/sd summary of paired alignment ratings. An article that
/// carries several of the requested keywords contributes to each facet.
struct KeywordFacet {
    std::string keyword;
    std::size_t n = 0;
    double empirical_mean = 0;
    double empirical_sd = 0;
    double theoretical_mean = 0;
    double theoretical_sd = 0;
    bool empty = false;  // flagged row: keyword matched no article
};

struct AlignmentObservation {
    std::vector<std::string> keywords;  // author + indexed keywords of the article
    int empirical = 0;
    int theoretical = 0;
};

inline std::vector<KeywordFacet> keyword_facets(
    const std::vector<AlignmentObservation>& observations,
    const std::vector<std::string>& keywords) {
    if (keywords.empty()) throw StatsError("keyword_facets: no keywords given");
    std::vector<KeywordFacet> out;
    for (const auto& kw : keywords) {
        std::vector<double> emp, theo;
        for (const auto& obs : observations) {
            if (std::find(obs.keywords.begin(), obs.keywords.end(), kw) !=
                obs.keywords.end()) {
                emp.push_back(obs.empirical);
                theo.push_back(obs.theoretical);
            }
        }
        KeywordFacet f;
        f.keyword = kw;
        f.n = emp.size();
        if (emp.empty()) {
            f.empty = true;
        } else {
            double me = detail::mean_of(emp);
            double mt = detail::mean_of(theo);
            f.empirical_mean = me;
            f.theoretical_mean = mt;
            f.empirical_sd = emp.size() == 1 ? 0 : std::sqrt(detail::sample_variance(emp, me));
            f.theoretical_sd = theo.size() == 1 ? 0 : std::sqrt(detail::sample_variance(theo, mt));
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace redactlab::stats
