#ifndef KORP_STATS_HPP
#define KORP_STATS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace korp::stats {

struct CorrResult {
    double r = 0.0;
    std::size_t n = 0;
    double p = 1.0; // two-sided, from t with n-2 df
};

struct LagResult {
    std::int64_t lag_samples = 0;
    double lag_seconds = 0.0;
    double peak_corr = 0.0;
};

struct PeakResult {
    double latency_s = 0.0;
    double value = 0.0;
};

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

enum class PeakMode { max, absmax };

/// Regularized incomplete beta function I_x(a, b) (continued fraction).
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of a t statistic with df degrees of freedom.
double t_test_p_two_sided(double t, double df);

/// Product-moment correlation with p from t = r*sqrt((n-2)/(1-r^2)).
CorrResult pearson(std::span<const double> x, std::span<const double> y);

/// First-order partial correlation r_xy.z. Agrees with the
/// residual-regression route within 1e-10 (property-tested).
CorrResult partial_correlation(std::span<const double> x, std::span<const double> y,
                               std::span<const double> z);

/// Normalized cross-correlation over lags in [-max_lag, +max_lag], each lag
/// scored as the Pearson r of the mean-removed overlapping segments.
/// Positive lag means y lags (is delayed relative to) x. fs only scales
/// lag_seconds.
LagResult cross_correlation_lag(std::span<const double> x, std::span<const double> y,
                                std::size_t max_lag, double fs);

/// Pearson r over each length-`window` span; element k covers [k, k+window).
/// Zero-variance windows yield NaN gaps.
std::vector<double> rolling_correlation(std::span<const double> x,
                                        std::span<const double> y, std::size_t window);

/// Peak value (or |value|) over samples whose time lies in [lo, hi]; sample
/// k sits at tmin + k/fs. Ties break toward the earliest latency. For
/// absmax the reported value keeps its sign.
PeakResult peak_in_window(std::span<const double> series, double fs, double tmin,
                          double lo_s, double hi_s, PeakMode mode = PeakMode::max);

TTestResult one_sample_ttest(std::span<const double> values, double mu0);

// Shared helpers.
double mean(std::span<const double> x);
double sample_sd(std::span<const double> x); // n-1 denominator

} // namespace korp::stats

#endif
