#include "korp/stats.hpp"

#include "korp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace korp::stats {

namespace {

// Neumaier-compensated sum; the accumulations below feed variance ratios,
// so the cheap extra add is worth it.
double csum(std::span<const double> x) {
    double s = 0.0;
    double c = 0.0;
    for (double v : x) {
        double t = s + v;
        if (std::abs(s) >= std::abs(v)) {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    return s + c;
}

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw NumericalError("incomplete_beta: continued fraction did not converge");
}

void check_pair(std::span<const double> x, std::span<const double> y, const char* who) {
    if (x.empty() || y.empty()) {
        throw EmptyInput(std::string(who) + ": empty input");
    }
    if (x.size() != y.size()) {
        std::ostringstream os;
        os << who << ": length mismatch (" << x.size() << " vs " << y.size() << ")";
        throw LengthMismatch(os.str());
    }
}

struct Moments {
    double mx, my, sxx, syy, sxy;
};

Moments paired_moments(std::span<const double> x, std::span<const double> y) {
    const auto n = x.size();
    Moments m{};
    m.mx = csum(x) / static_cast<double>(n);
    m.my = csum(y) / static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - m.mx;
        const double dy = y[i] - m.my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    m.sxx = sxx;
    m.syy = syy;
    m.sxy = sxy;
    return m;
}

double pearson_r_or_nan(std::span<const double> x, std::span<const double> y) {
    const Moments m = paired_moments(x, y);
    const double den = std::sqrt(m.sxx) * std::sqrt(m.syy);
    if (den == 0.0 || !std::isfinite(den)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::clamp(m.sxy / den, -1.0, 1.0);
}

double p_from_r(double r, double df) {
    if (df < 1.0) return std::numeric_limits<double>::quiet_NaN();
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;
    const double t = r * std::sqrt(df / denom);
    return t_test_p_two_sided(t, df);
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ValidationError("incomplete_beta: a and b must be positive");
    }
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * beta_cf(a, b, x) / a;
    }
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double t_test_p_two_sided(double t, double df) {
    if (!(df > 0.0)) {
        throw ValidationError("t_test_p_two_sided: df must be positive");
    }
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

CorrResult pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "pearson");
    if (x.size() < 3) {
        throw TooFewTrials("pearson: need at least 3 paired samples");
    }
    const Moments m = paired_moments(x, y);
    if (m.sxx == 0.0 || m.syy == 0.0) {
        throw ConstantInput("pearson: an input has zero variance");
    }
    CorrResult out;
    out.n = x.size();
    out.r = std::clamp(m.sxy / (std::sqrt(m.sxx) * std::sqrt(m.syy)), -1.0, 1.0);
    out.p = p_from_r(out.r, static_cast<double>(out.n - 2));
    return out;
}

CorrResult partial_correlation(std::span<const double> x, std::span<const double> y,
                               std::span<const double> z) {
    check_pair(x, y, "partial_correlation");
    check_pair(x, z, "partial_correlation");
    if (x.size() < 4) {
        throw TooFewTrials("partial_correlation: need at least 4 paired samples");
    }
    const CorrResult rxy = pearson(x, y);
    const double rxz = pearson(x, z).r;
    const double ryz = pearson(y, z).r;
    constexpr double kCollinear = 1.0 - 1e-12;
    if (std::abs(rxz) >= kCollinear || std::abs(ryz) >= kCollinear) {
        throw DegenerateControl(
            "partial_correlation: control variable is collinear with an input");
    }
    CorrResult out;
    out.n = x.size();
    const double num = rxy.r - rxz * ryz;
    const double den = std::sqrt((1.0 - rxz * rxz) * (1.0 - ryz * ryz));
    out.r = std::clamp(num / den, -1.0, 1.0);
    out.p = p_from_r(out.r, static_cast<double>(out.n - 3));
    return out;
}

LagResult cross_correlation_lag(std::span<const double> x, std::span<const double> y,
                                std::size_t max_lag, double fs) {
    check_pair(x, y, "cross_correlation_lag");
    if (!(fs > 0.0)) {
        throw ValidationError("cross_correlation_lag: fs must be positive");
    }
    const std::size_t n = x.size();
    if (max_lag + 3 > n) {
        std::ostringstream os;
        os << "cross_correlation_lag: max_lag " << max_lag
           << " leaves fewer than 3 overlapping samples of " << n;
        throw WindowTooLarge(os.str());
    }
    const auto lag_limit = static_cast<std::int64_t>(max_lag);
    LagResult best;
    best.peak_corr = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::int64_t lag = -lag_limit; lag <= lag_limit; ++lag) {
        // Positive lag: y is a delayed copy of x, so x[i] pairs with y[i+lag].
        std::span<const double> xs, ys;
        if (lag >= 0) {
            const auto off = static_cast<std::size_t>(lag);
            xs = x.subspan(0, n - off);
            ys = y.subspan(off, n - off);
        } else {
            const auto off = static_cast<std::size_t>(-lag);
            xs = x.subspan(off, n - off);
            ys = y.subspan(0, n - off);
        }
        const double r = pearson_r_or_nan(xs, ys);
        if (std::isnan(r)) continue;
        any = true;
        if (r > best.peak_corr) {
            best.peak_corr = r;
            best.lag_samples = lag;
        }
    }
    if (!any) {
        throw ConstantInput("cross_correlation_lag: every overlap has zero variance");
    }
    best.lag_seconds = static_cast<double>(best.lag_samples) / fs;
    return best;
}

std::vector<double> rolling_correlation(std::span<const double> x,
                                        std::span<const double> y, std::size_t window) {
    check_pair(x, y, "rolling_correlation");
    if (window < 3) {
        throw ValidationError("rolling_correlation: window must be at least 3");
    }
    if (window > x.size()) {
        std::ostringstream os;
        os << "rolling_correlation: window " << window << " exceeds series length "
           << x.size();
        throw WindowTooLarge(os.str());
    }
    const std::size_t n_out = x.size() - window + 1;
    std::vector<double> out(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        out[k] = pearson_r_or_nan(x.subspan(k, window), y.subspan(k, window));
    }
    return out;
}

PeakResult peak_in_window(std::span<const double> series, double fs, double tmin,
                          double lo_s, double hi_s, PeakMode mode) {
    if (series.empty()) {
        throw EmptyInput("peak_in_window: empty series");
    }
    if (!(fs > 0.0)) {
        throw ValidationError("peak_in_window: fs must be positive");
    }
    if (!(lo_s <= hi_s)) {
        throw ValidationError("peak_in_window: window bounds out of order");
    }
    // Slack of half a bin keeps boundary samples from dropping out to
    // floating-point noise in tmin + k/fs.
    const double slack = 0.5 / fs * 1e-6;
    bool found = false;
    std::size_t best_k = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double t = tmin + static_cast<double>(k) / fs;
        if (t < lo_s - slack || t > hi_s + slack) continue;
        const double v = series[k];
        const double score = (mode == PeakMode::absmax) ? std::abs(v) : v;
        if (!found || score > best_score) {
            found = true;
            best_score = score;
            best_k = k;
        }
    }
    if (!found) {
        std::ostringstream os;
        os << "peak_in_window: no samples in [" << lo_s << ", " << hi_s << "] s";
        throw WindowOutOfRange(os.str());
    }
    PeakResult out;
    out.latency_s = tmin + static_cast<double>(best_k) / fs;
    out.value = series[best_k];
    return out;
}

TTestResult one_sample_ttest(std::span<const double> values, double mu0) {
    if (values.empty()) {
        throw EmptyInput("one_sample_ttest: empty input");
    }
    if (values.size() < 2) {
        throw TooFewTrials("one_sample_ttest: need at least 2 values");
    }
    TTestResult out;
    out.n = values.size();
    out.mean = csum(values) / static_cast<double>(out.n);
    double ss = 0.0;
    for (double v : values) {
        const double d = v - out.mean;
        ss += d * d;
    }
    out.sd = std::sqrt(ss / static_cast<double>(out.n - 1));
    if (out.sd == 0.0) {
        throw ZeroVariance("one_sample_ttest: all values identical");
    }
    out.t = (out.mean - mu0) / (out.sd / std::sqrt(static_cast<double>(out.n)));
    out.p = t_test_p_two_sided(out.t, static_cast<double>(out.n - 1));
    return out;
}

double mean(std::span<const double> x) {
    if (x.empty()) throw EmptyInput("mean: empty input");
    return csum(x) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) throw TooFewTrials("sample_sd: need at least 2 values");
    const double m = csum(x) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        const double d = v - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

} // namespace korp::stats
