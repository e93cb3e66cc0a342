#include "korp/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "korp/errors.hpp"

namespace korp::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, in place. sign = -1 forward, +1 inverse
// (no normalization here).
void fft_pow2(cvec& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Bluestein's algorithm: DFT of arbitrary length as a convolution of
// power-of-two size. Chirp phases use fmod on k*k to keep the angle
// argument small for large N.
cvec fft_bluestein(const cvec& x, int sign) {
    const std::size_t n = x.size();
    const std::size_t m = next_pow2(2 * n - 1);
    cvec chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double q = std::fmod(static_cast<double>(k) * static_cast<double>(k),
                                   2.0 * static_cast<double>(n));
        const double ang = sign * kPi * q / static_cast<double>(n);
        chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    cvec a(m, {0.0, 0.0}), b(m, {0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
    fft_pow2(a, -1);
    fft_pow2(b, -1);
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    fft_pow2(a, +1);
    const double inv_m = 1.0 / static_cast<double>(m);
    cvec out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
    return out;
}

cvec dft(const cvec& x, int sign) {
    if (x.empty()) throw EmptyInput("fft: empty input");
    if (x.size() == 1) return x;
    if (is_pow2(x.size())) {
        cvec a = x;
        fft_pow2(a, sign);
        return a;
    }
    return fft_bluestein(x, sign);
}

double sinc(double t) {
    if (t == 0.0) return 1.0;
    const double p = kPi * t;
    return std::sin(p) / p;
}

} // namespace

cvec fft(const cvec& x) { return dft(x, -1); }

cvec ifft(const cvec& x) {
    cvec out = dft(x, +1);
    const double inv_n = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= inv_n;
    return out;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t m = next_pow2(out_len);
    cvec fa(m, {0.0, 0.0}), fb(m, {0.0, 0.0});
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fft_pow2(fa, -1);
    fft_pow2(fb, -1);
    for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
    fft_pow2(fa, +1);
    std::vector<double> out(out_len);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real() * inv_m;
    return out;
}

std::size_t default_fir_taps(double fs, double transition_hz) {
    auto n = static_cast<std::size_t>(std::ceil(3.3 * fs / transition_hz));
    if (n % 2 == 0) ++n;
    return std::max<std::size_t>(n, 11);
}

FirFilter design_fir_bandpass(double low_hz, double high_hz, double fs,
                              std::size_t n_taps) {
    if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
        std::ostringstream os;
        os << "design_fir_bandpass: need 0 < low < high < fs/2, got [" << low_hz
           << ", " << high_hz << "] at fs = " << fs;
        throw InvalidBand(os.str());
    }
    if (n_taps == 0) n_taps = default_fir_taps(fs);
    if (n_taps % 2 == 0) throw EvenTaps("design_fir_bandpass: tap count must be odd");
    if (n_taps < 11) throw InvalidBand("design_fir_bandpass: need n_taps >= 11");

    // Difference of two windowed-sinc low-passes (Hamming window).
    const auto m = static_cast<double>((n_taps - 1) / 2);
    const double f1 = low_hz / fs;
    const double f2 = high_hz / fs;
    FirFilter f;
    f.coefficients.resize(n_taps);
    for (std::size_t i = 0; i < n_taps; ++i) {
        const double k = static_cast<double>(i) - m;
        const double ideal = 2.0 * f2 * sinc(2.0 * f2 * k) - 2.0 * f1 * sinc(2.0 * f1 * k);
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                                static_cast<double>(n_taps - 1));
        f.coefficients[i] = ideal * w;
    }
    f.low_hz = low_hz;
    f.high_hz = high_hz;
    f.fs = fs;
    return f;
}

double fir_response(const FirFilter& f, double f_hz) {
    std::complex<double> h(0.0, 0.0);
    const double w = 2.0 * kPi * f_hz / f.fs;
    for (std::size_t n = 0; n < f.coefficients.size(); ++n) {
        const double ph = -w * static_cast<double>(n);
        h += f.coefficients[n] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return std::abs(h);
}

std::vector<double> filtfilt(std::span<const double> x, const FirFilter& f) {
    const std::size_t n = x.size();
    const std::size_t taps = f.n_taps();
    if (n <= 3 * taps) {
        std::ostringstream os;
        os << "filtfilt: signal length " << n << " must exceed 3 * n_taps = " << 3 * taps;
        throw SignalTooShort(os.str());
    }

    // Odd reflection about the end samples, pad length = n_taps.
    const std::size_t pad = taps;
    std::vector<double> xp(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i)
        xp[i] = 2.0 * x[0] - x[pad - i];
    std::copy(x.begin(), x.end(), xp.begin() + static_cast<std::ptrdiff_t>(pad));
    for (std::size_t i = 0; i < pad; ++i)
        xp[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    // The kernel is symmetric, so backward filtering equals a second forward
    // convolution; the combined delay of n_taps-1 samples is sliced off.
    std::vector<double> once = fft_convolve(xp, f.coefficients);
    std::vector<double> twice = fft_convolve(once, f.coefficients);
    std::vector<double> y(n);
    const std::size_t delay = pad + (taps - 1);
    for (std::size_t i = 0; i < n; ++i) y[i] = twice[delay + i];
    return y;
}

AnalyticSignal hilbert_analytic(std::span<const double> x, double fs) {
    const std::size_t n = x.size();
    if (n < 4) throw SignalTooShort("hilbert_analytic: need at least 4 samples");
    cvec spec(n);
    for (std::size_t i = 0; i < n; ++i) spec[i] = x[i];
    spec = fft(spec);
    // One-sided spectrum: keep DC (and Nyquist when n is even), double the
    // positive bins, zero the negative ones.
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
    for (std::size_t k = half + 1; k < n; ++k) spec[k] = 0.0;
    AnalyticSignal a;
    a.values = ifft(spec);
    a.fs = fs;
    return a;
}

std::vector<double> instantaneous_phase(const AnalyticSignal& a) {
    std::vector<double> ph(a.values.size());
    for (std::size_t i = 0; i < ph.size(); ++i) {
        double p = std::arg(a.values[i]); // [-pi, pi]
        if (p <= -kPi) p = kPi;           // wrap convention: (-pi, pi]
        ph[i] = p;
    }
    return ph;
}

void cosine_taper(std::span<double> x, double fraction) {
    const std::size_t n = x.size();
    const auto ramp = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < ramp; ++i) {
        const double w =
            0.5 * (1.0 - std::cos(kPi * static_cast<double>(i) / static_cast<double>(ramp)));
        x[i] *= w;
        x[n - 1 - i] *= w;
    }
}

double morlet_cycles(double f_hz) { return std::max(2.0, f_hz / 2.0); }

TfDecomposition morlet_tf(std::span<const double> x, const std::vector<double>& freqs,
                          double fs) {
    const std::size_t n = x.size();
    if (n == 0) throw EmptyInput("morlet_tf: empty signal");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (!(freqs[i] > 0.0) || !(freqs[i] < fs / 2.0))
            throw InvalidBand("morlet_tf: frequencies must lie in (0, fs/2)");
        if (i > 0 && freqs[i] <= freqs[i - 1])
            throw InvalidBand("morlet_tf: frequencies must be strictly increasing");
    }

    TfDecomposition tf;
    tf.freqs = freqs;
    tf.fs = fs;
    tf.coefficients.resize(freqs.size());
    tf.half_support.resize(freqs.size());

    for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
        const double fc = freqs[fi];
        const double sigma_t = morlet_cycles(fc) / (2.0 * kPi * fc);
        const auto half = static_cast<std::size_t>(std::ceil(3.5 * sigma_t * fs));
        const std::size_t support = 2 * half + 1;
        if (support > n) {
            std::ostringstream os;
            os << "morlet_tf: wavelet at " << fc << " Hz spans " << support
               << " samples but the signal has only " << n;
            throw WaveletTooWide(os.str());
        }
        tf.half_support[fi] = half;

        cvec w(support);
        double norm2 = 0.0;
        for (std::size_t k = 0; k < support; ++k) {
            const double t = (static_cast<double>(k) - static_cast<double>(half)) / fs;
            const double g = std::exp(-t * t / (2.0 * sigma_t * sigma_t));
            w[k] = g * std::complex<double>(std::cos(2.0 * kPi * fc * t),
                                            std::sin(2.0 * kPi * fc * t));
            norm2 += g * g;
        }
        const double inv_norm = 1.0 / std::sqrt(norm2);
        for (auto& v : w) v *= inv_norm;

        // Cross-correlation with the conjugate wavelet (complex fast conv).
        const std::size_t m = next_pow2(n + support - 1);
        cvec fx(m, {0.0, 0.0}), fw(m, {0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) fx[i] = x[i];
        for (std::size_t k = 0; k < support; ++k) fw[k] = std::conj(w[support - 1 - k]);
        fft_pow2(fx, -1);
        fft_pow2(fw, -1);
        for (std::size_t i = 0; i < m; ++i) fx[i] *= fw[i];
        fft_pow2(fx, +1);
        const double inv_m = 1.0 / static_cast<double>(m);
        cvec coef(n);
        for (std::size_t t = 0; t < n; ++t) coef[t] = fx[t + support - 1 - half] * inv_m;
        tf.coefficients[fi] = std::move(coef);
    }
    return tf;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    if (n > 1) v[n - 1] = hi;
    return v;
}

} // namespace korp::dsp
