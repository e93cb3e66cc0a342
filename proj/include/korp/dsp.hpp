#ifndef KORP_DSP_HPP
#define KORP_DSP_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace korp::dsp {

using cvec = std::vector<std::complex<double>>;

/// Forward DFT, unnormalized: X[k] = sum_n x[n] exp(-2*pi*i*k*n/N).
/// Any length >= 1 (radix-2 when possible, Bluestein otherwise).
cvec fft(const cvec& x);

/// Inverse DFT with the 1/N factor, so ifft(fft(x)) == x.
cvec ifft(const cvec& x);

/// Linear convolution of two real sequences via FFT, length a+b-1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

struct FirFilter {
    std::vector<double> coefficients; // odd length, symmetric (linear phase)
    double low_hz = 0.0;
    double high_hz = 0.0;
    double fs = 0.0;

    std::size_t n_taps() const { return coefficients.size(); }
};

/// Default tap count: next odd integer >= 3.3 * fs / transition_hz.
std::size_t default_fir_taps(double fs, double transition_hz = 2.0);

/// Windowed-sinc (Hamming) band-pass. n_taps must be odd and >= 11;
/// pass 0 to take the default for a 2 Hz transition.
FirFilter design_fir_bandpass(double low_hz, double high_hz, double fs,
                              std::size_t n_taps = 0);

/// Magnitude of the filter's frequency response at f_hz (single pass).
double fir_response(const FirFilter& f, double f_hz);

/// Zero-phase filtering: forward-backward application with reflection
/// padding of length n_taps. Effective magnitude response is the square of
/// the single-pass response. Requires len(x) > 3 * n_taps.
std::vector<double> filtfilt(std::span<const double> x, const FirFilter& f);

struct AnalyticSignal {
    cvec values;
    double fs = 0.0;
};

/// Frequency-domain analytic signal: negative-frequency bins zeroed,
/// positive bins doubled, DC and Nyquist kept. real(values) == x up to FFT
/// round-trip error; instantaneous phase is arg(values).
AnalyticSignal hilbert_analytic(std::span<const double> x, double fs);

/// Instantaneous phase in (-pi, pi].
std::vector<double> instantaneous_phase(const AnalyticSignal& a);

/// Multiply the first and last `fraction` of samples by a cosine ramp
/// (in place). Used before epoch-level Hilbert to tame edge distortion.
void cosine_taper(std::span<double> x, double fraction = 0.10);

struct TfDecomposition {
    std::vector<cvec> coefficients;        // [freq][time]
    std::vector<double> freqs;             // Hz, strictly increasing
    std::vector<std::size_t> half_support; // per-freq wavelet half width, samples
    double fs = 0.0;

    /// Cells within half a wavelet support of either edge are contaminated.
    bool valid(std::size_t fi, std::size_t t) const {
        const std::size_t h = half_support[fi];
        return t >= h && t + h < coefficients[fi].size();
    }
};

/// Number of cycles of the complex Morlet wavelet at frequency f:
/// max(2, f/2), so the 4 Hz wavelet still fits a 0.9 s epoch.
double morlet_cycles(double f_hz);

/// Complex Morlet decomposition. Wavelets are discretely L2-normalized and
/// truncated at 3.5 sigma. Throws WaveletTooWide if any wavelet's support
/// exceeds the signal length.
TfDecomposition morlet_tf(std::span<const double> x, const std::vector<double>& freqs,
                          double fs);

/// n linearly spaced points over [lo, hi], endpoints included.
std::vector<double> linspace(double lo, double hi, std::size_t n);

} // namespace korp::dsp

#endif
