#include "korp/metrics.hpp"

#include "korp/dsp.hpp"
#include "korp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace korp::metrics {

namespace {

void require_trials(const EpochSet& epochs, std::size_t at_least, const char* who) {
    if (epochs.n_trials() < at_least) {
        std::ostringstream os;
        os << who << ": need at least " << at_least << " trials, got "
           << epochs.n_trials();
        if (at_least <= 1) throw EmptyEpochs(os.str());
        throw TooFewTrials(os.str());
    }
}

double neumaier_mean(const double* v, std::size_t n, std::size_t stride) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = v[i * stride];
        const double t = s + x;
        if (std::abs(s) >= std::abs(x)) {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    return (s + c) / static_cast<double>(n);
}

} // namespace

PhaseTensor epoch_phases(const EpochSet& epochs) {
    require_trials(epochs, 1, "epoch_phases");
    const std::size_t nt = epochs.n_trials();
    const std::size_t nc = epochs.n_channels();
    const std::size_t ns = epochs.n_times();
    PhaseTensor out;
    out.fs = epochs.fs;
    out.tmin = epochs.tmin;
    out.phases = Tensor3(nt, nc, ns);
    std::vector<double> buf(ns);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t c = 0; c < nc; ++c) {
            const auto src = epochs.data.series(t, c);
            std::copy(src.begin(), src.end(), buf.begin());
            const auto analytic = dsp::hilbert_analytic(buf, epochs.fs);
            const auto ph = dsp::instantaneous_phase(analytic);
            auto dst = out.phases.series(t, c);
            std::copy(ph.begin(), ph.end(), dst.begin());
        }
    }
    return out;
}

SyncSeries kuramoto_R(const PhaseTensor& phases) {
    const std::size_t nt = phases.phases.dim0();
    const std::size_t nc = phases.phases.dim1();
    const std::size_t ns = phases.phases.dim2();
    if (nt == 0 || ns == 0) {
        throw EmptyEpochs("kuramoto_R: empty phase tensor");
    }
    if (nc < 2) {
        throw TooFewChannels("kuramoto_R: need at least 2 channels");
    }
    SyncSeries out;
    out.fs = phases.fs;
    out.tmin = phases.tmin;
    out.per_trial = Matrix(nt, ns);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t s = 0; s < ns; ++s) {
            double re = 0.0, im = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                const double p = phases.phases.series(t, c)[s];
                re += std::cos(p);
                im += std::sin(p);
            }
            const double r = std::hypot(re, im) / static_cast<double>(nc);
            out.per_trial(t, s) = std::clamp(r, 0.0, 1.0);
        }
    }
    out.grand.resize(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        const double m = neumaier_mean(&out.per_trial(0, s), nt, ns);
        out.grand[s] = std::clamp(m, 0.0, 1.0);
    }
    return out;
}

ErpSeries erp(const EpochSet& epochs) {
    require_trials(epochs, 1, "erp");
    const std::size_t nt = epochs.n_trials();
    const std::size_t nc = epochs.n_channels();
    const std::size_t ns = epochs.n_times();
    ErpSeries out;
    out.fs = epochs.fs;
    out.tmin = epochs.tmin;
    out.values.assign(ns, 0.0);
    std::vector<double> comp(ns, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t c = 0; c < nc; ++c) {
            const auto row = epochs.data.series(t, c);
            for (std::size_t s = 0; s < ns; ++s) {
                const double x = row[s];
                const double sum = out.values[s] + x;
                if (std::abs(out.values[s]) >= std::abs(x)) {
                    comp[s] += (out.values[s] - sum) + x;
                } else {
                    comp[s] += (x - sum) + out.values[s];
                }
                out.values[s] = sum;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(nt * nc);
    for (std::size_t s = 0; s < ns; ++s) {
        out.values[s] = (out.values[s] + comp[s]) * inv;
    }
    return out;
}

ItcMap itc(const EpochSet& epochs, const std::vector<double>& freqs) {
    require_trials(epochs, 2, "itc");
    if (freqs.empty()) {
        throw EmptyInput("itc: empty frequency list");
    }
    const std::size_t nt = epochs.n_trials();
    const std::size_t nc = epochs.n_channels();
    const std::size_t ns = epochs.n_times();
    const std::size_t nf = freqs.size();

    ItcMap out;
    out.freqs = freqs;
    out.fs = epochs.fs;
    out.tmin = epochs.tmin;
    out.values = Matrix(nf, ns);
    out.valid = Matrix(nf, ns);

    // Channel-mean accumulator of per-channel |mean unit phasor|.
    Matrix acc(nf, ns);
    std::vector<double> buf(ns);
    std::vector<std::complex<double>> phasor_sum(nf * ns);
    bool mask_done = false;
    for (std::size_t c = 0; c < nc; ++c) {
        std::fill(phasor_sum.begin(), phasor_sum.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t t = 0; t < nt; ++t) {
            const auto src = epochs.data.series(t, c);
            std::copy(src.begin(), src.end(), buf.begin());
            const auto tf = dsp::morlet_tf(buf, freqs, epochs.fs);
            if (!mask_done) {
                for (std::size_t f = 0; f < nf; ++f) {
                    for (std::size_t s = 0; s < ns; ++s) {
                        out.valid(f, s) = tf.valid(f, s) ? 1.0 : 0.0;
                    }
                }
                mask_done = true;
            }
            for (std::size_t f = 0; f < nf; ++f) {
                for (std::size_t s = 0; s < ns; ++s) {
                    const std::complex<double> v = tf.coefficients[f][s];
                    const double mag = std::abs(v);
                    if (mag > 0.0) phasor_sum[f * ns + s] += v / mag;
                }
            }
        }
        for (std::size_t f = 0; f < nf; ++f) {
            for (std::size_t s = 0; s < ns; ++s) {
                acc(f, s) += std::abs(phasor_sum[f * ns + s]) / static_cast<double>(nt);
            }
        }
    }
    const double inv_c = 1.0 / static_cast<double>(nc);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t s = 0; s < ns; ++s) {
            out.values(f, s) = std::clamp(acc(f, s) * inv_c, 0.0, 1.0);
        }
    }
    return out;
}

std::size_t cascade_taps(std::size_t n_times, double fs, double transition_hz) {
    // Zero-phase filtering needs n_times > 3 * taps.
    if (n_times < 3 * 11 + 1) {
        std::ostringstream os;
        os << "cascade_taps: epoch of " << n_times
           << " samples cannot fit even the minimal 11-tap filter";
        throw SignalTooShort(os.str());
    }
    std::size_t cap = (n_times - 1) / 3;
    if (cap % 2 == 0) --cap;
    const std::size_t preferred = dsp::default_fir_taps(fs, transition_hz);
    return std::min(preferred, cap);
}

std::vector<CascadeBand> band_sync_cascade(const EpochSet& epochs,
                                           const std::vector<BandDef>& bands,
                                           double search_lo, double search_hi,
                                           double taper_fraction) {
    require_trials(epochs, 1, "band_sync_cascade");
    if (bands.empty()) {
        throw EmptyInput("band_sync_cascade: no bands given");
    }
    const std::size_t nt = epochs.n_trials();
    const std::size_t nc = epochs.n_channels();
    const std::size_t ns = epochs.n_times();
    const std::size_t taps = cascade_taps(ns, epochs.fs);

    std::vector<CascadeBand> out;
    out.reserve(bands.size());
    std::vector<double> buf(ns);
    for (const auto& band : bands) {
        const auto fir =
            dsp::design_fir_bandpass(band.low_hz, band.high_hz, epochs.fs, taps);
        PhaseTensor phases;
        phases.fs = epochs.fs;
        phases.tmin = epochs.tmin;
        phases.phases = Tensor3(nt, nc, ns);
        for (std::size_t t = 0; t < nt; ++t) {
            for (std::size_t c = 0; c < nc; ++c) {
                const auto src = epochs.data.series(t, c);
                std::copy(src.begin(), src.end(), buf.begin());
                auto filtered = dsp::filtfilt(buf, fir);
                dsp::cosine_taper(filtered, taper_fraction);
                const auto ph =
                    dsp::instantaneous_phase(dsp::hilbert_analytic(filtered, epochs.fs));
                auto dst = phases.phases.series(t, c);
                std::copy(ph.begin(), ph.end(), dst.begin());
            }
        }
        CascadeBand cb;
        cb.band = band;
        cb.n_taps = taps;
        cb.sync = kuramoto_R(phases);
        cb.peak = stats::peak_in_window(cb.sync.grand, epochs.fs, epochs.tmin,
                                        search_lo, search_hi, stats::PeakMode::max);
        out.push_back(std::move(cb));
    }
    return out;
}

} // namespace korp::metrics
