#ifndef KORP_METRICS_HPP
#define KORP_METRICS_HPP

#include "korp/matrix.hpp"
#include "korp/stats.hpp"
#include "korp/types.hpp"

#include <string>
#include <vector>

namespace korp::metrics {

/// Instantaneous phase per trial, channel, and sample, each value in (-pi, pi].
struct PhaseTensor {
    Tensor3 phases; // trials x channels x time
    double fs = 0.0;
    double tmin = 0.0;
};

/// Phase-synchronization time course. `grand` is the arithmetic mean of
/// `per_trial` over trials; both stay inside [0, 1] exactly.
struct SyncSeries {
    Matrix per_trial; // trials x time
    std::vector<double> grand;
    double fs = 0.0;
    double tmin = 0.0;
};

/// Voltage averaged over trials and channels, in the input's units.
struct ErpSeries {
    std::vector<double> values;
    double fs = 0.0;
    double tmin = 0.0;
};

/// Inter-trial coherence per frequency and sample, channel-averaged.
/// `valid` is 1.0 where the wavelet support fits inside the epoch and 0.0
/// on edge-contaminated cells; masked cells still hold their raw numbers.
struct ItcMap {
    Matrix values; // freqs x time
    Matrix valid;  // freqs x time, 1.0 or 0.0
    std::vector<double> freqs;
    double fs = 0.0;
    double tmin = 0.0;
};

struct BandDef {
    std::string name;
    double low_hz = 0.0;
    double high_hz = 0.0;
};

struct CascadeBand {
    BandDef band;
    std::size_t n_taps = 0;
    SyncSeries sync;
    stats::PeakResult peak; // grand-R peak inside the search window
};

/// Hilbert phase of every trial/channel series taken epoch-wise.
PhaseTensor epoch_phases(const EpochSet& epochs);

/// R(t) = |channel-mean unit phasor| per trial; grand = trial mean
/// (compensated summation, so the result is schedule-independent).
/// Amplitude never enters: inputs are phases only.
SyncSeries kuramoto_R(const PhaseTensor& phases);

ErpSeries erp(const EpochSet& epochs);

/// Morlet-based ITC: per channel the modulus of the trial-mean of
/// unit-normalized coefficients, then averaged across channels (this order
/// keeps every cell <= 1). Zero-magnitude coefficients contribute zero.
ItcMap itc(const EpochSet& epochs, const std::vector<double>& freqs);

/// Per band: band-pass filter each trial/channel (tap count clamped so the
/// zero-phase filter fits the epoch), cosine-taper the edges, Hilbert phase,
/// kuramoto_R, and the grand-R peak inside [search_lo, search_hi] seconds.
std::vector<CascadeBand> band_sync_cascade(const EpochSet& epochs,
                                           const std::vector<BandDef>& bands,
                                           double search_lo = 0.0,
                                           double search_hi = 0.8,
                                           double taper_fraction = 0.10);

/// Largest usable odd tap count for an epoch of n_times samples: the dsp
/// default when it fits, otherwise the largest odd value the zero-phase
/// filter's length precondition admits.
std::size_t cascade_taps(std::size_t n_times, double fs, double transition_hz = 2.0);

} // namespace korp::metrics

#endif
