#ifndef KORP_SYNTH_HPP
#define KORP_SYNTH_HPP

#include "korp/matrix.hpp"
#include "korp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace korp::synth {

/// All-to-all Kuramoto network. omega in rad/s, K in rad/s, sigma in
/// rad/sqrt(s).
struct OscillatorNetwork {
    std::size_t n = 0;
    std::vector<double> omega;
    double K = 0.0;
    double sigma = 0.0;
    std::vector<double> theta0;
};

/// Natural frequencies omega0 + gamma * tan(pi*(u - 1/2)). u_clip > 0
/// trims the distribution's tails by drawing u from [u_clip, 1 - u_clip];
/// the mean-field prediction applies to the untrimmed case only.
OscillatorNetwork lorentzian_network(std::size_t n, double omega0, double gamma,
                                     double K, double sigma, std::uint64_t seed,
                                     double u_clip = 0.0);

/// Identical natural frequencies, random initial phases.
OscillatorNetwork fixed_network(std::size_t n, double omega0, double K, double sigma,
                                std::uint64_t seed);

/// Euler-Maruyama phase trajectories, steps x n. Row 0 is the initial
/// condition; row s holds theta(s*dt), wrapped to (-pi, pi]. Noise uses one
/// counter-based stream per oscillator, so any parallel schedule reproduces
/// the serial output. k_override, when given, supplies K for the step
/// leaving each row (length >= steps - 1).
Matrix simulate(const OscillatorNetwork& net, double dt, std::size_t steps,
                std::uint64_t seed, const std::vector<double>* k_override = nullptr);

/// Stationary mean-field order parameter for a Lorentzian frequency
/// spread: 0 below K_c = 2*gamma, sqrt(1 - K_c/K) above.
double mean_field_R(double K, double gamma);

/// One additive stimulus-locked wave packet (cosine under a Gaussian
/// envelope), phase-locked to the event. The per-trial amplitude factor is
/// 1 + boost_link*(boost/boost_base - 1) + amp_jitter*eta (clamped at
/// 0.05), so a burst can track the coupling drive as loosely or tightly as
/// the link and the independent jitter dictate.
struct BurstComponent {
    double freq_hz = 10.0;
    double center_s = 0.3;  // envelope center after event onset
    double width_s = 0.05;  // envelope sigma
    double amplitude_uv = 0.0;
    double boost_link = 0.0;
    double amp_jitter = 0.0;
};

/// Generator configuration. The defaults are inert: no noise, no events'
/// worth of evoked structure, no artifact; channel j then reproduces
/// mixing * sin(theta) exactly.
struct SynthSpec {
    double fs = 250.0;
    std::size_t oversample = 4; // integration runs at fs * oversample
    std::size_t n_channels = 0; // 0 -> one channel per oscillator
    std::vector<std::string> channel_labels; // empty -> montage or CH<i>
    Matrix mixing;              // channels x oscillators; empty -> identity
    double osc_amplitude_uv = 1.0;
    double noise_sd_uv = 0.0;
    // Optional per-channel noise levels; overrides noise_sd_uv where set.
    // Must be empty or one entry per channel.
    std::vector<double> noise_sd_channel_uv;

    // Event schedule.
    std::size_t n_target = 0;
    std::size_t n_nontarget = 0;
    double lead_in_s = 2.0;
    double trial_spacing_s = 1.3;
    int target_code = 1;
    int nontarget_code = 2;

    // Event-locked coupling boost (the neural synchronization path).
    // boost(trial) = boost_base * (1 + boost_artifact_link * (a_trial - 1))
    // added to K under a Gaussian envelope after each target event.
    double boost_base = 0.0;
    double boost_center_s = 0.17;
    double boost_width_s = 0.05;
    double boost_artifact_link = 0.0;
    double nontarget_boost_scale = 0.3;

    // Evoked potential (the artifact-independent voltage path):
    // e_trial = 1 + erp_boost_link*(boost/boost_base - 1) + erp_jitter*eta.
    // A nonzero carrier turns the packet into a phase-locked wavelet; a bare
    // Gaussian of width ~40 ms is mostly below 4 Hz and a band-pass front
    // end would strip it.
    double erp_amplitude_uv = 0.0;
    double erp_center_s = 0.15;
    double erp_width_s = 0.04;
    double erp_carrier_hz = 0.0;
    double erp_boost_link = 0.0;
    double erp_jitter = 0.0;
    double nontarget_erp_scale = 0.4;

    // Ocular-style artifact injected into designated channels, amplitude
    // a_trial ~ U[artifact_amp_lo, artifact_amp_hi] per target trial. A
    // nonzero center jitter draws each trial's packet center uniformly from
    // center +- jitter, which decouples artifact timing from everything
    // event-locked.
    double artifact_waveform_uv = 0.0;
    double artifact_carrier_hz = 6.0;
    double artifact_center_s = 0.17;
    double artifact_center_jitter_s = 0.0;
    double artifact_width_s = 0.06;
    double artifact_amp_lo = 0.2;
    double artifact_amp_hi = 1.8;
    std::vector<std::size_t> artifact_channels;
    std::vector<double> artifact_channel_gain; // matches artifact_channels

    std::vector<BurstComponent> bursts;
    // Per-channel sign/gain applied to every burst's channel weights. An
    // average reference removes whatever is common across channels, so a
    // burst needs a signed, spatially imbalanced projection to survive as
    // a phase-locking event. Empty means all +1.
    std::vector<double> burst_polarity;
};

struct GroundTruth {
    Matrix phases;                  // samples x oscillators, channel rate
    std::vector<double> k_series;   // rad/s at channel rate
    std::vector<Event> events;
    std::vector<std::string> trial_labels;
    std::vector<double> artifact_amplitude; // per trial (0 when none injected)
    std::vector<double> boost_amplitude;    // rad/s per trial
    std::vector<double> erp_amplitude;      // scale factor per trial
    Matrix burst_factor;                    // trials x bursts amplitude factors
};

struct SynthResult {
    Recording recording;
    GroundTruth truth;
};

SynthResult synth_eeg(const OscillatorNetwork& net, const SynthSpec& spec,
                      std::uint64_t seed);

/// truth.json + truth.f64le (phases then k_series, row-major LE doubles).
void save_ground_truth(const std::filesystem::path& dir, const GroundTruth& truth);

enum class Scenario { coupled, null_gain, independent, regional };

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario s);

struct ScenarioSetup {
    OscillatorNetwork net;
    SynthSpec spec;
};

/// Presets used by the test suites and the CLI:
///  - coupled: per-trial artifact amplitude drives both a coupling boost
///    and a frontal in-band waveform (artifact carries the signal);
///  - null_gain: fixed boost, no artifact (arms should agree);
///  - independent: no event-locked dynamics; frontal channels carry no
///    oscillator signal, only noise plus an out-of-band artifact packet
///    with jittered timing, so the artifact series is independent of R
///    by construction;
///  - regional: the coupled construction, artifact confined to frontal
///    channels (for the regional ranking test).
ScenarioSetup make_scenario(Scenario s, std::uint64_t seed, std::size_t n_target = 200,
                            std::size_t n_nontarget = 50);

/// The 32-label montage the scenarios use.
std::vector<std::string> default_montage();

} // namespace korp::synth

#endif
