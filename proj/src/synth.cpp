#include "korp/synth.hpp"

#include "korp/errors.hpp"
#include "korp/f64io.hpp"
#include "korp/log.hpp"
#include "korp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace korp::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Stream ids for the counter-based generator. Oscillator noise uses the
// oscillator index itself (0..n-1), so everything else lives far above.
constexpr std::uint64_t kStreamOmega = (1ULL << 32) | 1;
constexpr std::uint64_t kStreamTheta0 = (1ULL << 32) | 2;
constexpr std::uint64_t kStreamMixing = (1ULL << 32) | 3;
constexpr std::uint64_t kStreamNoiseBase = (1ULL << 33);
constexpr std::uint64_t kStreamArtifactAmp = (1ULL << 34) | 1;
constexpr std::uint64_t kStreamErpJitter = (1ULL << 34) | 2;
constexpr std::uint64_t kStreamArtifactPhase = (1ULL << 34) | 3;
constexpr std::uint64_t kStreamErpWeight = (1ULL << 34) | 4;
constexpr std::uint64_t kStreamBurstWeight = (1ULL << 34) | 5;
constexpr std::uint64_t kStreamArtifactCenter = (1ULL << 34) | 6;
constexpr std::uint64_t kStreamNoiseMix = (1ULL << 34) | 7;
constexpr std::uint64_t kStreamBurstAmp = (1ULL << 34) | 8;

double wrap_phase(double x) {
    double y = std::remainder(x, kTwoPi);
    if (y <= -std::numbers::pi) y += kTwoPi;
    return y;
}

void check_network(const OscillatorNetwork& net) {
    if (net.n < 2) throw ValidationError("oscillator network: need n >= 2");
    if (net.omega.size() != net.n || net.theta0.size() != net.n) {
        throw LengthMismatch("oscillator network: omega/theta0 length differs from n");
    }
    if (net.K < 0.0 || net.sigma < 0.0) {
        throw ValidationError("oscillator network: K and sigma must be nonnegative");
    }
}

struct Trial {
    std::int64_t sample = 0; // event onset at channel rate
    bool target = true;
    double artifact_amp = 0.0;
    double boost = 0.0;  // rad/s
    double erp = 0.0;    // scale factor
    double artifact_phase = 0.0;
    double artifact_center = 0.0; // seconds after onset
};

} // namespace

OscillatorNetwork lorentzian_network(std::size_t n, double omega0, double gamma,
                                     double K, double sigma, std::uint64_t seed,
                                     double u_clip) {
    if (!(gamma > 0.0)) {
        throw ValidationError("lorentzian_network: gamma must be positive");
    }
    if (u_clip < 0.0 || u_clip >= 0.5) {
        throw ValidationError("lorentzian_network: u_clip must lie in [0, 0.5)");
    }
    OscillatorNetwork net;
    net.n = n;
    net.K = K;
    net.sigma = sigma;
    net.omega.resize(n);
    net.theta0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng::uniform2_at(seed, kStreamOmega, i)[0];
        u = u_clip + u * (1.0 - 2.0 * u_clip);
        net.omega[i] = omega0 + gamma * std::tan(std::numbers::pi * (u - 0.5));
        const double v = rng::uniform2_at(seed, kStreamTheta0, i)[0];
        net.theta0[i] = wrap_phase(std::numbers::pi - kTwoPi * v);
    }
    return net;
}

OscillatorNetwork fixed_network(std::size_t n, double omega0, double K, double sigma,
                                std::uint64_t seed) {
    OscillatorNetwork net;
    net.n = n;
    net.K = K;
    net.sigma = sigma;
    net.omega.assign(n, omega0);
    net.theta0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = rng::uniform2_at(seed, kStreamTheta0, i)[0];
        net.theta0[i] = wrap_phase(std::numbers::pi - kTwoPi * v);
    }
    return net;
}

Matrix simulate(const OscillatorNetwork& net, double dt, std::size_t steps,
                std::uint64_t seed, const std::vector<double>* k_override) {
    check_network(net);
    if (!(dt > 0.0)) throw ValidationError("simulate: dt must be positive");
    if (steps == 0) throw ValidationError("simulate: steps must be positive");
    if (k_override && k_override->size() + 1 < steps) {
        throw LengthMismatch("simulate: k_override shorter than steps - 1");
    }
    double omega_max = 0.0;
    for (double w : net.omega) omega_max = std::max(omega_max, std::abs(w));
    const double scale = std::max(omega_max, net.K);
    if (scale > 0.0 && dt > 0.01 / scale) {
        log::warn("simulate: dt = ", dt, " exceeds the 0.01/", scale,
                  " stability guide; integration error grows");
    }

    const std::size_t n = net.n;
    Matrix out(steps, n);
    for (std::size_t i = 0; i < n; ++i) out(0, i) = wrap_phase(net.theta0[i]);

    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t s = 0; s + 1 < steps; ++s) {
        double re = 0.0, im = 0.0;
        const double* th = &out(s, 0);
        for (std::size_t i = 0; i < n; ++i) {
            re += std::cos(th[i]);
            im += std::sin(th[i]);
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        const double r = std::hypot(re, im) * inv_n;
        const double psi = std::atan2(im, re);
        const double k_now = k_override ? (*k_override)[s] : net.K;
        double* next = &out(s + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double drift = net.omega[i] + k_now * r * std::sin(psi - th[i]);
            double step = drift * dt;
            if (net.sigma > 0.0) {
                step += net.sigma * sqrt_dt * rng::normal_at(seed, i, s);
            }
            next[i] = wrap_phase(th[i] + step);
        }
    }
    return out;
}

double mean_field_R(double K, double gamma) {
    if (!(gamma > 0.0)) {
        throw ValidationError("mean_field_R: gamma must be positive");
    }
    const double kc = 2.0 * gamma;
    if (K <= kc) return 0.0;
    return std::sqrt(1.0 - kc / K);
}

std::vector<std::string> default_montage() {
    return {"Fp1", "Fp2", "AF3", "AF4", "F7",  "F3",  "Fz",  "F4",
            "F8",  "FC1", "FC2", "FT7", "FT8", "T7",  "C3",  "Cz",
            "C4",  "T8",  "TP7", "CP1", "CP2", "TP8", "P3",  "Pz",
            "P4",  "PO3", "PO4", "PO7", "PO8", "O1",  "Oz",  "O2"};
}

SynthResult synth_eeg(const OscillatorNetwork& net, const SynthSpec& spec,
                      std::uint64_t seed) {
    check_network(net);
    if (!(spec.fs > 0.0)) throw SpecMismatch("synth: fs must be positive");
    if (spec.oversample == 0) throw SpecMismatch("synth: oversample must be positive");
    const std::size_t nc = spec.n_channels == 0 ? net.n : spec.n_channels;

    Matrix mixing = spec.mixing;
    if (mixing.rows() == 0) {
        if (nc != net.n) {
            throw SpecMismatch("synth: identity mixing needs n_channels == oscillators");
        }
        mixing = Matrix(nc, net.n);
        for (std::size_t i = 0; i < nc; ++i) mixing(i, i) = 1.0;
    }
    if (mixing.rows() != nc || mixing.cols() != net.n) {
        throw SpecMismatch("synth: mixing shape differs from channels x oscillators");
    }
    std::vector<std::string> labels = spec.channel_labels;
    if (labels.empty()) {
        if (nc == 32) {
            labels = default_montage();
        } else {
            for (std::size_t c = 0; c < nc; ++c) labels.push_back("CH" + std::to_string(c + 1));
        }
    }
    if (labels.size() != nc) {
        throw SpecMismatch("synth: channel label count differs from channel count");
    }
    for (std::size_t c : spec.artifact_channels) {
        if (c >= nc) throw SpecMismatch("synth: artifact channel index out of range");
    }
    std::vector<double> art_gain = spec.artifact_channel_gain;
    if (art_gain.empty()) art_gain.assign(spec.artifact_channels.size(), 1.0);
    if (art_gain.size() != spec.artifact_channels.size()) {
        throw SpecMismatch("synth: artifact gain list differs from channel list");
    }

    // Schedule. Non-targets are spread evenly through the run.
    const std::size_t n_trials = spec.n_target + spec.n_nontarget;
    const double duration =
        2.0 * spec.lead_in_s + static_cast<double>(n_trials) * spec.trial_spacing_s;
    const auto n_samples = static_cast<std::size_t>(std::llround(duration * spec.fs));
    std::vector<Trial> trials(n_trials);
    std::size_t stride = 0;
    if (spec.n_nontarget > 0) stride = std::max<std::size_t>(2, n_trials / spec.n_nontarget);
    std::size_t nontargets_placed = 0;
    for (std::size_t k = 0; k < n_trials; ++k) {
        Trial& tr = trials[k];
        tr.sample = std::llround(
            (spec.lead_in_s + static_cast<double>(k) * spec.trial_spacing_s) * spec.fs);
        tr.target = true;
        if (stride > 0 && (k % stride) == stride - 1 &&
            nontargets_placed < spec.n_nontarget) {
            tr.target = false;
            ++nontargets_placed;
        }
    }
    // Any remainder becomes non-target from the tail back.
    for (std::size_t k = n_trials; nontargets_placed < spec.n_nontarget && k > 0; --k) {
        Trial& tr = trials[k - 1];
        if (tr.target) {
            tr.target = false;
            ++nontargets_placed;
        }
    }

    for (std::size_t k = 0; k < n_trials; ++k) {
        Trial& tr = trials[k];
        if (tr.target) {
            const double u = rng::uniform2_at(seed, kStreamArtifactAmp, k)[0];
            tr.artifact_amp =
                spec.artifact_amp_lo + u * (spec.artifact_amp_hi - spec.artifact_amp_lo);
            tr.boost = spec.boost_base *
                       (1.0 + spec.boost_artifact_link * (tr.artifact_amp - 1.0));
        } else {
            tr.artifact_amp = 0.0;
            tr.boost = spec.boost_base * spec.nontarget_boost_scale;
        }
        const double boost_norm =
            spec.boost_base > 0.0 ? tr.boost / spec.boost_base : 1.0;
        double e = 1.0 + spec.erp_boost_link * (boost_norm - 1.0) +
                   spec.erp_jitter * rng::normal_at(seed, kStreamErpJitter, k);
        if (!tr.target) e *= spec.nontarget_erp_scale;
        tr.erp = std::max(0.05, e);
        tr.artifact_phase = kTwoPi * rng::uniform2_at(seed, kStreamArtifactPhase, k)[0];
        tr.artifact_center = spec.artifact_center_s;
        if (spec.artifact_center_jitter_s > 0.0) {
            const double u = rng::uniform2_at(seed, kStreamArtifactCenter, k)[0];
            tr.artifact_center += spec.artifact_center_jitter_s * (2.0 * u - 1.0);
        }
    }

    // Coupling series at integration resolution.
    const std::size_t steps = n_samples * spec.oversample;
    const double dt = 1.0 / (spec.fs * static_cast<double>(spec.oversample));
    std::vector<double> k_series(steps, net.K);
    if (spec.boost_base > 0.0) {
        const double w = spec.boost_width_s;
        for (const Trial& tr : trials) {
            const double center =
                static_cast<double>(tr.sample) / spec.fs + spec.boost_center_s;
            const auto lo = static_cast<std::int64_t>((center - 5.0 * w) / dt);
            const auto hi = static_cast<std::int64_t>((center + 5.0 * w) / dt);
            for (std::int64_t s = std::max<std::int64_t>(lo, 0);
                 s <= hi && s < static_cast<std::int64_t>(steps); ++s) {
                const double t = static_cast<double>(s) * dt - center;
                k_series[static_cast<std::size_t>(s)] +=
                    tr.boost * std::exp(-0.5 * t * t / (w * w));
            }
        }
    }

    const Matrix traj = simulate(net, dt, steps, seed, &k_series);

    SynthResult out;
    out.truth.phases = Matrix(n_samples, net.n);
    out.truth.k_series.resize(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::size_t src = s * spec.oversample;
        for (std::size_t i = 0; i < net.n; ++i) {
            out.truth.phases(s, i) = traj(src, i);
        }
        out.truth.k_series[s] = k_series[src];
    }

    Recording& rec = out.recording;
    rec.fs = spec.fs;
    rec.channel_labels = labels;
    rec.data = Matrix(nc, n_samples);

    // Oscillator mixture.
    std::vector<double> sin_theta(net.n);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t i = 0; i < net.n; ++i) {
            sin_theta[i] = std::sin(out.truth.phases(s, i));
        }
        for (std::size_t c = 0; c < nc; ++c) {
            double acc = 0.0;
            const double* w = &mixing(c, 0);
            for (std::size_t i = 0; i < net.n; ++i) acc += w[i] * sin_theta[i];
            rec.data(c, s) = spec.osc_amplitude_uv * acc;
        }
    }

    // Sensor noise. The underlying streams are independent per channel, but
    // what each electrode records is a dense unit-norm mixture of all of
    // them: scalp noise is spatially correlated through volume conduction,
    // and the mixing spreads every noise direction across channels so no
    // single channel owns a large share of any one latent direction.
    if (!spec.noise_sd_channel_uv.empty() && spec.noise_sd_channel_uv.size() != nc) {
        throw SpecMismatch("synth: per-channel noise length differs from channel count");
    }
    bool any_noise = spec.noise_sd_uv > 0.0;
    for (double sd : spec.noise_sd_channel_uv) any_noise = any_noise || sd > 0.0;
    if (any_noise) {
        Matrix mix(nc, nc);
        for (std::size_t c = 0; c < nc; ++c) {
            double norm = 0.0;
            for (std::size_t j = 0; j < nc; ++j) {
                const auto u = rng::uniform2_at(seed, kStreamNoiseMix, c * nc + j);
                const double mag = 0.85 + 0.15 * u[0];
                mix(c, j) = u[1] < 0.5 ? -mag : mag;
                norm += mix(c, j) * mix(c, j);
            }
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < nc; ++j) mix(c, j) /= norm;
        }
        std::vector<double> latent(nc);
        for (std::size_t s = 0; s < n_samples; ++s) {
            for (std::size_t j = 0; j < nc; ++j) {
                latent[j] = rng::normal_at(seed, kStreamNoiseBase + j, s);
            }
            for (std::size_t c = 0; c < nc; ++c) {
                const double sd = spec.noise_sd_channel_uv.empty()
                                      ? spec.noise_sd_uv
                                      : spec.noise_sd_channel_uv[c];
                if (sd <= 0.0) continue;
                double acc = 0.0;
                const double* w = &mix(c, 0);
                for (std::size_t j = 0; j < nc; ++j) acc += w[j] * latent[j];
                rec.data(c, s) += sd * acc;
            }
        }
    }

    // Stimulus-locked additive packets.
    auto add_packet = [&](std::size_t channel, double weight, double event_s,
                          double center, double width, double freq_hz, double phase) {
        const double mid = event_s + center;
        const auto lo = static_cast<std::int64_t>(std::ceil((mid - 5.0 * width) * spec.fs));
        const auto hi = static_cast<std::int64_t>(std::floor((mid + 5.0 * width) * spec.fs));
        double* row = &rec.data(channel, 0);
        for (std::int64_t s = std::max<std::int64_t>(lo, 0);
             s <= hi && s < static_cast<std::int64_t>(n_samples); ++s) {
            const double t = static_cast<double>(s) / spec.fs - mid;
            double v = std::exp(-0.5 * t * t / (width * width));
            if (freq_hz > 0.0) v *= std::cos(kTwoPi * freq_hz * t + phase);
            row[static_cast<std::size_t>(s)] += weight * v;
        }
    };

    // Mild topography only: the spread stays small so that after an average
    // reference the per-channel residue of the evoked packet is a fraction
    // of a microvolt and cannot register as channel-local structure.
    std::vector<double> erp_weight(nc, 1.0);
    if (spec.erp_amplitude_uv > 0.0) {
        for (std::size_t c = 0; c < nc; ++c) {
            erp_weight[c] = 0.85 + 0.3 * rng::uniform2_at(seed, kStreamErpWeight, c)[0];
        }
    }
    if (!spec.burst_polarity.empty() && spec.burst_polarity.size() != nc) {
        throw SpecMismatch("synth: burst polarity length differs from channel count");
    }
    std::vector<std::vector<double>> burst_weight(spec.bursts.size());
    for (std::size_t b = 0; b < spec.bursts.size(); ++b) {
        burst_weight[b].resize(nc);
        double sum_pos = 0.0;
        double sum_neg = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double pol = spec.burst_polarity.empty() ? 1.0 : spec.burst_polarity[c];
            const double w =
                pol * (0.5 + rng::uniform2_at(seed, kStreamBurstWeight, b * 4096 + c)[0]);
            burst_weight[b][c] = w;
            (w > 0.0 ? sum_pos : sum_neg) += w;
        }
        // When both signs are present, rescale the negative group so the
        // weights sum to zero: the burst then has no common mode, so it
        // leaves no residue on unweighted channels after an average
        // reference and adds nothing to the mean scalp voltage. Phase
        // alignment is unaffected; each signed channel still locks.
        if (sum_pos > 0.0 && sum_neg < 0.0) {
            const double k = -sum_pos / sum_neg;
            for (std::size_t c = 0; c < nc; ++c) {
                if (burst_weight[b][c] < 0.0) burst_weight[b][c] *= k;
            }
        }
    }

    out.truth.burst_factor = Matrix(trials.size(), spec.bursts.size());
    for (std::size_t k = 0; k < trials.size(); ++k) {
        const Trial& tr = trials[k];
        const double event_s = static_cast<double>(tr.sample) / spec.fs;
        const double boost_norm =
            spec.boost_base > 0.0 ? tr.boost / spec.boost_base : 1.0;
        if (spec.erp_amplitude_uv > 0.0) {
            for (std::size_t c = 0; c < nc; ++c) {
                add_packet(c, spec.erp_amplitude_uv * tr.erp * erp_weight[c], event_s,
                           spec.erp_center_s, spec.erp_width_s, spec.erp_carrier_hz, 0.0);
            }
        }
        for (std::size_t b = 0; b < spec.bursts.size(); ++b) {
            const BurstComponent& burst = spec.bursts[b];
            if (burst.amplitude_uv <= 0.0) continue;
            double factor = 1.0 + burst.boost_link * (boost_norm - 1.0);
            if (burst.amp_jitter > 0.0) {
                factor += burst.amp_jitter *
                          rng::normal_at(seed, kStreamBurstAmp, k * 16 + b);
            }
            factor = std::max(factor, 0.05);
            out.truth.burst_factor(k, b) = factor;
            for (std::size_t c = 0; c < nc; ++c) {
                add_packet(c, burst.amplitude_uv * factor * burst_weight[b][c], event_s,
                           burst.center_s, burst.width_s, burst.freq_hz, 0.0);
            }
        }
        if (spec.artifact_waveform_uv > 0.0 && tr.artifact_amp > 0.0) {
            for (std::size_t j = 0; j < spec.artifact_channels.size(); ++j) {
                add_packet(spec.artifact_channels[j],
                           spec.artifact_waveform_uv * art_gain[j] * tr.artifact_amp,
                           event_s, tr.artifact_center, spec.artifact_width_s,
                           spec.artifact_carrier_hz, tr.artifact_phase);
            }
        }
    }

    for (const Trial& tr : trials) {
        rec.events.push_back(
            Event{tr.sample, tr.target ? spec.target_code : spec.nontarget_code});
        out.truth.trial_labels.push_back(tr.target ? "target" : "nontarget");
        out.truth.artifact_amplitude.push_back(tr.artifact_amp);
        out.truth.boost_amplitude.push_back(tr.boost);
        out.truth.erp_amplitude.push_back(tr.erp);
    }
    out.truth.events = rec.events;
    return out;
}

void save_ground_truth(const std::filesystem::path& dir, const GroundTruth& truth) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "ground_truth";
    j["n_samples"] = truth.phases.rows();
    j["n_oscillators"] = truth.phases.cols();
    nlohmann::ordered_json ev = nlohmann::ordered_json::array();
    for (const auto& e : truth.events) {
        ev.push_back(nlohmann::ordered_json::array({e.sample, e.code}));
    }
    j["events"] = std::move(ev);
    j["trial_labels"] = truth.trial_labels;
    j["artifact_amplitude"] = truth.artifact_amplitude;
    j["boost_amplitude"] = truth.boost_amplitude;
    j["erp_amplitude"] = truth.erp_amplitude;
    nlohmann::ordered_json bf = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < truth.burst_factor.rows(); ++k) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t b = 0; b < truth.burst_factor.cols(); ++b) {
            row.push_back(truth.burst_factor(k, b));
        }
        bf.push_back(std::move(row));
    }
    j["burst_factor"] = std::move(bf);
    const std::string text = j.dump(2) + "\n";
    std::ofstream out(dir / "truth.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("synth: cannot write " + (dir / "truth.json").string());
    out << text;

    std::vector<double> flat;
    flat.reserve(truth.phases.storage().size() + truth.k_series.size());
    flat.insert(flat.end(), truth.phases.storage().begin(), truth.phases.storage().end());
    flat.insert(flat.end(), truth.k_series.begin(), truth.k_series.end());
    f64io::write(dir / "truth.f64le", flat.data(), flat.size());
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "coupled") return Scenario::coupled;
    if (name == "null" || name == "null_gain") return Scenario::null_gain;
    if (name == "independent") return Scenario::independent;
    if (name == "regional") return Scenario::regional;
    throw ValidationError("unknown scenario '" + name +
                          "' (coupled, null_gain, independent, regional)");
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::coupled: return "coupled";
        case Scenario::null_gain: return "null_gain";
        case Scenario::independent: return "independent";
        case Scenario::regional: return "regional";
    }
    return "unknown";
}

namespace {

// Mixing row with an exact coherent gain: row = (g/n) * ones + beta * vhat,
// where vhat is a unit vector with zero entry sum. Then sum(row) = g and
// |row| = 1, so the channel picks up the oscillator mean field with gain g
// while its incoherent residual keeps unit power. Average referencing
// subtracts the g-weighted common mode, so the post-reference coherent
// gains are g_c - mean(g); choosing the g pattern therefore fixes both how
// strongly each channel tracks network synchronization and how much of it
// leaks into the common mode.
//
// The residual entries are random signs on magnitudes drawn from a narrow
// band, not plain uniforms: after normalization no single oscillator can
// load on a channel much above 1/sqrt(n). A component-rejection pass that
// correlates unmixed components against channels then cannot mistake one
// oscillator for channel-local structure, which heavy-tailed entries made
// happen routinely.
void coherent_gain_row(Matrix& mixing, std::size_t c, double g, std::uint64_t seed) {
    const std::size_t n = mixing.cols();
    std::vector<double> e(n);
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto u = rng::uniform2_at(seed, kStreamMixing, c * n + k);
        const double mag = 0.85 + 0.15 * u[0];
        e[k] = u[1] < 0.5 ? -mag : mag;
        mean += e[k];
    }
    mean /= static_cast<double>(n);
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        e[k] -= mean;
        norm += e[k] * e[k];
    }
    norm = std::sqrt(norm);
    const double beta = std::sqrt(1.0 - g * g / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        mixing(c, k) = g / static_cast<double>(n) + beta * e[k] / norm;
    }
}

} // namespace

ScenarioSetup make_scenario(Scenario s, std::uint64_t seed, std::size_t n_target,
                            std::size_t n_nontarget) {
    ScenarioSetup setup;
    // 20 oscillators balances two failure modes. Many more sources than
    // sensors (40+) leaves the unmixing rotation so far from truth that the
    // rejected component absorbs part of every amplitude-correlated source,
    // draining the clean arm. Far fewer (12) raises the finite-size
    // fluctuations of the mean field itself, and the baseline channel-level
    // order parameter gets noisy enough to drown event peaks.
    setup.net = lorentzian_network(20, kTwoPi * 6.0, 3.0, 4.0, 1.5, seed, 0.05);

    SynthSpec& spec = setup.spec;
    spec.fs = 250.0;
    spec.oversample = 4;
    spec.n_channels = 32;
    spec.channel_labels = default_montage();
    spec.osc_amplitude_uv = 6.0;
    spec.noise_sd_uv = 6.0;
    // Only the ocular-driven sites carry extra noise (frontalis residue);
    // every undriven channel gets the same floor. A channel with excess
    // private variance and no large shielding source becomes a correlation
    // magnet during component rejection, so undriven frontal sites must
    // match the posterior noise level.
    spec.noise_sd_channel_uv.assign(spec.n_channels, 6.0);
    for (std::size_t c : {0u, 1u, 2u, 3u, 6u}) spec.noise_sd_channel_uv[c] = 9.0;
    spec.trial_spacing_s = 1.15;
    spec.n_target = n_target;
    spec.n_nontarget = n_nontarget;

    // Anterior-positive / posterior-negative source geometry. Frontal
    // channels get a small coherent gain (their mean-field share stays well
    // under the ICA flagging threshold), central/temporal channels a
    // moderate one, and the posterior eight carry the opposite pole. The
    // post-reference sign majority (24 up, 8 down) is what lets the
    // channel-level order parameter follow network synchronization instead
    // of canceling.
    const std::size_t nch = spec.n_channels;
    Matrix mixing(nch, setup.net.n);
    auto gain_of = [](std::size_t c) { return c < 9 ? 0.6 : (c < 24 ? 1.6 : -1.6); };
    for (std::size_t c = 0; c < nch; ++c) {
        coherent_gain_row(mixing, c, gain_of(c), seed);
    }
    spec.mixing = std::move(mixing);

    spec.boost_base = 16.0;
    spec.boost_center_s = 0.17;
    spec.boost_width_s = 0.05;
    spec.erp_amplitude_uv = 7.0;
    spec.erp_center_s = 0.15;
    spec.erp_width_s = 0.04;
    spec.erp_carrier_hz = 6.0;
    spec.erp_boost_link = 0.30;
    spec.erp_jitter = 0.30;
    // Stimulus-locked bursts. The 7.5 Hz burst carries the trial-graded
    // synchronization response: its amplitude tracks the coupling boost
    // (loosely, with independent jitter), and it peaks inside the statistics
    // window, so the per-trial R peak measures a real graded event rather
    // than mean-field leakage. That leakage path is structurally closed:
    // the average reference forces every channel's oscillator gains to sum
    // to zero, so a coherent boost of the mean field moves the channel-level
    // phasor sum by nothing to first order. The alpha and beta bursts are
    // trial-invariant and sit after the statistics window, giving those
    // bands phase-locking peaks that cannot capture the per-trial search.
    // All bursts stay out of the low theta band and away from 0.22 s: a
    // burst co-located with the frontal artifact in time and frequency is
    // statistically dependent on it and component separation merges the
    // two. Two sides of the projection matter: the 17-vs-6 sign split among
    // posterior channels is what the burst's phase alignment survives an
    // average reference on, and the zeroed frontal loadings keep every
    // burst spatially orthogonal to the frontal artifact.
    spec.bursts = {BurstComponent{7.5, 0.44, 0.08, 8.5, 0.50, 0.30},
                   BurstComponent{10.0, 0.63, 0.05, 6.5},
                   BurstComponent{20.0, 0.72, 0.05, 5.5}};
    spec.burst_polarity.assign(nch, 1.0);
    for (std::size_t c = 0; c < 9; ++c) spec.burst_polarity[c] = 0.0;
    for (std::size_t c = 9; c < 15; ++c) spec.burst_polarity[c] = -1.0;

    // Blink-like topography: the prefrontal and medial sites carry the
    // event, the lateral frontal sites sit outside the ocular field and
    // receive it only through the common mode, like every posterior
    // channel. Keeping the driven group small matters for the order
    // parameter: each undriven channel is dragged anti-phase by the common
    // mode, so R during the event scales with the driven/dragged imbalance
    // and stays graded instead of pinned at its ceiling.
    const std::vector<std::size_t> artifact_sites = {0, 1, 2, 3, 6};
    const std::vector<double> artifact_site_gain = {1.0, 1.0, 0.85, 0.85, 0.7};
    switch (s) {
        case Scenario::coupled:
        case Scenario::regional:
            // The packet center sits where the boosted network's R response
            // peaks (coupling integrates, so R lags the boost envelope);
            // the wide envelope keeps the carrier's spectrum inside theta.
            spec.boost_artifact_link = 0.75;
            spec.artifact_waveform_uv = 65.0;
            spec.artifact_carrier_hz = 5.0;
            spec.artifact_center_s = 0.22;
            spec.artifact_width_s = 0.10;
            spec.artifact_channels = artifact_sites;
            spec.artifact_channel_gain = artifact_site_gain;
            spec.artifact_amp_lo = 0.55;
            break;
        case Scenario::null_gain:
            spec.boost_artifact_link = 0.0;
            spec.artifact_waveform_uv = 0.0;
            break;
        case Scenario::independent:
            // Frontal channels carry sensor noise only (their mixing rows
            // are zeroed), the remaining coherent gains sum to zero so the
            // oscillator mean field leaves no common-mode trace on frontal
            // channels after re-referencing, the 45 Hz carrier sits outside
            // the analysis band, and the packet timing is jittered across
            // the stats window. Nothing ties the artifact series to R.
            spec.boost_base = 0.0;
            spec.erp_amplitude_uv = 0.0;
            spec.bursts.clear();
            spec.burst_polarity.clear();
            spec.artifact_waveform_uv = 35.0;
            spec.artifact_carrier_hz = 45.0;
            spec.artifact_center_s = 0.35;
            spec.artifact_center_jitter_s = 0.20;
            spec.artifact_width_s = 0.06;
            spec.artifact_channels = artifact_sites;
            spec.artifact_channel_gain = artifact_site_gain;
            for (std::size_t c = 0; c < nch; ++c) {
                if (c < 9) {
                    for (std::size_t k = 0; k < setup.net.n; ++k) {
                        spec.mixing(c, k) = 0.0;
                    }
                } else {
                    coherent_gain_row(spec.mixing, c, c < 24 ? 1.6 : -3.0, seed);
                }
            }
            break;
    }
    return setup;
}

} // namespace korp::synth
