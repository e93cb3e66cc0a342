#include "korp/pipeline.hpp"

#include "korp/container.hpp"
#include "korp/dsp.hpp"
#include "korp/edf.hpp"
#include "korp/errors.hpp"
#include "korp/log.hpp"
#include "korp/preprocess.hpp"
#include "korp/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

namespace korp::pipeline {

namespace {

using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Stage wrapper: annotates propagated errors with the stage name while
/// keeping the validation/numerical split that drives CLI exit codes.
template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(name) + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(name) + ": " + e.what());
    }
}

json jnum(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double dnum(const json& j) {
    if (j.is_null()) return kNaN;
    return j.get<double>();
}

json jvec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

std::vector<double> dvec(const json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) out.push_back(dnum(x));
    return out;
}

json corr_to_json(const stats::CorrResult& c) {
    return json{{"r", jnum(c.r)}, {"n", c.n}, {"p", jnum(c.p)}};
}

stats::CorrResult corr_from_json(const json& j) {
    stats::CorrResult c;
    c.r = dnum(j.at("r"));
    c.n = j.at("n").get<std::size_t>();
    c.p = dnum(j.at("p"));
    return c;
}

json ttest_to_json(const stats::TTestResult& t, const char* mean_key,
                   const char* sd_key) {
    return json{{mean_key, jnum(t.mean)},
                {sd_key, jnum(t.sd)},
                {"t", jnum(t.t)},
                {"p", jnum(t.p)},
                {"n", t.n}};
}

stats::TTestResult ttest_from_json(const json& j, const char* mean_key,
                                   const char* sd_key) {
    stats::TTestResult t;
    t.mean = dnum(j.at(mean_key));
    t.sd = dnum(j.at(sd_key));
    t.t = dnum(j.at("t"));
    t.p = dnum(j.at("p"));
    t.n = j.at("n").get<std::size_t>();
    return t;
}

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

stats::TTestResult safe_ttest(const std::vector<double>& values, const char* what) {
    try {
        return stats::one_sample_ttest(values, 0.0);
    } catch (const Error& e) {
        log::warn("battery: ", what, " t-test degenerate (", e.what(), ")");
        stats::TTestResult t;
        t.t = kNaN;
        t.p = kNaN;
        t.mean = values.size() ? stats::mean(values) : kNaN;
        t.sd = kNaN;
        t.n = values.size();
        return t;
    }
}

} // namespace

std::string arm_name(Arm a) { return a == Arm::clean ? "clean" : "raw"; }

std::vector<metrics::BandDef> default_cascade_bands() {
    return {{"Theta", 4.0, 8.0}, {"Alpha", 8.0, 13.0}, {"Beta", 13.0, 30.0}};
}

// ---------------------------------------------------------------------------
// Configuration

std::string config_to_json(const PipelineConfig& cfg) {
    json j;
    j["input"] = cfg.input;
    j["events"] = cfg.events;
    j["out_dir"] = cfg.out_dir;
    j["band_low_hz"] = cfg.band_low_hz;
    j["band_high_hz"] = cfg.band_high_hz;
    j["epoch_tmin_s"] = cfg.epoch_tmin_s;
    j["epoch_tmax_s"] = cfg.epoch_tmax_s;
    j["stats_lo_s"] = cfg.stats_lo_s;
    j["stats_hi_s"] = cfg.stats_hi_s;
    j["itc_n_freqs"] = cfg.itc_n_freqs;
    j["itc_low_hz"] = cfg.itc_low_hz;
    j["itc_high_hz"] = cfg.itc_high_hz;
    json bands = json::array();
    const auto resolved = cfg.cascade_bands.empty() ? default_cascade_bands()
                                                    : cfg.cascade_bands;
    for (const auto& b : resolved) {
        bands.push_back(json{{"name", b.name}, {"low_hz", b.low_hz}, {"high_hz", b.high_hz}});
    }
    j["cascade_bands"] = std::move(bands);
    j["ica"] = cfg.ica;
    j["ica_threshold"] = cfg.ica_threshold;
    j["ica_components"] = cfg.ica_components;
    j["seed"] = cfg.seed;
    j["artifact_window_s"] = cfg.artifact_window_s;
    j["xcorr_max_lag_s"] = cfg.xcorr_max_lag_s;
    j["rolling_window_s"] = cfg.rolling_window_s;
    j["dose_bins"] = cfg.dose_bins;
    j["target_code"] = cfg.target_code;
    j["nontarget_code"] = cfg.nontarget_code;
    return j.dump(2) + "\n";
}

namespace {

PipelineConfig config_from_parsed(const json& j) {
    PipelineConfig cfg;
    static const std::set<std::string> known = {
        "input",          "events",          "out_dir",        "band_low_hz",
        "band_high_hz",   "epoch_tmin_s",    "epoch_tmax_s",   "stats_lo_s",
        "stats_hi_s",     "itc_n_freqs",     "itc_low_hz",     "itc_high_hz",
        "cascade_bands",  "ica",             "ica_threshold",  "ica_components",
        "seed",           "artifact_window_s", "xcorr_max_lag_s",
        "rolling_window_s", "dose_bins",     "target_code",    "nontarget_code"};
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) log::warn("config: ignoring unknown key '", key, "'");
        (void)value;
    }
    try {
        if (j.contains("input")) cfg.input = j["input"].get<std::string>();
        if (j.contains("events")) cfg.events = j["events"].get<std::string>();
        if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("band_low_hz")) cfg.band_low_hz = j["band_low_hz"].get<double>();
        if (j.contains("band_high_hz")) cfg.band_high_hz = j["band_high_hz"].get<double>();
        if (j.contains("epoch_tmin_s")) cfg.epoch_tmin_s = j["epoch_tmin_s"].get<double>();
        if (j.contains("epoch_tmax_s")) cfg.epoch_tmax_s = j["epoch_tmax_s"].get<double>();
        if (j.contains("stats_lo_s")) cfg.stats_lo_s = j["stats_lo_s"].get<double>();
        if (j.contains("stats_hi_s")) cfg.stats_hi_s = j["stats_hi_s"].get<double>();
        if (j.contains("itc_n_freqs")) cfg.itc_n_freqs = j["itc_n_freqs"].get<std::size_t>();
        if (j.contains("itc_low_hz")) cfg.itc_low_hz = j["itc_low_hz"].get<double>();
        if (j.contains("itc_high_hz")) cfg.itc_high_hz = j["itc_high_hz"].get<double>();
        if (j.contains("cascade_bands")) {
            cfg.cascade_bands.clear();
            for (const auto& b : j["cascade_bands"]) {
                metrics::BandDef def;
                def.name = b.at("name").get<std::string>();
                def.low_hz = b.at("low_hz").get<double>();
                def.high_hz = b.at("high_hz").get<double>();
                cfg.cascade_bands.push_back(std::move(def));
            }
        }
        if (j.contains("ica")) cfg.ica = j["ica"].get<bool>();
        if (j.contains("ica_threshold")) cfg.ica_threshold = j["ica_threshold"].get<double>();
        if (j.contains("ica_components"))
            cfg.ica_components = j["ica_components"].get<std::size_t>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("artifact_window_s"))
            cfg.artifact_window_s = j["artifact_window_s"].get<double>();
        if (j.contains("xcorr_max_lag_s"))
            cfg.xcorr_max_lag_s = j["xcorr_max_lag_s"].get<double>();
        if (j.contains("rolling_window_s"))
            cfg.rolling_window_s = j["rolling_window_s"].get<double>();
        if (j.contains("dose_bins")) cfg.dose_bins = j["dose_bins"].get<std::size_t>();
        if (j.contains("target_code")) cfg.target_code = j["target_code"].get<int>();
        if (j.contains("nontarget_code"))
            cfg.nontarget_code = j["nontarget_code"].get<int>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return cfg;
}

} // namespace

PipelineConfig config_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ValidationError("config: not valid JSON");
    return config_from_parsed(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("config: cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

// ---------------------------------------------------------------------------
// Input loading

Recording load_input(const std::string& input, const std::string& events_csv) {
    if (input.empty()) throw ValidationError("input: no input path given");
    const std::filesystem::path p(input);
    Recording rec;
    if (std::filesystem::is_directory(p)) {
        if (container::peek_kind(p) != container::Kind::recording) {
            throw ValidationError(
                "input: container holds epochs; the analysis needs a continuous "
                "recording");
        }
        rec = container::load_recording(p);
    } else {
        rec = edf::parse_edf(p);
    }
    if (!events_csv.empty()) {
        rec.events = preprocess::load_events_csv(events_csv);
        log::info("input: events replaced from ", events_csv, " (", rec.events.size(),
                  " events)");
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Single arm

namespace {

std::vector<double> trial_channel_mean(const EpochSet& epochs, std::size_t trial) {
    const std::size_t nc = epochs.n_channels();
    const std::size_t nt = epochs.n_times();
    std::vector<double> out(nt, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto s = epochs.data.series(trial, c);
        for (std::size_t k = 0; k < nt; ++k) out[k] += s[k];
    }
    const double inv = 1.0 / static_cast<double>(nc);
    for (double& v : out) v *= inv;
    return out;
}

void validate_config(const PipelineConfig& cfg, double fs) {
    if (!(cfg.band_low_hz > 0.0) || !(cfg.band_high_hz > cfg.band_low_hz) ||
        cfg.band_high_hz >= fs / 2.0) {
        throw InvalidBand("config: band must satisfy 0 < low < high < fs/2");
    }
    if (!(cfg.epoch_tmax_s > cfg.epoch_tmin_s)) {
        throw ValidationError("config: epoch window is empty");
    }
    if (!(cfg.stats_hi_s > cfg.stats_lo_s)) {
        throw ValidationError("config: stats window is empty");
    }
    if (cfg.itc_n_freqs < 2 || !(cfg.itc_low_hz > 0.0) ||
        !(cfg.itc_high_hz > cfg.itc_low_hz)) {
        throw ValidationError("config: ITC frequency grid is invalid");
    }
    if (cfg.ica_threshold <= 0.0) {
        throw ValidationError("config: ica_threshold must be positive");
    }
    if (!(cfg.artifact_window_s > 0.0)) {
        throw ValidationError("config: artifact_window_s must be positive");
    }
}

} // namespace

ArmOutputs run_single_pipeline(const PipelineConfig& cfg, Arm arm, const Recording& rec) {
    validate_config(cfg, rec.fs);
    const double fs = rec.fs;
    const std::map<int, std::string> code_labels = {{cfg.target_code, "target"},
                                                    {cfg.nontarget_code, "nontarget"}};
    const std::set<int> codes = {cfg.target_code, cfg.nontarget_code};

    ArmOutputs out;
    out.metrics.arm = arm_name(arm);

    const Recording reref =
        stage("re-reference", [&] { return preprocess::average_reference(rec); });

    out.broadband_epochs = stage("broadband epoching", [&] {
        auto r = preprocess::epoch(reref, codes, cfg.epoch_tmin_s, cfg.epoch_tmax_s,
                                   code_labels);
        return std::move(r.epochs);
    });

    const dsp::FirFilter band = stage("band-pass filter design", [&] {
        return dsp::design_fir_bandpass(cfg.band_low_hz, cfg.band_high_hz, fs, 0);
    });

    Recording filtered = stage("band-pass filter", [&] {
        Recording g = reref;
        for (std::size_t c = 0; c < g.n_channels(); ++c) {
            const auto row = g.data.row(c);
            const std::vector<double> y = dsp::filtfilt(row, band);
            std::copy(y.begin(), y.end(), row.begin());
        }
        return g;
    });

    out.metrics.ica.enabled = (arm == Arm::clean) && cfg.ica;
    if (out.metrics.ica.enabled) {
        const artifacts::IcaModel model = stage("ica fit", [&] {
            return artifacts::fastica(filtered.data, cfg.ica_components, cfg.seed);
        });
        const auto groups = artifacts::regional_groups(filtered.channel_labels);
        std::set<std::size_t> flagged;
        if (groups.frontal.empty()) {
            log::warn("ica: no frontal channels in the montage; nothing flagged");
        } else {
            flagged = stage("component flagging", [&] {
                return artifacts::identify_artifact_components(
                    model, filtered.data, groups.frontal, cfg.ica_threshold);
            });
        }
        filtered.data = stage("component removal", [&] {
            return artifacts::remove_components(model, filtered.data, flagged);
        });
        out.metrics.ica.converged = model.converged;
        out.metrics.ica.n_components = model.unmixing.rows();
        out.metrics.ica.n_iterations = model.n_iter;
        out.metrics.ica.removed.assign(flagged.begin(), flagged.end());
        log::info("ica: removed ", flagged.size(), " of ", model.unmixing.rows(),
                  " components");
    }

    const Recording phase_rec = stage("analytic phase", [&] {
        Recording ph = filtered; // copies labels, fs, events
        for (std::size_t c = 0; c < ph.n_channels(); ++c) {
            const auto row = ph.data.row(c);
            const auto analytic = dsp::hilbert_analytic(row, fs);
            const std::vector<double> phases = dsp::instantaneous_phase(analytic);
            std::copy(phases.begin(), phases.end(), row.begin());
        }
        return ph;
    });

    // Voltage stream. The average reference pins the cross-channel mean of
    // every sample to zero, so an all-channel voltage average taken after it
    // is identically zero; the voltage series are therefore read at the
    // recording's original reference by adding back the band-passed common
    // mode that re-referencing removed. Component removal has already acted
    // on the referenced part, so the clean arm's voltage stream is cleaned
    // as well.
    const Recording volt_rec = stage("voltage stream", [&] {
        const std::size_t nc = rec.n_channels();
        const std::size_t ns = rec.n_samples();
        std::vector<double> common(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            double sum = 0.0, comp = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                const double x = rec.data(c, s);
                const double t = sum + x;
                if (std::abs(sum) >= std::abs(x)) {
                    comp += (sum - t) + x;
                } else {
                    comp += (x - t) + sum;
                }
                sum = t;
            }
            common[s] = (sum + comp) / static_cast<double>(nc);
        }
        const std::vector<double> fc = dsp::filtfilt(common, band);
        Recording v = filtered;
        for (std::size_t c = 0; c < nc; ++c) {
            const auto row = v.data.row(c);
            for (std::size_t s = 0; s < ns; ++s) row[s] += fc[s];
        }
        return v;
    });

    EpochSet volt_epochs, ref_epochs, phase_epochs;
    stage("epoching", [&] {
        auto v = preprocess::epoch(volt_rec, codes, cfg.epoch_tmin_s, cfg.epoch_tmax_s,
                                   code_labels);
        auto rf = preprocess::epoch(filtered, codes, cfg.epoch_tmin_s, cfg.epoch_tmax_s,
                                    code_labels);
        auto p = preprocess::epoch(phase_rec, codes, cfg.epoch_tmin_s, cfg.epoch_tmax_s,
                                   code_labels);
        volt_epochs = std::move(v.epochs);
        ref_epochs = std::move(rf.epochs);
        phase_epochs = std::move(p.epochs);
        return 0;
    });

    for (std::size_t k = 0; k < volt_epochs.n_trials(); ++k) {
        if (volt_epochs.labels[k] == "target") {
            out.target_trials.push_back(k);
        } else {
            out.nontarget_trials.push_back(k);
        }
    }
    out.metrics.n_target = out.target_trials.size();
    out.metrics.n_nontarget = out.nontarget_trials.size();

    out.sync = stage("synchronization", [&] {
        metrics::PhaseTensor pt;
        pt.phases = phase_epochs.data;
        pt.fs = fs;
        pt.tmin = volt_epochs.tmin;
        return metrics::kuramoto_R(pt);
    });

    out.erp = stage("erp", [&] { return metrics::erp(volt_epochs); });

    out.itc = stage("itc", [&] {
        const auto freqs = dsp::linspace(cfg.itc_low_hz, cfg.itc_high_hz, cfg.itc_n_freqs);
        return metrics::itc(ref_epochs, freqs);
    });

    out.cascade = stage("band cascade", [&] {
        const auto bands = cfg.cascade_bands.empty() ? default_cascade_bands()
                                                     : cfg.cascade_bands;
        return metrics::band_sync_cascade(ref_epochs, bands,
                                          std::max(0.0, cfg.epoch_tmin_s),
                                          cfg.epoch_tmax_s);
    });
    for (const auto& cb : out.cascade) {
        out.metrics.band_peaks.push_back(
            BandPeak{cb.band.name, cb.n_taps, cb.peak.latency_s, cb.peak.value});
        out.series.cascade_grand_r.push_back(cb.sync.grand);
    }

    stage("statistics", [&] {
        const double tmin = volt_epochs.tmin;

        out.metrics.global_r = stats::pearson(out.sync.grand, out.erp.values);

        std::vector<double> target_peak_r, nontarget_peak_r;
        for (std::size_t k : out.target_trials) {
            const auto pr = stats::peak_in_window(out.sync.per_trial.row(k), fs, tmin,
                                                  cfg.stats_lo_s, cfg.stats_hi_s);
            target_peak_r.push_back(pr.value);
            const std::vector<double> tv = trial_channel_mean(volt_epochs, k);
            const auto pe = stats::peak_in_window(tv, fs, tmin, cfg.stats_lo_s,
                                                  cfg.stats_hi_s, stats::PeakMode::absmax);
            out.trial_peak_erp_signed.push_back(pe.value);
            out.series.trial_peak_erp.push_back(std::abs(pe.value));
        }
        for (std::size_t k : out.nontarget_trials) {
            const auto pr = stats::peak_in_window(out.sync.per_trial.row(k), fs, tmin,
                                                  cfg.stats_lo_s, cfg.stats_hi_s);
            nontarget_peak_r.push_back(pr.value);
        }
        out.series.trial_peak_r = target_peak_r;

        out.metrics.trial_r = stats::pearson(target_peak_r, out.series.trial_peak_erp);

        if (!target_peak_r.empty() && !nontarget_peak_r.empty()) {
            out.metrics.delta_r_target_nontarget =
                stats::mean(target_peak_r) - stats::mean(nontarget_peak_r);
        } else {
            out.metrics.delta_r_target_nontarget = kNaN;
            log::warn("statistics: a label group is empty; target-vs-nontarget "
                      "difference undefined");
        }

        const auto max_lag =
            static_cast<std::size_t>(std::llround(cfg.xcorr_max_lag_s * fs));
        out.metrics.lag =
            stats::cross_correlation_lag(out.erp.values, out.sync.grand, max_lag, fs);

        // Frequency-mean ITC profile over edge-valid cells only.
        std::vector<double> itc_profile, r_kept;
        for (std::size_t t = 0; t < out.itc.values.cols(); ++t) {
            double acc = 0.0;
            std::size_t cnt = 0;
            for (std::size_t fi = 0; fi < out.itc.values.rows(); ++fi) {
                if (out.itc.valid(fi, t) != 0.0) {
                    acc += out.itc.values(fi, t);
                    ++cnt;
                }
            }
            if (cnt > 0) {
                itc_profile.push_back(acc / static_cast<double>(cnt));
                r_kept.push_back(out.sync.grand[t]);
            }
        }
        if (itc_profile.size() >= 3) {
            out.metrics.itc_r = stats::pearson(itc_profile, r_kept);
        } else {
            log::warn("statistics: fewer than 3 edge-valid ITC samples; ITC-vs-R "
                      "correlation undefined");
            out.metrics.itc_r = stats::CorrResult{kNaN, itc_profile.size(), kNaN};
        }

        const auto rolling_w =
            static_cast<std::size_t>(std::llround(cfg.rolling_window_s * fs));
        out.series.rolling_r =
            stats::rolling_correlation(out.sync.grand, out.erp.values, rolling_w);
        return 0;
    });

    out.series.grand_r = out.sync.grand;
    out.series.erp = out.erp.values;
    return out;
}

// ---------------------------------------------------------------------------
// Mediation battery

BatteryReport causal_battery(const PipelineConfig& cfg, const ArmOutputs& raw_arm) {
    BatteryReport battery;
    const EpochSet& broadband = raw_arm.broadband_epochs;
    const double fs = broadband.fs;
    const double tmin = broadband.tmin;
    const auto& targets = raw_arm.target_trials;
    battery.n_trials = targets.size();
    if (targets.empty()) throw TooFewTrials("battery: no target trials");

    const auto window =
        static_cast<std::size_t>(std::llround(cfg.artifact_window_s * fs));
    const auto groups = artifacts::regional_groups(broadband.channel_labels);

    auto within_trial_rs = [&](const artifacts::ArtifactSeries& series) {
        std::vector<double> rs;
        rs.reserve(targets.size());
        std::size_t skipped = 0;
        for (std::size_t k : targets) {
            try {
                rs.push_back(stats::pearson(series.per_trial.row(k),
                                            raw_arm.sync.per_trial.row(k))
                                 .r);
            } catch (const NumericalError&) {
                ++skipped;
            }
        }
        if (skipped > 0) {
            log::warn("battery: ", skipped, " degenerate trials skipped in a "
                      "within-trial coupling pass");
        }
        return rs;
    };

    // (a) Regional specificity, plus the frontal series reused by (b)/(d)/(e).
    artifacts::ArtifactSeries frontal_series;
    bool have_frontal = false;
    const std::vector<std::pair<std::string, const std::vector<std::size_t>*>> regions =
        {{"frontal", &groups.frontal},
         {"temporal", &groups.temporal},
         {"occipital", &groups.occipital}};
    for (const auto& [name, channels] : regions) {
        if (channels->empty()) {
            log::warn("battery: no ", name, " channels; region skipped");
            continue;
        }
        auto series = artifacts::artifact_magnitude(broadband, *channels, window);
        RegionalCoupling rc;
        rc.region = name;
        rc.n_channels = channels->size();
        rc.coupling = safe_ttest(within_trial_rs(series), name.c_str());
        battery.regional.push_back(std::move(rc));
        if (name == "frontal") {
            frontal_series = std::move(series);
            have_frontal = true;
        }
    }

    if (!have_frontal) {
        log::warn("battery: no frontal channels; precedence, within-trial, and "
                  "dose-response tests undefined");
        battery.precedence = stats::TTestResult{kNaN, kNaN, kNaN, kNaN, 0};
        battery.within_trial = battery.precedence;
    } else {
        // (b) Temporal precedence: R peak time minus artifact peak time.
        std::vector<double> lags;
        lags.reserve(targets.size());
        for (std::size_t k : targets) {
            const auto pr = stats::peak_in_window(raw_arm.sync.per_trial.row(k), fs,
                                                  tmin, cfg.stats_lo_s, cfg.stats_hi_s);
            const auto pa = stats::peak_in_window(frontal_series.per_trial.row(k), fs,
                                                  tmin, cfg.stats_lo_s, cfg.stats_hi_s);
            lags.push_back(pr.latency_s - pa.latency_s);
        }
        battery.precedence = safe_ttest(lags, "temporal precedence");

        // (d) Within-trial coupling over the full epoch.
        battery.within_trial =
            safe_ttest(within_trial_rs(frontal_series), "within-trial coupling");
    }

    // (c) Confound control: baseline = pre-stimulus RMS, channel-averaged,
    // from the unfiltered epochs.
    std::size_t pre_n = 0;
    while (pre_n < broadband.n_times() &&
           tmin + static_cast<double>(pre_n) / fs < 0.0) {
        ++pre_n;
    }
    if (pre_n == 0) {
        log::warn("battery: epoch window has no pre-stimulus samples; confound "
                  "control undefined");
        battery.confound_simple = stats::CorrResult{kNaN, 0, kNaN};
        battery.confound_partial = battery.confound_simple;
    } else {
        std::vector<double> baseline;
        baseline.reserve(targets.size());
        for (std::size_t k : targets) {
            double acc = 0.0;
            for (std::size_t c = 0; c < broadband.n_channels(); ++c) {
                const auto s = broadband.data.series(k, c);
                double ss = 0.0;
                for (std::size_t i = 0; i < pre_n; ++i) ss += s[i] * s[i];
                acc += std::sqrt(ss / static_cast<double>(pre_n));
            }
            baseline.push_back(acc / static_cast<double>(broadband.n_channels()));
        }
        try {
            battery.confound_simple =
                stats::pearson(raw_arm.series.trial_peak_r, raw_arm.series.trial_peak_erp);
            battery.confound_partial = stats::partial_correlation(
                raw_arm.series.trial_peak_r, raw_arm.series.trial_peak_erp, baseline);
        } catch (const NumericalError& e) {
            log::warn("battery: confound control degenerate (", e.what(), ")");
            battery.confound_simple = stats::CorrResult{kNaN, targets.size(), kNaN};
            battery.confound_partial = battery.confound_simple;
        }
    }

    // (e) Dose-response bins over per-trial peak artifact amplitude.
    if (have_frontal) {
        std::vector<artifacts::TrialMetrics> tm;
        tm.reserve(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const std::size_t k = targets[i];
            artifacts::TrialMetrics m;
            m.artifact = stats::peak_in_window(frontal_series.per_trial.row(k), fs,
                                               tmin, cfg.stats_lo_s, cfg.stats_hi_s)
                             .value;
            m.r = raw_arm.series.trial_peak_r[i];
            m.erp = raw_arm.trial_peak_erp_signed[i];
            tm.push_back(m);
        }
        battery.dose = artifacts::dose_response_bins(tm, cfg.dose_bins);
    }

    return battery;
}

// ---------------------------------------------------------------------------
// Dual run

ComparisonReport run_dual_pipeline(const PipelineConfig& cfg, const Recording& rec) {
    ComparisonReport report;
    report.config = cfg;
    report.config.cascade_bands =
        cfg.cascade_bands.empty() ? default_cascade_bands() : cfg.cascade_bands;

    ArmOutputs clean = run_single_pipeline(cfg, Arm::clean, rec);
    ArmOutputs raw = run_single_pipeline(cfg, Arm::raw, rec);

    report.battery = causal_battery(cfg, raw);

    const std::size_t nt = raw.sync.grand.size();
    report.time_s.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        report.time_s[k] = raw.sync.tmin + static_cast<double>(k) / raw.sync.fs;
    }
    report.clean = std::move(clean.metrics);
    report.raw = std::move(raw.metrics);
    report.clean_series = std::move(clean.series);
    report.raw_series = std::move(raw.series);
    return report;
}

ComparisonReport run_dual_pipeline(const PipelineConfig& cfg) {
    const Recording rec =
        stage("input", [&] { return load_input(cfg.input, cfg.events); });
    return run_dual_pipeline(cfg, rec);
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

json arm_to_json(const ArmMetrics& m) {
    json j;
    j["arm"] = m.arm;
    j["global_r"] = corr_to_json(m.global_r);
    j["trial_r"] = corr_to_json(m.trial_r);
    j["delta_r_target_nontarget"] = jnum(m.delta_r_target_nontarget);
    j["n_target"] = m.n_target;
    j["n_nontarget"] = m.n_nontarget;
    j["lag"] = json{{"samples", m.lag.lag_samples},
                    {"seconds", jnum(m.lag.lag_seconds)},
                    {"peak_corr", jnum(m.lag.peak_corr)}};
    j["itc_r"] = corr_to_json(m.itc_r);
    json peaks = json::array();
    for (const auto& b : m.band_peaks) {
        peaks.push_back(json{{"name", b.name},
                             {"n_taps", b.n_taps},
                             {"latency_s", jnum(b.latency_s)},
                             {"value", jnum(b.value)}});
    }
    j["band_peaks"] = std::move(peaks);
    j["ica"] = json{{"enabled", m.ica.enabled},
                    {"converged", m.ica.converged},
                    {"n_components", m.ica.n_components},
                    {"n_iterations", m.ica.n_iterations},
                    {"removed", m.ica.removed}};
    return j;
}

ArmMetrics arm_from_json(const json& j) {
    ArmMetrics m;
    m.arm = j.at("arm").get<std::string>();
    m.global_r = corr_from_json(j.at("global_r"));
    m.trial_r = corr_from_json(j.at("trial_r"));
    m.delta_r_target_nontarget = dnum(j.at("delta_r_target_nontarget"));
    m.n_target = j.at("n_target").get<std::size_t>();
    m.n_nontarget = j.at("n_nontarget").get<std::size_t>();
    m.lag.lag_samples = j.at("lag").at("samples").get<std::int64_t>();
    m.lag.lag_seconds = dnum(j.at("lag").at("seconds"));
    m.lag.peak_corr = dnum(j.at("lag").at("peak_corr"));
    m.itc_r = corr_from_json(j.at("itc_r"));
    for (const auto& b : j.at("band_peaks")) {
        BandPeak p;
        p.name = b.at("name").get<std::string>();
        p.n_taps = b.at("n_taps").get<std::size_t>();
        p.latency_s = dnum(b.at("latency_s"));
        p.value = dnum(b.at("value"));
        m.band_peaks.push_back(std::move(p));
    }
    const json& ica = j.at("ica");
    m.ica.enabled = ica.at("enabled").get<bool>();
    m.ica.converged = ica.at("converged").get<bool>();
    m.ica.n_components = ica.at("n_components").get<std::size_t>();
    m.ica.n_iterations = ica.at("n_iterations").get<std::size_t>();
    m.ica.removed = ica.at("removed").get<std::vector<std::size_t>>();
    return m;
}

json series_to_json(const ArmSeries& s) {
    json j;
    j["grand_r"] = jvec(s.grand_r);
    j["erp"] = jvec(s.erp);
    j["rolling_r"] = jvec(s.rolling_r);
    j["trial_peak_r"] = jvec(s.trial_peak_r);
    j["trial_peak_erp"] = jvec(s.trial_peak_erp);
    json cc = json::array();
    for (const auto& v : s.cascade_grand_r) cc.push_back(jvec(v));
    j["cascade_grand_r"] = std::move(cc);
    return j;
}

ArmSeries series_from_json(const json& j) {
    ArmSeries s;
    s.grand_r = dvec(j.at("grand_r"));
    s.erp = dvec(j.at("erp"));
    s.rolling_r = dvec(j.at("rolling_r"));
    s.trial_peak_r = dvec(j.at("trial_peak_r"));
    s.trial_peak_erp = dvec(j.at("trial_peak_erp"));
    for (const auto& v : j.at("cascade_grand_r")) s.cascade_grand_r.push_back(dvec(v));
    return s;
}

json battery_to_json(const BatteryReport& b) {
    json j;
    j["n_trials"] = b.n_trials;
    json regional = json::array();
    for (const auto& rc : b.regional) {
        json r = ttest_to_json(rc.coupling, "mean_r", "sd_r");
        r["region"] = rc.region;
        r["n_channels"] = rc.n_channels;
        regional.push_back(std::move(r));
    }
    j["regional"] = std::move(regional);
    j["temporal_precedence"] = ttest_to_json(b.precedence, "mean_lag_s", "sd_s");
    j["confound_control"] = json{{"simple", corr_to_json(b.confound_simple)},
                                 {"partial", corr_to_json(b.confound_partial)}};
    j["within_trial"] = ttest_to_json(b.within_trial, "mean_r", "sd_r");
    json dose = json::array();
    for (const auto& bin : b.dose) {
        dose.push_back(json{{"amplitude_lo", jnum(bin.amplitude_lo)},
                            {"amplitude_hi", jnum(bin.amplitude_hi)},
                            {"n_trials", bin.n_trials},
                            {"sparse", bin.sparse},
                            {"r", jnum(bin.corr.r)},
                            {"n", bin.corr.n},
                            {"p", jnum(bin.corr.p)}});
    }
    j["dose_response"] = std::move(dose);
    return j;
}

BatteryReport battery_from_json(const json& j) {
    BatteryReport b;
    b.n_trials = j.at("n_trials").get<std::size_t>();
    for (const auto& r : j.at("regional")) {
        RegionalCoupling rc;
        rc.region = r.at("region").get<std::string>();
        rc.n_channels = r.at("n_channels").get<std::size_t>();
        rc.coupling = ttest_from_json(r, "mean_r", "sd_r");
        b.regional.push_back(std::move(rc));
    }
    b.precedence = ttest_from_json(j.at("temporal_precedence"), "mean_lag_s", "sd_s");
    b.confound_simple = corr_from_json(j.at("confound_control").at("simple"));
    b.confound_partial = corr_from_json(j.at("confound_control").at("partial"));
    b.within_trial = ttest_from_json(j.at("within_trial"), "mean_r", "sd_r");
    for (const auto& d : j.at("dose_response")) {
        artifacts::DoseResponseBin bin;
        bin.amplitude_lo = dnum(d.at("amplitude_lo"));
        bin.amplitude_hi = dnum(d.at("amplitude_hi"));
        bin.n_trials = d.at("n_trials").get<std::size_t>();
        bin.sparse = d.at("sparse").get<bool>();
        bin.corr.r = dnum(d.at("r"));
        bin.corr.n = d.at("n").get<std::size_t>();
        bin.corr.p = dnum(d.at("p"));
        b.dose.push_back(std::move(bin));
    }
    return b;
}

json pair_block(double clean, double raw) {
    json j;
    j["clean"] = jnum(clean);
    j["raw"] = jnum(raw);
    j["delta"] = jnum(raw - clean);
    j["ratio"] = jnum(clean != 0.0 ? raw / clean : kNaN);
    return j;
}

} // namespace

std::string report_to_json(const ComparisonReport& report) {
    json j;
    j["schema_version"] = report.schema_version;
    j["generated_at"] = report.generated_at;
    j["software_version"] = report.software_version;
    j["itc_reduction"] = report.itc_reduction;
    j["config"] = json::parse(config_to_json(report.config));
    j["seeds"] = json{{"analysis", report.config.seed}};
    j["arms"] = json{{"clean", arm_to_json(report.clean)},
                     {"raw", arm_to_json(report.raw)}};
    // Paired table: per metric the clean/raw values with their difference
    // and ratio (raw over clean).
    json cmp;
    cmp["global_r"] = pair_block(report.clean.global_r.r, report.raw.global_r.r);
    cmp["trial_r"] = pair_block(report.clean.trial_r.r, report.raw.trial_r.r);
    cmp["delta_r_target_nontarget"] = pair_block(
        report.clean.delta_r_target_nontarget, report.raw.delta_r_target_nontarget);
    cmp["itc_r"] = pair_block(report.clean.itc_r.r, report.raw.itc_r.r);
    cmp["lag_seconds"] =
        pair_block(report.clean.lag.lag_seconds, report.raw.lag.lag_seconds);
    j["comparison"] = std::move(cmp);
    j["battery"] = battery_to_json(report.battery);
    j["series"] = json{{"time_s", jvec(report.time_s)},
                       {"clean", series_to_json(report.clean_series)},
                       {"raw", series_to_json(report.raw_series)}};
    return j.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ValidationError("report: not valid JSON");
    ComparisonReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != kReportSchemaVersion) {
            throw VersionMismatch("report: schema_version " +
                                  std::to_string(r.schema_version) + " unsupported");
        }
        r.generated_at = j.at("generated_at").get<std::string>();
        r.software_version = j.at("software_version").get<std::string>();
        r.itc_reduction = j.at("itc_reduction").get<std::string>();
        r.config = config_from_parsed(j.at("config"));
        r.clean = arm_from_json(j.at("arms").at("clean"));
        r.raw = arm_from_json(j.at("arms").at("raw"));
        r.battery = battery_from_json(j.at("battery"));
        r.time_s = dvec(j.at("series").at("time_s"));
        r.clean_series = series_from_json(j.at("series").at("clean"));
        r.raw_series = series_from_json(j.at("series").at("raw"));
    } catch (const json::exception& e) {
        throw CorruptContainer(std::string("report: ") + e.what());
    }
    return r;
}

bool operator==(const ComparisonReport& a, const ComparisonReport& b) {
    return report_to_json(a) == report_to_json(b);
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string fixed(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("report: cannot write " + path.string());
    f << text;
}

std::vector<double> window_starts(const std::vector<double>& time_s, std::size_t n) {
    return std::vector<double>(time_s.begin(),
                               time_s.begin() + static_cast<std::ptrdiff_t>(n));
}

std::vector<double> normalized(const std::vector<double>& v) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : v) {
        if (!std::isfinite(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    std::vector<double> out(v.size(), kNaN);
    if (!(hi > lo)) return out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = (v[i] - lo) / (hi - lo);
    }
    return out;
}

} // namespace

void emit_report(const ComparisonReport& report, const std::filesystem::path& out_dir) {
    ComparisonReport stamped = report;
    if (stamped.generated_at.empty()) stamped.generated_at = now_utc();

    std::filesystem::create_directories(out_dir);
    std::filesystem::create_directories(out_dir / "figures");

    write_text(out_dir / "report.json", report_to_json(stamped));

    std::ostringstream csv;
    csv << "Metric,Clean,Raw\n";
    csv << "Global R vs ERP," << fixed(stamped.clean.global_r.r, 3) << ","
        << fixed(stamped.raw.global_r.r, 3) << "\n";
    csv << "Trial-level R vs ERP," << fixed(stamped.clean.trial_r.r, 3) << ","
        << fixed(stamped.raw.trial_r.r, 3) << "\n";
    csv << "Target vs Non-target," << fixed(stamped.clean.delta_r_target_nontarget, 4)
        << "," << fixed(stamped.raw.delta_r_target_nontarget, 4) << "\n";
    write_text(out_dir / "table1.csv", csv.str());

    const auto& t = stamped.time_s;
    svg::write_plot(
        out_dir / "figures" / "grand_r_erp.svg", "Grand synchronization and ERP",
        "time (s)", "R / normalized ERP",
        {svg::Series{"clean R", t, stamped.clean_series.grand_r, "#1f6fb2"},
         svg::Series{"raw R", t, stamped.raw_series.grand_r, "#c23b22"},
         svg::Series{"ERP (normalized)", t, normalized(stamped.raw_series.erp),
                     "#3a9e4e"}});

    std::vector<svg::Series> cascade;
    const char* colors[] = {"#1f6fb2", "#c23b22", "#3a9e4e", "#8a5bb8", "#b8860b"};
    for (std::size_t i = 0; i < stamped.raw_series.cascade_grand_r.size(); ++i) {
        const std::string name = i < stamped.raw.band_peaks.size()
                                     ? stamped.raw.band_peaks[i].name
                                     : "band " + std::to_string(i);
        cascade.push_back(svg::Series{name, t, stamped.raw_series.cascade_grand_r[i],
                                      colors[i % 5]});
    }
    svg::write_plot(out_dir / "figures" / "band_cascade.svg",
                    "Band-wise synchronization (raw arm)", "time (s)", "grand R",
                    cascade);

    const auto clean_starts = window_starts(t, stamped.clean_series.rolling_r.size());
    const auto raw_starts = window_starts(t, stamped.raw_series.rolling_r.size());
    svg::write_plot(
        out_dir / "figures" / "rolling_correlation.svg", "Rolling R-vs-ERP correlation",
        "window start (s)", "r",
        {svg::Series{"clean", clean_starts, stamped.clean_series.rolling_r, "#1f6fb2"},
         svg::Series{"raw", raw_starts, stamped.raw_series.rolling_r, "#c23b22"}});

    svg::Series clean_pts{"clean trials", stamped.clean_series.trial_peak_erp,
                          stamped.clean_series.trial_peak_r, "#1f6fb2", true};
    svg::Series raw_pts{"raw trials", stamped.raw_series.trial_peak_erp,
                        stamped.raw_series.trial_peak_r, "#c23b22", true};
    svg::write_plot(out_dir / "figures" / "trial_scatter.svg",
                    "Trial peak |ERP| vs peak R", "peak |ERP| (uV)", "peak R",
                    {clean_pts, raw_pts});
}

} // namespace korp::pipeline
