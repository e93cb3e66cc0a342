#ifndef KORP_PIPELINE_HPP
#define KORP_PIPELINE_HPP

#include "korp/artifacts.hpp"
#include "korp/metrics.hpp"
#include "korp/stats.hpp"
#include "korp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace korp::pipeline {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

enum class Arm { clean, raw };
std::string arm_name(Arm a);

/// Everything that affects the numbers. Defaults follow the reference
/// protocol: 4-30 Hz band, -0.1..0.8 s epochs, 0.1..0.6 s stats window,
/// 20 ITC frequencies over 4-30 Hz, Theta/Alpha/Beta cascade, frontal
/// flagging threshold 0.30.
struct PipelineConfig {
    std::string input;   // container directory or EDF file
    std::string events;  // optional events CSV, replaces embedded events
    std::string out_dir;

    double band_low_hz = 4.0;
    double band_high_hz = 30.0;
    double epoch_tmin_s = -0.1;
    double epoch_tmax_s = 0.8;
    double stats_lo_s = 0.1;
    double stats_hi_s = 0.6;
    std::size_t itc_n_freqs = 20;
    double itc_low_hz = 4.0;
    double itc_high_hz = 30.0;
    std::vector<metrics::BandDef> cascade_bands;  // empty -> Theta/Alpha/Beta
    bool ica = true;
    double ica_threshold = 0.30;
    std::size_t ica_components = 0;  // 0 = covariance rank
    std::uint64_t seed = 42;
    double artifact_window_s = 0.05;
    double xcorr_max_lag_s = 0.35;
    double rolling_window_s = 0.10;
    std::size_t dose_bins = 5;
    int target_code = 1;
    int nontarget_code = 2;
};

std::vector<metrics::BandDef> default_cascade_bands();

/// JSON round trip for configs. Unknown keys warn; missing keys keep their
/// defaults, so a saved echo reloads to the identical configuration.
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

struct BandPeak {
    std::string name;
    std::size_t n_taps = 0;
    double latency_s = 0.0;
    double value = 0.0;
};

struct IcaSummary {
    bool enabled = false;
    bool converged = true;
    std::size_t n_components = 0;
    std::size_t n_iterations = 0;
    std::vector<std::size_t> removed;
};

/// The per-arm analysis results. Every correlation travels with its n and
/// two-sided p.
struct ArmMetrics {
    std::string arm;
    stats::CorrResult global_r;  // pearson(grand R, ERP) over the epoch
    stats::CorrResult trial_r;   // peak R vs peak |ERP|, target trials
    double delta_r_target_nontarget = 0.0;  // mean peak R difference
    std::size_t n_target = 0;
    std::size_t n_nontarget = 0;
    stats::LagResult lag;        // cross_correlation_lag(ERP, grand R)
    stats::CorrResult itc_r;     // frequency-mean ITC vs grand R
    std::vector<BandPeak> band_peaks;
    IcaSummary ica;
};

/// Time courses carried into the report so that the emitted file is
/// self-contained (figures regenerate from report.json alone).
struct ArmSeries {
    std::vector<double> grand_r;
    std::vector<double> erp;
    std::vector<double> rolling_r;        // element k covers window [k, k+w)
    std::vector<double> trial_peak_r;     // target trials, epoch order
    std::vector<double> trial_peak_erp;   // matching |peak ERP| values
    std::vector<std::vector<double>> cascade_grand_r;  // per cascade band
};

struct RegionalCoupling {
    std::string region;
    std::size_t n_channels = 0;
    stats::TTestResult coupling;  // per-trial r: mean, sd, t, p, n
};

struct BatteryReport {
    std::size_t n_trials = 0;  // target trials entering the battery
    std::vector<RegionalCoupling> regional;
    stats::TTestResult precedence;  // R peak time - artifact peak time, s
    stats::CorrResult confound_simple;
    stats::CorrResult confound_partial;
    stats::TTestResult within_trial;  // full-epoch artifact-vs-R coupling
    std::vector<artifacts::DoseResponseBin> dose;
};

/// Full single-arm outputs: reported metrics plus the intermediate series
/// the battery and the figures need.
struct ArmOutputs {
    ArmMetrics metrics;
    metrics::SyncSeries sync;
    metrics::ErpSeries erp;
    metrics::ItcMap itc;
    std::vector<metrics::CascadeBand> cascade;
    ArmSeries series;
    std::vector<std::size_t> target_trials;     // epoch indices
    std::vector<std::size_t> nontarget_trials;
    std::vector<double> trial_peak_erp_signed;  // target trials, sign kept
    EpochSet broadband_epochs;  // re-referenced, unfiltered (battery input)
};

struct ComparisonReport {
    int schema_version = kReportSchemaVersion;
    std::string generated_at;  // the single timestamp field
    std::string software_version = kVersion;
    std::string itc_reduction =
        "mean over frequencies of edge-valid ITC cells per time sample";
    PipelineConfig config;
    ArmMetrics clean;
    ArmMetrics raw;
    BatteryReport battery;
    std::vector<double> time_s;  // shared epoch time axis
    ArmSeries clean_series;
    ArmSeries raw_series;
};

/// Reads a continuous input: a neutral container directory holding a
/// recording, or an EDF file. A nonempty events CSV path replaces whatever
/// events the source carried.
Recording load_input(const std::string& input, const std::string& events_csv);

/// One arm end to end: re-reference, broadband epoching (kept for the
/// battery), band-pass, clean-arm component removal, whole-recording
/// analytic phase, lockstep epoching, R/ERP/ITC/cascade, and the four
/// summary statistics. Errors propagate annotated with the stage name.
///
/// Phase metrics (R, ITC, cascade) run on the re-referenced stream. The
/// voltage series (ERP and the per-trial voltage peaks) are read at the
/// recording's original reference: the common average pins every sample's
/// cross-channel mean to zero, so an all-channel voltage average taken
/// after it would be identically zero. The clean arm's removed components
/// are subtracted from the voltage stream too.
ArmOutputs run_single_pipeline(const PipelineConfig& cfg, Arm arm, const Recording& rec);

/// The five mediation checks, computed from the raw arm's outputs.
BatteryReport causal_battery(const PipelineConfig& cfg, const ArmOutputs& raw_arm);

/// Both arms on identical input and seeds, plus the battery.
/// `generated_at` is left empty; emit_report stamps it.
ComparisonReport run_dual_pipeline(const PipelineConfig& cfg, const Recording& rec);
ComparisonReport run_dual_pipeline(const PipelineConfig& cfg);

/// Deterministic serialization: identical reports give identical bytes.
/// Non-finite numbers serialize as JSON null and parse back as NaN.
std::string report_to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const std::string& text);

/// Structural equality through the canonical serialization.
bool operator==(const ComparisonReport& a, const ComparisonReport& b);

/// Writes report.json, table1.csv, and figures/*.svg under out_dir,
/// stamping generated_at (empty timestamp = now).
void emit_report(const ComparisonReport& report, const std::filesystem::path& out_dir);

} // namespace korp::pipeline

#endif
