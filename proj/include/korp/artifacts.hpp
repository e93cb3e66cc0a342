#ifndef KORP_ARTIFACTS_HPP
#define KORP_ARTIFACTS_HPP

#include "korp/matrix.hpp"
#include "korp/stats.hpp"
#include "korp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace korp::artifacts {

/// Linear decomposition fitted by fastica. Sources of data X are
/// unmixing * whitening * (X - row means); mixing maps sources back.
struct IcaModel {
    Matrix whitening;  // components x channels
    Matrix unmixing;   // components x components, orthonormal rows
    Matrix mixing;     // channels x components
    std::vector<double> means;
    std::size_t n_iter = 0;
    std::uint64_t seed = 0;
    bool converged = false;
};

/// Sliding-RMS magnitude of the mean over a designated channel group.
struct ArtifactSeries {
    Matrix per_trial; // trials x time, nonnegative
    std::vector<std::size_t> channels;
    double fs = 0.0;
    double tmin = 0.0;
};

struct RegionalGroups {
    std::vector<std::size_t> frontal;
    std::vector<std::size_t> temporal;
    std::vector<std::size_t> occipital;
    std::vector<std::size_t> other;
};

struct TrialMetrics {
    double artifact = 0.0; // peak artifact amplitude
    double r = 0.0;        // peak synchronization
    double erp = 0.0;      // peak voltage (sign kept; binning takes |erp|)
};

struct DoseResponseBin {
    double amplitude_lo = 0.0;
    double amplitude_hi = 0.0;
    std::size_t n_trials = 0;
    bool sparse = false; // below the 10-trial minimum
    stats::CorrResult corr;
};

/// PCA whitening then symmetric fixed-point iteration with a tanh
/// contrast. n_components = 0 picks every dimension the covariance rank
/// supports (rank-deficient directions are dropped). A model that hits the
/// iteration cap is returned with converged = false.
IcaModel fastica(const Matrix& data, std::size_t n_components, std::uint64_t seed,
                 std::size_t max_iter = 500, double tol = 1e-6);

/// unmixing * whitening * (data - data's own row means).
Matrix ica_sources(const IcaModel& model, const Matrix& data);

/// Components whose best |r| against any listed channel reaches the
/// threshold (boundary inclusive).
std::set<std::size_t> identify_artifact_components(const IcaModel& model,
                                                   const Matrix& data,
                                                   const std::vector<std::size_t>& channel_idx,
                                                   double threshold = 0.30);

/// Reconstruction with the flagged source rows zeroed; centering uses the
/// supplied data's own means. An empty flag set returns the data
/// unchanged (exact identity, independent of the model's rank).
Matrix remove_components(const IcaModel& model, const Matrix& data,
                         const std::set<std::size_t>& flagged);

/// Centered sliding-window RMS (edge windows shrink) of the channel-group
/// mean, per trial. `window` is in samples.
ArtifactSeries artifact_magnitude(const EpochSet& epochs,
                                  const std::vector<std::size_t>& channels,
                                  std::size_t window);

/// 10-20 prefix mapping. FC* is deliberately not frontal and FT* counts
/// as temporal; unrecognized labels land in `other` with a warning.
RegionalGroups regional_groups(const std::vector<std::string>& labels);

/// Quantile-bins trials by artifact amplitude and correlates peak R with
/// peak |ERP| inside each bin. Bins under 10 trials are flagged sparse
/// (their r is NaN when fewer than 3 trials or degenerate).
std::vector<DoseResponseBin> dose_response_bins(const std::vector<TrialMetrics>& trials,
                                                std::size_t n_bins);

void save_ica(const std::filesystem::path& dir, const IcaModel& model);
IcaModel load_ica(const std::filesystem::path& dir);

} // namespace korp::artifacts

#endif
