#include "korp/artifacts.hpp"

#include "korp/errors.hpp"
#include "korp/f64io.hpp"
#include "korp/log.hpp"
#include "korp/rng.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace korp::artifacts {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EMat>;

ConstMap map_of(const Matrix& m) {
    return ConstMap(m.storage().data(), static_cast<Eigen::Index>(m.rows()),
                    static_cast<Eigen::Index>(m.cols()));
}

Matrix from_eigen(const EMat& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    std::memcpy(m.storage().data(), e.data(), sizeof(double) * m.storage().size());
    return m;
}

// W <- (W W^T)^(-1/2) W, which keeps rows orthonormal.
EMat symmetric_decorrelate(const EMat& w) {
    Eigen::SelfAdjointEigenSolver<EMat> es(w * w.transpose());
    if (es.info() != Eigen::Success) {
        throw NumericalError("fastica: decorrelation eigensolver failed");
    }
    const auto& d = es.eigenvalues();
    if (d.minCoeff() <= 0.0) {
        throw NumericalError("fastica: degenerate rotation during decorrelation");
    }
    const EMat v = es.eigenvectors();
    return v * d.array().rsqrt().matrix().asDiagonal() * v.transpose() * w;
}

EMat centered_by_own_means(const Matrix& data, std::vector<double>* means_out) {
    EMat x = map_of(data);
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
        const double m = x.row(c).mean();
        x.row(c).array() -= m;
        if (means_out) means_out->push_back(m);
    }
    return x;
}

double abs_pearson(const double* a, const double* b, std::size_t n) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    const double den = std::sqrt(saa) * std::sqrt(sbb);
    if (den == 0.0 || !std::isfinite(den)) return 0.0;
    return std::min(std::abs(sab) / den, 1.0);
}

} // namespace

IcaModel fastica(const Matrix& data, std::size_t n_components, std::uint64_t seed,
                 std::size_t max_iter, double tol) {
    const std::size_t nc = data.rows();
    const std::size_t ns = data.cols();
    if (nc == 0 || ns == 0) throw EmptyInput("fastica: empty data");
    if (n_components > nc) {
        throw ValidationError("fastica: more components than channels requested");
    }
    if (ns < 2 * nc) {
        throw ValidationError("fastica: need at least 2 samples per channel");
    }
    if (ns < 10 * nc) {
        log::warn("fastica: only ", ns, " samples for ", nc,
                  " channels; estimates will be noisy");
    }

    IcaModel model;
    model.seed = seed;
    const EMat x = centered_by_own_means(data, &model.means);
    const EMat cov = (x * x.transpose()) / static_cast<double>(ns - 1);
    Eigen::SelfAdjointEigenSolver<EMat> es(cov);
    if (es.info() != Eigen::Success) {
        throw NumericalError("fastica: covariance eigensolver failed");
    }
    const auto& evals = es.eigenvalues(); // ascending
    const double lam_max = evals(static_cast<Eigen::Index>(nc) - 1);
    const double rank_tol = std::max(lam_max * 1e-10, 1e-300);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals(i) > rank_tol) ++rank;
    }
    if (rank == 0) {
        throw RankDeficient("fastica: covariance has rank 0 (constant data)");
    }
    std::size_t k = n_components;
    if (k == 0) {
        k = rank;
        if (rank < nc) {
            log::info("fastica: covariance rank ", rank, " < ", nc,
                      " channels; dropping the null directions");
        }
    } else if (k > rank) {
        std::ostringstream os;
        os << "fastica: " << k << " components requested but covariance rank is "
           << rank;
        throw RankDeficient(os.str());
    }

    // Top-k eigenpairs, largest first.
    EMat u_k(nc, k);
    Eigen::VectorXd d_k(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto src = static_cast<Eigen::Index>(nc - 1 - i);
        u_k.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(src);
        d_k(static_cast<Eigen::Index>(i)) = evals(src);
    }
    const EMat whitening = d_k.array().rsqrt().matrix().asDiagonal() * u_k.transpose();
    const EMat z = whitening * x; // k x ns, unit covariance

    rng::Stream rng(seed, 0x1caULL);
    EMat w(k, k);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            w(i, j) = rng.normal();
        }
    }
    w = symmetric_decorrelate(w);

    const double inv_ns = 1.0 / static_cast<double>(ns);
    model.converged = false;
    model.n_iter = max_iter;
    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        const EMat y = w * z;              // k x ns projections
        const EMat g = y.array().tanh();   // contrast
        Eigen::VectorXd gp_mean(static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            gp_mean(i) = 1.0 - g.row(i).array().square().mean();
        }
        EMat w_next = (g * z.transpose()) * inv_ns - gp_mean.asDiagonal() * w;
        w_next = symmetric_decorrelate(w_next);
        double delta = 0.0;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            delta = std::max(delta,
                             std::abs(1.0 - std::abs(w_next.row(i).dot(w.row(i)))));
        }
        w = w_next;
        if (delta < tol) {
            model.converged = true;
            model.n_iter = iter;
            break;
        }
    }
    if (!model.converged) {
        log::warn("fastica: NotConverged after ", model.n_iter,
                  " iterations; returning the last iterate");
    }

    model.whitening = from_eigen(whitening);
    model.unmixing = from_eigen(w);
    model.mixing = from_eigen(EMat(u_k * d_k.array().sqrt().matrix().asDiagonal() *
                                   w.transpose()));
    return model;
}

Matrix ica_sources(const IcaModel& model, const Matrix& data) {
    if (data.rows() != model.whitening.cols()) {
        throw LengthMismatch("ica_sources: channel count differs from the model");
    }
    const EMat x = centered_by_own_means(data, nullptr);
    return from_eigen(EMat(map_of(model.unmixing) * map_of(model.whitening) * x));
}

std::set<std::size_t> identify_artifact_components(
    const IcaModel& model, const Matrix& data,
    const std::vector<std::size_t>& channel_idx, double threshold) {
    if (channel_idx.empty()) {
        throw EmptyInput("identify_artifact_components: empty channel set");
    }
    for (std::size_t c : channel_idx) {
        if (c >= data.rows()) {
            throw ValidationError("identify_artifact_components: channel index out of range");
        }
    }
    const Matrix sources = ica_sources(model, data);
    std::set<std::size_t> flagged;
    for (std::size_t i = 0; i < sources.rows(); ++i) {
        double best = 0.0;
        for (std::size_t c : channel_idx) {
            best = std::max(best,
                            abs_pearson(sources.row(i).data(), data.row(c).data(),
                                        data.cols()));
        }
        if (best >= threshold) flagged.insert(i);
        log::debug("component ", i, ": best frontal |r| = ", best);
    }
    return flagged;
}

Matrix remove_components(const IcaModel& model, const Matrix& data,
                         const std::set<std::size_t>& flagged) {
    const std::size_t k = model.unmixing.rows();
    for (std::size_t f : flagged) {
        if (f >= k) {
            throw ValidationError("remove_components: component index out of range");
        }
    }
    if (flagged.empty()) return data; // nothing to subtract: exact identity
    std::vector<double> means;
    means.reserve(data.rows());
    const EMat x = centered_by_own_means(data, &means);
    EMat sources = map_of(model.unmixing) * map_of(model.whitening) * x;
    for (std::size_t f : flagged) {
        sources.row(static_cast<Eigen::Index>(f)).setZero();
    }
    EMat rebuilt = map_of(model.mixing) * sources;
    for (Eigen::Index c = 0; c < rebuilt.rows(); ++c) {
        rebuilt.row(c).array() += means[static_cast<std::size_t>(c)];
    }
    return from_eigen(rebuilt);
}

ArtifactSeries artifact_magnitude(const EpochSet& epochs,
                                  const std::vector<std::size_t>& channels,
                                  std::size_t window) {
    if (channels.empty()) {
        throw EmptyInput("artifact_magnitude: empty channel set");
    }
    const std::size_t nt = epochs.n_trials();
    const std::size_t ns = epochs.n_times();
    for (std::size_t c : channels) {
        if (c >= epochs.n_channels()) {
            throw ValidationError("artifact_magnitude: channel index out of range");
        }
    }
    if (window == 0) {
        throw ValidationError("artifact_magnitude: window must be positive");
    }
    if (window > ns) {
        throw WindowTooLarge("artifact_magnitude: window exceeds the epoch length");
    }
    ArtifactSeries out;
    out.channels = channels;
    out.fs = epochs.fs;
    out.tmin = epochs.tmin;
    out.per_trial = Matrix(nt, ns);
    const std::size_t half = window / 2;
    const double inv_c = 1.0 / static_cast<double>(channels.size());
    std::vector<double> mean_sq(ns);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t s = 0; s < ns; ++s) {
            double m = 0.0;
            for (std::size_t c : channels) m += epochs.data.series(t, c)[s];
            m *= inv_c;
            mean_sq[s] = m * m;
        }
        for (std::size_t s = 0; s < ns; ++s) {
            const std::size_t lo = (s >= half) ? s - half : 0;
            const std::size_t hi = std::min(ns - 1, s + (window - 1) / 2);
            double acc = 0.0;
            for (std::size_t i = lo; i <= hi; ++i) acc += mean_sq[i];
            out.per_trial(t, s) = std::sqrt(acc / static_cast<double>(hi - lo + 1));
        }
    }
    return out;
}

RegionalGroups regional_groups(const std::vector<std::string>& labels) {
    RegionalGroups g;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::string u = labels[i];
        std::transform(u.begin(), u.end(), u.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        const char* region = "other";
        if (u.rfind("FP", 0) == 0 || u.rfind("AF", 0) == 0) {
            region = "frontal";
        } else if (u.rfind("FT", 0) == 0 || u.rfind("TP", 0) == 0) {
            region = "temporal";
        } else if (u.rfind("FC", 0) == 0) {
            region = "other";
        } else if (!u.empty() && u[0] == 'F') {
            region = "frontal";
        } else if (!u.empty() && u[0] == 'T') {
            region = "temporal";
        } else if (u.rfind("PO", 0) == 0 || (!u.empty() && u[0] == 'O')) {
            region = "occipital";
        } else if (u.empty() || (u[0] != 'C' && u[0] != 'P' && u[0] != 'A' &&
                                 u[0] != 'M' && u[0] != 'I' && u[0] != 'N')) {
            log::warn("regional_groups: unrecognized label '", labels[i],
                      "' grouped as other");
        }
        log::debug("regional_groups: ", labels[i], " -> ", region);
        if (std::strcmp(region, "frontal") == 0) {
            g.frontal.push_back(i);
        } else if (std::strcmp(region, "temporal") == 0) {
            g.temporal.push_back(i);
        } else if (std::strcmp(region, "occipital") == 0) {
            g.occipital.push_back(i);
        } else {
            g.other.push_back(i);
        }
    }
    return g;
}

std::vector<DoseResponseBin> dose_response_bins(const std::vector<TrialMetrics>& trials,
                                                std::size_t n_bins) {
    if (n_bins < 2) {
        throw ValidationError("dose_response_bins: need at least 2 bins");
    }
    if (trials.empty()) {
        throw EmptyInput("dose_response_bins: no trials");
    }
    std::vector<std::size_t> order(trials.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return trials[a].artifact < trials[b].artifact;
    });

    constexpr std::size_t kMinTrials = 10;
    std::vector<DoseResponseBin> bins(n_bins);
    std::size_t n_sparse = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t lo = b * trials.size() / n_bins;
        const std::size_t hi = (b + 1) * trials.size() / n_bins;
        DoseResponseBin& bin = bins[b];
        bin.n_trials = hi - lo;
        bin.sparse = bin.n_trials < kMinTrials;
        if (bin.sparse) {
            ++n_sparse;
            log::warn("dose_response_bins: bin ", b, " holds only ", bin.n_trials,
                      " trials");
        }
        if (bin.n_trials == 0) {
            bin.corr.r = std::numeric_limits<double>::quiet_NaN();
            bin.corr.p = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        bin.amplitude_lo = trials[order[lo]].artifact;
        bin.amplitude_hi = trials[order[hi - 1]].artifact;
        std::vector<double> rs, erps;
        rs.reserve(bin.n_trials);
        erps.reserve(bin.n_trials);
        for (std::size_t i = lo; i < hi; ++i) {
            rs.push_back(trials[order[i]].r);
            erps.push_back(std::abs(trials[order[i]].erp));
        }
        try {
            bin.corr = stats::pearson(rs, erps);
        } catch (const Error&) {
            bin.corr.r = std::numeric_limits<double>::quiet_NaN();
            bin.corr.p = std::numeric_limits<double>::quiet_NaN();
            bin.corr.n = bin.n_trials;
        }
    }
    if (n_sparse == n_bins) {
        throw AllSparse("dose_response_bins: every bin is below the 10-trial minimum");
    }
    return bins;
}

void save_ica(const std::filesystem::path& dir, const IcaModel& model) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "ica_model";
    j["seed"] = model.seed;
    j["n_iter"] = model.n_iter;
    j["converged"] = model.converged;
    j["n_channels"] = model.whitening.cols();
    j["n_components"] = model.whitening.rows();
    const std::string text = j.dump(2) + "\n";
    std::ofstream out(dir / "ica.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("ica: cannot write " + (dir / "ica.json").string());
    out << text;

    std::vector<double> flat;
    auto append = [&flat](const Matrix& m) {
        flat.insert(flat.end(), m.storage().begin(), m.storage().end());
    };
    append(model.whitening);
    append(model.unmixing);
    append(model.mixing);
    flat.insert(flat.end(), model.means.begin(), model.means.end());
    f64io::write(dir / "ica.f64le", flat.data(), flat.size());
}

IcaModel load_ica(const std::filesystem::path& dir) {
    std::ifstream in(dir / "ica.json", std::ios::binary);
    if (!in) throw IoError("ica: cannot open " + (dir / "ica.json").string());
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw CorruptContainer(std::string("ica: malformed ica.json: ") + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
        throw VersionMismatch("ica: unsupported model schema");
    }
    if (!j.contains("kind") || j["kind"].get<std::string>() != "ica_model") {
        throw CorruptContainer("ica: directory does not hold an ica model");
    }
    IcaModel model;
    model.seed = j.at("seed").get<std::uint64_t>();
    model.n_iter = j.at("n_iter").get<std::size_t>();
    model.converged = j.at("converged").get<bool>();
    const auto nc = j.at("n_channels").get<std::size_t>();
    const auto k = j.at("n_components").get<std::size_t>();
    const std::size_t expected = k * nc + k * k + nc * k + nc;
    const auto flat = f64io::read(dir / "ica.f64le", expected, "ica");
    std::size_t off = 0;
    auto take = [&](std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + rows * cols),
                  m.storage().begin());
        off += rows * cols;
        return m;
    };
    model.whitening = take(k, nc);
    model.unmixing = take(k, k);
    model.mixing = take(nc, k);
    model.means.assign(flat.begin() + static_cast<std::ptrdiff_t>(off), flat.end());
    return model;
}

} // namespace korp::artifacts
