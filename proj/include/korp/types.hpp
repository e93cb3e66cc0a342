#ifndef KORP_TYPES_HPP
#define KORP_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "korp/matrix.hpp"

namespace korp {

struct Event {
    std::int64_t sample = 0;
    int code = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Continuous multi-channel recording. Samples are 64-bit floats in
/// microvolts; all channels share one sampling rate and sample count.
struct Recording {
    std::vector<std::string> channel_labels;
    double fs = 0.0;
    Matrix data; // channels x samples
    std::vector<Event> events;

    std::size_t n_channels() const { return data.rows(); }
    std::size_t n_samples() const { return data.cols(); }
};

/// Stimulus-locked trials. Window endpoints are inclusive:
/// n_times = round((tmax - tmin) * fs) + 1.
struct EpochSet {
    Tensor3 data; // trials x channels x time
    double fs = 0.0;
    double tmin = 0.0;
    double tmax = 0.0;
    std::vector<std::string> labels; // per-trial tag, e.g. "target"
    std::vector<std::string> channel_labels;

    std::size_t n_trials() const { return data.dim0(); }
    std::size_t n_channels() const { return data.dim1(); }
    std::size_t n_times() const { return data.dim2(); }
};

inline std::size_t epoch_length(double tmin, double tmax, double fs) {
    return static_cast<std::size_t>(std::llround((tmax - tmin) * fs)) + 1;
}

} // namespace korp

#endif
