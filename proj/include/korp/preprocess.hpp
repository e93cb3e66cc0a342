#ifndef KORP_PREPROCESS_HPP
#define KORP_PREPROCESS_HPP

#include "korp/types.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace korp::preprocess {

struct EpochResult {
    EpochSet epochs;
    std::size_t dropped = 0; // matching events whose window missed the recording
};

/// Subtracts the per-sample channel mean; events and labels pass through.
/// Idempotent up to rounding.
Recording average_reference(const Recording& rec);

/// Cuts one trial per event whose code is in `codes` and whose inclusive
/// window [round(t0 + tmin*fs) .. +epoch_length-1] lies inside the
/// recording. Out-of-bounds events are dropped and tallied. Trial labels
/// come from `code_labels` when present, otherwise the decimal code.
EpochResult epoch(const Recording& rec, const std::set<int>& codes, double tmin,
                  double tmax, const std::map<int, std::string>& code_labels = {});

/// Two-column CSV with required header "sample_index,code".
std::vector<Event> load_events_csv(const std::filesystem::path& path);

} // namespace korp::preprocess

#endif
