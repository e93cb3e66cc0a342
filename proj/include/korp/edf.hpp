#ifndef KORP_EDF_HPP
#define KORP_EDF_HPP

#include "korp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace korp::edf {

struct EdfChannel {
    std::string label;
    std::string transducer;
    std::string physical_dimension;
    std::string prefiltering;
    double physical_min = 0.0;
    double physical_max = 0.0;
    int digital_min = 0;
    int digital_max = 0;
    std::size_t samples_per_record = 0;
    bool is_annotation = false;
};

struct EdfHeader {
    std::string version;
    std::string patient_id;
    std::string recording_id;
    std::string start_date; // dd.mm.yy
    std::string start_time; // hh.mm.ss
    std::size_t header_bytes = 0;
    std::int64_t n_records = 0; // -1 in the file means "derive from payload"
    double record_duration_s = 0.0;
    std::size_t n_channels = 0;
    std::vector<EdfChannel> channels;
};

/// Header only; needs at least 256 + 256 * n_channels bytes.
EdfHeader parse_edf_header(const std::vector<std::uint8_t>& bytes);

/// Full file: header + 16-bit little-endian record-interleaved samples.
/// Digital values map to physical units through the per-channel linear
/// scaling; "EDF Annotations" channels become events instead of data rows.
Recording parse_edf(const std::vector<std::uint8_t>& bytes);

Recording parse_edf(const std::filesystem::path& path);

} // namespace korp::edf

#endif
