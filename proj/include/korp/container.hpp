#ifndef KORP_CONTAINER_HPP
#define KORP_CONTAINER_HPP

#include "korp/types.hpp"

#include <filesystem>
#include <string>

namespace korp::container {

inline constexpr int kSchemaVersion = 1;

enum class Kind { recording, epochs };

/// Writes `header.json` + `data.f64le` into dir (created if needed).
/// Serialization is deterministic: identical values give identical bytes.
void save(const std::filesystem::path& dir, const Recording& rec);
void save(const std::filesystem::path& dir, const EpochSet& epochs);

/// Reads header.json only and reports which payload the directory holds.
Kind peek_kind(const std::filesystem::path& dir);

Recording load_recording(const std::filesystem::path& dir);
EpochSet load_epochs(const std::filesystem::path& dir);

} // namespace korp::container

#endif
