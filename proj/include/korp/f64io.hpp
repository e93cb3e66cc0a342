#ifndef KORP_F64IO_HPP
#define KORP_F64IO_HPP

#include <cstddef>
#include <filesystem>
#include <vector>

namespace korp::f64io {

/// Raw little-endian doubles; bit patterns survive the round-trip.
void write(const std::filesystem::path& path, const double* v, std::size_t n);

/// Reads exactly `expected` doubles; anything else is a CorruptContainer.
/// `who` prefixes error messages.
std::vector<double> read(const std::filesystem::path& path, std::size_t expected,
                         const char* who);

} // namespace korp::f64io

#endif
