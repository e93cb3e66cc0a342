#include "korp/f64io.hpp"

#include "korp/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace korp::f64io {

void write(const std::filesystem::path& path, const double* v, std::size_t n) {
    static_assert(sizeof(double) == 8);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * 8));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t u = 0;
            std::memcpy(&u, v + i, 8);
            char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((u >> (8 * k)) & 0xff);
            out.write(b, 8);
        }
    }
    if (!out) throw IoError("write failure on " + path.string());
}

std::vector<double> read(const std::filesystem::path& path, std::size_t expected,
                         const char* who) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string(who) + ": cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(std::string(who) + ": read failure on " + path.string());
    if (bytes.size() != expected * 8) {
        std::ostringstream os;
        os << who << ": " << path.filename().string() << " holds " << bytes.size() / 8
           << " values, expected " << expected;
        throw CorruptContainer(os.str());
    }
    std::vector<double> v(expected);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(v.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < expected; ++i) {
            std::uint64_t u = 0;
            for (int k = 7; k >= 0; --k) {
                u = (u << 8) | static_cast<std::uint8_t>(bytes[i * 8 + k]);
            }
            std::memcpy(&v[i], &u, 8);
        }
    }
    return v;
}

} // namespace korp::f64io
