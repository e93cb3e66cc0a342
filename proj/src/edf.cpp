#include "korp/edf.hpp"

#include "korp/errors.hpp"
#include "korp/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace korp::edf {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\0')) --e;
    return std::string(s.substr(b, e - b));
}

std::string_view field(const std::vector<std::uint8_t>& bytes, std::size_t off,
                       std::size_t len) {
    return std::string_view(reinterpret_cast<const char*>(bytes.data()) + off, len);
}

double parse_real(std::string_view raw, const char* what) {
    const std::string s = trim(raw);
    if (s.empty()) {
        throw InvalidHeader(std::string("edf: empty numeric field ") + what);
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw InvalidHeader(std::string("edf: non-numeric field ") + what + ": '" + s +
                            "'");
    }
    if (pos != s.size()) {
        throw InvalidHeader(std::string("edf: trailing junk in field ") + what + ": '" +
                            s + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view raw, const char* what) {
    const double v = parse_real(raw, what);
    const double r = std::round(v);
    if (v != r) {
        throw InvalidHeader(std::string("edf: field ") + what + " is not an integer");
    }
    return static_cast<std::int64_t>(r);
}

// One timestamped annotation list: onset, optional duration, then
// \x14-separated texts, \x00 terminated.
void parse_tal(std::string_view tal, double fs, std::int64_t n_samples,
               std::vector<Event>& events) {
    const std::size_t mark = tal.find('\x14');
    if (mark == std::string_view::npos) return;
    std::string_view head = tal.substr(0, mark);
    const std::size_t dur = head.find('\x15');
    if (dur != std::string_view::npos) head = head.substr(0, dur);
    const std::string onset_s = trim(head);
    if (onset_s.empty()) return;
    double onset = 0.0;
    try {
        std::size_t pos = 0;
        onset = std::stod(onset_s, &pos);
        if (pos != onset_s.size()) return;
    } catch (const std::exception&) {
        return;
    }

    std::string_view rest = tal.substr(mark + 1);
    while (!rest.empty()) {
        const std::size_t next = rest.find('\x14');
        const std::string_view text =
            (next == std::string_view::npos) ? rest : rest.substr(0, next);
        if (!text.empty()) {
            const std::string t = trim(text);
            int code = 0;
            bool numeric = !t.empty();
            std::size_t pos = 0;
            if (numeric) {
                try {
                    code = std::stoi(t, &pos);
                    numeric = (pos == t.size());
                } catch (const std::exception&) {
                    numeric = false;
                }
            }
            if (!numeric) {
                code = 0;
                log::warn("edf: non-numeric annotation '", t, "' mapped to code 0");
            }
            const auto sample = static_cast<std::int64_t>(std::llround(onset * fs));
            if (sample >= 0 && sample < n_samples) {
                events.push_back(Event{sample, code});
            } else {
                log::warn("edf: annotation at ", onset, " s falls outside the data");
            }
        }
        if (next == std::string_view::npos) break;
        rest = rest.substr(next + 1);
    }
}

} // namespace

EdfHeader parse_edf_header(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 256) {
        throw TruncatedFile("edf: file shorter than the 256-byte fixed header");
    }
    EdfHeader h;
    h.version = trim(field(bytes, 0, 8));
    h.patient_id = trim(field(bytes, 8, 80));
    h.recording_id = trim(field(bytes, 88, 80));
    h.start_date = trim(field(bytes, 168, 8));
    h.start_time = trim(field(bytes, 176, 8));
    const std::int64_t header_bytes = parse_int(field(bytes, 184, 8), "header bytes");
    h.n_records = parse_int(field(bytes, 236, 8), "record count");
    h.record_duration_s = parse_real(field(bytes, 244, 8), "record duration");
    const std::int64_t n_channels = parse_int(field(bytes, 252, 4), "channel count");

    if (n_channels <= 0) {
        throw InvalidHeader("edf: channel count must be positive");
    }
    h.n_channels = static_cast<std::size_t>(n_channels);
    if (header_bytes != static_cast<std::int64_t>(256 + 256 * h.n_channels)) {
        std::ostringstream os;
        os << "edf: declared header size " << header_bytes << " != "
           << 256 + 256 * h.n_channels << " for " << h.n_channels << " channels";
        throw InvalidHeader(os.str());
    }
    h.header_bytes = static_cast<std::size_t>(header_bytes);
    if (bytes.size() < h.header_bytes) {
        throw TruncatedFile("edf: file shorter than the declared header");
    }
    if (h.n_records < -1) {
        throw InvalidHeader("edf: negative record count");
    }
    if (!(h.record_duration_s > 0.0)) {
        throw InvalidHeader("edf: record duration must be positive");
    }

    const std::size_t ns = h.n_channels;
    std::size_t off = 256;
    h.channels.resize(ns);
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].label = trim(field(bytes, off + 16 * c, 16));
    off += 16 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].transducer = trim(field(bytes, off + 80 * c, 80));
    off += 80 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].physical_dimension = trim(field(bytes, off + 8 * c, 8));
    off += 8 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].physical_min = parse_real(field(bytes, off + 8 * c, 8), "physical min");
    off += 8 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].physical_max = parse_real(field(bytes, off + 8 * c, 8), "physical max");
    off += 8 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].digital_min =
            static_cast<int>(parse_int(field(bytes, off + 8 * c, 8), "digital min"));
    off += 8 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].digital_max =
            static_cast<int>(parse_int(field(bytes, off + 8 * c, 8), "digital max"));
    off += 8 * ns;
    for (std::size_t c = 0; c < ns; ++c)
        h.channels[c].prefiltering = trim(field(bytes, off + 80 * c, 80));
    off += 80 * ns;
    for (std::size_t c = 0; c < ns; ++c) {
        const std::int64_t spr =
            parse_int(field(bytes, off + 8 * c, 8), "samples per record");
        if (spr <= 0) {
            throw InvalidHeader("edf: samples per record must be positive");
        }
        h.channels[c].samples_per_record = static_cast<std::size_t>(spr);
    }

    for (auto& ch : h.channels) {
        ch.is_annotation = (ch.label == "EDF Annotations");
        if (ch.is_annotation) continue;
        if (ch.digital_min >= ch.digital_max) {
            throw InvalidHeader("edf: digital min must be below digital max on '" +
                                ch.label + "'");
        }
        if (ch.physical_min == ch.physical_max) {
            throw InvalidHeader("edf: physical range is empty on '" + ch.label + "'");
        }
    }
    return h;
}

Recording parse_edf(const std::vector<std::uint8_t>& bytes) {
    const EdfHeader h = parse_edf_header(bytes);

    std::size_t record_samples = 0; // int16 slots per record, all channels
    for (const auto& ch : h.channels) record_samples += ch.samples_per_record;
    const std::size_t record_bytes = record_samples * 2;
    const std::size_t payload = bytes.size() - h.header_bytes;

    std::size_t n_records = 0;
    if (h.n_records >= 0) {
        n_records = static_cast<std::size_t>(h.n_records);
        if (payload < n_records * record_bytes) {
            std::ostringstream os;
            os << "edf: payload holds " << payload / record_bytes << " records, header "
               << "declares " << n_records;
            throw TruncatedFile(os.str());
        }
        if (payload > n_records * record_bytes) {
            log::warn("edf: ", payload - n_records * record_bytes,
                      " trailing bytes ignored");
        }
    } else {
        if (record_bytes == 0 || payload % record_bytes != 0) {
            throw InconsistentRecord(
                "edf: payload is not a whole number of records");
        }
        n_records = payload / record_bytes;
    }

    std::vector<std::size_t> data_idx;
    for (std::size_t c = 0; c < h.n_channels; ++c) {
        if (!h.channels[c].is_annotation) data_idx.push_back(c);
    }
    if (data_idx.empty()) {
        throw InvalidHeader("edf: no data channels (annotations only)");
    }
    const std::size_t spr0 = h.channels[data_idx[0]].samples_per_record;
    for (std::size_t c : data_idx) {
        if (h.channels[c].samples_per_record != spr0) {
            throw InconsistentRecord(
                "edf: data channels disagree on samples per record");
        }
    }

    Recording rec;
    rec.fs = static_cast<double>(spr0) / h.record_duration_s;
    const std::size_t n_samples = n_records * spr0;
    rec.data = Matrix(data_idx.size(), n_samples);
    for (std::size_t c : data_idx) rec.channel_labels.push_back(h.channels[c].label);
    std::vector<std::size_t> row_of(h.n_channels, 0);
    for (std::size_t i = 0; i < data_idx.size(); ++i) row_of[data_idx[i]] = i;

    const std::uint8_t* p = bytes.data() + h.header_bytes;
    for (std::size_t r = 0; r < n_records; ++r) {
        for (std::size_t c = 0; c < h.n_channels; ++c) {
            const auto& ch = h.channels[c];
            const std::size_t count = ch.samples_per_record;
            if (ch.is_annotation) {
                const std::string_view tal_bytes(reinterpret_cast<const char*>(p),
                                                 count * 2);
                std::size_t begin = 0;
                while (begin < tal_bytes.size()) {
                    const std::size_t end = tal_bytes.find('\0', begin);
                    if (end == std::string_view::npos || end == begin) break;
                    parse_tal(tal_bytes.substr(begin, end - begin), rec.fs,
                              static_cast<std::int64_t>(n_samples), rec.events);
                    begin = end + 1;
                }
            } else {
                const double scale = (ch.physical_max - ch.physical_min) /
                                     (static_cast<double>(ch.digital_max) -
                                      static_cast<double>(ch.digital_min));
                double* out = &rec.data(row_of[c], r * spr0);
                for (std::size_t s = 0; s < count; ++s) {
                    const std::uint16_t lo = p[2 * s];
                    const std::uint16_t hi = p[2 * s + 1];
                    const auto dig = static_cast<std::int16_t>(
                        static_cast<std::uint16_t>(lo | (hi << 8)));
                    out[s] = (static_cast<double>(dig) - ch.digital_min) * scale +
                             ch.physical_min;
                }
            }
            p += count * 2;
        }
    }

    std::stable_sort(rec.events.begin(), rec.events.end(),
                     [](const Event& a, const Event& b) { return a.sample < b.sample; });
    return rec;
}

Recording parse_edf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("edf: cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("edf: read failure on " + path.string());
    }
    return parse_edf(bytes);
}

} // namespace korp::edf
