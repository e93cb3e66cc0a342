#include "korp/container.hpp"

#include "korp/errors.hpp"
#include "korp/f64io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <vector>

namespace korp::container {

namespace {

using json = nlohmann::ordered_json;

void write_file(const std::filesystem::path& p, const char* bytes, std::size_t n) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("container: cannot open " + p.string() + " for writing");
    out.write(bytes, static_cast<std::streamsize>(n));
    if (!out) throw IoError("container: write failure on " + p.string());
}

std::vector<char> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("container: cannot open " + p.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("container: read failure on " + p.string());
    return bytes;
}

void write_payload(const std::filesystem::path& dir, const std::vector<double>& flat) {
    f64io::write(dir / "data.f64le", flat.data(), flat.size());
}

std::vector<double> read_payload(const std::filesystem::path& dir,
                                 std::size_t expected) {
    return f64io::read(dir / "data.f64le", expected, "container");
}

void write_header(const std::filesystem::path& dir, const json& j) {
    std::filesystem::create_directories(dir);
    const std::string text = j.dump(2) + "\n";
    write_file(dir / "header.json", text.data(), text.size());
}

json load_header(const std::filesystem::path& dir) {
    const auto bytes = read_file(dir / "header.json");
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const std::exception& e) {
        throw CorruptContainer(std::string("container: malformed header.json: ") +
                               e.what());
    }
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        throw CorruptContainer("container: header lacks an integer schema_version");
    }
    const int version = j["schema_version"].get<int>();
    if (version != kSchemaVersion) {
        std::ostringstream os;
        os << "container: schema_version " << version << ", this build reads "
           << kSchemaVersion;
        throw VersionMismatch(os.str());
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
        throw CorruptContainer("container: header lacks a kind field");
    }
    return j;
}

template <typename T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) {
        throw CorruptContainer(std::string("container: header missing field ") + name);
    }
    try {
        return j.at(name).get<T>();
    } catch (const std::exception&) {
        throw CorruptContainer(std::string("container: header field ") + name +
                               " has the wrong type");
    }
}

} // namespace

void save(const std::filesystem::path& dir, const Recording& rec) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "recording";
    j["fs"] = rec.fs;
    j["channel_labels"] = rec.channel_labels;
    j["n_channels"] = rec.n_channels();
    j["n_samples"] = rec.n_samples();
    json ev = json::array();
    for (const auto& e : rec.events) ev.push_back(json::array({e.sample, e.code}));
    j["events"] = std::move(ev);
    write_header(dir, j);
    write_payload(dir, rec.data.storage());
}

void save(const std::filesystem::path& dir, const EpochSet& epochs) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "epochs";
    j["fs"] = epochs.fs;
    j["channel_labels"] = epochs.channel_labels;
    j["tmin"] = epochs.tmin;
    j["tmax"] = epochs.tmax;
    j["labels"] = epochs.labels;
    j["shape"] =
        json::array({epochs.n_trials(), epochs.n_channels(), epochs.n_times()});
    write_header(dir, j);
    write_payload(dir, epochs.data.storage());
}

Kind peek_kind(const std::filesystem::path& dir) {
    const json j = load_header(dir);
    const auto kind = j["kind"].get<std::string>();
    if (kind == "recording") return Kind::recording;
    if (kind == "epochs") return Kind::epochs;
    throw CorruptContainer("container: unknown kind '" + kind + "'");
}

Recording load_recording(const std::filesystem::path& dir) {
    const json j = load_header(dir);
    if (j["kind"].get<std::string>() != "recording") {
        throw CorruptContainer("container: directory holds '" +
                               j["kind"].get<std::string>() + "', expected a recording");
    }
    Recording rec;
    rec.fs = field<double>(j, "fs");
    rec.channel_labels = field<std::vector<std::string>>(j, "channel_labels");
    const auto n_channels = field<std::size_t>(j, "n_channels");
    const auto n_samples = field<std::size_t>(j, "n_samples");
    if (rec.channel_labels.size() != n_channels) {
        throw CorruptContainer("container: label count differs from channel count");
    }
    if (!(rec.fs > 0.0)) {
        throw CorruptContainer("container: non-positive sampling rate");
    }
    const json& ev = j.contains("events") ? j.at("events") : json::array();
    if (!ev.is_array()) throw CorruptContainer("container: events is not an array");
    for (const auto& e : ev) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer()) {
            throw CorruptContainer("container: malformed event entry");
        }
        Event event{e[0].get<std::int64_t>(), e[1].get<int>()};
        if (event.sample < 0 || event.sample >= static_cast<std::int64_t>(n_samples)) {
            throw CorruptContainer("container: event sample index out of range");
        }
        rec.events.push_back(event);
    }
    auto flat = read_payload(dir, n_channels * n_samples);
    rec.data = Matrix(n_channels, n_samples);
    rec.data.storage() = std::move(flat);
    return rec;
}

EpochSet load_epochs(const std::filesystem::path& dir) {
    const json j = load_header(dir);
    if (j["kind"].get<std::string>() != "epochs") {
        throw CorruptContainer("container: directory holds '" +
                               j["kind"].get<std::string>() + "', expected epochs");
    }
    EpochSet e;
    e.fs = field<double>(j, "fs");
    e.channel_labels = field<std::vector<std::string>>(j, "channel_labels");
    e.tmin = field<double>(j, "tmin");
    e.tmax = field<double>(j, "tmax");
    e.labels = field<std::vector<std::string>>(j, "labels");
    const auto shape = field<std::vector<std::size_t>>(j, "shape");
    if (shape.size() != 3) {
        throw CorruptContainer("container: shape must have 3 entries");
    }
    if (e.labels.size() != shape[0]) {
        throw CorruptContainer("container: label count differs from trial count");
    }
    if (e.channel_labels.size() != shape[1]) {
        throw CorruptContainer("container: label count differs from channel count");
    }
    if (!(e.fs > 0.0)) {
        throw CorruptContainer("container: non-positive sampling rate");
    }
    auto flat = read_payload(dir, shape[0] * shape[1] * shape[2]);
    e.data = Tensor3(shape[0], shape[1], shape[2]);
    e.data.storage() = std::move(flat);
    return e;
}

} // namespace korp::container
