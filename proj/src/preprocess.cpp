#include "korp/preprocess.hpp"

#include "korp/errors.hpp"
#include "korp/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace korp::preprocess {

Recording average_reference(const Recording& rec) {
    const std::size_t nc = rec.n_channels();
    const std::size_t ns = rec.n_samples();
    if (nc < 2) {
        throw TooFewChannels("average_reference: need at least 2 channels");
    }
    Recording out = rec;
    for (std::size_t s = 0; s < ns; ++s) {
        double sum = 0.0, comp = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double x = rec.data(c, s);
            const double t = sum + x;
            if (std::abs(sum) >= std::abs(x)) {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        const double mean = (sum + comp) / static_cast<double>(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            out.data(c, s) = rec.data(c, s) - mean;
        }
    }
    return out;
}

EpochResult epoch(const Recording& rec, const std::set<int>& codes, double tmin,
                  double tmax, const std::map<int, std::string>& code_labels) {
    if (!(tmin < tmax)) {
        throw ValidationError("epoch: tmin must be below tmax");
    }
    const std::size_t nc = rec.n_channels();
    const auto ns = static_cast<std::int64_t>(rec.n_samples());
    const std::size_t n_time = epoch_length(tmin, tmax, rec.fs);

    std::vector<const Event*> matching;
    for (const auto& e : rec.events) {
        if (codes.contains(e.code)) matching.push_back(&e);
    }
    if (matching.empty()) {
        std::ostringstream os;
        os << "epoch: no events with the requested codes among " << rec.events.size()
           << " events";
        throw NoMatchingEvents(os.str());
    }

    std::vector<std::pair<std::int64_t, const Event*>> kept;
    std::size_t dropped = 0;
    for (const Event* e : matching) {
        const auto start = static_cast<std::int64_t>(
            std::llround(static_cast<double>(e->sample) + tmin * rec.fs));
        const auto stop = start + static_cast<std::int64_t>(n_time) - 1;
        if (start < 0 || stop >= ns) {
            ++dropped;
            continue;
        }
        kept.emplace_back(start, e);
    }
    if (dropped > 0) {
        log::info("epoch: dropped ", dropped, " of ", matching.size(),
                  " events at the recording edges");
    }

    EpochResult out;
    out.dropped = dropped;
    out.epochs.fs = rec.fs;
    out.epochs.tmin = tmin;
    out.epochs.tmax = tmax;
    out.epochs.channel_labels = rec.channel_labels;
    out.epochs.data = Tensor3(kept.size(), nc, n_time);
    out.epochs.labels.reserve(kept.size());
    for (std::size_t t = 0; t < kept.size(); ++t) {
        const auto [start, e] = kept[t];
        for (std::size_t c = 0; c < nc; ++c) {
            const double* src = rec.data.row(c).data() + static_cast<std::size_t>(start);
            auto dst = out.epochs.data.series(t, c);
            std::copy(src, src + n_time, dst.begin());
        }
        const auto it = code_labels.find(e->code);
        out.epochs.labels.push_back(it != code_labels.end() ? it->second
                                                            : std::to_string(e->code));
    }
    return out;
}

std::vector<Event> load_events_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("events csv: cannot open " + path.string());
    }
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
            s.pop_back();
        }
        std::size_t b = 0;
        while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
        return s.substr(b);
    };

    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidHeader("events csv: empty file, expected a header row");
    }
    if (strip(line) != "sample_index,code") {
        throw InvalidHeader(
            "events csv: first row must be exactly 'sample_index,code'");
    }
    std::vector<Event> events;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = strip(line);
        if (s.empty()) continue;
        const std::size_t comma = s.find(',');
        std::ostringstream ctx;
        ctx << "events csv line " << line_no;
        if (comma == std::string::npos) {
            throw InvalidHeader(ctx.str() + ": expected two comma-separated fields");
        }
        try {
            std::size_t p1 = 0, p2 = 0;
            const std::string a = strip(s.substr(0, comma));
            const std::string b = strip(s.substr(comma + 1));
            const std::int64_t sample = std::stoll(a, &p1);
            const int code = std::stoi(b, &p2);
            if (p1 != a.size() || p2 != b.size() || a.empty() || b.empty()) {
                throw std::invalid_argument("trailing junk");
            }
            events.push_back(Event{sample, code});
        } catch (const std::exception&) {
            throw InvalidHeader(ctx.str() + ": fields must be integers");
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.sample < b.sample; });
    return events;
}

} // namespace korp::preprocess
