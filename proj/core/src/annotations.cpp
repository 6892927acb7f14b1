#include "nnseg/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "nnseg/error.hpp"
#include "nnseg/rng.hpp"
#include "nnseg/text.hpp"

namespace nnseg {

namespace {

struct Interval {
    double lo, hi;
};

// Inclusive range of admissible clip starts, in milliseconds.
struct StartRange {
    long long lo, hi;
};

EventList sorted_by_start(EventList e) {
    std::sort(e.begin(), e.end(), [](const Event& a, const Event& b) { return a.start_s < b.start_s; });
    return e;
}

std::vector<Interval> complement(const EventList& events, double duration) {
    std::vector<Interval> out;
    double cursor = 0.0;
    for (const auto& e : sorted_by_start(events)) {
        if (e.start_s > cursor) out.push_back({cursor, e.start_s});
        cursor = std::max(cursor, e.end_s);
    }
    if (cursor < duration) out.push_back({cursor, duration});
    return out;
}

std::vector<Interval> intersect(const std::vector<Interval>& a, const EventList& b) {
    std::vector<Interval> out;
    for (const auto& x : a)
        for (const auto& y : b) {
            const double lo = std::max(x.lo, y.start_s), hi = std::min(x.hi, y.end_s);
            if (hi > lo) out.push_back({lo, hi});
        }
    std::sort(out.begin(), out.end(), [](const Interval& p, const Interval& q) { return p.lo < q.lo; });
    return out;
}

long long to_ms_ceil(double s) { return static_cast<long long>(std::ceil(s * 1000.0 - 1e-6)); }
long long to_ms_floor(double s) { return static_cast<long long>(std::floor(s * 1000.0 + 1e-6)); }

// Starts such that [start, start + length] lies inside an interval.
std::vector<StartRange> containing_starts(const std::vector<Interval>& intervals, double length) {
    std::vector<StartRange> out;
    for (const auto& iv : intervals) {
        const long long lo = to_ms_ceil(iv.lo), hi = to_ms_floor(iv.hi - length);
        if (hi >= lo) out.push_back({lo, hi});
    }
    return out;
}

std::vector<ClipEntry> draw(const std::vector<StartRange>& ranges, int count, double length, ClipClass cls,
                            const std::string& source, Rng& rng) {
    std::vector<ClipEntry> out;
    if (count <= 0 || ranges.empty()) return out;
    unsigned long long total = 0;
    for (const auto& r : ranges) total += static_cast<unsigned long long>(r.hi - r.lo + 1);
    const long long length_ms = std::llround(length * 1000.0);

    std::vector<long long> taken;
    int rejections = 0;
    while (static_cast<int>(out.size()) < count && rejections < kMaxRedraws) {
        unsigned long long k = rng.below(total);
        long long start = 0;
        for (const auto& r : ranges) {
            const auto span = static_cast<unsigned long long>(r.hi - r.lo + 1);
            if (k < span) {
                start = r.lo + static_cast<long long>(k);
                break;
            }
            k -= span;
        }
        const bool clash =
            std::any_of(taken.begin(), taken.end(), [&](long long s) { return std::llabs(s - start) < length_ms; });
        if (clash) {
            ++rejections;
            continue;
        }
        rejections = 0;
        taken.push_back(start);
        out.push_back({source, static_cast<double>(start) / 1000.0, length, cls});
    }
    return out;
}

} // namespace

EventList AnnotationSet::with_label(EventLabel label) const {
    EventList out;
    for (const auto& e : events)
        if (e.label == label) out.push_back(e);
    return sorted_by_start(std::move(out));
}

void validate(const AnnotationSet& set) {
    const std::string who = "annotations (" + set.subject + "/" + set.coder + ")";
    if (!(set.duration_s > 0.0)) throw ValidationError(who + ": duration must be positive");
    for (const auto& e : set.events) {
        if (e.label == EventLabel::NonNns) throw ValidationError(who + ": label must be nns or pacifier");
        if (!(e.start_s < e.end_s))
            throw ValidationError(who + ": event [" + format_shortest(e.start_s) + ", " + format_shortest(e.end_s) +
                                  "] has start >= end");
        if (e.start_s < 0.0 || e.end_s > set.duration_s + 1e-9)
            throw ValidationError(who + ": event [" + format_shortest(e.start_s) + ", " + format_shortest(e.end_s) +
                                  "] exceeds duration " + format_shortest(set.duration_s));
    }
    for (EventLabel label : {EventLabel::Nns, EventLabel::Pacifier}) {
        const EventList list = set.with_label(label);
        for (std::size_t i = 1; i < list.size(); ++i)
            if (list[i].start_s < list[i - 1].end_s)
                throw ValidationError(who + ": overlapping " + std::string(to_string(label)) + " events at " +
                                      format_shortest(list[i].start_s) + " s");
    }
}

std::vector<AnnotationSet> parse_annotation_sets(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, {"subject", "coder", "label", "start_s", "end_s"});
    if (t.comments.empty()) throw ValidationError(path.string() + ": missing '#duration_s=' line");
    const std::string& first = t.comments.front();
    constexpr std::string_view key = "duration_s=";
    if (first.rfind(key, 0) != 0) throw ValidationError(path.string() + ": first comment must be '#duration_s=<seconds>'");
    const double duration = parse_double(std::string_view(first).substr(key.size()), "duration_s");

    std::vector<AnnotationSet> sets;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string where = path.string() + ":" + std::to_string(t.row_lines[i]);
        if (row[0].empty() || row[1].empty()) throw ValidationError(where + ": empty subject or coder");
        Event e;
        try {
            e.label = parse_event_label(row[2]);
            e.start_s = parse_double(row[3], "start_s");
            e.end_s = parse_double(row[4], "end_s");
        } catch (const ValidationError& err) {
            throw ValidationError(where + ": " + err.what());
        }
        auto it = std::find_if(sets.begin(), sets.end(),
                               [&](const AnnotationSet& s) { return s.subject == row[0] && s.coder == row[1]; });
        if (it == sets.end()) {
            sets.push_back({row[0], row[1], duration, {}});
            it = std::prev(sets.end());
        }
        it->events.push_back(e);
    }
    for (const auto& s : sets) validate(s);
    return sets;
}

AnnotationSet parse_annotations(const std::filesystem::path& path) {
    auto sets = parse_annotation_sets(path);
    if (sets.size() != 1)
        throw ValidationError(path.string() + ": expected one subject/coder, found " + std::to_string(sets.size()));
    return std::move(sets.front());
}

std::string format_annotations(const std::vector<AnnotationSet>& sets) {
    if (sets.empty()) throw ValidationError("no annotation sets to write");
    for (const auto& s : sets) {
        validate(s);
        if (s.duration_s != sets.front().duration_s)
            throw ValidationError("annotation sets in one file must share a duration");
    }
    std::string out = "#duration_s=" + format_shortest(sets.front().duration_s) + "\n";
    out += "subject,coder,label,start_s,end_s\n";
    for (const auto& s : sets)
        for (const auto& e : s.events)
            out += s.subject + "," + s.coder + "," + std::string(to_string(e.label)) + "," + format_shortest(e.start_s) +
                   "," + format_shortest(e.end_s) + "\n";
    return out;
}

void write_annotations(const std::vector<AnnotationSet>& sets, const std::filesystem::path& path) {
    write_text_file(path, format_annotations(sets));
}

void write_annotations(const AnnotationSet& set, const std::filesystem::path& path) {
    write_annotations(std::vector<AnnotationSet>{set}, path);
}

std::string_view to_string(ClipClass c) {
    switch (c) {
    case ClipClass::Nns: return "nns";
    case ClipClass::NonNns: return "non-nns";
    case ClipClass::Mixed: return "mixed";
    }
    return "nns";
}

ClipClass parse_clip_class(std::string_view s) {
    if (s == "nns") return ClipClass::Nns;
    if (s == "non-nns") return ClipClass::NonNns;
    if (s == "mixed") return ClipClass::Mixed;
    throw ValidationError("unknown clip class '" + std::string(s) + "'");
}

ClipManifest sample_clips(const AnnotationSet& ann, const SamplePolicy& policy, std::uint64_t seed) {
    validate(ann);
    if (!(policy.clip_s > 0.0) || !(policy.mixed_clip_s > 0.0)) throw ValidationError("clip length must be positive");
    ClipManifest m;
    m.seed = seed;
    Rng rng(seed);
    const EventList nns = ann.with_label(EventLabel::Nns);
    const EventList pacifier = ann.with_label(EventLabel::Pacifier);

    std::vector<Interval> nns_iv;
    for (const auto& e : nns) nns_iv.push_back({e.start_s, e.end_s});
    auto pos = draw(containing_starts(nns_iv, policy.clip_s), policy.n_pos, policy.clip_s, ClipClass::Nns, ann.subject, rng);

    const auto free = complement(nns, ann.duration_s);
    auto neg_ranges = containing_starts(intersect(free, pacifier), policy.clip_s);
    if (neg_ranges.empty()) neg_ranges = containing_starts(free, policy.clip_s);
    auto neg = draw(neg_ranges, policy.n_neg, policy.clip_s, ClipClass::NonNns, ann.subject, rng);

    // A boundary b lies strictly inside [s, s + L] for s in (b - L, b).
    std::vector<StartRange> mixed_ranges;
    const long long last_start = to_ms_floor(ann.duration_s - policy.mixed_clip_s);
    const long long length_ms = std::llround(policy.mixed_clip_s * 1000.0);
    for (const auto& e : nns)
        for (double b : {e.start_s, e.end_s}) {
            if (b <= 0.0 || b >= ann.duration_s) continue;
            const long long bm = to_ms_ceil(b);
            const long long lo = std::max(0LL, bm - length_ms + 1), hi = std::min(last_start, to_ms_floor(b) - 1);
            if (hi >= lo) mixed_ranges.push_back({lo, hi});
        }
    std::sort(mixed_ranges.begin(), mixed_ranges.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
    std::vector<StartRange> merged;
    for (const auto& r : mixed_ranges) {
        if (!merged.empty() && r.lo <= merged.back().hi + 1) merged.back().hi = std::max(merged.back().hi, r.hi);
        else merged.push_back(r);
    }
    auto mixed = draw(merged, policy.n_mixed, policy.mixed_clip_s, ClipClass::Mixed, ann.subject, rng);

    for (auto* part : {&pos, &neg, &mixed}) m.entries.insert(m.entries.end(), part->begin(), part->end());
    return m;
}

void write_manifest(const ClipManifest& manifest, const std::filesystem::path& path,
                    const std::vector<std::string>& header_comments) {
    std::string out;
    for (const auto& c : header_comments) out += "# " + c + "\n";
    const bool has_seed = std::any_of(header_comments.begin(), header_comments.end(),
                                      [](const std::string& c) { return c.rfind("seed=", 0) == 0; });
    if (!has_seed) out += "# seed=" + std::to_string(manifest.seed) + "\n";
    out += "source,start_s,length_s,class\n";
    for (const auto& e : manifest.entries)
        out += e.source + "," + format_fixed(e.start_s, 3) + "," + format_shortest(e.length_s) + "," +
               std::string(to_string(e.cls)) + "\n";
    write_text_file(path, out);
}

ClipManifest read_manifest(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, {"source", "start_s", "length_s", "class"});
    ClipManifest m;
    for (const auto& c : t.comments) {
        const std::string& body = c;
        if (body.rfind("seed=", 0) == 0) m.seed = static_cast<std::uint64_t>(parse_int(body.substr(5), "seed"));
    }
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        ClipEntry e{row[0], parse_double(row[1], "start_s"), parse_double(row[2], "length_s"), parse_clip_class(row[3])};
        if (e.start_s < 0.0 || !(e.length_s > 0.0))
            throw ValidationError(path.string() + ":" + std::to_string(t.row_lines[i]) + ": invalid clip extent");
        m.entries.push_back(std::move(e));
    }
    return m;
}

} // namespace nnseg
