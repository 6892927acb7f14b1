#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnseg/events.hpp"

namespace nnseg {

/// One coder's annotation of one subject recording. Labels are nns or pacifier.
struct AnnotationSet {
    std::string subject;
    std::string coder;
    double duration_s = 0.0;
    EventList events;

    EventList with_label(EventLabel label) const;
    bool operator==(const AnnotationSet&) const = default;
};

/// Throws ValidationError on start >= end, events outside [0, duration],
/// labels other than nns/pacifier, or overlapping same-label events.
void validate(const AnnotationSet& set);

/// Annotation CSV: first comment `#duration_s=<d>`, header
/// `subject,coder,label,start_s,end_s`. A file may hold several
/// (subject, coder) sets sharing the duration; they are returned in order of
/// first appearance.
std::vector<AnnotationSet> parse_annotation_sets(const std::filesystem::path& path);
/// As above but requires exactly one (subject, coder) set.
AnnotationSet parse_annotations(const std::filesystem::path& path);

std::string format_annotations(const std::vector<AnnotationSet>& sets);
void write_annotations(const std::vector<AnnotationSet>& sets, const std::filesystem::path& path);
void write_annotations(const AnnotationSet& set, const std::filesystem::path& path);

enum class ClipClass { Nns, NonNns, Mixed };
std::string_view to_string(ClipClass c);
ClipClass parse_clip_class(std::string_view s);

struct ClipEntry {
    std::string source;
    double start_s = 0.0;
    double length_s = 0.0;
    ClipClass cls = ClipClass::Nns;
    bool operator==(const ClipEntry&) const = default;
};

struct ClipManifest {
    std::vector<ClipEntry> entries;
    std::uint64_t seed = 0;
};

struct SamplePolicy {
    int n_pos = 0;
    int n_neg = 0;
    double clip_s = 2.5;
    int n_mixed = 0;
    double mixed_clip_s = 60.0;
};

/// Maximum consecutive rejected draws before a class gives up.
inline constexpr int kMaxRedraws = 1000;

/// Draws up to the requested clip counts. Start times are whole
/// milliseconds; clips of one class never overlap each other.
///  - nns: entirely inside one nns event.
///  - non-nns: disjoint from every nns event, restricted to pacifier periods
///    when those offer room for a clip.
///  - mixed: contains an nns start or end strictly inside the clip.
ClipManifest sample_clips(const AnnotationSet& ann, const SamplePolicy& policy, std::uint64_t seed);

void write_manifest(const ClipManifest& manifest, const std::filesystem::path& path,
                    const std::vector<std::string>& header_comments = {});
ClipManifest read_manifest(const std::filesystem::path& path);

} // namespace nnseg
