#include <gtest/gtest.h>

#include <cmath>

#include "nnseg/annotations.hpp"
#include "nnseg/error.hpp"
#include "nnseg/text.hpp"
#include "test_support.hpp"

using namespace nnseg;
using nnseg::test::TempDir;

namespace {

Event nns(double s, double e) { return {s, e, EventLabel::Nns, 1.0}; }
Event pacifier(double s, double e) { return {s, e, EventLabel::Pacifier, 1.0}; }

bool inside_some(const ClipEntry& c, const EventList& events) {
    for (const auto& e : events)
        if (c.start_s >= e.start_s - 1e-9 && c.start_s + c.length_s <= e.end_s + 1e-9) return true;
    return false;
}

bool intersects_any(const ClipEntry& c, const EventList& events) {
    for (const auto& e : events)
        if (c.start_s < e.end_s && e.start_s < c.start_s + c.length_s) return true;
    return false;
}

std::vector<ClipEntry> of_class(const ClipManifest& m, ClipClass cls) {
    std::vector<ClipEntry> out;
    for (const auto& e : m.entries)
        if (e.cls == cls) out.push_back(e);
    return out;
}

} // namespace

TEST(Annotations, ParsesTwoDisjointEvents) {
    TempDir dir;
    write_text_file(dir / "a.csv", "#duration_s=120\nsubject,coder,label,start_s,end_s\ninf1,c1,nns,3,9.5\ninf1,c1,nns,20,31\n");
    const AnnotationSet a = parse_annotations(dir / "a.csv");
    EXPECT_EQ(a.subject, "inf1");
    EXPECT_EQ(a.coder, "c1");
    EXPECT_DOUBLE_EQ(a.duration_s, 120.0);
    ASSERT_EQ(a.events.size(), 2u);
    EXPECT_DOUBLE_EQ(a.events[0].end_s, 9.5);
}

TEST(Annotations, RejectsContractViolations) {
    TempDir dir;
    const std::string head = "#duration_s=60\nsubject,coder,label,start_s,end_s\n";
    const char* bad[] = {
        "s,c,nns,0,5\ns,c,nns,4,8\n", // same-label overlap
        "s,c,nns,5,5\n",              // start >= end
        "s,c,nns,50,61\n",            // beyond the duration
        "s,c,nns,1\n",                // malformed row
        "s,c,non-nns,1,2\n",          // label not allowed in annotations
    };
    for (const char* rows : bad) {
        write_text_file(dir / "bad.csv", head + rows);
        EXPECT_THROW(parse_annotations(dir / "bad.csv"), ValidationError) << rows;
    }
    write_text_file(dir / "nodur.csv", "subject,coder,label,start_s,end_s\ns,c,nns,1,2\n");
    EXPECT_THROW(parse_annotations(dir / "nodur.csv"), ValidationError);
    // Overlap across labels is fine.
    write_text_file(dir / "ok.csv", head + "s,c,nns,0,5\ns,c,pacifier,0,30\n");
    EXPECT_EQ(parse_annotations(dir / "ok.csv").events.size(), 2u);
}

TEST(Annotations, WriteParseRoundTrip) {
    TempDir dir;
    AnnotationSet a{"inf 2", "coder-b", 75.25, {nns(0.125, 3.5), pacifier(1, 70), nns(10, 12.75)}};
    write_annotations(a, dir / "a.csv");
    EXPECT_EQ(parse_annotations(dir / "a.csv"), a);
}

TEST(Annotations, MultipleCodersInOneFile) {
    TempDir dir;
    write_annotations(std::vector<AnnotationSet>{{"s", "a", 30, {nns(1, 2)}}, {"s", "b", 30, {nns(1, 3)}}}, dir / "k.csv");
    const auto sets = parse_annotation_sets(dir / "k.csv");
    ASSERT_EQ(sets.size(), 2u);
    EXPECT_EQ(sets[1].coder, "b");
    EXPECT_THROW(parse_annotations(dir / "k.csv"), ValidationError);
}

TEST(Sampling, EightyPositivesInsideALongEvent) {
    const AnnotationSet a{"s", "c", 400, {nns(50, 350)}};
    const ClipManifest m = sample_clips(a, {80, 0}, 7);
    const auto pos = of_class(m, ClipClass::Nns);
    ASSERT_EQ(pos.size(), 80u);
    for (const auto& c : pos) {
        EXPECT_TRUE(inside_some(c, a.events));
        EXPECT_DOUBLE_EQ(c.length_s, 2.5);
        EXPECT_DOUBLE_EQ(c.start_s * 1000.0, std::round(c.start_s * 1000.0));
    }
}

TEST(Sampling, NoSupplyMeansNoClips) {
    const AnnotationSet a{"s", "c", 100, {pacifier(0, 50)}};
    EXPECT_TRUE(of_class(sample_clips(a, {10, 0}, 1), ClipClass::Nns).empty());
    // Events shorter than a clip offer no room either.
    const AnnotationSet b{"s", "c", 100, {nns(0, 2), nns(10, 12)}};
    EXPECT_TRUE(of_class(sample_clips(b, {10, 0}, 1), ClipClass::Nns).empty());
}

TEST(Sampling, DeterministicPerSeed) {
    const AnnotationSet a{"s", "c", 300, {nns(10, 40), nns(100, 160), pacifier(90, 200)}};
    const SamplePolicy p{20, 20, 2.5, 3, 60};
    const ClipManifest x = sample_clips(a, p, 5), y = sample_clips(a, p, 5), z = sample_clips(a, p, 6);
    EXPECT_EQ(x.entries, y.entries);
    EXPECT_NE(x.entries, z.entries);
}

TEST(Sampling, NegativesAvoidNnsAndPreferPacifierUse) {
    // Pacifier time free of NNS: [90, 100) and [160, 400), room for 100 disjoint clips.
    const AnnotationSet a{"s", "c", 600, {nns(10, 40), nns(100, 160), pacifier(90, 400)}};
    const ClipManifest m = sample_clips(a, {0, 30}, 3);
    const auto neg = of_class(m, ClipClass::NonNns);
    ASSERT_EQ(neg.size(), 30u);
    for (const auto& c : neg) {
        EXPECT_FALSE(intersects_any(c, a.with_label(EventLabel::Nns)));
        EXPECT_TRUE(inside_some(c, a.with_label(EventLabel::Pacifier)));
    }
    // Without pacifier periods the plain complement is used.
    const AnnotationSet b{"s", "c", 100, {nns(10, 40)}};
    for (const auto& c : sample_clips(b, {0, 10}, 3).entries) {
        EXPECT_FALSE(intersects_any(c, b.events));
        EXPECT_LE(c.start_s + c.length_s, 100.0 + 1e-9);
    }
}

TEST(Sampling, ClipsOfAClassDoNotOverlapAndShortSupplyTruncates) {
    // Room for at most 4 disjoint 2.5 s clips inside a 10 s event.
    const AnnotationSet a{"s", "c", 100, {nns(20, 30)}};
    const auto pos = of_class(sample_clips(a, {80, 0}, 11), ClipClass::Nns);
    EXPECT_LE(pos.size(), 4u);
    EXPECT_GE(pos.size(), 1u);
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            EXPECT_FALSE(pos[i].start_s < pos[j].start_s + 2.5 && pos[j].start_s < pos[i].start_s + 2.5);
}

TEST(Sampling, MixedClipsContainATransition) {
    const AnnotationSet a{"s", "c", 600, {nns(100, 130), nns(400, 420)}};
    const auto mixed = of_class(sample_clips(a, {0, 0, 2.5, 5, 60}, 9), ClipClass::Mixed);
    ASSERT_FALSE(mixed.empty());
    for (const auto& c : mixed) {
        EXPECT_DOUBLE_EQ(c.length_s, 60.0);
        bool has_boundary = false;
        for (const auto& e : a.events)
            for (double b : {e.start_s, e.end_s}) has_boundary |= b > c.start_s && b < c.start_s + c.length_s;
        EXPECT_TRUE(has_boundary);
        EXPECT_LE(c.start_s + c.length_s, 600.0);
    }
}

TEST(Manifest, RoundTrip) {
    TempDir dir;
    const AnnotationSet a{"subj", "c", 300, {nns(10, 40), nns(100, 160)}};
    const ClipManifest m = sample_clips(a, {5, 5, 2.5, 1, 60}, 21);
    write_manifest(m, dir / "m.csv");
    const ClipManifest r = read_manifest(dir / "m.csv");
    EXPECT_EQ(r.entries, m.entries);
    EXPECT_EQ(r.seed, 21u);
    EXPECT_EQ(parse_clip_class("non-nns"), ClipClass::NonNns);
    EXPECT_THROW(parse_clip_class("maybe"), ValidationError);
}
