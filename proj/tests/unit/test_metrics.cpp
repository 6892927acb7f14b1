#include <gtest/gtest.h>

#include <cmath>

#include "nnseg/error.hpp"
#include "nnseg/metrics.hpp"
#include "nnseg/rng.hpp"
#include "test_support.hpp"

using namespace nnseg;

namespace {

Event ev(double s, double e) { return {s, e, EventLabel::Nns, 1.0}; }

EventList random_events(Rng& rng, int max_count) {
    EventList out;
    const int n = static_cast<int>(rng.below(max_count + 1));
    for (int i = 0; i < n; ++i) {
        const double s = 0.5 * rng.below(60);
        out.push_back(ev(s, s + 0.5 * (1 + rng.below(16))));
    }
    return out;
}

} // namespace

TEST(Iou, HandCases) {
    EXPECT_DOUBLE_EQ(interval_iou(ev(0, 10), ev(0, 10)), 1.0);
    EXPECT_DOUBLE_EQ(interval_iou(ev(0, 10), ev(20, 30)), 0.0);
    EXPECT_DOUBLE_EQ(interval_iou(ev(0, 10), ev(10, 30)), 0.0);
    EXPECT_NEAR(interval_iou(ev(0, 10), ev(5, 15)), 0.3333, 5e-5);
    EXPECT_NEAR(nnseg::test::tick_iou(ev(0, 10), ev(5, 15)), 0.3333, 5e-5);
}

TEST(Iou, AgreesWithTickCountingAndIsSymmetric) {
    Rng rng(1);
    for (int i = 0; i < 300; ++i) {
        const double as = 0.001 * rng.below(5000), bs = 0.001 * rng.below(5000);
        const Event a = ev(as, as + 0.001 * (1 + rng.below(3000))), b = ev(bs, bs + 0.001 * (1 + rng.below(3000)));
        const double iou = interval_iou(a, b);
        EXPECT_NEAR(iou, nnseg::test::tick_iou(a, b), 1e-9);
        EXPECT_EQ(iou, interval_iou(b, a));
        EXPECT_GE(iou, 0.0);
        EXPECT_LE(iou, 1.0);
    }
}

TEST(Match, HandCases) {
    const auto exact = match_events({ev(0, 10)}, {ev(0, 10)}, 0.5);
    ASSERT_EQ(exact.size(), 1u);
    EXPECT_DOUBLE_EQ(exact[0].iou, 1.0);

    const auto split = match_events({ev(0, 4), ev(6, 10)}, {ev(0, 10)}, 0.3);
    ASSERT_EQ(split.size(), 1u);
    EXPECT_EQ(split[0].pred, 0u);
    EXPECT_NEAR(split[0].iou, 0.4, 1e-12);

    EXPECT_TRUE(match_events({}, {ev(0, 5)}, 0.1).empty());
}

TEST(Match, HighestIouNotConfidenceWins) {
    EventList pred{ev(0, 6), ev(1, 9)};
    pred[0].confidence = 0.99;
    pred[1].confidence = 0.1;
    const auto m = match_events(pred, {ev(1, 10)}, 0.1);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].pred, 1u);
}

TEST(Match, EqualsExhaustiveReference) {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const EventList p = random_events(rng, 5), g = random_events(rng, 5);
        for (double t : {0.1, 0.3, 0.5}) {
            std::vector<std::pair<std::size_t, std::size_t>> got;
            for (const auto& m : match_events(p, g, t)) got.emplace_back(m.pred, m.gt);
            std::sort(got.begin(), got.end());
            ASSERT_EQ(got, nnseg::test::brute_force_match(p, g, t)) << "trial " << trial << " t=" << t;
        }
    }
}

TEST(PrecisionRecall, HandCases) {
    auto pr = precision_recall({ev(0, 3)}, {ev(0, 3)}, 0.5);
    EXPECT_DOUBLE_EQ(pr.precision, 1.0);
    EXPECT_DOUBLE_EQ(pr.recall, 1.0);
    pr = precision_recall({ev(0, 4), ev(6, 10)}, {ev(0, 10)}, 0.3);
    EXPECT_DOUBLE_EQ(pr.precision, 0.5);
    EXPECT_DOUBLE_EQ(pr.recall, 1.0);
    pr = precision_recall(EventList{}, EventList{}, 0.5);
    EXPECT_DOUBLE_EQ(pr.precision, 1.0);
    EXPECT_DOUBLE_EQ(pr.recall, 1.0);
    pr = precision_recall(EventList{}, {ev(0, 1)}, 0.5);
    EXPECT_DOUBLE_EQ(pr.precision, 1.0);
    EXPECT_DOUBLE_EQ(pr.recall, 0.0);
}

TEST(PrecisionRecall, MonotoneInThreshold) {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const EventList p = random_events(rng, 5), g = random_events(rng, 5);
        PrecisionRecall prev{2.0, 2.0};
        for (double t = 0.05; t <= 1.0; t += 0.05) {
            const auto pr = precision_recall(p, g, t);
            EXPECT_LE(pr.precision, prev.precision + 1e-12);
            EXPECT_LE(pr.recall, prev.recall + 1e-12);
            prev = pr;
        }
    }
}

TEST(Report, SubjectsWeighEqually) {
    SubjectClips clips;
    clips["s1"] = {{{ev(0, 5)}, {ev(0, 5)}}};
    // s2: many clips, precision 0.5 overall.
    for (int i = 0; i < 10; ++i) clips["s2"].push_back({{ev(0, 5), ev(20, 25)}, {ev(0, 5)}});
    const EvalReport r = ap_ar_report(clips);
    for (double t : kDefaultIouThresholds) {
        EXPECT_DOUBLE_EQ(r.at(t).ap, 0.75);
        EXPECT_DOUBLE_EQ(r.at(t).ar, 1.0);
    }
    EXPECT_EQ(r.rows.size(), 6u);
    EXPECT_EQ(r.rows[3].counts, (MatchCounts{10, 10, 0}));
}

TEST(Report, PerfectPredictionsAndEmptyMap) {
    SubjectClips clips{{"x", {{{ev(1, 2), ev(5, 8)}, {ev(1, 2), ev(5, 8)}}}}};
    const EvalReport r = ap_ar_report(clips);
    for (const auto& s : r.summary) {
        EXPECT_DOUBLE_EQ(s.ap, 1.0);
        EXPECT_DOUBLE_EQ(s.ar, 1.0);
    }
    EXPECT_THROW(ap_ar_report({}), ValidationError);
    EXPECT_THROW(ap_ar_report(clips, {0.0}), ValidationError);
}

TEST(Report, PoolsCountsWithinSubject) {
    // Clip ratios 1/1 and 0/3 average to 0.5, pooled counts give 1/4.
    SubjectClips clips;
    clips["s"] = {{{ev(0, 1)}, {ev(0, 1)}}, {{ev(10, 11), ev(20, 21), ev(30, 31)}, {}}};
    EXPECT_DOUBLE_EQ(ap_ar_report(clips).at(0.5).ap, 0.25);
}

TEST(Report, CsvLayout) {
    SubjectClips clips{{"s", {{{ev(0, 4), ev(6, 10)}, {ev(0, 10)}}}}};
    const std::string csv = format_report(ap_ar_report(clips, {0.3}), {"nnseg evaluate"});
    EXPECT_EQ(csv,
              "# nnseg evaluate\n"
              "subject,t,precision,recall,tp,fp,fn\n"
              "s,0.3,0.500000,1.000000,1,1,0\n"
              "ALL,0.3,0.500000,1.000000,,,\n");
}

TEST(Accuracy, HandCases) {
    EXPECT_DOUBLE_EQ(binary_accuracy(std::vector<double>{1, 0, 1}, {1, 0, 1}), 1.0);
    EXPECT_DOUBLE_EQ(binary_accuracy(std::vector<double>{0.5, 0.5}, {1, 1}), 1.0);
    EXPECT_NEAR(binary_accuracy(std::vector<double>{0.9, 0.2, 0.7}, {1, 1, 0}), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(binary_accuracy(std::vector<double>{0.9}, {1, 0}), ValidationError);
    EXPECT_THROW(binary_accuracy(std::vector<double>{}, {}), ValidationError);
}

TEST(Kappa, HandCaseFromContingencyTable) {
    // TP=2, FP=0, FN=2, TN=6: po = 0.8, pe = 0.4*0.2 + 0.6*0.8 = 0.56 -> 0.24/0.44.
    const std::vector<std::uint8_t> a{1, 1, 1, 1, 0, 0, 0, 0, 0, 0}, b{1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
    const double k = cohen_kappa(a, b);
    EXPECT_NEAR(k, 0.24 / 0.44, 1e-12);
    EXPECT_NEAR(k, nnseg::test::reference_kappa({1, 1, 1, 1, 0, 0, 0, 0, 0, 0}, {1, 1, 0, 0, 0, 0, 0, 0, 0, 0}), 1e-12);
    EXPECT_EQ(std::round(k * 1e4) / 1e4, 0.5455);
    // Same codings through incidence windows over 100 s.
    EXPECT_NEAR(cohen_kappa_incidence({ev(0, 40)}, {ev(3, 17)}, 100.0), k, 1e-12);
}

TEST(Kappa, PerfectAndSystematicDisagreement) {
    EXPECT_DOUBLE_EQ(cohen_kappa_incidence({ev(3, 14), ev(50, 52)}, {ev(3, 14), ev(50, 52)}, 60.0), 1.0);
    EXPECT_DOUBLE_EQ(cohen_kappa_incidence({}, {}, 60.0), 1.0);
    EXPECT_LE(cohen_kappa_incidence({ev(0, 60)}, {}, 60.0), 0.0);
}

TEST(Kappa, MatchesReferenceAndIsSymmetric) {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> a(12), b(12);
        std::vector<int> ai(12), bi(12);
        for (int i = 0; i < 12; ++i) {
            a[i] = ai[i] = rng.bernoulli(0.4);
            b[i] = bi[i] = rng.bernoulli(0.4);
        }
        EXPECT_NEAR(cohen_kappa(a, b), nnseg::test::reference_kappa(ai, bi), 1e-12);
        EXPECT_DOUBLE_EQ(cohen_kappa(a, b), cohen_kappa(b, a));
    }
}

TEST(Kappa, IncidenceBins) {
    const auto bins = incidence_bins({ev(9.5, 10.0), ev(25, 26)}, 35.0, 10.0);
    EXPECT_EQ(bins, (std::vector<std::uint8_t>{1, 0, 1, 0}));
    // Touching a bin boundary is not an overlap.
    EXPECT_EQ(incidence_bins({ev(5, 10)}, 20.0), (std::vector<std::uint8_t>{1, 0}));
}
