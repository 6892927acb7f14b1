#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nnseg/classifier.hpp"
#include "nnseg/events.hpp"

namespace nnseg {

/// |a ∩ b| / |a ∪ b| on the time axis; 0 for disjoint intervals.
double interval_iou(const Event& a, const Event& b);

struct Match {
    std::size_t pred = 0;
    std::size_t gt = 0;
    double iou = 0.0;
    bool operator==(const Match&) const = default;
};

/// Greedy one-to-one matching: candidate pairs with IoU >= t are taken in
/// order of descending IoU, ties broken by earlier prediction start, then
/// earlier ground-truth start, then lower indices. Returned in selection order.
std::vector<Match> match_events(const EventList& pred, const EventList& gt, double t);

struct MatchCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    MatchCounts& operator+=(const MatchCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const MatchCounts&) const = default;
};

struct PrecisionRecall {
    double precision = 1.0;
    double recall = 1.0;
};

MatchCounts match_counts(const EventList& pred, const EventList& gt, double t);
/// Precision is 1 with no predictions; recall is 1 with no ground truth.
PrecisionRecall precision_recall(const MatchCounts& c);
PrecisionRecall precision_recall(const EventList& pred, const EventList& gt, double t);

struct ClipPair {
    EventList pred;
    EventList gt;
};

/// subject -> that subject's clips
using SubjectClips = std::map<std::string, std::vector<ClipPair>>;

inline const std::vector<double> kDefaultIouThresholds{0.1, 0.3, 0.5};

struct SubjectRow {
    std::string subject;
    double t = 0.0;
    PrecisionRecall pr;
    MatchCounts counts;
};

struct ThresholdSummary {
    double t = 0.0;
    double ap = 0.0;
    double ar = 0.0;
};

struct EvalReport {
    std::vector<SubjectRow> rows;         ///< subject-major, thresholds in input order
    std::vector<ThresholdSummary> summary; ///< one per threshold

    const ThresholdSummary& at(double t) const;
};

/// Counts are pooled over each subject's clips before taking ratios; AP_t and
/// AR_t are unweighted means over subjects.
EvalReport ap_ar_report(const SubjectClips& per_subject, const std::vector<double>& thresholds = kDefaultIouThresholds);

/// CSV `subject,t,precision,recall,tp,fp,fn` followed by `ALL,t,AP,AR,,,` rows.
std::string format_report(const EvalReport& report, const std::vector<std::string>& header_comments = {});
void write_report(const EvalReport& report, const std::filesystem::path& path,
                  const std::vector<std::string>& header_comments = {});

/// Fraction of windows where (score >= threshold) equals the label.
double binary_accuracy(const std::vector<WindowScore>& scores, const std::vector<std::uint8_t>& labels,
                       double threshold = 0.5);
double binary_accuracy(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                       double threshold = 0.5);

/// Bin i covers [i*w, min((i+1)*w, duration)); a bin is marked when any event
/// overlaps it with positive length.
std::vector<std::uint8_t> incidence_bins(const EventList& events, double duration_s, double window_s = 10.0);

/// Cohen's kappa of two binary codings; 1 when chance agreement is 1.
double cohen_kappa(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);
double cohen_kappa_incidence(const EventList& a, const EventList& b, double duration_s, double window_s = 10.0);

} // namespace nnseg
