#include "nnseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "nnseg/error.hpp"
#include "nnseg/text.hpp"

namespace nnseg {

double interval_iou(const Event& a, const Event& b) {
    const double inter = std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
    if (inter <= 0.0) return 0.0;
    const double uni = std::max(a.end_s, b.end_s) - std::min(a.start_s, b.start_s);
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Match> match_events(const EventList& pred, const EventList& gt, double t) {
    std::vector<Match> candidates;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const double iou = interval_iou(pred[i], gt[j]);
            if (iou > 0.0 && iou >= t) candidates.push_back({i, j, iou});
        }
    std::sort(candidates.begin(), candidates.end(), [&](const Match& a, const Match& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        return std::tie(pred[a.pred].start_s, gt[a.gt].start_s, a.pred, a.gt) <
               std::tie(pred[b.pred].start_s, gt[b.gt].start_s, b.pred, b.gt);
    });

    std::vector<bool> pred_used(pred.size()), gt_used(gt.size());
    std::vector<Match> out;
    for (const auto& m : candidates) {
        if (pred_used[m.pred] || gt_used[m.gt]) continue;
        pred_used[m.pred] = gt_used[m.gt] = true;
        out.push_back(m);
    }
    return out;
}

MatchCounts match_counts(const EventList& pred, const EventList& gt, double t) {
    const std::size_t tp = match_events(pred, gt, t).size();
    return {tp, pred.size() - tp, gt.size() - tp};
}

PrecisionRecall precision_recall(const MatchCounts& c) {
    PrecisionRecall pr;
    if (c.tp + c.fp > 0) pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return pr;
}

PrecisionRecall precision_recall(const EventList& pred, const EventList& gt, double t) {
    return precision_recall(match_counts(pred, gt, t));
}

const ThresholdSummary& EvalReport::at(double t) const {
    for (const auto& s : summary)
        if (std::abs(s.t - t) < 1e-12) return s;
    throw ValidationError("report has no threshold " + format_shortest(t));
}

EvalReport ap_ar_report(const SubjectClips& per_subject, const std::vector<double>& thresholds) {
    if (per_subject.empty()) throw ValidationError("evaluation needs at least one subject");
    if (thresholds.empty()) throw ValidationError("evaluation needs at least one IoU threshold");
    for (double t : thresholds)
        if (!(t > 0.0 && t <= 1.0)) throw ValidationError("IoU threshold must lie in (0,1]");

    EvalReport report;
    for (double t : thresholds) report.summary.push_back({t, 0.0, 0.0});
    for (const auto& [subject, clips] : per_subject) {
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            MatchCounts c;
            for (const auto& clip : clips) c += match_counts(clip.pred, clip.gt, thresholds[k]);
            const PrecisionRecall pr = precision_recall(c);
            report.rows.push_back({subject, thresholds[k], pr, c});
            report.summary[k].ap += pr.precision;
            report.summary[k].ar += pr.recall;
        }
    }
    const double n = static_cast<double>(per_subject.size());
    for (auto& s : report.summary) {
        s.ap /= n;
        s.ar /= n;
    }
    return report;
}

std::string format_report(const EvalReport& report, const std::vector<std::string>& header_comments) {
    std::string out;
    for (const auto& c : header_comments) out += "# " + c + "\n";
    out += "subject,t,precision,recall,tp,fp,fn\n";
    for (const auto& r : report.rows)
        out += r.subject + "," + format_shortest(r.t) + "," + format_fixed(r.pr.precision, 6) + "," +
               format_fixed(r.pr.recall, 6) + "," + std::to_string(r.counts.tp) + "," + std::to_string(r.counts.fp) + "," +
               std::to_string(r.counts.fn) + "\n";
    for (const auto& s : report.summary)
        out += "ALL," + format_shortest(s.t) + "," + format_fixed(s.ap, 6) + "," + format_fixed(s.ar, 6) + ",,,\n";
    return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  const std::vector<std::string>& header_comments) {
    write_text_file(path, format_report(report, header_comments));
}

double binary_accuracy(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels, double threshold) {
    if (scores.size() != labels.size())
        throw ValidationError("accuracy: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                              " labels");
    if (scores.empty()) throw ValidationError("accuracy: no windows");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= threshold) == (labels[i] != 0)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double binary_accuracy(const std::vector<WindowScore>& scores, const std::vector<std::uint8_t>& labels,
                       double threshold) {
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& s : scores) values.push_back(s.score);
    return binary_accuracy(values, labels, threshold);
}

std::vector<std::uint8_t> incidence_bins(const EventList& events, double duration_s, double window_s) {
    if (!(duration_s > 0.0)) throw ValidationError("kappa: duration must be positive");
    if (!(window_s > 0.0)) throw ValidationError("kappa: window must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(duration_s / window_s - 1e-9));
    std::vector<std::uint8_t> bins(std::max<std::size_t>(n, 1), 0);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double lo = static_cast<double>(i) * window_s;
        const double hi = std::min(lo + window_s, duration_s);
        for (const auto& e : events)
            if (std::min(e.end_s, hi) - std::max(e.start_s, lo) > 0.0) {
                bins[i] = 1;
                break;
            }
    }
    return bins;
}

double cohen_kappa(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size() || a.empty()) throw ValidationError("kappa: codings must be nonempty and equally long");
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && b[i]) ++n11;
        else if (a[i]) ++n10;
        else if (b[i]) ++n01;
        else ++n00;
    }
    const double n = static_cast<double>(a.size());
    const double po = (n11 + n00) / n;
    const double a1 = (n11 + n10) / n, b1 = (n11 + n01) / n;
    const double pe = a1 * b1 + (1.0 - a1) * (1.0 - b1);
    if (pe >= 1.0) return 1.0; // both codings constant and equal
    return (po - pe) / (1.0 - pe);
}

double cohen_kappa_incidence(const EventList& a, const EventList& b, double duration_s, double window_s) {
    return cohen_kappa(incidence_bins(a, duration_s, window_s), incidence_bins(b, duration_s, window_s));
}

} // namespace nnseg
