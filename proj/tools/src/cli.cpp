#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "config.hpp"
#include "nnseg/annotations.hpp"
#include "nnseg/classifier.hpp"
#include "nnseg/error.hpp"
#include "nnseg/metrics.hpp"
#include "nnseg/segmenter.hpp"
#include "nnseg/stabilizer.hpp"
#include "nnseg/synth.hpp"
#include "nnseg/text.hpp"
#include "nnseg/tracker.hpp"
#include "nnseg/video_io.hpp"

namespace nnseg::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kStabilizeKeys{
    "fps",          "seed",           "smooth_window_s",      "crop_margin",       "crop_size",
    "corners_max",  "corners_quality", "corners_min_distance", "min_valid_corners", "lk_levels",
    "lk_window",    "lk_iterations",  "mosse_learning_rate",  "mosse_epsilon",     "mosse_psr_threshold"};
const std::vector<std::string> kAugmentKeys{"augment", "augment_rotation_deg", "augment_scale_min",
                                            "augment_scale_max", "augment_flip_p"};
const std::vector<std::string> kFlowKeys{"fps",         "jobs",    "flow_levels", "flow_pyr_scale", "flow_window",
                                         "flow_iterations", "poly_n", "poly_sigma", "hsv_norm",      "hsv_max_mag"};
const std::vector<std::string> kWindowKeys{"backend", "window_s", "stride_s", "mode"};
const std::vector<std::string> kEventKeys{"threshold", "min_dur_s", "merge_gap_s"};

// A frame directory, or an output directory of synth/stabilize holding frames/.
FrameSequence load_video(const fs::path& dir, double fps) {
    const fs::path frames = dir / "frames";
    return load_sequence(fs::is_directory(frames) ? frames : dir, fps);
}

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts)
        for (const auto& k : p)
            if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    return out;
}

std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

// One subcommand: its CLI11 app, the config keys it reads, and its action.
struct Command {
    CLI::App* app = nullptr;
    std::vector<std::string> keys;
    std::map<std::string, std::string> flags;
    std::string config_file;
    std::function<void(const Config&)> action;

    Config resolve() const {
        Config c;
        if (!config_file.empty()) c.load_file(config_file);
        for (const auto& k : keys) {
            const auto* opt = app->get_option("--" + dashed(k));
            if (opt->count() > 0) c.set(k, flags.at(k), "--" + dashed(k));
        }
        return c;
    }

    bool given(const std::string& key) const { return app->get_option("--" + dashed(key))->count() > 0; }
};

Command& add_command(CLI::App& root, std::vector<std::unique_ptr<Command>>& commands, const std::string& name,
                     const std::string& description, std::vector<std::string> keys) {
    auto cmd = std::make_unique<Command>();
    cmd->app = root.add_subcommand(name, description);
    cmd->keys = std::move(keys);
    cmd->app->add_option("--config", cmd->config_file, "flat key=value file; flags override its values");
    for (const auto& k : cmd->keys) {
        const KeySpec& spec = key_spec(k);
        std::string help = spec.help + " [default: " + (spec.default_value.empty() ? "none" : spec.default_value) + "]";
        cmd->app->add_option("--" + dashed(k), cmd->flags[k], help);
    }
    commands.push_back(std::move(cmd));
    return *commands.back();
}

std::vector<std::string> header(const std::string& command, const Config& c, const std::vector<std::string>& keys,
                                const std::vector<std::pair<std::string, std::string>>& inputs) {
    std::vector<std::string> out{"nnseg " + command};
    for (const auto& [name, value] : inputs)
        if (!value.empty()) out.push_back(name + "=" + value);
    for (const auto& line : c.describe(keys)) out.push_back(line);
    return out;
}

std::string with_comments(const std::vector<std::string>& comments, const std::string& body) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    return out + body;
}

std::string source_name(const std::string& explicit_name, const fs::path& video) {
    if (!explicit_name.empty()) return explicit_name;
    fs::path p = video;
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

// Ground truth from an annotation CSV (nns events of the first coder per
// subject) or from an events CSV.
struct GroundTruth {
    std::map<std::string, EventList> events;
    std::map<std::string, double> durations;
};

GroundTruth load_ground_truth(const fs::path& path) {
    const std::string content = read_text_file(path);
    std::string first;
    for (const auto& line : split(content, '\n')) {
        const std::string t = trim(line);
        if (!t.empty() && t.front() != '#') {
            first = t;
            break;
        }
    }
    GroundTruth gt;
    if (first == "subject,coder,label,start_s,end_s") {
        for (const auto& set : parse_annotation_sets(path)) {
            if (gt.events.count(set.subject)) continue;
            gt.events[set.subject] = set.with_label(EventLabel::Nns);
            gt.durations[set.subject] = set.duration_s;
        }
        return gt;
    }
    for (const auto& e : read_events(path))
        if (e.event.label == EventLabel::Nns) gt.events[e.source].push_back(e.event);
    for (auto& [source, list] : gt.events)
        std::sort(list.begin(), list.end(), [](const Event& a, const Event& b) { return a.start_s < b.start_s; });
    return gt;
}

std::map<std::string, std::string> load_subject_map(const fs::path& path) {
    std::map<std::string, std::string> out;
    const CsvTable t = read_csv(path, {"source", "subject"});
    for (const auto& row : t.rows) out[row[0]] = row[1];
    return out;
}

AugmentParams augment_params(const Config& c) {
    AugmentParams a;
    a.rotation_deg = c.real("augment_rotation_deg");
    a.scale_min = c.real("augment_scale_min");
    a.scale_max = c.real("augment_scale_max");
    a.flip_probability = c.real("augment_flip_p");
    a.seed = static_cast<std::uint64_t>(c.integer("seed"));
    return a;
}

std::unique_ptr<ScoreBackend> backend_from(const Config& c) {
    if (c.text("backend").empty()) throw ValidationError("--backend is required");
    return make_backend(c.text("backend"));
}

std::vector<WindowScore> classify_video(const FrameSequence& clip, const std::string& source,
                                        const ScoreBackend& backend, const Config& c) {
    AggregationMode mode = aggregation_mode(c);
    if (mode == AggregationMode::Smoothed) mode = AggregationMode::Sliding;
    CoverParams cover{c.real("window_s"), c.real("stride_s")};
    const auto windows = cover_windows(clip.duration_s(), mode, cover);
    FlowSequence flow;
    if (backend.needs_frames()) flow = clip_flow_encode(clip, flow_params(c));
    return score_windows(flow, clip.fps, source, windows, backend, cover.window_s, c.integer("jobs"));
}

std::string track_csv(const BoxTrack& track) {
    std::string out = "frame,x,y,w,h,raw_x,raw_y,smooth_x,smooth_y\n";
    for (std::size_t i = 0; i < track.boxes.size(); ++i) {
        const auto& b = track.boxes[i];
        const Point2 r = track.raw.empty() ? Point2{} : track.raw[i];
        const Point2 s = track.smoothed.empty() ? Point2{} : track.smoothed[i];
        out += std::to_string(i) + "," + format_fixed(b.x, 3) + "," + format_fixed(b.y, 3) + "," + format_fixed(b.w, 3) +
               "," + format_fixed(b.h, 3) + "," + format_fixed(r.x, 3) + "," + format_fixed(r.y, 3) + "," +
               format_fixed(s.x, 3) + "," + format_fixed(s.y, 3) + "\n";
    }
    return out;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"nnseg: non-nutritive sucking detection and segmentation in infant face videos"};
    app.require_subcommand(1);
    app.fallthrough(false);
    std::vector<std::unique_ptr<Command>> commands;

    // synth --------------------------------------------------------------
    fs::path synth_spec, synth_out;
    std::string synth_format = "pgm";
    {
        auto& cmd = add_command(app, commands, "synth", "render a synthetic face video with ground-truth bursts",
                                {"seed"});
        cmd.app->add_option("--spec", synth_spec, "flat key=value synthesis spec")->required();
        cmd.app->add_option("--out", synth_out, "output directory")->required();
        cmd.app->add_option("--format", synth_format, "frame format")->check(CLI::IsMember({"pgm", "png"}));
        cmd.action = [&, c = &cmd](const Config& cfg) {
            SynthSpec spec = read_synth_spec(synth_spec);
            if (c->given("seed") || !c->config_file.empty()) spec.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
            const SynthVideo video = generate_video(spec);
            write_sequence(video.video, synth_out / "frames", synth_format == "png" ? ImageFormat::Png : ImageFormat::Pgm);
            write_annotations(video.annotations, synth_out / "annotations.csv");
            write_detections({{0, video.faces.front()}}, synth_out / "detections.csv");
            DetectionMap faces;
            for (std::size_t i = 0; i < video.faces.size(); ++i) faces[static_cast<int>(i)] = video.faces[i];
            write_detections(faces, synth_out / "faces.csv");
            std::string spec_text = "# nnseg synth\n";
            for (const auto& [k, v] : synth_spec_keys(spec)) spec_text += k + "=" + v + "\n";
            write_text_file(synth_out / "spec.txt", spec_text);
            std::printf("synth: %zu frames, %zu bursts -> %s\n", video.video.size(), video.annotations.events.size(),
                        synth_out.string().c_str());
        };
    }

    // stabilize ----------------------------------------------------------
    fs::path stab_video, stab_detections, stab_out;
    std::string stab_format = "pgm";
    {
        auto keys = concat({kStabilizeKeys, kAugmentKeys});
        auto& cmd = add_command(app, commands, "stabilize", "propagate face boxes and write a stabilized face crop", keys);
        cmd.app->add_option("--video", stab_video, "frame directory")->required();
        cmd.app->add_option("--detections", stab_detections, "detections CSV (frame,x,y,w,h)")
            ->required();
        cmd.app->add_option("--out", stab_out, "output directory")->required();
        cmd.app->add_option("--format", stab_format, "frame format")->check(CLI::IsMember({"pgm", "png"}));
        cmd.action = [&, keys](const Config& cfg) {
            const FrameSequence seq = load_video(stab_video, cfg.real("fps"));
            StabilizeResult r = stabilize(seq, read_detections(stab_detections), stabilize_params(cfg));
            if (cfg.text("augment") == "on") r.crop = augment(r.crop, augment_params(cfg));
            write_sequence(r.crop, stab_out / "frames", stab_format == "png" ? ImageFormat::Png : ImageFormat::Pgm);
            const auto comments = header("stabilize", cfg, keys,
                                         {{"video", stab_video.string()}, {"detections", stab_detections.string()}});
            write_text_file(stab_out / "track.csv", with_comments(comments, track_csv(r.track)));
            std::printf("stabilize: %zu frames -> %s\n", r.crop.size(), stab_out.string().c_str());
        };
    }

    // flow ---------------------------------------------------------------
    fs::path flow_video, flow_out;
    bool flow_images = true;
    {
        auto& cmd = add_command(app, commands, "flow", "dense optical flow and HSV encoding of a clip", kFlowKeys);
        cmd.app->add_option("--video", flow_video, "frame directory")->required();
        cmd.app->add_option("--out", flow_out, "output directory")->required();
        cmd.app->add_flag("!--no-images", flow_images, "skip .flo and HSV PNG files, write only flow.csv");
        cmd.action = [&](const Config& cfg) {
            const FrameSequence seq = load_video(flow_video, cfg.real("fps"));
            const FlowSequence flow = clip_flow_encode(seq, flow_params(cfg));
            std::string csv = "pair,mean_u,mean_v,mean_magnitude,max_magnitude\n";
            for (std::size_t i = 0; i < flow.fields.size(); ++i) {
                const auto& f = flow.fields[i];
                double su = 0, sv = 0, sm = 0, mx = 0;
                for (std::size_t p = 0; p < f.u.size(); ++p) {
                    const double u = f.u.data()[p], v = f.v.data()[p];
                    const double m = std::hypot(u, v);
                    su += u;
                    sv += v;
                    sm += m;
                    mx = std::max(mx, m);
                }
                const double n = static_cast<double>(f.u.size());
                csv += std::to_string(i) + "," + format_fixed(su / n, 5) + "," + format_fixed(sv / n, 5) + "," +
                       format_fixed(sm / n, 5) + "," + format_fixed(mx, 5) + "\n";
                if (flow_images) {
                    char name[32];
                    std::snprintf(name, sizeof(name), "flow_%06zu.flo", i);
                    fs::create_directories(flow_out);
                    write_flo(f, flow_out / name);
                    std::snprintf(name, sizeof(name), "hsv_%06zu.png", i);
                    write_png_rgb(hsv_to_rgb(flow.hsv_frames[i]), flow_out / name);
                }
            }
            write_text_file(flow_out / "flow.csv",
                            with_comments(header("flow", cfg, kFlowKeys, {{"video", flow_video.string()}}), csv));
            std::printf("flow: %zu fields -> %s\n", flow.fields.size(), flow_out.string().c_str());
        };
    }

    // classify -----------------------------------------------------------
    fs::path cls_video, cls_out;
    std::string cls_source;
    {
        auto keys = concat({kFlowKeys, kWindowKeys});
        auto& cmd = add_command(app, commands, "classify", "score every covering window of a face-crop video", keys);
        cmd.app->add_option("--video", cls_video, "face-crop frame directory")->required();
        cmd.app->add_option("--source", cls_source, "source id written to the scores [default: directory name]");
        cmd.app->add_option("--out", cls_out, "scores CSV")->required();
        cmd.action = [&, keys](const Config& cfg) {
            const FrameSequence clip = load_video(cls_video, cfg.real("fps"));
            const auto backend = backend_from(cfg);
            const std::string source = source_name(cls_source, cls_video);
            const auto scores = classify_video(clip, source, *backend, cfg);
            write_scores(scores, cls_out, header("classify", cfg, keys, {{"video", cls_video.string()}}));
            std::printf("classify: %zu windows -> %s\n", scores.size(), cls_out.string().c_str());
        };
    }

    // segment ------------------------------------------------------------
    fs::path seg_video, seg_detections, seg_out, seg_svg, seg_gt, seg_scores_out;
    std::string seg_source;
    double seg_duration = 0.0;
    {
        auto keys = concat({kFlowKeys, kWindowKeys, kEventKeys, kStabilizeKeys});
        auto& cmd = add_command(app, commands, "segment", "segment a video (or replayed scores) into NNS events", keys);
        cmd.app->add_option("--video", seg_video, "face-crop frame directory (raw video with --detections)");
        cmd.app->add_option("--detections", seg_detections, "detections CSV; stabilizes --video first");
        cmd.app->add_option("--source", seg_source, "source id [default: video directory name, or every source in the score file]");
        cmd.app->add_option("--duration", seg_duration, "video duration for score replay [default: last score end]");
        cmd.app->add_option("--out", seg_out, "events CSV")->required();
        cmd.app->add_option("--svg", seg_svg, "timeline SVG [default: events path with .svg]");
        cmd.app->add_option("--gt", seg_gt, "ground truth drawn in the timeline (annotation or events CSV)");
        cmd.app->add_option("--scores-out", seg_scores_out, "also write the window scores");
        cmd.action = [&, keys](const Config& cfg) {
            const auto backend = backend_from(cfg);
            const SegmentConfig sc = segment_config(cfg);
            std::vector<std::pair<std::string, SegmentResult>> results;
            if (!seg_video.empty()) {
                const FrameSequence seq = load_video(seg_video, cfg.real("fps"));
                const std::string source = source_name(seg_source, seg_video);
                if (!seg_detections.empty())
                    results.emplace_back(source, segment_raw_video(seq, read_detections(seg_detections), source, *backend,
                                                                   stabilize_params(cfg), sc));
                else
                    results.emplace_back(source, segment_video(seq, source, *backend, sc));
            } else {
                const auto* replay = dynamic_cast<const ScoreFileBackend*>(backend.get());
                if (!replay) throw ValidationError("segment: --video is required unless the backend is scorefile:");
                const auto all = read_scores(cfg.text("backend").substr(std::string("scorefile:").size()));
                for (const auto& source : replay->sources()) {
                    if (!seg_source.empty() && source != seg_source) continue;
                    double duration = seg_duration;
                    if (duration <= 0.0)
                        for (const auto& s : all)
                            if (s.source == source) duration = std::max(duration, s.end_s);
                    results.emplace_back(source, segment_scores(duration, source, *backend, sc));
                }
                if (results.empty()) throw ValidationError("segment: no matching source in the score file");
            }

            const auto comments = header("segment", cfg, keys,
                                         {{"video", seg_video.string()}, {"detections", seg_detections.string()}});
            std::vector<SourcedEvent> events;
            std::vector<WindowScore> scores;
            for (const auto& [source, r] : results) {
                for (const auto& e : r.events) events.push_back({source, e});
                scores.insert(scores.end(), r.scores.begin(), r.scores.end());
            }
            write_events(events, seg_out, comments);
            if (!seg_scores_out.empty()) write_scores(scores, seg_scores_out, comments);

            GroundTruth gt;
            if (!seg_gt.empty()) gt = load_ground_truth(seg_gt);
            std::vector<TimelineLane> lanes;
            for (const auto& [source, r] : results)
                lanes.push_back({source, r.track.duration_s, gt.events.count(source) ? gt.events.at(source) : EventList{},
                                 r.events});
            fs::path svg = seg_svg.empty() ? fs::path(seg_out).replace_extension(".svg") : seg_svg;
            write_text_file(svg, render_timeline_svg(lanes));
            std::printf("segment: %zu events -> %s\n", events.size(), seg_out.string().c_str());
        };
    }

    // evaluate -----------------------------------------------------------
    fs::path eval_pred, eval_gt, eval_subjects, eval_out;
    {
        const std::vector<std::string> keys{"iou_thresholds"};
        auto& cmd = add_command(app, commands, "evaluate", "AP_t / AR_t of predicted events against ground truth", keys);
        cmd.app->add_option("--pred", eval_pred, "predicted events CSV")->required();
        cmd.app->add_option("--gt", eval_gt, "ground truth: annotation CSV or events CSV")->required();
        cmd.app->add_option("--subjects", eval_subjects, "CSV source,subject [default: subject = source]");
        cmd.app->add_option("--out", eval_out, "report CSV")->required();
        cmd.action = [&, keys](const Config& cfg) {
            const GroundTruth gt = load_ground_truth(eval_gt);
            const auto pred = group_by_source(read_events(eval_pred));
            const auto subject_of_map = eval_subjects.empty() ? std::map<std::string, std::string>{}
                                                              : load_subject_map(eval_subjects);
            auto subject_of = [&](const std::string& source) {
                const auto it = subject_of_map.find(source);
                return it == subject_of_map.end() ? source : it->second;
            };
            std::map<std::string, ClipPair> clips;
            for (const auto& [source, list] : pred) {
                EventList nns;
                for (const auto& e : list)
                    if (e.label == EventLabel::Nns) nns.push_back(e);
                clips[source].pred = nns;
            }
            for (const auto& [source, list] : gt.events) clips[source].gt = list;
            SubjectClips per_subject;
            for (auto& [source, clip] : clips) per_subject[subject_of(source)].push_back(std::move(clip));
            const EvalReport report = ap_ar_report(per_subject, cfg.reals("iou_thresholds"));
            write_report(report, eval_out,
                         header("evaluate", cfg, keys, {{"pred", eval_pred.string()}, {"gt", eval_gt.string()}}));
            for (const auto& s : report.summary)
                std::printf("t=%s AP=%s AR=%s\n", format_shortest(s.t).c_str(), format_fixed(s.ap, 4).c_str(),
                            format_fixed(s.ar, 4).c_str());
        };
    }

    // sample-clips -------------------------------------------------------
    fs::path samp_ann, samp_out;
    {
        const std::vector<std::string> keys{"seed", "n_pos", "n_neg", "clip_s", "n_mixed", "mixed_clip_s"};
        auto& cmd = add_command(app, commands, "sample-clips", "draw classification / mixed clips from annotations", keys);
        cmd.app->add_option("--annotations", samp_ann, "annotation CSV")->required();
        cmd.app->add_option("--out", samp_out, "manifest CSV")->required();
        cmd.action = [&, keys](const Config& cfg) {
            SamplePolicy policy;
            policy.n_pos = cfg.integer("n_pos");
            policy.n_neg = cfg.integer("n_neg");
            policy.clip_s = cfg.real("clip_s");
            policy.n_mixed = cfg.integer("n_mixed");
            policy.mixed_clip_s = cfg.real("mixed_clip_s");
            const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
            ClipManifest all;
            all.seed = seed;
            std::vector<std::string> seen;
            for (const auto& set : parse_annotation_sets(samp_ann)) {
                // One coder per subject: the first one listed.
                if (std::find(seen.begin(), seen.end(), set.subject) != seen.end()) continue;
                const auto m = sample_clips(set, policy, seed + seen.size());
                seen.push_back(set.subject);
                all.entries.insert(all.entries.end(), m.entries.begin(), m.entries.end());
            }
            write_manifest(all, samp_out, header("sample-clips", cfg, keys, {{"annotations", samp_ann.string()}}));
            std::printf("sample-clips: %zu clips -> %s\n", all.entries.size(), samp_out.string().c_str());
        };
    }

    // kappa --------------------------------------------------------------
    fs::path kap_ann, kap_a, kap_b, kap_out;
    {
        const std::vector<std::string> keys{"kappa_window_s"};
        auto& cmd = add_command(app, commands, "kappa", "Cohen's kappa of two coders on incidence windows", keys);
        cmd.app->add_option("--annotations", kap_ann, "annotation CSV holding two coders per subject");
        cmd.app->add_option("--a", kap_a, "first coder's annotation CSV");
        cmd.app->add_option("--b", kap_b, "second coder's annotation CSV");
        cmd.app->add_option("--out", kap_out, "kappa CSV")->required();
        cmd.action = [&, keys](const Config& cfg) {
            std::vector<AnnotationSet> sets;
            if (!kap_ann.empty()) {
                if (!kap_a.empty() || !kap_b.empty()) throw ValidationError("kappa: use --annotations or --a/--b, not both");
                sets = parse_annotation_sets(kap_ann);
            } else {
                if (kap_a.empty() || kap_b.empty()) throw ValidationError("kappa: need --annotations or both --a and --b");
                for (const auto& p : {kap_a, kap_b})
                    for (auto& s : parse_annotation_sets(p)) sets.push_back(std::move(s));
            }
            std::map<std::string, std::vector<const AnnotationSet*>> by_subject;
            std::vector<std::string> order;
            for (const auto& s : sets) {
                if (!by_subject.count(s.subject)) order.push_back(s.subject);
                by_subject[s.subject].push_back(&s);
            }
            const double window = cfg.real("kappa_window_s");
            std::string csv = "subject,coder_a,coder_b,bins,kappa\n";
            for (const auto& subject : order) {
                const auto& pair = by_subject[subject];
                if (pair.size() != 2)
                    throw ValidationError("kappa: subject '" + subject + "' has " + std::to_string(pair.size()) +
                                          " coders, expected 2");
                if (pair[0]->duration_s != pair[1]->duration_s)
                    throw ValidationError("kappa: coders of '" + subject + "' disagree on the duration");
                const double duration = pair[0]->duration_s;
                const double k = cohen_kappa_incidence(pair[0]->with_label(EventLabel::Nns),
                                                       pair[1]->with_label(EventLabel::Nns), duration, window);
                const auto bins = incidence_bins({}, duration, window).size();
                csv += subject + "," + pair[0]->coder + "," + pair[1]->coder + "," + std::to_string(bins) + "," +
                       format_fixed(k, 4) + "\n";
                std::printf("%s: kappa=%s over %zu bins\n", subject.c_str(), format_fixed(k, 4).c_str(), bins);
            }
            write_text_file(kap_out, with_comments(header("kappa", cfg, keys,
                                                          {{"annotations", kap_ann.string()},
                                                           {"a", kap_a.string()},
                                                           {"b", kap_b.string()}}),
                                                   csv));
        };
    }

    // train-baseline -----------------------------------------------------
    fs::path tr_manifest, tr_root, tr_out;
    {
        auto keys = concat({kFlowKeys, {"window_s", "train_learning_rate", "train_epochs", "train_l2"}});
        auto& cmd = add_command(app, commands, "train-baseline",
                                "fit the spectral logistic baseline on manifest clips of face-crop videos", keys);
        cmd.app->add_option("--manifest", tr_manifest, "clip manifest CSV")->required();
        cmd.app->add_option("--video-root", tr_root, "directory holding one face-crop video per source")
            ->required();
        cmd.app->add_option("--out", tr_out, "model file")->required();
        cmd.action = [&](const Config& cfg) {
            const ClipManifest manifest = read_manifest(tr_manifest);
            std::map<std::string, std::pair<double, FlowSequence>> flows;
            std::vector<LabeledFeatures> data;
            const double window_s = cfg.real("window_s");
            for (const auto& e : manifest.entries) {
                if (e.cls == ClipClass::Mixed) continue;
                if (!flows.count(e.source)) {
                    const FrameSequence seq = load_video(tr_root / e.source, cfg.real("fps"));
                    flows[e.source] = {seq.fps, clip_flow_encode(seq, flow_params(cfg))};
                }
                const auto& [fps, flow] = flows.at(e.source);
                const Window w = make_window(flow, fps, e.source, e.start_s, window_s);
                data.push_back({extract_features(w), e.cls == ClipClass::Nns ? 1 : 0});
            }
            TrainParams tp{cfg.real("train_learning_rate"), cfg.integer("train_epochs"), cfg.real("train_l2")};
            const BaselineModel model = train_baseline(data, tp);
            save_baseline(model, tr_out);
            std::size_t correct = 0;
            for (const auto& d : data) correct += (model.probability(d.features) >= 0.5) == (d.label == 1);
            std::printf("train-baseline: %zu clips, training accuracy %s -> %s\n", data.size(),
                        format_fixed(static_cast<double>(correct) / data.size(), 4).c_str(), tr_out.string().c_str());
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (const auto& cmd : commands) {
            if (!cmd->app->parsed()) continue;
            const Config cfg = cmd->resolve();
            cmd->action(cfg);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace nnseg::cli
