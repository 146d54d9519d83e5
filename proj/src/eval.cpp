#include "dronemon/eval.hpp"

#include <algorithm>
#include <fstream>
#include <locale>
#include <map>
#include <numeric>
#include <set>

#include "dronemon/text.hpp"

namespace fs = std::filesystem;

namespace dronemon {

double iou(const BBox& a, const BBox& b) {
    const double inter = bbox_intersection_area(a, b);
    if (inter <= 0.0) {
        return 0.0;
    }
    return inter / bbox_union_area(a, b);
}

double curve_auc(const Curve& curve) {
    const auto& pts = curve.points;
    if (pts.empty()) {
        return 0.0;
    }
    double area = 0.0;
    CurvePoint prev = pts.front();
    if (curve.kind == CurveKind::precision_recall) {
        prev = {0.0, pts.front().y};
    }
    for (const auto& p : pts) {
        area += (p.x - prev.x) * (p.y + prev.y) * 0.5;
        prev = p;
    }
    return area;
}

PrResult pr_curve(std::span<const std::vector<ScoredBox>> detections,
                  std::span<const std::vector<BBox>> ground_truth, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) {
        throw EvalError("pr_curve: IoU threshold must lie in (0, 1]");
    }
    if (detections.size() != ground_truth.size()) {
        throw EvalError("pr_curve: detections and ground truth cover different image counts");
    }
    PrResult result;
    result.curve.kind = CurveKind::precision_recall;

    struct Ref {
        double score;
        std::size_t image;
        std::size_t index;
    };
    std::vector<Ref> pool;
    for (std::size_t img = 0; img < detections.size(); ++img) {
        for (std::size_t d = 0; d < detections[img].size(); ++d) {
            pool.push_back({detections[img][d].score, img, d});
        }
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Ref& a, const Ref& b) { return a.score > b.score; });

    std::size_t total_gt = 0;
    std::vector<std::vector<bool>> matched(ground_truth.size());
    for (std::size_t img = 0; img < ground_truth.size(); ++img) {
        total_gt += ground_truth[img].size();
        matched[img].assign(ground_truth[img].size(), false);
    }
    if (total_gt == 0 || pool.empty()) {
        return result;
    }

    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const Ref& ref = pool[k];
        const BBox& det = detections[ref.image][ref.index].box;
        const auto& gts = ground_truth[ref.image];
        double best = -1.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (matched[ref.image][j]) {
                continue;
            }
            const double v = iou(det, gts[j]);
            if (v > best) {
                best = v;
                best_j = j;
            }
        }
        if (best >= iou_thresh) {
            matched[ref.image][best_j] = true;
            ++tp;
        } else {
            ++fp;
        }
        const bool group_end = k + 1 == pool.size() || pool[k + 1].score != ref.score;
        if (group_end) {
            result.curve.points.push_back({static_cast<double>(tp) / static_cast<double>(total_gt),
                                           static_cast<double>(tp) / static_cast<double>(tp + fp)});
            result.counts.push_back({ref.score, tp, fp, total_gt - tp});
        }
    }
    result.auc = curve_auc(result.curve);
    return result;
}

double success_rate(std::span<const double> ious, double tau) {
    if (ious.empty()) {
        return 0.0;
    }
    const auto hits = std::count_if(ious.begin(), ious.end(), [tau](double v) { return v > tau; });
    return static_cast<double>(hits) / static_cast<double>(ious.size());
}

SuccessResult success_curve(std::span<const std::optional<BBox>> predictions,
                            std::span<const std::optional<BBox>> ground_truth) {
    if (predictions.size() != ground_truth.size()) {
        throw EvalError("success_curve: prediction and ground-truth lengths differ (" +
                        std::to_string(predictions.size()) + " vs " +
                        std::to_string(ground_truth.size()) + ")");
    }
    SuccessResult result;
    result.curve.kind = CurveKind::success_rate;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!ground_truth[i]) {
            continue;
        }
        result.ious.push_back(predictions[i] ? iou(*predictions[i], *ground_truth[i]) : 0.0);
    }
    result.scored_frames = result.ious.size();
    if (result.ious.empty()) {
        return result;
    }
    for (int step = 0; step <= 100; ++step) {
        const double tau = step / 100.0;
        result.curve.points.push_back({tau, success_rate(result.ious, tau)});
    }
    result.auc = curve_auc(result.curve);
    return result;
}

// --- files --------------------------------------------------------------------

namespace {

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw EvalError("cannot write " + path.string());
    }
    out.imbue(std::locale::classic());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) {
        throw EvalError("write failed: " + path.string());
    }
}

}  // namespace

std::vector<TrackRow> read_track_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw EvalError("cannot read " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw EvalError(path.string() + ": missing header line");
    }
    std::map<std::string, std::size_t> column;
    {
        const auto names = split(trim(line), ',');
        for (std::size_t i = 0; i < names.size(); ++i) {
            column[std::string(trim(names[i]))] = i;
        }
    }
    for (const char* required : {"frame_index", "x", "y", "w", "h"}) {
        if (!column.contains(required)) {
            throw EvalError(path.string() + ": header lacks column '" + required + "'");
        }
    }
    const auto field = [&](const std::vector<std::string_view>& f,
                           const char* name) -> std::string_view {
        const auto it = column.find(name);
        if (it == column.end() || it->second >= f.size()) {
            return {};
        }
        return trim(f[it->second]);
    };

    std::vector<TrackRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(line, ',');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        TrackRow row;
        const auto frame = parse_integer(field(f, "frame_index"));
        if (!frame) {
            throw EvalError(where + ": bad frame_index");
        }
        row.frame_index = *frame;
        const std::string_view xs[4] = {field(f, "x"), field(f, "y"), field(f, "w"), field(f, "h")};
        const bool all_empty = std::all_of(std::begin(xs), std::end(xs),
                                           [](std::string_view s) { return s.empty(); });
        if (!all_empty) {
            double v[4];
            for (int i = 0; i < 4; ++i) {
                const auto parsed = parse_real(xs[i]);
                if (!parsed) {
                    throw EvalError(where + ": malformed box field '" + std::string(xs[i]) + "'");
                }
                v[i] = *parsed;
            }
            if (!(v[2] > 0.0 && v[3] > 0.0)) {
                throw EvalError(where + ": box width and height must be positive");
            }
            row.box = BBox{v[0], v[1], v[2], v[3]};
        }
        const auto score_text = field(f, "score");
        if (!score_text.empty()) {
            row.score = parse_real(score_text);
            if (!row.score) {
                throw EvalError(where + ": malformed score '" + std::string(score_text) + "'");
            }
        }
        row.mode = std::string(field(f, "mode"));
        row.decision = std::string(field(f, "decision"));
        if (row.decision == "REJECT") {
            row.box.reset();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_track_file(const fs::path& path, std::span<const TrackRow> rows) {
    const bool extended = std::any_of(rows.begin(), rows.end(), [](const TrackRow& r) {
        return !r.mode.empty() || !r.decision.empty();
    });
    auto out = open_csv(path);
    out << "frame_index,x,y,w,h,score" << (extended ? ",mode,decision" : "") << '\n';
    for (const auto& r : rows) {
        out << r.frame_index << ',';
        if (r.box) {
            out << format_fixed(r.box->x, 2) << ',' << format_fixed(r.box->y, 2) << ','
                << format_fixed(r.box->w, 2) << ',' << format_fixed(r.box->h, 2) << ',';
        } else {
            out << ",,,,";
        }
        if (r.score) {
            out << format_fixed(*r.score, 6);
        }
        if (extended) {
            out << ',' << r.mode << ',' << r.decision;
        }
        out << '\n';
    }
    finish(out, path);
}

AlignedTrack align_tracks(std::span<const TrackRow> run, std::span<const TrackRow> gt) {
    if (run.size() != gt.size()) {
        throw EvalError("frame counts differ: run has " + std::to_string(run.size()) +
                        " rows, ground truth has " + std::to_string(gt.size()));
    }
    std::map<std::int64_t, std::optional<BBox>> by_frame;
    for (const auto& r : run) {
        if (!by_frame.emplace(r.frame_index, r.box).second) {
            throw EvalError("run lists frame " + std::to_string(r.frame_index) + " twice");
        }
    }
    AlignedTrack aligned;
    std::set<std::int64_t> seen;
    for (const auto& g : gt) {
        if (!seen.insert(g.frame_index).second) {
            throw EvalError("ground truth lists frame " + std::to_string(g.frame_index) + " twice");
        }
        const auto it = by_frame.find(g.frame_index);
        if (it == by_frame.end()) {
            throw EvalError("run has no row for frame " + std::to_string(g.frame_index));
        }
        aligned.frames.push_back(g.frame_index);
        aligned.predictions.push_back(it->second);
        aligned.ground_truth.push_back(g.box);
    }
    return aligned;
}

DetectionSet group_detections(std::span<const TrackRow> results, std::span<const TrackRow> gt) {
    std::map<std::int64_t, std::size_t> slot;
    DetectionSet set;
    const auto index_of = [&](std::int64_t frame) {
        const auto [it, inserted] = slot.emplace(frame, set.frames.size());
        if (inserted) {
            set.frames.push_back(frame);
            set.detections.emplace_back();
            set.ground_truth.emplace_back();
        }
        return it->second;
    };
    for (const auto& g : gt) {
        const std::size_t i = index_of(g.frame_index);
        if (g.box) {
            set.ground_truth[i].push_back(*g.box);
        }
    }
    for (const auto& r : results) {
        const std::size_t i = index_of(r.frame_index);
        if (r.box) {
            set.detections[i].push_back({*r.box, r.score.value_or(0.0), ScoreSource::detector});
        }
    }
    return set;
}

void write_curve_csv(const fs::path& path, const Curve& curve) {
    auto out = open_csv(path);
    out << (curve.kind == CurveKind::precision_recall ? "recall,precision" : "threshold,success_rate")
        << '\n';
    for (const auto& p : curve.points) {
        out << format_fixed(p.x, 6) << ',' << format_fixed(p.y, 6) << '\n';
    }
    finish(out, path);
}

CompareReport compare_runs(const fs::path& run_a, const fs::path& run_b,
                           const fs::path& ground_truth) {
    const auto gt = read_track_file(ground_truth);
    const auto a = align_tracks(read_track_file(run_a), gt);
    const auto b = align_tracks(read_track_file(run_b), gt);
    CompareReport report;
    report.run_a = success_curve(a.predictions, a.ground_truth);
    report.run_b = success_curve(b.predictions, b.ground_truth);
    report.difference = report.run_a.auc - report.run_b.auc;
    return report;
}

void write_compare_csv(const fs::path& path, const CompareReport& report) {
    auto out = open_csv(path);
    out << "threshold,run_a,run_b\n";
    const auto& pa = report.run_a.curve.points;
    const auto& pb = report.run_b.curve.points;
    for (int step = 0; step <= 100; ++step) {
        const auto i = static_cast<std::size_t>(step);
        const double ya = i < pa.size() ? pa[i].y : 0.0;
        const double yb = i < pb.size() ? pb[i].y : 0.0;
        out << format_fixed(step / 100.0, 2) << ',' << format_fixed(ya, 6) << ','
            << format_fixed(yb, 6) << '\n';
    }
    out << "auc," << format_fixed(report.run_a.auc, 6) << ',' << format_fixed(report.run_b.auc, 6)
        << '\n';
    out << "difference," << format_fixed(report.difference, 6) << ",\n";
    finish(out, path);
}

}  // namespace dronemon
