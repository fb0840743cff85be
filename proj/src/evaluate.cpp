#include "edgeloc/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "edgeloc/errors.hpp"
#include "edgeloc/parallel.hpp"

namespace edgeloc {
namespace {

nlohmann::json finite_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

bool frame_correct(const FrameRecord& f, double radius) {
    return !f.failed && f.error_m <= radius;
}

nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json frames = nlohmann::json::array();
    for (const FrameRecord& f : r.frames) {
        frames.push_back({{"frame_id", f.frame_id},
                          {"truth_easting", f.truth_easting},
                          {"truth_northing", f.truth_northing},
                          {"predicted_easting", f.predicted_easting},
                          {"predicted_northing", f.predicted_northing},
                          {"error_m", finite_or_inf(f.error_m)},
                          {"lowe_ratio", finite_or_inf(f.lowe_ratio)},
                          {"accepted", f.accepted},
                          {"failed", f.failed},
                          {"note", f.note}});
    }
    return {{"radius_m", r.radius},   {"gated", r.gated},
            {"n_frames", r.n_frames}, {"n_accepted", r.n_accepted},
            {"accuracy", r.accuracy}, {"retention", r.retention},
            {"frames", frames}};
}

double json_number(const nlohmann::json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        fail(ErrorCategory::format, "bad numeric field: " + s);
    }
    return v.get<double>();
}

}  // namespace

EvalReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCategory::format, "bad report file: " + path);
    }
    EvalReport r;
    try {
        r.radius = j.at("radius_m").get<double>();
        r.gated = j.at("gated").get<bool>();
        r.n_frames = j.at("n_frames").get<int>();
        r.n_accepted = j.at("n_accepted").get<int>();
        r.accuracy = j.at("accuracy").get<double>();
        r.retention = j.at("retention").get<double>();
        for (const nlohmann::json& fj : j.at("frames")) {
            FrameRecord f;
            f.frame_id = fj.at("frame_id").get<uint32_t>();
            f.truth_easting = fj.at("truth_easting").get<double>();
            f.truth_northing = fj.at("truth_northing").get<double>();
            f.predicted_easting = fj.at("predicted_easting").get<double>();
            f.predicted_northing = fj.at("predicted_northing").get<double>();
            f.error_m = json_number(fj.at("error_m"));
            f.lowe_ratio = json_number(fj.at("lowe_ratio"));
            f.accepted = fj.at("accepted").get<bool>();
            f.failed = fj.at("failed").get<bool>();
            f.note = fj.at("note").get<std::string>();
            r.frames.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCategory::format, "bad report file: " + path);
    }
    return r;
}

EvalReport score_frames(const std::vector<FrameOutcome>& outcomes,
                        const std::vector<WorldPoint>& truth, double radius, bool gated) {
    if (outcomes.empty()) fail(ErrorCategory::usage, "no frames to score");
    if (outcomes.size() != truth.size())
        fail(ErrorCategory::usage, "results and truth lengths differ");
    if (radius < 0.0) fail(ErrorCategory::usage, "radius must be >= 0");

    EvalReport r;
    r.radius = radius;
    r.gated = gated;
    r.n_frames = static_cast<int>(outcomes.size());
    r.frames.resize(outcomes.size());

    int correct_accepted = 0, correct_all = 0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        FrameRecord& f = r.frames[i];
        f.frame_id = static_cast<uint32_t>(i);
        f.truth_easting = truth[i].easting;
        f.truth_northing = truth[i].northing;
        if (!outcomes[i].ok) {
            f.failed = true;
            f.note = outcomes[i].error;
            f.error_m = std::numeric_limits<double>::infinity();
            continue;
        }
        const LocalizationResult& res = outcomes[i].result;
        f.predicted_easting = res.predicted_easting;
        f.predicted_northing = res.predicted_northing;
        f.error_m = std::hypot(res.predicted_easting - truth[i].easting,
                               res.predicted_northing - truth[i].northing);
        f.lowe_ratio = res.lowe_ratio;
        f.accepted = res.accepted;
        if (f.accepted) {
            ++r.n_accepted;
            if (frame_correct(f, radius)) ++correct_accepted;
        }
        if (frame_correct(f, radius)) ++correct_all;
    }

    r.retention = static_cast<double>(r.n_accepted) / r.n_frames;
    if (gated) {
        // No accepted frames means nothing to grade; report 0, never NaN.
        r.accuracy = r.n_accepted ? static_cast<double>(correct_accepted) / r.n_accepted : 0.0;
    } else {
        r.accuracy = static_cast<double>(correct_all) / r.n_frames;
    }
    return r;
}

EvalReport accuracy_at_radius(const std::vector<LocalizationResult>& results,
                              const std::vector<WorldPoint>& truth, double radius, bool gated) {
    std::vector<FrameOutcome> outcomes(results.size());
    for (size_t i = 0; i < results.size(); ++i) outcomes[i] = {true, results[i], {}};
    return score_frames(outcomes, truth, radius, gated);
}

EvalReport evaluate_views(const std::vector<RasterImage>& views,
                          const std::vector<WorldPoint>& truth, const EncoderModel& model,
                          const ReferenceIndex& idx, const LocalizeOptions& opts, double radius,
                          bool gated) {
    if (views.size() != truth.size())
        fail(ErrorCategory::usage, "results and truth lengths differ");
    std::vector<FrameOutcome> outcomes(views.size());
    parallel_for(views.size(), [&](size_t i) {
        try {
            outcomes[i] = {true, localize(idx, embed_view(model, views[i]), opts), {}};
        } catch (const Error& e) {
            outcomes[i] = {false, {}, e.what()};
        }
    });
    return score_frames(outcomes, truth, radius, gated);
}

SweepResult run_sweep(const RasterImage& raster, const GeoTransform& gt,
                      const std::vector<Pose>& poses, int view_size, const EncoderModel& model,
                      const ReferenceIndex& idx, const LocalizeOptions& opts, double radius,
                      bool gated, SweepAxis axis, const std::vector<double>& values) {
    if (values.empty()) fail(ErrorCategory::usage, "sweep needs at least one value");
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] <= values[i - 1])
            fail(ErrorCategory::usage, "sweep values must be strictly increasing");
    if (poses.empty()) fail(ErrorCategory::usage, "no frames to score");

    std::vector<WorldPoint> truth(poses.size());
    for (size_t i = 0; i < poses.size(); ++i) truth[i] = {poses[i].easting, poses[i].northing};

    SweepResult sweep;
    sweep.axis = axis;
    for (double value : values) {
        PerturbationSpec pert;
        if (axis == SweepAxis::rotation)
            pert.rotation_deg = value;
        else
            pert.altitude_drop_m = value;

        std::vector<FrameOutcome> outcomes(poses.size());
        parallel_for(poses.size(), [&](size_t i) {
            try {
                const RasterImage view = render_view(raster, gt, poses[i], view_size, pert);
                outcomes[i] = {true, localize(idx, embed_view(model, view), opts), {}};
            } catch (const Error& e) {
                outcomes[i] = {false, {}, e.what()};
            }
        });
        sweep.points.push_back({value, score_frames(outcomes, truth, radius, gated)});
    }
    return sweep;
}

ComparisonRecord compare_pipelines(const EvalReport& a, const EvalReport& b) {
    if (a.frames.size() != b.frames.size())
        fail(ErrorCategory::mismatch, "reports cover different frames");
    for (size_t i = 0; i < a.frames.size(); ++i) {
        if (a.frames[i].truth_easting != b.frames[i].truth_easting ||
            a.frames[i].truth_northing != b.frames[i].truth_northing)
            fail(ErrorCategory::mismatch, "reports cover different frames");
    }
    if (a.radius != b.radius) fail(ErrorCategory::mismatch, "reports use different radii");

    ComparisonRecord cmp;
    cmp.accuracy_a = a.accuracy;
    cmp.accuracy_b = b.accuracy;
    cmp.difference = a.accuracy - b.accuracy;
    for (size_t i = 0; i < a.frames.size(); ++i) {
        const bool ca = frame_correct(a.frames[i], a.radius);
        const bool cb = frame_correct(b.frames[i], b.radius);
        if (ca == cb)
            ++cmp.ties;
        else if (ca)
            ++cmp.wins_a;
        else
            ++cmp.wins_b;
    }
    return cmp;
}

void write_report_json(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << report_to_json(report).dump(2) << "\n";
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << "frame_id,truth_easting,truth_northing,predicted_easting,predicted_northing,"
           "error_m,lowe_ratio,accepted,failed,note\n";
    for (const FrameRecord& f : report.frames) {
        out << f.frame_id << ',' << num(f.truth_easting) << ',' << num(f.truth_northing) << ','
            << num(f.predicted_easting) << ',' << num(f.predicted_northing) << ','
            << num(f.error_m) << ',' << num(f.lowe_ratio) << ',' << (f.accepted ? 1 : 0) << ','
            << (f.failed ? 1 : 0) << ',' << f.note << "\n";
    }
}

void write_sweep_json(const std::string& path, const SweepResult& sweep) {
    nlohmann::json points = nlohmann::json::array();
    for (const SweepPoint& p : sweep.points)
        points.push_back({{"value", p.value}, {"report", report_to_json(p.report)}});
    nlohmann::json j = {{"axis", to_string(sweep.axis)}, {"points", points}};
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << "axis,value,accuracy,retention,n_frames,n_accepted\n";
    for (const SweepPoint& p : sweep.points) {
        out << to_string(sweep.axis) << ',' << num(p.value) << ',' << num(p.report.accuracy) << ','
            << num(p.report.retention) << ',' << p.report.n_frames << ',' << p.report.n_accepted
            << "\n";
    }
}

void write_sweep_svg(const std::string& path, const SweepResult& sweep) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 20, B = 50;
    const double x0 = sweep.points.front().value;
    const double x1 = sweep.points.back().value;
    const double span = x1 > x0 ? x1 - x0 : 1.0;
    auto px = [&](double v) { return L + (v - x0) / span * (W - L - R); };
    auto py = [&](double acc) { return T + (1.0 - acc) * (H - T - B); };

    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - R << "\" y2=\"" << py(0)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << L << "\" y2=\"" << py(1)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"14\">" << to_string(sweep.axis) << "</text>\n";
    out << "<text x=\"16\" y=\"" << (T + H - B) / 2
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
        << (T + H - B) / 2 << ")\">accuracy</text>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const SweepPoint& p : sweep.points) out << num(px(p.value)) << ',' << num(py(p.report.accuracy)) << ' ';
    out << "\"/>\n";
    for (const SweepPoint& p : sweep.points) {
        out << "<circle cx=\"" << num(px(p.value)) << "\" cy=\"" << num(py(p.report.accuracy))
            << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }
    out << "</svg>\n";
}

void write_comparison_json(const std::string& path, const ComparisonRecord& cmp) {
    nlohmann::json j = {{"accuracy_a", cmp.accuracy_a}, {"accuracy_b", cmp.accuracy_b},
                        {"difference", cmp.difference}, {"wins_a", cmp.wins_a},
                        {"wins_b", cmp.wins_b},         {"ties", cmp.ties}};
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << j.dump(2) << "\n";
}

const char* to_string(SweepAxis axis) {
    return axis == SweepAxis::rotation ? "rotation" : "altitude";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "rotation") return SweepAxis::rotation;
    if (s == "altitude") return SweepAxis::altitude;
    fail(ErrorCategory::usage, "unknown sweep axis: " + s);
}

}  // namespace edgeloc
