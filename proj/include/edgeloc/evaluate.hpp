#pragma once

#include <string>
#include <vector>

#include "edgeloc/embed_index.hpp"
#include "edgeloc/encoder.hpp"
#include "edgeloc/simulator.hpp"

namespace edgeloc {

struct FrameRecord {
    uint32_t frame_id = 0;
    double truth_easting = 0.0;
    double truth_northing = 0.0;
    double predicted_easting = 0.0;
    double predicted_northing = 0.0;
    double error_m = 0.0;  // +inf when the frame failed
    double lowe_ratio = 0.0;
    bool accepted = false;
    bool failed = false;
    std::string note;  // error message for failed frames
};

struct EvalReport {
    double radius = 15.0;
    bool gated = true;
    int n_frames = 0;
    int n_accepted = 0;
    double accuracy = 0.0;   // over accepted frames when gated, else over all
    double retention = 0.0;  // n_accepted / n_frames
    std::vector<FrameRecord> frames;
};

/// One frame's localization attempt; failures carry the error message.
struct FrameOutcome {
    bool ok = false;
    LocalizationResult result;
    std::string error;
};

EvalReport score_frames(const std::vector<FrameOutcome>& outcomes,
                        const std::vector<WorldPoint>& truth, double radius, bool gated);

/// Scores aligned results against ground truth.
EvalReport accuracy_at_radius(const std::vector<LocalizationResult>& results,
                              const std::vector<WorldPoint>& truth, double radius, bool gated);

/// Embeds and localizes pre-rendered views; per-frame errors are recorded,
/// not propagated.
EvalReport evaluate_views(const std::vector<RasterImage>& views,
                          const std::vector<WorldPoint>& truth, const EncoderModel& model,
                          const ReferenceIndex& idx, const LocalizeOptions& opts, double radius,
                          bool gated);

enum class SweepAxis : uint8_t { rotation = 0, altitude = 1 };

struct SweepPoint {
    double value = 0.0;
    EvalReport report;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::rotation;
    std::vector<SweepPoint> points;
};

/// Re-renders every pose at each axis value, localizes, and scores.
SweepResult run_sweep(const RasterImage& raster, const GeoTransform& gt,
                      const std::vector<Pose>& poses, int view_size, const EncoderModel& model,
                      const ReferenceIndex& idx, const LocalizeOptions& opts, double radius,
                      bool gated, SweepAxis axis, const std::vector<double>& values);

struct ComparisonRecord {
    double accuracy_a = 0.0;
    double accuracy_b = 0.0;
    double difference = 0.0;  // accuracy_a - accuracy_b
    int wins_a = 0;           // frames a got right and b got wrong
    int wins_b = 0;
    int ties = 0;
};

/// Paired comparison of two reports over the same frames.
ComparisonRecord compare_pipelines(const EvalReport& a, const EvalReport& b);

void write_report_json(const std::string& path, const EvalReport& report);
EvalReport read_report_json(const std::string& path);
void write_report_csv(const std::string& path, const EvalReport& report);
void write_sweep_json(const std::string& path, const SweepResult& sweep);
void write_sweep_csv(const std::string& path, const SweepResult& sweep);
void write_sweep_svg(const std::string& path, const SweepResult& sweep);
void write_comparison_json(const std::string& path, const ComparisonRecord& cmp);

const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& s);

}  // namespace edgeloc
