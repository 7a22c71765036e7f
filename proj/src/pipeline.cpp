#include "courtside/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "courtside/error.hpp"
#include "courtside/format.hpp"
#include "courtside/pose.hpp"

namespace courtside {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

long frame_index_from_name(const std::string& stem) {
    // Last run of digits in the file stem, e.g. frame_000123 -> 123.
    std::size_t end = stem.size();
    while (end > 0 && !std::isdigit(static_cast<unsigned char>(stem[end - 1]))) --end;
    if (end == 0) return -1;
    std::size_t begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
    try {
        return std::stol(stem.substr(begin, end - begin));
    } catch (const std::exception&) {
        return -1;
    }
}

nlohmann::json stage_to_json(const StageReport& stage, bool include_timing) {
    nlohmann::json j;
    j["name"] = stage.name;
    j["status"] = stage.status;
    if (!stage.detail.empty()) j["detail"] = stage.detail;
    j["counts"] = stage.counts;
    j["warnings"] = stage.warnings;
    if (include_timing) j["wall_ms"] = stage.wall_ms;
    return j;
}

}  // namespace

Stage parse_stage(const std::string& name) {
    if (name == "decode") return Stage::Decode;
    if (name == "filter") return Stage::Filter;
    if (name == "qa") return Stage::Qa;
    if (name == "analytics") return Stage::Analytics;
    throw SpecError("unknown pipeline stage: '" + name + "'");
}

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::Decode: return "decode";
        case Stage::Filter: return "filter";
        case Stage::Qa: return "qa";
        case Stage::Analytics: return "analytics";
    }
    return "?";
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }

    Config config;
    try {
        if (j.contains("heatmap")) {
            const auto& h = j["heatmap"];
            config.heatmap.width = h.value("width", config.heatmap.width);
            config.heatmap.height = h.value("height", config.heatmap.height);
            config.heatmap.variance = h.value("variance", config.heatmap.variance);
            config.heatmap.amplitude = h.value("amplitude", config.heatmap.amplitude);
        }
        if (j.contains("decoder")) {
            const auto& d = j["decoder"];
            config.decoder.threshold = d.value("threshold", config.decoder.threshold);
            config.decoder.min_radius = d.value("min_radius", config.decoder.min_radius);
            config.decoder.max_radius = d.value("max_radius", config.decoder.max_radius);
            config.decoder.gradient_threshold = d.value("gradient_threshold", config.decoder.gradient_threshold);
            config.decoder.accumulator_threshold =
                d.value("accumulator_threshold", config.decoder.accumulator_threshold);
            config.decoder.min_center_distance = d.value("min_center_distance", config.decoder.min_center_distance);
            config.decoder.min_component_size = d.value("min_component_size", config.decoder.min_component_size);
            if (d.contains("mode")) {
                const std::string mode = d["mode"].get<std::string>();
                if (mode == "circle") {
                    config.decoder.mode = DecodeMode::Circle;
                } else if (mode == "argmax") {
                    config.decoder.mode = DecodeMode::Argmax;
                } else {
                    throw SpecError("decoder mode must be circle or argmax");
                }
            }
        }
        if (j.contains("court")) {
            const auto& c = j["court"];
            config.court.length = c.value("length", config.court.length);
            config.court.width = c.value("width", config.court.width);
            config.court.margin = c.value("margin", config.court.margin);
        }
        if (j.contains("qa")) {
            const auto& q = j["qa"];
            config.qa.k = q.value("k", config.qa.k);
            config.qa.outlier_percentile = q.value("outlier_percentile", config.qa.outlier_percentile);
            config.qa.enlarge_factor = q.value("enlarge_factor", config.qa.enlarge_factor);
        }
        if (j.contains("analytics")) {
            const auto& a = j["analytics"];
            config.analytics.smooth_window = a.value("smooth_window", config.analytics.smooth_window);
            config.analytics.angle_threshold_deg =
                a.value("angle_threshold_deg", config.analytics.angle_threshold_deg);
            config.analytics.refractory_frames = a.value("refractory_frames", config.analytics.refractory_frames);
            config.analytics.max_gap = a.value("max_gap", config.analytics.max_gap);
        }
        if (j.contains("imu")) {
            const auto& i = j["imu"];
            config.imu.threshold_g = i.value("threshold_g", config.imu.threshold_g);
            config.imu.window_ms = i.value("window_ms", config.imu.window_ms);
            config.imu.refractory_ms = i.value("refractory_ms", config.imu.refractory_ms);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": malformed config: " + e.what());
    }
    return config;
}

std::string RunReport::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    nlohmann::json stages_json = nlohmann::json::array();
    for (const StageReport& stage : stages) stages_json.push_back(stage_to_json(stage, false));
    j["stages"] = stages_json;
    return j.dump(2) + "\n";
}

std::string RunReport::to_log() const {
    std::ostringstream out;
    out << "run report (seed " << seed << ")\n";
    for (const StageReport& stage : stages) {
        out << "  " << stage.name << ": " << stage.status;
        if (!stage.detail.empty()) out << " (" << stage.detail << ")";
        out << " [" << format_fixed(stage.wall_ms, 1) << " ms]\n";
        for (const auto& [key, value] : stage.counts) out << "    " << key << " = " << value << "\n";
        for (const std::string& warning : stage.warnings) out << "    warning: " << warning << "\n";
    }
    return out.str();
}

std::vector<ManifestEntry> export_chart_data(const MatchDataset& dataset, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    std::vector<ManifestEntry> manifest;

    std::size_t total_strokes = 0;
    for (const Rally& rally : dataset.rallies) total_strokes += rally.strokes.size();

    write_text_file(out / "ball_types.json", ball_type_bar_payload(dataset.rallies));
    manifest.push_back({"ball_types.json", total_strokes});

    write_text_file(out / "loss_reasons.json", loss_reason_bar_payload(dataset.rallies));
    manifest.push_back({"loss_reasons.json", dataset.rallies.size()});

    write_text_file(out / "rally_series.json", rally_series_payload(dataset.rallies));
    manifest.push_back({"rally_series.json", dataset.rallies.size()});

    for (const Rally& rally : dataset.rallies) {
        const std::string name = "radar_" + rally.id + ".json";
        write_text_file(out / name, radar_payload(rally));
        manifest.push_back({name, rally.strokes.size()});
    }

    nlohmann::json j;
    nlohmann::json files = nlohmann::json::array();
    for (const ManifestEntry& entry : manifest) files.push_back({{"name", entry.name}, {"records", entry.records}});
    j["files"] = files;
    write_text_file(out / "manifest.json", j.dump(2) + "\n");
    return manifest;
}

namespace {

StageReport run_decode_stage(const PipelineOptions& options) {
    StageReport report;
    report.name = "decode";
    const auto start = Clock::now();

    if (options.heatmap_dir.empty() || !std::filesystem::is_directory(options.heatmap_dir)) {
        report.status = "skipped";
        report.detail = "missing heatmap directory";
        report.wall_ms = elapsed_ms(start);
        return report;
    }

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(options.heatmap_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        report.status = "skipped";
        report.detail = "no .pgm files in " + options.heatmap_dir.string();
        report.wall_ms = elapsed_ms(start);
        return report;
    }

    std::vector<BallDetection> detections;
    long fallback_index = 0;
    std::int64_t found = 0;
    for (const auto& file : files) {
        long frame = frame_index_from_name(file.stem().string());
        if (frame < 0) {
            report.warnings.push_back(file.filename().string() + ": no frame index in name, using position");
            frame = fallback_index;
        }
        ++fallback_index;
        const Heatmap heatmap = read_pgm(file);
        const BallDetection detection = decode_ball(heatmap, options.config.decoder, frame);
        if (detection.status == DetectionStatus::Found) ++found;
        detections.push_back(detection);
    }
    std::sort(detections.begin(), detections.end(),
              [](const BallDetection& a, const BallDetection& b) { return a.frame < b.frame; });

    std::ostringstream csv;
    write_detections_csv(csv, detections);
    write_text_file(options.out_dir / "detections.csv", csv.str());

    report.status = "ok";
    report.counts["frames"] = static_cast<std::int64_t>(files.size());
    report.counts["found"] = found;
    report.counts["absent"] = static_cast<std::int64_t>(files.size()) - found;
    report.wall_ms = elapsed_ms(start);
    return report;
}

StageReport run_filter_stage(const MatchDataset& dataset, const PipelineOptions& options) {
    StageReport report;
    report.name = "filter";
    const auto start = Clock::now();

    std::size_t total_boxes = 0;
    for (const auto& [frame, label] : dataset.frames) total_boxes += label.boxes.size();

    if (dataset.calibration.size() < 4) {
        report.status = "skipped";
        report.detail = "calibration needs at least 4 correspondences";
        report.wall_ms = elapsed_ms(start);
        return report;
    }
    if (total_boxes == 0) {
        report.status = "skipped";
        report.detail = "no player boxes labeled";
        report.wall_ms = elapsed_ms(start);
        return report;
    }

    Homography homography;
    try {
        homography = estimate_homography(dataset.calibration);
    } catch (const EstimationError& e) {
        report.status = "failed";
        report.detail = e.what();
        report.wall_ms = elapsed_ms(start);
        return report;
    }
    if (homography.conditioning_warning)
        report.warnings.push_back("homography system is poorly conditioned; check the calibration points");
    write_text_file(options.out_dir / "homography.json", homography_to_json(homography));

    std::ostringstream csv;
    csv << "frame,player_slot,x,y,w,h,court_x,court_y\n";
    std::int64_t kept = 0;
    for (const auto& [frame, label] : dataset.frames) {
        for (const auto& [slot, box] : label.boxes) {
            std::vector<std::string> warnings;
            const auto filtered = filter_players({box}, homography, options.config.court, &warnings);
            for (const std::string& warning : warnings) report.warnings.push_back(warning);
            if (filtered.empty()) continue;
            const CourtPoint& point = filtered.front().second;
            csv << frame << "," << player_slot_name(slot) << "," << format_fixed(box.x, 2) << ","
                << format_fixed(box.y, 2) << "," << format_fixed(box.w, 2) << "," << format_fixed(box.h, 2) << ","
                << format_fixed(point.x, 2) << "," << format_fixed(point.y, 2) << "\n";
            ++kept;
        }
    }
    write_text_file(options.out_dir / "filtered_boxes.csv", csv.str());

    report.status = "ok";
    report.counts["boxes"] = static_cast<std::int64_t>(total_boxes);
    report.counts["kept"] = kept;
    report.counts["removed"] = static_cast<std::int64_t>(total_boxes) - kept;
    report.wall_ms = elapsed_ms(start);
    return report;
}

StageReport run_qa_stage(const MatchDataset& dataset, const PipelineOptions& options) {
    StageReport report;
    report.name = "qa";
    const auto start = Clock::now();

    std::vector<SkeletonFeature> features;
    std::size_t total_skeletons = 0;
    for (const auto& [frame, label] : dataset.frames) {
        for (const Skeleton& skeleton : label.skeletons) {
            ++total_skeletons;
            const auto box = std::find_if(label.boxes.begin(), label.boxes.end(), [&](const auto& entry) {
                return entry.first == skeleton.slot;
            });
            if (box == label.boxes.end()) {
                report.warnings.push_back("frame " + std::to_string(frame) + " slot " +
                                          player_slot_name(skeleton.slot) + ": skeleton has no matching box");
                continue;
            }
            try {
                features.push_back(normalize_skeleton(skeleton, box->second));
            } catch (const FeatureError& e) {
                report.warnings.push_back(e.what());
            }
        }
    }

    if (total_skeletons == 0) {
        report.status = "skipped";
        report.detail = "no skeletons labeled";
        report.wall_ms = elapsed_ms(start);
        return report;
    }
    if (features.size() < static_cast<std::size_t>(options.config.qa.k)) {
        report.status = "failed";
        report.detail = "only " + std::to_string(features.size()) + " usable skeletons for k = " +
                        std::to_string(options.config.qa.k);
        report.wall_ms = elapsed_ms(start);
        return report;
    }

    impute_missing(features);
    const ClusterReport clusters =
        cluster_skeletons(features, options.config.qa.k, options.config.qa.outlier_percentile, options.seed);
    const std::vector<OutlierEntry> outliers = outlier_report(clusters);

    std::ostringstream csv;
    write_outliers_csv(csv, outliers);
    write_text_file(options.out_dir / "outliers.csv", csv.str());

    report.status = "ok";
    report.counts["skeletons"] = static_cast<std::int64_t>(total_skeletons);
    report.counts["features"] = static_cast<std::int64_t>(features.size());
    report.counts["clusters"] = options.config.qa.k;
    report.counts["outliers"] = static_cast<std::int64_t>(outliers.size());
    report.wall_ms = elapsed_ms(start);
    return report;
}

StageReport run_analytics_stage(const MatchDataset& dataset, const PipelineOptions& options,
                                const StageReport* decode_report) {
    StageReport report;
    report.name = "analytics";
    const auto start = Clock::now();

    if (dataset.rallies.empty()) {
        report.status = "skipped";
        report.detail = "no rallies labeled";
        report.wall_ms = elapsed_ms(start);
        return report;
    }

    const auto manifest = export_chart_data(dataset, options.out_dir / "charts");
    std::size_t total_strokes = 0;
    for (const Rally& rally : dataset.rallies) total_strokes += rally.strokes.size();

    report.counts["rallies"] = static_cast<std::int64_t>(dataset.rallies.size());
    report.counts["strokes"] = static_cast<std::int64_t>(total_strokes);
    report.counts["chart_files"] = static_cast<std::int64_t>(manifest.size() + 1);  // + manifest.json

    // Trajectory-derived outputs consume the decode stage's detections; when a
    // requested decode never produced them, this dependent step skips too.
    if (decode_report != nullptr) {
        if (decode_report->status == "ok") {
            Trajectory traj;
            traj.fps = dataset.video.fps;
            traj.detections = read_detections_csv(options.out_dir / "detections.csv");

            std::vector<std::string> warnings;
            const std::vector<long> hits = detect_hit_times(traj, options.config.analytics, &warnings);
            for (const std::string& warning : warnings) report.warnings.push_back(warning);
            std::ostringstream hits_csv;
            hits_csv << "frame\n";
            for (const long frame : hits) hits_csv << frame << "\n";
            write_text_file(options.out_dir / "hits.csv", hits_csv.str());

            const std::vector<SpeedSample> speeds = estimate_speed(traj, options.config.analytics.max_gap);
            std::ostringstream speeds_csv;
            speeds_csv << "frame,speed_px_s\n";
            for (const SpeedSample& s : speeds)
                speeds_csv << s.frame << "," << format_sig9(s.speed) << "\n";
            write_text_file(options.out_dir / "speeds.csv", speeds_csv.str());

            report.counts["hits"] = static_cast<std::int64_t>(hits.size());
            report.counts["speed_samples"] = static_cast<std::int64_t>(speeds.size());
        } else {
            report.warnings.push_back("trajectory outputs skipped: decode stage was " + decode_report->status);
        }
    }

    report.status = "ok";
    report.wall_ms = elapsed_ms(start);
    return report;
}

}  // namespace

RunReport run_pipeline(const MatchDataset& dataset, const PipelineOptions& options) {
    if (options.out_dir.empty()) throw SpecError("pipeline needs an output directory");
    std::filesystem::create_directories(options.out_dir);

    RunReport report;
    report.seed = options.seed;

    std::ptrdiff_t decode_index = -1;
    if (options.stages.count(Stage::Decode)) {
        report.stages.push_back(run_decode_stage(options));
        decode_index = static_cast<std::ptrdiff_t>(report.stages.size()) - 1;
    }
    if (options.stages.count(Stage::Filter)) report.stages.push_back(run_filter_stage(dataset, options));
    if (options.stages.count(Stage::Qa)) report.stages.push_back(run_qa_stage(dataset, options));
    if (options.stages.count(Stage::Analytics)) {
        const StageReport* decode_report =
            decode_index >= 0 ? &report.stages[static_cast<std::size_t>(decode_index)] : nullptr;
        report.stages.push_back(run_analytics_stage(dataset, options, decode_report));
    }

    write_text_file(options.out_dir / "run_report.json", report.to_json());
    return report;
}

}  // namespace courtside
