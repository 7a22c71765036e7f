// courtside: badminton match analytics from heatmaps, boxes, skeletons,
// rally labels and racket IMU streams.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "courtside/court.hpp"
#include "courtside/csv.hpp"
#include "courtside/dataset.hpp"
#include "courtside/decode.hpp"
#include "courtside/error.hpp"
#include "courtside/format.hpp"
#include "courtside/heatmap.hpp"
#include "courtside/imu.hpp"
#include "courtside/pipeline.hpp"
#include "courtside/pose.hpp"
#include "courtside/rally.hpp"

namespace fs = std::filesystem;
using namespace courtside;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitBadArguments = 3;

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string format = "csv";
    Config config;
};

void write_file(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

long frame_from_stem(const std::string& stem, long fallback) {
    std::size_t end = stem.size();
    while (end > 0 && !std::isdigit(static_cast<unsigned char>(stem[end - 1]))) --end;
    if (end == 0) return fallback;
    std::size_t begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
    try {
        return std::stol(stem.substr(begin, end - begin));
    } catch (const std::exception&) {
        return fallback;
    }
}

std::string detections_to_json(const std::vector<BallDetection>& detections) {
    std::ostringstream out;
    out << "[\n";
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const BallDetection& d = detections[i];
        out << "  {\"frame\": " << d.frame << ", \"status\": \""
            << (d.status == DetectionStatus::Found ? "found" : "absent") << "\"";
        if (d.status == DetectionStatus::Found)
            out << ", \"x\": " << format_fixed(d.x, 2) << ", \"y\": " << format_fixed(d.y, 2);
        out << "}" << (i + 1 < detections.size() ? "," : "") << "\n";
    }
    out << "]\n";
    return out.str();
}

std::map<std::pair<long, int>, BoundingBox> read_boxes_csv(const std::string& path) {
    const CsvFile file = read_csv(path);
    const std::vector<std::string> expected = {"frame", "player_slot", "x", "y", "w", "h", "score"};
    if (file.header != expected)
        throw ValidationError(path + ": expected header frame,player_slot,x,y,w,h,score");
    std::map<std::pair<long, int>, BoundingBox> boxes;
    for (const CsvRow& row : file.rows) {
        if (row.fields.size() != 7)
            throw ValidationError(path + ":" + std::to_string(row.line) + ": expected 7 fields");
        const auto frame = parse_long(row.fields[0]);
        const auto x = parse_double(row.fields[2]);
        const auto y = parse_double(row.fields[3]);
        const auto w = parse_double(row.fields[4]);
        const auto h = parse_double(row.fields[5]);
        const auto score = parse_double(row.fields[6]);
        if (!frame || !x || !y || !w || !h || !score)
            throw ValidationError(path + ":" + std::to_string(row.line) + ": malformed row");
        const PlayerSlot slot = parse_player_slot(row.fields[1]);
        BoundingBox box;
        box.x = *x;
        box.y = *y;
        box.w = *w;
        box.h = *h;
        box.score = *score;
        box.source_frame = *frame;
        boxes[{*frame, static_cast<int>(slot)}] = box;
    }
    return boxes;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"badminton match analytics toolkit"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "JSON config file overriding stage defaults");
    app.add_option("--seed", global.seed, "seed for clustering and any randomized step");
    app.add_option("--out", global.out_dir, "output directory");
    app.add_option("--format", global.format, "output format for record lists")
        ->check(CLI::IsMember({"csv", "json"}));

    // Callbacks only select a handler; work happens after the config loads.
    std::function<int()> handler;

    // ---- heatmap gen | loss ----
    auto* heatmap_cmd = app.add_subcommand("heatmap", "ground-truth heatmap tools");
    heatmap_cmd->require_subcommand(1);

    auto* gen = heatmap_cmd->add_subcommand("gen", "generate a Gaussian ground-truth heatmap");
    struct {
        double cx = 320.0, cy = 240.0;
        std::string pgm = "heatmap.pgm";
        std::string descriptor;
    } gen_opts;
    gen->add_option("--cx", gen_opts.cx, "center x, working pixels")->required();
    gen->add_option("--cy", gen_opts.cy, "center y, working pixels")->required();
    gen->add_option("--pgm", gen_opts.pgm, "output PGM path");
    gen->add_option("--descriptor", gen_opts.descriptor, "optional JSON descriptor path");
    gen->callback([&]() {
        handler = [&]() {
            const HeatmapSpec spec = global.config.heatmap;
            const Heatmap heatmap = generate_heatmap(gen_opts.cx, gen_opts.cy, spec);
            write_pgm(heatmap, gen_opts.pgm);
            if (!gen_opts.descriptor.empty())
                write_file(gen_opts.descriptor, heatmap_descriptor_json(spec, gen_opts.cx, gen_opts.cy));
            std::cout << "wrote " << gen_opts.pgm << "\n";
            return kExitOk;
        };
    });

    auto* loss = heatmap_cmd->add_subcommand("loss", "cross-entropy of predicted logits against a truth heatmap");
    struct {
        std::string logits;
        std::string truth;
        double eps = 1e-12;
    } loss_opts;
    loss->add_option("--logits", loss_opts.logits,
                     "raw little-endian float32 volume, width*height*256 values, bins fastest")
        ->required();
    loss->add_option("--truth", loss_opts.truth, "ground-truth heatmap PGM")->required();
    loss->add_option("--eps", loss_opts.eps, "probability clamp before the log");
    loss->callback([&]() {
        handler = [&]() {
            const Heatmap truth_map = read_pgm(loss_opts.truth);
            const OneHotVolume truth = encode_onehot(truth_map);

            std::ifstream in(loss_opts.logits, std::ios::binary);
            if (!in) throw IoError("cannot open " + loss_opts.logits);
            const std::size_t expected = static_cast<std::size_t>(truth.width) * truth.height * kGrayDepth;
            std::vector<float> raw(expected);
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected * sizeof(float)));
            if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(float)))
                throw IoError(loss_opts.logits + ": expected " + std::to_string(expected) + " float32 values");

            LogitVolume logits = LogitVolume::zeros(truth.width, truth.height);
            for (std::size_t i = 0; i < expected; ++i) logits.scores[i] = static_cast<double>(raw[i]);
            const double value = cross_entropy_loss(softmax_normalize(logits), truth, loss_opts.eps);
            std::cout << format_sig9(value) << "\n";
            return kExitOk;
        };
    });

    // ---- decode ----
    auto* decode_cmd = app.add_subcommand("decode", "decode ball positions from heatmap files");
    struct {
        std::string input;
        std::string mode;
        int threshold = -1;
    } decode_opts;
    decode_cmd->add_option("--in", decode_opts.input, "heatmap PGM file or directory of .pgm files")->required();
    decode_cmd->add_option("--mode", decode_opts.mode, "decision rule")->check(CLI::IsMember({"circle", "argmax"}));
    decode_cmd->add_option("--threshold", decode_opts.threshold, "binarization threshold override");
    decode_cmd->callback([&]() {
        handler = [&]() {
            DecoderConfig config = global.config.decoder;
            if (!decode_opts.mode.empty())
                config.mode = decode_opts.mode == "argmax" ? DecodeMode::Argmax : DecodeMode::Circle;
            if (decode_opts.threshold >= 0) config.threshold = decode_opts.threshold;

            std::vector<fs::path> files;
            const fs::path input(decode_opts.input);
            if (fs::is_directory(input)) {
                for (const auto& entry : fs::directory_iterator(input)) {
                    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
                }
                std::sort(files.begin(), files.end());
            } else if (fs::is_regular_file(input)) {
                files.push_back(input);
            } else {
                throw IoError(decode_opts.input + " is neither a file nor a directory");
            }
            if (files.empty()) throw IoError("no .pgm files under " + decode_opts.input);

            std::vector<BallDetection> detections;
            long index = 0;
            for (const auto& file : files) {
                const long frame = frame_from_stem(file.stem().string(), index);
                ++index;
                detections.push_back(decode_ball(read_pgm(file), config, frame));
            }
            std::sort(detections.begin(), detections.end(),
                      [](const BallDetection& a, const BallDetection& b) { return a.frame < b.frame; });

            const fs::path out_path =
                fs::path(global.out_dir) / (global.format == "json" ? "detections.json" : "detections.csv");
            if (global.format == "json") {
                write_file(out_path, detections_to_json(detections));
            } else {
                std::ostringstream csv;
                write_detections_csv(csv, detections);
                write_file(out_path, csv.str());
            }
            std::cout << "wrote " << out_path.string() << " (" << detections.size() << " frames)\n";
            return kExitOk;
        };
    });

    // ---- calibrate ----
    auto* calibrate_cmd = app.add_subcommand("calibrate", "estimate the image-to-court homography");
    struct {
        std::string calibration;
    } calibrate_opts;
    calibrate_cmd->add_option("--calibration", calibrate_opts.calibration, "calibration JSON with point pairs")
        ->required();
    calibrate_cmd->callback([&]() {
        handler = [&]() {
            const auto correspondences = load_calibration(calibrate_opts.calibration);
            const Homography h = estimate_homography(correspondences);
            if (h.conditioning_warning)
                std::cerr << "warning: homography system is poorly conditioned; check the calibration points\n";
            const fs::path out_path = fs::path(global.out_dir) / "homography.json";
            write_file(out_path, homography_to_json(h));
            std::cout << "wrote " << out_path.string() << "\n";
            return kExitOk;
        };
    });

    // ---- filter-players ----
    auto* filter_cmd = app.add_subcommand("filter-players", "keep boxes whose ground point lies on the court");
    struct {
        std::string boxes;
        std::string homography;
        std::string calibration;
    } filter_opts;
    filter_cmd->add_option("--boxes", filter_opts.boxes, "boxes.csv (frame,player_slot,x,y,w,h,score)")->required();
    filter_cmd->add_option("--homography", filter_opts.homography, "homography JSON (9 numbers)");
    filter_cmd->add_option("--calibration", filter_opts.calibration,
                           "calibration JSON (alternative to --homography)");
    filter_cmd->callback([&]() {
        handler = [&]() {
            if (filter_opts.homography.empty() == filter_opts.calibration.empty())
                throw SpecError("provide exactly one of --homography or --calibration");
            const Homography h = filter_opts.homography.empty()
                                     ? estimate_homography(load_calibration(filter_opts.calibration))
                                     : homography_from_json_file(filter_opts.homography);

            const auto boxes = read_boxes_csv(filter_opts.boxes);
            std::ostringstream csv;
            csv << "frame,player_slot,x,y,w,h,court_x,court_y\n";
            std::size_t kept = 0;
            for (const auto& [key, box] : boxes) {
                std::vector<std::string> warnings;
                const auto result = filter_players({box}, h, global.config.court, &warnings);
                for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
                if (result.empty()) continue;
                ++kept;
                const CourtPoint& p = result.front().second;
                csv << key.first << "," << player_slot_name(static_cast<PlayerSlot>(key.second)) << ","
                    << format_fixed(box.x, 2) << "," << format_fixed(box.y, 2) << "," << format_fixed(box.w, 2)
                    << "," << format_fixed(box.h, 2) << "," << format_fixed(p.x, 2) << "," << format_fixed(p.y, 2)
                    << "\n";
            }
            const fs::path out_path = fs::path(global.out_dir) / "filtered_boxes.csv";
            write_file(out_path, csv.str());
            std::cout << "kept " << kept << " of " << boxes.size() << " boxes -> " << out_path.string() << "\n";
            return kExitOk;
        };
    });

    // ---- qa-skeletons ----
    auto* qa_cmd = app.add_subcommand("qa-skeletons", "cluster skeletons and emit the outlier worklist");
    struct {
        std::string skeletons;
        std::string boxes;
        int k = -1;
        double percentile = -1.0;
    } qa_opts;
    qa_cmd->add_option("--skeletons", qa_opts.skeletons, "skeletons.jsonl")->required();
    qa_cmd->add_option("--boxes", qa_opts.boxes, "boxes.csv for normalization")->required();
    qa_cmd->add_option("--k", qa_opts.k, "cluster count override");
    qa_cmd->add_option("--percentile", qa_opts.percentile, "outlier percentile override");
    qa_cmd->callback([&]() {
        handler = [&]() {
            QaConfig qa = global.config.qa;
            if (qa_opts.k > 0) qa.k = qa_opts.k;
            if (qa_opts.percentile > 0.0) qa.outlier_percentile = qa_opts.percentile;

            std::vector<std::string> errors;
            const auto skeletons = read_skeletons_jsonl(qa_opts.skeletons, default_keypoint_names().size(), &errors);
            for (const auto& message : errors) std::cerr << "warning: " << message << "\n";
            const auto boxes = read_boxes_csv(qa_opts.boxes);

            std::vector<SkeletonFeature> features;
            for (const Skeleton& s : skeletons) {
                const auto it = boxes.find({s.frame, static_cast<int>(s.slot)});
                if (it == boxes.end()) {
                    std::cerr << "warning: frame " << s.frame << " slot " << player_slot_name(s.slot)
                              << ": skeleton has no matching box\n";
                    continue;
                }
                try {
                    features.push_back(normalize_skeleton(s, it->second));
                } catch (const FeatureError& e) {
                    std::cerr << "warning: " << e.what() << "\n";
                }
            }
            impute_missing(features);
            const ClusterReport report = cluster_skeletons(features, qa.k, qa.outlier_percentile, global.seed);
            const auto outliers = outlier_report(report);

            std::ostringstream csv;
            write_outliers_csv(csv, outliers);
            const fs::path out_path = fs::path(global.out_dir) / "outliers.csv";
            write_file(out_path, csv.str());
            std::cout << "flagged " << outliers.size() << " of " << features.size() << " skeletons -> "
                      << out_path.string() << "\n";
            return kExitOk;
        };
    });

    // ---- stats export ----
    auto* stats_cmd = app.add_subcommand("stats", "rally and match statistics");
    stats_cmd->require_subcommand(1);
    auto* stats_export = stats_cmd->add_subcommand("export", "write chart payload JSONs for a labeled dataset");
    struct {
        std::string dataset;
    } stats_opts;
    stats_export->add_option("--dataset", stats_opts.dataset, "dataset directory")->required();
    stats_export->callback([&]() {
        handler = [&]() {
            const MatchDataset dataset = load_dataset_or_throw(stats_opts.dataset);
            const auto manifest = export_chart_data(dataset, fs::path(global.out_dir) / "charts");
            std::cout << "wrote " << manifest.size() + 1 << " chart files under "
                      << (fs::path(global.out_dir) / "charts").string() << "\n";
            return kExitOk;
        };
    });

    // ---- imu segment | train | classify ----
    auto* imu_cmd = app.add_subcommand("imu", "smart-racket stroke tools");
    imu_cmd->require_subcommand(1);

    auto* imu_segment = imu_cmd->add_subcommand("segment", "find stroke windows in an IMU stream");
    struct {
        std::string input;
    } segment_opts;
    imu_segment->add_option("--in", segment_opts.input, "IMU CSV stream")->required();
    imu_segment->callback([&]() {
        handler = [&]() {
            const auto stream = read_imu_csv(segment_opts.input);
            const auto windows = segment_strokes(stream, global.config.imu);
            std::ostringstream csv;
            csv << "peak_t_ms,peak_magnitude,samples\n";
            for (const StrokeWindow& w : windows)
                csv << format_fixed(w.peak_t_ms, 2) << "," << format_sig9(w.peak_magnitude) << ","
                    << w.samples.size() << "\n";
            const fs::path out_path = fs::path(global.out_dir) / "stroke_windows.csv";
            write_file(out_path, csv.str());
            std::cout << "found " << windows.size() << " strokes -> " << out_path.string() << "\n";
            return kExitOk;
        };
    });

    auto* imu_train = imu_cmd->add_subcommand("train", "train the nearest-centroid stroke model");
    struct {
        std::string input;
    } train_opts;
    imu_train->add_option("--in", train_opts.input, "labeled windows CSV: stroke_id,label,t_ms,ax,ay,az,gx,gy,gz")
        ->required();
    imu_train->callback([&]() {
        handler = [&]() {
            const CsvFile file = read_csv(train_opts.input);
            const std::vector<std::string> expected = {"stroke_id", "label", "t_ms", "ax", "ay",
                                                       "az",        "gx",    "gy",   "gz"};
            if (file.header != expected)
                throw ValidationError(train_opts.input + ": expected header stroke_id,label,t_ms,ax,ay,az,gx,gy,gz");

            // Rows grouped by stroke_id; each group is one labeled window.
            std::map<std::string, std::pair<BallType, std::vector<ImuSample>>> groups;
            std::vector<std::string> order;
            for (const CsvRow& row : file.rows) {
                if (row.fields.size() != 9)
                    throw ValidationError(train_opts.input + ":" + std::to_string(row.line) + ": expected 9 fields");
                const std::string& id = row.fields[0];
                const BallType label = parse_ball_type(row.fields[1]);
                ImuSample s;
                double* slots[7] = {&s.t_ms, &s.ax, &s.ay, &s.az, &s.gx, &s.gy, &s.gz};
                for (std::size_t i = 0; i < 7; ++i) {
                    const auto value = parse_double(row.fields[i + 2]);
                    if (!value)
                        throw ValidationError(train_opts.input + ":" + std::to_string(row.line) + ": column " +
                                              std::to_string(i + 3) + ": not a number");
                    *slots[i] = *value;
                }
                auto [it, inserted] = groups.try_emplace(id, label, std::vector<ImuSample>{});
                if (inserted) order.push_back(id);
                if (it->second.first != label)
                    throw ValidationError(train_opts.input + ":" + std::to_string(row.line) + ": stroke " + id +
                                          " carries two labels");
                it->second.second.push_back(s);
            }

            std::vector<std::pair<std::vector<double>, BallType>> labeled;
            for (const std::string& id : order) {
                auto& [label, samples] = groups.at(id);
                StrokeWindow window;
                window.samples = samples;
                double best = -1.0;
                for (const ImuSample& s : samples) {
                    const double m = std::sqrt(s.ax * s.ax + s.ay * s.ay + s.az * s.az);
                    if (m > best) {
                        best = m;
                        window.peak_t_ms = s.t_ms;
                        window.peak_magnitude = m;
                    }
                }
                labeled.emplace_back(extract_features(window), label);
            }

            const StrokeModel model = train_centroids(labeled);
            const fs::path out_path = fs::path(global.out_dir) / "stroke_model.json";
            save_stroke_model(model, out_path);
            std::cout << "trained on " << labeled.size() << " strokes -> " << out_path.string() << "\n";
            return kExitOk;
        };
    });

    auto* imu_classify = imu_cmd->add_subcommand("classify", "segment a stream and label each stroke");
    struct {
        std::string input;
        std::string model;
    } classify_opts;
    imu_classify->add_option("--in", classify_opts.input, "IMU CSV stream")->required();
    imu_classify->add_option("--model", classify_opts.model, "stroke model JSON")->required();
    imu_classify->callback([&]() {
        handler = [&]() {
            const auto stream = read_imu_csv(classify_opts.input);
            const StrokeModel model = load_stroke_model(classify_opts.model);
            const auto windows = segment_strokes(stream, global.config.imu);
            std::vector<std::pair<double, StrokeClassification>> rows;
            for (const StrokeWindow& w : windows)
                rows.emplace_back(w.peak_t_ms, classify_stroke(model, extract_features(w)));
            std::ostringstream csv;
            write_classification_csv(csv, rows);
            const fs::path out_path = fs::path(global.out_dir) / "classifications.csv";
            write_file(out_path, csv.str());
            std::cout << "classified " << rows.size() << " strokes -> " << out_path.string() << "\n";
            return kExitOk;
        };
    });

    // ---- validate ----
    auto* validate_cmd = app.add_subcommand("validate", "check a dataset directory against the schemas");
    struct {
        std::string dataset;
    } validate_opts;
    validate_cmd->add_option("--dataset", validate_opts.dataset, "dataset directory")->required();
    validate_cmd->callback([&]() {
        handler = [&]() {
            const LoadResult result = load_dataset(validate_opts.dataset);
            if (result.ok()) {
                std::cout << "dataset is valid: " << result.dataset->frames.size() << " labeled frames, "
                          << result.dataset->rallies.size() << " rallies\n";
                return kExitOk;
            }
            for (const Violation& v : result.violations) std::cerr << v.str() << "\n";
            std::cerr << result.violations.size() << " violations\n";
            return kExitValidation;
        };
    });

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "run pipeline stages over a dataset");
    struct {
        std::string dataset;
        std::string stages = "decode,filter,qa,analytics";
        std::string heatmaps;
    } run_opts;
    run_cmd->add_option("--dataset", run_opts.dataset, "dataset directory")->required();
    run_cmd->add_option("--stages", run_opts.stages, "comma-separated subset of decode,filter,qa,analytics");
    run_cmd->add_option("--heatmaps", run_opts.heatmaps, "directory of heatmap PGMs for the decode stage");
    run_cmd->callback([&]() {
        handler = [&]() {
            const MatchDataset dataset = load_dataset_or_throw(run_opts.dataset);
            PipelineOptions options;
            options.out_dir = global.out_dir;
            options.heatmap_dir = run_opts.heatmaps;
            options.seed = global.seed;
            options.config = global.config;
            std::stringstream names(run_opts.stages);
            std::string name;
            while (std::getline(names, name, ',')) {
                if (!name.empty()) options.stages.insert(parse_stage(name));
            }
            const RunReport report = run_pipeline(dataset, options);
            std::cout << report.to_log();
            return kExitOk;
        };
    });

    // Allow the global flags anywhere on the command line.
    for (CLI::App* sub : {heatmap_cmd, gen, loss, decode_cmd, calibrate_cmd, filter_cmd, qa_cmd, stats_cmd,
                          stats_export, imu_cmd, imu_segment, imu_train, imu_classify, validate_cmd, run_cmd})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadArguments;
    }

    try {
        if (!global.config_path.empty()) global.config = load_config(global.config_path);
        if (!handler) return kExitBadArguments;
        return handler();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadArguments;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
