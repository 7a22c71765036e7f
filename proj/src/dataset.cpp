#include "courtside/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "courtside/csv.hpp"
#include "courtside/error.hpp"
#include "courtside/format.hpp"

namespace courtside {

const std::vector<std::string>& default_loss_reasons() {
    static const std::vector<std::string> reasons = {"net", "out", "opponent_winner", "body_touch", "fault"};
    return reasons;
}

std::string Violation::str() const {
    std::string out = file;
    if (line > 0) out += ":" + std::to_string(line);
    if (column > 0) out += ":col" + std::to_string(column);
    out += ": " + message;
    return out;
}

namespace {

class DatasetLoader {
public:
    explicit DatasetLoader(const std::filesystem::path& root) : root_(root) {}

    LoadResult load() {
        load_meta();
        if (!violations_.empty() && !meta_ok_) return finish();  // nothing sensible without meta
        load_ball();
        load_boxes();
        load_skeletons();
        load_rallies();
        load_strokes();
        load_calibration_file();
        cross_validate();
        return finish();
    }

private:
    void add(const std::string& file, std::size_t line, std::size_t column, const std::string& message) {
        violations_.push_back({file, line, column, message});
    }

    LoadResult finish() {
        LoadResult result;
        result.violations = std::move(violations_);
        if (result.violations.empty()) result.dataset = std::move(dataset_);
        return result;
    }

    FrameLabel& frame_label(long frame) {
        auto [it, inserted] = dataset_.frames.try_emplace(frame);
        if (inserted) it->second.frame = frame;
        return it->second;
    }

    void load_meta() {
        const auto path = root_ / "meta.json";
        std::ifstream in(path);
        if (!in) {
            add("meta.json", 0, 0, "required file is missing");
            return;
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            add("meta.json", 0, 0, e.what());
            return;
        }
        try {
            VideoMeta& v = dataset_.video;
            v.schema_version = j.value("schema_version", 1);
            if (j.contains("video")) {
                const auto& video = j["video"];
                v.original_width = video.value("original_width", v.original_width);
                v.original_height = video.value("original_height", v.original_height);
                v.working_width = video.value("working_width", v.working_width);
                v.working_height = video.value("working_height", v.working_height);
                v.fps = video.value("fps", v.fps);
            }
            if (v.original_width < 1 || v.original_height < 1 || v.working_width < 1 || v.working_height < 1)
                add("meta.json", 0, 0, "video dimensions must be positive");
            if (!(v.fps > 0.0)) add("meta.json", 0, 0, "fps must be positive");

            dataset_.loss_reasons =
                j.value("loss_reasons", default_loss_reasons());
            if (dataset_.loss_reasons.empty()) add("meta.json", 0, 0, "loss_reasons must not be empty");
            dataset_.keypoint_names = j.value("keypoint_names", default_keypoint_names());
            if (dataset_.keypoint_names.empty()) add("meta.json", 0, 0, "keypoint_names must not be empty");
        } catch (const nlohmann::json::exception& e) {
            add("meta.json", 0, 0, e.what());
            return;
        }
        meta_ok_ = true;
    }

    void load_ball() {
        const auto path = root_ / "ball.csv";
        if (!std::filesystem::exists(path)) return;
        has_frame_files_ = true;
        CsvFile file;
        try {
            file = read_csv(path);
        } catch (const IoError& e) {
            add("ball.csv", 0, 0, e.what());
            return;
        }
        const std::vector<std::string> expected = {"frame", "visible", "x", "y"};
        if (file.header != expected) {
            add("ball.csv", 1, 0, "expected header frame,visible,x,y");
            return;
        }
        std::set<long> seen;
        for (const CsvRow& row : file.rows) {
            if (row.fields.size() != 4) {
                add("ball.csv", row.line, 0, "expected 4 fields");
                continue;
            }
            const auto frame = parse_long(row.fields[0]);
            if (!frame || *frame < 0) {
                add("ball.csv", row.line, 1, "bad frame index");
                continue;
            }
            if (!seen.insert(*frame).second) {
                add("ball.csv", row.line, 1, "duplicate ball label for frame " + std::to_string(*frame));
                continue;
            }
            const auto visible = parse_long(row.fields[1]);
            if (!visible || (*visible != 0 && *visible != 1)) {
                add("ball.csv", row.line, 2, "visible must be 0 or 1");
                continue;
            }
            BallLabel label;
            label.frame = *frame;
            label.visible = *visible == 1;
            if (label.visible) {
                const auto x = parse_double(row.fields[2]);
                const auto y = parse_double(row.fields[3]);
                if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
                    add("ball.csv", row.line, 3, "visible ball needs finite x,y");
                    continue;
                }
                label.x = *x;
                label.y = *y;
            } else if (!row.fields[2].empty() || !row.fields[3].empty()) {
                add("ball.csv", row.line, 3, "invisible ball must leave x,y empty");
                continue;
            }
            frame_label(label.frame).ball = label;
        }
    }

    void load_boxes() {
        const auto path = root_ / "boxes.csv";
        if (!std::filesystem::exists(path)) return;
        has_frame_files_ = true;
        CsvFile file;
        try {
            file = read_csv(path);
        } catch (const IoError& e) {
            add("boxes.csv", 0, 0, e.what());
            return;
        }
        const std::vector<std::string> expected = {"frame", "player_slot", "x", "y", "w", "h", "score"};
        if (file.header != expected) {
            add("boxes.csv", 1, 0, "expected header frame,player_slot,x,y,w,h,score");
            return;
        }
        std::set<std::pair<long, int>> seen;
        for (const CsvRow& row : file.rows) {
            if (row.fields.size() != 7) {
                add("boxes.csv", row.line, 0, "expected 7 fields");
                continue;
            }
            const auto frame = parse_long(row.fields[0]);
            if (!frame || *frame < 0) {
                add("boxes.csv", row.line, 1, "bad frame index");
                continue;
            }
            PlayerSlot slot;
            try {
                slot = parse_player_slot(row.fields[1]);
            } catch (const SpecError& e) {
                add("boxes.csv", row.line, 2, e.what());
                continue;
            }
            if (!seen.insert({*frame, static_cast<int>(slot)}).second) {
                add("boxes.csv", row.line, 2,
                    "duplicate box for frame " + std::to_string(*frame) + " slot " + row.fields[1]);
                continue;
            }
            const auto x = parse_double(row.fields[2]);
            const auto y = parse_double(row.fields[3]);
            const auto w = parse_double(row.fields[4]);
            const auto h = parse_double(row.fields[5]);
            const auto score = parse_double(row.fields[6]);
            if (!x || !y || !w || !h || !score) {
                add("boxes.csv", row.line, 3, "box fields must be numeric");
                continue;
            }
            if (!(*w > 0.0) || !(*h > 0.0)) {
                add("boxes.csv", row.line, 5, "box width and height must be positive");
                continue;
            }
            if (*score < 0.0 || *score > 1.0) {
                add("boxes.csv", row.line, 7, "score must lie in [0, 1]");
                continue;
            }
            BoundingBox box;
            box.x = *x;
            box.y = *y;
            box.w = *w;
            box.h = *h;
            box.score = *score;
            box.source_frame = *frame;
            frame_label(*frame).boxes.emplace_back(slot, box);
        }
    }

    void load_skeletons() {
        const auto path = root_ / "skeletons.jsonl";
        if (!std::filesystem::exists(path)) return;
        has_frame_files_ = true;
        std::vector<std::string> errors;
        std::vector<Skeleton> skeletons;
        try {
            skeletons = read_skeletons_jsonl(path, dataset_.keypoint_names.size(), &errors);
        } catch (const IoError& e) {
            add("skeletons.jsonl", 0, 0, e.what());
            return;
        }
        for (const std::string& message : errors) add("skeletons.jsonl", 0, 0, message);
        std::set<std::pair<long, int>> seen;
        for (Skeleton& s : skeletons) {
            if (!seen.insert({s.frame, static_cast<int>(s.slot)}).second) {
                add("skeletons.jsonl", 0, 0,
                    "duplicate skeleton for frame " + std::to_string(s.frame) + " slot " + player_slot_name(s.slot));
                continue;
            }
            const long frame = s.frame;
            frame_label(frame).skeletons.push_back(std::move(s));
        }
    }

    void load_rallies() {
        const auto path = root_ / "rallies.csv";
        if (!std::filesystem::exists(path)) return;
        CsvFile file;
        try {
            file = read_csv(path);
        } catch (const IoError& e) {
            add("rallies.csv", 0, 0, e.what());
            return;
        }
        const std::vector<std::string> expected = {"rally_id", "start_frame", "end_frame", "winner", "loss_reason"};
        if (file.header != expected) {
            add("rallies.csv", 1, 0, "expected header rally_id,start_frame,end_frame,winner,loss_reason");
            return;
        }
        std::set<std::string> ids;
        for (const CsvRow& row : file.rows) {
            if (row.fields.size() != 5) {
                add("rallies.csv", row.line, 0, "expected 5 fields");
                continue;
            }
            Rally rally;
            rally.id = row.fields[0];
            if (rally.id.empty()) {
                add("rallies.csv", row.line, 1, "rally_id must not be empty");
                continue;
            }
            if (!ids.insert(rally.id).second) {
                add("rallies.csv", row.line, 1, "duplicate rally_id " + rally.id);
                continue;
            }
            const auto start = parse_long(row.fields[1]);
            const auto end = parse_long(row.fields[2]);
            if (!start || !end) {
                add("rallies.csv", row.line, 2, "frame bounds must be integers");
                continue;
            }
            rally.start_frame = *start;
            rally.end_frame = *end;
            if (rally.start_frame > rally.end_frame) {
                add("rallies.csv", row.line, 2, "rally " + rally.id + ": start_frame exceeds end_frame");
                continue;
            }
            try {
                rally.winner = parse_player_slot(row.fields[3]);
            } catch (const SpecError& e) {
                add("rallies.csv", row.line, 4, e.what());
                continue;
            }
            rally.loss_reason = row.fields[4];
            if (std::find(dataset_.loss_reasons.begin(), dataset_.loss_reasons.end(), rally.loss_reason) ==
                dataset_.loss_reasons.end()) {
                add("rallies.csv", row.line, 5,
                    "loss reason '" + rally.loss_reason + "' is not in the configured vocabulary");
                continue;
            }
            if (!dataset_.rallies.empty() && rally.start_frame <= dataset_.rallies.back().end_frame) {
                add("rallies.csv", row.line, 2,
                    "rally " + rally.id + " overlaps or precedes rally " + dataset_.rallies.back().id);
                continue;
            }
            dataset_.rallies.push_back(std::move(rally));
        }
    }

    void load_strokes() {
        const auto path = root_ / "strokes.csv";
        if (!std::filesystem::exists(path)) return;
        CsvFile file;
        try {
            file = read_csv(path);
        } catch (const IoError& e) {
            add("strokes.csv", 0, 0, e.what());
            return;
        }
        const std::vector<std::string> expected = {"rally_id", "hit_frame", "player", "ball_type"};
        if (file.header != expected) {
            add("strokes.csv", 1, 0, "expected header rally_id,hit_frame,player,ball_type");
            return;
        }
        for (const CsvRow& row : file.rows) {
            if (row.fields.size() != 4) {
                add("strokes.csv", row.line, 0, "expected 4 fields");
                continue;
            }
            const std::string& rally_id = row.fields[0];
            auto rally = std::find_if(dataset_.rallies.begin(), dataset_.rallies.end(),
                                      [&](const Rally& r) { return r.id == rally_id; });
            if (rally == dataset_.rallies.end()) {
                add("strokes.csv", row.line, 1, "unknown rally_id " + rally_id);
                continue;
            }
            Stroke stroke;
            const auto frame = parse_long(row.fields[1]);
            if (!frame) {
                add("strokes.csv", row.line, 2, "hit_frame must be an integer");
                continue;
            }
            stroke.hit_frame = *frame;
            try {
                stroke.player = parse_player_slot(row.fields[2]);
            } catch (const SpecError& e) {
                add("strokes.csv", row.line, 3, e.what());
                continue;
            }
            try {
                stroke.ball_type = parse_ball_type(row.fields[3]);
            } catch (const SpecError& e) {
                add("strokes.csv", row.line, 4, e.what());
                continue;
            }
            if (stroke.hit_frame < rally->start_frame || stroke.hit_frame > rally->end_frame) {
                add("strokes.csv", row.line, 2,
                    "rally " + rally_id + ": stroke frame " + std::to_string(stroke.hit_frame) +
                        " lies outside the rally range");
                continue;
            }
            if (!rally->strokes.empty()) {
                if (stroke.hit_frame <= rally->strokes.back().hit_frame) {
                    add("strokes.csv", row.line, 2, "rally " + rally_id + ": stroke frames must strictly increase");
                    continue;
                }
                if (stroke.player == rally->strokes.back().player) {
                    add("strokes.csv", row.line, 3, "rally " + rally_id + ": consecutive strokes must alternate players");
                    continue;
                }
            }
            rally->strokes.push_back(stroke);
        }
    }

    void load_calibration_file() {
        const auto path = root_ / "calibration.json";
        if (!std::filesystem::exists(path)) return;
        try {
            dataset_.calibration = load_calibration(path);
        } catch (const Error& e) {
            add("calibration.json", 0, 0, e.what());
        }
    }

    void cross_validate() {
        // Stroke frames must be anchored by frame labels, but only when the
        // dataset carries frame-level files at all; rally-only datasets are valid.
        if (!has_frame_files_) return;
        for (const Rally& rally : dataset_.rallies) {
            for (const Stroke& stroke : rally.strokes) {
                if (dataset_.frames.find(stroke.hit_frame) == dataset_.frames.end()) {
                    add("strokes.csv", 0, 0,
                        "rally " + rally.id + ": stroke frame " + std::to_string(stroke.hit_frame) +
                            " has no frame label row");
                }
            }
        }
    }

    std::filesystem::path root_;
    MatchDataset dataset_;
    std::vector<Violation> violations_;
    bool meta_ok_ = false;
    bool has_frame_files_ = false;
};

}  // namespace

LoadResult load_dataset(const std::filesystem::path& root) {
    if (!std::filesystem::exists(root)) {
        LoadResult result;
        result.violations.push_back({root.string(), 0, 0, "dataset directory does not exist"});
        return result;
    }
    return DatasetLoader(root).load();
}

MatchDataset load_dataset_or_throw(const std::filesystem::path& root) {
    LoadResult result = load_dataset(root);
    if (!result.ok()) {
        std::string message = "dataset validation failed:";
        for (const Violation& v : result.violations) message += "\n  " + v.str();
        throw ValidationError(message);
    }
    return std::move(*result.dataset);
}

void save_dataset(const MatchDataset& dataset, const std::filesystem::path& root) {
    std::filesystem::create_directories(root);

    {
        nlohmann::json j;
        j["schema_version"] = dataset.video.schema_version;
        j["video"] = {{"original_width", dataset.video.original_width},
                      {"original_height", dataset.video.original_height},
                      {"working_width", dataset.video.working_width},
                      {"working_height", dataset.video.working_height},
                      {"fps", dataset.video.fps}};
        j["loss_reasons"] = dataset.loss_reasons;
        j["keypoint_names"] = dataset.keypoint_names;
        std::ofstream out(root / "meta.json");
        if (!out) throw IoError("cannot write meta.json under " + root.string());
        out << j.dump(2) << "\n";
    }

    // Optional files are written only when they carry records, so an empty
    // collection round-trips to an equally absent file.
    bool any_ball = false, any_box = false, any_skeleton = false;
    for (const auto& [frame, label] : dataset.frames) {
        any_ball = any_ball || label.ball.has_value();
        any_box = any_box || !label.boxes.empty();
        any_skeleton = any_skeleton || !label.skeletons.empty();
    }

    if (any_ball) {
        std::ofstream out(root / "ball.csv");
        if (!out) throw IoError("cannot write ball.csv under " + root.string());
        out << "frame,visible,x,y\n";
        for (const auto& [frame, label] : dataset.frames) {
            if (!label.ball) continue;
            if (label.ball->visible) {
                out << frame << ",1," << format_fixed(label.ball->x, 2) << "," << format_fixed(label.ball->y, 2)
                    << "\n";
            } else {
                out << frame << ",0,,\n";
            }
        }
    }

    if (any_box) {
        std::ofstream out(root / "boxes.csv");
        if (!out) throw IoError("cannot write boxes.csv under " + root.string());
        out << "frame,player_slot,x,y,w,h,score\n";
        for (const auto& [frame, label] : dataset.frames) {
            for (const auto& [slot, box] : label.boxes) {
                out << frame << "," << player_slot_name(slot) << "," << format_fixed(box.x, 2) << ","
                    << format_fixed(box.y, 2) << "," << format_fixed(box.w, 2) << "," << format_fixed(box.h, 2)
                    << "," << format_fixed(box.score, 2) << "\n";
            }
        }
    }

    if (any_skeleton) {
        std::vector<Skeleton> all;
        for (const auto& [frame, label] : dataset.frames)
            all.insert(all.end(), label.skeletons.begin(), label.skeletons.end());
        write_skeletons_jsonl(all, root / "skeletons.jsonl");
    }

    if (!dataset.rallies.empty()) {
        std::ofstream out(root / "rallies.csv");
        if (!out) throw IoError("cannot write rallies.csv under " + root.string());
        out << "rally_id,start_frame,end_frame,winner,loss_reason\n";
        for (const Rally& rally : dataset.rallies) {
            out << rally.id << "," << rally.start_frame << "," << rally.end_frame << ","
                << player_slot_name(rally.winner) << "," << rally.loss_reason << "\n";
        }

        std::ofstream strokes(root / "strokes.csv");
        if (!strokes) throw IoError("cannot write strokes.csv under " + root.string());
        strokes << "rally_id,hit_frame,player,ball_type\n";
        for (const Rally& rally : dataset.rallies) {
            for (const Stroke& stroke : rally.strokes) {
                strokes << rally.id << "," << stroke.hit_frame << "," << player_slot_name(stroke.player) << ","
                        << ball_type_name(stroke.ball_type) << "\n";
            }
        }
    }

    if (!dataset.calibration.empty()) save_calibration(dataset.calibration, root / "calibration.json");
}

}  // namespace courtside
