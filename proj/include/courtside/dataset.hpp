#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "courtside/court.hpp"
#include "courtside/pose.hpp"
#include "courtside/rally.hpp"
#include "courtside/types.hpp"

namespace courtside {

struct VideoMeta {
    int schema_version = 1;
    int original_width = 1280;
    int original_height = 720;
    int working_width = 640;
    int working_height = 480;
    double fps = 30.0;
};

struct BallLabel {
    long frame = 0;
    bool visible = false;
    double x = 0.0;  // original-resolution pixels
    double y = 0.0;
};

// Everything labeled on one frame; coordinates stay at original resolution.
struct FrameLabel {
    long frame = 0;
    std::optional<BallLabel> ball;
    std::vector<std::pair<PlayerSlot, BoundingBox>> boxes;
    std::vector<Skeleton> skeletons;
};

struct MatchDataset {
    VideoMeta video;
    std::vector<std::string> loss_reasons;    // allowed loss-reason vocabulary
    std::vector<std::string> keypoint_names;  // skeleton layout
    std::map<long, FrameLabel> frames;
    std::vector<Rally> rallies;
    std::vector<Correspondence> calibration;

    double scale_x() const { return static_cast<double>(video.working_width) / video.original_width; }
    double scale_y() const { return static_cast<double>(video.working_height) / video.original_height; }
    // Per-axis rescale to the working grid, applied on the way into heatmap work.
    PixelPoint to_working(const PixelPoint& p) const { return {p.x * scale_x(), p.y * scale_y()}; }
};

const std::vector<std::string>& default_loss_reasons();

struct Violation {
    std::string file;
    std::size_t line = 0;    // 1-based, 0 when not row-specific
    std::size_t column = 0;  // 1-based CSV column, 0 when not applicable
    std::string message;

    std::string str() const;
};

struct LoadResult {
    std::optional<MatchDataset> dataset;  // present only when no violations
    std::vector<Violation> violations;

    bool ok() const { return violations.empty() && dataset.has_value(); }
};

/// Loads `meta.json` plus the optional `ball.csv`, `boxes.csv`,
/// `skeletons.jsonl`, `rallies.csv`, `strokes.csv`, `calibration.json`,
/// cross-validating every dataset invariant. All violations are collected;
/// nothing is accepted partially.
LoadResult load_dataset(const std::filesystem::path& root);

/// load_dataset that throws ValidationError listing the violations.
MatchDataset load_dataset_or_throw(const std::filesystem::path& root);

/// Writes the canonical file set (coordinates at original resolution,
/// 2-decimal formatting). save then load is lossless.
void save_dataset(const MatchDataset& dataset, const std::filesystem::path& root);

}  // namespace courtside
