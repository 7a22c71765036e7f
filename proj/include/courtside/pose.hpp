#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "courtside/types.hpp"

namespace courtside {

// Default 15-point skeleton layout; callers may substitute their own list.
const std::vector<std::string>& default_keypoint_names();

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    bool visible = false;
};

struct Skeleton {
    long frame = 0;
    PlayerSlot slot = PlayerSlot::Top;
    std::vector<Keypoint> keypoints;
    std::optional<PixelPoint> racket;  // labeled at the racket neck, excluded from features
};

// Box-normalized keypoint coordinates, two values per keypoint. Invisible
// keypoints hold NaN until impute_missing fills them with dataset means.
struct SkeletonFeature {
    long frame = 0;
    PlayerSlot slot = PlayerSlot::Top;
    std::vector<double> values;
    std::vector<bool> missing;
};

/// Translates keypoints to the box's top-left and scales by 1/w, 1/h.
/// Throws FeatureError when no keypoint is visible, SpecError on a
/// non-positive box.
SkeletonFeature normalize_skeleton(const Skeleton& skeleton, const BoundingBox& box);

/// Replaces missing entries with the per-dimension mean over the features
/// where that dimension is present (0.5 when a dimension is missing everywhere).
void impute_missing(std::vector<SkeletonFeature>& features);

struct ClusterReport {
    std::vector<int> assignment;                    // cluster id per feature
    std::vector<std::vector<double>> centroids;     // k centroid vectors
    std::vector<double> distance;                   // distance to own centroid
    std::vector<bool> outlier;                      // distance > threshold
    double outlier_threshold = 0.0;
    double outlier_percentile = 0.0;
    std::vector<double> objective_history;          // sum of squared distances per Lloyd iteration
    std::vector<long> frames;                       // carried over from the features
    std::vector<PlayerSlot> slots;
};

/// Seeded k-means++ plus Lloyd iterations (centroid shift < 1e-6 or 300
/// rounds). A skeleton is an outlier iff its distance to its centroid exceeds
/// the given percentile of all distances. Throws ClusteringError when
/// k < 1 or k exceeds the feature count.
ClusterReport cluster_skeletons(const std::vector<SkeletonFeature>& features, int k,
                                double outlier_percentile = 0.95, std::uint64_t seed = 0);

struct OutlierEntry {
    long frame = 0;
    PlayerSlot slot = PlayerSlot::Top;
    double distance = 0.0;
};

/// The manual-relabel worklist: outliers sorted by distance descending.
std::vector<OutlierEntry> outlier_report(const ClusterReport& report);

// JSON-lines ingest: {"frame": n, "player_slot": "top", "keypoints": [[x, y, visible], ...],
// "racket": [x, y]}. Malformed lines are reported through `errors` and skipped.
std::vector<Skeleton> read_skeletons_jsonl(const std::filesystem::path& path, std::size_t keypoint_count,
                                           std::vector<std::string>* errors = nullptr);
void write_skeletons_jsonl(const std::vector<Skeleton>& skeletons, const std::filesystem::path& path);

void write_outliers_csv(std::ostream& out, const std::vector<OutlierEntry>& entries);

}  // namespace courtside
