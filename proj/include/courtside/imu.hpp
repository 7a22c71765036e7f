#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "courtside/types.hpp"

namespace courtside {

// One 6-axis racket sensor reading: acceleration in g, angular rate in deg/s.
struct ImuSample {
    double t_ms = 0.0;
    double ax = 0.0, ay = 0.0, az = 0.0;
    double gx = 0.0, gy = 0.0, gz = 0.0;
};

struct SegmentConfig {
    double threshold_g = 3.0;
    double window_ms = 400.0;     // total window length centered on the peak
    double refractory_ms = 300.0;
};

struct StrokeWindow {
    std::vector<ImuSample> samples;
    double peak_t_ms = 0.0;
    double peak_magnitude = 0.0;  // |a| at the peak, g
};

/// Local maxima of acceleration magnitude above the threshold, at least
/// refractory_ms apart, each wrapped in a +-window/2 slice truncated at the
/// stream edges. Throws StreamError on non-monotone timestamps.
std::vector<StrokeWindow> segment_strokes(const std::vector<ImuSample>& stream, const SegmentConfig& config = {});

inline constexpr std::size_t kImuFeatureCount = 26;

/// Per axis mean, standard deviation, min, max (24 values, axes in
/// ax..az, gx..gz order), then peak magnitude and window energy
/// (sum of squared |a| times the preceding sample interval, g^2 s).
std::vector<double> extract_features(const StrokeWindow& window);

struct StrokeModel {
    std::vector<double> mean;   // feature normalization
    std::vector<double> scale;
    std::array<std::vector<double>, kBallTypeCount> centroids;  // canonical class order
};

/// z-normalizes the training features and stores per-class mean vectors.
/// Throws TrainingError naming the first class with no examples.
StrokeModel train_centroids(const std::vector<std::pair<std::vector<double>, BallType>>& labeled);

struct StrokeClassification {
    BallType label = BallType::Cut;
    double confidence = 0.0;
    std::array<double, kBallTypeCount> confidences{};  // softmin over centroid distances
};

/// Nearest centroid in normalized feature space; ties resolve to the earlier
/// class in canonical order. Throws ClassificationError on non-finite input.
StrokeClassification classify_stroke(const StrokeModel& model, const std::vector<double>& features);

// CSV stream with required header `t_ms,ax,ay,az,gx,gy,gz`.
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
void write_imu_csv(const std::vector<ImuSample>& stream, const std::filesystem::path& path);

// Model file: JSON with normalization statistics and the 7 named centroids.
void save_stroke_model(const StrokeModel& model, const std::filesystem::path& path);
StrokeModel load_stroke_model(const std::filesystem::path& path);

// Classification log rows `peak_t_ms,label,confidence`.
void write_classification_csv(std::ostream& out,
                              const std::vector<std::pair<double, StrokeClassification>>& rows);

}  // namespace courtside
