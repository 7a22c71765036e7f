#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "courtside/heatmap.hpp"

namespace courtside {

enum class DecodeMode { Circle, Argmax };

struct DecoderConfig {
    int threshold = 128;                // binarization cut, strict greater-than
    int min_radius = 2;                 // px, radius search window
    int max_radius = 10;                // px
    double gradient_threshold = 128.0;  // Sobel magnitude cut for edge pixels
    int accumulator_threshold = 10;     // minimum votes for a candidate center
    double min_center_distance = 10.0;  // px between accepted centers
    int min_component_size = 3;         // px, speckle pre-filter
    DecodeMode mode = DecodeMode::Circle;

    void validate() const;  // throws SpecError
};

// Values restricted to {0, 255}, row-major.
struct BinaryMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    std::uint8_t at(int x, int y) const { return values[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return values[index(x, y)]; }
};

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    int votes = 0;
};

enum class DetectionStatus { Found, Absent };

struct BallDetection {
    long frame = 0;
    DetectionStatus status = DetectionStatus::Absent;
    double x = 0.0;  // valid only when status == Found
    double y = 0.0;
};

/// 255 where the heatmap value is strictly greater than the threshold, else 0.
BinaryMap binarize(const Heatmap& heatmap, int threshold);

/// Hough gradient circle search on a binary map.
///
/// Components smaller than min_component_size are erased first. 3x3 Sobel
/// gradients mark edge pixels; each edge pixel votes along both gradient
/// directions at every integer radius in [min_radius, max_radius] into a
/// 1 px accumulator. Accumulator local maxima above accumulator_threshold,
/// kept greedily at least min_center_distance apart, become centers (refined
/// by the vote-weighted 3x3 centroid); the radius is the distance mode of
/// nearby edge pixels. Result is sorted by votes descending, ties by (y, x).
std::vector<Circle> find_circles(const BinaryMap& binary, const DecoderConfig& config);

/// Circle mode: binarize and search; exactly one circle means a ball at its
/// center, anything else means absent. Argmax mode: position of the maximum
/// value if it exceeds the threshold, ties broken by smallest row-major index.
BallDetection decode_ball(const Heatmap& heatmap, const DecoderConfig& config, long frame = 0);

// CSV rows `frame,status,x,y`, coordinates with two decimals, empty when absent.
void write_detections_csv(std::ostream& out, const std::vector<BallDetection>& detections);
std::vector<BallDetection> read_detections_csv(const std::filesystem::path& path);

}  // namespace courtside
