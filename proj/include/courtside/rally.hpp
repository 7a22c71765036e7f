#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "courtside/decode.hpp"
#include "courtside/types.hpp"

namespace courtside {

struct Stroke {
    long hit_frame = 0;
    PlayerSlot player = PlayerSlot::Top;
    BallType ball_type = BallType::Cut;
};

struct Rally {
    std::string id;
    long start_frame = 0;
    long end_frame = 0;
    std::vector<Stroke> strokes;  // strictly increasing hit frames, alternating players
    PlayerSlot winner = PlayerSlot::Top;
    std::string loss_reason;
};

/// Checks the rally invariants (frame range, stroke ordering, alternation);
/// returns human-readable violations, empty when valid.
std::vector<std::string> validate_rally(const Rally& rally);

struct RallyCount {
    std::string rally_id;
    std::size_t strokes = 0;
    PlayerSlot winner = PlayerSlot::Top;
};

std::vector<RallyCount> stroke_count_per_rally(const std::vector<Rally>& match);

struct BallTypeHistogram {
    std::array<std::uint64_t, kBallTypeCount> counts{};

    std::uint64_t total() const;
    bool empty() const { return total() == 0; }
    // Fractions over the total; unavailable (nullopt) on an empty histogram.
    std::optional<std::array<double, kBallTypeCount>> fractions() const;
};

BallTypeHistogram ball_type_distribution(const std::vector<Rally>& match,
                                         std::optional<PlayerSlot> player = std::nullopt);

// reason -> count per losing player, indexed by PlayerSlot.
using LossReasonDistribution = std::map<std::string, std::array<std::uint64_t, 2>>;

LossReasonDistribution loss_reason_distribution(const std::vector<Rally>& match);

struct RadarData {
    std::array<std::uint64_t, kBallTypeCount> top{};
    std::array<std::uint64_t, kBallTypeCount> bottom{};
};

RadarData rally_radar_data(const Rally& rally);

// Ball positions over time; frames strictly increasing.
struct Trajectory {
    std::vector<BallDetection> detections;
    double fps = 30.0;
};

struct HitDetectParams {
    int smooth_window = 3;          // centered moving-average width, frames
    double angle_threshold_deg = 60.0;
    int refractory_frames = 5;      // minimum spacing between reported hits
    int max_gap = 3;                // longest missing-detection run bridged by interpolation
};

/// Frames where the smoothed velocity reverses its vertical component or
/// turns by more than the angle threshold. Fewer than 3 found detections
/// yield an empty result with a warning.
std::vector<long> detect_hit_times(const Trajectory& traj, const HitDetectParams& params = {},
                                   std::vector<std::string>* warnings = nullptr);

struct SpeedSample {
    long frame = 0;
    double speed = 0.0;  // px/s
};

/// Central-difference speed at interior found detections; neighbors further
/// than max_gap frames away produce no sample.
std::vector<SpeedSample> estimate_speed(const Trajectory& traj, int max_gap = 3);

// Chart payloads (JSON text) for external plotting layers.
std::string ball_type_bar_payload(const std::vector<Rally>& match);
std::string loss_reason_bar_payload(const std::vector<Rally>& match);
std::string radar_payload(const Rally& rally);
std::string rally_series_payload(const std::vector<Rally>& match);

}  // namespace courtside
