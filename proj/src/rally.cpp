#include "courtside/rally.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "courtside/error.hpp"

namespace courtside {

std::vector<std::string> validate_rally(const Rally& rally) {
    std::vector<std::string> problems;
    if (rally.start_frame > rally.end_frame)
        problems.push_back("rally " + rally.id + ": start_frame exceeds end_frame");
    for (std::size_t i = 0; i < rally.strokes.size(); ++i) {
        const Stroke& s = rally.strokes[i];
        if (s.hit_frame < rally.start_frame || s.hit_frame > rally.end_frame)
            problems.push_back("rally " + rally.id + ": stroke at frame " + std::to_string(s.hit_frame) +
                               " lies outside [" + std::to_string(rally.start_frame) + ", " +
                               std::to_string(rally.end_frame) + "]");
        if (i > 0) {
            if (s.hit_frame <= rally.strokes[i - 1].hit_frame)
                problems.push_back("rally " + rally.id + ": stroke frames must strictly increase");
            if (s.player == rally.strokes[i - 1].player)
                problems.push_back("rally " + rally.id + ": consecutive strokes must alternate players");
        }
    }
    return problems;
}

std::vector<RallyCount> stroke_count_per_rally(const std::vector<Rally>& match) {
    std::vector<RallyCount> counts;
    counts.reserve(match.size());
    for (const Rally& rally : match) counts.push_back({rally.id, rally.strokes.size(), rally.winner});
    return counts;
}

std::uint64_t BallTypeHistogram::total() const {
    std::uint64_t sum = 0;
    for (const std::uint64_t c : counts) sum += c;
    return sum;
}

std::optional<std::array<double, kBallTypeCount>> BallTypeHistogram::fractions() const {
    const std::uint64_t sum = total();
    if (sum == 0) return std::nullopt;
    std::array<double, kBallTypeCount> out{};
    for (int i = 0; i < kBallTypeCount; ++i)
        out[static_cast<std::size_t>(i)] =
            static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(sum);
    return out;
}

BallTypeHistogram ball_type_distribution(const std::vector<Rally>& match, std::optional<PlayerSlot> player) {
    BallTypeHistogram histogram;
    for (const Rally& rally : match) {
        for (const Stroke& stroke : rally.strokes) {
            if (player && stroke.player != *player) continue;
            ++histogram.counts[static_cast<std::size_t>(stroke.ball_type)];
        }
    }
    return histogram;
}

LossReasonDistribution loss_reason_distribution(const std::vector<Rally>& match) {
    LossReasonDistribution distribution;
    for (const Rally& rally : match) {
        const PlayerSlot loser = other_player(rally.winner);
        ++distribution[rally.loss_reason][static_cast<std::size_t>(loser)];
    }
    return distribution;
}

RadarData rally_radar_data(const Rally& rally) {
    RadarData radar;
    for (const Stroke& stroke : rally.strokes) {
        auto& bins = stroke.player == PlayerSlot::Top ? radar.top : radar.bottom;
        ++bins[static_cast<std::size_t>(stroke.ball_type)];
    }
    return radar;
}

namespace {

struct TrackedPoint {
    long frame;
    double x;
    double y;
};

// Found detections split into contiguous runs; gaps up to max_gap are filled
// by linear interpolation, longer gaps start a new segment.
std::vector<std::vector<TrackedPoint>> build_segments(const Trajectory& traj, int max_gap) {
    std::vector<TrackedPoint> found;
    long previous_frame = 0;
    bool first = true;
    for (const BallDetection& d : traj.detections) {
        if (!first && d.frame <= previous_frame) throw SpecError("trajectory frames must strictly increase");
        previous_frame = d.frame;
        first = false;
        if (d.status == DetectionStatus::Found) found.push_back({d.frame, d.x, d.y});
    }

    std::vector<std::vector<TrackedPoint>> segments;
    for (const TrackedPoint& p : found) {
        if (segments.empty() || p.frame - segments.back().back().frame > max_gap + 1) {
            segments.push_back({p});
            continue;
        }
        std::vector<TrackedPoint>& segment = segments.back();
        const TrackedPoint& prev = segment.back();
        for (long f = prev.frame + 1; f < p.frame; ++f) {
            const double t = static_cast<double>(f - prev.frame) / static_cast<double>(p.frame - prev.frame);
            segment.push_back({f, prev.x + t * (p.x - prev.x), prev.y + t * (p.y - prev.y)});
        }
        segment.push_back(p);
    }
    return segments;
}

}  // namespace

std::vector<long> detect_hit_times(const Trajectory& traj, const HitDetectParams& params,
                                   std::vector<std::string>* warnings) {
    if (params.smooth_window < 1 || params.smooth_window % 2 == 0)
        throw SpecError("smoothing window must be a positive odd frame count");
    if (!(traj.fps > 0.0)) throw SpecError("trajectory fps must be positive");

    std::size_t found_count = 0;
    for (const BallDetection& d : traj.detections)
        if (d.status == DetectionStatus::Found) ++found_count;
    if (found_count < 3) {
        if (warnings) warnings->push_back("too few detections for hit analysis (need at least 3 found)");
        return {};
    }

    const double angle_threshold = params.angle_threshold_deg * M_PI / 180.0;
    constexpr double kVelocityEps = 1e-9;

    std::vector<long> hits;
    std::optional<long> last_hit;
    for (const auto& segment : build_segments(traj, params.max_gap)) {
        const std::size_t n = segment.size();
        if (n < 3) continue;

        // Centered moving average, window shrinking at the ends.
        const int half = params.smooth_window / 2;
        std::vector<double> sx(n), sy(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - static_cast<std::size_t>(half) : 0;
            const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(half));
            double ax = 0.0, ay = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) {
                ax += segment[j].x;
                ay += segment[j].y;
            }
            sx[i] = ax / static_cast<double>(hi - lo + 1);
            sy[i] = ay / static_cast<double>(hi - lo + 1);
        }

        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double vx0 = sx[i] - sx[i - 1], vy0 = sy[i] - sy[i - 1];
            const double vx1 = sx[i + 1] - sx[i], vy1 = sy[i + 1] - sy[i];

            const bool reversal = (vy0 > kVelocityEps && vy1 < -kVelocityEps) ||
                                  (vy0 < -kVelocityEps && vy1 > kVelocityEps);
            bool sharp_turn = false;
            const double n0 = std::hypot(vx0, vy0);
            const double n1 = std::hypot(vx1, vy1);
            if (n0 > kVelocityEps && n1 > kVelocityEps) {
                const double cosine = std::clamp((vx0 * vx1 + vy0 * vy1) / (n0 * n1), -1.0, 1.0);
                sharp_turn = std::acos(cosine) > angle_threshold;
            }

            if (reversal || sharp_turn) {
                const long frame = segment[i].frame;
                if (!last_hit || frame - *last_hit >= params.refractory_frames) {
                    hits.push_back(frame);
                    last_hit = frame;
                }
            }
        }
    }
    return hits;
}

std::vector<SpeedSample> estimate_speed(const Trajectory& traj, int max_gap) {
    if (!(traj.fps > 0.0)) throw SpecError("trajectory fps must be positive");

    std::vector<TrackedPoint> found;
    long previous_frame = 0;
    bool first = true;
    for (const BallDetection& d : traj.detections) {
        if (!first && d.frame <= previous_frame) throw SpecError("trajectory frames must strictly increase");
        previous_frame = d.frame;
        first = false;
        if (d.status == DetectionStatus::Found) found.push_back({d.frame, d.x, d.y});
    }

    std::vector<SpeedSample> samples;
    for (std::size_t i = 1; i + 1 < found.size(); ++i) {
        if (found[i].frame - found[i - 1].frame > max_gap) continue;
        if (found[i + 1].frame - found[i].frame > max_gap) continue;
        const double dx = found[i + 1].x - found[i - 1].x;
        const double dy = found[i + 1].y - found[i - 1].y;
        const double frames = static_cast<double>(found[i + 1].frame - found[i - 1].frame);
        samples.push_back({found[i].frame, std::hypot(dx, dy) / frames * traj.fps});
    }
    return samples;
}

std::string ball_type_bar_payload(const std::vector<Rally>& match) {
    nlohmann::json j;
    j["labels"] = ball_type_names();
    const BallTypeHistogram top = ball_type_distribution(match, PlayerSlot::Top);
    const BallTypeHistogram bottom = ball_type_distribution(match, PlayerSlot::Bottom);
    j["series"]["top"] = top.counts;
    j["series"]["bottom"] = bottom.counts;
    return j.dump(2) + "\n";
}

std::string loss_reason_bar_payload(const std::vector<Rally>& match) {
    const LossReasonDistribution distribution = loss_reason_distribution(match);
    nlohmann::json j;
    std::vector<std::string> labels;
    std::vector<std::uint64_t> top, bottom;
    for (const auto& [reason, counts] : distribution) {
        labels.push_back(reason);
        top.push_back(counts[static_cast<std::size_t>(PlayerSlot::Top)]);
        bottom.push_back(counts[static_cast<std::size_t>(PlayerSlot::Bottom)]);
    }
    j["labels"] = labels;
    j["series"]["top"] = top;
    j["series"]["bottom"] = bottom;
    return j.dump(2) + "\n";
}

std::string radar_payload(const Rally& rally) {
    const RadarData radar = rally_radar_data(rally);
    nlohmann::json j;
    j["axes"] = ball_type_names();
    j["top"] = radar.top;
    j["bottom"] = radar.bottom;
    return j.dump(2) + "\n";
}

std::string rally_series_payload(const std::vector<Rally>& match) {
    nlohmann::json j = nlohmann::json::array();
    for (const RallyCount& count : stroke_count_per_rally(match)) {
        j.push_back({{"rally_id", count.rally_id},
                     {"count", count.strokes},
                     {"winner", player_slot_name(count.winner)}});
    }
    return j.dump(2) + "\n";
}

}  // namespace courtside
