#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "courtside/error.hpp"
#include "courtside/rally.hpp"
#include "courtside/rng.hpp"

using namespace courtside;

namespace {

Rally make_rally(const std::string& id, long start, PlayerSlot winner, const std::string& reason,
                 const std::vector<BallType>& types, PlayerSlot first_player = PlayerSlot::Top) {
    Rally rally;
    rally.id = id;
    rally.start_frame = start;
    rally.end_frame = start + static_cast<long>(types.size()) * 10 + 20;
    rally.winner = winner;
    rally.loss_reason = reason;
    PlayerSlot player = first_player;
    long frame = start + 5;
    for (const BallType type : types) {
        rally.strokes.push_back({frame, player, type});
        frame += 10;
        player = other_player(player);
    }
    return rally;
}

std::vector<Rally> random_match(std::mt19937_64& rng, int rallies) {
    static const std::vector<std::string> reasons = {"net", "out", "fault"};
    std::vector<Rally> match;
    long frame = 0;
    for (int i = 0; i < rallies; ++i) {
        const int strokes = static_cast<int>(uniform_index(rng, 12));
        std::vector<BallType> types;
        for (int s = 0; s < strokes; ++s) types.push_back(static_cast<BallType>(uniform_index(rng, 7)));
        const PlayerSlot winner = uniform_unit(rng) < 0.5 ? PlayerSlot::Top : PlayerSlot::Bottom;
        const PlayerSlot first = uniform_unit(rng) < 0.5 ? PlayerSlot::Top : PlayerSlot::Bottom;
        match.push_back(make_rally("r" + std::to_string(i), frame, winner,
                                   reasons[uniform_index(rng, reasons.size())], types, first));
        frame = match.back().end_frame + 10;
    }
    return match;
}

Trajectory line_trajectory(int frames, double vx, double vy, double fps = 30.0) {
    Trajectory traj;
    traj.fps = fps;
    for (int f = 0; f < frames; ++f)
        traj.detections.push_back({f, DetectionStatus::Found, 100.0 + vx * f, 100.0 + vy * f});
    return traj;
}

// Vertical zig-zag with apexes at known frames.
Trajectory triangle_trajectory(int frames, int period, double slope = 8.0) {
    Trajectory traj;
    traj.fps = 30.0;
    double y = 200.0;
    int direction = 1;
    for (int f = 0; f < frames; ++f) {
        traj.detections.push_back({f, DetectionStatus::Found, 100.0 + 2.0 * f, y});
        if ((f + 1) % period == 0) direction = -direction;
        y += direction * slope;
    }
    return traj;
}

}  // namespace

TEST_CASE("ball type names parse case-insensitively") {
    CHECK(parse_ball_type("smash") == BallType::Smash);
    CHECK(parse_ball_type("SMASH") == BallType::Smash);
    CHECK(parse_ball_type("Long") == BallType::Long);
    CHECK_THROWS_AS(parse_ball_type("serve"), SpecError);
    CHECK(ball_type_names().size() == 7);
    CHECK(ball_type_name(BallType::Netplay) == "netplay");
}

TEST_CASE("stroke_count_per_rally") {
    CHECK(stroke_count_per_rally({}).empty());

    const Rally rally = make_rally("r0", 0, PlayerSlot::Top, "net",
                                   {BallType::Long, BallType::Lob, BallType::Smash, BallType::Drive, BallType::Cut,
                                    BallType::Rush, BallType::Netplay});
    const auto counts = stroke_count_per_rally({rally});
    REQUIRE(counts.size() == 1);
    CHECK(counts[0].rally_id == "r0");
    CHECK(counts[0].strokes == 7);
    CHECK(counts[0].winner == PlayerSlot::Top);

    std::mt19937_64 rng(55);
    const auto match = random_match(rng, 5);
    const auto all = stroke_count_per_rally(match);
    REQUIRE(all.size() == 5);
    std::size_t total = 0;
    for (const auto& c : all) total += c.strokes;
    std::size_t recount = 0;
    for (const Rally& r : match) recount += r.strokes.size();
    CHECK(total == recount);
}

TEST_CASE("ball_type_distribution") {
    CHECK(ball_type_distribution({}).empty());
    CHECK(!ball_type_distribution({}).fractions().has_value());

    std::vector<BallType> smashes(10, BallType::Smash);
    const Rally rally = make_rally("r0", 0, PlayerSlot::Top, "net", smashes);
    const BallTypeHistogram hist = ball_type_distribution({rally});
    REQUIRE(hist.fractions().has_value());
    CHECK((*hist.fractions())[static_cast<std::size_t>(BallType::Smash)] == doctest::Approx(1.0));
    CHECK(hist.total() == 10);
}

TEST_CASE("distributions match brute-force tallies on random matches") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const auto match = random_match(rng, 8);

        std::array<std::uint64_t, 7> tally_all{}, tally_top{}, tally_bottom{};
        std::map<std::pair<int, std::string>, std::uint64_t> loss_tally;
        for (const Rally& rally : match) {
            for (const Stroke& s : rally.strokes) {
                ++tally_all[static_cast<std::size_t>(s.ball_type)];
                if (s.player == PlayerSlot::Top)
                    ++tally_top[static_cast<std::size_t>(s.ball_type)];
                else
                    ++tally_bottom[static_cast<std::size_t>(s.ball_type)];
            }
            ++loss_tally[{static_cast<int>(other_player(rally.winner)), rally.loss_reason}];
        }

        CHECK(ball_type_distribution(match).counts == tally_all);
        const auto top = ball_type_distribution(match, PlayerSlot::Top);
        const auto bottom = ball_type_distribution(match, PlayerSlot::Bottom);
        CHECK(top.counts == tally_top);
        CHECK(bottom.counts == tally_bottom);
        CHECK(top.total() + bottom.total() == ball_type_distribution(match).total());

        const LossReasonDistribution loss = loss_reason_distribution(match);
        std::uint64_t loss_total = 0;
        for (const auto& [reason, counts] : loss) {
            CHECK(counts[0] == loss_tally[{0, reason}]);
            CHECK(counts[1] == loss_tally[{1, reason}]);
            loss_total += counts[0] + counts[1];
        }
        CHECK(loss_total == match.size());

        // Radar vectors summed over rallies equal the match-level distribution.
        std::array<std::uint64_t, 7> radar_top{}, radar_bottom{};
        for (const Rally& rally : match) {
            const RadarData radar = rally_radar_data(rally);
            for (int i = 0; i < 7; ++i) {
                radar_top[static_cast<std::size_t>(i)] += radar.top[static_cast<std::size_t>(i)];
                radar_bottom[static_cast<std::size_t>(i)] += radar.bottom[static_cast<std::size_t>(i)];
            }
        }
        CHECK(radar_top == top.counts);
        CHECK(radar_bottom == bottom.counts);
    }
}

TEST_CASE("histograms are invariant to rally order") {
    std::mt19937_64 rng(83);
    auto match = random_match(rng, 9);
    const auto hist = ball_type_distribution(match);
    const auto loss = loss_reason_distribution(match);
    std::reverse(match.begin(), match.end());
    CHECK(ball_type_distribution(match).counts == hist.counts);
    CHECK(loss_reason_distribution(match) == loss);
}

TEST_CASE("loss_reason_distribution examples") {
    CHECK(loss_reason_distribution({}).empty());
    std::vector<Rally> match;
    for (int i = 0; i < 3; ++i)
        match.push_back(make_rally("r" + std::to_string(i), i * 100, PlayerSlot::Top, "net", {BallType::Smash}));
    const auto dist = loss_reason_distribution(match);
    REQUIRE(dist.count("net") == 1);
    CHECK(dist.at("net")[static_cast<std::size_t>(PlayerSlot::Bottom)] == 3);
    CHECK(dist.at("net")[static_cast<std::size_t>(PlayerSlot::Top)] == 0);
}

TEST_CASE("rally_radar_data example") {
    Rally rally;
    rally.id = "r0";
    rally.start_frame = 0;
    rally.end_frame = 100;
    rally.winner = PlayerSlot::Top;
    rally.loss_reason = "net";
    rally.strokes.push_back({10, PlayerSlot::Top, BallType::Smash});
    rally.strokes.push_back({20, PlayerSlot::Bottom, BallType::Lob});
    rally.strokes.push_back({30, PlayerSlot::Top, BallType::Smash});
    rally.strokes.push_back({40, PlayerSlot::Bottom, BallType::Netplay});
    rally.strokes.push_back({50, PlayerSlot::Top, BallType::Drive});

    const RadarData radar = rally_radar_data(rally);
    CHECK(radar.top[static_cast<std::size_t>(BallType::Smash)] == 2);
    CHECK(radar.top[static_cast<std::size_t>(BallType::Drive)] == 1);
    CHECK(radar.bottom[static_cast<std::size_t>(BallType::Lob)] == 1);
    CHECK(radar.bottom[static_cast<std::size_t>(BallType::Netplay)] == 1);

    const RadarData empty = rally_radar_data(make_rally("r1", 0, PlayerSlot::Top, "net", {}));
    for (const auto v : empty.top) CHECK(v == 0);
    for (const auto v : empty.bottom) CHECK(v == 0);
}

TEST_CASE("validate_rally catches ordering violations") {
    Rally rally = make_rally("r0", 100, PlayerSlot::Top, "net", {BallType::Smash, BallType::Lob});
    CHECK(validate_rally(rally).empty());

    rally.strokes[1].hit_frame = rally.strokes[0].hit_frame;
    CHECK(!validate_rally(rally).empty());

    rally = make_rally("r0", 100, PlayerSlot::Top, "net", {BallType::Smash, BallType::Lob});
    rally.strokes[1].player = rally.strokes[0].player;
    CHECK(!validate_rally(rally).empty());

    rally = make_rally("r0", 100, PlayerSlot::Top, "net", {BallType::Smash});
    rally.strokes[0].hit_frame = 5000;
    CHECK(!validate_rally(rally).empty());
}

TEST_CASE("detect_hit_times on a monotone trajectory finds nothing") {
    const Trajectory traj = line_trajectory(60, 3.0, 4.0);
    CHECK(detect_hit_times(traj).empty());

    const Trajectory vertical = line_trajectory(60, 0.0, -6.0);
    CHECK(detect_hit_times(vertical).empty());
}

TEST_CASE("detect_hit_times finds triangle-wave reversals") {
    const int period = 12;
    const Trajectory traj = triangle_trajectory(75, period);
    const auto hits = detect_hit_times(traj);

    std::vector<long> expected;
    for (long f = period - 1; f < 74; f += period) expected.push_back(f);
    REQUIRE(hits.size() == expected.size());
    for (std::size_t i = 0; i < hits.size(); ++i) CHECK(std::abs(hits[i] - expected[i]) <= 1);

    // Refractory spacing.
    for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i] - hits[i - 1] >= 5);
}

TEST_CASE("detect_hit_times bridges detection gaps across a reversal") {
    const int period = 12;
    Trajectory traj = triangle_trajectory(75, period);
    // Knock out the apex frame 23 and its neighbor.
    for (auto& d : traj.detections) {
        if (d.frame == 23 || d.frame == 24) d.status = DetectionStatus::Absent;
    }
    const auto hits = detect_hit_times(traj);
    bool found = false;
    for (const long hit : hits) found = found || std::abs(hit - 23) <= 1;
    CHECK(found);
}

TEST_CASE("detect_hit_times needs at least 3 found detections") {
    Trajectory traj;
    traj.fps = 30.0;
    traj.detections.push_back({0, DetectionStatus::Found, 0.0, 0.0});
    traj.detections.push_back({1, DetectionStatus::Found, 1.0, 1.0});
    std::vector<std::string> warnings;
    CHECK(detect_hit_times(traj, {}, &warnings).empty());
    CHECK(warnings.size() == 1);
}

TEST_CASE("estimate_speed") {
    SUBCASE("static ball has zero speed") {
        Trajectory traj;
        traj.fps = 30.0;
        for (int f = 0; f < 10; ++f) traj.detections.push_back({f, DetectionStatus::Found, 50.0, 60.0});
        for (const auto& s : estimate_speed(traj)) CHECK(s.speed == 0.0);
    }

    SUBCASE("uniform motion matches the arithmetic") {
        const Trajectory traj = line_trajectory(10, 10.0, 0.0, 30.0);
        const auto speeds = estimate_speed(traj);
        REQUIRE(speeds.size() == 8);  // interior points only
        for (const auto& s : speeds) CHECK(s.speed == doctest::Approx(300.0));
    }

    SUBCASE("random walk matches the finite-difference oracle") {
        std::mt19937_64 rng(101);
        Trajectory traj;
        traj.fps = 25.0;
        std::vector<std::array<double, 2>> pos;
        double x = 0.0, y = 0.0;
        for (int f = 0; f < 40; ++f) {
            x += uniform_range(rng, -5, 5);
            y += uniform_range(rng, -5, 5);
            traj.detections.push_back({f, DetectionStatus::Found, x, y});
            pos.push_back({x, y});
        }
        const auto speeds = estimate_speed(traj);
        REQUIRE(speeds.size() == 38);
        for (std::size_t i = 0; i < speeds.size(); ++i) {
            const auto& a = pos[i];
            const auto& b = pos[i + 2];
            const double expected = std::hypot(b[0] - a[0], b[1] - a[1]) / 2.0 * 25.0;
            CHECK(speeds[i].speed == doctest::Approx(expected).epsilon(1e-9));
        }
    }

    SUBCASE("gaps beyond the limit produce no sample") {
        Trajectory traj;
        traj.fps = 30.0;
        traj.detections.push_back({0, DetectionStatus::Found, 0.0, 0.0});
        traj.detections.push_back({1, DetectionStatus::Found, 1.0, 0.0});
        traj.detections.push_back({10, DetectionStatus::Found, 10.0, 0.0});
        traj.detections.push_back({11, DetectionStatus::Found, 11.0, 0.0});
        traj.detections.push_back({12, DetectionStatus::Found, 12.0, 0.0});
        const auto speeds = estimate_speed(traj);
        REQUIRE(speeds.size() == 1);  // only frame 11 has both neighbors within reach
        CHECK(speeds[0].frame == 11);
    }
}

TEST_CASE("chart payloads carry the distributions") {
    std::mt19937_64 rng(31);
    const auto match = random_match(rng, 4);

    const auto bar = nlohmann::json::parse(ball_type_bar_payload(match));
    REQUIRE(bar["labels"].size() == 7);
    CHECK(bar["labels"][0] == "cut");
    const auto top = ball_type_distribution(match, PlayerSlot::Top);
    for (int i = 0; i < 7; ++i)
        CHECK(bar["series"]["top"][static_cast<std::size_t>(i)].get<std::uint64_t>() ==
              top.counts[static_cast<std::size_t>(i)]);

    const auto series = nlohmann::json::parse(rally_series_payload(match));
    REQUIRE(series.size() == match.size());
    CHECK(series[0]["rally_id"] == match[0].id);
    CHECK(series[0]["count"].get<std::size_t>() == match[0].strokes.size());

    const auto radar = nlohmann::json::parse(radar_payload(match[0]));
    CHECK(radar["axes"].size() == 7);
    CHECK(radar["top"].size() == 7);
    CHECK(radar["bottom"].size() == 7);

    const auto loss = nlohmann::json::parse(loss_reason_bar_payload(match));
    const auto dist = loss_reason_distribution(match);
    REQUIRE(loss["labels"].size() == dist.size());
}
