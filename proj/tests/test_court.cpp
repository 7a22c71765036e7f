#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "courtside/court.hpp"
#include "courtside/error.hpp"
#include "courtside/rng.hpp"

using namespace courtside;

namespace {

CourtPoint apply_matrix(const std::array<double, 9>& m, const PixelPoint& p) {
    const double w = m[6] * p.x + m[7] * p.y + m[8];
    return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

// Mild projective perturbation of an affine map; stays well-conditioned on
// the [0, 1000]^2 pixel range used by the tests.
std::array<double, 9> random_homography(std::mt19937_64& rng) {
    while (true) {
        std::array<double, 9> m = {1.0 + uniform_range(rng, -0.3, 0.3),
                                   uniform_range(rng, -0.3, 0.3),
                                   uniform_range(rng, -5.0, 5.0),
                                   uniform_range(rng, -0.3, 0.3),
                                   1.0 + uniform_range(rng, -0.3, 0.3),
                                   uniform_range(rng, -5.0, 5.0),
                                   uniform_range(rng, -1e-4, 1e-4),
                                   uniform_range(rng, -1e-4, 1e-4),
                                   1.0};
        if (std::abs(m[0] * m[4] - m[1] * m[3]) > 0.05) return m;
    }
}

std::vector<Correspondence> exact_correspondences(const std::array<double, 9>& m,
                                                  const std::vector<PixelPoint>& pixels) {
    std::vector<Correspondence> out;
    for (const PixelPoint& p : pixels) out.push_back({p, apply_matrix(m, p)});
    return out;
}

double reprojection_error(const Homography& h, const std::vector<Correspondence>& cs) {
    double total = 0.0;
    for (const Correspondence& c : cs) {
        const CourtPoint q = project_point(h, c.pixel);
        total += std::hypot(q.x - c.court.x, q.y - c.court.y);
    }
    return total / static_cast<double>(cs.size());
}

}  // namespace

TEST_CASE("estimate_homography recovers the identity from the unit square") {
    const std::vector<Correspondence> cs = {
        {{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{1, 1}, {1, 1}}, {{0, 1}, {0, 1}}};
    const Homography h = estimate_homography(cs);
    const std::array<double, 9> expected = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < 9; ++i) CHECK(h.m[static_cast<std::size_t>(i)] == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("estimate_homography recovers a pure scaling") {
    const std::vector<Correspondence> cs = {
        {{0, 0}, {0, 0}}, {{1, 0}, {2, 0}}, {{1, 1}, {2, 2}}, {{0, 1}, {0, 2}}};
    const Homography h = estimate_homography(cs);
    CHECK(h.m[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(h.m[4] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(h.m[8] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(h.m[1]) < 1e-9);
    CHECK(std::abs(h.m[6]) < 1e-12);
}

TEST_CASE("estimate_homography reproduces exact correspondences") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto truth = random_homography(rng);
        const std::vector<PixelPoint> pixels = {{uniform_range(rng, 0, 200), uniform_range(rng, 0, 200)},
                                                {uniform_range(rng, 800, 1000), uniform_range(rng, 0, 200)},
                                                {uniform_range(rng, 800, 1000), uniform_range(rng, 800, 1000)},
                                                {uniform_range(rng, 0, 200), uniform_range(rng, 800, 1000)}};
        const auto cs = exact_correspondences(truth, pixels);
        const Homography h = estimate_homography(cs);
        REQUIRE(reprojection_error(h, cs) <= 1e-9);
    }
}

TEST_CASE("estimate_homography handles noisy overdetermined systems") {
    std::mt19937_64 rng(13);
    const auto truth = random_homography(rng);
    std::vector<Correspondence> cs;
    for (int i = 0; i < 6; ++i) {
        PixelPoint p{uniform_range(rng, 0, 1000), uniform_range(rng, 0, 1000)};
        const CourtPoint q = apply_matrix(truth, p);
        p.x += uniform_range(rng, -0.5, 0.5);
        p.y += uniform_range(rng, -0.5, 0.5);
        cs.push_back({p, q});
    }
    const Homography h = estimate_homography(cs);
    CHECK(reprojection_error(h, cs) <= 1.0);
}

TEST_CASE("estimate_homography is invariant to correspondence order") {
    std::mt19937_64 rng(17);
    const auto truth = random_homography(rng);
    std::vector<PixelPoint> pixels;
    for (int i = 0; i < 6; ++i) pixels.push_back({uniform_range(rng, 0, 1000), uniform_range(rng, 0, 1000)});
    auto cs = exact_correspondences(truth, pixels);

    const Homography a = estimate_homography(cs);
    std::reverse(cs.begin(), cs.end());
    const Homography b = estimate_homography(cs);
    for (int i = 0; i < 9; ++i)
        CHECK(a.m[static_cast<std::size_t>(i)] == doctest::Approx(b.m[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("estimate_homography rejects degenerate input") {
    CHECK_THROWS_AS(estimate_homography({{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{1, 1}, {1, 1}}}), EstimationError);

    // 3 of 4 court points collinear.
    const std::vector<Correspondence> collinear = {
        {{0, 0}, {0, 0}}, {{1, 0}, {1, 1}}, {{1, 1}, {2, 2}}, {{0, 1}, {3, 3}}};
    CHECK_THROWS_AS(estimate_homography(collinear), EstimationError);

    const std::vector<Correspondence> coincident = {
        {{5, 5}, {0, 0}}, {{5, 5}, {1, 0}}, {{5, 5}, {1, 1}}, {{5, 5}, {0, 1}}};
    CHECK_THROWS_AS(estimate_homography(coincident), EstimationError);
}

TEST_CASE("project_point applies the perspective division") {
    Homography identity;
    const CourtPoint p = project_point(identity, {3.0, 5.0});
    CHECK(p.x == doctest::Approx(3.0));
    CHECK(p.y == doctest::Approx(5.0));

    Homography scale;
    scale.m = {2, 0, 0, 0, 2, 0, 0, 0, 1};
    const CourtPoint q = project_point(scale, {3.0, 5.0});
    CHECK(q.x == doctest::Approx(6.0));
    CHECK(q.y == doctest::Approx(10.0));

    std::mt19937_64 rng(23);
    const auto truth = random_homography(rng);
    Homography h;
    h.m = truth;
    for (int i = 0; i < 10; ++i) {
        const PixelPoint pt{uniform_range(rng, 0, 1000), uniform_range(rng, 0, 1000)};
        const CourtPoint direct = apply_matrix(truth, pt);
        const CourtPoint via = project_point(h, pt);
        CHECK(via.x == doctest::Approx(direct.x).epsilon(1e-9));
        CHECK(via.y == doctest::Approx(direct.y).epsilon(1e-9));
    }

    Homography singular;
    singular.m = {1, 0, 0, 0, 1, 0, 0, -1.0, 0.0};  // w = -y; vanishes on y = 0
    CHECK_THROWS_AS(project_point(singular, {1.0, 0.0}), ProjectionError);
}

TEST_CASE("ground_point is the lower-boundary midpoint") {
    CHECK(ground_point({10, 20, 30, 40}).x == doctest::Approx(25.0));
    CHECK(ground_point({10, 20, 30, 40}).y == doctest::Approx(60.0));
    CHECK(ground_point({0, 0, 2, 2}).x == doctest::Approx(1.0));
    CHECK(ground_point({0, 0, 2, 2}).y == doctest::Approx(2.0));
    CHECK(ground_point({5, 5, 1, 100}).x == doctest::Approx(5.5));
    CHECK(ground_point({5, 5, 1, 100}).y == doctest::Approx(105.0));
}

TEST_CASE("filter_players keeps boxes that project inside the court") {
    // Identity-scaled map: 100 px per meter.
    Homography h;
    h.m = {0.01, 0, 0, 0, 0.01, 0, 0, 0, 1};
    CourtModel court;  // 6.10 x 13.40

    CHECK(filter_players({}, h, court).empty());

    BoundingBox inside;  // ground point (300, 600) px -> (3.0, 6.0) m
    inside.x = 280;
    inside.y = 400;
    inside.w = 40;
    inside.h = 200;
    BoundingBox outside = inside;  // ground point (800, 600) px -> (8.0, 6.0) m
    outside.x = 780;

    const auto kept = filter_players({inside, outside}, h, court);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].first.x == inside.x);
    CHECK(kept[0].second.x == doctest::Approx(3.0));
    CHECK(kept[0].second.y == doctest::Approx(6.0));
}

TEST_CASE("filter_players margin growth is monotone and order preserving") {
    std::mt19937_64 rng(31);
    Homography h;
    h.m = {0.01, 0, 0, 0, 0.01, 0, 0, 0, 1};
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < 100; ++i) {
        BoundingBox box;
        box.x = uniform_range(rng, -200, 1400);
        box.y = uniform_range(rng, -200, 1400);
        box.w = uniform_range(rng, 10, 100);
        box.h = uniform_range(rng, 10, 200);
        box.source_frame = i;
        boxes.push_back(box);
    }
    CourtModel tight;
    CourtModel loose;
    loose.margin = 1.0;
    const auto kept_tight = filter_players(boxes, h, tight);
    const auto kept_loose = filter_players(boxes, h, loose);
    CHECK(kept_tight.size() <= kept_loose.size());
    // Every tightly kept frame appears in the loose set, in order.
    std::vector<long> tight_frames, loose_frames;
    for (const auto& [box, pt] : kept_tight) tight_frames.push_back(box.source_frame);
    for (const auto& [box, pt] : kept_loose) loose_frames.push_back(box.source_frame);
    CHECK(std::is_sorted(tight_frames.begin(), tight_frames.end()));
    CHECK(std::includes(loose_frames.begin(), loose_frames.end(), tight_frames.begin(), tight_frames.end()));
}

TEST_CASE("enlarge_box scales about the center and clips") {
    const BoundingBox box{100, 100, 40, 80, 1.0, 0};
    const BoundingBox grown = enlarge_box(box, 1.5, 640, 480);
    CHECK(grown.x == doctest::Approx(90.0));
    CHECK(grown.y == doctest::Approx(80.0));
    CHECK(grown.w == doctest::Approx(60.0));
    CHECK(grown.h == doctest::Approx(120.0));

    const BoundingBox same = enlarge_box(box, 1.0, 640, 480);
    CHECK(same.x == doctest::Approx(box.x));
    CHECK(same.w == doctest::Approx(box.w));

    const BoundingBox corner{0, 0, 40, 80, 1.0, 0};
    const BoundingBox clipped = enlarge_box(corner, 1.5, 640, 480);
    CHECK(clipped.x == 0.0);
    CHECK(clipped.y == 0.0);
    CHECK(clipped.w == doctest::Approx(50.0));   // 60 wide box centered at 20 clips to [0, 50]
    CHECK(clipped.h == doctest::Approx(100.0));  // 120 tall box centered at 40 clips to [0, 100]

    CHECK_THROWS_AS(enlarge_box(box, 0.5, 640, 480), SpecError);
}

TEST_CASE("enlarge_box area never exceeds factor^2 of the original") {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 200; ++i) {
        BoundingBox box;
        box.x = uniform_range(rng, -50, 600);
        box.y = uniform_range(rng, -50, 450);
        box.w = uniform_range(rng, 1, 200);
        box.h = uniform_range(rng, 1, 200);
        const double f = uniform_range(rng, 1.0, 3.0);
        const BoundingBox grown = enlarge_box(box, f, 640, 480);
        CHECK(grown.w * grown.h <= f * f * box.w * box.h + 1e-9);
        CHECK(grown.x >= 0.0);
        CHECK(grown.y >= 0.0);
        CHECK(grown.x + grown.w <= 640.0 + 1e-9);
        CHECK(grown.y + grown.h <= 480.0 + 1e-9);
    }
}

TEST_CASE("court model landmarks and containment") {
    CourtModel court;
    const auto landmarks = court.landmarks();
    const auto find = [&](const std::string& name) {
        const auto it = std::find_if(landmarks.begin(), landmarks.end(),
                                     [&](const auto& entry) { return entry.first == name; });
        REQUIRE(it != landmarks.end());
        return it->second;
    };
    CHECK(find("corner_far_right").x == doctest::Approx(6.10));
    CHECK(find("corner_far_right").y == doctest::Approx(13.40));
    CHECK(find("net_left").y == doctest::Approx(6.70));
    CHECK(find("singles_sideline_near_left").x == doctest::Approx(0.46));

    CHECK(court.contains({3.0, 6.0}));
    CHECK(!court.contains({-0.1, 6.0}));
    court.margin = 0.2;
    CHECK(court.contains({-0.1, 6.0}));

    CourtModel bad;
    bad.width = 0.0;
    CHECK_THROWS_AS(bad.validate(), SpecError);
}

TEST_CASE("homography and calibration files round-trip") {
    std::mt19937_64 rng(41);
    Homography h;
    h.m = random_homography(rng);

    const auto dir = std::filesystem::temp_directory_path();
    const auto hpath = dir / "courtside_test_h.json";
    std::ofstream(hpath) << homography_to_json(h);
    const Homography back = homography_from_json_file(hpath);
    for (int i = 0; i < 9; ++i)
        CHECK(back.m[static_cast<std::size_t>(i)] == doctest::Approx(h.m[static_cast<std::size_t>(i)]).epsilon(1e-15));
    std::filesystem::remove(hpath);

    const std::vector<Correspondence> cs = {
        {{0, 0}, {0, 0}}, {{1280, 0}, {6.1, 0}}, {{1280, 720}, {6.1, 13.4}}, {{0, 720}, {0, 13.4}}};
    const auto cpath = dir / "courtside_test_cal.json";
    save_calibration(cs, cpath);
    const auto loaded = load_calibration(cpath);
    REQUIRE(loaded.size() == 4);
    CHECK(loaded[1].pixel.x == doctest::Approx(1280.0));
    CHECK(loaded[2].court.y == doctest::Approx(13.4));
    std::filesystem::remove(cpath);
}
