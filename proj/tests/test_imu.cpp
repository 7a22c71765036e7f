#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "courtside/error.hpp"
#include "courtside/imu.hpp"
#include "courtside/rng.hpp"

using namespace courtside;

namespace {

std::vector<ImuSample> flat_stream(double ms, double step_ms = 10.0) {
    std::vector<ImuSample> stream;
    for (double t = 0.0; t <= ms; t += step_ms) stream.push_back({t, 0, 0, 0, 0, 0, 0});
    return stream;
}

void inject_impulse(std::vector<ImuSample>& stream, double t_ms, double magnitude) {
    for (ImuSample& s : stream) {
        if (std::abs(s.t_ms - t_ms) < 1e-9) {
            s.ax = magnitude;
            return;
        }
    }
    REQUIRE(false);  // impulse time must align with a sample
}

// Distinct per-class signatures: class c waves on a different axis mix.
std::vector<double> class_feature(std::mt19937_64& rng, int c, double spread) {
    std::vector<double> f(kImuFeatureCount);
    for (std::size_t d = 0; d < kImuFeatureCount; ++d)
        f[d] = std::cos(0.7 * static_cast<double>(c) + 0.31 * static_cast<double>(d)) * 4.0 +
               uniform_range(rng, -spread, spread);
    return f;
}

}  // namespace

TEST_CASE("segment_strokes finds isolated impulses") {
    SUBCASE("all-zero stream yields nothing") {
        CHECK(segment_strokes(flat_stream(3000)).empty());
    }

    SUBCASE("one impulse yields one centered window") {
        auto stream = flat_stream(3000);
        inject_impulse(stream, 1000.0, 6.0);
        const auto windows = segment_strokes(stream);
        REQUIRE(windows.size() == 1);
        CHECK(windows[0].peak_t_ms == 1000.0);
        CHECK(windows[0].peak_magnitude == doctest::Approx(6.0));
        for (const ImuSample& s : windows[0].samples) {
            CHECK(s.t_ms >= 800.0 - 1e-9);
            CHECK(s.t_ms <= 1200.0 + 1e-9);
        }
        CHECK(windows[0].samples.size() == 41);  // 400 ms at 10 ms steps, inclusive
    }

    SUBCASE("refractory suppresses a close second impulse") {
        auto stream = flat_stream(3000);
        inject_impulse(stream, 1000.0, 6.0);
        inject_impulse(stream, 1100.0, 5.0);
        const auto windows = segment_strokes(stream);
        REQUIRE(windows.size() == 1);
        CHECK(windows[0].peak_t_ms == 1000.0);
    }

    SUBCASE("spaced impulses are all found") {
        auto stream = flat_stream(5000);
        inject_impulse(stream, 500.0, 4.0);
        inject_impulse(stream, 1500.0, 7.0);
        inject_impulse(stream, 4000.0, 5.0);
        const auto windows = segment_strokes(stream);
        REQUIRE(windows.size() == 3);
        CHECK(windows[0].peak_t_ms == 500.0);
        CHECK(windows[1].peak_t_ms == 1500.0);
        CHECK(windows[2].peak_t_ms == 4000.0);
    }

    SUBCASE("non-monotone timestamps are rejected") {
        auto stream = flat_stream(100);
        stream.push_back({50.0, 0, 0, 0, 0, 0, 0});
        CHECK_THROWS_AS(segment_strokes(stream), StreamError);
    }

    SUBCASE("raising the threshold never adds peaks") {
        std::mt19937_64 rng(3);
        auto stream = flat_stream(10000);
        for (ImuSample& s : stream) {
            s.ax = uniform_range(rng, -1, 1);
            s.ay = uniform_range(rng, -1, 1);
            s.az = uniform_range(rng, -1, 1);
        }
        for (int i = 0; i < 8; ++i)
            inject_impulse(stream, 500.0 + 1200.0 * i, uniform_range(rng, 3.5, 9.0));
        SegmentConfig low, high;
        low.threshold_g = 2.0;
        high.threshold_g = 4.0;
        CHECK(segment_strokes(stream, high).size() <= segment_strokes(stream, low).size());
    }
}

TEST_CASE("extract_features statistics") {
    SUBCASE("constant stream") {
        StrokeWindow window;
        for (int i = 0; i < 10; ++i) window.samples.push_back({i * 10.0, 1, 0, 0, 0, 0, 0});
        window.peak_t_ms = 0.0;
        window.peak_magnitude = 1.0;
        const auto f = extract_features(window);
        REQUIRE(f.size() == kImuFeatureCount);
        CHECK(f[0] == doctest::Approx(1.0));  // ax mean
        CHECK(f[1] == doctest::Approx(0.0));  // ax std
        CHECK(f[2] == doctest::Approx(1.0));  // ax min
        CHECK(f[3] == doctest::Approx(1.0));  // ax max
        // |a| = 1 throughout: energy = 9 intervals * 10 ms * 1 g^2 = 0.09 g^2 s
        CHECK(f[25] == doctest::Approx(0.09));
    }

    SUBCASE("zero window has zero energy") {
        StrokeWindow window;
        for (int i = 0; i < 5; ++i) window.samples.push_back({i * 7.0, 0, 0, 0, 0, 0, 0});
        CHECK(extract_features(window)[25] == 0.0);
    }

    SUBCASE("matches a brute-force statistics oracle") {
        std::mt19937_64 rng(11);
        StrokeWindow window;
        double t = 0.0;
        for (int i = 0; i < 37; ++i) {
            t += uniform_range(rng, 5.0, 15.0);
            window.samples.push_back({t, uniform_range(rng, -8, 8), uniform_range(rng, -8, 8),
                                      uniform_range(rng, -8, 8), uniform_range(rng, -200, 200),
                                      uniform_range(rng, -200, 200), uniform_range(rng, -200, 200)});
        }
        window.peak_t_ms = window.samples[10].t_ms;
        window.peak_magnitude = 5.5;
        const auto f = extract_features(window);

        const auto check_axis = [&](int base, auto get) {
            const std::size_t n = window.samples.size();
            double mean = 0.0;
            for (const auto& s : window.samples) mean += get(s);
            mean /= static_cast<double>(n);
            double var = 0.0, lo = 1e300, hi = -1e300;
            for (const auto& s : window.samples) {
                var += (get(s) - mean) * (get(s) - mean);
                lo = std::min(lo, get(s));
                hi = std::max(hi, get(s));
            }
            var /= static_cast<double>(n);
            CHECK(f[static_cast<std::size_t>(base)] == doctest::Approx(mean).epsilon(1e-9));
            CHECK(f[static_cast<std::size_t>(base) + 1] == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
            CHECK(f[static_cast<std::size_t>(base) + 2] == doctest::Approx(lo));
            CHECK(f[static_cast<std::size_t>(base) + 3] == doctest::Approx(hi));
        };
        check_axis(0, [](const ImuSample& s) { return s.ax; });
        check_axis(4, [](const ImuSample& s) { return s.ay; });
        check_axis(8, [](const ImuSample& s) { return s.az; });
        check_axis(12, [](const ImuSample& s) { return s.gx; });
        check_axis(16, [](const ImuSample& s) { return s.gy; });
        check_axis(20, [](const ImuSample& s) { return s.gz; });

        CHECK(f[24] == doctest::Approx(5.5));
        double energy = 0.0;
        for (std::size_t i = 1; i < window.samples.size(); ++i) {
            const auto& s = window.samples[i];
            const double m2 = s.ax * s.ax + s.ay * s.ay + s.az * s.az;
            energy += m2 * (s.t_ms - window.samples[i - 1].t_ms) / 1000.0;
        }
        CHECK(f[25] == doctest::Approx(energy).epsilon(1e-9));
    }
}

TEST_CASE("train_centroids") {
    std::mt19937_64 rng(17);

    SUBCASE("one example per class stores the normalized examples") {
        std::vector<std::pair<std::vector<double>, BallType>> labeled;
        for (int c = 0; c < 7; ++c) labeled.emplace_back(class_feature(rng, c, 0.0), static_cast<BallType>(c));
        const StrokeModel model = train_centroids(labeled);
        for (int c = 0; c < 7; ++c) {
            const auto& [f, label] = labeled[static_cast<std::size_t>(c)];
            for (std::size_t d = 0; d < f.size(); ++d) {
                const double normalized = (f[d] - model.mean[d]) / model.scale[d];
                REQUIRE(model.centroids[static_cast<std::size_t>(c)][d] ==
                        doctest::Approx(normalized).epsilon(1e-12));
            }
        }
    }

    SUBCASE("duplicated examples give the same model") {
        std::vector<std::pair<std::vector<double>, BallType>> once, twice;
        for (int c = 0; c < 7; ++c) {
            const auto f = class_feature(rng, c, 0.0);
            once.emplace_back(f, static_cast<BallType>(c));
            twice.emplace_back(f, static_cast<BallType>(c));
            twice.emplace_back(f, static_cast<BallType>(c));
        }
        const StrokeModel a = train_centroids(once);
        const StrokeModel b = train_centroids(twice);
        for (int c = 0; c < 7; ++c) {
            for (std::size_t d = 0; d < a.mean.size(); ++d) {
                REQUIRE(a.centroids[static_cast<std::size_t>(c)][d] ==
                        doctest::Approx(b.centroids[static_cast<std::size_t>(c)][d]).epsilon(1e-12));
            }
        }
    }

    SUBCASE("a missing class is named in the error") {
        std::vector<std::pair<std::vector<double>, BallType>> labeled;
        for (int c = 0; c < 6; ++c) labeled.emplace_back(class_feature(rng, c, 0.0), static_cast<BallType>(c));
        try {
            train_centroids(labeled);
            REQUIRE(false);
        } catch (const TrainingError& e) {
            CHECK(std::string(e.what()).find("smash") != std::string::npos);
        }
    }

    SUBCASE("gaussian classes put centroids near the generators") {
        const int per_class = 60;
        std::vector<std::pair<std::vector<double>, BallType>> labeled;
        std::vector<std::vector<double>> generators;
        for (int c = 0; c < 7; ++c) generators.push_back(class_feature(rng, c, 0.0));
        for (int c = 0; c < 7; ++c) {
            for (int i = 0; i < per_class; ++i) {
                auto f = generators[static_cast<std::size_t>(c)];
                for (double& v : f) v += uniform_range(rng, -0.3, 0.3);
                labeled.emplace_back(std::move(f), static_cast<BallType>(c));
            }
        }
        const StrokeModel model = train_centroids(labeled);
        // Uniform(-0.3, 0.3) has sigma ~ 0.173; tolerance 3 sigma / sqrt(n).
        const double tol = 3.0 * 0.1733 / std::sqrt(static_cast<double>(per_class));
        for (int c = 0; c < 7; ++c) {
            for (std::size_t d = 0; d < kImuFeatureCount; ++d) {
                const double denorm = model.centroids[static_cast<std::size_t>(c)][d] * model.scale[d] +
                                      model.mean[d];
                REQUIRE(std::abs(denorm - generators[static_cast<std::size_t>(c)][d]) <= tol);
            }
        }
    }
}

TEST_CASE("classify_stroke") {
    std::mt19937_64 rng(23);
    std::vector<std::pair<std::vector<double>, BallType>> labeled;
    for (int c = 0; c < 7; ++c) {
        for (int i = 0; i < 10; ++i) labeled.emplace_back(class_feature(rng, c, 0.2), static_cast<BallType>(c));
    }
    const StrokeModel model = train_centroids(labeled);

    SUBCASE("training examples classify to their classes with dominant confidence") {
        for (int c = 0; c < 7; ++c) {
            const auto result = classify_stroke(model, class_feature(rng, c, 0.0));
            CHECK(result.label == static_cast<BallType>(c));
            double sum = 0.0;
            for (const double p : result.confidences) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            for (int other = 0; other < 7; ++other)
                CHECK(result.confidence >= result.confidences[static_cast<std::size_t>(other)]);
        }
    }

    SUBCASE("non-finite features are rejected") {
        auto f = class_feature(rng, 0, 0.0);
        f[3] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(classify_stroke(model, f), ClassificationError);
    }

    SUBCASE("equidistant features take the earlier class") {
        // Build a two-point model by hand: centroids symmetric about zero.
        StrokeModel symmetric;
        symmetric.mean.assign(2, 0.0);
        symmetric.scale.assign(2, 1.0);
        for (int c = 0; c < 7; ++c) symmetric.centroids[static_cast<std::size_t>(c)] = {100.0, 100.0};
        symmetric.centroids[static_cast<std::size_t>(BallType::Drive)] = {1.0, 0.0};
        symmetric.centroids[static_cast<std::size_t>(BallType::Rush)] = {-1.0, 0.0};
        const auto result = classify_stroke(symmetric, {0.0, 0.0});
        CHECK(result.label == BallType::Drive);  // canonical order: drive before rush
    }

    SUBCASE("consistent affine rescaling leaves labels unchanged") {
        std::vector<std::pair<std::vector<double>, BallType>> scaled;
        for (const auto& [f, label] : labeled) {
            auto g = f;
            for (std::size_t d = 0; d < g.size(); ++d) g[d] = g[d] * 7.5 + 3.0 * static_cast<double>(d);
            scaled.emplace_back(std::move(g), label);
        }
        const StrokeModel scaled_model = train_centroids(scaled);
        for (int trial = 0; trial < 50; ++trial) {
            const int c = static_cast<int>(uniform_index(rng, 7));
            auto f = class_feature(rng, c, 0.3);
            auto g = f;
            for (std::size_t d = 0; d < g.size(); ++d) g[d] = g[d] * 7.5 + 3.0 * static_cast<double>(d);
            CHECK(classify_stroke(model, f).label == classify_stroke(scaled_model, g).label);
        }
    }
}

TEST_CASE("IMU CSV and model files round-trip") {
    const auto dir = std::filesystem::temp_directory_path();

    std::vector<ImuSample> stream;
    std::mt19937_64 rng(29);
    double t = 0.0;
    for (int i = 0; i < 20; ++i) {
        t += 10.0;
        stream.push_back({t, uniform_range(rng, -4, 4), uniform_range(rng, -4, 4), uniform_range(rng, -4, 4),
                          uniform_range(rng, -150, 150), uniform_range(rng, -150, 150),
                          uniform_range(rng, -150, 150)});
    }
    const auto csv_path = dir / "courtside_test_imu.csv";
    write_imu_csv(stream, csv_path);
    const auto back = read_imu_csv(csv_path);
    REQUIRE(back.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        CHECK(back[i].t_ms == doctest::Approx(stream[i].t_ms));
        CHECK(back[i].ax == doctest::Approx(stream[i].ax).epsilon(1e-8));
        CHECK(back[i].gz == doctest::Approx(stream[i].gz).epsilon(1e-8));
    }
    std::filesystem::remove(csv_path);

    const auto bad_path = dir / "courtside_test_imu_bad.csv";
    std::ofstream(bad_path) << "time,ax,ay,az,gx,gy,gz\n";
    CHECK_THROWS_AS(read_imu_csv(bad_path), ValidationError);
    std::filesystem::remove(bad_path);

    std::vector<std::pair<std::vector<double>, BallType>> labeled;
    for (int c = 0; c < 7; ++c) labeled.emplace_back(class_feature(rng, c, 0.1), static_cast<BallType>(c));
    const StrokeModel model = train_centroids(labeled);
    const auto model_path = dir / "courtside_test_model.json";
    save_stroke_model(model, model_path);
    const StrokeModel loaded = load_stroke_model(model_path);
    REQUIRE(loaded.mean.size() == model.mean.size());
    for (int c = 0; c < 7; ++c) {
        for (std::size_t d = 0; d < model.mean.size(); ++d) {
            CHECK(loaded.centroids[static_cast<std::size_t>(c)][d] ==
                  doctest::Approx(model.centroids[static_cast<std::size_t>(c)][d]).epsilon(1e-12));
        }
    }
    std::filesystem::remove(model_path);
}
