#include "courtside/imu.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "courtside/csv.hpp"
#include "courtside/error.hpp"
#include "courtside/format.hpp"

namespace courtside {

namespace {

double accel_magnitude(const ImuSample& s) {
    return std::sqrt(s.ax * s.ax + s.ay * s.ay + s.az * s.az);
}

}  // namespace

std::vector<StrokeWindow> segment_strokes(const std::vector<ImuSample>& stream, const SegmentConfig& config) {
    if (!(config.threshold_g > 0.0) || !(config.window_ms > 0.0) || config.refractory_ms < 0.0)
        throw SpecError("invalid stroke segmentation parameters");

    for (std::size_t i = 0; i < stream.size(); ++i) {
        const ImuSample& s = stream[i];
        if (!std::isfinite(s.t_ms) || !std::isfinite(s.ax) || !std::isfinite(s.ay) || !std::isfinite(s.az) ||
            !std::isfinite(s.gx) || !std::isfinite(s.gy) || !std::isfinite(s.gz))
            throw StreamError("IMU stream holds non-finite values");
        if (i > 0 && stream[i].t_ms <= stream[i - 1].t_ms)
            throw StreamError("IMU timestamps must strictly increase");
    }
    if (stream.empty()) return {};

    std::vector<double> mag(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) mag[i] = accel_magnitude(stream[i]);

    std::vector<StrokeWindow> windows;
    double last_peak_t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (mag[i] <= config.threshold_g) continue;
        if (i > 0 && mag[i] < mag[i - 1]) continue;
        if (i + 1 < stream.size() && mag[i] < mag[i + 1]) continue;
        if (stream[i].t_ms - last_peak_t < config.refractory_ms) continue;

        StrokeWindow window;
        window.peak_t_ms = stream[i].t_ms;
        window.peak_magnitude = mag[i];
        const double lo = window.peak_t_ms - config.window_ms / 2.0;
        const double hi = window.peak_t_ms + config.window_ms / 2.0;
        for (const ImuSample& s : stream) {
            if (s.t_ms < lo) continue;
            if (s.t_ms > hi) break;
            window.samples.push_back(s);
        }
        windows.push_back(std::move(window));
        last_peak_t = stream[i].t_ms;
    }
    return windows;
}

std::vector<double> extract_features(const StrokeWindow& window) {
    if (window.samples.empty()) throw SpecError("cannot extract features from an empty stroke window");
    const std::size_t n = window.samples.size();

    std::vector<double> features;
    features.reserve(kImuFeatureCount);

    const auto axis = [&](auto get) {
        double sum = 0.0, sum_sq = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const ImuSample& s : window.samples) {
            const double v = get(s);
            sum += v;
            sum_sq += v * v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        features.push_back(mean);
        features.push_back(std::sqrt(var));
        features.push_back(lo);
        features.push_back(hi);
    };
    axis([](const ImuSample& s) { return s.ax; });
    axis([](const ImuSample& s) { return s.ay; });
    axis([](const ImuSample& s) { return s.az; });
    axis([](const ImuSample& s) { return s.gx; });
    axis([](const ImuSample& s) { return s.gy; });
    axis([](const ImuSample& s) { return s.gz; });

    features.push_back(window.peak_magnitude);

    // Energy: |a|^2 weighted by the preceding sample interval, in g^2 s.
    double energy = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double m = accel_magnitude(window.samples[i]);
        energy += m * m * (window.samples[i].t_ms - window.samples[i - 1].t_ms) / 1000.0;
    }
    features.push_back(energy);
    return features;
}

StrokeModel train_centroids(const std::vector<std::pair<std::vector<double>, BallType>>& labeled) {
    if (labeled.empty()) throw TrainingError("no training examples");
    const std::size_t dims = labeled.front().first.size();
    std::array<std::size_t, kBallTypeCount> class_counts{};
    for (const auto& [features, label] : labeled) {
        if (features.size() != dims) throw TrainingError("training features have inconsistent dimensions");
        ++class_counts[static_cast<std::size_t>(label)];
    }
    for (int c = 0; c < kBallTypeCount; ++c) {
        if (class_counts[static_cast<std::size_t>(c)] == 0)
            throw TrainingError("no training examples for class '" + ball_type_name(static_cast<BallType>(c)) + "'");
    }

    StrokeModel model;
    model.mean.assign(dims, 0.0);
    model.scale.assign(dims, 1.0);

    for (const auto& [features, label] : labeled) {
        for (std::size_t d = 0; d < dims; ++d) model.mean[d] += features[d];
    }
    for (std::size_t d = 0; d < dims; ++d) model.mean[d] /= static_cast<double>(labeled.size());

    std::vector<double> var(dims, 0.0);
    for (const auto& [features, label] : labeled) {
        for (std::size_t d = 0; d < dims; ++d) {
            const double delta = features[d] - model.mean[d];
            var[d] += delta * delta;
        }
    }
    for (std::size_t d = 0; d < dims; ++d) {
        const double sd = std::sqrt(var[d] / static_cast<double>(labeled.size()));
        model.scale[d] = sd > 1e-12 ? sd : 1.0;
    }

    for (auto& centroid : model.centroids) centroid.assign(dims, 0.0);
    for (const auto& [features, label] : labeled) {
        auto& centroid = model.centroids[static_cast<std::size_t>(label)];
        for (std::size_t d = 0; d < dims; ++d) centroid[d] += (features[d] - model.mean[d]) / model.scale[d];
    }
    for (int c = 0; c < kBallTypeCount; ++c) {
        auto& centroid = model.centroids[static_cast<std::size_t>(c)];
        for (double& v : centroid) v /= static_cast<double>(class_counts[static_cast<std::size_t>(c)]);
    }
    return model;
}

StrokeClassification classify_stroke(const StrokeModel& model, const std::vector<double>& features) {
    const std::size_t dims = model.mean.size();
    if (features.size() != dims) throw ClassificationError("feature dimensions do not match the model");
    for (const double v : features) {
        if (!std::isfinite(v)) throw ClassificationError("features hold non-finite values");
    }

    std::array<double, kBallTypeCount> distances{};
    for (int c = 0; c < kBallTypeCount; ++c) {
        const auto& centroid = model.centroids[static_cast<std::size_t>(c)];
        double sum = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            const double delta = (features[d] - model.mean[d]) / model.scale[d] - centroid[d];
            sum += delta * delta;
        }
        distances[static_cast<std::size_t>(c)] = std::sqrt(sum);
    }

    StrokeClassification out;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < kBallTypeCount; ++c) {
        if (distances[static_cast<std::size_t>(c)] < best) {
            best = distances[static_cast<std::size_t>(c)];
            out.label = static_cast<BallType>(c);
        }
    }

    // Softmin over distances, shifted by the minimum for stability.
    double denom = 0.0;
    for (int c = 0; c < kBallTypeCount; ++c) {
        out.confidences[static_cast<std::size_t>(c)] = std::exp(-(distances[static_cast<std::size_t>(c)] - best));
        denom += out.confidences[static_cast<std::size_t>(c)];
    }
    for (double& v : out.confidences) v /= denom;
    out.confidence = out.confidences[static_cast<std::size_t>(out.label)];
    return out;
}

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
    const CsvFile file = read_csv(path);
    const std::vector<std::string> expected = {"t_ms", "ax", "ay", "az", "gx", "gy", "gz"};
    if (file.header != expected)
        throw ValidationError(path.string() + ": IMU stream needs header t_ms,ax,ay,az,gx,gy,gz");

    std::vector<ImuSample> stream;
    for (const CsvRow& row : file.rows) {
        if (row.fields.size() != 7)
            throw ValidationError(path.string() + ":" + std::to_string(row.line) + ": expected 7 fields");
        ImuSample s;
        double* slots[7] = {&s.t_ms, &s.ax, &s.ay, &s.az, &s.gx, &s.gy, &s.gz};
        for (std::size_t i = 0; i < 7; ++i) {
            const auto value = parse_double(row.fields[i]);
            if (!value)
                throw ValidationError(path.string() + ":" + std::to_string(row.line) + ": column " +
                                      std::to_string(i + 1) + ": not a number");
            *slots[i] = *value;
        }
        stream.push_back(s);
    }
    return stream;
}

void write_imu_csv(const std::vector<ImuSample>& stream, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "t_ms,ax,ay,az,gx,gy,gz\n";
    for (const ImuSample& s : stream) {
        out << format_fixed(s.t_ms, 2) << "," << format_sig9(s.ax) << "," << format_sig9(s.ay) << ","
            << format_sig9(s.az) << "," << format_sig9(s.gx) << "," << format_sig9(s.gy) << ","
            << format_sig9(s.gz) << "\n";
    }
}

void save_stroke_model(const StrokeModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["feature_count"] = model.mean.size();
    j["normalization"]["mean"] = model.mean;
    j["normalization"]["scale"] = model.scale;
    for (int c = 0; c < kBallTypeCount; ++c)
        j["centroids"][ball_type_name(static_cast<BallType>(c))] = model.centroids[static_cast<std::size_t>(c)];
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

StrokeModel load_stroke_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    StrokeModel model;
    try {
        model.mean = j.at("normalization").at("mean").get<std::vector<double>>();
        model.scale = j.at("normalization").at("scale").get<std::vector<double>>();
        for (int c = 0; c < kBallTypeCount; ++c) {
            model.centroids[static_cast<std::size_t>(c)] =
                j.at("centroids").at(ball_type_name(static_cast<BallType>(c))).get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": malformed stroke model: " + e.what());
    }
    for (const auto& centroid : model.centroids) {
        if (centroid.size() != model.mean.size() || model.scale.size() != model.mean.size())
            throw ValidationError(path.string() + ": stroke model dimensions disagree");
    }
    for (const double s : model.scale) {
        if (!(s > 0.0)) throw ValidationError(path.string() + ": normalization scales must be positive");
    }
    return model;
}

void write_classification_csv(std::ostream& out,
                              const std::vector<std::pair<double, StrokeClassification>>& rows) {
    out << "peak_t_ms,label,confidence\n";
    for (const auto& [t, c] : rows)
        out << format_fixed(t, 2) << "," << ball_type_name(c.label) << "," << format_sig9(c.confidence) << "\n";
}

}  // namespace courtside
