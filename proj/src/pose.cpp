#include "courtside/pose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "courtside/error.hpp"
#include "courtside/format.hpp"
#include "courtside/rng.hpp"

namespace courtside {

const std::vector<std::string>& default_keypoint_names() {
    static const std::vector<std::string> names = {
        "head_top", "upper_neck", "thorax", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow",
        "l_wrist",  "pelvis",     "r_hip",  "r_knee",     "r_ankle", "l_hip",   "l_knee",
    };
    return names;
}

SkeletonFeature normalize_skeleton(const Skeleton& skeleton, const BoundingBox& box) {
    if (!(box.w > 0.0) || !(box.h > 0.0)) throw SpecError("skeleton normalization needs a positive box");

    SkeletonFeature feature;
    feature.frame = skeleton.frame;
    feature.slot = skeleton.slot;
    feature.values.resize(skeleton.keypoints.size() * 2);
    feature.missing.resize(skeleton.keypoints.size() * 2);

    std::size_t visible = 0;
    for (std::size_t i = 0; i < skeleton.keypoints.size(); ++i) {
        const Keypoint& kp = skeleton.keypoints[i];
        if (kp.visible && std::isfinite(kp.x) && std::isfinite(kp.y)) {
            feature.values[2 * i] = (kp.x - box.x) / box.w;
            feature.values[2 * i + 1] = (kp.y - box.y) / box.h;
            feature.missing[2 * i] = feature.missing[2 * i + 1] = false;
            ++visible;
        } else {
            feature.values[2 * i] = feature.values[2 * i + 1] = std::numeric_limits<double>::quiet_NaN();
            feature.missing[2 * i] = feature.missing[2 * i + 1] = true;
        }
    }
    if (visible == 0)
        throw FeatureError("skeleton at frame " + std::to_string(skeleton.frame) + " has no visible keypoints");
    return feature;
}

void impute_missing(std::vector<SkeletonFeature>& features) {
    if (features.empty()) return;
    const std::size_t dims = features.front().values.size();
    for (const SkeletonFeature& f : features) {
        if (f.values.size() != dims) throw FeatureError("skeleton features have inconsistent dimensions");
    }

    std::vector<double> sums(dims, 0.0);
    std::vector<std::size_t> counts(dims, 0);
    for (const SkeletonFeature& f : features) {
        for (std::size_t d = 0; d < dims; ++d) {
            if (!f.missing[d]) {
                sums[d] += f.values[d];
                ++counts[d];
            }
        }
    }
    for (SkeletonFeature& f : features) {
        for (std::size_t d = 0; d < dims; ++d) {
            if (f.missing[d]) {
                f.values[d] = counts[d] > 0 ? sums[d] / static_cast<double>(counts[d]) : 0.5;
            }
        }
    }
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

// k-means++ seeding with an explicit [0,1) draw so results are reproducible.
std::vector<std::vector<double>> seed_centroids(const std::vector<const std::vector<double>*>& points, int k,
                                                std::mt19937_64& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.push_back(*points[uniform_index(rng, points.size())]);

    std::vector<double> d2(points.size(), 0.0);
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, squared_distance(*points[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double u = uniform_unit(rng) * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                cum += d2[i];
                if (u < cum) {
                    chosen = i;
                    break;
                }
                chosen = i;  // numerical tail: fall through to the last point
            }
        } else {
            // All points coincide with existing centroids; any choice works.
            chosen = uniform_index(rng, points.size());
        }
        centroids.push_back(*points[chosen]);
    }
    return centroids;
}

}  // namespace

ClusterReport cluster_skeletons(const std::vector<SkeletonFeature>& features, int k, double outlier_percentile,
                                std::uint64_t seed) {
    const std::size_t n = features.size();
    if (k < 1) throw ClusteringError("cluster count must be at least 1");
    if (static_cast<std::size_t>(k) > n)
        throw ClusteringError("cluster count " + std::to_string(k) + " exceeds feature count " + std::to_string(n));
    if (!(outlier_percentile > 0.0) || outlier_percentile > 1.0)
        throw ClusteringError("outlier percentile must lie in (0, 1]");

    const std::size_t dims = features.front().values.size();
    std::vector<const std::vector<double>*> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (features[i].values.size() != dims) throw ClusteringError("features have inconsistent dimensions");
        for (const double v : features[i].values) {
            if (!std::isfinite(v)) throw ClusteringError("features hold non-finite values; impute before clustering");
        }
        points[i] = &features[i].values;
    }

    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> centroids = seed_centroids(points, k, rng);

    ClusterReport report;
    report.assignment.assign(n, 0);
    report.outlier_percentile = outlier_percentile;

    constexpr int kMaxIterations = 300;
    constexpr double kShiftTolerance = 1e-6;
    for (int iteration = 0; iteration < kMaxIterations; ++iteration) {
        // Assignment step; ties go to the lowest cluster index.
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_cluster = 0;
            for (int c = 0; c < k; ++c) {
                const double d = squared_distance(*points[i], centroids[static_cast<std::size_t>(c)]);
                if (d < best) {
                    best = d;
                    best_cluster = c;
                }
            }
            report.assignment[i] = best_cluster;
            objective += best;
        }
        report.objective_history.push_back(objective);

        // Update step.
        std::vector<std::vector<double>> next(static_cast<std::size_t>(k), std::vector<double>(dims, 0.0));
        std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(report.assignment[i]);
            for (std::size_t d = 0; d < dims; ++d) next[c][d] += (*points[i])[d];
            ++sizes[c];
        }
        std::vector<char> stolen(n, 0);
        for (int c = 0; c < k; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            if (sizes[ci] == 0) {
                // Re-seed an empty cluster with the point farthest from its centroid.
                std::size_t farthest = 0;
                double worst = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (stolen[i]) continue;
                    const double d =
                        squared_distance(*points[i], centroids[static_cast<std::size_t>(report.assignment[i])]);
                    if (d > worst) {
                        worst = d;
                        farthest = i;
                    }
                }
                next[ci] = *points[farthest];
                sizes[ci] = 1;
                stolen[farthest] = 1;
                report.assignment[farthest] = c;
            } else {
                for (std::size_t d = 0; d < dims; ++d) next[ci][d] /= static_cast<double>(sizes[ci]);
            }
        }

        double shift = 0.0;
        for (int c = 0; c < k; ++c)
            shift = std::max(shift, std::sqrt(squared_distance(centroids[static_cast<std::size_t>(c)],
                                                               next[static_cast<std::size_t>(c)])));
        centroids = std::move(next);
        if (shift < kShiftTolerance) break;
    }

    // Final assignment against the converged centroids.
    report.distance.resize(n);
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_cluster = 0;
        for (int c = 0; c < k; ++c) {
            const double d = squared_distance(*points[i], centroids[static_cast<std::size_t>(c)]);
            if (d < best) {
                best = d;
                best_cluster = c;
            }
        }
        report.assignment[i] = best_cluster;
        report.distance[i] = std::sqrt(best);
        objective += best;
    }
    report.objective_history.push_back(objective);
    report.centroids = std::move(centroids);

    // Outliers: distance above the percentile of all distances.
    std::vector<double> sorted = report.distance;
    std::sort(sorted.begin(), sorted.end());
    const double rank = std::ceil(outlier_percentile * static_cast<double>(n)) - 1.0;
    const std::size_t idx = static_cast<std::size_t>(std::clamp(rank, 0.0, static_cast<double>(n - 1)));
    report.outlier_threshold = sorted[idx];
    report.outlier.resize(n);
    for (std::size_t i = 0; i < n; ++i) report.outlier[i] = report.distance[i] > report.outlier_threshold;

    report.frames.resize(n);
    report.slots.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.frames[i] = features[i].frame;
        report.slots[i] = features[i].slot;
    }
    return report;
}

std::vector<OutlierEntry> outlier_report(const ClusterReport& report) {
    std::vector<OutlierEntry> entries;
    for (std::size_t i = 0; i < report.outlier.size(); ++i) {
        if (report.outlier[i]) entries.push_back({report.frames[i], report.slots[i], report.distance[i]});
    }
    std::sort(entries.begin(), entries.end(), [](const OutlierEntry& a, const OutlierEntry& b) {
        if (a.distance != b.distance) return a.distance > b.distance;
        if (a.frame != b.frame) return a.frame < b.frame;
        return static_cast<int>(a.slot) < static_cast<int>(b.slot);
    });
    return entries;
}

std::vector<Skeleton> read_skeletons_jsonl(const std::filesystem::path& path, std::size_t keypoint_count,
                                           std::vector<std::string>* errors) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::vector<Skeleton> skeletons;
    std::string line;
    std::size_t line_no = 0;
    auto report = [&](const std::string& message) {
        if (errors) errors->push_back(path.string() + ":" + std::to_string(line_no) + ": " + message);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            report(e.what());
            continue;
        }
        try {
            Skeleton s;
            s.frame = j.at("frame").get<long>();
            s.slot = parse_player_slot(j.at("player_slot").get<std::string>());
            const auto& kps = j.at("keypoints");
            if (!kps.is_array() || kps.size() != keypoint_count) {
                report("expected " + std::to_string(keypoint_count) + " keypoints");
                continue;
            }
            bool bad = false;
            for (const auto& kp : kps) {
                if (!kp.is_array() || kp.size() != 3) {
                    bad = true;
                    break;
                }
                Keypoint point;
                point.x = kp[0].get<double>();
                point.y = kp[1].get<double>();
                point.visible = kp[2].get<double>() != 0.0;
                if (point.visible && (!std::isfinite(point.x) || !std::isfinite(point.y))) {
                    bad = true;
                    break;
                }
                s.keypoints.push_back(point);
            }
            if (bad) {
                report("keypoints must be [x, y, visible] triples with finite visible coordinates");
                continue;
            }
            if (j.contains("racket")) {
                const auto& r = j["racket"];
                if (!r.is_array() || r.size() != 2) {
                    report("racket must be [x, y]");
                    continue;
                }
                s.racket = PixelPoint{r[0].get<double>(), r[1].get<double>()};
            }
            skeletons.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            report(e.what());
        } catch (const SpecError& e) {
            report(e.what());
        }
    }
    return skeletons;
}

void write_skeletons_jsonl(const std::vector<Skeleton>& skeletons, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const Skeleton& s : skeletons) {
        nlohmann::json j;
        j["frame"] = s.frame;
        j["player_slot"] = player_slot_name(s.slot);
        nlohmann::json kps = nlohmann::json::array();
        for (const Keypoint& kp : s.keypoints) kps.push_back({kp.x, kp.y, kp.visible ? 1 : 0});
        j["keypoints"] = kps;
        if (s.racket) j["racket"] = {s.racket->x, s.racket->y};
        out << j.dump() << "\n";
    }
}

void write_outliers_csv(std::ostream& out, const std::vector<OutlierEntry>& entries) {
    out << "frame,player_slot,distance\n";
    for (const OutlierEntry& e : entries)
        out << e.frame << "," << player_slot_name(e.slot) << "," << format_sig9(e.distance) << "\n";
}

}  // namespace courtside
