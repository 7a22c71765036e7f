#include "courtside/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <vector>

#include "courtside/csv.hpp"
#include "courtside/error.hpp"
#include "courtside/format.hpp"

namespace courtside {

void DecoderConfig::validate() const {
    if (threshold <= 0 || threshold >= 255) throw SpecError("decoder threshold must lie strictly inside (0, 255)");
    if (min_radius <= 0 || min_radius > max_radius)
        throw SpecError("decoder radius window requires 0 < min_radius <= max_radius");
    if (gradient_threshold < 0.0) throw SpecError("gradient threshold must be non-negative");
    if (accumulator_threshold < 1) throw SpecError("accumulator threshold must be at least 1");
    if (min_center_distance < 0.0) throw SpecError("min center distance must be non-negative");
}

BinaryMap binarize(const Heatmap& heatmap, int threshold) {
    BinaryMap binary;
    binary.width = heatmap.spec.width;
    binary.height = heatmap.spec.height;
    binary.values.resize(heatmap.values.size());
    for (std::size_t i = 0; i < heatmap.values.size(); ++i)
        binary.values[i] = heatmap.values[i] > threshold ? 255 : 0;
    return binary;
}

namespace {

// Erases 8-connected components smaller than min_size, in place.
void remove_speckle(BinaryMap& map, int min_size) {
    if (min_size <= 1) return;
    const int w = map.width;
    const int h = map.height;
    std::vector<std::uint8_t> seen(map.values.size(), 0);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> component;

    for (std::size_t start = 0; start < map.values.size(); ++start) {
        if (map.values[start] == 0 || seen[start]) continue;
        stack.assign(1, start);
        seen[start] = 1;
        component.clear();
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            component.push_back(i);
            const int x = static_cast<int>(i % w);
            const int y = static_cast<int>(i / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (map.values[ni] != 0 && !seen[ni]) {
                        seen[ni] = 1;
                        stack.push_back(ni);
                    }
                }
            }
        }
        if (component.size() < static_cast<std::size_t>(min_size)) {
            for (const std::size_t i : component) map.values[i] = 0;
        }
    }
}

struct EdgePixel {
    int x;
    int y;
    double nx;  // unit gradient direction
    double ny;
};

struct CandidateCenter {
    int x;
    int y;
    int votes;
};

}  // namespace

std::vector<Circle> find_circles(const BinaryMap& binary, const DecoderConfig& config) {
    config.validate();
    const int w = binary.width;
    const int h = binary.height;
    if (w < 3 || h < 3) return {};

    BinaryMap map = binary;
    remove_speckle(map, config.min_component_size);

    // 3x3 Sobel; border pixels carry no gradient.
    std::vector<EdgePixel> edges;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const auto v = [&](int dx, int dy) { return static_cast<double>(map.at(x + dx, y + dy)); };
            const double gx = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
            const double gy = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
            const double mag = std::hypot(gx, gy);
            if (mag > config.gradient_threshold) edges.push_back({x, y, gx / mag, gy / mag});
        }
    }
    if (edges.empty()) return {};

    // Vote along both gradient directions: a bright-on-dark disk has inward
    // gradients on one polarity and outward on the other.
    std::vector<int> acc(static_cast<std::size_t>(w) * h, 0);
    for (const EdgePixel& e : edges) {
        for (int r = config.min_radius; r <= config.max_radius; ++r) {
            for (int sign = -1; sign <= 1; sign += 2) {
                const int cx = static_cast<int>(std::lround(e.x + sign * r * e.nx));
                const int cy = static_cast<int>(std::lround(e.y + sign * r * e.ny));
                if (cx < 0 || cx >= w || cy < 0 || cy >= h) continue;
                ++acc[static_cast<std::size_t>(cy) * w + cx];
            }
        }
    }

    // Local maxima over the 8-neighborhood, then greedy separation.
    std::vector<CandidateCenter> candidates;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int votes = acc[static_cast<std::size_t>(y) * w + x];
            if (votes < config.accumulator_threshold) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const int neighbor = acc[static_cast<std::size_t>(ny) * w + nx];
                    // Strict on the lexicographically earlier side so a flat
                    // 2-cell plateau yields exactly one candidate.
                    if (neighbor > votes || (neighbor == votes && (dy < 0 || (dy == 0 && dx < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) candidates.push_back({x, y, votes});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const CandidateCenter& a, const CandidateCenter& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    std::vector<Circle> circles;
    for (const CandidateCenter& c : candidates) {
        bool separated = true;
        for (const Circle& accepted : circles) {
            const double d = std::hypot(c.x - accepted.cx, c.y - accepted.cy);
            if (d < config.min_center_distance) {
                separated = false;
                break;
            }
        }
        if (!separated) continue;

        // Radius: distance mode of edge pixels inside the search annulus.
        const auto radius_mode = [&](double cx, double cy) {
            std::vector<int> hist(static_cast<std::size_t>(config.max_radius) + 1, 0);
            for (const EdgePixel& e : edges) {
                const double d = std::hypot(e.x - cx, e.y - cy);
                if (d < config.min_radius - 0.5 || d >= config.max_radius + 0.5) continue;
                const int bin = std::clamp(static_cast<int>(std::lround(d)), config.min_radius, config.max_radius);
                ++hist[static_cast<std::size_t>(bin)];
            }
            int radius = config.min_radius;
            int best = -1;
            for (int r = config.min_radius; r <= config.max_radius; ++r) {
                if (hist[static_cast<std::size_t>(r)] > best) {
                    best = hist[static_cast<std::size_t>(r)];
                    radius = r;
                }
            }
            return radius;
        };

        // Sub-pixel center: centroid of the supporting edge ring. The
        // rasterized boundary is symmetric about the true center, so its
        // centroid refines the 1 px accumulator cell.
        double cx = c.x;
        double cy = c.y;
        int radius = radius_mode(cx, cy);
        for (int pass = 0; pass < 2; ++pass) {
            double rx = 0.0, ry = 0.0;
            int rn = 0;
            for (const EdgePixel& e : edges) {
                const double d = std::hypot(e.x - cx, e.y - cy);
                if (std::abs(d - radius) <= 1.0) {
                    rx += e.x;
                    ry += e.y;
                    ++rn;
                }
            }
            if (rn < 3) break;
            cx = rx / static_cast<double>(rn);
            cy = ry / static_cast<double>(rn);
            radius = radius_mode(cx, cy);
        }

        circles.push_back({cx, cy, static_cast<double>(radius), c.votes});
    }
    return circles;
}

BallDetection decode_ball(const Heatmap& heatmap, const DecoderConfig& config, long frame) {
    config.validate();
    BallDetection detection;
    detection.frame = frame;

    if (config.mode == DecodeMode::Argmax) {
        int best = -1;
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < heatmap.values.size(); ++i) {
            if (static_cast<int>(heatmap.values[i]) > best) {
                best = heatmap.values[i];
                best_index = i;
            }
        }
        if (best > config.threshold) {
            detection.status = DetectionStatus::Found;
            detection.x = static_cast<double>(best_index % static_cast<std::size_t>(heatmap.spec.width));
            detection.y = static_cast<double>(best_index / static_cast<std::size_t>(heatmap.spec.width));
        }
        return detection;
    }

    const BinaryMap binary = binarize(heatmap, config.threshold);
    const std::vector<Circle> circles = find_circles(binary, config);
    if (circles.size() == 1) {
        detection.status = DetectionStatus::Found;
        detection.x = circles.front().cx;
        detection.y = circles.front().cy;
    }
    return detection;
}

void write_detections_csv(std::ostream& out, const std::vector<BallDetection>& detections) {
    out << "frame,status,x,y\n";
    for (const BallDetection& d : detections) {
        if (d.status == DetectionStatus::Found) {
            out << d.frame << ",found," << format_fixed(d.x, 2) << "," << format_fixed(d.y, 2) << "\n";
        } else {
            out << d.frame << ",absent,,\n";
        }
    }
}

std::vector<BallDetection> read_detections_csv(const std::filesystem::path& path) {
    const CsvFile file = read_csv(path);
    const std::vector<std::string> expected = {"frame", "status", "x", "y"};
    if (file.header != expected) throw IoError("unexpected detections header in " + path.string());

    std::vector<BallDetection> detections;
    for (const CsvRow& row : file.rows) {
        if (row.fields.size() != 4)
            throw IoError(path.string() + ":" + std::to_string(row.line) + ": expected 4 fields");
        BallDetection d;
        const auto frame = parse_long(row.fields[0]);
        if (!frame) throw IoError(path.string() + ":" + std::to_string(row.line) + ": bad frame index");
        d.frame = *frame;
        if (row.fields[1] == "found") {
            const auto x = parse_double(row.fields[2]);
            const auto y = parse_double(row.fields[3]);
            if (!x || !y) throw IoError(path.string() + ":" + std::to_string(row.line) + ": missing coordinates");
            d.status = DetectionStatus::Found;
            d.x = *x;
            d.y = *y;
        } else if (row.fields[1] == "absent") {
            d.status = DetectionStatus::Absent;
        } else {
            throw IoError(path.string() + ":" + std::to_string(row.line) + ": unknown status");
        }
        detections.push_back(d);
    }
    return detections;
}

}  // namespace courtside
