#include "courtside/court.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "courtside/error.hpp"

namespace courtside {

namespace {

// Standard court offsets, meters.
constexpr double kSinglesInset = 0.46;
constexpr double kShortServiceFromNet = 1.98;
constexpr double kDoublesLongServiceFromBack = 0.76;

struct NormalizationTransform {
    Eigen::Matrix3d t;
};

// Hartley normalization: centroid to the origin, mean distance sqrt(2).
NormalizationTransform normalize_points(const std::vector<Eigen::Vector2d>& points,
                                        std::vector<Eigen::Vector2d>& normalized) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    double mean_dist = 0.0;
    for (const auto& p : points) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(points.size());
    if (mean_dist < 1e-12) throw EstimationError("degenerate correspondences: points are coincident");

    const double scale = std::sqrt(2.0) / mean_dist;
    NormalizationTransform out;
    out.t << scale, 0, -scale * centroid.x(), 0, scale, -scale * centroid.y(), 0, 0, 1;

    normalized.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) normalized[i] = scale * (points[i] - centroid);
    return out;
}

Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> as_matrix(const Homography& h) {
    return Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(h.m.data());
}

}  // namespace

void CourtModel::validate() const {
    if (!(length > 0.0) || !(width > 0.0)) throw SpecError("court dimensions must be positive");
    if (margin < 0.0) throw SpecError("court margin must be non-negative");
}

bool CourtModel::contains(const CourtPoint& p) const {
    return p.x >= -margin && p.x <= width + margin && p.y >= -margin && p.y <= length + margin;
}

std::vector<std::pair<std::string, CourtPoint>> CourtModel::landmarks() const {
    const double net_y = length / 2.0;
    const double singles_left = kSinglesInset;
    const double singles_right = width - kSinglesInset;
    return {
        {"corner_near_left", {0.0, 0.0}},
        {"corner_near_right", {width, 0.0}},
        {"corner_far_left", {0.0, length}},
        {"corner_far_right", {width, length}},
        {"net_left", {0.0, net_y}},
        {"net_right", {width, net_y}},
        {"singles_sideline_near_left", {singles_left, 0.0}},
        {"singles_sideline_near_right", {singles_right, 0.0}},
        {"singles_sideline_far_left", {singles_left, length}},
        {"singles_sideline_far_right", {singles_right, length}},
        {"short_service_near_left", {0.0, net_y - kShortServiceFromNet}},
        {"short_service_near_right", {width, net_y - kShortServiceFromNet}},
        {"short_service_far_left", {0.0, net_y + kShortServiceFromNet}},
        {"short_service_far_right", {width, net_y + kShortServiceFromNet}},
        {"doubles_long_service_near", {width / 2.0, kDoublesLongServiceFromBack}},
        {"doubles_long_service_far", {width / 2.0, length - kDoublesLongServiceFromBack}},
    };
}

Homography estimate_homography(const std::vector<Correspondence>& correspondences) {
    const std::size_t n = correspondences.size();
    if (n < 4) throw EstimationError("homography estimation needs at least 4 correspondences");

    std::vector<Eigen::Vector2d> pixel_points(n), court_points(n);
    for (std::size_t i = 0; i < n; ++i) {
        pixel_points[i] = {correspondences[i].pixel.x, correspondences[i].pixel.y};
        court_points[i] = {correspondences[i].court.x, correspondences[i].court.y};
        if (!pixel_points[i].allFinite() || !court_points[i].allFinite())
            throw EstimationError("correspondences hold non-finite coordinates");
    }

    std::vector<Eigen::Vector2d> src, dst;
    const NormalizationTransform t_pixel = normalize_points(pixel_points, src);
    const NormalizationTransform t_court = normalize_points(court_points, dst);

    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = src[i].x(), y = src[i].y();
        const double u = dst[i].x(), v = dst[i].y();
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y, -v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd sigma = svd.singularValues();
    // With 9 columns the solution is the 9th right singular vector; if the 8th
    // singular value also vanishes the system is rank-deficient and the
    // homography is not unique (3 collinear points, repeated points, ...).
    const double sigma0 = sigma(0) > 0.0 ? sigma(0) : 1.0;
    if (sigma(7) <= 1e-12 * sigma0) throw EstimationError("degenerate correspondence configuration");

    const Eigen::VectorXd hvec = svd.matrixV().col(8);
    Eigen::Matrix3d h_norm;
    h_norm << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);

    Eigen::Matrix3d h = t_court.t.inverse() * h_norm * t_pixel.t;

    const double frob = h.norm();
    if (std::abs(h(2, 2)) > 1e-9 * frob) {
        h /= h(2, 2);
    } else {
        h /= frob;
        // Fix the sign so normalization is canonical: first entry with the
        // largest magnitude made positive.
        Eigen::Index r = 0, c = 0;
        h.cwiseAbs().maxCoeff(&r, &c);
        if (h(r, c) < 0.0) h = -h;
    }

    if (std::abs(h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0)) < 1e-12)
        throw EstimationError("estimated homography is degenerate (singular upper-left block)");

    Homography out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.m[static_cast<std::size_t>(r) * 3 + c] = h(r, c);
    out.conditioning_warning = sigma(7) <= 1e-8 * sigma0;
    return out;
}

CourtPoint project_point(const Homography& h, const PixelPoint& p) {
    const auto m = as_matrix(h);
    const Eigen::Vector3d q = m * Eigen::Vector3d(p.x, p.y, 1.0);
    if (std::abs(q.z()) < 1e-12)
        throw ProjectionError("point projects to the line at infinity");
    return {q.x() / q.z(), q.y() / q.z()};
}

PixelPoint ground_point(const BoundingBox& box) {
    return {box.x + box.w / 2.0, box.y + box.h};
}

std::vector<std::pair<BoundingBox, CourtPoint>> filter_players(const std::vector<BoundingBox>& boxes,
                                                               const Homography& h, const CourtModel& court,
                                                               std::vector<std::string>* warnings) {
    court.validate();
    std::vector<std::pair<BoundingBox, CourtPoint>> kept;
    for (const BoundingBox& box : boxes) {
        CourtPoint point;
        try {
            point = project_point(h, ground_point(box));
        } catch (const ProjectionError& e) {
            if (warnings)
                warnings->push_back("frame " + std::to_string(box.source_frame) + ": box dropped: " + e.what());
            continue;
        }
        if (court.contains(point)) kept.emplace_back(box, point);
    }
    return kept;
}

BoundingBox enlarge_box(const BoundingBox& box, double factor, double frame_width, double frame_height) {
    if (factor < 1.0) throw SpecError("enlargement factor must be at least 1");
    const double cx = box.x + box.w / 2.0;
    const double cy = box.y + box.h / 2.0;
    const double w = box.w * factor;
    const double h = box.h * factor;

    const double x0 = std::max(0.0, cx - w / 2.0);
    const double y0 = std::max(0.0, cy - h / 2.0);
    const double x1 = std::min(frame_width, cx + w / 2.0);
    const double y1 = std::min(frame_height, cy + h / 2.0);

    BoundingBox out = box;
    out.x = x0;
    out.y = y0;
    out.w = std::max(0.0, x1 - x0);
    out.h = std::max(0.0, y1 - y0);
    return out;
}

std::vector<Correspondence> load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (!j.contains("points") || !j["points"].is_array())
        throw ValidationError(path.string() + ": calibration file needs a \"points\" array");

    std::vector<Correspondence> out;
    for (const auto& entry : j["points"]) {
        if (!entry.contains("px") || !entry.contains("court") || entry["px"].size() != 2 ||
            entry["court"].size() != 2)
            throw ValidationError(path.string() + ": each point needs \"px\": [u,v] and \"court\": [x,y]");
        Correspondence c;
        c.pixel = {entry["px"][0].get<double>(), entry["px"][1].get<double>()};
        c.court = {entry["court"][0].get<double>(), entry["court"][1].get<double>()};
        out.push_back(c);
    }
    return out;
}

void save_calibration(const std::vector<Correspondence>& correspondences, const std::filesystem::path& path) {
    nlohmann::json points = nlohmann::json::array();
    for (const Correspondence& c : correspondences) {
        points.push_back({{"px", {c.pixel.x, c.pixel.y}}, {"court", {c.court.x, c.court.y}}});
    }
    nlohmann::json j;
    j["points"] = points;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

std::string homography_to_json(const Homography& h) {
    nlohmann::json j = nlohmann::json::array();
    for (const double v : h.m) j.push_back(v);
    return j.dump() + "\n";
}

Homography homography_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (!j.is_array() || j.size() != 9)
        throw ValidationError(path.string() + ": homography file must be a 9-number array");
    Homography h;
    for (std::size_t i = 0; i < 9; ++i) h.m[i] = j[i].get<double>();
    return h;
}

}  // namespace courtside
