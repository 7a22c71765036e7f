#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "courtside/types.hpp"

namespace courtside {

// Court-plane frame: origin at the near-left corner, x across the width,
// y along the length toward the far court.
struct CourtModel {
    double length = 13.40;  // m, doubles court
    double width = 6.10;    // m
    double margin = 0.0;    // m of tolerance outside the lines

    void validate() const;  // throws SpecError
    bool contains(const CourtPoint& p) const;

    // Corners, net, singles sidelines and service lines at standard offsets.
    std::vector<std::pair<std::string, CourtPoint>> landmarks() const;
};

// 3x3 projective map from image pixels to court meters, row-major, scaled so
// m[8] == 1 (or to unit Frobenius norm when that entry vanishes).
struct Homography {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    bool conditioning_warning = false;
};

struct Correspondence {
    PixelPoint pixel;
    CourtPoint court;
};

/// Normalized DLT: Hartley-normalize both point sets, solve the stacked
/// 2Nx9 system by smallest singular vector, denormalize. Needs >= 4
/// correspondences in a non-degenerate configuration.
Homography estimate_homography(const std::vector<Correspondence>& correspondences);

/// Perspective division of H * (x, y, 1). Throws ProjectionError when the
/// homogeneous scale vanishes.
CourtPoint project_point(const Homography& h, const PixelPoint& p);

/// Midpoint of the box's lower boundary: (x + w/2, y + h).
PixelPoint ground_point(const BoundingBox& box);

/// Keeps boxes whose projected ground point lands inside the court (plus
/// margin), attaching the court point; input order is preserved. Boxes that
/// fail to project are dropped with a warning, not an error.
std::vector<std::pair<BoundingBox, CourtPoint>> filter_players(const std::vector<BoundingBox>& boxes,
                                                               const Homography& h, const CourtModel& court,
                                                               std::vector<std::string>* warnings = nullptr);

/// Scales the box about its center by `factor` (>= 1), then clips to the
/// frame rectangle.
BoundingBox enlarge_box(const BoundingBox& box, double factor, double frame_width, double frame_height);

// Calibration file {"points": [{"px": [u,v], "court": [x,y]}, ...]}.
std::vector<Correspondence> load_calibration(const std::filesystem::path& path);
void save_calibration(const std::vector<Correspondence>& correspondences, const std::filesystem::path& path);

// Homography exchange format: a 9-number row-major JSON array.
std::string homography_to_json(const Homography& h);
Homography homography_from_json_file(const std::filesystem::path& path);

}  // namespace courtside
