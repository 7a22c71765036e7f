#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace courtside {

inline constexpr int kGrayDepth = 256;

struct HeatmapSpec {
    int width = 640;
    int height = 480;
    double variance = 10.0;  // Gaussian sigma^2, px^2
    int amplitude = 255;     // peak grayscale value, in [1, 255]

    void validate() const;  // throws SpecError
};

// 8-bit amplitude grid, row-major (y * width + x).
struct Heatmap {
    HeatmapSpec spec;
    std::vector<std::uint8_t> values;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(spec.width) + static_cast<std::size_t>(x);
    }
    std::uint8_t at(int x, int y) const { return values[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return values[index(x, y)]; }
};

// Per-pixel grayscale class index, the implicit one-hot over depth 256.
struct OneHotVolume {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> index;

    std::uint8_t at(int x, int y) const {
        return index[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
};

// Raw per-pixel scores over the 256 grayscale bins, k fastest.
struct LogitVolume {
    int width = 0;
    int height = 0;
    std::vector<double> scores;

    static LogitVolume zeros(int width, int height);
    std::size_t index(int x, int y, int k) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                   kGrayDepth +
               static_cast<std::size_t>(k);
    }
    double at(int x, int y, int k) const { return scores[index(x, y, k)]; }
    double& at(int x, int y, int k) { return scores[index(x, y, k)]; }
};

// Per-pixel probability over the 256 grayscale bins; each pixel sums to 1.
struct ProbabilityVolume {
    int width = 0;
    int height = 0;
    std::vector<double> p;

    static ProbabilityVolume uniform(int width, int height);
    std::size_t index(int x, int y, int k) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                   kGrayDepth +
               static_cast<std::size_t>(k);
    }
    double at(int x, int y, int k) const { return p[index(x, y, k)]; }
    double& at(int x, int y, int k) { return p[index(x, y, k)]; }

    void validate(double tol = 1e-9) const;  // bins non-negative and summing to 1
};

/// Ground-truth heatmap: floor(amplitude * exp(-((x-cx)^2 + (y-cy)^2) / (2 sigma^2)))
/// per pixel. The center may lie anywhere, including outside the grid.
Heatmap generate_heatmap(double center_x, double center_y, const HeatmapSpec& spec);

OneHotVolume encode_onehot(const Heatmap& heatmap);

/// Inverse of encode_onehot; grid dimensions must match the spec.
Heatmap decode_onehot(const OneHotVolume& onehot, const HeatmapSpec& spec);

/// Max-shifted pixel-wise softmax over the 256 bins. Throws ComputeError on
/// non-finite scores.
ProbabilityVolume softmax_normalize(const LogitVolume& logits);

/// -sum_{i,j} log pred(i, j, truth(i, j)), natural log, probabilities clamped
/// at eps before the log. Throws SpecError on dimension mismatch.
double cross_entropy_loss(const ProbabilityVolume& pred, const OneHotVolume& truth, double eps = 1e-12);

// Binary 8-bit grayscale PGM (P5).
void write_pgm(const Heatmap& heatmap, const std::filesystem::path& path);
Heatmap read_pgm(const std::filesystem::path& path);

// JSON descriptor {width, height, variance, center} accompanying a heatmap.
std::string heatmap_descriptor_json(const HeatmapSpec& spec, double center_x, double center_y);

}  // namespace courtside
