#include "courtside/heatmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "courtside/error.hpp"

namespace courtside {

void HeatmapSpec::validate() const {
    if (width < 1 || height < 1) throw SpecError("heatmap dimensions must be at least 1x1");
    if (!(variance > 0.0) || !std::isfinite(variance)) throw SpecError("heatmap variance must be positive");
    if (amplitude < 1 || amplitude > 255) throw SpecError("heatmap amplitude must lie in [1, 255]");
}

LogitVolume LogitVolume::zeros(int width, int height) {
    LogitVolume v;
    v.width = width;
    v.height = height;
    v.scores.assign(static_cast<std::size_t>(width) * height * kGrayDepth, 0.0);
    return v;
}

ProbabilityVolume ProbabilityVolume::uniform(int width, int height) {
    ProbabilityVolume v;
    v.width = width;
    v.height = height;
    v.p.assign(static_cast<std::size_t>(width) * height * kGrayDepth, 1.0 / kGrayDepth);
    return v;
}

void ProbabilityVolume::validate(double tol) const {
    if (p.size() != static_cast<std::size_t>(width) * height * kGrayDepth)
        throw SpecError("probability volume storage does not match its dimensions");
    for (std::size_t pixel = 0; pixel < static_cast<std::size_t>(width) * height; ++pixel) {
        double sum = 0.0;
        for (int k = 0; k < kGrayDepth; ++k) {
            const double value = p[pixel * kGrayDepth + k];
            if (value < 0.0) throw SpecError("probability volume holds a negative bin");
            sum += value;
        }
        if (std::abs(sum - 1.0) > tol) throw SpecError("probability bins do not sum to 1");
    }
}

Heatmap generate_heatmap(double center_x, double center_y, const HeatmapSpec& spec) {
    spec.validate();
    Heatmap heatmap;
    heatmap.spec = spec;
    heatmap.values.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);

    const double inv_two_var = 1.0 / (2.0 * spec.variance);
    const double amplitude = static_cast<double>(spec.amplitude);
    std::size_t i = 0;
    for (int y = 0; y < spec.height; ++y) {
        const double dy = static_cast<double>(y) - center_y;
        for (int x = 0; x < spec.width; ++x, ++i) {
            const double dx = static_cast<double>(x) - center_x;
            const double value = std::floor(std::exp(-(dx * dx + dy * dy) * inv_two_var) * amplitude);
            heatmap.values[i] = static_cast<std::uint8_t>(value);
        }
    }
    return heatmap;
}

OneHotVolume encode_onehot(const Heatmap& heatmap) {
    OneHotVolume onehot;
    onehot.width = heatmap.spec.width;
    onehot.height = heatmap.spec.height;
    onehot.index.assign(heatmap.values.begin(), heatmap.values.end());
    return onehot;
}

Heatmap decode_onehot(const OneHotVolume& onehot, const HeatmapSpec& spec) {
    if (onehot.width != spec.width || onehot.height != spec.height)
        throw SpecError("one-hot volume dimensions do not match the heatmap spec");
    Heatmap heatmap;
    heatmap.spec = spec;
    heatmap.values.assign(onehot.index.begin(), onehot.index.end());
    return heatmap;
}

ProbabilityVolume softmax_normalize(const LogitVolume& logits) {
    if (logits.scores.size() != static_cast<std::size_t>(logits.width) * logits.height * kGrayDepth)
        throw SpecError("logit volume storage does not match its dimensions");

    ProbabilityVolume out;
    out.width = logits.width;
    out.height = logits.height;
    out.p.resize(logits.scores.size());

    const std::size_t pixels = static_cast<std::size_t>(logits.width) * logits.height;
    for (std::size_t pixel = 0; pixel < pixels; ++pixel) {
        const double* s = logits.scores.data() + pixel * kGrayDepth;
        double* p = out.p.data() + pixel * kGrayDepth;

        double max_score = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < kGrayDepth; ++k) {
            if (!std::isfinite(s[k])) throw ComputeError("softmax input holds a non-finite score");
            max_score = std::max(max_score, s[k]);
        }
        double denom = 0.0;
        for (int k = 0; k < kGrayDepth; ++k) {
            p[k] = std::exp(s[k] - max_score);
            denom += p[k];
        }
        for (int k = 0; k < kGrayDepth; ++k) p[k] /= denom;
    }
    return out;
}

double cross_entropy_loss(const ProbabilityVolume& pred, const OneHotVolume& truth, double eps) {
    if (pred.width != truth.width || pred.height != truth.height)
        throw SpecError("prediction and truth dimensions do not match");
    if (truth.index.size() != static_cast<std::size_t>(truth.width) * truth.height)
        throw SpecError("one-hot volume storage does not match its dimensions");

    double loss = 0.0;
    const std::size_t pixels = truth.index.size();
    for (std::size_t pixel = 0; pixel < pixels; ++pixel) {
        const double p = pred.p[pixel * kGrayDepth + truth.index[pixel]];
        loss -= std::log(std::max(p, eps));
    }
    return loss;
}

void write_pgm(const Heatmap& heatmap, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << heatmap.spec.width << " " << heatmap.spec.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(heatmap.values.data()),
              static_cast<std::streamsize>(heatmap.values.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

int next_pgm_int(std::istream& in, const std::filesystem::path& path) {
    // Skips whitespace and '#' comments between header tokens.
    while (true) {
        const int c = in.peek();
        if (c == EOF) throw IoError("truncated PGM header in " + path.string());
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(in >> value)) throw IoError("malformed PGM header in " + path.string());
    return value;
}

}  // namespace

Heatmap read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') throw IoError(path.string() + " is not a binary (P5) PGM");

    const int width = next_pgm_int(in, path);
    const int height = next_pgm_int(in, path);
    const int maxval = next_pgm_int(in, path);
    if (width < 1 || height < 1) throw IoError("invalid PGM dimensions in " + path.string());
    if (maxval < 1 || maxval > 255) throw IoError("unsupported PGM maxval in " + path.string());
    in.get();  // single whitespace separating header and raster

    Heatmap heatmap;
    heatmap.spec.width = width;
    heatmap.spec.height = height;
    heatmap.values.resize(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(heatmap.values.data()), static_cast<std::streamsize>(heatmap.values.size()));
    if (in.gcount() != static_cast<std::streamsize>(heatmap.values.size()))
        throw IoError("truncated PGM raster in " + path.string());
    return heatmap;
}

std::string heatmap_descriptor_json(const HeatmapSpec& spec, double center_x, double center_y) {
    nlohmann::json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["variance"] = spec.variance;
    j["center"] = {center_x, center_y};
    return j.dump(2) + "\n";
}

}  // namespace courtside
