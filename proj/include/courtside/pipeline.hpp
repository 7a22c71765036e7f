#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "courtside/court.hpp"
#include "courtside/dataset.hpp"
#include "courtside/decode.hpp"
#include "courtside/heatmap.hpp"
#include "courtside/imu.hpp"
#include "courtside/rally.hpp"

namespace courtside {

struct QaConfig {
    int k = 8;
    double outlier_percentile = 0.95;
    double enlarge_factor = 1.5;
};

// Tunables for every stage, overridable from a JSON config file.
struct Config {
    HeatmapSpec heatmap;
    DecoderConfig decoder;
    CourtModel court;
    QaConfig qa;
    HitDetectParams analytics;
    SegmentConfig imu;
};

Config load_config(const std::filesystem::path& path);  // partial overrides on defaults

enum class Stage { Decode, Filter, Qa, Analytics };

Stage parse_stage(const std::string& name);
std::string stage_name(Stage stage);

struct PipelineOptions {
    std::set<Stage> stages;
    std::filesystem::path out_dir;
    std::filesystem::path heatmap_dir;  // decode input, directory of .pgm files
    std::uint64_t seed = 0;
    Config config;
};

struct StageReport {
    std::string name;
    std::string status;  // ok | skipped | failed
    std::string detail;
    std::map<std::string, std::int64_t> counts;
    std::vector<std::string> warnings;
    double wall_ms = 0.0;
};

struct RunReport {
    std::uint64_t seed = 0;
    std::vector<StageReport> stages;

    // Deterministic form written into the output tree; timing is excluded so
    // identical inputs produce identical files.
    std::string to_json() const;
    // Full form including wall time, for logs.
    std::string to_log() const;
};

/// Runs the requested stages in decode -> filter -> qa -> analytics order.
/// A stage with missing inputs is skipped with a report entry, and stages
/// consuming its outputs skip the dependent work as well.
RunReport run_pipeline(const MatchDataset& dataset, const PipelineOptions& options);

struct ManifestEntry {
    std::string name;
    std::size_t records = 0;
};

/// Writes the chart payloads (bar, per-rally radar, rally series) plus
/// manifest.json under `out`; returns the manifest.
std::vector<ManifestEntry> export_chart_data(const MatchDataset& dataset, const std::filesystem::path& out);

}  // namespace courtside
