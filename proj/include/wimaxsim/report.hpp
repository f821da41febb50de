#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wimaxsim/simulation.hpp"

namespace wimaxsim {

// Long-format time series: time_s,entity,metric,value
void write_metrics_csv(const RunReport& run, std::ostream& out);
// entity,metric,value
void write_summary_csv(const RunReport& run, std::ostream& out);
// frame,direction,capacity_bytes,entity,kind,granted_bytes,used_bytes
void write_frames_csv(const RunReport& run, std::ostream& out);

struct OutputPaths
{
    std::filesystem::path metrics;
    std::filesystem::path summary;
    std::filesystem::path frames;
    std::filesystem::path config;

    static OutputPaths in(const std::filesystem::path& dir);
};

// Creates the directory and checks it is writable. Throws std::runtime_error.
void prepare_output_dir(const std::filesystem::path& dir);

void write_run(const RunReport& run, const OutputPaths& paths, bool with_frames);

// Summary numbers that several tools need.
struct RunDigest
{
    double voice_mean_delay_ms = 0.0;
    double voice_mos_mean = 0.0;
    Bytes be_uplink_delivered_bytes = 0;
    bool ugs_under_provisioned = false;
};

RunDigest digest(const RunReport& run);

struct ComparisonRow
{
    double time_s = 0.0;
    std::string entity;
    std::string metric;
    double a = 0.0;
    double b = 0.0;
    double delta = 0.0;  // b - a
};

struct SummaryDelta
{
    std::string entity;
    std::string metric;
    std::string a;
    std::string b;
    std::optional<double> delta;
};

struct Comparison
{
    std::vector<std::string> warnings;
    double common_horizon_s = 0.0;
    std::vector<ComparisonRow> series;
    std::vector<SummaryDelta> summary;
};

// Aligns two run directories on (time, entity, metric). Throws
// std::runtime_error when a directory lacks its output files.
Comparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

void write_comparison_csv(const Comparison& cmp, std::ostream& out);
void write_comparison_summary(const Comparison& cmp, std::ostream& out);

} // namespace wimaxsim
