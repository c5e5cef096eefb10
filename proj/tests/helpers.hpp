// Shared test scaffolding: deterministic random builders, temp dirs, float
// comparisons, and a tiny subprocess runner for CLI tests. Reference math
// lives in oracles.hpp, not here.
#pragma once

#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "srg/graph.hpp"
#include "srg/volume.hpp"

namespace tu {

// --- randomness ---------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(g_);
    }
    std::uint32_t uniform_u32(std::uint32_t lo, std::uint32_t hi) {
        return std::uniform_int_distribution<std::uint32_t>(lo, hi)(g_);
    }
    std::uint64_t raw() { return g_(); }

private:
    std::mt19937_64 g_;
};

inline srg::ScalarVolume random_scalar(Rng& rng, srg::Dims dims, srg::Spacing spacing,
                                       double lo, double hi) {
    std::vector<double> data(dims.voxel_count());
    for (double& v : data)
        v = rng.uniform(lo, hi);
    return {dims, spacing, std::move(data)};
}

/// Every voxel labeled 1..n_regions, every region guaranteed non-empty.
inline srg::LabelVolume random_covering_labels(Rng& rng, srg::Dims dims, srg::Spacing spacing,
                                               std::uint32_t n_regions) {
    std::vector<std::uint32_t> data(dims.voxel_count());
    for (std::uint32_t& v : data)
        v = rng.uniform_u32(1, n_regions);
    for (std::uint32_t r = 0; r < n_regions && r < data.size(); ++r)
        data[r] = r + 1;
    return {dims, spacing, std::move(data)};
}

/// Synthetic model statistics; internally consistent enough for evaluation
/// (positive ratio means, finite everything), not derived from any volume.
inline srg::ModelStatistics random_model(Rng& rng, std::size_t n) {
    srg::ModelStatistics m;
    m.sample_count = 3;
    m.vertices.resize(n);
    m.edges.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = m.vertices[i];
        v.centroid_mean = {rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0, 50)};
        v.centroid_stddev = {rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
        v.intensity_mean = rng.uniform(-20, 120);
        v.intensity_stddev = rng.uniform(0, 5);
        v.volume_mean = rng.uniform(5, 2000);
        v.volume_stddev = rng.uniform(0, 100);
        m.vertex_labels.push_back(static_cast<std::uint32_t>(i + 1));
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            auto& e = m.edges[i * n + j];
            e.dvec_mean = {rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-40, 40)};
            e.dvec_stddev = {rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 3)};
            e.vratio_mean = rng.uniform(0.1, 10.0);
            e.log_vratio_stddev = rng.uniform(0, 1);
            e.contrast_mean = rng.uniform(-50, 50);
            e.contrast_stddev = rng.uniform(0, 5);
        }
    return m;
}

// --- comparisons ----------------------------------------------------------------

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
    const double diff = std::fabs(a - b);
    if (diff <= abs_floor)
        return true;
    return diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

inline bool close_vec(const srg::Vec3& a, const srg::Vec3& b, double rel,
                      double abs_floor = 0.0) {
    return close_rel(a.x, b.x, rel, abs_floor) && close_rel(a.y, b.y, rel, abs_floor) &&
           close_rel(a.z, b.z, rel, abs_floor);
}

// --- filesystem -----------------------------------------------------------------

/// Unique per-use directory under the system temp root, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("srgtest-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& leaf) const {
        return path_ / leaf;
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

// --- subprocess -----------------------------------------------------------------

#ifdef SRG_CLI_PATH

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

/// Runs the built CLI with the given pre-tokenized arguments.
inline CliResult run_cli(const std::vector<std::string>& args) {
    std::string cmd = "'";
    cmd += SRG_CLI_PATH;
    cmd += "'";
    for (const auto& a : args)
        cmd += " '" + a + "'";
    cmd += " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    CliResult result;
    if (!pipe)
        return result;
    char buf[4096];
    std::size_t got = 0;
    while ((got = ::fread(buf, 1, sizeof buf, pipe)) > 0)
        result.output.append(buf, got);
    const int status = ::pclose(pipe);
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    return result;
}

#endif  // SRG_CLI_PATH

}  // namespace tu
