#pragma once

#include "splatpiv/config.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace splatpiv::cli {

/// Process exit codes; stable across versions.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConfig = 2,
    kIo = 3,
    kGeneration = 4,
};

struct GenerateSummary {
    std::uint64_t batches = 0;
    std::uint64_t pairs = 0;
    std::uint64_t files = 0;
};

/// Write `batches` batches of images, .flo ground truth and a params sidecar per batch.
/// A batch that fails to write is removed before the IoError propagates.
GenerateSummary cmd_generate(const GeneratorConfig& cfg, std::uint64_t batches,
                             const std::filesystem::path& out_dir, std::ostream& log);

struct BenchReport {
    std::size_t pairs_generated = 0;
    double wall_seconds = 0.0;
    double throughput = 0.0;
    std::uint64_t fingerprint = 0;
    int batch_size = 0;
    int threads = 0;
    std::vector<double> batch_seconds;

    std::vector<double> batch_throughputs() const;
};

/// Run `warmup` untimed batches, then time enough batches to reach `pairs_target` pairs.
BenchReport cmd_bench(const GeneratorConfig& cfg, std::size_t pairs_target, std::size_t warmup);
void print_bench(const BenchReport& report, std::ostream& out);

struct Summary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double stddev = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

/// Population statistics with linearly interpolated quartiles.
Summary summarize(std::vector<double> values);

struct AblationRow {
    double value = 0.0;
    Summary throughput;
    BenchReport report;
};

inline const std::vector<std::string> kAblationAxes = {
    "image_size", "seeding_density", "diameter_max", "batch_size", "flow_fields_per_batch", "reuse_count", "threads",
};

/// Copy of `cfg` with one axis set to `value`; throws ConfigError for invalid values.
GeneratorConfig apply_axis(GeneratorConfig cfg, const std::string& axis, double value);

std::vector<AblationRow> cmd_ablate(const GeneratorConfig& cfg, const std::string& axis,
                                    const std::vector<double>& values, std::size_t pairs_target,
                                    std::size_t warmup, std::ostream* progress = nullptr);
void print_ablation(const std::string& axis, const std::vector<AblationRow>& rows, std::ostream& out);

struct ScoreResult {
    std::size_t files = 0;
    double epe = 0.0;
    double l1 = 0.0;
    std::optional<double> epe2;
    std::optional<double> relative_discrepancy;
};

/// Score the .flo files of `est_dir` against same-named files in `ref_dir`.
ScoreResult cmd_score(const std::filesystem::path& est_dir, const std::filesystem::path& ref_dir,
                      const std::optional<std::filesystem::path>& est2_dir);
void print_score(const ScoreResult& result, std::ostream& out);

/// Full command-line entry point; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace splatpiv::cli
