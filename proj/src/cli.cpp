#include "splatpiv/cli.hpp"

#include "splatpiv/error.hpp"
#include "splatpiv/export.hpp"
#include "splatpiv/metrics.hpp"
#include "splatpiv/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

namespace splatpiv::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

void write_batch(const ImagePairBatch& batch, const GeneratorConfig& cfg, const fs::path& dir,
                 std::vector<fs::path>& written) {
    const bool png = cfg.output.format == OutputFormat::png16;
    const std::string ext = png ? ".png" : ".raw";
    auto emit = [&](const fs::path& path, const Bytes& bytes) {
        try {
            write_file(path, bytes);
        } catch (const IoError&) {
            // Drop a partially written file, never something we did not create.
            std::error_code ec;
            if (fs::is_regular_file(path, ec)) fs::remove(path, ec);
            throw;
        }
        written.push_back(path);
    };
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::string stem = pair_stem(batch.batch_index, i);
        emit(dir / (stem + "_a" + ext), png ? encode_png16(batch.images1[i]) : encode_raw_f32(batch.images1[i]));
        emit(dir / (stem + "_b" + ext), png ? encode_png16(batch.images2[i]) : encode_raw_f32(batch.images2[i]));
        emit(dir / (stem + "_flow.flo"), write_flo(*batch.flow_fields[i]));
    }
    char name[32];
    std::snprintf(name, sizeof name, "params_%06llu.json", static_cast<unsigned long long>(batch.batch_index));
    const std::string text = params_sidecar(batch, cfg).dump(2) + "\n";
    emit(dir / name, Bytes(text.begin(), text.end()));
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * double(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<fs::path> flo_files(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: '" + dir.string() + "'");
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".flo") names.push_back(entry.path().filename());
    }
    std::sort(names.begin(), names.end());
    return names;
}

void require_same_files(const std::vector<fs::path>& a, const fs::path& a_dir, const std::vector<fs::path>& b,
                        const fs::path& b_dir) {
    std::vector<fs::path> only_a, only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    if (only_a.empty() && only_b.empty()) return;
    std::string msg = "flow file sets differ";
    for (const auto& n : only_a) msg += "\n  only in " + a_dir.string() + ": " + n.string();
    for (const auto& n : only_b) msg += "\n  only in " + b_dir.string() + ": " + n.string();
    throw IoError(msg);
}

std::vector<FlowField> load_all(const fs::path& dir, const std::vector<fs::path>& names) {
    std::vector<FlowField> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(load_flo(read_file(dir / n)));
    return out;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used != item.size() || item.empty()) throw CLI::ValidationError("--values", "not a number: '" + item + "'");
        values.push_back(v);
    }
    if (values.empty()) throw CLI::ValidationError("--values", "no values given");
    return values;
}

int integral_value(const std::string& axis, double value) {
    if (value != std::floor(value) || value < 1 || value > 1e9) {
        throw ConfigError(axis, "needs a positive integer value, got " + std::to_string(value));
    }
    return static_cast<int>(value);
}

}  // namespace

//---------------------------------------------------------------------------//

GenerateSummary cmd_generate(const GeneratorConfig& cfg, std::uint64_t batches, const fs::path& out_dir,
                             std::ostream& log) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw IoError("cannot create output directory '" + out_dir.string() + "'" + (ec ? ": " + ec.message() : ""));
    }

    Sampler sampler(cfg);
    GenerateSummary summary;
    std::size_t warnings_seen = 0;
    for (std::uint64_t b = 0; b < batches; ++b) {
        const ImagePairBatch batch = sampler.next_batch();
        std::vector<fs::path> written;
        try {
            write_batch(batch, cfg, out_dir, written);
        } catch (const IoError&) {
            for (const auto& p : written) fs::remove(p, ec);
            throw;
        }
        summary.batches += 1;
        summary.pairs += batch.size();
        summary.files += written.size();

        const auto warnings = sampler.warnings();
        for (; warnings_seen < warnings.size(); ++warnings_seen) log << "warning: " << warnings[warnings_seen] << "\n";
    }
    log << "generated " << summary.batches << " batches (" << summary.pairs << " pairs, " << summary.files
        << " files) in " << out_dir.string() << "\n";
    return summary;
}

std::vector<double> BenchReport::batch_throughputs() const {
    std::vector<double> out;
    out.reserve(batch_seconds.size());
    for (double s : batch_seconds) out.push_back(s > 0.0 ? batch_size / s : 0.0);
    return out;
}

BenchReport cmd_bench(const GeneratorConfig& cfg, std::size_t pairs_target, std::size_t warmup) {
    GeneratorConfig run_cfg = cfg;
    run_cfg.max_batches = 0;
    Sampler sampler(run_cfg);
    for (std::size_t i = 0; i < warmup; ++i) sampler.next_batch();

    const std::size_t per_batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t batches = std::max<std::size_t>(1, (pairs_target + per_batch - 1) / per_batch);

    BenchReport report;
    report.fingerprint = fingerprint(cfg);
    report.batch_size = cfg.batch_size;
    report.threads = cfg.resolved_threads();
    const auto start = Clock::now();
    for (std::size_t i = 0; i < batches; ++i) {
        const auto t0 = Clock::now();
        const ImagePairBatch batch = sampler.next_batch();
        report.batch_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        report.pairs_generated += batch.size();
    }
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report.throughput = report.wall_seconds > 0.0 ? double(report.pairs_generated) / report.wall_seconds : 0.0;
    return report;
}

void print_bench(const BenchReport& r, std::ostream& out) {
    out << std::fixed << std::setprecision(3);
    out << "pairs generated   " << r.pairs_generated << "\n"
        << "wall seconds      " << r.wall_seconds << "\n"
        << "pairs per second  " << r.throughput << "\n"
        << "batch size        " << r.batch_size << "\n"
        << "threads           " << r.threads << "\n"
        << "config            " << hex64(r.fingerprint) << "\n";
    out << std::defaultfloat << std::setprecision(9);
    out << "BENCH pairs_generated=" << r.pairs_generated << " wall_seconds=" << r.wall_seconds
        << " throughput=" << r.throughput << " batch_size=" << r.batch_size << " threads=" << r.threads
        << " batches=" << r.batch_seconds.size() << " fingerprint=" << hex64(r.fingerprint) << "\n";
    for (std::size_t i = 0; i < r.batch_seconds.size(); ++i) {
        out << "BATCH index=" << i << " seconds=" << r.batch_seconds[i]
            << " throughput=" << r.batch_throughputs()[i] << "\n";
    }
}

Summary summarize(std::vector<double> values) {
    Summary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    const double n = double(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    s.min = values.front();
    s.max = values.back();
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / n);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    return s;
}

GeneratorConfig apply_axis(GeneratorConfig cfg, const std::string& axis, double value) {
    if (axis == "image_size") {
        cfg.image_height = cfg.image_width = integral_value(axis, value);
    } else if (axis == "seeding_density") {
        cfg.seeding_density_range = {value, value};
    } else if (axis == "diameter_max") {
        cfg.diameter_range.max = value;
        cfg.diameter_range.min = std::min(cfg.diameter_range.min, value);
    } else if (axis == "batch_size") {
        cfg.batch_size = integral_value(axis, value);
    } else if (axis == "flow_fields_per_batch") {
        cfg.flow_fields_per_batch = integral_value(axis, value);
        if (cfg.prefetch_capacity != 0 && cfg.prefetch_capacity < cfg.flow_fields_per_batch) cfg.prefetch_capacity = 0;
    } else if (axis == "reuse_count") {
        cfg.batches_per_flow_field = integral_value(axis, value);
    } else if (axis == "threads") {
        cfg.threads = integral_value(axis, value);
    } else {
        throw CLI::ValidationError("--axis", "unknown axis '" + axis + "'");
    }
    validate(cfg);
    return cfg;
}

std::vector<AblationRow> cmd_ablate(const GeneratorConfig& cfg, const std::string& axis,
                                    const std::vector<double>& values, std::size_t pairs_target,
                                    std::size_t warmup, std::ostream* progress) {
    // Validate every point before spending time on any of them.
    std::vector<GeneratorConfig> points;
    for (double v : values) points.push_back(apply_axis(cfg, axis, v));

    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        AblationRow row;
        row.value = values[i];
        row.report = cmd_bench(points[i], pairs_target, warmup);
        row.throughput = summarize(row.report.batch_throughputs());
        if (progress) *progress << "  " << axis << "=" << values[i] << ": " << row.throughput.mean << " pairs/s\n";
        rows.push_back(std::move(row));
    }
    return rows;
}

void print_ablation(const std::string& axis, const std::vector<AblationRow>& rows, std::ostream& out) {
    out << std::left << std::setw(14) << axis << std::right;
    for (const char* h : {"mean", "min", "max", "std", "q1", "q3"}) out << std::setw(12) << h;
    out << "\n" << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        const auto& s = r.throughput;
        out << std::left << std::setw(14) << r.value << std::right << std::setw(12) << s.mean << std::setw(12) << s.min
            << std::setw(12) << s.max << std::setw(12) << s.stddev << std::setw(12) << s.q1 << std::setw(12) << s.q3
            << "\n";
    }
    out << std::defaultfloat << std::setprecision(9);
    for (const auto& r : rows) {
        const auto& s = r.throughput;
        out << "ABLATE axis=" << axis << " value=" << r.value << " mean=" << s.mean << " min=" << s.min
            << " max=" << s.max << " std=" << s.stddev << " q1=" << s.q1 << " q3=" << s.q3
            << " batches=" << r.report.batch_seconds.size() << "\n";
    }
}

ScoreResult cmd_score(const fs::path& est_dir, const fs::path& ref_dir, const std::optional<fs::path>& est2_dir) {
    const auto est_names = flo_files(est_dir);
    const auto ref_names = flo_files(ref_dir);
    require_same_files(est_names, est_dir, ref_names, ref_dir);
    if (est_names.empty()) throw IoError("no .flo files in '" + est_dir.string() + "'");

    const auto estimates = load_all(est_dir, est_names);
    const auto references = load_all(ref_dir, ref_names);

    ScoreResult result;
    result.files = est_names.size();
    result.epe = epe(estimates, references);
    for (std::size_t i = 0; i < estimates.size(); ++i) result.l1 += l1_error(estimates[i], references[i]);
    result.l1 /= double(estimates.size());

    if (est2_dir) {
        const auto est2_names = flo_files(*est2_dir);
        require_same_files(est2_names, *est2_dir, ref_names, ref_dir);
        const auto estimates2 = load_all(*est2_dir, est2_names);
        result.epe2 = epe(estimates2, references);
        result.relative_discrepancy = relative_discrepancy(estimates, estimates2, references);
    }
    return result;
}

void print_score(const ScoreResult& r, std::ostream& out) {
    out << std::setprecision(12);
    out << "files " << r.files << "\nEPE   " << r.epe << "\nL1    " << r.l1 << "\n";
    if (r.epe2) out << "EPE2  " << *r.epe2 << "\nrelative discrepancy " << *r.relative_discrepancy << "\n";
    out << "SCORE files=" << r.files << " epe=" << r.epe << " l1=" << r.l1;
    if (r.epe2) out << " epe2=" << *r.epe2 << " relative_discrepancy=" << *r.relative_discrepancy;
    out << "\n";
}

//---------------------------------------------------------------------------//

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic PIV image-pair generator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;

    auto* gen = app.add_subcommand("generate", "render batches to disk");
    std::uint64_t batches = 1;
    std::string out_dir;
    gen->add_option("--config", config_path, "configuration file")->required();
    gen->add_option("--batches", batches, "number of batches")->check(CLI::PositiveNumber);
    gen->add_option("--out", out_dir, "output directory (overrides output.directory)");
    gen->add_option("--threads", threads, "worker threads (overrides config)")->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", seed, "seed (overrides config)");

    auto* bench = app.add_subcommand("bench", "measure throughput");
    std::size_t pairs = 256;
    std::size_t warmup = 3;
    bench->add_option("--config", config_path, "configuration file (default: baseline)");
    bench->add_option("--pairs", pairs, "timed pairs (rounded up to whole batches)");
    bench->add_option("--warmup", warmup, "untimed warm-up batches");
    bench->add_option("--threads", threads, "worker threads (overrides config)")->check(CLI::NonNegativeNumber);

    auto* ablate = app.add_subcommand("ablate", "throughput sweep over one parameter");
    std::string axis;
    std::string values_text;
    ablate->add_option("--config", config_path, "configuration file (default: baseline)");
    ablate->add_option("--axis", axis, "parameter to sweep")->required()->check(CLI::IsMember(kAblationAxes));
    ablate->add_option("--values", values_text, "comma-separated values")->required();
    ablate->add_option("--pairs", pairs, "timed pairs per value");
    ablate->add_option("--warmup", warmup, "untimed warm-up batches per value");
    ablate->add_option("--threads", threads, "worker threads (overrides config)")->check(CLI::NonNegativeNumber);

    auto* score = app.add_subcommand("score", "EPE of estimated flows against references");
    std::string est, ref, est2;
    score->add_option("--est", est, "directory of estimated .flo files")->required();
    score->add_option("--ref", ref, "directory of reference .flo files")->required();
    score->add_option("--est2", est2, "second estimate directory for the relative discrepancy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    auto load = [&] {
        GeneratorConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (threads) cfg.threads = *threads;
        if (seed) cfg.seed = *seed;
        validate(cfg);
        return cfg;
    };

    try {
        if (gen->parsed()) {
            const GeneratorConfig cfg = load();
            cmd_generate(cfg, batches, out_dir.empty() ? fs::path(cfg.output.directory) : fs::path(out_dir), out);
        } else if (bench->parsed()) {
            print_bench(cmd_bench(load(), pairs, warmup), out);
        } else if (ablate->parsed()) {
            const auto values = parse_values(values_text);
            const auto rows = cmd_ablate(load(), axis, values, pairs, warmup, &err);
            print_ablation(axis, rows, out);
        } else if (score->parsed()) {
            print_score(cmd_score(est, ref, est2.empty() ? std::nullopt : std::optional<fs::path>(est2)), out);
        }
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const MetricError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const GenerationError& e) {
        err << "error: " << e.what() << "\n";
        return kGeneration;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kGeneration;
    }
    return kOk;
}

}  // namespace splatpiv::cli
