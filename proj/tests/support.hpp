#pragma once

#include "splatpiv/config.hpp"
#include "splatpiv/flowfield.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

namespace splatpiv::test {

/// Scratch directory removed on scope exit.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("splatpiv_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

template <typename T>
void put_le(Bytes& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

/// .flo blob written field by field from the format description.
inline Bytes flo_blob(int width, int height, const std::vector<float>& interleaved_uv) {
    Bytes out;
    put_le<float>(out, 202021.25f);
    put_le<std::int32_t>(out, width);
    put_le<std::int32_t>(out, height);
    for (float x : interleaved_uv) put_le<float>(out, x);
    return out;
}

/// Version 1.0 .npy container around a rows x cols little-endian array.
inline Bytes npy_blob(const std::vector<std::vector<double>>& rows, bool float64 = false, int major = 1) {
    const std::size_t cols = rows.empty() ? 4 : rows.front().size();
    std::string dict = std::string("{'descr': '") + (float64 ? "<f8" : "<f4") +
                       "', 'fortran_order': False, 'shape': (" + std::to_string(rows.size()) + ", " +
                       std::to_string(cols) + "), }";
    const std::size_t prefix = major == 1 ? 10 : 12;
    while ((prefix + dict.size() + 1) % 64 != 0) dict += ' ';
    dict += '\n';

    Bytes out = {0x93, 'N', 'U', 'M', 'P', 'Y', std::uint8_t(major), 0};
    if (major == 1) {
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(dict.size()));
    } else {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dict.size()));
    }
    out.insert(out.end(), dict.begin(), dict.end());
    for (const auto& row : rows) {
        for (double x : row) {
            if (float64) {
                put_le<double>(out, x);
            } else {
                put_le<float>(out, static_cast<float>(x));
            }
        }
    }
    return out;
}

/// Small, fast configuration driven by one analytic flow.
inline GeneratorConfig small_config(int size = 32, int batch = 4) {
    GeneratorConfig cfg = default_config();
    cfg.image_height = cfg.image_width = size;
    cfg.batch_size = batch;
    cfg.threads = 1;
    cfg.flow_sources = {FlowSource{FlowFormat::function, "", "constant", {1.5, -0.5}}};
    return cfg;
}

}  // namespace splatpiv::test
