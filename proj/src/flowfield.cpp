#include "splatpiv/flowfield.hpp"

#include "splatpiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace splatpiv {

FlowField from_function(const FlowFunction& f, int height, int width) {
    if (height <= 0 || width <= 0) {
        throw FormatError(FormatError::Kind::bad_dimensions, "function field: non-positive dimensions");
    }
    FlowField field(height, width);
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            const Vec2 d = f(double(i), double(j));
            const auto k = field.index(j, i);
            field.u[k] = static_cast<float>(d.x);
            field.v[k] = static_cast<float>(d.y);
            if (!std::isfinite(field.u[k]) || !std::isfinite(field.v[k])) {
                throw FormatError(FormatError::Kind::non_finite,
                                  "function field: non-finite value at (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            }
        }
    }
    return field;
}

FlowFunction named_function(const std::string& name, const std::vector<double>& p, int height,
                            int width) {
    auto need = [&](std::size_t n) {
        if (p.size() != n) {
            throw ConfigError("flow_sources.params", "function '" + name + "' takes " +
                                                         std::to_string(n) + " parameters, got " +
                                                         std::to_string(p.size()));
        }
    };
    const double cx = 0.5 * (width - 1);
    const double cy = 0.5 * (height - 1);

    if (name == "constant") {
        need(2);
        return [u = p[0], v = p[1]](double, double) { return Vec2{u, v}; };
    }
    if (name == "linear") {
        need(6);
        return [p](double x, double y) {
            return Vec2{p[0] + p[1] * x + p[2] * y, p[3] + p[4] * x + p[5] * y};
        };
    }
    if (name == "rotation") {
        need(1);
        return [w = p[0], cx, cy](double x, double y) { return Vec2{-w * (y - cy), w * (x - cx)}; };
    }
    if (name == "shear") {
        need(1);
        return [r = p[0], cy](double, double y) { return Vec2{r * (y - cy), 0.0}; };
    }
    if (name == "taylor_green") {
        need(2);
        const double amp = p[0];
        if (!(p[1] > 0.0)) throw ConfigError("flow_sources.params", "taylor_green wavelength must be positive");
        const double k = 2.0 * std::numbers::pi / p[1];
        return [amp, k](double x, double y) {
            return Vec2{amp * std::sin(k * x) * std::cos(k * y), -amp * std::cos(k * x) * std::sin(k * y)};
        };
    }
    throw ConfigError("flow_sources.function", "unknown function '" + name +
                                                   "' (constant, linear, rotation, shear, taylor_green)");
}

Vec2 sample_flow(const FlowField& field, Vec2 position) {
    const double x = std::clamp(position.x, 0.0, double(field.width - 1));
    const double y = std::clamp(position.y, 0.0, double(field.height - 1));
    const int i0 = static_cast<int>(x);
    const int j0 = static_cast<int>(y);
    const int i1 = std::min(i0 + 1, field.width - 1);
    const int j1 = std::min(j0 + 1, field.height - 1);
    const double fx = x - i0;
    const double fy = y - j0;

    auto lerp2 = [&](const std::vector<float>& g) {
        const double top = (1.0 - fx) * g[field.index(j0, i0)] + fx * g[field.index(j0, i1)];
        const double bottom = (1.0 - fx) * g[field.index(j1, i0)] + fx * g[field.index(j1, i1)];
        return (1.0 - fy) * top + fy * bottom;
    };
    return {lerp2(field.u), lerp2(field.v)};
}

std::vector<Vec2> sample_flow(const FlowField& field, std::span<const Vec2> positions) {
    std::vector<Vec2> out;
    out.reserve(positions.size());
    for (const Vec2& p : positions) out.push_back(sample_flow(field, p));
    return out;
}

FlowField resample_to(const FlowField& field, int height, int width) {
    if (field.height == height && field.width == width) return field;
    FlowField out(height, width);
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            const Vec2 d = sample_flow(field, {double(i), double(j)});
            out.u[out.index(j, i)] = static_cast<float>(d.x);
            out.v[out.index(j, i)] = static_cast<float>(d.y);
        }
    }
    return out;
}

FlowField load_source(const FlowSource& source, int height, int width) {
    FlowField field;
    switch (source.format) {
        case FlowFormat::flo: field = load_flo(read_file(source.path)); break;
        case FlowFormat::npy: field = load_npy_xyuv(read_file(source.path)); break;
        case FlowFormat::hdf5: field = load_hdf5(source.path, source.u_dataset, source.v_dataset); break;
        case FlowFormat::function:
            field = from_function(named_function(source.function, source.params, height, width), height, width);
            break;
    }
    field = resample_to(field, height, width);
    if (source.scale != 1.0) {
        for (std::size_t k = 0; k < field.size(); ++k) {
            field.u[k] = static_cast<float>(field.u[k] * source.scale);
            field.v[k] = static_cast<float>(field.v[k] * source.scale);
            if (!std::isfinite(field.u[k]) || !std::isfinite(field.v[k])) {
                throw FormatError(FormatError::Kind::non_finite, "scaled flow overflows float32");
            }
        }
    }
    return field;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return data;
}

void write_file(const std::filesystem::path& path, ByteView bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace splatpiv
