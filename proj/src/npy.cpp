#include "splatpiv/error.hpp"
#include "splatpiv/flowfield.hpp"

#include "byte_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string_view>

namespace splatpiv {

namespace {

using Kind = FormatError::Kind;

[[noreturn]] void bad_header(const std::string& what) {
    throw FormatError(Kind::bad_header, ".npy: " + what);
}

struct NpyHeader {
    bool float64 = false;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
    std::size_t data_offset = 0;
};

/// Value text following `'key':` in the header dict, up to the next top-level comma.
std::string_view dict_value(std::string_view dict, std::string_view key) {
    const std::string quoted_single = "'" + std::string(key) + "'";
    const std::string quoted_double = "\"" + std::string(key) + "\"";
    auto pos = dict.find(quoted_single);
    std::size_t key_len = quoted_single.size();
    if (pos == std::string_view::npos) {
        pos = dict.find(quoted_double);
        key_len = quoted_double.size();
    }
    if (pos == std::string_view::npos) bad_header("header lacks '" + std::string(key) + "'");
    pos = dict.find(':', pos + key_len);
    if (pos == std::string_view::npos) bad_header("malformed header dict");
    ++pos;
    while (pos < dict.size() && std::isspace(static_cast<unsigned char>(dict[pos]))) ++pos;

    std::size_t end = pos;
    int depth = 0;
    for (; end < dict.size(); ++end) {
        const char c = dict[end];
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if ((c == ',' || c == '}') && depth == 0) break;
    }
    auto value = dict.substr(pos, end - pos);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) {
        value.remove_suffix(1);
    }
    return value;
}

NpyHeader parse_header(ByteView blob) {
    static constexpr std::uint8_t kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
    if (blob.size() < 10 || !std::equal(std::begin(kMagic), std::end(kMagic), blob.begin())) {
        bad_header("missing magic string");
    }
    const int major = blob[6];
    std::size_t header_len = 0;
    std::size_t prefix = 0;
    if (major == 1) {
        header_len = bytes::read_le<std::uint16_t>(blob.data() + 8);
        prefix = 10;
    } else if (major == 2 || major == 3) {
        if (blob.size() < 12) bad_header("truncated preamble");
        header_len = bytes::read_le<std::uint32_t>(blob.data() + 8);
        prefix = 12;
    } else {
        bad_header("unsupported version " + std::to_string(major));
    }
    if (blob.size() < prefix + header_len) bad_header("truncated header");

    const std::string_view dict(reinterpret_cast<const char*>(blob.data() + prefix), header_len);
    NpyHeader h;
    h.data_offset = prefix + header_len;

    const auto descr = dict_value(dict, "descr");
    if (descr == "'<f4'" || descr == "\"<f4\"") {
        h.float64 = false;
    } else if (descr == "'<f8'" || descr == "\"<f8\"") {
        h.float64 = true;
    } else {
        bad_header("unsupported dtype " + std::string(descr) + " (need little-endian float32/float64)");
    }

    const auto order = dict_value(dict, "fortran_order");
    if (order == "True") {
        h.fortran_order = true;
    } else if (order != "False") {
        bad_header("bad fortran_order value");
    }

    auto shape = dict_value(dict, "shape");
    if (shape.size() < 2 || shape.front() != '(' || shape.back() != ')') bad_header("bad shape tuple");
    shape = shape.substr(1, shape.size() - 2);
    std::size_t pos = 0;
    while (pos < shape.size()) {
        while (pos < shape.size() && (std::isspace(static_cast<unsigned char>(shape[pos])) || shape[pos] == ',')) ++pos;
        if (pos >= shape.size()) break;
        std::size_t value = 0;
        bool any = false;
        while (pos < shape.size() && std::isdigit(static_cast<unsigned char>(shape[pos]))) {
            value = value * 10 + static_cast<std::size_t>(shape[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) bad_header("bad shape tuple");
        h.shape.push_back(value);
    }
    return h;
}

struct Axis {
    double origin = 0.0;
    double step = 1.0;
    std::size_t count = 0;
    double tolerance = 0.0;
};

/// Distinct lattice coordinates of one column, with a 1e-6 relative tolerance.
Axis fit_axis(std::vector<double> values, const char* name) {
    std::sort(values.begin(), values.end());
    const double scale = std::max({std::abs(values.front()), std::abs(values.back()), 1e-30});
    const double tol = 1e-6 * scale;

    std::vector<double> distinct{values.front()};
    for (double x : values) {
        if (x - distinct.back() > tol) distinct.push_back(x);
    }

    Axis axis;
    axis.origin = distinct.front();
    axis.count = distinct.size();
    axis.tolerance = tol;
    if (axis.count > 1) {
        axis.step = (distinct.back() - distinct.front()) / double(axis.count - 1);
        for (std::size_t k = 0; k < distinct.size(); ++k) {
            const double ideal = axis.origin + double(k) * axis.step;
            if (std::abs(distinct[k] - ideal) > std::max(tol, 1e-6 * axis.step)) {
                throw FormatError(Kind::non_uniform_spacing,
                                  std::string(".npy: non-uniform ") + name + " spacing");
            }
        }
    }
    return axis;
}

std::size_t lattice_index(const Axis& axis, double value) {
    if (axis.count == 1) return 0;
    return static_cast<std::size_t>(std::llround((value - axis.origin) / axis.step));
}

}  // namespace

FlowField load_npy_xyuv(ByteView blob) {
    const NpyHeader header = parse_header(blob);
    if (header.shape.size() != 2) {
        throw FormatError(Kind::column_count, ".npy: expected a 2-D N x 4 array");
    }
    if (header.shape[1] != 4) {
        throw FormatError(Kind::column_count, ".npy: expected 4 columns (x, y, u, v), got " +
                                                  std::to_string(header.shape[1]));
    }
    const std::size_t rows = header.shape[0];
    if (rows == 0) throw FormatError(Kind::incomplete_grid, ".npy: empty array");

    const std::size_t item = header.float64 ? 8 : 4;
    if (blob.size() < header.data_offset + rows * 4 * item) {
        throw FormatError(Kind::truncated, ".npy: truncated data");
    }
    const std::uint8_t* data = blob.data() + header.data_offset;
    auto at = [&](std::size_t r, std::size_t c) {
        const std::size_t k = header.fortran_order ? c * rows + r : r * 4 + c;
        return header.float64 ? bytes::read_le<double>(data + k * 8)
                              : static_cast<double>(bytes::read_le<float>(data + k * 4));
    };

    std::vector<double> xs(rows), ys(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            if (!std::isfinite(at(r, c))) {
                throw FormatError(Kind::non_finite, ".npy: non-finite value in row " + std::to_string(r));
            }
        }
        xs[r] = at(r, 0);
        ys[r] = at(r, 1);
    }

    const Axis ax = fit_axis(xs, "x");
    const Axis ay = fit_axis(ys, "y");
    if (ax.count * ay.count != rows) {
        throw FormatError(Kind::incomplete_grid,
                          ".npy: " + std::to_string(rows) + " rows do not fill a " +
                              std::to_string(ay.count) + "x" + std::to_string(ax.count) + " grid");
    }
    if (ax.count > std::size_t(INT32_MAX) || ay.count > std::size_t(INT32_MAX)) {
        throw FormatError(Kind::bad_dimensions, ".npy: grid too large");
    }

    FlowField field(static_cast<int>(ay.count), static_cast<int>(ax.count));
    std::vector<bool> filled(rows, false);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t i = lattice_index(ax, xs[r]);
        const std::size_t j = lattice_index(ay, ys[r]);
        const std::size_t k = j * ax.count + i;
        if (i >= ax.count || j >= ay.count || filled[k]) {
            throw FormatError(Kind::incomplete_grid, ".npy: duplicate grid cell in row " + std::to_string(r));
        }
        filled[k] = true;
        field.u[k] = static_cast<float>(at(r, 2));
        field.v[k] = static_cast<float>(at(r, 3));
        if (!std::isfinite(field.u[k]) || !std::isfinite(field.v[k])) {
            throw FormatError(Kind::non_finite, ".npy: value overflows float32 in row " + std::to_string(r));
        }
    }
    return field;
}

}  // namespace splatpiv
