#include "splatpiv/error.hpp"
#include "splatpiv/flowfield.hpp"

#include <hdf5.h>

#include <cmath>
#include <mutex>

namespace splatpiv {

namespace {

using Kind = FormatError::Kind;

/// Closes an HDF5 identifier on scope exit.
class Handle {
  public:
    using Closer = herr_t (*)(hid_t);

    Handle(hid_t id, Closer closer) : id_(id), closer_(closer) {}
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() {
        if (id_ >= 0) closer_(id_);
    }

    hid_t get() const noexcept { return id_; }
    bool valid() const noexcept { return id_ >= 0; }

  private:
    hid_t id_;
    Closer closer_;
};

struct Dataset {
    hsize_t rows = 0;
    hsize_t cols = 0;
    std::vector<float> values;
};

Dataset read_dataset(hid_t file, const std::string& name) {
    if (H5Lexists(file, name.c_str(), H5P_DEFAULT) <= 0) {
        throw FormatError(Kind::missing_dataset, "hdf5: missing dataset '" + name + "'");
    }
    Handle dset(H5Dopen2(file, name.c_str(), H5P_DEFAULT), H5Dclose);
    if (!dset.valid()) throw FormatError(Kind::missing_dataset, "hdf5: '" + name + "' is not a dataset");

    Handle space(H5Dget_space(dset.get()), H5Sclose);
    const int rank = H5Sget_simple_extent_ndims(space.get());
    if (rank != 2) {
        throw FormatError(Kind::bad_rank,
                          "hdf5: dataset '" + name + "' has rank " + std::to_string(rank) + ", need 2");
    }
    hsize_t dims[2] = {0, 0};
    H5Sget_simple_extent_dims(space.get(), dims, nullptr);

    Dataset out;
    out.rows = dims[0];
    out.cols = dims[1];
    out.values.resize(std::size_t(dims[0] * dims[1]));
    if (!out.values.empty() &&
        H5Dread(dset.get(), H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.values.data()) < 0) {
        throw FormatError(Kind::bad_header, "hdf5: cannot read dataset '" + name + "' as float");
    }
    return out;
}

}  // namespace

FlowField load_hdf5(const std::filesystem::path& path, const std::string& u_dataset,
                    const std::string& v_dataset) {
    // The serial HDF5 build is not thread-safe.
    static std::mutex hdf5_mutex;
    const std::lock_guard lock(hdf5_mutex);

    H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
    if (!std::filesystem::exists(path)) throw IoError("hdf5: no such file '" + path.string() + "'");
    Handle file(H5Fopen(path.string().c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
    if (!file.valid()) throw IoError("hdf5: cannot open '" + path.string() + "'");

    Dataset u = read_dataset(file.get(), u_dataset);
    Dataset v = read_dataset(file.get(), v_dataset);
    if (u.rows != v.rows || u.cols != v.cols) {
        throw FormatError(Kind::shape_mismatch,
                          "hdf5: shape mismatch " + std::to_string(u.rows) + "x" + std::to_string(u.cols) +
                              " vs " + std::to_string(v.rows) + "x" + std::to_string(v.cols));
    }
    if (u.rows == 0 || u.cols == 0 || u.rows > INT32_MAX || u.cols > INT32_MAX) {
        throw FormatError(Kind::bad_dimensions, "hdf5: unusable dataset shape");
    }

    FlowField field;
    field.height = static_cast<int>(u.rows);
    field.width = static_cast<int>(u.cols);
    field.u = std::move(u.values);
    field.v = std::move(v.values);
    for (std::size_t k = 0; k < field.size(); ++k) {
        if (!std::isfinite(field.u[k]) || !std::isfinite(field.v[k])) {
            throw FormatError(Kind::non_finite, "hdf5: non-finite value at cell " + std::to_string(k));
        }
    }
    return field;
}

}  // namespace splatpiv
