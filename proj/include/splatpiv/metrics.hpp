#pragma once

#include "splatpiv/flowfield.hpp"

#include <span>

namespace splatpiv {

struct FlowError {
    double epe = 0.0;
    double l1 = 0.0;
};

/// Mean over images of sqrt(sum over pixels of |u - v|^2) / (H * W).
///
/// The per-image term divides the root-sum-square by the pixel count,
/// not by its square root, so it is not the per-pixel mean EPE.
double epe(std::span<const FlowField> estimates, std::span<const FlowField> references);

/// Mean absolute component error over pixels and both components.
double l1_error(const FlowField& estimate, const FlowField& reference);

/// Both metrics for one pair of fields.
FlowError flow_error(const FlowField& estimate, const FlowField& reference);

/// |EPE(u1, ref) - EPE(u2, ref)| / mean_i l1_error(u1_i, ref_i).
double relative_discrepancy(std::span<const FlowField> u1, std::span<const FlowField> u2,
                            std::span<const FlowField> reference);

}  // namespace splatpiv
