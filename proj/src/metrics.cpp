#include "splatpiv/metrics.hpp"

#include "splatpiv/error.hpp"

#include <cmath>

namespace splatpiv {

namespace {

void check_shapes(const FlowField& a, const FlowField& b) {
    if (a.height != b.height || a.width != b.width) {
        throw MetricError("shape mismatch: " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                          " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
    }
}

void check_lists(std::span<const FlowField> a, std::span<const FlowField> b) {
    if (a.empty() || b.empty()) throw MetricError("empty flow list");
    if (a.size() != b.size()) {
        throw MetricError("list length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

double image_epe(const FlowField& a, const FlowField& b) {
    check_shapes(a, b);
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double du = double(a.u[k]) - double(b.u[k]);
        const double dv = double(a.v[k]) - double(b.v[k]);
        sum += du * du + dv * dv;
    }
    return std::sqrt(sum) / static_cast<double>(a.size());
}

}  // namespace

double epe(std::span<const FlowField> estimates, std::span<const FlowField> references) {
    check_lists(estimates, references);
    double total = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) total += image_epe(estimates[i], references[i]);
    return total / static_cast<double>(estimates.size());
}

double l1_error(const FlowField& estimate, const FlowField& reference) {
    check_shapes(estimate, reference);
    double sum = 0.0;
    for (std::size_t k = 0; k < estimate.size(); ++k) {
        sum += std::abs(double(estimate.u[k]) - double(reference.u[k]));
        sum += std::abs(double(estimate.v[k]) - double(reference.v[k]));
    }
    return sum / (2.0 * static_cast<double>(estimate.size()));
}

FlowError flow_error(const FlowField& estimate, const FlowField& reference) {
    return {image_epe(estimate, reference), l1_error(estimate, reference)};
}

double relative_discrepancy(std::span<const FlowField> u1, std::span<const FlowField> u2,
                            std::span<const FlowField> reference) {
    check_lists(u1, reference);
    check_lists(u2, reference);
    double l1 = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i) l1 += l1_error(u1[i], reference[i]);
    l1 /= static_cast<double>(u1.size());
    if (l1 == 0.0) throw MetricError("relative discrepancy undefined: first estimate equals the reference");
    return std::abs(epe(u1, reference) - epe(u2, reference)) / l1;
}

}  // namespace splatpiv
