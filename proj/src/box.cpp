#include "cptrl/box.hpp"

#include <algorithm>
#include <cmath>

#include "cptrl/errors.hpp"

namespace cptrl {

BoxConstraint::BoxConstraint(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.empty() || lo_.size() != hi_.size()) {
        throw InvalidSpecError("box bounds must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        if (!(std::isfinite(lo_[i]) && std::isfinite(hi_[i]) && lo_[i] < hi_[i])) {
            throw InvalidSpecError("box requires finite lo < hi in every coordinate");
        }
    }
}

BoxConstraint BoxConstraint::uniform(std::size_t dimension, double lo, double hi) {
    return BoxConstraint(std::vector<double>(dimension, lo), std::vector<double>(dimension, hi));
}

bool BoxConstraint::contains(std::span<const double> theta) const {
    if (theta.size() != dimension()) {
        return false;
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!(theta[i] >= lo_[i] && theta[i] <= hi_[i])) {
            return false;
        }
    }
    return true;
}

std::vector<double> project_box(std::span<const double> theta, const BoxConstraint& box) {
    if (theta.size() != box.dimension()) {
        throw DomainError("parameter and box dimensions differ");
    }
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (std::isnan(theta[i])) {
            throw DomainError("cannot project a NaN parameter");
        }
        out[i] = std::clamp(theta[i], box.lo()[i], box.hi()[i]);
    }
    return out;
}

}  // namespace cptrl
