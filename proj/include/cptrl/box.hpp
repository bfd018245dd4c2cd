#pragma once

#include <span>
#include <vector>

namespace cptrl {

/// Axis-aligned box lo <= theta <= hi, the compact convex parameter set.
class BoxConstraint {
public:
    BoxConstraint(std::vector<double> lo, std::vector<double> hi);
    static BoxConstraint uniform(std::size_t dimension, double lo, double hi);

    std::size_t dimension() const noexcept { return lo_.size(); }
    const std::vector<double>& lo() const noexcept { return lo_; }
    const std::vector<double>& hi() const noexcept { return hi_; }

    bool contains(std::span<const double> theta) const;

private:
    std::vector<double> lo_;
    std::vector<double> hi_;
};

/// Component-wise clamp onto the box.
std::vector<double> project_box(std::span<const double> theta, const BoxConstraint& box);

}  // namespace cptrl
