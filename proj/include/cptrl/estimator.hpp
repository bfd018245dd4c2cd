#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cptrl/cpt_model.hpp"

namespace cptrl {

struct EstimatorConfig {
    // false: the largest sample X_(n) gets no weight on either side, exactly
    // as in the order-statistics scheme.
    // true: the estimate is the CPT-value of the empirical distribution, whose
    // weight increments telescope to w(1) - w(0) = 1 on each side.
    bool include_top_order_stat = false;
};

struct CptEstimate {
    double value = 0.0;  // positive_part - negative_part
    std::size_t n = 0;
    double positive_part = 0.0;
    double negative_part = 0.0;
};

/// Order-statistics estimate of the CPT-value from i.i.d. samples.
///
/// With X_(1) <= ... <= X_(n):
///   C+ = sum_{i=1}^{n-1} u+(X_(i)) (w+((n-i)/n) - w+((n-i-1)/n))
///   C- = sum_{i=1}^{n-1} u-(X_(i)) (w-(i/n) - w-((i-1)/n))
/// Both sums are Kahan-compensated. The result depends only on the multiset
/// of samples.
CptEstimate estimate_cpt(std::span<const double> samples, const CptModel& model,
                         const EstimatorConfig& cfg = {});

// ---------------------------------------------------------------------------
// Discrete support
// ---------------------------------------------------------------------------

/// Sorted, duplicate-free support split at a reference point: atoms
/// [0, split) are losses (x < reference), [split, K) gains or the reference
/// itself.
class DiscreteSupport {
public:
    DiscreteSupport(std::vector<double> points, double reference = 0.0);

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    std::size_t split() const noexcept { return split_; }
    double reference() const noexcept { return reference_; }

    // Index of `x` in the support; throws DomainError if absent.
    std::size_t index_of(double x) const;

private:
    std::vector<double> points_;
    std::size_t split_ = 0;
    double reference_ = 0.0;
};

class DiscreteDist {
public:
    // Duplicate atoms are merged; probabilities must sum to 1 within 1e-12.
    DiscreteDist(std::vector<double> points, std::vector<double> probs, double reference = 0.0);

    const DiscreteSupport& support() const noexcept { return support_; }
    const std::vector<double>& probs() const noexcept { return probs_; }

    double sample(RngStream& rng) const;

private:
    DiscreteSupport support_;
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

/// Counts per support atom from raw samples; unknown values are a DomainError.
std::vector<std::uint64_t> tally(std::span<const double> samples, const DiscreteSupport& support);

/// Plug-in estimate using empirical atom frequencies. Cumulative masses are
/// accumulated from below on the loss side and from above on the gain side.
CptEstimate estimate_cpt_discrete(std::span<const std::uint64_t> counts, const DiscreteSupport& support,
                                  const CptModel& model);

double exact_cpt_discrete(const DiscreteDist& dist, const CptModel& model);

// ---------------------------------------------------------------------------
// Sample-size calculators
// ---------------------------------------------------------------------------
//
// n >= ln(1/delta) * 4 H^2 M^2 / eps^(2/alpha), rounded up. delta is the
// failure probability: with n samples, P(|C_n - C| <= eps) >= 1 - delta.

double required_samples_holder_real(double eps, double delta, double holder_constant, double utility_bound,
                                    double alpha);
std::uint64_t required_samples_holder(double eps, double delta, double holder_constant, double utility_bound,
                                      double alpha);

double required_samples_lipschitz_real(double eps, double delta, double lipschitz_constant, double utility_bound);
std::uint64_t required_samples_lipschitz(double eps, double delta, double lipschitz_constant,
                                         double utility_bound);

}  // namespace cptrl
