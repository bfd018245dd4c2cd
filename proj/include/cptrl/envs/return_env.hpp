#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cptrl/box.hpp"
#include "cptrl/rng.hpp"

namespace cptrl {

/// Black-box sampler of the return X^theta.
///
/// Implementations are immutable; every call draws from the stream it is
/// handed, so equal (theta, stream) pairs give equal samples and distinct
/// streams give independent batches.
class ReturnEnv {
public:
    virtual ~ReturnEnv() = default;

    virtual std::size_t dimension() const = 0;

    // Parameters the sampler accepts. nullopt means all of R^d; optimizers
    // evaluate perturbed points outside their own feasible box, so the
    // sampler's domain is usually wider than the search box.
    virtual std::optional<BoxConstraint> domain() const { return std::nullopt; }

    virtual void sample_into(std::span<const double> theta, std::span<double> out, RngStream& rng) const = 0;
};

/// m i.i.d. draws of X^theta. Throws DomainError for a theta of the wrong
/// dimension, non-finite, or outside the sampler's domain.
std::vector<double> sample_returns(const ReturnEnv& env, std::span<const double> theta, std::size_t m,
                                   RngStream& rng);

}  // namespace cptrl
