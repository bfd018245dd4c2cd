#include "cptrl/envs/analytic.hpp"

#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "cptrl/errors.hpp"

namespace cptrl {

std::vector<double> sample_returns(const ReturnEnv& env, std::span<const double> theta, std::size_t m,
                                   RngStream& rng) {
    if (theta.size() != env.dimension()) {
        throw DomainError("parameter has dimension " + std::to_string(theta.size()) + ", environment expects " +
                          std::to_string(env.dimension()));
    }
    for (double t : theta) {
        if (!std::isfinite(t)) {
            throw DomainError("parameter must be finite");
        }
    }
    if (const auto dom = env.domain(); dom && !dom->contains(theta)) {
        throw DomainError("parameter lies outside the environment's domain");
    }
    if (m == 0) {
        throw DomainError("sample count must be at least 1");
    }
    std::vector<double> out(m);
    env.sample_into(theta, out, rng);
    return out;
}

QuadraticGaussianEnv::QuadraticGaussianEnv(std::vector<double> optimum, std::vector<double> curvature,
                                           double noise_std)
    : optimum_(std::move(optimum)), curvature_(std::move(curvature)), noise_std_(noise_std) {
    if (optimum_.empty() || optimum_.size() != curvature_.size()) {
        throw InvalidSpecError("optimum and curvature must be nonempty and of equal length");
    }
    if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
        throw InvalidSpecError("noise standard deviation must be finite and nonnegative");
    }
}

double QuadraticGaussianEnv::mean(std::span<const double> theta) const {
    double q = 0.0;
    for (std::size_t i = 0; i < optimum_.size(); ++i) {
        const double e = theta[i] - optimum_[i];
        q += curvature_[i] * e * e;
    }
    return -0.5 * q;
}

void QuadraticGaussianEnv::sample_into(std::span<const double> theta, std::span<double> out, RngStream& rng) const {
    const double mu = mean(theta);
    // Ziggurat sampler; several times faster than std::normal_distribution.
    boost::random::normal_distribution<double> noise(0.0, noise_std_ > 0.0 ? noise_std_ : 1.0);
    for (auto& x : out) {
        x = noise_std_ > 0.0 ? mu + noise(rng) : mu;
    }
}

QuadraticGaussianEnv gaussian_mean_env(double noise_std) { return QuadraticGaussianEnv({2.0}, {2.0}, noise_std); }

QuadraticGaussianEnv quadratic_bowl_env(double noise_std) {
    return QuadraticGaussianEnv({2.0, 2.0}, {1.0, 10.0}, noise_std);
}

}  // namespace cptrl
