#pragma once

#include <vector>

#include "cptrl/envs/return_env.hpp"

namespace cptrl {

/// X^theta ~ N(-1/2 sum_i c_i (theta_i - t_i)^2, noise_std^2).
///
/// With identity preferences the CPT-value is the mean, so the optimum is
/// theta = t and the Hessian is -diag(c).
class QuadraticGaussianEnv final : public ReturnEnv {
public:
    QuadraticGaussianEnv(std::vector<double> optimum, std::vector<double> curvature, double noise_std);

    std::size_t dimension() const override { return optimum_.size(); }
    void sample_into(std::span<const double> theta, std::span<double> out, RngStream& rng) const override;

    double mean(std::span<const double> theta) const;
    const std::vector<double>& optimum() const noexcept { return optimum_; }
    const std::vector<double>& curvature() const noexcept { return curvature_; }
    double noise_std() const noexcept { return noise_std_; }

private:
    std::vector<double> optimum_;
    std::vector<double> curvature_;
    double noise_std_;
};

// X^theta ~ N(-(theta - 2)^2, noise_std^2), d = 1.
QuadraticGaussianEnv gaussian_mean_env(double noise_std = 0.1);

// X^theta ~ N(-1/2 (theta - 2)^T diag(1, 10) (theta - 2), noise_std^2), d = 2.
QuadraticGaussianEnv quadratic_bowl_env(double noise_std = 0.1);

}  // namespace cptrl
