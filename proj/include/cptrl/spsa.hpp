#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cptrl/box.hpp"
#include "cptrl/cpt_model.hpp"
#include "cptrl/envs/return_env.hpp"
#include "cptrl/errors.hpp"
#include "cptrl/estimator.hpp"
#include "cptrl/rng.hpp"

namespace cptrl {

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// Step, perturbation and batch-size sequences, indexed from n = 1:
///   gamma_n = a0 / (n + a_offset)
///   delta_n = delta0 / n^delta_exp
///   m_n     = ceil(m0 * n^nu)
/// `alpha` is the Hoelder order of the weights in use; it enters the
/// requirement that the estimation bias vanish faster than delta_n.
struct SpsaSchedules {
    double a0 = 1.0;
    double a_offset = 50.0;
    double delta0 = 1.9;
    double delta_exp = 0.101;
    double m0 = 10.0;
    double nu = 1.0;
    double alpha = 1.0;

    double gamma(std::size_t n) const;
    double delta(std::size_t n) const;
    std::size_t batch(std::size_t n) const;

    // Throws InvalidSpecError unless gamma_n, delta_n -> 0, sum gamma_n = inf,
    // sum gamma_n^2 / delta_n^2 < inf (delta_exp < 1/2) and
    // 1 / (m_n^(alpha/2) delta_n) -> 0 (delta_exp < nu * alpha / 2).
    void validate() const;

    // delta_n = 1.9 / n^0.101, gamma_n = 1 / (n + 50), m_n = ceil(10 n).
    static SpsaSchedules defaults(double alpha);
};

/// Averaging weight xi_n = xi0 / n^xi_exp for the Hessian recursion.
struct HessianSchedule {
    double xi0 = 1.0;
    double xi_exp = 0.6;

    double xi(std::size_t n) const;

    // Requires sum xi_n = inf, sum xi_n^2 < inf and gamma_n / xi_n -> 0, i.e.
    // 1/2 < xi_exp < 1 for the 1/n step family; xi0 in (0, 1].
    void validate() const;
};

struct NewtonOptions {
    HessianSchedule hessian;
    // Eigenvalue floor of the positive-definite projection.
    double kappa = 1e-4;
    // Multiplies the Hessian estimate before projection. The three-point
    // estimator has expectation 2 * Hessian, so 0.5 recovers the Hessian.
    double hessian_scale = 1.0;
};

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

/// Noisy CPT-value oracle theta -> estimate. `batch` is the sample budget
/// m_n; objectives may map it to their own notion of simulation length.
class CptObjective {
public:
    virtual ~CptObjective() = default;
    virtual std::size_t dimension() const = 0;
    virtual double evaluate(std::span<const double> theta, std::size_t batch, RngStream& rng) const = 0;
};

/// estimate_cpt over m i.i.d. draws of a ReturnEnv.
class SampledCptObjective final : public CptObjective {
public:
    SampledCptObjective(const ReturnEnv& env, CptModel model, EstimatorConfig cfg = {});

    std::size_t dimension() const override { return env_.dimension(); }
    double evaluate(std::span<const double> theta, std::size_t batch, RngStream& rng) const override;

private:
    const ReturnEnv& env_;
    CptModel model_;
    EstimatorConfig cfg_;
};

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct TraceRecord {
    std::size_t n = 0;
    std::vector<double> theta;  // iterate after the n-th update (projected)
    double c_plus = 0.0;
    double c_minus = 0.0;
    double c_center = std::numeric_limits<double>::quiet_NaN();  // Newton only
    double gamma = 0.0;
    double delta = 0.0;
    std::size_t m = 0;
    std::uint64_t stream_id = 0;  // id of the perturbation substream
    std::vector<double> hessian;  // Newton only: running estimate, row-major
};

struct RunTrace {
    std::vector<double> theta0;
    std::vector<TraceRecord> records;
    std::vector<double> final_theta;

    // First n with |theta_n - target|_inf <= tol, or 0 if never reached.
    std::size_t first_hit(std::span<const double> target, double tol) const;
};

/// CSV with columns n, theta_0..theta_{d-1}, c_plus, c_minus, gamma, delta, m.
std::string trace_to_csv(const RunTrace& trace);

/// Thrown when an iteration fails; carries the records completed so far.
class OptimizationError : public Error {
public:
    OptimizationError(const std::string& what, RunTrace partial) : Error(what), trace_(std::move(partial)) {}
    const RunTrace& trace() const noexcept { return trace_; }

private:
    RunTrace trace_;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// i.i.d. +-1 components, each with probability 1/2.
std::vector<double> rademacher_vector(RngStream& rng, std::size_t d);

/// Two-point simultaneous-perturbation gradient:
/// component i = (c_plus - c_minus) / (2 delta perturb_i).
std::vector<double> spsa_gradient(double c_plus, double c_minus, double delta, std::span<const double> perturb);

struct NewtonEstimates {
    std::vector<double> gradient;
    Eigen::MatrixXd hessian;
};

/// Gradient and Hessian from the three evaluations at theta +- delta (D + D^)
/// and theta:
///   g_i    = (c_plus - c_minus) / (2 delta D_i)
///   H_ij   = (c_plus + c_minus - 2 c_center) / (delta^2 D_i D^_j)
/// H is returned as computed (not symmetrized).
NewtonEstimates spsa_n_estimates(double c_plus, double c_minus, double c_center, double delta,
                                 std::span<const double> perturb, std::span<const double> perturb_hat);

/// Symmetrizes H and raises every eigenvalue below kappa to kappa. Returns
/// the symmetrized input untouched when it is already above the floor.
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& h, double kappa);

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

/// First-order projected ascent: theta <- Gamma(theta + gamma_n * g_hat).
/// Deterministic given `seed`; every theta in the trace lies in `box`.
RunTrace optimize_spsa_g(const CptObjective& objective, const SpsaSchedules& schedules, const BoxConstraint& box,
                         std::span<const double> theta0, std::size_t iters, std::uint64_t seed);

RunTrace optimize_spsa_g(const ReturnEnv& env, const CptModel& model, const SpsaSchedules& schedules,
                         const BoxConstraint& box, std::span<const double> theta0, std::size_t iters,
                         std::uint64_t seed, const EstimatorConfig& cfg = {});

/// Second-order variant with a running Hessian estimate.
///
/// Sign convention: the objective is maximized, so near an optimum the
/// Hessian estimate is negative definite. The step therefore preconditions
/// the ascent gradient with the projection of the *negated* estimate,
///   theta <- Gamma(theta + gamma_n * Upsilon(-s * H_bar)^{-1} g_hat),
/// which is the Newton step for minimizing -C. The solve uses an LDL^T
/// factorization; no inverse is formed.
RunTrace optimize_spsa_n(const CptObjective& objective, const SpsaSchedules& schedules,
                         const NewtonOptions& newton, const BoxConstraint& box, std::span<const double> theta0,
                         std::size_t iters, std::uint64_t seed);

RunTrace optimize_spsa_n(const ReturnEnv& env, const CptModel& model, const SpsaSchedules& schedules,
                         const NewtonOptions& newton, const BoxConstraint& box, std::span<const double> theta0,
                         std::size_t iters, std::uint64_t seed, const EstimatorConfig& cfg = {});

}  // namespace cptrl
