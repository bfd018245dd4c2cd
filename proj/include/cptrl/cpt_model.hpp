#pragma once

#include <functional>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cptrl/rng.hpp"

namespace cptrl {

// ---------------------------------------------------------------------------
// Utility functions
// ---------------------------------------------------------------------------

enum class UtilityKind { Identity, PiecewisePower };

/// Gain/loss utility pair split at a reference point.
///
/// Both components are nonnegative: u_plus scores the amount by which an
/// outcome exceeds the reference, u_minus the (loss-averse) magnitude by which
/// it falls short. u_minus is therefore nonincreasing as a function of the
/// outcome. `Identity` ignores the exponents and lambda.
struct UtilitySpec {
    UtilityKind kind = UtilityKind::Identity;
    double sigma_plus = 1.0;
    double sigma_minus = 1.0;
    double lambda = 1.0;
    double reference = 0.0;
};

struct UtilityValue {
    double gain = 0.0;
    double loss = 0.0;
};

void validate(const UtilitySpec& u);

/// Splits `x` into (u+(x), u-(x)). At most one component is nonzero.
UtilityValue eval_utility(double x, const UtilitySpec& u);
double utility_gain(double x, const UtilitySpec& u);
double utility_loss(double x, const UtilitySpec& u);

// ---------------------------------------------------------------------------
// Probability weighting functions
// ---------------------------------------------------------------------------

// `Power` (w(p) = p^eta) exists for closed-form tests; it is not a
// behavioural model.
enum class WeightKind { Identity, TverskyKahneman, Prelec, Power };

struct WeightSpec {
    WeightKind kind = WeightKind::Identity;
    double eta = 1.0;
};

// Below this exponent the Tversky-Kahneman form stops being monotone.
inline constexpr double kMinTverskyKahnemanEta = 0.3;

void validate(const WeightSpec& w);

/// Distorted probability w(p); p must lie in [0, 1].
double eval_weight(double p, const WeightSpec& w);

/// Hoelder order of the weight on [0, 1]. Prelec weights are not Hoelder
/// continuous at 0 for eta < 1; eta is returned as a nominal order there.
double holder_order(const WeightSpec& w);

// ---------------------------------------------------------------------------
// CPT model
// ---------------------------------------------------------------------------

struct CptModel {
    UtilitySpec utility;
    WeightSpec weight_plus;
    WeightSpec weight_minus;
};

void validate(const CptModel& m);
double holder_order(const CptModel& m);

CptModel identity_model(double reference = 0.0);
// sigma = 0.88, lambda = 2.25 on both sides.
UtilitySpec kahneman_tversky_utility(double reference = 0.0);
WeightSpec tversky_kahneman_weight(double eta);

// JSON (snake_case keys, kinds as snake_case strings).
void to_json(nlohmann::json& j, const UtilitySpec& u);
void from_json(const nlohmann::json& j, UtilitySpec& u);
void to_json(nlohmann::json& j, const WeightSpec& w);
void from_json(const nlohmann::json& j, WeightSpec& w);
void to_json(nlohmann::json& j, const CptModel& m);
void from_json(const nlohmann::json& j, CptModel& m);

// ---------------------------------------------------------------------------
// Analytic distributions (closed-form CDFs for the quadrature oracle)
// ---------------------------------------------------------------------------

struct Uniform {
    double a;
    double b;
};
struct Gaussian {
    double mean;
    double std;
};
// x1 with probability p1, x2 with probability 1 - p1.
struct TwoPoint {
    double x1;
    double p1;
    double x2;
};
struct Exponential {
    double rate;
};

class AnalyticDist {
public:
    using Variant = std::variant<Uniform, Gaussian, TwoPoint, Exponential>;

    AnalyticDist(Variant v);  // NOLINT(google-explicit-constructor)
    AnalyticDist(Uniform u) : AnalyticDist(Variant(u)) {}  // NOLINT(google-explicit-constructor)
    AnalyticDist(Gaussian g) : AnalyticDist(Variant(g)) {}  // NOLINT(google-explicit-constructor)
    AnalyticDist(TwoPoint t) : AnalyticDist(Variant(t)) {}  // NOLINT(google-explicit-constructor)
    AnalyticDist(Exponential e) : AnalyticDist(Variant(e)) {}  // NOLINT(google-explicit-constructor)

    const Variant& params() const noexcept { return v_; }

    double cdf(double t) const;           // P(X <= t)
    double prob_greater(double t) const;  // P(X > t)
    double prob_less(double t) const;     // P(X < t)
    double mean() const;
    double sample(RngStream& rng) const;

    // Outcome values where the CDF jumps or has a kink.
    std::vector<double> breakpoints() const;

    // Distribution of X + c. Not defined for Exponential.
    AnalyticDist shifted(double c) const;

private:
    Variant v_;
};

// ---------------------------------------------------------------------------
// Quadrature of the CPT functional
// ---------------------------------------------------------------------------

/// Tail probabilities of an outcome variable, the minimum the quadrature
/// needs. `breakpoints` lists outcomes at which the tails are not smooth.
struct TailFunctions {
    std::function<double(double)> greater;  // t -> P(X > t)
    std::function<double(double)> less;     // t -> P(X < t)
    std::vector<double> breakpoints;
};

struct CptParts {
    double gain = 0.0;  // integral of w+(P(u+(X) > z))
    double loss = 0.0;  // integral of w-(P(u-(X) > z))
    double value() const { return gain - loss; }
};

CptParts cpt_parts_quadrature(const TailFunctions& tails, const CptModel& model, double tol);
CptParts cpt_parts_quadrature(const AnalyticDist& dist, const CptModel& model, double tol);

/// CPT-value of `dist` by adaptive quadrature of both tail integrals, each
/// truncated where the integrand has decayed below tol/100. Throws
/// DivergenceError when the integrand does not decay.
double cpt_value_quadrature(const AnalyticDist& dist, const CptModel& model, double tol);

}  // namespace cptrl
