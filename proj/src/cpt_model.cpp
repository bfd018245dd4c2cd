#include "cptrl/cpt_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cptrl/errors.hpp"

namespace cptrl {

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------------------
// Utility
// ---------------------------------------------------------------------------

void validate(const UtilitySpec& u) {
    if (!std::isfinite(u.reference)) {
        throw InvalidSpecError("utility reference must be finite");
    }
    if (u.kind == UtilityKind::PiecewisePower) {
        if (!(u.sigma_plus > 0.0 && u.sigma_plus <= 1.0) ||
            !(u.sigma_minus > 0.0 && u.sigma_minus <= 1.0)) {
            throw InvalidSpecError("utility exponents must lie in (0, 1]");
        }
        if (!(u.lambda >= 1.0) || !std::isfinite(u.lambda)) {
            throw InvalidSpecError("loss aversion lambda must be finite and >= 1");
        }
    }
}

double utility_gain(double x, const UtilitySpec& u) {
    require_finite(x, "outcome");
    if (x <= u.reference) {
        return 0.0;
    }
    const double d = x - u.reference;
    return u.kind == UtilityKind::Identity ? d : std::pow(d, u.sigma_plus);
}

double utility_loss(double x, const UtilitySpec& u) {
    require_finite(x, "outcome");
    if (x >= u.reference) {
        return 0.0;
    }
    const double d = u.reference - x;
    return u.kind == UtilityKind::Identity ? d : u.lambda * std::pow(d, u.sigma_minus);
}

UtilityValue eval_utility(double x, const UtilitySpec& u) {
    return {utility_gain(x, u), utility_loss(x, u)};
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

void validate(const WeightSpec& w) {
    switch (w.kind) {
        case WeightKind::Identity:
            return;
        case WeightKind::TverskyKahneman:
            if (!(w.eta >= kMinTverskyKahnemanEta && w.eta <= 1.0)) {
                throw InvalidSpecError("Tversky-Kahneman eta must lie in [0.3, 1]");
            }
            return;
        case WeightKind::Prelec:
            if (!(w.eta > 0.0 && w.eta <= 1.0)) {
                throw InvalidSpecError("Prelec eta must lie in (0, 1]");
            }
            return;
        case WeightKind::Power:
            if (!(w.eta > 0.0) || !std::isfinite(w.eta)) {
                throw InvalidSpecError("power weight exponent must be positive");
            }
            return;
    }
}

double eval_weight(double p, const WeightSpec& w) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("weight argument must lie in [0, 1]");
    }
    validate(w);
    if (p == 0.0) {
        return 0.0;
    }
    if (p == 1.0) {
        return 1.0;
    }
    switch (w.kind) {
        case WeightKind::Identity:
            return p;
        case WeightKind::TverskyKahneman: {
            const double a = std::pow(p, w.eta);
            const double b = std::pow(1.0 - p, w.eta);
            return std::clamp(a / std::pow(a + b, 1.0 / w.eta), 0.0, 1.0);
        }
        case WeightKind::Prelec:
            return std::exp(-std::pow(-std::log(p), w.eta));
        case WeightKind::Power:
            return std::pow(p, w.eta);
    }
    return p;
}

double holder_order(const WeightSpec& w) {
    switch (w.kind) {
        case WeightKind::Identity:
            return 1.0;
        case WeightKind::TverskyKahneman:
        case WeightKind::Prelec:
            return w.eta;
        case WeightKind::Power:
            return std::min(w.eta, 1.0);
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

void validate(const CptModel& m) {
    validate(m.utility);
    validate(m.weight_plus);
    validate(m.weight_minus);
}

double holder_order(const CptModel& m) {
    return std::min(holder_order(m.weight_plus), holder_order(m.weight_minus));
}

CptModel identity_model(double reference) {
    CptModel m;
    m.utility.reference = reference;
    return m;
}

UtilitySpec kahneman_tversky_utility(double reference) {
    return {UtilityKind::PiecewisePower, 0.88, 0.88, 2.25, reference};
}

WeightSpec tversky_kahneman_weight(double eta) {
    return {WeightKind::TverskyKahneman, eta};
}

namespace {

const char* to_string(UtilityKind k) {
    return k == UtilityKind::Identity ? "identity" : "piecewise_power";
}

UtilityKind utility_kind_from(const std::string& s) {
    if (s == "identity") return UtilityKind::Identity;
    if (s == "piecewise_power") return UtilityKind::PiecewisePower;
    throw InvalidSpecError("unknown utility kind '" + s + "'");
}

const char* to_string(WeightKind k) {
    switch (k) {
        case WeightKind::Identity: return "identity";
        case WeightKind::TverskyKahneman: return "tversky_kahneman";
        case WeightKind::Prelec: return "prelec";
        case WeightKind::Power: return "power";
    }
    return "identity";
}

WeightKind weight_kind_from(const std::string& s) {
    if (s == "identity") return WeightKind::Identity;
    if (s == "tversky_kahneman") return WeightKind::TverskyKahneman;
    if (s == "prelec") return WeightKind::Prelec;
    if (s == "power") return WeightKind::Power;
    throw InvalidSpecError("unknown weight kind '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const UtilitySpec& u) {
    j = {{"kind", to_string(u.kind)},
         {"sigma_plus", u.sigma_plus},
         {"sigma_minus", u.sigma_minus},
         {"lambda", u.lambda},
         {"reference", u.reference}};
}

void from_json(const nlohmann::json& j, UtilitySpec& u) {
    u = UtilitySpec{};
    u.kind = utility_kind_from(j.value("kind", std::string("identity")));
    u.sigma_plus = j.value("sigma_plus", 1.0);
    u.sigma_minus = j.value("sigma_minus", 1.0);
    u.lambda = j.value("lambda", 1.0);
    u.reference = j.value("reference", 0.0);
    validate(u);
}

void to_json(nlohmann::json& j, const WeightSpec& w) {
    j = {{"kind", to_string(w.kind)}, {"eta", w.eta}};
}

void from_json(const nlohmann::json& j, WeightSpec& w) {
    w.kind = weight_kind_from(j.value("kind", std::string("identity")));
    w.eta = j.value("eta", 1.0);
    validate(w);
}

void to_json(nlohmann::json& j, const CptModel& m) {
    j = {{"utility", m.utility}, {"weight_plus", m.weight_plus}, {"weight_minus", m.weight_minus}};
}

void from_json(const nlohmann::json& j, CptModel& m) {
    m.utility = j.at("utility").get<UtilitySpec>();
    m.weight_plus = j.at("weight_plus").get<WeightSpec>();
    m.weight_minus = j.at("weight_minus").get<WeightSpec>();
}

// ---------------------------------------------------------------------------
// Analytic distributions
// ---------------------------------------------------------------------------

AnalyticDist::AnalyticDist(Variant v) : v_(v) {
    std::visit(overloaded{
                   [](const Uniform& u) {
                       if (!(std::isfinite(u.a) && std::isfinite(u.b) && u.a < u.b)) {
                           throw InvalidSpecError("uniform requires finite a < b");
                       }
                   },
                   [](const Gaussian& g) {
                       if (!(std::isfinite(g.mean) && g.std > 0.0 && std::isfinite(g.std))) {
                           throw InvalidSpecError("gaussian requires finite mean and std > 0");
                       }
                   },
                   [](const TwoPoint& t) {
                       if (!(std::isfinite(t.x1) && std::isfinite(t.x2) && t.p1 >= 0.0 && t.p1 <= 1.0)) {
                           throw InvalidSpecError("two-point requires finite atoms and p1 in [0, 1]");
                       }
                   },
                   [](const Exponential& e) {
                       if (!(e.rate > 0.0 && std::isfinite(e.rate))) {
                           throw InvalidSpecError("exponential requires rate > 0");
                       }
                   },
               },
               v_);
}

double AnalyticDist::cdf(double t) const {
    return std::visit(overloaded{
                          [t](const Uniform& u) { return std::clamp((t - u.a) / (u.b - u.a), 0.0, 1.0); },
                          [t](const Gaussian& g) {
                              return 0.5 * std::erfc(-(t - g.mean) / (g.std * std::sqrt(2.0)));
                          },
                          [t](const TwoPoint& p) {
                              double c = 0.0;
                              if (p.x1 <= t) c += p.p1;
                              if (p.x2 <= t) c += 1.0 - p.p1;
                              return c;
                          },
                          [t](const Exponential& e) { return t <= 0.0 ? 0.0 : -std::expm1(-e.rate * t); },
                      },
                      v_);
}

double AnalyticDist::prob_greater(double t) const {
    // Computed directly (not 1 - cdf) to keep the upper tail accurate.
    return std::visit(overloaded{
                          [t](const Uniform& u) { return std::clamp((u.b - t) / (u.b - u.a), 0.0, 1.0); },
                          [t](const Gaussian& g) {
                              return 0.5 * std::erfc((t - g.mean) / (g.std * std::sqrt(2.0)));
                          },
                          [t](const TwoPoint& p) {
                              double c = 0.0;
                              if (p.x1 > t) c += p.p1;
                              if (p.x2 > t) c += 1.0 - p.p1;
                              return c;
                          },
                          [t](const Exponential& e) { return t <= 0.0 ? 1.0 : std::exp(-e.rate * t); },
                      },
                      v_);
}

double AnalyticDist::prob_less(double t) const {
    return std::visit(overloaded{
                          [t](const TwoPoint& p) {
                              double c = 0.0;
                              if (p.x1 < t) c += p.p1;
                              if (p.x2 < t) c += 1.0 - p.p1;
                              return c;
                          },
                          [this, t](const auto&) { return cdf(t); },
                      },
                      v_);
}

double AnalyticDist::mean() const {
    return std::visit(overloaded{
                          [](const Uniform& u) { return 0.5 * (u.a + u.b); },
                          [](const Gaussian& g) { return g.mean; },
                          [](const TwoPoint& p) { return p.p1 * p.x1 + (1.0 - p.p1) * p.x2; },
                          [](const Exponential& e) { return 1.0 / e.rate; },
                      },
                      v_);
}

double AnalyticDist::sample(RngStream& rng) const {
    return std::visit(overloaded{
                          [&rng](const Uniform& u) { return u.a + (u.b - u.a) * rng.uniform01(); },
                          [&rng](const Gaussian& g) {
                              std::normal_distribution<double> nd(g.mean, g.std);
                              return nd(rng);
                          },
                          [&rng](const TwoPoint& p) { return rng.uniform01() < p.p1 ? p.x1 : p.x2; },
                          [&rng](const Exponential& e) {
                              std::exponential_distribution<double> ed(e.rate);
                              return ed(rng);
                          },
                      },
                      v_);
}

std::vector<double> AnalyticDist::breakpoints() const {
    return std::visit(overloaded{
                          [](const Uniform& u) { return std::vector<double>{u.a, u.b}; },
                          [](const Gaussian&) { return std::vector<double>{}; },
                          [](const TwoPoint& p) { return std::vector<double>{p.x1, p.x2}; },
                          [](const Exponential&) { return std::vector<double>{0.0}; },
                      },
                      v_);
}

AnalyticDist AnalyticDist::shifted(double c) const {
    return std::visit(overloaded{
                          [c](const Uniform& u) { return AnalyticDist(Uniform{u.a + c, u.b + c}); },
                          [c](const Gaussian& g) { return AnalyticDist(Gaussian{g.mean + c, g.std}); },
                          [c](const TwoPoint& p) { return AnalyticDist(TwoPoint{p.x1 + c, p.p1, p.x2 + c}); },
                          [](const Exponential&) -> AnalyticDist {
                              throw DomainError("shifted exponential is not an AnalyticDist");
                          },
                      },
                      v_);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace {

// Largest truncation point tried before declaring divergence (2^200).
constexpr int kMaxDoublings = 200;

// Integral over [0, inf) of a nonincreasing, nonnegative integrand with known
// kinks. Truncates at the first doubling point where both the integrand and
// its scale-weighted value z * f(z) fall below tol/100; the second condition
// rejects integrands that decay too slowly to be integrable (e.g. z^(-2/3)).
double tail_integral(const std::function<double(double)>& f, std::vector<double> kinks, double tol) {
    const double threshold = tol / 100.0;
    double z_max = 1.0;
    for (double k : kinks) {
        z_max = std::max(z_max, k);
    }
    int doublings = 0;
    for (;;) {
        const double fz = f(z_max);
        if (fz < threshold && z_max * fz < threshold) {
            break;
        }
        if (++doublings > kMaxDoublings) {
            throw DivergenceError(
                "CPT integrand does not decay (integral diverges, as for w(P(U>z)) ~ z^(-2/3))");
        }
        z_max *= 2.0;
    }

    kinks.push_back(0.0);
    kinks.push_back(z_max);
    std::erase_if(kinks, [z_max](double k) { return !(k >= 0.0 && k <= z_max); });
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());

    const double piece_tol = std::max(tol / static_cast<double>(kinks.size()), 1e-15);
    boost::math::quadrature::tanh_sinh<double> integrator;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
        const double a = kinks[i];
        const double b = kinks[i + 1];
        if (b - a <= 0.0) {
            continue;
        }
        double error = 0.0;
        double l1 = 0.0;
        // tanh_sinh takes a relative tolerance; rescale by the piece's
        // magnitude so the absolute error stays under piece_tol.
        const double rough = std::max(b - a, 1.0) * std::max(f(a), 1e-300);
        const double rel = std::clamp(piece_tol / rough, 1e-15, 1e-6);
        total += integrator.integrate(f, a, b, rel, &error, &l1);
    }
    return total;
}

}  // namespace

CptParts cpt_parts_quadrature(const TailFunctions& tails, const CptModel& model, double tol) {
    validate(model);
    if (!(tol > 0.0)) {
        throw DomainError("quadrature tolerance must be positive");
    }
    const UtilitySpec& u = model.utility;
    const bool power = u.kind == UtilityKind::PiecewisePower;

    // u+(x) > z  <=>  x > ref + g_plus(z);   u-(x) > z  <=>  x < ref - g_minus(z).
    auto g_plus = [&u, power](double z) { return power ? std::pow(z, 1.0 / u.sigma_plus) : z; };
    auto g_minus = [&u, power](double z) {
        return power ? std::pow(z / u.lambda, 1.0 / u.sigma_minus) : z;
    };

    auto gain_integrand = [&](double z) {
        const double p = std::clamp(tails.greater(u.reference + g_plus(z)), 0.0, 1.0);
        return eval_weight(p, model.weight_plus);
    };
    auto loss_integrand = [&](double z) {
        const double p = std::clamp(tails.less(u.reference - g_minus(z)), 0.0, 1.0);
        return eval_weight(p, model.weight_minus);
    };

    std::vector<double> gain_kinks;
    std::vector<double> loss_kinks;
    for (double x : tails.breakpoints) {
        if (x > u.reference) gain_kinks.push_back(utility_gain(x, u));
        if (x < u.reference) loss_kinks.push_back(utility_loss(x, u));
    }

    CptParts parts;
    parts.gain = tail_integral(gain_integrand, std::move(gain_kinks), tol / 2.0);
    parts.loss = tail_integral(loss_integrand, std::move(loss_kinks), tol / 2.0);
    return parts;
}

CptParts cpt_parts_quadrature(const AnalyticDist& dist, const CptModel& model, double tol) {
    TailFunctions tails{
        [&dist](double t) { return dist.prob_greater(t); },
        [&dist](double t) { return dist.prob_less(t); },
        dist.breakpoints(),
    };
    return cpt_parts_quadrature(tails, model, tol);
}

double cpt_value_quadrature(const AnalyticDist& dist, const CptModel& model, double tol) {
    return cpt_parts_quadrature(dist, model, tol).value();
}

}  // namespace cptrl
