#include "cptrl/spsa.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace cptrl {

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

double SpsaSchedules::gamma(std::size_t n) const { return a0 / (static_cast<double>(n) + a_offset); }

double SpsaSchedules::delta(std::size_t n) const { return delta0 / std::pow(static_cast<double>(n), delta_exp); }

std::size_t SpsaSchedules::batch(std::size_t n) const {
    return static_cast<std::size_t>(std::ceil(m0 * std::pow(static_cast<double>(n), nu)));
}

void SpsaSchedules::validate() const {
    auto fail = [](const std::string& msg) { throw InvalidSpecError("invalid SPSA schedules: " + msg); };
    if (!(a0 > 0.0) || !std::isfinite(a0)) fail("a0 must be positive");
    if (!(a_offset >= 0.0) || !std::isfinite(a_offset)) fail("a_offset must be nonnegative");
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) fail("delta0 must be positive");
    if (!(delta_exp > 0.0)) fail("delta_exp must be positive so that delta_n -> 0");
    if (!(m0 > 0.0) || !std::isfinite(m0)) fail("m0 must be positive");
    if (!(nu > 0.0) || !std::isfinite(nu)) fail("nu must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0, 1]");
    // sum gamma_n^2 / delta_n^2 ~ sum n^(2 delta_exp - 2) converges iff
    // 2 (1 - delta_exp) > 1.
    if (!(2.0 * (1.0 - delta_exp) > 1.0)) fail("sum gamma_n^2/delta_n^2 diverges (need delta_exp < 1/2)");
    // 1 / (m_n^(alpha/2) delta_n) ~ n^(delta_exp - nu alpha / 2) -> 0.
    if (!(delta_exp < nu * alpha / 2.0)) fail("estimation bias does not vanish (need delta_exp < nu*alpha/2)");
}

SpsaSchedules SpsaSchedules::defaults(double alpha) {
    SpsaSchedules s;
    s.alpha = alpha;
    return s;
}

double HessianSchedule::xi(std::size_t n) const { return xi0 / std::pow(static_cast<double>(n), xi_exp); }

void HessianSchedule::validate() const {
    if (!(xi0 > 0.0 && xi0 <= 1.0)) {
        throw InvalidSpecError("invalid Hessian schedule: xi0 must lie in (0, 1]");
    }
    if (!(xi_exp > 0.5 && xi_exp < 1.0)) {
        throw InvalidSpecError("invalid Hessian schedule: need 1/2 < xi_exp < 1 (two timescales)");
    }
}

// ---------------------------------------------------------------------------
// Objectives and traces
// ---------------------------------------------------------------------------

SampledCptObjective::SampledCptObjective(const ReturnEnv& env, CptModel model, EstimatorConfig cfg)
    : env_(env), model_(model), cfg_(cfg) {
    validate(model_);
}

double SampledCptObjective::evaluate(std::span<const double> theta, std::size_t batch, RngStream& rng) const {
    const std::vector<double> samples = sample_returns(env_, theta, batch, rng);
    return estimate_cpt(samples, model_, cfg_).value;
}

std::size_t RunTrace::first_hit(std::span<const double> target, double tol) const {
    for (const auto& r : records) {
        double worst = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
            worst = std::max(worst, std::abs(r.theta[i] - target[i]));
        }
        if (worst <= tol) {
            return r.n;
        }
    }
    return 0;
}

std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream out;
    out << std::setprecision(17);
    const std::size_t d = trace.theta0.size();
    out << "n";
    for (std::size_t i = 0; i < d; ++i) out << ",theta_" << i;
    out << ",c_plus,c_minus,gamma,delta,m\n";
    for (const auto& r : trace.records) {
        out << r.n;
        for (double t : r.theta) out << ',' << t;
        out << ',' << r.c_plus << ',' << r.c_minus << ',' << r.gamma << ',' << r.delta << ',' << r.m << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

std::vector<double> rademacher_vector(RngStream& rng, std::size_t d) {
    std::vector<double> v(d);
    for (auto& x : v) {
        x = (rng() >> 63) != 0 ? 1.0 : -1.0;
    }
    return v;
}

std::vector<double> spsa_gradient(double c_plus, double c_minus, double delta, std::span<const double> perturb) {
    if (!(delta > 0.0)) {
        throw DomainError("perturbation size must be positive");
    }
    std::vector<double> g(perturb.size());
    const double diff = (c_plus - c_minus) / (2.0 * delta);
    for (std::size_t i = 0; i < perturb.size(); ++i) {
        g[i] = diff / perturb[i];
    }
    return g;
}

NewtonEstimates spsa_n_estimates(double c_plus, double c_minus, double c_center, double delta,
                                 std::span<const double> perturb, std::span<const double> perturb_hat) {
    if (perturb.size() != perturb_hat.size()) {
        throw DomainError("perturbation vectors differ in length");
    }
    NewtonEstimates est;
    est.gradient = spsa_gradient(c_plus, c_minus, delta, perturb);
    const auto d = static_cast<Eigen::Index>(perturb.size());
    const double second = (c_plus + c_minus - 2.0 * c_center) / (delta * delta);
    est.hessian.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            est.hessian(i, j) = second / (perturb[static_cast<std::size_t>(i)] * perturb_hat[static_cast<std::size_t>(j)]);
        }
    }
    return est;
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& h, double kappa) {
    if (!(kappa > 0.0)) {
        throw DomainError("eigenvalue floor must be positive");
    }
    if (h.rows() != h.cols()) {
        throw DomainError("matrix must be square");
    }
    if (!h.allFinite()) {
        throw DomainError("matrix has non-finite entries");
    }
    const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw DomainError("eigendecomposition failed");
    }
    if (eig.eigenvalues().minCoeff() >= kappa) {
        return sym;
    }
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(kappa);
    const Eigen::MatrixXd& v = eig.eigenvectors();
    Eigen::MatrixXd out = v * clamped.asDiagonal() * v.transpose();
    return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

namespace {

std::vector<double> offset(std::span<const double> theta, double scale, std::span<const double> dir) {
    std::vector<double> out(theta.begin(), theta.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += scale * dir[i];
    }
    return out;
}

void check_start(const CptObjective& objective, const BoxConstraint& box, std::span<const double> theta0) {
    if (theta0.size() != objective.dimension() || box.dimension() != objective.dimension()) {
        throw DomainError("theta0, box and objective dimensions differ");
    }
    if (!box.contains(theta0)) {
        throw DomainError("theta0 lies outside the box");
    }
}

// Runs one CPT evaluation, turning failures into OptimizationError with the
// iteration number and the partial trace.
double evaluate_or_abort(const CptObjective& objective, std::span<const double> theta, std::size_t batch,
                         RngStream rng, std::size_t n, const char* role, RunTrace& trace) {
    double value = 0.0;
    try {
        value = objective.evaluate(theta, batch, rng);
    } catch (const std::exception& e) {
        trace.final_theta = trace.records.empty() ? trace.theta0 : trace.records.back().theta;
        throw OptimizationError("iteration " + std::to_string(n) + " (" + role + "): " + e.what(), trace);
    }
    if (!std::isfinite(value)) {
        trace.final_theta = trace.records.empty() ? trace.theta0 : trace.records.back().theta;
        throw OptimizationError("iteration " + std::to_string(n) + " (" + role + "): non-finite CPT estimate",
                                trace);
    }
    return value;
}

}  // namespace

RunTrace optimize_spsa_g(const CptObjective& objective, const SpsaSchedules& schedules, const BoxConstraint& box,
                         std::span<const double> theta0, std::size_t iters, std::uint64_t seed) {
    schedules.validate();
    check_start(objective, box, theta0);

    RunTrace trace;
    trace.theta0.assign(theta0.begin(), theta0.end());
    trace.records.reserve(iters);
    std::vector<double> theta = trace.theta0;

    for (std::size_t n = 1; n <= iters; ++n) {
        RngStream perturb_rng(seed, n, StreamRole::Perturb);
        const std::vector<double> delta_vec = rademacher_vector(perturb_rng, theta.size());
        const double delta = schedules.delta(n);
        const double gamma = schedules.gamma(n);
        const std::size_t m = schedules.batch(n);

        const auto plus = offset(theta, delta, delta_vec);
        const auto minus = offset(theta, -delta, delta_vec);
        const double c_plus =
            evaluate_or_abort(objective, plus, m, RngStream(seed, n, StreamRole::TrajPlus), n, "theta+", trace);
        const double c_minus =
            evaluate_or_abort(objective, minus, m, RngStream(seed, n, StreamRole::TrajMinus), n, "theta-", trace);

        const auto grad = spsa_gradient(c_plus, c_minus, delta, delta_vec);
        theta = project_box(offset(theta, gamma, grad), box);

        TraceRecord rec;
        rec.n = n;
        rec.theta = theta;
        rec.c_plus = c_plus;
        rec.c_minus = c_minus;
        rec.gamma = gamma;
        rec.delta = delta;
        rec.m = m;
        rec.stream_id = perturb_rng.id();
        trace.records.push_back(std::move(rec));
    }
    trace.final_theta = theta;
    return trace;
}

RunTrace optimize_spsa_g(const ReturnEnv& env, const CptModel& model, const SpsaSchedules& schedules,
                         const BoxConstraint& box, std::span<const double> theta0, std::size_t iters,
                         std::uint64_t seed, const EstimatorConfig& cfg) {
    const SampledCptObjective objective(env, model, cfg);
    return optimize_spsa_g(objective, schedules, box, theta0, iters, seed);
}

RunTrace optimize_spsa_n(const CptObjective& objective, const SpsaSchedules& schedules,
                         const NewtonOptions& newton, const BoxConstraint& box, std::span<const double> theta0,
                         std::size_t iters, std::uint64_t seed) {
    schedules.validate();
    newton.hessian.validate();
    if (!(newton.kappa > 0.0)) {
        throw InvalidSpecError("eigenvalue floor kappa must be positive");
    }
    if (!(newton.hessian_scale > 0.0)) {
        throw InvalidSpecError("hessian_scale must be positive");
    }
    check_start(objective, box, theta0);

    const auto d = static_cast<Eigen::Index>(theta0.size());
    RunTrace trace;
    trace.theta0.assign(theta0.begin(), theta0.end());
    trace.records.reserve(iters);
    std::vector<double> theta = trace.theta0;
    Eigen::MatrixXd h_bar = Eigen::MatrixXd::Zero(d, d);

    for (std::size_t n = 1; n <= iters; ++n) {
        RngStream perturb_rng(seed, n, StreamRole::Perturb);
        const std::vector<double> p = rademacher_vector(perturb_rng, theta.size());
        const std::vector<double> p_hat = rademacher_vector(perturb_rng, theta.size());
        std::vector<double> sum(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) sum[i] = p[i] + p_hat[i];

        const double delta = schedules.delta(n);
        const double gamma = schedules.gamma(n);
        const std::size_t m = schedules.batch(n);

        const double c_plus = evaluate_or_abort(objective, offset(theta, delta, sum), m,
                                                RngStream(seed, n, StreamRole::TrajPlus), n, "theta+", trace);
        const double c_minus = evaluate_or_abort(objective, offset(theta, -delta, sum), m,
                                                 RngStream(seed, n, StreamRole::TrajMinus), n, "theta-", trace);
        const double c_center = evaluate_or_abort(objective, theta, m, RngStream(seed, n, StreamRole::TrajCenter),
                                                  n, "theta", trace);

        const NewtonEstimates est = spsa_n_estimates(c_plus, c_minus, c_center, delta, p, p_hat);
        const double xi = newton.hessian.xi(n);
        // Symmetrized before accumulation so h_bar stays exactly symmetric.
        h_bar = (1.0 - xi) * h_bar + xi * (0.5 * (est.hessian + est.hessian.transpose()));

        const Eigen::MatrixXd curvature = psd_project(-newton.hessian_scale * h_bar, newton.kappa);
        const Eigen::Map<const Eigen::VectorXd> grad(est.gradient.data(), d);
        const Eigen::VectorXd step = curvature.ldlt().solve(grad);

        for (Eigen::Index i = 0; i < d; ++i) {
            theta[static_cast<std::size_t>(i)] += gamma * step(i);
        }
        theta = project_box(theta, box);

        TraceRecord rec;
        rec.n = n;
        rec.theta = theta;
        rec.c_plus = c_plus;
        rec.c_minus = c_minus;
        rec.c_center = c_center;
        rec.gamma = gamma;
        rec.delta = delta;
        rec.m = m;
        rec.stream_id = perturb_rng.id();
        rec.hessian.resize(static_cast<std::size_t>(d * d));
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                rec.hessian[static_cast<std::size_t>(i * d + j)] = h_bar(i, j);
            }
        }
        trace.records.push_back(std::move(rec));
    }
    trace.final_theta = theta;
    return trace;
}

RunTrace optimize_spsa_n(const ReturnEnv& env, const CptModel& model, const SpsaSchedules& schedules,
                         const NewtonOptions& newton, const BoxConstraint& box, std::span<const double> theta0,
                         std::size_t iters, std::uint64_t seed, const EstimatorConfig& cfg) {
    const SampledCptObjective objective(env, model, cfg);
    return optimize_spsa_n(objective, schedules, newton, box, theta0, iters, seed);
}

}  // namespace cptrl
