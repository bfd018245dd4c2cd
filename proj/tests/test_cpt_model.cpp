#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "cptrl/cpt_model.hpp"
#include "cptrl/errors.hpp"
#include "oracles.hpp"

using namespace cptrl;

namespace {

CptModel with_weights(UtilitySpec u, WeightSpec wp, WeightSpec wm) { return CptModel{u, wp, wm}; }

// 40-digit mpmath evaluations, frozen.
constexpr double kLoss2 = 4.140844427811937852756940571907991539769;  // 2.25 * 2^0.88
constexpr double kTk061At01 = 0.1863025663771741505;                  // TK_{0.61}(0.1)
// Midpoint sum with 1e7 cells of the integral of TK_{0.61} over [0, 1].
constexpr double kTkIntegral061 = 0.436056754732047;

}  // namespace

TEST_CASE("utility: identity and piecewise power") {
    const UtilitySpec id{};
    auto v = eval_utility(0.5, id);
    CHECK(v.gain == 0.5);
    CHECK(v.loss == 0.0);

    const UtilitySpec kt = kahneman_tversky_utility();
    v = eval_utility(-1.0, kt);
    CHECK(v.gain == 0.0);
    CHECK(v.loss == 2.25);

    v = eval_utility(-2.0, kt);
    CHECK(v.gain == 0.0);
    CHECK(v.loss == doctest::Approx(kLoss2).epsilon(1e-15));

    v = eval_utility(0.0, kt);
    CHECK(v.gain == 0.0);
    CHECK(v.loss == 0.0);
}

TEST_CASE("utility: reference split and monotonicity") {
    const UtilitySpec u = kahneman_tversky_utility(1.5);
    double prev_gain = 0.0;
    double prev_loss = std::numeric_limits<double>::infinity();
    for (double x = -5.0; x <= 8.0; x += 0.125) {
        const auto v = eval_utility(x, u);
        CHECK((v.gain == 0.0 || v.loss == 0.0));
        if (x <= 1.5) CHECK(v.gain == 0.0);
        if (x >= 1.5) CHECK(v.loss == 0.0);
        CHECK(v.gain >= prev_gain);
        CHECK(v.loss <= prev_loss);
        prev_gain = v.gain;
        prev_loss = v.loss;
    }
    CHECK(utility_gain(2.5, u) == doctest::Approx(1.0));
    CHECK(utility_loss(0.5, u) == doctest::Approx(2.25));
}

TEST_CASE("utility: errors") {
    CHECK_THROWS_AS(eval_utility(std::nan(""), UtilitySpec{}), DomainError);
    CHECK_THROWS_AS(eval_utility(std::numeric_limits<double>::infinity(), UtilitySpec{}), DomainError);
    UtilitySpec bad = kahneman_tversky_utility();
    bad.sigma_plus = 1.5;
    CHECK_THROWS_AS(validate(bad), InvalidSpecError);
    bad = kahneman_tversky_utility();
    bad.lambda = 0.5;
    CHECK_THROWS_AS(validate(bad), InvalidSpecError);
}

TEST_CASE("weights: examples") {
    CHECK(eval_weight(0.5, WeightSpec{}) == 0.5);
    CHECK(eval_weight(0.0, tversky_kahneman_weight(0.61)) == 0.0);
    const double w = eval_weight(0.1, tversky_kahneman_weight(0.61));
    CHECK(w > 0.1);
    CHECK(w < 0.5);
    CHECK(w == doctest::Approx(kTk061At01).epsilon(1e-14));
    CHECK(w == doctest::Approx(oracle::tk_weight(0.1, 0.61)).epsilon(1e-14));
}

TEST_CASE("weights: endpoints, range and monotonicity for every family") {
    const std::vector<WeightSpec> specs = {
        {WeightKind::Identity, 1.0},      tversky_kahneman_weight(0.3), tversky_kahneman_weight(0.61),
        tversky_kahneman_weight(0.69),    tversky_kahneman_weight(1.0), {WeightKind::Prelec, 0.65},
        {WeightKind::Prelec, 1.0},        {WeightKind::Power, 2.0},     {WeightKind::Power, 0.5},
    };
    for (const auto& s : specs) {
        CAPTURE(static_cast<int>(s.kind));
        CAPTURE(s.eta);
        CHECK(eval_weight(0.0, s) == 0.0);
        CHECK(eval_weight(1.0, s) == 1.0);
        double prev = 0.0;
        for (int k = 1; k <= 10000; ++k) {
            const double w = eval_weight(k / 10000.0, s);
            CHECK(w >= prev);
            CHECK(w <= 1.0);
            prev = w;
        }
    }
}

TEST_CASE("weights: errors") {
    CHECK_THROWS_AS(eval_weight(-0.01, WeightSpec{}), DomainError);
    CHECK_THROWS_AS(eval_weight(1.01, WeightSpec{}), DomainError);
    CHECK_THROWS_AS(eval_weight(std::nan(""), WeightSpec{}), DomainError);
    CHECK_THROWS_AS(eval_weight(0.5, tversky_kahneman_weight(0.2)), InvalidSpecError);
    CHECK_THROWS_AS(eval_weight(0.5, tversky_kahneman_weight(1.2)), InvalidSpecError);
    CHECK_NOTHROW(eval_weight(0.5, tversky_kahneman_weight(kMinTverskyKahnemanEta)));
}

TEST_CASE("weights: Hoelder orders") {
    CHECK(holder_order(WeightSpec{}) == 1.0);
    CHECK(holder_order(tversky_kahneman_weight(0.61)) == 0.61);
    CptModel m{kahneman_tversky_utility(), tversky_kahneman_weight(0.61), tversky_kahneman_weight(0.69)};
    CHECK(holder_order(m) == 0.61);
}

TEST_CASE("model JSON round trip") {
    const CptModel m{kahneman_tversky_utility(-0.25), tversky_kahneman_weight(0.61), {WeightKind::Prelec, 0.7}};
    const nlohmann::json j = m;
    CHECK(j.at("utility").at("kind") == "piecewise_power");
    CHECK(j.at("weight_plus").at("kind") == "tversky_kahneman");
    CHECK(j.at("weight_minus").at("kind") == "prelec");
    const auto back = j.get<CptModel>();
    CHECK(back.utility.kind == UtilityKind::PiecewisePower);
    CHECK(back.utility.reference == -0.25);
    CHECK(back.utility.lambda == 2.25);
    CHECK(back.weight_plus.eta == 0.61);
    CHECK(back.weight_minus.kind == WeightKind::Prelec);

    nlohmann::json bad = j;
    bad["weight_plus"]["kind"] = "cubic";
    CHECK_THROWS_AS(bad.get<CptModel>(), InvalidSpecError);
    bad = j;
    bad["weight_plus"]["eta"] = 0.1;
    CHECK_THROWS_AS(bad.get<CptModel>(), InvalidSpecError);
}

TEST_CASE("quadrature: closed-form examples") {
    const AnalyticDist u01 = Uniform{0.0, 1.0};
    CHECK(cpt_value_quadrature(u01, identity_model(), 1e-9) == doctest::Approx(0.5).epsilon(1e-9));

    const CptModel square = with_weights(UtilitySpec{}, {WeightKind::Power, 2.0}, {WeightKind::Power, 2.0});
    CHECK(cpt_value_quadrature(u01, square, 1e-9) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("quadrature: TK weights on Uniform(0,1) against a Riemann oracle") {
    const double fresh = oracle::midpoint([](double p) { return oracle::tk_weight(p, 0.61); }, 0.0, 1.0, 1000000);
    CHECK(std::abs(fresh - kTkIntegral061) < 1e-9);

    const CptModel m = with_weights(UtilitySpec{}, tversky_kahneman_weight(0.61), tversky_kahneman_weight(0.61));
    const double v = cpt_value_quadrature(Uniform{0.0, 1.0}, m, 1e-10);
    CHECK(std::abs(v - kTkIntegral061) < 1e-9);
}

TEST_CASE("quadrature: identity maps recover the mean minus the reference") {
    const std::vector<AnalyticDist> dists = {
        Uniform{-1.0, 3.0}, Gaussian{0.3, 2.0}, TwoPoint{-1.0, 0.3, 2.0}, Exponential{2.0}, Gaussian{-4.0, 0.5},
    };
    const double tol = 1e-8;
    for (double ref : {0.0, 0.7, -1.2}) {
        for (const auto& d : dists) {
            CAPTURE(ref);
            CAPTURE(d.mean());
            const double v = cpt_value_quadrature(d, identity_model(ref), tol);
            CHECK(std::abs(v - (d.mean() - ref)) <= 10 * tol);
        }
    }
}

TEST_CASE("quadrature: TK weights approach the identity value as eta -> 1") {
    const AnalyticDist d = Gaussian{0.5, 1.5};
    const double tol = 1e-8;
    const UtilitySpec kt = kahneman_tversky_utility();
    const double base = cpt_value_quadrature(d, with_weights(kt, {}, {}), tol);
    const double at1 = cpt_value_quadrature(d, with_weights(kt, tversky_kahneman_weight(1.0),
                                                            tversky_kahneman_weight(1.0)), tol);
    CHECK(std::abs(at1 - base) <= 10 * tol);
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double eta : {0.6, 0.8, 0.9, 0.99, 0.999}) {
        const double v = cpt_value_quadrature(
            d, with_weights(kt, tversky_kahneman_weight(eta), tversky_kahneman_weight(eta)), tol);
        const double gap = std::abs(v - base);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-2);
}

TEST_CASE("quadrature: gains and losses decompose") {
    const AnalyticDist d = Gaussian{0.4, 1.0};
    const double ref = 0.25;
    const CptModel m{kahneman_tversky_utility(ref), tversky_kahneman_weight(0.61), tversky_kahneman_weight(0.69)};
    const double tol = 1e-9;
    const CptParts parts = cpt_parts_quadrature(d, m, tol);

    // Gains alone: Y = max(X - ref, 0) with reference 0 has no loss part.
    TailFunctions gains{
        [&](double t) { return t < 0.0 ? 1.0 : d.prob_greater(t + ref); },
        [&](double t) { return t <= 0.0 ? 0.0 : d.prob_less(t + ref); },
        {0.0},
    };
    const CptParts g = cpt_parts_quadrature(gains, CptModel{kahneman_tversky_utility(0.0), m.weight_plus,
                                                             m.weight_minus}, tol);
    CHECK(g.loss == 0.0);
    CHECK(std::abs(g.gain - parts.gain) < 10 * tol);

    // Losses alone: Y = min(X - ref, 0).
    TailFunctions losses{
        [&](double t) { return t >= 0.0 ? 0.0 : d.prob_greater(t + ref); },
        [&](double t) { return t > 0.0 ? 1.0 : d.prob_less(t + ref); },
        {0.0},
    };
    const CptParts l = cpt_parts_quadrature(losses, CptModel{kahneman_tversky_utility(0.0), m.weight_plus,
                                                              m.weight_minus}, tol);
    CHECK(l.gain == 0.0);
    CHECK(std::abs(l.loss - parts.loss) < 10 * tol);
    CHECK(std::abs(parts.value() - (g.gain - l.loss)) < 20 * tol);
}

TEST_CASE("quadrature: shifting outcomes and reference together changes nothing") {
    const double tol = 1e-9;
    const std::vector<AnalyticDist> dists = {Uniform{-1.0, 2.0}, Gaussian{0.2, 0.7}, TwoPoint{-2.0, 0.4, 1.0}};
    for (const auto& d : dists) {
        for (double c : {-3.0, 0.5, 10.0}) {
            const CptModel m0{kahneman_tversky_utility(0.0), tversky_kahneman_weight(0.61),
                              tversky_kahneman_weight(0.69)};
            const CptModel mc{kahneman_tversky_utility(c), tversky_kahneman_weight(0.61),
                              tversky_kahneman_weight(0.69)};
            CHECK(std::abs(cpt_value_quadrature(d, m0, tol) - cpt_value_quadrature(d.shifted(c), mc, tol)) <
                  10 * tol);
        }
    }
}

TEST_CASE("quadrature: non-integrable tail is reported") {
    // P(X > t) = 1/t^2 beyond 1 under w(p) = p^(1/3): the integrand decays as
    // z^(-2/3).
    TailFunctions pareto{
        [](double t) { return t < 1.0 ? 1.0 : 1.0 / (t * t); },
        [](double) { return 0.0; },
        {1.0},
    };
    const CptModel m = with_weights(UtilitySpec{}, {WeightKind::Power, 1.0 / 3.0}, {});
    CHECK_THROWS_AS(cpt_parts_quadrature(pareto, m, 1e-6), DivergenceError);
    CHECK_THROWS_AS(cpt_value_quadrature(Uniform{0, 1}, identity_model(), 0.0), DomainError);
}

TEST_CASE("analytic distributions: sampler agrees with the CDF (Kolmogorov-Smirnov)") {
    const std::vector<AnalyticDist> dists = {Uniform{-1.0, 3.0}, Gaussian{0.3, 2.0}, Exponential{2.0}};
    for (std::size_t k = 0; k < dists.size(); ++k) {
        RngStream rng(99, k, StreamRole::Test);
        const std::size_t n = 20000;
        std::vector<double> xs(n);
        for (auto& x : xs) x = dists[k].sample(rng);
        std::sort(xs.begin(), xs.end());
        double dmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = dists[k].cdf(xs[i]);
            dmax = std::max({dmax, std::abs(f - static_cast<double>(i + 1) / n), std::abs(f - static_cast<double>(i) / n)});
        }
        // 1.95 / sqrt(n) is the 0.1% critical value.
        CHECK(dmax * std::sqrt(static_cast<double>(n)) < 1.95);
    }

    const AnalyticDist tp = TwoPoint{-1.0, 0.3, 2.0};
    RngStream rng(5, 0, StreamRole::Test);
    int low = 0;
    for (int i = 0; i < 100000; ++i) low += tp.sample(rng) == -1.0;
    CHECK(std::abs(low / 100000.0 - 0.3) < 0.006);
    CHECK(tp.cdf(-1.0) == doctest::Approx(0.3));
    CHECK(tp.prob_less(-1.0) == 0.0);
    CHECK(tp.prob_greater(2.0) == 0.0);
}

TEST_CASE("analytic distributions: validation") {
    CHECK_THROWS_AS(AnalyticDist(Uniform{1.0, 1.0}), InvalidSpecError);
    CHECK_THROWS_AS(AnalyticDist(Gaussian{0.0, 0.0}), InvalidSpecError);
    CHECK_THROWS_AS(AnalyticDist(TwoPoint{0.0, 1.5, 1.0}), InvalidSpecError);
    CHECK_THROWS_AS(AnalyticDist(Exponential{-1.0}), InvalidSpecError);
    CHECK_THROWS_AS(AnalyticDist(Exponential{1.0}).shifted(1.0), DomainError);
}
