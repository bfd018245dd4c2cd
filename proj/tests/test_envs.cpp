#include <cmath>
#include <numeric>

#include <doctest.h>

#include "cptrl/envs/analytic.hpp"
#include "cptrl/envs/ssp.hpp"
#include "cptrl/errors.hpp"
#include "oracles.hpp"

using namespace cptrl;

TEST_CASE("gaussian mean env: sample mean at theta = 2") {
    const auto env = gaussian_mean_env();
    RngStream rng(11, 0, StreamRole::Sampling);
    const std::vector<double> theta = {2.0};
    const auto xs = sample_returns(env, theta, 100000, rng);
    // N(0, 0.1^2): 3 SE of the mean is about 0.00095.
    CHECK(std::abs(oracle::mean(xs)) <= 0.004);
    CHECK(oracle::stddev(xs) == doctest::Approx(0.1).epsilon(0.02));
    CHECK(env.mean(std::vector<double>{1.0}) == -1.0);
    CHECK(env.mean(std::vector<double>{3.5}) == -2.25);
}

TEST_CASE("quadratic env: mean, determinism and errors") {
    const auto bowl = quadratic_bowl_env();
    CHECK(bowl.dimension() == 2);
    CHECK(bowl.mean(std::vector<double>{2.0, 2.0}) == 0.0);
    CHECK(bowl.mean(std::vector<double>{1.0, 3.0}) == doctest::Approx(-5.5));

    RngStream a(5, 2, StreamRole::TrajPlus);
    RngStream b(5, 2, StreamRole::TrajPlus);
    const std::vector<double> theta = {0.3, 1.1};
    CHECK(sample_returns(bowl, theta, 50, a) == sample_returns(bowl, theta, 50, b));
    RngStream c(5, 2, StreamRole::TrajMinus);
    RngStream d(5, 2, StreamRole::TrajPlus);
    CHECK_FALSE(sample_returns(bowl, theta, 50, c) == sample_returns(bowl, theta, 50, d));

    RngStream r(1);
    CHECK(sample_returns(bowl, theta, 1, r).size() == 1);
    CHECK_THROWS_AS(sample_returns(bowl, theta, 0, r), DomainError);
    CHECK_THROWS_AS(sample_returns(bowl, std::vector<double>{1.0}, 3, r), DomainError);
    CHECK_THROWS_AS(sample_returns(bowl, std::vector<double>{1.0, std::nan("")}, 3, r), DomainError);
    CHECK_THROWS_AS(QuadraticGaussianEnv({1.0}, {1.0, 2.0}, 0.1), InvalidSpecError);
    CHECK_THROWS_AS(QuadraticGaussianEnv({1.0}, {1.0}, -0.1), InvalidSpecError);

    const QuadraticGaussianEnv quiet({0.0}, {2.0}, 0.0);
    const auto xs = sample_returns(quiet, std::vector<double>{3.0}, 4, r);
    CHECK(xs == std::vector<double>(4, -9.0));
}

TEST_CASE("softmax and Boltzmann probabilities") {
    const std::vector<double> s = {std::log(3.0), 0.0};
    const auto p = softmax(s);
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));

    const std::vector<double> shifted = {std::log(3.0) + 700.0, 700.0};
    const auto q = softmax(shifted);
    CHECK(q[0] == doctest::Approx(0.75).epsilon(1e-12));
    const auto huge = softmax(std::vector<double>{1e6, 0.0});
    CHECK(huge[0] == 1.0);
    CHECK(huge[1] == 0.0);
    CHECK_THROWS_AS(softmax(std::vector<double>{}), DomainError);

    const BoltzmannPolicy pol({std::log(3.0), 0.0});
    const std::vector<std::vector<double>> feats = {{1.0, 0.0}, {0.0, 1.0}};
    const auto pp = pol.probs(feats);
    CHECK(pp[0] == doctest::Approx(0.75));
    CHECK(std::accumulate(pp.begin(), pp.end(), 0.0) == doctest::Approx(1.0));
    CHECK(pol.score(std::vector<double>{2.0, 5.0}) == doctest::Approx(2.0 * std::log(3.0)));
    CHECK_THROWS_AS(pol.score(std::vector<double>{1.0}), DomainError);
}

TEST_CASE("sample_index frequencies") {
    RngStream rng(3);
    const std::vector<double> p = {0.2, 0.5, 0.3};
    std::vector<double> counts(3, 0.0);
    const int n = 60000;
    for (int k = 0; k < n; ++k) counts[sample_index(p, rng)] += 1.0;
    // Chi-square with 2 degrees of freedom; 13.8 is the 0.999 quantile.
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) chi2 += std::pow(counts[i] - n * p[i], 2) / (n * p[i]);
    CHECK(chi2 < 13.8);

    RngStream r2(4);
    const std::vector<double> degenerate = {0.0, 1.0, 0.0};
    for (int k = 0; k < 100; ++k) CHECK(sample_index(degenerate, r2) == 1);
}

TEST_CASE("ssp: one-step and truncated chains") {
    std::vector<SspState> states(2);
    states[1].actions.push_back({3.0, {1.0, 0.0}, {1.0}});
    const SspMdp one(states, 1);
    RngStream rng(1);
    const auto ep = ssp_episode(one, BoltzmannPolicy({0.0}), rng);
    CHECK(ep.ret == 3.0);
    CHECK(ep.length == 1);
    CHECK_FALSE(ep.truncated);

    std::vector<SspState> loop(2);
    loop[1].actions.push_back({1.0, {0.0, 1.0}, {1.0}});
    const SspMdp looping(loop, 1, 5);
    const auto t = ssp_episode(looping, BoltzmannPolicy({0.0}), rng);
    CHECK(t.ret == 5.0);
    CHECK(t.length == 5);
    CHECK(t.truncated);

    CHECK_THROWS_AS(ssp_episode(one, BoltzmannPolicy({0.0, 1.0}), rng), DomainError);
}

TEST_CASE("ssp: validation") {
    std::vector<SspState> bad(2);
    bad[1].actions.push_back({1.0, {0.5, 0.4}, {1.0}});
    CHECK_THROWS_AS(SspMdp(bad, 1), InvalidSpecError);
    bad[1].actions[0].next = {1.0};
    CHECK_THROWS_AS(SspMdp(bad, 1), InvalidSpecError);
    bad[1].actions[0].next = {1.0, 0.0};
    CHECK_NOTHROW(SspMdp(bad, 1));
    CHECK_THROWS_AS(SspMdp(bad, 2), InvalidSpecError);
    CHECK_THROWS_AS(SspMdp(bad, 1, 0), InvalidSpecError);
    bad[1].actions.push_back({1.0, {1.0, 0.0}, {1.0, 2.0}});
    CHECK_THROWS_AS(SspMdp(bad, 1), InvalidSpecError);
    std::vector<SspState> absorbing_acts(2);
    absorbing_acts[0].actions.push_back({0.0, {1.0, 0.0}, {1.0}});
    absorbing_acts[1].actions.push_back({0.0, {1.0, 0.0}, {1.0}});
    CHECK_THROWS_AS(SspMdp(absorbing_acts, 1), InvalidSpecError);
    std::vector<SspState> empty_state(3);
    empty_state[1].actions.push_back({0.0, {1.0, 0.0, 0.0}, {1.0}});
    CHECK_THROWS_AS(SspMdp(empty_state, 1), InvalidSpecError);
}

TEST_CASE("ssp: JSON loading") {
    const auto j = nlohmann::json::parse(R"({
        "start": 1, "max_steps": 50,
        "states": [
            {"actions": []},
            {"actions": [{"reward": 2.5, "next": [1.0, 0.0], "features": [1.0, 0.0]},
                         {"reward": -1.0, "next": [0.5, 0.5], "features": [0.0, 1.0]}]}
        ]})");
    const SspMdp m = ssp_from_json(j);
    CHECK(m.num_states() == 2);
    CHECK(m.feature_dim() == 2);
    CHECK(m.max_steps() == 50);
    CHECK(m.state(1).actions[0].reward == 2.5);
    SspMdp m2 = two_state_chain();
    from_json(j, m2);
    CHECK(m2.state(1).actions[1].next == std::vector<double>{0.5, 0.5});
}

TEST_CASE("ssp: two-state chain expected return") {
    // Choosing B with probability p, E = p (1 + (1 - q) E) with q = 1/2,
    // so E = p / (1 - p/2); p = 1/2 gives 2/3.
    const SspEnv env(two_state_chain());
    RngStream rng(21, 0, StreamRole::Sampling);
    const std::vector<double> theta = {0.0, 0.0};
    const auto xs = sample_returns(env, theta, 200000, rng);
    const double se = oracle::stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
    CHECK(std::abs(oracle::mean(xs) - 2.0 / 3.0) <= 3.0 * se);

    const std::vector<double> tilt = {0.0, std::log(3.0)};  // p = 3/4
    const auto ys = sample_returns(env, tilt, 200000, rng);
    const double se2 = oracle::stddev(ys) / std::sqrt(static_cast<double>(ys.size()));
    CHECK(std::abs(oracle::mean(ys) - 0.75 / (1.0 - 0.375)) <= 3.0 * se2);

    // A dominant score for action A almost always ends with zero return.
    const auto zs = sample_returns(env, std::vector<double>{10.0, 0.0}, 10000, rng);
    const auto zeros = std::count(zs.begin(), zs.end(), 0.0);
    CHECK(zeros >= 9900);
}

TEST_CASE("ssp: actions follow Boltzmann probabilities independently across steps") {
    // Action B absorbs with probability 1/2; the episode length of B-runs
    // tests that successive choices are independent draws.
    const SspMdp chain = two_state_chain(0.0, 2);
    const BoltzmannPolicy pol({0.0, 0.0});
    RngStream rng(8);
    // Two steps: counts of returns 0, 1, 2 must be 1/2, 1/4, 1/4.
    std::vector<double> counts(3, 0.0);
    const int n = 40000;
    for (int k = 0; k < n; ++k) counts[static_cast<std::size_t>(ssp_episode(chain, pol, rng).ret)] += 1.0;
    const std::vector<double> expect = {0.5, 0.25, 0.25};
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) chi2 += std::pow(counts[i] - n * expect[i], 2) / (n * expect[i]);
    CHECK(chi2 < 13.8);
}

TEST_CASE("sample_returns enforces the sampler's domain") {
    class Bounded final : public ReturnEnv {
    public:
        std::size_t dimension() const override { return 1; }
        std::optional<BoxConstraint> domain() const override { return BoxConstraint::uniform(1, 0.0, 1.0); }
        void sample_into(std::span<const double> theta, std::span<double> out, RngStream&) const override {
            for (double& x : out) x = theta[0];
        }
    };
    const Bounded env;
    RngStream rng(1);
    CHECK(sample_returns(env, std::vector<double>{0.5}, 3, rng) == std::vector<double>(3, 0.5));
    CHECK_THROWS_AS(sample_returns(env, std::vector<double>{1.5}, 3, rng), DomainError);
}
