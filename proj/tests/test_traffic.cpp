#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <doctest.h>

#include "cptrl/envs/traffic.hpp"
#include "cptrl/errors.hpp"

using namespace cptrl;

namespace {

TrafficConfig small_config() {
    TrafficConfig c;
    c.baseline_replications = 3;
    c.baseline_horizon = 200;
    return c;
}

// One lane that is green under both configurations.
TrafficConfig single_lane(double rate, std::size_t service) {
    TrafficConfig c;
    TrafficNetwork net;
    net.lanes = 1;
    net.junctions.push_back({{std::vector<std::size_t>{0}, std::vector<std::size_t>{0}}});
    net.paths = {{0}};
    c.network = net;
    c.arrival_rates = {rate};
    c.service_per_step = service;
    c.baseline_replications = 2;
    c.baseline_horizon = 100;
    return c;
}

std::string golden_text(const TrafficGrid& grid, const TrafficEpisode& ep) {
    std::ostringstream os;
    os.precision(17);
    os << "path,index,value\n";
    for (std::size_t p = 0; p < grid.num_paths(); ++p) os << p << ",baseline," << grid.baseline_delays()[p] << "\n";
    for (std::size_t p = 0; p < ep.delay_differences.size(); ++p) {
        for (std::size_t i = 0; i < ep.delay_differences[p].size(); ++i) {
            os << p << "," << i << "," << ep.delay_differences[p][i] << "\n";
        }
    }
    return os.str();
}

}  // namespace

TEST_CASE("grid network layout") {
    const auto net = grid_network(2, 2);
    CHECK(net.lanes == 16);
    CHECK(net.junctions.size() == 4);
    CHECK(net.paths.size() == 8);
    CHECK_NOTHROW(net.validate());
    for (const auto& p : net.paths) CHECK(p.size() == 2);
    std::vector<int> served(16, 0);
    for (const auto& j : net.junctions)
        for (const auto& cfg : j.green)
            for (auto lane : cfg) ++served[lane];
    for (int s : served) CHECK(s == 1);

    const auto wide = grid_network(1, 3);
    CHECK(wide.paths.size() == 2 + 6);
    CHECK(wide.paths.front().size() == 3);
    CHECK_THROWS_AS(grid_network(0, 2), InvalidSpecError);
}

TEST_CASE("traffic grid: defaults and validation") {
    const TrafficGrid grid(small_config());
    CHECK(grid.feature_dim() == 48);
    CHECK(grid.num_paths() == 8);
    for (double w : grid.path_weights()) CHECK(w == 0.125);
    CHECK(grid.arrival_rates()[0] == 0.8);
    CHECK(grid.arrival_rates()[3] == 0.8);
    CHECK(grid.arrival_rates()[4] == 0.4);
    for (double b : grid.baseline_delays()) CHECK(b > 0.0);

    auto c = small_config();
    c.path_weights = {0.5, 0.5};
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c.path_weights.assign(8, 0.1);
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = small_config();
    c.service_per_step = 0;
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = small_config();
    c.queue_low = 7;
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = small_config();
    c.arrival_rates = {1.0};
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = small_config();
    c.rate_east_west = -1.0;
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = single_lane(0.5, 1);
    c.arrival_rates.clear();
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = single_lane(0.5, 1);
    c.network->lanes = 2;
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);
    c = single_lane(0.5, 1);
    c.network->paths = {{3}};
    CHECK_THROWS_AS(TrafficGrid{c}, InvalidSpecError);

    TrafficNetwork shared = grid_network(1, 2);
    shared.junctions[1].green[0].push_back(0);
    CHECK_THROWS_AS(shared.validate(), InvalidSpecError);
}

TEST_CASE("traffic features are one-hot") {
    const TrafficGrid grid(small_config());
    std::vector<std::size_t> queues(16, 0);
    std::vector<std::size_t> red(16, 0);
    auto hot = [](const std::vector<double>& phi) {
        CHECK(std::accumulate(phi.begin(), phi.end(), 0.0) == 1.0);
        return static_cast<std::size_t>(std::find(phi.begin(), phi.end(), 1.0) - phi.begin());
    };
    CHECK(hot(grid.features(0, 0, queues, red)) == 0);
    CHECK(hot(grid.features(3, 1, queues, red)) == 3 * 12 + 6);
    // Junction 1, configuration 0 serves lanes 4 and 5.
    queues[4] = 2;
    queues[5] = 2;
    CHECK(hot(grid.features(1, 0, queues, red)) == 12 + 2);
    queues[5] = 5;
    CHECK(hot(grid.features(1, 0, queues, red)) == 12 + 4);
    red[4] = 5;
    CHECK(hot(grid.features(1, 0, queues, red)) == 12 + 5);
    red[4] = 4;
    CHECK(hot(grid.features(1, 0, queues, red)) == 12 + 4);
}

TEST_CASE("traffic: no arrivals means no vehicles") {
    auto c = small_config();
    c.rate_east_west = 0.0;
    c.rate_north_south = 0.0;
    const TrafficGrid grid(c);
    for (double b : grid.baseline_delays()) CHECK(b == 0.0);
    RngStream rng(1);
    const auto ep = traffic_episode(grid, BoltzmannPolicy(std::vector<double>(48, 1.0)), 50, rng);
    for (const auto& p : ep.delay_differences) CHECK(p.empty());
    CHECK(ep.steps.size() == 50);
    CHECK(ep.steps.back().injected == 0);
}

TEST_CASE("traffic: an always-green lane never delays") {
    const TrafficGrid grid(single_lane(0.5, 20));
    CHECK(grid.baseline_delays()[0] == 0.0);
    RngStream rng(2);
    const auto ep = traffic_episode(grid, BoltzmannPolicy(std::vector<double>(12, 0.0)), 300, rng);
    REQUIRE(ep.delay_differences[0].size() > 100);
    for (double d : ep.delay_differences[0]) CHECK(d == 0.0);
}

TEST_CASE("traffic: vehicles are conserved at every step") {
    const TrafficGrid grid(small_config());
    std::vector<double> theta(48);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = 0.1 * static_cast<double>(i % 7);
    RngStream rng(3, 0, StreamRole::Test);
    const auto ep = traffic_episode(grid, BoltzmannPolicy(theta), 400, rng);
    REQUIRE(ep.steps.size() == 400);
    std::uint64_t prev_in = 0;
    std::uint64_t prev_out = 0;
    for (const auto& s : ep.steps) {
        CHECK(s.injected == s.departed + s.queued);
        CHECK(s.injected >= prev_in);
        CHECK(s.departed >= prev_out);
        prev_in = s.injected;
        prev_out = s.departed;
    }
    std::size_t total = 0;
    for (const auto& p : ep.delay_differences) total += p.size();
    CHECK(total == ep.steps.back().injected);
    // Delays are nonnegative, so no difference exceeds the baseline.
    for (std::size_t p = 0; p < grid.num_paths(); ++p)
        for (double d : ep.delay_differences[p]) CHECK(d <= grid.baseline_delays()[p]);
}

TEST_CASE("traffic: determinism and errors") {
    const TrafficGrid grid(small_config());
    const BoltzmannPolicy pol(std::vector<double>(48, 1.0));
    RngStream a(9, 1, StreamRole::Test);
    RngStream b(9, 1, StreamRole::Test);
    CHECK(traffic_episode(grid, pol, 100, a).delay_differences == traffic_episode(grid, pol, 100, b).delay_differences);
    RngStream r(1);
    CHECK_THROWS_AS(traffic_episode(grid, pol, 0, r), DomainError);
    CHECK_THROWS_AS(traffic_episode(grid, BoltzmannPolicy(std::vector<double>(3, 1.0)), 10, r), DomainError);
}

TEST_CASE("traffic config JSON round trip") {
    auto c = single_lane(0.3, 4);
    c.path_weights = {1.0};
    c.queue_high = 9;
    nlohmann::json j = c;
    const auto back = j.get<TrafficConfig>();
    CHECK(nlohmann::json(back) == j);
    REQUIRE(back.network.has_value());
    CHECK(back.network->junctions[0].green[1] == std::vector<std::size_t>{0});
    CHECK(back.arrival_rates == std::vector<double>{0.3});

    const auto d = nlohmann::json::parse(R"({"rows": 1})").get<TrafficConfig>();
    CHECK(d.rows == 1);
    CHECK(d.cols == 2);
    CHECK_FALSE(d.network.has_value());
    CHECK_THROWS(nlohmann::json::parse(R"({"network": {"lanes": 1, "junctions": [{"green": [[0]]}], "paths": [[0]]}})")
                     .get<TrafficConfig>());
}

TEST_CASE("traffic golden episode") {
    const TrafficGrid grid(small_config());
    std::vector<double> theta(48);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::sin(static_cast<double>(i));
    RngStream rng(20160601, 7, StreamRole::Test);
    const auto ep = traffic_episode(grid, BoltzmannPolicy(theta), 60, rng);
    const std::string text = golden_text(grid, ep);
    const std::filesystem::path file = std::filesystem::path(CPTRL_TEST_DATA_DIR) / "traffic_golden.csv";
    if (std::getenv("CPTRL_REGENERATE_GOLDEN")) {
        std::ofstream(file) << text;
    }
    std::ifstream in(file);
    REQUIRE(in.good());
    std::stringstream expected;
    expected << in.rdbuf();
    CHECK(text == expected.str());
}
