#include "cptrl/envs/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <string>

#include "cptrl/errors.hpp"

namespace cptrl {

void TrafficNetwork::validate() const {
    if (junctions.empty() || lanes == 0 || paths.empty()) {
        throw InvalidSpecError("traffic network needs junctions, lanes and paths");
    }
    std::vector<int> owner(lanes, -1);
    for (std::size_t j = 0; j < junctions.size(); ++j) {
        for (const auto& cfg : junctions[j].green) {
            for (std::size_t lane : cfg) {
                if (lane >= lanes) {
                    throw InvalidSpecError("junction " + std::to_string(j) + " references unknown lane");
                }
                if (owner[lane] != -1 && owner[lane] != static_cast<int>(j)) {
                    throw InvalidSpecError("lane " + std::to_string(lane) + " belongs to two junctions");
                }
                owner[lane] = static_cast<int>(j);
            }
        }
    }
    for (std::size_t lane = 0; lane < lanes; ++lane) {
        if (owner[lane] == -1) {
            throw InvalidSpecError("lane " + std::to_string(lane) + " is never green");
        }
    }
    for (const auto& p : paths) {
        if (p.empty()) {
            throw InvalidSpecError("paths must contain at least one lane");
        }
        for (std::size_t lane : p) {
            if (lane >= lanes) {
                throw InvalidSpecError("path references unknown lane");
            }
        }
    }
}

TrafficNetwork grid_network(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        throw InvalidSpecError("grid needs at least one row and one column");
    }
    // Lane of approach `dir` at junction (r, c): 0 southbound, 1 northbound,
    // 2 eastbound, 3 westbound.
    auto lane = [cols](std::size_t r, std::size_t c, std::size_t dir) { return (r * cols + c) * 4 + dir; };
    TrafficNetwork net;
    net.lanes = rows * cols * 4;
    net.junctions.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            auto& j = net.junctions[r * cols + c];
            j.green[0] = {lane(r, c, 0), lane(r, c, 1)};
            j.green[1] = {lane(r, c, 2), lane(r, c, 3)};
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::size_t> east;
        std::vector<std::size_t> west;
        for (std::size_t c = 0; c < cols; ++c) {
            east.push_back(lane(r, c, 2));
            west.push_back(lane(r, cols - 1 - c, 3));
        }
        net.paths.push_back(east);
        net.paths.push_back(west);
    }
    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<std::size_t> south;
        std::vector<std::size_t> north;
        for (std::size_t r = 0; r < rows; ++r) {
            south.push_back(lane(r, c, 0));
            north.push_back(lane(rows - 1 - r, c, 1));
        }
        net.paths.push_back(south);
        net.paths.push_back(north);
    }
    return net;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const TrafficConfig& c) {
    j = {{"rows", c.rows},
         {"cols", c.cols},
         {"rate_east_west", c.rate_east_west},
         {"rate_north_south", c.rate_north_south},
         {"arrival_rates", c.arrival_rates},
         {"service_per_step", c.service_per_step},
         {"path_weights", c.path_weights},
         {"queue_low", c.queue_low},
         {"queue_high", c.queue_high},
         {"elapsed_threshold", c.elapsed_threshold},
         {"baseline_cycle", c.baseline_cycle},
         {"baseline_seed", c.baseline_seed},
         {"baseline_horizon", c.baseline_horizon},
         {"baseline_replications", c.baseline_replications}};
    if (c.network) {
        nlohmann::json junctions = nlohmann::json::array();
        for (const auto& jn : c.network->junctions) {
            junctions.push_back({{"green", {jn.green[0], jn.green[1]}}});
        }
        j["network"] = {{"lanes", c.network->lanes}, {"junctions", junctions}, {"paths", c.network->paths}};
    }
}

void from_json(const nlohmann::json& j, TrafficConfig& c) {
    const TrafficConfig d;
    c.rows = j.value("rows", d.rows);
    c.cols = j.value("cols", d.cols);
    c.rate_east_west = j.value("rate_east_west", d.rate_east_west);
    c.rate_north_south = j.value("rate_north_south", d.rate_north_south);
    c.arrival_rates = j.value("arrival_rates", d.arrival_rates);
    c.service_per_step = j.value("service_per_step", d.service_per_step);
    c.path_weights = j.value("path_weights", d.path_weights);
    c.queue_low = j.value("queue_low", d.queue_low);
    c.queue_high = j.value("queue_high", d.queue_high);
    c.elapsed_threshold = j.value("elapsed_threshold", d.elapsed_threshold);
    c.baseline_cycle = j.value("baseline_cycle", d.baseline_cycle);
    c.baseline_seed = j.value("baseline_seed", d.baseline_seed);
    c.baseline_horizon = j.value("baseline_horizon", d.baseline_horizon);
    c.baseline_replications = j.value("baseline_replications", d.baseline_replications);
    c.network.reset();
    if (j.contains("network") && !j.at("network").is_null()) {
        const auto& jn = j.at("network");
        TrafficNetwork net;
        net.lanes = jn.at("lanes").get<std::size_t>();
        for (const auto& junction : jn.at("junctions")) {
            TrafficNetwork::Junction x;
            const auto& g = junction.at("green");
            if (g.size() != 2) {
                throw InvalidSpecError("each junction needs exactly two sign configurations");
            }
            x.green[0] = g.at(0).get<std::vector<std::size_t>>();
            x.green[1] = g.at(1).get<std::vector<std::size_t>>();
            net.junctions.push_back(std::move(x));
        }
        net.paths = jn.at("paths").get<std::vector<std::vector<std::size_t>>>();
        c.network = std::move(net);
    }
}

// ---------------------------------------------------------------------------
// Controllers
// ---------------------------------------------------------------------------

std::size_t BoltzmannSignalController::choose(std::size_t, std::size_t, std::span<const double> features_cfg0,
                                              std::span<const double> features_cfg1, RngStream& rng) const {
    const double scores[2] = {policy_.score(features_cfg0), policy_.score(features_cfg1)};
    const std::vector<double> p = softmax(scores);
    return sample_index(p, rng);
}

std::size_t FixedCycleController::choose(std::size_t, std::size_t step, std::span<const double>,
                                         std::span<const double>, RngStream&) const {
    return (step / cycle_) % 2;
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

TrafficGrid::TrafficGrid(TrafficConfig config) : config_(std::move(config)) {
    network_ = config_.network ? *config_.network : grid_network(config_.rows, config_.cols);
    network_.validate();
    const std::size_t m = network_.paths.size();

    if (!config_.arrival_rates.empty()) {
        if (config_.arrival_rates.size() != m) {
            throw InvalidSpecError("arrival_rates needs one rate per path");
        }
        arrival_rates_ = config_.arrival_rates;
    } else if (!config_.network) {
        // grid_network lists the 2 * rows east/west paths first.
        arrival_rates_.assign(m, config_.rate_north_south);
        std::fill_n(arrival_rates_.begin(), 2 * config_.rows, config_.rate_east_west);
    } else {
        throw InvalidSpecError("custom networks need explicit arrival_rates");
    }
    for (double r : arrival_rates_) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw InvalidSpecError("arrival rates must be finite and nonnegative");
        }
    }

    if (config_.path_weights.empty()) {
        path_weights_.assign(m, 1.0 / static_cast<double>(m));
    } else {
        if (config_.path_weights.size() != m) {
            throw InvalidSpecError("path_weights needs one weight per path");
        }
        path_weights_ = config_.path_weights;
        const double total = std::accumulate(path_weights_.begin(), path_weights_.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9 ||
            std::any_of(path_weights_.begin(), path_weights_.end(), [](double w) { return !(w >= 0.0); })) {
            throw InvalidSpecError("path weights must be nonnegative and sum to 1");
        }
    }
    if (config_.service_per_step == 0) {
        throw InvalidSpecError("service_per_step must be positive");
    }
    if (config_.queue_low > config_.queue_high) {
        throw InvalidSpecError("queue_low must not exceed queue_high");
    }
    if (config_.baseline_cycle == 0) {
        throw InvalidSpecError("baseline_cycle must be positive");
    }

    // Reference delays of the pre-timed controller: per-path mean over all
    // vehicles of `baseline_replications` dedicated-seed episodes.
    baseline_.assign(m, 0.0);
    const FixedCycleController fixed(config_.baseline_cycle);
    std::vector<double> total(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (std::size_t r = 0; r < config_.baseline_replications; ++r) {
        RngStream rng(config_.baseline_seed, r, StreamRole::Baseline);
        const auto delays = simulate_delays(fixed, config_.baseline_horizon, rng);
        for (std::size_t p = 0; p < m; ++p) {
            for (double d : delays[p]) total[p] += d;
            count[p] += delays[p].size();
        }
    }
    for (std::size_t p = 0; p < m; ++p) {
        baseline_[p] = count[p] > 0 ? total[p] / static_cast<double>(count[p]) : 0.0;
    }
}

std::vector<double> TrafficGrid::features(std::size_t junction, std::size_t config, std::span<const std::size_t> queues,
                                          std::span<const std::size_t> red_elapsed) const {
    const auto& lanes = network_.junctions.at(junction).green.at(config);
    std::size_t q = 0;
    std::size_t waited = 0;
    for (std::size_t lane : lanes) {
        q += queues[lane];
        waited = std::max(waited, red_elapsed[lane]);
    }
    const std::size_t bin = q <= config_.queue_low ? 0 : (q <= config_.queue_high ? 1 : 2);
    const std::size_t flag = waited >= config_.elapsed_threshold ? 1 : 0;
    std::vector<double> phi(feature_dim(), 0.0);
    phi[((junction * 2 + config) * 3 + bin) * 2 + flag] = 1.0;
    return phi;
}

namespace {

struct Vehicle {
    std::uint32_t path;
    std::uint32_t hop;
    std::int64_t arrival;
};

}  // namespace

std::vector<std::vector<double>> TrafficGrid::simulate_delays(const SignalController& controller, std::size_t horizon,
                                                              RngStream& rng, std::vector<StepCounts>* steps) const {
    const std::size_t m = network_.paths.size();
    std::vector<std::deque<Vehicle>> queues(network_.lanes);
    std::vector<std::size_t> queue_len(network_.lanes, 0);
    std::vector<std::size_t> red_elapsed(network_.lanes, 0);
    std::vector<char> green(network_.lanes, 0);
    std::vector<std::vector<double>> delays(m);
    std::vector<std::poisson_distribution<std::uint32_t>> arrivals;
    arrivals.reserve(m);
    for (double r : arrival_rates_) {
        arrivals.emplace_back(r > 0.0 ? r : 1.0);
    }
    std::vector<Vehicle> moved;
    StepCounts counts;
    if (steps) {
        steps->clear();
        steps->reserve(horizon);
    }

    for (std::size_t t = 0; t < horizon; ++t) {
        const auto now = static_cast<std::int64_t>(t);
        for (std::size_t p = 0; p < m; ++p) {
            if (arrival_rates_[p] <= 0.0) continue;
            const std::uint32_t k = arrivals[p](rng);
            const std::size_t first = network_.paths[p].front();
            for (std::uint32_t v = 0; v < k; ++v) {
                queues[first].push_back({static_cast<std::uint32_t>(p), 0, now});
            }
            counts.injected += k;
        }
        for (std::size_t lane = 0; lane < network_.lanes; ++lane) {
            queue_len[lane] = queues[lane].size();
        }

        std::fill(green.begin(), green.end(), 0);
        for (std::size_t j = 0; j < network_.junctions.size(); ++j) {
            const auto f0 = features(j, 0, queue_len, red_elapsed);
            const auto f1 = features(j, 1, queue_len, red_elapsed);
            const std::size_t cfg = controller.choose(j, t, f0, f1, rng);
            for (std::size_t lane : network_.junctions[j].green[cfg]) {
                green[lane] = 1;
            }
        }

        moved.clear();
        for (std::size_t lane = 0; lane < network_.lanes; ++lane) {
            if (!green[lane]) {
                ++red_elapsed[lane];
                continue;
            }
            red_elapsed[lane] = 0;
            auto& q = queues[lane];
            for (std::size_t s = 0; s < config_.service_per_step && !q.empty(); ++s) {
                Vehicle v = q.front();
                q.pop_front();
                ++v.hop;
                const auto& path = network_.paths[v.path];
                if (v.hop == path.size()) {
                    // Departs at the end of this step; each served hop costs
                    // one step of free-flow time.
                    const auto travel = now + 1 - v.arrival;
                    delays[v.path].push_back(static_cast<double>(travel - static_cast<std::int64_t>(v.hop)));
                    ++counts.departed;
                } else {
                    moved.push_back(v);
                }
            }
        }
        for (const Vehicle& v : moved) {
            queues[network_.paths[v.path][v.hop]].push_back(v);
        }
        if (steps) {
            counts.queued = 0;
            for (const auto& q : queues) counts.queued += q.size();
            steps->push_back(counts);
        }
    }

    // Vehicles still queued contribute the delay accrued so far.
    const auto end = static_cast<std::int64_t>(horizon);
    for (const auto& q : queues) {
        for (const Vehicle& v : q) {
            delays[v.path].push_back(static_cast<double>(end - v.arrival - static_cast<std::int64_t>(v.hop)));
        }
    }
    return delays;
}

TrafficEpisode traffic_episode(const TrafficGrid& grid, const BoltzmannPolicy& policy, std::size_t horizon,
                               RngStream& rng) {
    if (horizon == 0) {
        throw DomainError("traffic horizon must be at least one step");
    }
    if (policy.theta().size() != grid.feature_dim()) {
        throw DomainError("policy dimension does not match the traffic features");
    }
    const BoltzmannSignalController controller(policy);
    TrafficEpisode ep;
    ep.delay_differences = grid.simulate_delays(controller, horizon, rng, &ep.steps);
    const auto& base = grid.baseline_delays();
    for (std::size_t p = 0; p < ep.delay_differences.size(); ++p) {
        for (double& d : ep.delay_differences[p]) {
            d = base[p] - d;
        }
    }
    return ep;
}

}  // namespace cptrl
