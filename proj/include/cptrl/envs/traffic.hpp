#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cptrl/envs/ssp.hpp"
#include "cptrl/rng.hpp"

namespace cptrl {

/// Signalled road network. Every junction has two sign configurations
/// (0: north-south green, 1: east-west green); `green[c]` lists the lanes
/// served under configuration c. A path is the sequence of lanes a vehicle
/// queues on between two edge nodes.
struct TrafficNetwork {
    struct Junction {
        std::array<std::vector<std::size_t>, 2> green;
    };
    std::vector<Junction> junctions;
    std::size_t lanes = 0;
    std::vector<std::vector<std::size_t>> paths;

    void validate() const;
};

/// rows x cols grid with one lane per approach direction. Through traffic in
/// each of the four directions forms one path per row/column, so a 2x2 grid
/// has 16 lanes and 8 paths.
TrafficNetwork grid_network(std::size_t rows, std::size_t cols);

struct TrafficConfig {
    std::size_t rows = 2;
    std::size_t cols = 2;
    // Poisson arrival rate (vehicles per step) of east-west and north-south
    // paths, used unless `arrival_rates` lists one rate per path.
    double rate_east_west = 0.8;
    double rate_north_south = 0.4;
    std::vector<double> arrival_rates;
    std::size_t service_per_step = 2;
    // Path proportions mu; uniform when empty.
    std::vector<double> path_weights;
    // Queue bins: q <= low, q <= high, above.
    std::size_t queue_low = 2;
    std::size_t queue_high = 6;
    std::size_t elapsed_threshold = 5;
    // Pre-timed controller: every junction switches configuration after
    // `baseline_cycle` steps.
    std::size_t baseline_cycle = 5;
    std::uint64_t baseline_seed = 20160601;
    std::size_t baseline_horizon = 1000;
    std::size_t baseline_replications = 20;

    // When set, replaces the grid built from rows/cols.
    std::optional<TrafficNetwork> network;
};

void to_json(nlohmann::json& j, const TrafficConfig& c);
void from_json(const nlohmann::json& j, TrafficConfig& c);

struct StepCounts {
    std::uint64_t injected = 0;  // cumulative arrivals
    std::uint64_t departed = 0;  // cumulative departures
    std::uint64_t queued = 0;    // vehicles in queues after the step
};

struct TrafficEpisode {
    // Per path: baseline delay minus actual delay, one entry per vehicle
    // (departed, or still queued at the horizon with its accrued delay).
    std::vector<std::vector<double>> delay_differences;
    std::vector<StepCounts> steps;
};

/// Signal decision rule applied at every junction and step.
class SignalController {
public:
    virtual ~SignalController() = default;
    virtual std::size_t choose(std::size_t junction, std::size_t step, std::span<const double> features_cfg0,
                               std::span<const double> features_cfg1, RngStream& rng) const = 0;
};

/// Immutable traffic template: network, parameters and the cached delays of
/// the pre-timed controller, which serve as the per-path reference point.
class TrafficGrid {
public:
    explicit TrafficGrid(TrafficConfig config);

    const TrafficConfig& config() const noexcept { return config_; }
    const TrafficNetwork& network() const noexcept { return network_; }
    std::size_t num_paths() const noexcept { return network_.paths.size(); }
    const std::vector<double>& path_weights() const noexcept { return path_weights_; }
    const std::vector<double>& arrival_rates() const noexcept { return arrival_rates_; }
    const std::vector<double>& baseline_delays() const noexcept { return baseline_; }

    // Length of theta: junctions x 2 configurations x 3 queue bins x 2
    // elapsed-time flags.
    std::size_t feature_dim() const noexcept { return network_.junctions.size() * 12; }

    // One-hot feature of configuration c at junction j given lane queues and
    // red-elapsed timers (length feature_dim()).
    std::vector<double> features(std::size_t junction, std::size_t config, std::span<const std::size_t> queues,
                                 std::span<const std::size_t> red_elapsed) const;

    // Raw per-path delays under an arbitrary controller.
    std::vector<std::vector<double>> simulate_delays(const SignalController& controller, std::size_t horizon,
                                                     RngStream& rng, std::vector<StepCounts>* steps = nullptr) const;

private:
    TrafficConfig config_;
    TrafficNetwork network_;
    std::vector<double> arrival_rates_;
    std::vector<double> path_weights_;
    std::vector<double> baseline_;
};

/// Boltzmann policy over joint sign configurations with additive per-junction
/// features; the joint softmax factorizes into one softmax per junction.
class BoltzmannSignalController final : public SignalController {
public:
    explicit BoltzmannSignalController(BoltzmannPolicy policy) : policy_(std::move(policy)) {}
    std::size_t choose(std::size_t junction, std::size_t step, std::span<const double> features_cfg0,
                       std::span<const double> features_cfg1, RngStream& rng) const override;

private:
    BoltzmannPolicy policy_;
};

class FixedCycleController final : public SignalController {
public:
    explicit FixedCycleController(std::size_t cycle) : cycle_(cycle) {}
    std::size_t choose(std::size_t junction, std::size_t step, std::span<const double> features_cfg0,
                       std::span<const double> features_cfg1, RngStream& rng) const override;

private:
    std::size_t cycle_;
};

/// One episode of `horizon` steps under the Boltzmann policy. Returns
/// per-path delay differences relative to the pre-timed baseline.
TrafficEpisode traffic_episode(const TrafficGrid& grid, const BoltzmannPolicy& policy, std::size_t horizon,
                               RngStream& rng);

}  // namespace cptrl
