#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cptrl/envs/return_env.hpp"

namespace cptrl {

struct SspAction {
    double reward = 0.0;
    std::vector<double> next;      // transition probabilities over all states
    std::vector<double> features;  // phi(s, a)
};

struct SspState {
    std::vector<SspAction> actions;
};

/// Episodic stochastic shortest path problem on states 0..L, where 0 is the
/// reward-free absorbing state. Episodes that have not been absorbed after
/// `max_steps` transitions are truncated and flagged.
class SspMdp {
public:
    // states[0] must have no actions. Every row of every kernel must sum to
    // 1 within 1e-9; all feature vectors share one length.
    SspMdp(std::vector<SspState> states, std::size_t start, std::size_t max_steps = 10000);

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t feature_dim() const noexcept { return feature_dim_; }
    std::size_t start() const noexcept { return start_; }
    std::size_t max_steps() const noexcept { return max_steps_; }
    const SspState& state(std::size_t s) const { return states_.at(s); }

private:
    std::vector<SspState> states_;
    std::size_t start_;
    std::size_t max_steps_;
    std::size_t feature_dim_ = 0;
};

void from_json(const nlohmann::json& j, SspMdp& mdp);
SspMdp ssp_from_json(const nlohmann::json& j);

/// Softmax with max subtraction; exp never overflows.
std::vector<double> softmax(std::span<const double> scores);

/// pi_theta(s, a) proportional to exp(theta^T phi(s, a)).
class BoltzmannPolicy {
public:
    explicit BoltzmannPolicy(std::vector<double> theta) : theta_(std::move(theta)) {}

    const std::vector<double>& theta() const noexcept { return theta_; }
    double score(std::span<const double> features) const;

    // One feature vector per available action.
    std::vector<double> probs(std::span<const std::vector<double>> action_features) const;

private:
    std::vector<double> theta_;
};

std::vector<double> boltzmann_probs(const BoltzmannPolicy& policy, const SspMdp& mdp, std::size_t state);

// Index drawn from a probability vector (sums to 1).
std::size_t sample_index(std::span<const double> probs, RngStream& rng);

struct EpisodeResult {
    double ret = 0.0;
    std::size_t length = 0;
    bool truncated = false;
};

/// Total reward of one episode from mdp.start() until absorption or the cap.
EpisodeResult ssp_episode(const SspMdp& mdp, const BoltzmannPolicy& policy, RngStream& rng);

/// Episode returns of the Boltzmann policy theta as a ReturnEnv.
class SspEnv final : public ReturnEnv {
public:
    explicit SspEnv(SspMdp mdp) : mdp_(std::move(mdp)) {}

    std::size_t dimension() const override { return mdp_.feature_dim(); }
    void sample_into(std::span<const double> theta, std::span<double> out, RngStream& rng) const override;

    const SspMdp& mdp() const noexcept { return mdp_; }

private:
    SspMdp mdp_;
};

/// States {0, 1}. In state 1 action A absorbs with reward 0; action B pays 1
/// and absorbs with probability `absorb_prob`, otherwise stays. Features are
/// one-hot: phi(1, A) = (1, 0), phi(1, B) = (0, 1).
SspMdp two_state_chain(double absorb_prob = 0.5, std::size_t max_steps = 10000);

}  // namespace cptrl
