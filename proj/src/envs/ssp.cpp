#include "cptrl/envs/ssp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cptrl/errors.hpp"

namespace cptrl {

SspMdp::SspMdp(std::vector<SspState> states, std::size_t start, std::size_t max_steps)
    : states_(std::move(states)), start_(start), max_steps_(max_steps) {
    if (states_.empty()) {
        throw InvalidSpecError("SSP needs at least the absorbing state");
    }
    if (!states_[0].actions.empty()) {
        throw InvalidSpecError("state 0 is absorbing and must have no actions");
    }
    if (start_ >= states_.size()) {
        throw InvalidSpecError("start state out of range");
    }
    if (max_steps_ == 0) {
        throw InvalidSpecError("episode cap must be positive");
    }
    bool have_dim = false;
    for (std::size_t s = 1; s < states_.size(); ++s) {
        const auto& actions = states_[s].actions;
        if (actions.empty()) {
            throw InvalidSpecError("state " + std::to_string(s) + " has no actions");
        }
        for (const auto& a : actions) {
            if (!std::isfinite(a.reward)) {
                throw InvalidSpecError("rewards must be finite");
            }
            if (a.next.size() != states_.size()) {
                throw InvalidSpecError("transition row of state " + std::to_string(s) + " has wrong length");
            }
            double total = 0.0;
            for (double p : a.next) {
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw InvalidSpecError("transition probabilities must be finite and nonnegative");
                }
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9) {
                throw InvalidSpecError("transition row of state " + std::to_string(s) + " does not sum to 1");
            }
            if (!have_dim) {
                feature_dim_ = a.features.size();
                have_dim = true;
            } else if (a.features.size() != feature_dim_) {
                throw InvalidSpecError("feature vectors differ in length");
            }
        }
    }
    if (feature_dim_ == 0) {
        throw InvalidSpecError("features must be nonempty");
    }
}

void from_json(const nlohmann::json& j, SspMdp& mdp) { mdp = ssp_from_json(j); }

SspMdp ssp_from_json(const nlohmann::json& j) {
    std::vector<SspState> states;
    for (const auto& js : j.at("states")) {
        SspState st;
        for (const auto& ja : js.at("actions")) {
            SspAction a;
            a.reward = ja.at("reward").get<double>();
            a.next = ja.at("next").get<std::vector<double>>();
            a.features = ja.at("features").get<std::vector<double>>();
            st.actions.push_back(std::move(a));
        }
        states.push_back(std::move(st));
    }
    return SspMdp(std::move(states), j.value("start", std::size_t{1}), j.value("max_steps", std::size_t{10000}));
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) {
        throw DomainError("softmax over an empty action set");
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - top);
        total += p[i];
    }
    for (auto& x : p) {
        x /= total;
    }
    return p;
}

double BoltzmannPolicy::score(std::span<const double> features) const {
    if (features.size() != theta_.size()) {
        throw DomainError("feature and parameter dimensions differ");
    }
    return std::inner_product(features.begin(), features.end(), theta_.begin(), 0.0);
}

std::vector<double> BoltzmannPolicy::probs(std::span<const std::vector<double>> action_features) const {
    std::vector<double> scores;
    scores.reserve(action_features.size());
    for (const auto& f : action_features) {
        scores.push_back(score(f));
    }
    return softmax(scores);
}

std::vector<double> boltzmann_probs(const BoltzmannPolicy& policy, const SspMdp& mdp, std::size_t state) {
    const auto& actions = mdp.state(state).actions;
    if (actions.empty()) {
        throw DomainError("state " + std::to_string(state) + " has no actions");
    }
    std::vector<double> scores;
    scores.reserve(actions.size());
    for (const auto& a : actions) {
        scores.push_back(policy.score(a.features));
    }
    return softmax(scores);
}

std::size_t sample_index(std::span<const double> probs, RngStream& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return i;
        }
    }
    // Rounding left u above the last partial sum; take the last positive entry.
    for (std::size_t i = probs.size(); i-- > 0;) {
        if (probs[i] > 0.0) {
            return i;
        }
    }
    return probs.size() - 1;
}

EpisodeResult ssp_episode(const SspMdp& mdp, const BoltzmannPolicy& policy, RngStream& rng) {
    if (policy.theta().size() != mdp.feature_dim()) {
        throw DomainError("policy dimension does not match the MDP's features");
    }
    EpisodeResult res;
    std::size_t s = mdp.start();
    while (s != 0) {
        if (res.length == mdp.max_steps()) {
            res.truncated = true;
            break;
        }
        const auto& actions = mdp.state(s).actions;
        const std::vector<double> pi = boltzmann_probs(policy, mdp, s);
        const SspAction& a = actions[sample_index(pi, rng)];
        res.ret += a.reward;
        s = sample_index(a.next, rng);
        ++res.length;
    }
    return res;
}

void SspEnv::sample_into(std::span<const double> theta, std::span<double> out, RngStream& rng) const {
    const BoltzmannPolicy policy(std::vector<double>(theta.begin(), theta.end()));
    for (auto& x : out) {
        x = ssp_episode(mdp_, policy, rng).ret;
    }
}

SspMdp two_state_chain(double absorb_prob, std::size_t max_steps) {
    SspState s1;
    s1.actions.push_back({0.0, {1.0, 0.0}, {1.0, 0.0}});
    s1.actions.push_back({1.0, {absorb_prob, 1.0 - absorb_prob}, {0.0, 1.0}});
    return SspMdp({SspState{}, s1}, 1, max_steps);
}

}  // namespace cptrl
