#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cptrl/cpt_model.hpp"
#include "cptrl/envs/traffic.hpp"
#include "cptrl/estimator.hpp"
#include "cptrl/spsa.hpp"

namespace cptrl {

struct CompositeCpt {
    double value = 0.0;
    std::vector<double> per_path;
    // Paths with fewer than two samples; they contribute 0.
    std::vector<std::size_t> flagged;
};

/// sum_i mu_i * C(X_i) over per-path sample lists.
CompositeCpt composite_cpt(std::span<const std::vector<double>> path_samples, std::span<const double> mu,
                           const CptModel& model, const EstimatorConfig& cfg = {});

/// Composite CPT of one traffic episode under the Boltzmann policy theta.
/// The simulation length is fixed; the optimizer's batch size is ignored.
class TrafficObjective final : public CptObjective {
public:
    TrafficObjective(const TrafficGrid& grid, CptModel model, std::size_t horizon, EstimatorConfig cfg = {});

    std::size_t dimension() const override { return grid_.feature_dim(); }
    double evaluate(std::span<const double> theta, std::size_t batch, RngStream& rng) const override;

private:
    const TrafficGrid& grid_;
    CptModel model_;
    std::size_t horizon_;
    EstimatorConfig cfg_;
};

struct Variant {
    std::string name;
    CptModel model;
};

// AVG: identity utility and weights. EUT: loss-averse power utility,
// identity weights. CPT: the same utility with weights 0.61 / 0.69.
std::vector<Variant> default_variants();

struct ExperimentConfig {
    TrafficConfig traffic;
    std::vector<Variant> variants = default_variants();
    // Variant whose model scores every test run.
    std::string score_variant = "CPT";
    SpsaSchedules schedules;
    EstimatorConfig estimator;
    std::size_t train_iterations = 200;
    std::size_t train_horizon = 500;
    std::size_t test_replications = 100;
    std::size_t test_horizon = 1000;
    std::uint64_t master_seed = 1;
    // Empty: all ones.
    std::vector<double> theta0;
    double box_lo = 0.1;
    double box_hi = 10.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct TestScore {
    double cpt_score = 0.0;
    std::vector<double> per_path;
};

struct VariantResult {
    std::string name;
    std::uint64_t train_seed = 0;
    RunTrace trace;
    std::vector<TestScore> scores;
    std::size_t flagged_paths = 0;
    // Empty on success, otherwise the failing stage with its context.
    std::string error;
};

struct ExperimentResult {
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> test_stream_ids;
    std::vector<VariantResult> variants;

    const VariantResult& variant(const std::string& name) const;
};

double mean_score(const VariantResult& v);
double median_score(const VariantResult& v);

/// Trains every variant on its own objective, freezes the policy and scores
/// test_replications episodes (shared seeds across variants) under the
/// score variant's model. Failures are recorded per variant.
ExperimentResult run_experiment(const ExperimentConfig& config);

nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result);
std::string scores_csv(const VariantResult& v);

/// Writes summary.json, scores_<variant>.csv and trace_<variant>.csv.
void write_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                      const std::filesystem::path& dir);

}  // namespace cptrl
