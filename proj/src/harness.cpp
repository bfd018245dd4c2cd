#include "cptrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "cptrl/box.hpp"
#include "cptrl/errors.hpp"

namespace cptrl {

CompositeCpt composite_cpt(std::span<const std::vector<double>> path_samples, std::span<const double> mu,
                           const CptModel& model, const EstimatorConfig& cfg) {
    if (path_samples.size() != mu.size()) {
        throw DomainError("composite CPT: " + std::to_string(mu.size()) + " weights for " +
                          std::to_string(path_samples.size()) + " paths");
    }
    double total = 0.0;
    for (double w : mu) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DomainError("composite CPT: path weights must be finite and nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DomainError("composite CPT: path weights must sum to 1");
    }
    CompositeCpt out;
    out.per_path.assign(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (path_samples[i].size() < 2) {
            out.flagged.push_back(i);
            continue;
        }
        out.per_path[i] = estimate_cpt(path_samples[i], model, cfg).value;
        out.value += mu[i] * out.per_path[i];
    }
    return out;
}

TrafficObjective::TrafficObjective(const TrafficGrid& grid, CptModel model, std::size_t horizon, EstimatorConfig cfg)
    : grid_(grid), model_(model), horizon_(horizon), cfg_(cfg) {
    validate(model_);
    if (horizon_ == 0) {
        throw InvalidSpecError("training horizon must be at least one step");
    }
}

double TrafficObjective::evaluate(std::span<const double> theta, std::size_t, RngStream& rng) const {
    const BoltzmannPolicy policy(std::vector<double>(theta.begin(), theta.end()));
    const TrafficEpisode ep = traffic_episode(grid_, policy, horizon_, rng);
    return composite_cpt(ep.delay_differences, grid_.path_weights(), model_, cfg_).value;
}

std::vector<Variant> default_variants() {
    const UtilitySpec kt = kahneman_tversky_utility(0.0);
    const WeightSpec id{WeightKind::Identity, 1.0};
    return {
        {"AVG", identity_model(0.0)},
        {"EUT", CptModel{kt, id, id}},
        {"CPT", CptModel{kt, tversky_kahneman_weight(0.61), tversky_kahneman_weight(0.69)}},
    };
}

void ExperimentConfig::validate() const {
    if (variants.empty()) {
        throw InvalidSpecError("experiment needs at least one variant");
    }
    bool has_score = false;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        cptrl::validate(variants[i].model);
        if (variants[i].name.empty() ||
            variants[i].name.find_first_of("/\\ ") != std::string::npos) {
            throw InvalidSpecError("variant names must be nonempty and usable in file names");
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (variants[k].name == variants[i].name) {
                throw InvalidSpecError("duplicate variant name " + variants[i].name);
            }
        }
        has_score = has_score || variants[i].name == score_variant;
    }
    if (!has_score) {
        throw InvalidSpecError("score_variant " + score_variant + " is not among the variants");
    }
    schedules.validate();
    if (train_horizon == 0 || test_horizon == 0) {
        throw InvalidSpecError("horizons must be at least one step");
    }
    if (!(box_lo < box_hi) || !std::isfinite(box_lo) || !std::isfinite(box_hi)) {
        throw InvalidSpecError("box bounds must satisfy lo < hi");
    }
}

namespace {

void schedules_to_json(nlohmann::json& j, const SpsaSchedules& s) {
    j = {{"a0", s.a0},           {"a_offset", s.a_offset}, {"delta0", s.delta0}, {"delta_exp", s.delta_exp},
         {"m0", s.m0},           {"nu", s.nu},             {"alpha", s.alpha}};
}

SpsaSchedules schedules_from_json(const nlohmann::json& j) {
    SpsaSchedules s;
    s.a0 = j.value("a0", s.a0);
    s.a_offset = j.value("a_offset", s.a_offset);
    s.delta0 = j.value("delta0", s.delta0);
    s.delta_exp = j.value("delta_exp", s.delta_exp);
    s.m0 = j.value("m0", s.m0);
    s.nu = j.value("nu", s.nu);
    s.alpha = j.value("alpha", s.alpha);
    return s;
}

}  // namespace

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : c.variants) {
        variants.push_back({{"name", v.name}, {"model", v.model}});
    }
    nlohmann::json sched;
    schedules_to_json(sched, c.schedules);
    j = {{"traffic", c.traffic},
         {"variants", variants},
         {"score_variant", c.score_variant},
         {"schedules", sched},
         {"include_top_order_stat", c.estimator.include_top_order_stat},
         {"train_iterations", c.train_iterations},
         {"train_horizon", c.train_horizon},
         {"test_replications", c.test_replications},
         {"test_horizon", c.test_horizon},
         {"master_seed", c.master_seed},
         {"theta0", c.theta0},
         {"box_lo", c.box_lo},
         {"box_hi", c.box_hi}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    const ExperimentConfig d;
    c.traffic = j.contains("traffic") ? j.at("traffic").get<TrafficConfig>() : d.traffic;
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : j.at("variants")) {
            c.variants.push_back({v.at("name").get<std::string>(), v.at("model").get<CptModel>()});
        }
    } else {
        c.variants = d.variants;
    }
    c.score_variant = j.value("score_variant", d.score_variant);
    c.schedules = j.contains("schedules") ? schedules_from_json(j.at("schedules")) : d.schedules;
    c.estimator.include_top_order_stat = j.value("include_top_order_stat", d.estimator.include_top_order_stat);
    c.train_iterations = j.value("train_iterations", d.train_iterations);
    c.train_horizon = j.value("train_horizon", d.train_horizon);
    c.test_replications = j.value("test_replications", d.test_replications);
    c.test_horizon = j.value("test_horizon", d.test_horizon);
    c.master_seed = j.value("master_seed", d.master_seed);
    c.theta0 = j.value("theta0", d.theta0);
    c.box_lo = j.value("box_lo", d.box_lo);
    c.box_hi = j.value("box_hi", d.box_hi);
}

const VariantResult& ExperimentResult::variant(const std::string& name) const {
    for (const auto& v : variants) {
        if (v.name == name) return v;
    }
    throw DomainError("no variant named " + name);
}

double mean_score(const VariantResult& v) {
    if (v.scores.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (const auto& t : v.scores) s += t.cpt_score;
    return s / static_cast<double>(v.scores.size());
}

double median_score(const VariantResult& v) {
    if (v.scores.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;
    x.reserve(v.scores.size());
    for (const auto& t : v.scores) x.push_back(t.cpt_score);
    std::sort(x.begin(), x.end());
    const std::size_t k = x.size() / 2;
    return x.size() % 2 == 1 ? x[k] : 0.5 * (x[k - 1] + x[k]);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const TrafficGrid grid(config.traffic);
    const std::size_t d = grid.feature_dim();
    std::vector<double> theta0 = config.theta0.empty() ? std::vector<double>(d, 1.0) : config.theta0;
    if (theta0.size() != d) {
        throw InvalidSpecError("theta0 has " + std::to_string(theta0.size()) + " entries, the traffic features " +
                               std::to_string(d));
    }
    const BoxConstraint box = BoxConstraint::uniform(d, config.box_lo, config.box_hi);
    const CptModel* score_model = nullptr;
    for (const auto& v : config.variants) {
        if (v.name == config.score_variant) score_model = &v.model;
    }

    ExperimentResult result;
    result.master_seed = config.master_seed;
    for (std::size_t r = 0; r < config.test_replications; ++r) {
        result.test_stream_ids.push_back(RngStream(config.master_seed, r, StreamRole::Test).id());
    }

    // Every variant sees the same perturbations and training trajectories.
    const std::uint64_t train_seed = mix_seed(config.master_seed, static_cast<std::uint64_t>(StreamRole::Train));
    for (const auto& variant : config.variants) {
        VariantResult vr;
        vr.name = variant.name;
        vr.train_seed = train_seed;
        std::vector<double> theta;
        try {
            const TrafficObjective objective(grid, variant.model, config.train_horizon, config.estimator);
            vr.trace = optimize_spsa_g(objective, config.schedules, box, theta0, config.train_iterations, train_seed);
            theta = vr.trace.final_theta;
        } catch (const OptimizationError& e) {
            vr.trace = e.trace();
            vr.error = "train " + variant.name + " seed " + std::to_string(train_seed) + ": " + e.what();
            result.variants.push_back(std::move(vr));
            continue;
        }

        const BoltzmannPolicy policy(theta);
        for (std::size_t r = 0; r < config.test_replications; ++r) {
            RngStream rng(config.master_seed, r, StreamRole::Test);
            try {
                const TrafficEpisode ep = traffic_episode(grid, policy, config.test_horizon, rng);
                const CompositeCpt c =
                    composite_cpt(ep.delay_differences, grid.path_weights(), *score_model, config.estimator);
                vr.flagged_paths += c.flagged.size();
                vr.scores.push_back({c.value, c.per_path});
            } catch (const std::exception& e) {
                vr.error = "test " + variant.name + " replication " + std::to_string(r) + " stream " +
                           std::to_string(rng.id()) + ": " + e.what();
                break;
            }
        }
        result.variants.push_back(std::move(vr));
    }
    return result;
}

nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : result.variants) {
        nlohmann::json jv = {{"name", v.name},
                             {"status", v.error.empty() ? "ok" : "failed"},
                             {"train_seed", v.train_seed},
                             {"train_iterations_completed", v.trace.records.size()},
                             {"final_theta", v.trace.final_theta},
                             {"test_replications_completed", v.scores.size()},
                             {"flagged_paths", v.flagged_paths},
                             {"scores_file", "scores_" + v.name + ".csv"},
                             {"trace_file", "trace_" + v.name + ".csv"}};
        if (v.scores.empty()) {
            jv["mean_cpt"] = nullptr;
            jv["median_cpt"] = nullptr;
        } else {
            jv["mean_cpt"] = mean_score(v);
            jv["median_cpt"] = median_score(v);
        }
        if (!v.error.empty()) jv["error"] = v.error;
        variants.push_back(std::move(jv));
    }
    return {{"master_seed", result.master_seed},
            {"score_variant", config.score_variant},
            {"train_iterations", config.train_iterations},
            {"train_horizon", config.train_horizon},
            {"test_replications", config.test_replications},
            {"test_horizon", config.test_horizon},
            {"test_stream_ids", result.test_stream_ids},
            {"variants", variants},
            {"config", config}};
}

std::string scores_csv(const VariantResult& v) {
    std::ostringstream out;
    out << std::setprecision(17);
    const std::size_t paths = v.scores.empty() ? 0 : v.scores.front().per_path.size();
    out << "replication,cpt_score";
    for (std::size_t p = 0; p < paths; ++p) out << ",path_" << p;
    out << '\n';
    for (std::size_t r = 0; r < v.scores.size(); ++r) {
        out << r << ',' << v.scores[r].cpt_score;
        for (double x : v.scores[r].per_path) out << ',' << x;
        out << '\n';
    }
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    f << text;
    if (!f) {
        throw Error("failed writing " + path.string());
    }
}

}  // namespace

void write_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& v : result.variants) {
        write_file(dir / ("scores_" + v.name + ".csv"), scores_csv(v));
        write_file(dir / ("trace_" + v.name + ".csv"), trace_to_csv(v.trace));
    }
    write_file(dir / "summary.json", summary_json(config, result).dump(2) + "\n");
}

}  // namespace cptrl
