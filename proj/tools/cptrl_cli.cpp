// cptrl command line: estimate, optimize, experiment.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cptrl/box.hpp"
#include "cptrl/cpt_model.hpp"
#include "cptrl/envs/analytic.hpp"
#include "cptrl/envs/ssp.hpp"
#include "cptrl/envs/traffic.hpp"
#include "cptrl/estimator.hpp"
#include "cptrl/harness.hpp"
#include "cptrl/spsa.hpp"

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw cptrl::Error("cannot open " + path);
    }
    return nlohmann::json::parse(f);
}

cptrl::CptModel load_model(const std::string& path) {
    if (path.empty()) return cptrl::identity_model();
    return read_json_file(path).get<cptrl::CptModel>();
}

std::vector<double> read_samples(std::istream& in) {
    std::vector<double> xs;
    std::string tok;
    while (in >> tok) {
        for (char& ch : tok) {
            if (ch == ',') ch = ' ';
        }
        std::istringstream parts(tok);
        std::string part;
        while (parts >> part) {
            std::size_t used = 0;
            const double x = std::stod(part, &used);
            if (used != part.size()) {
                throw cptrl::DomainError("not a number: " + part);
            }
            xs.push_back(x);
        }
    }
    return xs;
}

int run_estimate(const std::string& input, const std::string& model_path, bool include_top) {
    std::vector<double> xs;
    if (input.empty() || input == "-") {
        xs = read_samples(std::cin);
    } else {
        std::ifstream f(input);
        if (!f) throw cptrl::Error("cannot open " + input);
        xs = read_samples(f);
    }
    const auto est = cptrl::estimate_cpt(xs, load_model(model_path), {include_top});
    const nlohmann::json out = {
        {"value", est.value}, {"positive_part", est.positive_part}, {"negative_part", est.negative_part}, {"n", est.n}};
    std::cout << out.dump() << '\n';
    return 0;
}

struct OptimizeArgs {
    std::string env = "gaussian-mean";
    std::string model;
    std::string algo = "spsa-g";
    std::size_t iters = 2000;
    std::uint64_t seed = 1;
    std::string out;
    std::vector<double> theta0;
    double box_lo = -10.0;
    double box_hi = 10.0;
    double a0 = 1.0;
    double a_offset = 50.0;
    double kappa = 1e-4;
    double hessian_scale = 1.0;
    double xi0 = 1.0;
    double xi_exp = 0.6;
    std::string traffic_config;
};

int run_optimize(const OptimizeArgs& a) {
    const cptrl::CptModel model = load_model(a.model);
    std::unique_ptr<cptrl::ReturnEnv> env;
    std::unique_ptr<cptrl::TrafficGrid> grid;
    std::unique_ptr<cptrl::CptObjective> objective;
    double lo = a.box_lo;
    double hi = a.box_hi;
    if (a.env == "gaussian-mean") {
        env = std::make_unique<cptrl::QuadraticGaussianEnv>(cptrl::gaussian_mean_env());
    } else if (a.env == "quadratic-bowl") {
        env = std::make_unique<cptrl::QuadraticGaussianEnv>(cptrl::quadratic_bowl_env());
    } else if (a.env == "ssp-chain") {
        env = std::make_unique<cptrl::SspEnv>(cptrl::two_state_chain());
    } else if (a.env == "traffic") {
        cptrl::TrafficConfig tc;
        if (!a.traffic_config.empty()) tc = read_json_file(a.traffic_config).get<cptrl::TrafficConfig>();
        grid = std::make_unique<cptrl::TrafficGrid>(tc);
        objective = std::make_unique<cptrl::TrafficObjective>(*grid, model, 500);
        lo = 0.1;
        hi = 10.0;
    } else {
        throw cptrl::InvalidSpecError("unknown env " + a.env);
    }
    if (!objective) {
        objective = std::make_unique<cptrl::SampledCptObjective>(*env, model);
    }
    const std::size_t d = objective->dimension();
    const auto box = cptrl::BoxConstraint::uniform(d, lo, hi);
    std::vector<double> theta0 = a.theta0;
    if (theta0.empty()) {
        theta0 = cptrl::project_box(std::vector<double>(d, a.env == "traffic" ? 1.0 : 0.0), box);
    }

    cptrl::SpsaSchedules sched = cptrl::SpsaSchedules::defaults(cptrl::holder_order(model));
    sched.a0 = a.a0;
    sched.a_offset = a.a_offset;
    cptrl::RunTrace trace;
    if (a.algo == "spsa-g") {
        trace = cptrl::optimize_spsa_g(*objective, sched, box, theta0, a.iters, a.seed);
    } else if (a.algo == "spsa-n") {
        cptrl::NewtonOptions newton;
        newton.kappa = a.kappa;
        newton.hessian_scale = a.hessian_scale;
        newton.hessian.xi0 = a.xi0;
        newton.hessian.xi_exp = a.xi_exp;
        trace = cptrl::optimize_spsa_n(*objective, sched, newton, box, theta0, a.iters, a.seed);
    } else {
        throw cptrl::InvalidSpecError("unknown algorithm " + a.algo);
    }

    const std::string csv = cptrl::trace_to_csv(trace);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        const std::filesystem::path out(a.out);
        if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
        std::ofstream f(out, std::ios::binary);
        if (!f) throw cptrl::Error("cannot open " + a.out);
        f << csv;
        std::cerr << "final theta:";
        for (double t : trace.final_theta) std::cerr << ' ' << t;
        std::cerr << '\n';
    }
    return 0;
}

int run_experiment_cmd(const std::string& config_path, const std::string& out_dir, std::int64_t seed) {
    cptrl::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = read_json_file(config_path).get<cptrl::ExperimentConfig>();
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    const cptrl::ExperimentResult result = cptrl::run_experiment(cfg);
    cptrl::write_experiment(cfg, result, out_dir);
    int failed = 0;
    for (const auto& v : result.variants) {
        if (!v.error.empty()) {
            std::cerr << "variant " << v.name << " failed: " << v.error << '\n';
            ++failed;
        } else {
            std::cerr << v.name << ": median CPT score " << cptrl::median_score(v) << '\n';
        }
    }
    return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CPT-value estimation and SPSA policy search"};
    app.require_subcommand(1);

    std::string input;
    std::string model;
    bool include_top = false;
    auto* est = app.add_subcommand("estimate", "CPT-value of samples (whitespace/comma separated)");
    est->add_option("input", input, "sample file; stdin when omitted or '-'");
    est->add_option("--model", model, "CptModel JSON file (default: identity)");
    est->add_flag("--include-top", include_top, "use the empirical-distribution CPT-value");

    OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize", "run CPT-SPSA on a built-in environment");
    opt->add_option("--env", oa.env)->check(CLI::IsMember({"gaussian-mean", "quadratic-bowl", "ssp-chain", "traffic"}));
    opt->add_option("--model", oa.model, "CptModel JSON file (default: identity)");
    opt->add_option("--algo", oa.algo)->check(CLI::IsMember({"spsa-g", "spsa-n"}));
    opt->add_option("--iters", oa.iters);
    opt->add_option("--seed", oa.seed);
    opt->add_option("--out", oa.out, "trace CSV (stdout when omitted)");
    opt->add_option("--theta0", oa.theta0)->delimiter(',');
    opt->add_option("--box-lo", oa.box_lo);
    opt->add_option("--box-hi", oa.box_hi);
    opt->add_option("--a0", oa.a0);
    opt->add_option("--a-offset", oa.a_offset);
    opt->add_option("--kappa", oa.kappa);
    opt->add_option("--hessian-scale", oa.hessian_scale);
    opt->add_option("--xi0", oa.xi0);
    opt->add_option("--xi-exp", oa.xi_exp);
    opt->add_option("--traffic-config", oa.traffic_config, "TrafficConfig JSON for --env traffic");

    std::string config_path;
    std::string out_dir = "experiment_out";
    std::int64_t seed = -1;
    auto* exp = app.add_subcommand("experiment", "AVG/EUT/CPT traffic comparison");
    exp->add_option("--config", config_path, "ExperimentConfig JSON (defaults when omitted)");
    exp->add_option("--out", out_dir, "output directory");
    exp->add_option("--seed", seed, "override master_seed");

    CLI11_PARSE(app, argc, argv);
    try {
        if (est->parsed()) return run_estimate(input, model, include_top);
        if (opt->parsed()) return run_optimize(oa);
        if (exp->parsed()) return run_experiment_cmd(config_path, out_dir, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
