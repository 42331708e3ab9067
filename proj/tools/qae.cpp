// qae: quantum-annealing experiment driver.
//
//   qae run <config.json> [--plots]     run a configured experiment
//   qae lab --chain ... --check ...     numerical convergence checks on exact chains
//   qae compare <cfgA> <cfgB> ...       schedule comparison table
//   qae gen-instance --n --dist --seed  emit a random instance JSON

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qa/bench.hpp"
#include "qa/ergodicity.hpp"
#include "qa/errors.hpp"
#include "qa/ising.hpp"
#include "qa/schedules.hpp"

namespace {

qa::IsingInstance default_ring(int n) {
    std::vector<qa::IsingInstance::Coupling> couplings;
    if (n == 2) {
        couplings.push_back({0, 1, 1.0});
    } else if (n >= 3) {
        for (int i = 0; i + 1 < n; ++i) couplings.push_back({i, i + 1, 1.0});
        couplings.push_back({0, n - 1, 1.0});
    }
    return qa::IsingInstance(n, couplings);
}

// Boundary schedule of the matching convergence statement, built from the
// closed-form constants of the default move sets (R = NM replicas / N walkers
// / 1 all-to-all, L1 = 4).
qa::Schedule default_lab_schedule(qa::ChainKind kind, int n, int m, double beta, double q,
                                  double dt) {
    qa::Schedule schedule;
    const double r_pimc = static_cast<double>(n) * m;
    switch (kind) {
        case qa::ChainKind::PimcBoltzmann:
            schedule.kind = qa::ScheduleKind::Corollary1;
            schedule.params = {{"M", static_cast<double>(m)},
                               {"beta", beta},
                               {"R", r_pimc},
                               {"L1", 4.0}};
            break;
        case qa::ChainKind::PimcTsallis:
            schedule.kind = qa::ScheduleKind::TsallisGamma;
            schedule.params = {{"b", 1.0},           {"c", (q - 1.0) / r_pimc},
                               {"M", static_cast<double>(m)}, {"beta", beta},
                               {"q", q},             {"R", r_pimc}};
            break;
        case qa::ChainKind::GfmcG1:
            schedule.kind = qa::ScheduleKind::GfmcPower;
            schedule.params = {{"b", 1.0}, {"c", 1.0 / n}, {"N", static_cast<double>(n)}};
            break;
        case qa::ChainKind::GfmcG2:
            schedule.kind = qa::ScheduleKind::GfmcG2;
            schedule.params = {{"b", 0.25}, {"dt", dt}, {"N", static_cast<double>(n)}};
            break;
    }
    return schedule;
}

qa::Schedule read_schedule(const std::string& text) {
    if (!text.empty() && text.front() == '@') {
        std::ifstream in(text.substr(1), std::ios::binary);
        if (!in) throw qa::ConfigError("cannot open schedule file " + text.substr(1));
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return qa::Schedule::from_json(buffer.str());
    }
    return qa::Schedule::from_json(text);
}

int run_command(const std::string& config_path, bool plots) {
    qa::ExperimentConfig config = qa::ExperimentConfig::load(config_path);
    if (plots) config.plots = true;
    const qa::RunSummary summary = qa::run_experiment(config);
    std::cout << "engine: " << summary.engine << "\n";
    if (!summary.runs.empty()) {
        std::cout << "runs: " << summary.runs.size() << "\n";
        if (summary.hit_rate) std::cout << "hit_rate: " << *summary.hit_rate << "\n";
        std::cout << "mean_best_energy: " << summary.mean_best_energy << "\n";
    }
    for (const std::string& report : summary.lab_reports) std::cout << report << "\n";
    std::cout << "summary: " << summary.summary_path << "\n";
    return summary.lab_pass ? 0 : 1;
}

int lab_command(const std::string& chain_name, const std::string& check, double t_max,
                int blocks, long long horizon, int n, int m, double beta, double q,
                const std::string& acceptance, std::optional<double> dt,
                std::optional<double> e_t, const std::string& instance_path,
                const std::string& schedule_text) {
    qa::ChainSpec spec;
    spec.kind = qa::chain_kind_from_name(chain_name);
    spec.instance = instance_path.empty() ? default_ring(n) : qa::IsingInstance::load(instance_path);
    n = spec.instance.n_spins();

    spec.pimc.beta = beta;
    spec.pimc.trotter_m = m;
    spec.pimc.tsallis_q = q;
    if (acceptance == "metropolis") {
        spec.pimc.acceptance = qa::AcceptanceKind::Metropolis;
    } else if (acceptance != "heat_bath") {
        throw qa::ConfigError("--acceptance: expected heat_bath or metropolis");
    }

    spec.gfmc.dt = dt;
    spec.gfmc.e_t = e_t;
    spec.gfmc.variant = spec.kind == qa::ChainKind::GfmcG2 ? qa::GfmcVariant::G2
                                                           : qa::GfmcVariant::G1;
    if (spec.kind == qa::ChainKind::GfmcG2 && !spec.gfmc.dt) {
        spec.gfmc.dt = 0.1;  // must match the dt inside the default G2 schedule
    }

    spec.schedule = schedule_text.empty()
                        ? default_lab_schedule(spec.kind, n, m, beta, q,
                                               spec.gfmc.dt.value_or(0.1))
                        : read_schedule(schedule_text);

    qa::LabRequest request;
    request.chain = spec.kind;
    request.check = check;
    request.t_max = t_max;
    request.blocks = blocks;
    request.horizon = horizon;

    bool all_pass = true;
    for (const qa::LabReport& report : qa::run_lab_checks(spec, request)) {
        std::cout << report.to_json() << "\n";
        all_pass = all_pass && report.pass;
    }
    return all_pass ? 0 : 1;
}

int compare_command(const std::vector<std::string>& config_paths) {
    std::vector<qa::ExperimentConfig> configs;
    configs.reserve(config_paths.size());
    for (const std::string& path : config_paths) {
        configs.push_back(qa::ExperimentConfig::load(path));
    }
    std::cout << qa::compare_schedules(configs).render();
    return 0;
}

int gen_instance_command(int n, const std::string& dist_name, std::uint64_t seed, double sigma,
                         const std::string& out_path) {
    qa::CouplingDist dist;
    if (dist_name == "pm_j") {
        dist = qa::CouplingDist::PlusMinusJ;
    } else if (dist_name == "gaussian") {
        dist = qa::CouplingDist::Gaussian;
    } else {
        throw qa::ConfigError("--dist: expected pm_j or gaussian, got \"" + dist_name + "\"");
    }
    const qa::IsingInstance instance = qa::random_instance(n, dist, seed, sigma);
    if (out_path.empty()) {
        std::cout << instance.to_json() << "\n";
    } else {
        instance.save(out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transverse-field Ising annealing toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    bool plots = false;
    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "experiment config JSON")->required();
    run->add_flag("--plots", plots, "also write SVG line plots of trace columns");

    std::string chain = "pimc_boltzmann";
    std::string check = "all";
    double t_max = 1e4;
    int blocks = 50;
    long long horizon = 100000;
    int lab_n = 2;
    int lab_m = 2;
    double beta = 1.0;
    double q = 2.0;
    std::string acceptance = "heat_bath";
    std::optional<double> dt;
    std::optional<double> e_t;
    std::string instance_path;
    std::string schedule_text;
    CLI::App* lab = app.add_subcommand("lab", "numerical convergence checks on exact chains");
    lab->add_option("--chain", chain,
                    "pimc_boltzmann | pimc_tsallis | gfmc_g1 | gfmc_g2");
    lab->add_option("--check", check,
                    "stationarity | lemma1 | lemma2 | weak_ergodicity | monotonicity | "
                    "condition_iii | all");
    lab->add_option("--t-max", t_max, "largest sampled chain time");
    lab->add_option("--blocks", blocks, "R-step blocks for the weak-ergodicity sum");
    lab->add_option("--horizon", horizon, "steps for the condition-(iii) sum");
    lab->add_option("--n", lab_n, "spins of the default ring instance");
    lab->add_option("--m", lab_m, "Trotter slices (pimc chains)");
    lab->add_option("--beta", beta, "inverse temperature (pimc chains)");
    lab->add_option("--q", q, "generalized-acceptance exponent (pimc_tsallis)");
    lab->add_option("--acceptance", acceptance, "heat_bath | metropolis (pimc_boltzmann)");
    lab->add_option("--dt", dt, "walker time step (gfmc chains; default auto)");
    lab->add_option("--e-t", e_t, "reference energy (gfmc chains; default auto)");
    lab->add_option("--instance", instance_path, "instance JSON file (default: +1 ring)");
    lab->add_option("--schedule", schedule_text, "schedule JSON inline, or @file");

    std::vector<std::string> compare_paths;
    CLI::App* compare = app.add_subcommand("compare", "schedule comparison table");
    compare->add_option("configs", compare_paths, "two or more experiment configs")
        ->required()
        ->expected(2, -1);

    int gen_n = 6;
    std::string dist_name = "pm_j";
    std::uint64_t gen_seed = 1;
    double sigma = 1.0;
    std::string out_path;
    CLI::App* gen = app.add_subcommand("gen-instance", "emit a random instance JSON");
    gen->add_option("--n", gen_n, "spin count")->required();
    gen->add_option("--dist", dist_name, "pm_j | gaussian");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--sigma", sigma, "stddev for gaussian couplings");
    gen->add_option("-o,--output", out_path, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, plots);
        if (lab->parsed()) {
            return lab_command(chain, check, t_max, blocks, horizon, lab_n, lab_m, beta, q,
                               acceptance, dt, e_t, instance_path, schedule_text);
        }
        if (compare->parsed()) return compare_command(compare_paths);
        if (gen->parsed()) {
            return gen_instance_command(gen_n, dist_name, gen_seed, sigma, out_path);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
