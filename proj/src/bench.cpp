#include "qa/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "qa/errors.hpp"

namespace qa {
namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    const std::size_t end = std::min(byte, text.size());
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

json parse_or_diagnose(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError(origin + ":" + std::to_string(line_of_offset(text, err.byte)) +
                          ": " + err.what());
    }
}

const json& require_key(const json& obj, const std::string& key, const std::string& context) {
    if (!obj.is_object()) {
        throw ConfigError(context + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError(context + ": missing key \"" + key + "\"");
    }
    return *it;
}

double number_at(const json& obj, const std::string& key, const std::string& context) {
    const json& v = require_key(obj, key, context);
    if (!v.is_number()) {
        throw ConfigError(context + ": key \"" + key + "\" must be a number");
    }
    return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback,
                 const std::string& context) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return number_at(obj, key, context);
}

long long integer_at(const json& obj, const std::string& key, const std::string& context) {
    const json& v = require_key(obj, key, context);
    if (!v.is_number_integer()) {
        throw ConfigError(context + ": key \"" + key + "\" must be an integer");
    }
    return v.get<long long>();
}

std::string string_at(const json& obj, const std::string& key, const std::string& context) {
    const json& v = require_key(obj, key, context);
    if (!v.is_string()) {
        throw ConfigError(context + ": key \"" + key + "\" must be a string");
    }
    return v.get<std::string>();
}

CouplingDist dist_from_name(const std::string& name, const std::string& context) {
    if (name == "pm_j") return CouplingDist::PlusMinusJ;
    if (name == "gaussian") return CouplingDist::Gaussian;
    throw ConfigError(context + ": unknown coupling distribution \"" + name +
                      "\" (expected pm_j or gaussian)");
}

std::string sanitize_label(const std::string& label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        out.push_back(ok ? c : '-');
    }
    return out.empty() ? std::string("schedule") : out;
}

void parse_pimc_section(const json& j, ExperimentConfig& config) {
    const std::string ctx = "pimc";
    config.pimc.beta = number_or(j, "beta", config.pimc.beta, ctx);
    if (j.contains("trotter_M")) {
        config.pimc.trotter_m = static_cast<int>(integer_at(j, "trotter_M", ctx));
    }
    if (j.contains("acceptance")) {
        const json& acc = j.at("acceptance");
        const std::string kind = string_at(acc, "kind", ctx + ".acceptance");
        if (kind == "heat_bath") {
            config.pimc.acceptance = AcceptanceKind::HeatBath;
        } else if (kind == "metropolis") {
            config.pimc.acceptance = AcceptanceKind::Metropolis;
        } else if (kind == "tsallis") {
            config.pimc.acceptance = AcceptanceKind::Tsallis;
        } else {
            throw ConfigError(ctx + ".acceptance.kind: unknown kind \"" + kind +
                              "\" (expected heat_bath, metropolis, or tsallis)");
        }
        config.pimc.tsallis_q = number_or(acc, "q", config.pimc.tsallis_q, ctx + ".acceptance");
        if (acc.contains("g")) {
            const std::string g = string_at(acc, "g", ctx + ".acceptance");
            if (g == "heat_bath") {
                config.pimc.tsallis_g = GKind::HeatBath;
            } else if (g == "metropolis") {
                config.pimc.tsallis_g = GKind::Metropolis;
            } else {
                throw ConfigError(ctx + ".acceptance.g: unknown base acceptance \"" + g + "\"");
            }
        }
    }
    if (j.contains("start")) {
        const std::string start = string_at(j, "start", ctx);
        if (start == "ordered") {
            config.pimc_start_ordered = true;
        } else if (start == "random") {
            config.pimc_start_ordered = false;
        } else {
            throw ConfigError(ctx + ".start: expected \"random\" or \"ordered\", got \"" +
                              start + "\"");
        }
    }
    config.pimc.validate();
}

void parse_gfmc_section(const json& j, ExperimentConfig& config) {
    const std::string ctx = "gfmc";
    if (j.contains("dt")) {
        const json& v = j.at("dt");
        if (v.is_string() && v.get<std::string>() == "auto") {
            config.gfmc.dt.reset();
        } else if (v.is_number()) {
            config.gfmc.dt = v.get<double>();
        } else {
            throw ConfigError(ctx + ".dt: expected a number or \"auto\"");
        }
    }
    if (j.contains("e_t")) {
        const json& v = j.at("e_t");
        if (v.is_string() && v.get<std::string>() == "auto") {
            config.gfmc.e_t.reset();
        } else if (v.is_number()) {
            config.gfmc.e_t = v.get<double>();
        } else {
            throw ConfigError(ctx + ".e_t: expected a number or \"auto\"");
        }
    }
    if (j.contains("n_walkers")) {
        config.gfmc.n_walkers = static_cast<int>(integer_at(j, "n_walkers", ctx));
        if (config.gfmc.n_walkers < 1) throw ConfigError(ctx + ".n_walkers: must be >= 1");
    }
    if (j.contains("variant")) {
        const std::string v = string_at(j, "variant", ctx);
        if (v == "G1" || v == "g1") {
            config.gfmc.variant = GfmcVariant::G1;
        } else if (v == "G2" || v == "g2") {
            config.gfmc.variant = GfmcVariant::G2;
        } else {
            throw ConfigError(ctx + ".variant: expected \"G1\" or \"G2\", got \"" + v + "\"");
        }
    }
    if (j.contains("population_control")) {
        const json& v = j.at("population_control");
        if (v.is_string()) {
            const std::string name = v.get<std::string>();
            if (name == "none") {
                config.gfmc.control.kind = PopulationControlKind::None;
            } else if (name == "split_kill") {
                config.gfmc.control.kind = PopulationControlKind::SplitKill;
            } else {
                throw ConfigError(ctx + ".population_control: unknown kind \"" + name + "\"");
            }
        } else if (v.is_object()) {
            const std::string name = string_at(v, "kind", ctx + ".population_control");
            if (name == "none") {
                config.gfmc.control.kind = PopulationControlKind::None;
            } else if (name == "split_kill") {
                config.gfmc.control.kind = PopulationControlKind::SplitKill;
            } else {
                throw ConfigError(ctx + ".population_control.kind: unknown kind \"" + name +
                                  "\"");
            }
            config.gfmc.control.split_factor =
                number_or(v, "split", config.gfmc.control.split_factor,
                          ctx + ".population_control");
            config.gfmc.control.kill_factor =
                number_or(v, "kill", config.gfmc.control.kill_factor,
                          ctx + ".population_control");
        } else {
            throw ConfigError(ctx + ".population_control: expected a string or an object");
        }
    }
}

void parse_lab_section(const json& j, ExperimentConfig& config) {
    const std::string ctx = "lab";
    if (j.contains("chain")) {
        config.lab.chain = chain_kind_from_name(string_at(j, "chain", ctx));
    }
    if (j.contains("check")) config.lab.check = string_at(j, "check", ctx);
    config.lab.t_max = number_or(j, "t_max", config.lab.t_max, ctx);
    if (j.contains("blocks")) config.lab.blocks = static_cast<int>(integer_at(j, "blocks", ctx));
    if (j.contains("horizon")) config.lab.horizon = integer_at(j, "horizon", ctx);
    if (config.lab.t_max < 1.0) throw ConfigError(ctx + ".t_max: must be >= 1");
    if (config.lab.blocks < 1) throw ConfigError(ctx + ".blocks: must be >= 1");
    if (config.lab.horizon < 2) throw ConfigError(ctx + ".horizon: must be >= 2");
}

// One lab report measuring ||G(t)q(t) - q(t)||_1 over the sample grid.
LabReport stationarity_report(const ExactChain& chain, double t_max) {
    LabReport report;
    report.check = "stationarity";
    constexpr double kTol = 1e-12;
    double worst = 0.0;
    double worst_t = 0.0;
    const std::vector<double> grid = default_t_grid(t_max);
    for (double t : grid) {
        const double residual = stationarity_residual(chain, t);
        if (residual > worst) {
            worst = residual;
            worst_t = t;
        }
    }
    report.pass = worst <= kTol;
    report.worst_slack = kTol - worst;
    if (!report.pass) {
        report.witnesses.push_back(Witness{worst_t, -1, -1, worst, kTol});
    }
    report.metrics["max_residual"] = worst;
    report.metrics["grid_points"] = static_cast<double>(grid.size());
    return report;
}

std::vector<std::string> checks_for_all(ChainKind kind) {
    switch (kind) {
        case ChainKind::PimcBoltzmann:
            return {"stationarity", "lemma1", "weak_ergodicity", "monotonicity",
                    "condition_iii"};
        case ChainKind::PimcTsallis:
            throw ConfigError(
                "lab: the generalized-acceptance chain has no certified stationary "
                "distribution; request a specific --check (e.g. stationarity to measure the "
                "candidate residual)");
        case ChainKind::GfmcG1:
            return {"stationarity", "lemma2", "weak_ergodicity", "monotonicity",
                    "condition_iii"};
        case ChainKind::GfmcG2:
            return {"stationarity", "weak_ergodicity", "monotonicity", "condition_iii"};
    }
    throw std::logic_error("checks_for_all: unreachable");
}

LabReport run_one_check(const ExactChain& chain, const std::string& check,
                        const LabRequest& lab) {
    if (check == "stationarity") return stationarity_report(chain, lab.t_max);
    if (check == "lemma1") return verify_lemma1(chain, default_t_grid(lab.t_max));
    if (check == "lemma2") return verify_lemma2(chain, default_t_grid(lab.t_max));
    if (check == "weak_ergodicity") return weak_ergodicity_diagnostic(chain, lab.blocks).report;
    if (check == "monotonicity") {
        return monotonicity_check(chain, static_cast<long long>(lab.t_max));
    }
    if (check == "condition_iii") return condition_iii_sum(chain, lab.horizon).report;
    throw ConfigError("lab.check: unknown check \"" + check +
                      "\" (expected stationarity, lemma1, lemma2, weak_ergodicity, "
                      "monotonicity, condition_iii, or all)");
}

struct SeedOutcome {
    ResultRecord record;
    std::vector<PlotSeries> plot;
};

SeedOutcome run_pimc_seed(const ExperimentConfig& config, const IsingInstance& instance,
                          std::uint64_t seed, const std::string& trace_path, bool keep_plot) {
    AnnealOptions options;
    options.checkpoint_every = config.checkpoint_every;
    options.start_ordered = config.pimc_start_ordered;
    const AnnealTrace trace = run_annealing(instance, config.pimc, config.schedule,
                                            config.horizon, seed, options);
    {
        std::ofstream out(trace_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write trace file " + trace_path);
        trace.write_csv(out);
    }
    SeedOutcome outcome;
    outcome.record.seed = seed;
    outcome.record.schedule_id = config.schedule.label();
    outcome.record.final_best_energy = trace.final_best_energy;
    outcome.record.steps_to_first_hit = trace.best_energy_step;  // resolved by the caller
    outcome.record.trace_path = trace_path;
    if (keep_plot) {
        PlotSeries best{"best_energy", {}};
        PlotSeries control{"control_value", {}};
        for (const TraceRow& row : trace.rows) {
            best.points.emplace_back(static_cast<double>(row.step), row.best_energy);
            control.points.emplace_back(static_cast<double>(row.step), row.control_value);
        }
        outcome.plot = {best, control};
    }
    return outcome;
}

SeedOutcome run_gfmc_seed(const ExperimentConfig& config, const IsingInstance& instance,
                          std::uint64_t seed, const std::string& trace_path, bool keep_plot) {
    const GfmcTrace trace = run_gfmc(instance, config.gfmc, config.schedule, config.horizon,
                                     seed, config.checkpoint_every);
    {
        std::ofstream out(trace_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write trace file " + trace_path);
        trace.write_csv(out);
    }
    SeedOutcome outcome;
    outcome.record.seed = seed;
    outcome.record.schedule_id = config.schedule.label();
    outcome.record.final_best_energy = trace.final_best_energy;
    outcome.record.steps_to_first_hit = trace.best_energy_step;
    outcome.record.trace_path = trace_path;
    if (keep_plot) {
        PlotSeries best{"best_energy", {}};
        PlotSeries gamma{"gamma", {}};
        for (const GfmcTraceRow& row : trace.rows) {
            best.points.emplace_back(static_cast<double>(row.step), row.best_energy);
            gamma.points.emplace_back(static_cast<double>(row.step), row.gamma);
        }
        outcome.plot = {best, gamma};
    }
    return outcome;
}

std::string describe_source(const InstanceSource& source) {
    if (source.file) return "file:" + *source.file;
    if (source.generator) {
        const GeneratorSpec& g = *source.generator;
        std::ostringstream out;
        out << "generator:n=" << g.n
            << ",dist=" << (g.dist == CouplingDist::PlusMinusJ ? "pm_j" : "gaussian")
            << ",seed=" << g.seed;
        if (g.dist == CouplingDist::Gaussian) out << ",sigma=" << g.sigma;
        return out.str();
    }
    return "unset";
}

json result_to_json(const ResultRecord& record) {
    json j;
    j["seed"] = record.seed;
    j["schedule_id"] = record.schedule_id;
    j["final_best_energy"] = record.final_best_energy;
    j["hit"] = record.hit ? json(*record.hit) : json(nullptr);
    j["steps_to_first_hit"] =
        record.steps_to_first_hit ? json(*record.steps_to_first_hit) : json(nullptr);
    j["trace_path"] = record.trace_path;
    return j;
}

// --- JSON-schema subset ------------------------------------------------------------

bool type_matches(const std::string& type, const json& doc) {
    if (type == "object") return doc.is_object();
    if (type == "array") return doc.is_array();
    if (type == "string") return doc.is_string();
    if (type == "integer") return doc.is_number_integer();
    if (type == "number") return doc.is_number();
    if (type == "boolean") return doc.is_boolean();
    if (type == "null") return doc.is_null();
    return false;
}

void validate_node(const json& schema, const json& doc, const std::string& path,
                   std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const json& t = schema.at("type");
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(t.get<std::string>(), doc);
        } else if (t.is_array()) {
            for (const json& option : t) {
                if (option.is_string() && type_matches(option.get<std::string>(), doc)) {
                    ok = true;
                    break;
                }
            }
        }
        if (!ok) {
            errors.push_back(path + ": type mismatch (expected " + t.dump() + ")");
            return;  // structural mismatch; deeper checks would be noise
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const json& option : schema.at("enum")) {
            if (option == doc) {
                ok = true;
                break;
            }
        }
        if (!ok) errors.push_back(path + ": value not in enum " + schema.at("enum").dump());
    }
    if (schema.contains("required") && doc.is_object()) {
        for (const json& key : schema.at("required")) {
            if (!doc.contains(key.get<std::string>())) {
                errors.push_back(path + ": missing required key \"" + key.get<std::string>() +
                                 "\"");
            }
        }
    }
    if (schema.contains("properties") && doc.is_object()) {
        for (const auto& [key, sub] : schema.at("properties").items()) {
            if (doc.contains(key)) {
                validate_node(sub, doc.at(key), path + "." + key, errors);
            }
        }
    }
    if (schema.contains("items") && doc.is_array()) {
        const json& item_schema = schema.at("items");
        for (std::size_t i = 0; i < doc.size(); ++i) {
            validate_node(item_schema, doc[i], path + "[" + std::to_string(i) + "]", errors);
        }
    }
}

}  // namespace

std::vector<LabReport> run_lab_checks(const ChainSpec& spec, const LabRequest& request) {
    ExactChain chain(spec);
    std::vector<std::string> checks;
    if (request.check == "all") {
        checks = checks_for_all(chain.kind());
    } else {
        checks.push_back(request.check);
    }
    std::vector<LabReport> reports;
    reports.reserve(checks.size());
    for (const std::string& check : checks) {
        reports.push_back(run_one_check(chain, check, request));
    }
    return reports;
}

// --- Config ---------------------------------------------------------------------------

IsingInstance ExperimentConfig::resolve_instance() const {
    if (source.file) {
        if (!std::filesystem::exists(*source.file)) {
            throw ConfigError("instance.file: file does not exist: " + *source.file);
        }
        return IsingInstance::load(*source.file);
    }
    if (source.generator) {
        const GeneratorSpec& g = *source.generator;
        return random_instance(g.n, g.dist, g.seed, g.sigma);
    }
    throw ConfigError("instance: missing source (need \"file\" or \"generator\")");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& origin) {
    const json j = parse_or_diagnose(text, origin);
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
    ExperimentConfig config;

    const json& inst = require_key(j, "instance", "config");
    if (inst.contains("file")) {
        config.source.file = string_at(inst, "file", "instance");
    } else if (inst.contains("generator")) {
        const json& g = inst.at("generator");
        GeneratorSpec spec;
        spec.n = static_cast<int>(integer_at(g, "n", "instance.generator"));
        if (spec.n < 1) throw ConfigError("instance.generator.n: must be >= 1");
        spec.dist = dist_from_name(string_at(g, "dist", "instance.generator"),
                                   "instance.generator.dist");
        spec.seed = static_cast<std::uint64_t>(integer_at(g, "seed", "instance.generator"));
        spec.sigma = number_or(g, "sigma", 1.0, "instance.generator");
        config.source.generator = spec;
    } else {
        throw ConfigError("instance: need key \"file\" or \"generator\"");
    }

    const std::string engine = string_at(j, "engine", "config");
    if (engine == "pimc") {
        config.engine = EngineKind::Pimc;
    } else if (engine == "gfmc") {
        config.engine = EngineKind::Gfmc;
    } else if (engine == "lab") {
        config.engine = EngineKind::Lab;
    } else {
        throw ConfigError("engine: unknown engine \"" + engine +
                          "\" (expected pimc, gfmc, or lab)");
    }

    config.schedule = Schedule::from_json(require_key(j, "schedule", "config").dump());

    if (j.contains("horizon")) {
        config.horizon = integer_at(j, "horizon", "config");
        if (config.horizon < 1) throw ConfigError("horizon: must be >= 1");
    }

    if (j.contains("seeds")) {
        const json& seeds = j.at("seeds");
        if (!seeds.is_array() || seeds.empty()) {
            throw ConfigError("seeds: must be a non-empty array of integers");
        }
        config.seeds.clear();
        for (const json& s : seeds) {
            if (!s.is_number_integer()) throw ConfigError("seeds: entries must be integers");
            config.seeds.push_back(s.get<std::uint64_t>());
        }
    } else if (j.contains("seed")) {
        config.seeds = {static_cast<std::uint64_t>(integer_at(j, "seed", "config"))};
    }

    if (j.contains("checkpoint_every")) {
        config.checkpoint_every = integer_at(j, "checkpoint_every", "config");
        if (config.checkpoint_every < 0) throw ConfigError("checkpoint_every: must be >= 0");
    }
    if (j.contains("output_dir")) config.output_dir = string_at(j, "output_dir", "config");
    if (j.contains("plots")) {
        const json& v = j.at("plots");
        if (!v.is_boolean()) throw ConfigError("plots: must be a boolean");
        config.plots = v.get<bool>();
    }

    if (j.contains("pimc")) parse_pimc_section(j.at("pimc"), config);
    if (j.contains("gfmc")) parse_gfmc_section(j.at("gfmc"), config);
    if (j.contains("lab")) parse_lab_section(j.at("lab"), config);
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str(), path);
}

// --- Summary serialization ------------------------------------------------------------

std::string RunSummary::to_json(const ExperimentConfig& config) const {
    json j;
    j["schema_version"] = 1;
    j["engine"] = engine;
    j["schedule"] = json::parse(config.schedule.to_json());
    j["instance"] = json{{"n_spins", n_spins}, {"source", instance_source}};
    j["e_min"] = e_min ? json(*e_min) : json(nullptr);
    j["hit_rate"] = hit_rate ? json(*hit_rate) : json(nullptr);
    j["mean_best_energy"] = mean_best_energy;
    json jr = json::array();
    for (const ResultRecord& record : runs) jr.push_back(result_to_json(record));
    j["runs"] = jr;
    json jl = json::array();
    for (const std::string& report : lab_reports) jl.push_back(json::parse(report));
    j["lab_reports"] = jl;
    j["lab_pass"] = lab_pass;
    return j.dump(2) + "\n";
}

// --- Experiment driver ------------------------------------------------------------------

RunSummary run_experiment(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    if (const char* env = std::getenv("QAE_OUT"); env != nullptr && *env != '\0') {
        config.output_dir = env;
    }
    std::filesystem::create_directories(config.output_dir);
    const IsingInstance instance = config.resolve_instance();

    RunSummary summary;
    summary.schedule_id = config.schedule.label();
    summary.n_spins = instance.n_spins();
    summary.instance_source = describe_source(config.source);

    if (config.engine == EngineKind::Lab) {
        summary.engine = "lab";
        ChainSpec spec;
        spec.kind = config.lab.chain;
        spec.instance = instance;
        spec.pimc = config.pimc;
        spec.gfmc = config.gfmc;
        spec.schedule = config.schedule;
        const std::vector<LabReport> reports = run_lab_checks(spec, config.lab);
        for (const LabReport& report : reports) {
            summary.lab_reports.push_back(report.to_json());
            summary.lab_pass = summary.lab_pass && report.pass;
        }
    } else {
        summary.engine = config.engine == EngineKind::Pimc ? "pimc" : "gfmc";
        if (instance.n_spins() <= kDefaultEnumerationCap) {
            summary.e_min = ground_states_bruteforce(instance).e_min;
        }

        const std::string stem = std::string("trace_") + summary.engine + "_" +
                                 sanitize_label(config.schedule.label()) + "_seed";
        std::vector<SeedOutcome> outcomes(config.seeds.size());
        const std::size_t workers =
            std::max<std::size_t>(1, std::thread::hardware_concurrency());
        for (std::size_t base = 0; base < config.seeds.size(); base += workers) {
            const std::size_t stop = std::min(base + workers, config.seeds.size());
            std::vector<std::future<SeedOutcome>> batch;
            for (std::size_t i = base; i < stop; ++i) {
                const std::uint64_t seed = config.seeds[i];
                const std::string trace_path =
                    (std::filesystem::path(config.output_dir) /
                     (stem + std::to_string(seed) + ".csv"))
                        .string();
                batch.push_back(std::async(
                    std::launch::async, [&config, &instance, seed, trace_path]() {
                        return config.engine == EngineKind::Pimc
                                   ? run_pimc_seed(config, instance, seed, trace_path,
                                                   config.plots)
                                   : run_gfmc_seed(config, instance, seed, trace_path,
                                                   config.plots);
                    }));
            }
            for (std::size_t i = base; i < stop; ++i) {
                outcomes[i] = batch[i - base].get();
            }
        }

        double best_sum = 0.0;
        long long hits = 0;
        for (SeedOutcome& outcome : outcomes) {
            ResultRecord& record = outcome.record;
            best_sum += record.final_best_energy;
            if (summary.e_min) {
                const bool hit = record.final_best_energy <= *summary.e_min + 1e-9;
                record.hit = hit;
                if (!hit) record.steps_to_first_hit.reset();
                if (hit) ++hits;
            } else {
                record.hit.reset();
                record.steps_to_first_hit.reset();
            }
            summary.runs.push_back(record);
        }
        summary.mean_best_energy = best_sum / static_cast<double>(outcomes.size());
        if (summary.e_min) {
            summary.hit_rate = static_cast<double>(hits) /
                               static_cast<double>(outcomes.size());
        }

        if (config.plots) {
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                const std::string plot_path =
                    (std::filesystem::path(config.output_dir) /
                     ("plot_" + summary.engine + "_seed" +
                      std::to_string(config.seeds[i]) + ".svg"))
                        .string();
                write_svg_plot(plot_path,
                               summary.engine + " seed " + std::to_string(config.seeds[i]),
                               outcomes[i].plot);
            }
        }
    }

    const std::string text = summary.to_json(config);
    const std::vector<std::string> violations =
        validate_json_subset(summary_schema_text(), text);
    if (!violations.empty()) {
        throw std::logic_error("summary JSON violates its own schema: " + violations.front());
    }
    summary.summary_path =
        (std::filesystem::path(config.output_dir) / "summary.json").string();
    std::ofstream out(summary.summary_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + summary.summary_path);
    out << text;
    return summary;
}

// --- Schedule comparison ------------------------------------------------------------

CompareTable compare_schedules(const std::vector<ExperimentConfig>& configs) {
    if (configs.size() < 2) {
        throw std::invalid_argument("compare_schedules: need at least two configs");
    }
    const IsingInstance reference = configs.front().resolve_instance();
    for (std::size_t i = 1; i < configs.size(); ++i) {
        if (!(configs[i].resolve_instance() == reference)) {
            throw std::invalid_argument("compare_schedules: configs do not share the instance");
        }
        if (configs[i].seeds != configs.front().seeds) {
            throw std::invalid_argument(
                "compare_schedules: configs do not share the seed list");
        }
    }

    CompareTable table;
    for (const ExperimentConfig& config : configs) {
        if (config.engine == EngineKind::Lab) {
            throw std::invalid_argument("compare_schedules: lab configs have no hit rate");
        }
        const RunSummary summary = run_experiment(config);
        CompareRow row;
        row.schedule_id = summary.schedule_id;
        row.hit_rate = summary.hit_rate;
        row.mean_best_energy = summary.mean_best_energy;
        double steps_sum = 0.0;
        long long steps_count = 0;
        for (const ResultRecord& record : summary.runs) {
            if (record.hit.value_or(false) && record.steps_to_first_hit) {
                steps_sum += static_cast<double>(*record.steps_to_first_hit);
                ++steps_count;
            }
        }
        if (steps_count > 0) {
            row.mean_steps_to_first_hit = steps_sum / static_cast<double>(steps_count);
        }

        constexpr double kDelta = 0.01;
        const Schedule& schedule = config.schedule;
        switch (schedule.kind) {
            case ScheduleKind::Corollary1:
            case ScheduleKind::PowerGamma: {
                TimeToThresholdParams params;
                params.r_l1 = schedule.param("R") * schedule.param("L1");
                params.trotter_m = static_cast<int>(schedule.param("M"));
                params.beta = schedule.param("beta");
                row.t1_estimate =
                    time_to_threshold(kDelta, TimeToThresholdVariant::PimcT1, params);
                break;
            }
            case ScheduleKind::TsallisT1:
            case ScheduleKind::TsallisGamma: {
                TimeToThresholdParams params;
                params.n_spins = static_cast<double>(reference.n_spins());
                row.t2_estimate =
                    time_to_threshold(kDelta, TimeToThresholdVariant::TsallisT2, params);
                break;
            }
            default:
                break;
        }
        table.rows.push_back(row);
    }
    return table;
}

std::string CompareTable::render() const {
    std::ostringstream out;
    out << std::left << std::setw(28) << "schedule" << std::right << std::setw(10)
        << "hit_rate" << std::setw(16) << "mean_best" << std::setw(20) << "steps_to_hit"
        << std::setw(14) << "t1(0.01)" << std::setw(14) << "t2(0.01)" << "\n";
    out << std::string(102, '-') << "\n";
    auto cell = [](std::optional<double> v, int precision, bool fixed) {
        std::ostringstream c;
        if (v) {
            if (fixed) c << std::fixed;
            c << std::setprecision(precision) << *v;
        } else {
            c << "-";
        }
        return c.str();
    };
    for (const CompareRow& row : rows) {
        out << std::left << std::setw(28) << row.schedule_id << std::right << std::setw(10)
            << cell(row.hit_rate, 3, true) << std::setw(16)
            << cell(row.mean_best_energy, 6, true) << std::setw(20)
            << cell(row.mean_steps_to_first_hit, 1, true) << std::setw(14)
            << cell(row.t1_estimate, 3, false) << std::setw(14)
            << cell(row.t2_estimate, 3, false) << "\n";
    }
    return out.str();
}

// --- Summary schema ---------------------------------------------------------------------

const char* summary_schema_text() {
    return R"schema({
  "type": "object",
  "required": ["schema_version", "engine", "schedule", "instance", "runs", "mean_best_energy", "lab_pass"],
  "properties": {
    "schema_version": {"type": "integer", "enum": [1]},
    "engine": {"type": "string", "enum": ["pimc", "gfmc", "lab"]},
    "schedule": {"type": "object"},
    "instance": {
      "type": "object",
      "required": ["n_spins", "source"],
      "properties": {
        "n_spins": {"type": "integer"},
        "source": {"type": "string"}
      }
    },
    "e_min": {"type": ["number", "null"]},
    "hit_rate": {"type": ["number", "null"]},
    "mean_best_energy": {"type": "number"},
    "runs": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["seed", "schedule_id", "final_best_energy", "hit", "steps_to_first_hit", "trace_path"],
        "properties": {
          "seed": {"type": "integer"},
          "schedule_id": {"type": "string"},
          "final_best_energy": {"type": "number"},
          "hit": {"type": ["boolean", "null"]},
          "steps_to_first_hit": {"type": ["integer", "null"]},
          "trace_path": {"type": "string"}
        }
      }
    },
    "lab_reports": {"type": "array", "items": {"type": "object"}},
    "lab_pass": {"type": "boolean"}
  }
}
)schema";
}

std::vector<std::string> validate_json_subset(const std::string& schema_text,
                                              const std::string& doc_text) {
    std::vector<std::string> errors;
    json schema;
    json doc;
    try {
        schema = json::parse(schema_text);
    } catch (const json::parse_error& err) {
        errors.push_back(std::string("schema: ") + err.what());
        return errors;
    }
    try {
        doc = json::parse(doc_text);
    } catch (const json::parse_error& err) {
        errors.push_back(std::string("document: ") + err.what());
        return errors;
    }
    validate_node(schema, doc, "$", errors);
    return errors;
}

// --- SVG plots ---------------------------------------------------------------------------

namespace {

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series) {
    constexpr double kWidth = 800.0;
    constexpr double kHeight = 500.0;
    constexpr double kMargin = 60.0;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool any = false;
    for (const PlotSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (!any) {
                x_min = x_max = x;
                y_min = y_max = y;
                any = true;
            } else {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
    }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;

    auto sx = [&](double x) {
        return kMargin + (x - x_min) / (x_max - x_min) * (kWidth - 2 * kMargin);
    };
    auto sy = [&](double y) {
        return kHeight - kMargin - (y - y_min) / (y_max - y_min) * (kHeight - 2 * kMargin);
    };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write plot file " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape_xml(title) << "</text>\n";
    // axes
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
        << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
        << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << x_min << "</text>\n";
    out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 20
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << x_max
        << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << kHeight - kMargin
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << y_min
        << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << kMargin + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << y_max
        << "</text>\n";

    int color_index = 0;
    double legend_y = kMargin;
    for (const PlotSeries& s : series) {
        const char* color = kColors[color_index % 4];
        ++color_index;
        if (s.points.size() >= 2) {
            out << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                out << sx(x) << "," << sy(y) << " ";
            }
            out << "\"/>\n";
        }
        out << "<text x=\"" << kWidth - kMargin - 150 << "\" y=\"" << legend_y
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
            << escape_xml(s.label) << "</text>\n";
        legend_y += 16.0;
    }
    out << "</svg>\n";
}

}  // namespace qa
