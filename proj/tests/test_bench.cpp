#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qa/bench.hpp"
#include "qa/errors.hpp"

using qa::EngineKind;
using qa::ExperimentConfig;
using qa::RunSummary;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("bench-test-out") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Expect a ConfigError whose message contains `fragment`.
template <typename Fn>
std::string config_error_message(Fn&& fn) {
    try {
        fn();
    } catch (const qa::ConfigError& err) {
        return err.what();
    }
    FAIL("expected a configuration error");
    return {};
}

std::string pimc_config_text(const std::string& output_dir,
                             const std::string& extra = std::string{}) {
    return std::string(R"({
  "instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 9}},
  "engine": "pimc",
  "pimc": {"beta": 2.0, "trotter_M": 2, "acceptance": {"kind": "heat_bath"}},
  "schedule": {"kind": "corollary1",
               "params": {"M": 2, "beta": 2.0, "R": 4, "L1": 4}},
  "horizon": 2000,
  "seeds": [1, 2, 3],
  "checkpoint_every": 500,
  "output_dir": ")") +
           output_dir + "\"" + extra + "\n}\n";
}

struct EnvGuard {
    const char* name;
    explicit EnvGuard(const char* name) : name(name) {}
    ~EnvGuard() { ::unsetenv(name); }
};

}  // namespace

TEST_CASE("config parsing: a full document round-trips into typed fields") {
    const ExperimentConfig config =
        ExperimentConfig::from_json_text(pimc_config_text("out-dir"), "inline");
    CHECK(config.engine == EngineKind::Pimc);
    REQUIRE(config.source.generator.has_value());
    CHECK(config.source.generator->n == 2);
    CHECK(config.source.generator->dist == qa::CouplingDist::PlusMinusJ);
    CHECK(config.source.generator->seed == 9);
    CHECK(config.pimc.beta == 2.0);
    CHECK(config.pimc.trotter_m == 2);
    CHECK(config.pimc.acceptance == qa::AcceptanceKind::HeatBath);
    CHECK(config.schedule.kind == qa::ScheduleKind::Corollary1);
    CHECK(config.horizon == 2000);
    CHECK(config.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(config.checkpoint_every == 500);
    CHECK(config.output_dir == "out-dir");
    CHECK_FALSE(config.plots);

    const qa::IsingInstance instance = config.resolve_instance();
    CHECK(instance.n_spins() == 2);
}

TEST_CASE("config parsing: missing keys are named") {
    const std::string no_instance = R"({"engine": "pimc", "schedule": {"kind": "constant",
        "params": {"value": 1.0}}})";
    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(no_instance, "x.json");
          }).find("missing key \"instance\"") != std::string::npos);

    const std::string no_engine = R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}},
        "schedule": {"kind": "constant", "params": {"value": 1.0}}})";
    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(no_engine, "x.json");
          }).find("missing key \"engine\"") != std::string::npos);

    const std::string no_schedule = R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}},
        "engine": "pimc"})";
    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(no_schedule, "x.json");
          }).find("missing key \"schedule\"") != std::string::npos);
}

TEST_CASE("config parsing: syntax errors report the origin and line") {
    const std::string broken = "{\n  \"engine\": \"pimc\",\n  oops\n}";
    const std::string message =
        config_error_message([&] { ExperimentConfig::from_json_text(broken, "bad.json"); });
    CHECK(message.find("bad.json:3") != std::string::npos);
}

TEST_CASE("config parsing: enumerations reject unknown tokens") {
    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "annealer",
                      "schedule": {"kind": "constant", "params": {"value": 1}}})",
                  "x");
          }).find("unknown engine") != std::string::npos);

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "uniform", "seed": 1}},
                      "engine": "pimc",
                      "schedule": {"kind": "constant", "params": {"value": 1}}})",
                  "x");
          }).find("unknown coupling distribution") != std::string::npos);

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "pimc",
                      "pimc": {"acceptance": {"kind": "glauber"}},
                      "schedule": {"kind": "constant", "params": {"value": 1}}})",
                  "x");
          }).find("unknown kind") != std::string::npos);

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "gfmc",
                      "gfmc": {"variant": "G3"},
                      "schedule": {"kind": "constant", "params": {"value": 1}}})",
                  "x");
          }).find("expected \"G1\" or \"G2\"") != std::string::npos);

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "pimc",
                      "pimc": {"start": "sideways"},
                      "schedule": {"kind": "constant", "params": {"value": 1}}})",
                  "x");
          }).find("expected \"random\" or \"ordered\"") != std::string::npos);
}

TEST_CASE("config parsing: seed lists and scalar promotion") {
    const std::string scalar = R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "pimc",
        "schedule": {"kind": "constant", "params": {"value": 1}}, "seed": 7})";
    CHECK(ExperimentConfig::from_json_text(scalar, "x").seeds ==
          std::vector<std::uint64_t>{7});

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "pimc",
                      "schedule": {"kind": "constant", "params": {"value": 1}},
                      "seeds": []})",
                  "x");
          }).find("non-empty array") != std::string::npos);

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "pimc",
                      "schedule": {"kind": "constant", "params": {"value": 1}},
                      "seeds": [1, "two"]})",
                  "x");
          }).find("entries must be integers") != std::string::npos);

    CHECK(config_error_message([&] {
              ExperimentConfig::from_json_text(
                  R"({"instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 1}}, "engine": "pimc",
                      "schedule": {"kind": "constant", "params": {"value": 1}},
                      "horizon": 0})",
                  "x");
          }).find("horizon: must be >= 1") != std::string::npos);
}

TEST_CASE("config parsing: a missing instance file fails at resolution") {
    ExperimentConfig config;
    config.source.file = "definitely-not-here.json";
    CHECK(config_error_message([&] { config.resolve_instance(); })
              .find("does not exist") != std::string::npos);
}

TEST_CASE("run_experiment: traces, summary, plots, and determinism") {
    const fs::path dir = fresh_dir("pimc-run");
    ExperimentConfig config =
        ExperimentConfig::from_json_text(pimc_config_text(dir.string()), "inline");
    config.plots = true;

    const RunSummary summary = run_experiment(config);
    CHECK(summary.engine == "pimc");
    CHECK(summary.n_spins == 2);
    CHECK(summary.instance_source.rfind("generator:", 0) == 0);
    REQUIRE(summary.e_min.has_value());
    REQUIRE(summary.runs.size() == 3);
    REQUIRE(summary.hit_rate.has_value());
    CHECK(*summary.hit_rate == doctest::Approx(1.0));

    for (std::uint64_t seed : {1, 2, 3}) {
        const fs::path trace =
            dir / ("trace_pimc_corollary1_seed" + std::to_string(seed) + ".csv");
        CHECK(fs::exists(trace));
        const fs::path plot = dir / ("plot_pimc_seed" + std::to_string(seed) + ".svg");
        CHECK(fs::exists(plot));
        const std::string svg = slurp(plot);
        CHECK(svg.find("<svg") != std::string::npos);
    }
    for (const qa::ResultRecord& record : summary.runs) {
        CHECK(fs::exists(record.trace_path));
        REQUIRE(record.hit.has_value());
        CHECK(*record.hit);
        REQUIRE(record.steps_to_first_hit.has_value());
        CHECK(*record.steps_to_first_hit >= 0);
    }

    // The written summary validates against the published schema.
    const std::string summary_text = slurp(summary.summary_path);
    CHECK(qa::validate_json_subset(qa::summary_schema_text(), summary_text).empty());

    // Re-running the identical config reproduces every artifact byte for byte.
    const std::string trace_before = slurp(dir / "trace_pimc_corollary1_seed2.csv");
    const RunSummary again = run_experiment(config);
    CHECK(slurp(dir / "trace_pimc_corollary1_seed2.csv") == trace_before);
    CHECK(slurp(again.summary_path) == summary_text);
}

TEST_CASE("run_experiment: walker engine with population control") {
    const fs::path dir = fresh_dir("gfmc-run");
    const std::string text = std::string(R"({
  "instance": {"generator": {"n": 2, "dist": "pm_j", "seed": 9}},
  "engine": "gfmc",
  "gfmc": {"dt": 0.1, "e_t": 0.0, "n_walkers": 64,
           "variant": "G1", "population_control": "split_kill"},
  "schedule": {"kind": "gfmc_power", "params": {"b": 1.0, "c": 0.5, "N": 2}},
  "horizon": 300,
  "seeds": [4, 5],
  "output_dir": ")") + dir.string() + "\"\n}\n";

    const RunSummary summary = run_experiment(ExperimentConfig::from_json_text(text, "inline"));
    CHECK(summary.engine == "gfmc");
    CHECK(summary.runs.size() == 2);
    REQUIRE(summary.hit_rate.has_value());
    CHECK(*summary.hit_rate == doctest::Approx(1.0));
    CHECK(fs::exists(dir / "trace_gfmc_gfmc_power_seed4.csv"));
    CHECK(qa::validate_json_subset(qa::summary_schema_text(),
                                   slurp(summary.summary_path))
              .empty());
}

TEST_CASE("run_experiment: lab engine embeds one report per executed check") {
    const fs::path dir = fresh_dir("lab-run");
    const std::string text = std::string(R"({
  "instance": {"generator": {"n": 1, "dist": "pm_j", "seed": 1}},
  "engine": "lab",
  "pimc": {"beta": 1.0, "trotter_M": 2},
  "lab": {"chain": "pimc_boltzmann", "check": "stationarity", "t_max": 100},
  "schedule": {"kind": "corollary1", "params": {"M": 2, "beta": 1.0, "R": 2, "L1": 4}},
  "output_dir": ")") + dir.string() + "\"\n}\n";

    const RunSummary summary = run_experiment(ExperimentConfig::from_json_text(text, "inline"));
    CHECK(summary.engine == "lab");
    REQUIRE(summary.lab_reports.size() == 1);
    CHECK(summary.lab_pass);
    const nlohmann::json report = nlohmann::json::parse(summary.lab_reports.front());
    CHECK(report.at("check") == "stationarity");
    CHECK(report.at("pass") == true);
    CHECK(qa::validate_json_subset(qa::summary_schema_text(),
                                   slurp(summary.summary_path))
              .empty());
}

TEST_CASE("run_experiment: QAE_OUT overrides the configured output directory") {
    const fs::path dir = fresh_dir("env-run");
    EnvGuard guard("QAE_OUT");
    ::setenv("QAE_OUT", dir.string().c_str(), 1);

    ExperimentConfig config =
        ExperimentConfig::from_json_text(pimc_config_text("never-created-dir"), "inline");
    config.seeds = {1};
    const RunSummary summary = run_experiment(config);
    CHECK(summary.summary_path.rfind(dir.string(), 0) == 0);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK_FALSE(fs::exists("never-created-dir"));
}

TEST_CASE("summary schema: the published file matches the embedded text") {
    const std::string on_disk = slurp(fs::path(QA_SOURCE_DIR) / "schemas/summary.schema.json");
    CHECK(on_disk == qa::summary_schema_text());
}

TEST_CASE("validate_json_subset: accepts valid documents, pinpoints violations") {
    const std::string schema = R"({
      "type": "object",
      "required": ["name", "count"],
      "properties": {
        "name": {"type": "string"},
        "count": {"type": "integer"},
        "ratio": {"type": ["number", "null"]},
        "mode": {"type": "string", "enum": ["fast", "slow"]},
        "values": {"type": "array", "items": {"type": "number"}}
      }
    })";

    CHECK(qa::validate_json_subset(
              schema, R"({"name": "x", "count": 3, "ratio": null, "mode": "fast",
                          "values": [1.0, 2.5]})")
              .empty());

    auto first_message = [&](const std::string& doc) {
        const std::vector<std::string> violations = qa::validate_json_subset(schema, doc);
        REQUIRE_FALSE(violations.empty());
        return violations.front();
    };

    CHECK(first_message(R"({"count": 3})").find("name") != std::string::npos);
    CHECK(first_message(R"({"name": "x", "count": "three"})").find("$.count") !=
          std::string::npos);
    CHECK(first_message(R"({"name": "x", "count": 1, "mode": "medium"})").find("enum") !=
          std::string::npos);
    CHECK(first_message(R"({"name": "x", "count": 1, "values": [1, "two"]})")
              .find("$.values[1]") != std::string::npos);
    CHECK(first_message(R"({"name": "x", "count": 1, "ratio": "high"})").find("$.ratio") !=
          std::string::npos);
    CHECK(first_message(R"([1, 2])").find("$") != std::string::npos);
}

TEST_CASE("compare_schedules: validation of shared instance, seeds, and engines") {
    ExperimentConfig a =
        ExperimentConfig::from_json_text(pimc_config_text("cmp-a"), "inline");
    ExperimentConfig b = a;
    b.output_dir = "cmp-b";

    CHECK_THROWS_AS(qa::compare_schedules({a}), std::invalid_argument);

    ExperimentConfig different_instance = b;
    different_instance.source.generator->n = 3;
    CHECK_THROWS_AS(qa::compare_schedules({a, different_instance}), std::invalid_argument);

    ExperimentConfig different_seeds = b;
    different_seeds.seeds = {1, 2};
    CHECK_THROWS_AS(qa::compare_schedules({a, different_seeds}), std::invalid_argument);

    ExperimentConfig lab = b;
    lab.engine = EngineKind::Lab;
    CHECK_THROWS_AS(qa::compare_schedules({a, lab}), std::invalid_argument);
}

TEST_CASE("compare_schedules: renders one row per schedule with closed-form estimates") {
    const fs::path dir_a = fresh_dir("cmp-run-a");
    const fs::path dir_b = fresh_dir("cmp-run-b");
    ExperimentConfig qa_arm =
        ExperimentConfig::from_json_text(pimc_config_text(dir_a.string()), "inline");
    qa_arm.schedule.id = "qa-boundary";

    ExperimentConfig sa_arm = qa_arm;
    sa_arm.output_dir = dir_b.string();
    sa_arm.pimc.trotter_m = 1;
    sa_arm.schedule = qa::Schedule{qa::ScheduleKind::LogInverseT, {{"N", 2.0}}};
    sa_arm.schedule.id = "sa-logline";

    const qa::CompareTable table = qa::compare_schedules({qa_arm, sa_arm});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].schedule_id == "qa-boundary");
    CHECK(table.rows[1].schedule_id == "sa-logline");
    CHECK(table.rows[0].t1_estimate.has_value());
    CHECK_FALSE(table.rows[1].t1_estimate.has_value());

    const std::string rendered = table.render();
    CHECK(rendered.find("qa-boundary") != std::string::npos);
    CHECK(rendered.find("sa-logline") != std::string::npos);
    CHECK(rendered.find("hit_rate") != std::string::npos);
}

TEST_CASE("write_svg_plot: emits labeled series") {
    const fs::path dir = fresh_dir("plots");
    const fs::path path = dir / "demo.svg";
    qa::write_svg_plot(path.string(), "demo title",
                       {{"alpha", {{0.0, 1.0}, {1.0, 2.0}, {2.0, 0.5}}},
                        {"beta", {{0.0, 0.0}, {2.0, 3.0}}}});
    const std::string svg = slurp(path);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("demo title") != std::string::npos);
    CHECK(svg.find("alpha") != std::string::npos);
    CHECK(svg.find("beta") != std::string::npos);
}
