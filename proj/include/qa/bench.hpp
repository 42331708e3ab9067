#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qa/ergodicity.hpp"
#include "qa/gfmc.hpp"
#include "qa/ising.hpp"
#include "qa/pimc.hpp"
#include "qa/schedules.hpp"

namespace qa {

// --- Experiment configuration -----------------------------------------------------

struct GeneratorSpec {
    int n = 2;
    CouplingDist dist = CouplingDist::PlusMinusJ;
    std::uint64_t seed = 1;
    double sigma = 1.0;
};

struct InstanceSource {
    std::optional<std::string> file;
    std::optional<GeneratorSpec> generator;
};

enum class EngineKind { Pimc, Gfmc, Lab };

struct LabRequest {
    ChainKind chain = ChainKind::PimcBoltzmann;
    std::string check = "all";  // lemma1|lemma2|weak_ergodicity|stationarity|
                                // monotonicity|condition_iii|all
    double t_max = 1e4;
    int blocks = 50;
    long long horizon = 100000;
};

struct ExperimentConfig {
    InstanceSource source;
    EngineKind engine = EngineKind::Pimc;
    PimcParams pimc;
    bool pimc_start_ordered = false;
    GfmcParams gfmc;
    LabRequest lab;
    Schedule schedule;
    long long horizon = 1000;
    std::vector<std::uint64_t> seeds{1};
    long long checkpoint_every = 0;
    std::string output_dir = "qae-out";
    bool plots = false;

    IsingInstance resolve_instance() const;

    // Parse errors carry the offending key (and the line for syntax errors).
    static ExperimentConfig from_json_text(const std::string& text, const std::string& origin);
    static ExperimentConfig load(const std::string& path);
};

// --- Results ---------------------------------------------------------------------------

struct ResultRecord {
    std::uint64_t seed = 0;
    std::string schedule_id;
    double final_best_energy = 0.0;
    std::optional<bool> hit;                    // only when E_min is known
    std::optional<long long> steps_to_first_hit;  // only when hit
    std::string trace_path;
};

struct RunSummary {
    std::string engine;
    std::string schedule_id;
    int n_spins = 0;
    std::string instance_source;
    std::optional<double> e_min;
    std::vector<ResultRecord> runs;
    std::optional<double> hit_rate;
    double mean_best_energy = 0.0;
    std::vector<std::string> lab_reports;  // JSON, one per executed check
    bool lab_pass = true;
    std::string summary_path;

    std::string to_json(const ExperimentConfig& config) const;
};

// Executes the configured engine for every seed (seeds fan out to a small
// worker pool), writes traces, a schema-validated summary.json, and optional
// SVG plots. Honors the QAE_OUT environment variable as an output-directory
// override.
RunSummary run_experiment(const ExperimentConfig& config);

// The named check (or "all" -> every check certified for the chain kind) on
// an exact chain; request.chain is ignored in favor of spec.kind.
std::vector<LabReport> run_lab_checks(const ChainSpec& spec, const LabRequest& request);

// --- Schedule comparison ------------------------------------------------------------

struct CompareRow {
    std::string schedule_id;
    std::optional<double> hit_rate;
    double mean_best_energy = 0.0;
    std::optional<double> mean_steps_to_first_hit;
    std::optional<double> t1_estimate;  // closed-form step count to delta = 0.01
    std::optional<double> t2_estimate;
};

struct CompareTable {
    std::vector<CompareRow> rows;
    std::string render() const;
};

// Requires all configs to share the instance and the seed list.
CompareTable compare_schedules(const std::vector<ExperimentConfig>& configs);

// --- Summary schema ---------------------------------------------------------------------

// The published schema (JSON Schema subset: type/properties/required/items/enum).
const char* summary_schema_text();
// Empty vector = valid; otherwise one message per violation.
std::vector<std::string> validate_json_subset(const std::string& schema_text,
                                              const std::string& doc_text);

// --- Plots -----------------------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series);

}  // namespace qa
