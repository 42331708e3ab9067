#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "qa/ising.hpp"
#include "qa/rng.hpp"
#include "qa/schedules.hpp"

namespace qa {

enum class GfmcVariant { G1, G2 };

enum class PopulationControlKind { None, SplitKill };

struct PopulationControl {
    PopulationControlKind kind = PopulationControlKind::None;
    double split_factor = 2.0;  // split a walker heavier than split_factor * mean
    double kill_factor = 0.5;   // stochastically kill below kill_factor * mean
};

struct GfmcParams {
    std::optional<double> dt;   // empty -> 0.5/(E_max - E_T + N Gamma(0))
    std::optional<double> e_t;  // empty -> midpoint of the coupling-sum energy bounds
    int n_walkers = 1000;
    GfmcVariant variant = GfmcVariant::G1;
    PopulationControl control;
};

// Reference-energy default: midpoint of the [-bound, +bound] energy envelope;
// optionally the true E_min from brute force on small systems.
double auto_reference_energy(const IsingInstance& instance, bool from_bruteforce = false,
                             int cap = kDefaultEnumerationCap);
// Time-step default keeping the diagonal of the linear Green's function
// positive with a factor-2 margin.
double auto_time_step(const IsingInstance& instance, double gamma0, double e_t);

struct ResolvedGfmc {
    double dt;
    double e_t;
};
ResolvedGfmc resolve_gfmc(const IsingInstance& instance, const GfmcParams& params,
                          const Schedule& schedule);

// --- Linear Green's function (single-flip walk) -------------------------------

// Unnormalized matrix element: diagonal 1 - dt (E0(x) - E_T); dt Gamma(t) one
// flip away; 0 otherwise. A negative diagonal means dt/E_T violate the
// validity condition and is rejected loudly.
double g1_hat(const SpinConfig& y, const SpinConfig& x, double t, const IsingInstance& instance,
              const ResolvedGfmc& r, const Schedule& schedule);

// Walker weight w(x;t) = 1 - dt (E0(x) - E_T) + N dt Gamma(t) = sum_y g1_hat(y,x).
double weight_w(const SpinConfig& x, double t, const IsingInstance& instance,
                const ResolvedGfmc& r, const Schedule& schedule);

struct G1Row {
    double stay;       // 1 - N dt Gamma / w(x)
    double move_each;  // dt Gamma / w(x), to each of the N single-flip neighbors
};
G1Row g1_transition(const SpinConfig& x, double t, const IsingInstance& instance,
                    const ResolvedGfmc& r, const Schedule& schedule);

// Stationary distribution of the normalized single-flip walk: w(x;t)/sum w.
// Both this form and its traceless simplification
//   q(x;t) = 1/2^N - dt E0(x) / (2^N (1 + dt E_T + N dt Gamma(t)))
// are computed and must agree to 1e-12 (requires sum_x E0(x) = 0, which holds
// for pairwise couplings and fields and is asserted).
std::vector<double> stationary_q1(double t, const IsingInstance& instance,
                                  const ResolvedGfmc& r, const Schedule& schedule,
                                  int cap = kDefaultEnumerationCap);

// --- Exponential Green's function (all-to-all walk) ---------------------------

// Transition probability to a state at Hamming distance delta:
//   {cosh(dt Gamma)/e^{dt Gamma}}^N tanh^delta(dt Gamma);
// independent of E0(x), rows sum to 1.
double g2_entry(int hamming_delta, int n_spins, double dt_gamma);
double g2_transition(const SpinConfig& y, const SpinConfig& x, double t,
                     const ResolvedGfmc& r, const Schedule& schedule);
// Weight w2(x;t) = e^{dt N Gamma} e^{-dt E0(x)}.
double g2_weight(const SpinConfig& x, double t, const IsingInstance& instance,
                 const ResolvedGfmc& r, const Schedule& schedule);

// --- Walker population ----------------------------------------------------------

struct Walker {
    SpinConfig config;
    double weight;
    double energy;  // E0(config), maintained incrementally
};

struct WalkerPopulation {
    std::vector<Walker> walkers;
    long long step = 0;
    // Global log-factor split off when raw weights approach the double range;
    // true cumulative weight of walker i is weight_i * exp(log_scale).
    double log_scale = 0.0;
};

WalkerPopulation init_population(const IsingInstance& instance, int n_walkers, Rng& rng);

// One step: every walker multiplies its weight by w (or w2) at its current
// position, then moves by the variant's transition row; optional split/kill
// population control afterwards (weight-preserving in expectation).
void step_population(WalkerPopulation& pop, double t, const IsingInstance& instance,
                     const GfmcParams& params, const ResolvedGfmc& r, const Schedule& schedule,
                     Rng& rng);

// Exact power-method oracle: psi_{k+1}(y) = sum_x ghat(y,x;t_k) psi_k(x),
// with ghat the unnormalized variant kernel (G1: g1_hat; G2: G2 * w2).
std::vector<double> iterate_exact(std::vector<double> psi0, const IsingInstance& instance,
                                  const GfmcParams& params, const ResolvedGfmc& r,
                                  const Schedule& schedule, long long n_steps,
                                  int cap = kDefaultEnumerationCap);

// Weighted histogram over visited configurations, normalized to 1.
std::vector<std::pair<SpinConfig, double>> weighted_histogram(const WalkerPopulation& pop);

struct GfmcAnswer {
    SpinConfig config;
    double energy;
    double mass;  // histogram share of the argmax state
};
GfmcAnswer extract_answer(const WalkerPopulation& pop, const IsingInstance& instance);

// --- Annealing driver ------------------------------------------------------------

struct GfmcTraceRow {
    long long step;
    double gamma;
    double mean_weight;           // exp(log_scale) * mean raw weight (saturates for long runs)
    double effective_population;  // (sum w)^2 / sum w^2
    double best_energy;
    double histogram_entropy;     // Shannon entropy (nats) of the weighted histogram
};

struct GfmcTrace {
    std::vector<GfmcTraceRow> rows;
    double final_best_energy = 0.0;
    long long best_energy_step = 0;
    SpinConfig best_config;
    GfmcAnswer answer;  // argmax of the final weighted histogram
    long long steps = 0;

    static const char* csv_header();
    void write_csv(std::ostream& out) const;
};

GfmcTrace run_gfmc(const IsingInstance& instance, const GfmcParams& params,
                   const Schedule& schedule, long long horizon, std::uint64_t seed,
                   long long checkpoint_every = 0);

}  // namespace qa
