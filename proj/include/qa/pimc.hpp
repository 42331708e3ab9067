#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qa/ising.hpp"
#include "qa/rng.hpp"
#include "qa/schedules.hpp"

namespace qa {

// --- Replica (Trotter-slice) configurations ---------------------------------
//
// N spins replicated over M slices, periodic in the slice index. Layout is
// s[k*n + i] so a slice is contiguous; the canonical index treats bit k*n+i
// set as spin -1, matching state_from_index on n*m bits.
struct ReplicaConfig {
    int n = 0;
    int m = 0;
    std::vector<std::int8_t> s;

    static ReplicaConfig aligned(int n, int m, std::int8_t value = +1);
    static ReplicaConfig random(int n, int m, Rng& rng);
    static ReplicaConfig from_index(std::uint64_t index, int n, int m);

    std::int8_t spin(int i, int k) const { return s[static_cast<std::size_t>(k) * n + i]; }
    void flip(int i, int k) { s[static_cast<std::size_t>(k) * n + i] *= -1; }
    int bits() const { return n * m; }
    std::uint64_t index() const;
    SpinConfig slice(int k) const;
};

enum class AcceptanceKind { HeatBath, Metropolis, Tsallis };
// The base acceptance function g applied to a ratio u.
enum class GKind { HeatBath, Metropolis };

struct PimcParams {
    double beta = 1.0;
    int trotter_m = 1;
    AcceptanceKind acceptance = AcceptanceKind::HeatBath;
    double tsallis_q = 2.0;        // only for AcceptanceKind::Tsallis; must be > 1
    GKind tsallis_g = GKind::HeatBath;  // g wrapped around the generalized ratio

    void validate() const;
    GKind g_kind() const;
};

// Classical term, averaged over slices (so -F0/T0 with T0 = 1/beta is exactly
// the first exponent of the replica Boltzmann weight).
double replica_F0(const IsingInstance& instance, const ReplicaConfig& config);
// Trotter-bond term -sum_k sum_i S_i^k S_i^{k+1}, periodic; for M=1 the bond
// is degenerate (S*S = 1) and F1 = -N identically.
double replica_F1(const ReplicaConfig& config);

// Acceptance functions g with the stationarity identity g(1/u) = g(u)/u.
double acceptance_g(GKind kind, double u);

struct ClampStats {
    long long exponent_clamps = 0;  // exponent pushed back into [-700, 700]
    long long floor_clamps = 0;     // schedule value raised to the 1e-300 floor
    long long bracket_rejects = 0;  // generalized-acceptance bracket <= 0
};

// Controls at chain step t, resolved from the schedule:
//   t0         classical-term temperature (1/beta, or T(t) in SA mode)
//   gamma_bond Trotter-bond coupling gamma(t) (= 1/T1(t)); 0 in SA mode
struct PimcControls {
    double t0;
    double gamma_bond;
    bool floor_clamped;
};
PimcControls pimc_controls_at(double t, const PimcParams& params, const Schedule& schedule);

// q(y;t)/q(x;t) from the free-energy deltas; the partition function cancels.
double boltzmann_ratio_from_deltas(double d_f0, double d_f1, double t0, double gamma_bond,
                                   ClampStats* stats = nullptr);
double boltzmann_ratio(const ReplicaConfig& x, const ReplicaConfig& y, double t,
                       const IsingInstance& instance, const PimcParams& params,
                       const Schedule& schedule, ClampStats* stats = nullptr);

// Generalized (power-law deformed) acceptance ratio, q > 1. A non-positive
// bracket 1 + (q-1) dF1/T1 makes the expression complex-valued; the move is
// rejected (u = 0) and counted.
double tsallis_u_from_deltas(double d_f0, double d_f1, double t0, double gamma_bond, double q,
                             ClampStats* stats = nullptr);
double tsallis_u(const ReplicaConfig& x, const ReplicaConfig& y, double t,
                 const IsingInstance& instance, const PimcParams& params,
                 const Schedule& schedule, ClampStats* stats = nullptr);

// --- The chain ----------------------------------------------------------------
//
// One chain step = one uniformly proposed single-(site,slice) flip, accepted
// with g(ratio). Slice energies and the bond term are maintained
// incrementally; a sweep is n*m steps.
class PimcChain {
  public:
    PimcChain(const IsingInstance& instance, PimcParams params, Schedule schedule, Rng rng,
              ReplicaConfig initial, long long t_start = 0);

    void step();
    void sweep();

    long long t() const { return t_; }
    const ReplicaConfig& state() const { return state_; }
    const Rng& rng() const { return rng_; }

    double f0() const;  // (1/M) sum of slice energies
    double f1() const { return f1_; }
    double best_energy() const { return best_energy_; }
    long long best_energy_step() const { return best_energy_step_; }
    const SpinConfig& best_config() const { return best_config_; }

    long long proposed() const { return proposed_; }
    long long accepted() const { return accepted_; }
    const ClampStats& clamp_stats() const { return clamp_stats_; }

  private:
    const IsingInstance* instance_;
    PimcParams params_;
    Schedule schedule_;
    Rng rng_;
    ReplicaConfig state_;
    std::vector<double> slice_energy_;
    double f1_ = 0.0;
    long long t_ = 0;
    long long proposed_ = 0;
    long long accepted_ = 0;
    ClampStats clamp_stats_;
    double best_energy_ = 0.0;
    long long best_energy_step_ = 0;
    SpinConfig best_config_;
};

// Spec-level convenience: advance a state by one sweep (n*m proposals) at
// chain time t, consuming randomness from rng.
ReplicaConfig mc_sweep(ReplicaConfig state, long long t, const IsingInstance& instance,
                       const PimcParams& params, const Schedule& schedule, Rng& rng);

// --- Annealing driver ----------------------------------------------------------

struct TraceRow {
    long long step;
    double control_value;       // schedule value applied at the last step
    double mean_slice_energy;   // (1/M) sum_k E0(slice k)
    double best_energy;
    double acceptance_rate;     // over the window since the previous row
    long long clamp_count;      // cumulative exponent clamps
};

struct AnnealTrace {
    std::vector<TraceRow> rows;
    double final_best_energy = 0.0;
    long long best_energy_step = 0;  // chain step at which the final best first appeared
    SpinConfig best_config;
    long long steps = 0;
    long long accepted = 0;
    ClampStats clamp_stats;

    static const char* csv_header();
    void write_csv(std::ostream& out) const;
};

struct AnnealOptions {
    long long checkpoint_every = 0;  // 0 -> max(1, horizon/200)
    bool start_ordered = false;      // all spins +1 instead of a random start
};

AnnealTrace run_annealing(const IsingInstance& instance, const PimcParams& params,
                          const Schedule& schedule, long long horizon, std::uint64_t seed,
                          const AnnealOptions& options = {});

}  // namespace qa
