#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qa/gfmc.hpp"
#include "qa/ising.hpp"
#include "qa/pimc.hpp"
#include "qa/schedules.hpp"

namespace qa {

// --- Dense column-stochastic matrices -------------------------------------------

// entries[x*dim + y] = G(y, x; time_tag): column x is the outgoing
// distribution of source state x.
struct TransitionMatrix {
    int dim = 0;
    double time_tag = 0.0;
    std::vector<double> entries;

    double& at(int y, int x) { return entries[static_cast<std::size_t>(x) * dim + y]; }
    double at(int y, int x) const { return entries[static_cast<std::size_t>(x) * dim + y]; }
    bool column_stochastic(double tol = 1e-12) const;
};

// (later * earlier): the two-step chain that applies `earlier` first.
TransitionMatrix matrix_product(const TransitionMatrix& later, const TransitionMatrix& earlier);

// 1 - min over column pairs of the overlap sum_z min(G(z,x), G(z,y)).
double ergodicity_coefficient(const TransitionMatrix& g);

// Max over column pairs of ||col_x - col_y||_1; the total-variation diameter
// over point-mass starts (and hence over all starts).
double tv_diameter(const TransitionMatrix& g);

// --- Exact chains -----------------------------------------------------------------

enum class ChainKind { PimcBoltzmann, PimcTsallis, GfmcG1, GfmcG2 };

struct ChainSpec {
    ChainKind kind = ChainKind::PimcBoltzmann;
    IsingInstance instance{1, {}};
    PimcParams pimc;    // pimc_* kinds
    GfmcParams gfmc;    // gfmc_* kinds
    Schedule schedule;
    int max_bits = 20;  // cap on state-space bits (dim = 2^bits)
};

ChainKind chain_kind_from_name(const std::string& name);
std::string chain_kind_name(ChainKind kind);

// A chain small enough to enumerate: per-state classical/kinetic terms are
// precomputed; columns of G(t) are generated on demand.
class ExactChain {
  public:
    explicit ExactChain(ChainSpec spec);

    const ChainSpec& spec() const { return spec_; }
    ChainKind kind() const { return spec_.kind; }
    int bits() const { return bits_; }
    int dim() const { return dim_; }
    bool has_f1() const { return !f1_.empty(); }
    double f0(int x) const { return f0_[x]; }
    double f1(int x) const { return f1_[x]; }

    int degree(int x) const;
    int neighbor(int x, int j) const;
    // Uniform proposal probability; the minimum non-vanishing P(y,x).
    double generation_probability() const;

    // Column x of G(t): off-diagonal entries per neighbor order, and the
    // diagonal by complement (so columns sum to 1 identically).
    void column(int x, double t, std::vector<double>& offdiag, double& diag) const;

    // Candidate stationary vector: replica Boltzmann weights (PIMC kinds,
    // including the generalized-acceptance chain, whose true stationary state
    // is unknown), the walker closed form (G1), or uniform (G2).
    std::vector<double> stationary_candidate(double t) const;

    // Controls entering the bound formulas.
    double t0_at(double t) const;          // classical-term temperature (PIMC kinds)
    double gamma_bond_at(double t) const;  // Trotter bond 1/T1(t) (PIMC kinds)
    double gamma_at(double t) const;       // transverse field (GFMC kinds)
    const ResolvedGfmc& gfmc() const;
    GKind g_kind() const;

  private:
    double acceptance(int x, int y, double t0_val, double gamma_bond) const;

    ChainSpec spec_;
    int bits_ = 0;
    int dim_ = 0;
    std::vector<double> f0_;
    std::vector<double> f1_;
    ResolvedGfmc gfmc_{};
};

TransitionMatrix build_matrix(const ExactChain& chain, double t, int dim_cap = 4096);

// --- Structural constants ------------------------------------------------------------

struct StructuralConstants {
    long long r_steps = 0;   // min over x outside S_m of max BFS distance
    double l0 = 0.0;         // max |F0 change| over single moves
    double l1 = 0.0;         // max |F1 change| over single moves
    double w_min = 0.0;      // min non-vanishing generation probability
    std::vector<int> s_m;    // local maxima of F1 under the move set
    int x_star = 0;          // argmin in the R definition (first canonical on ties)
};

StructuralConstants structural_constants(const ExactChain& chain);

// --- Reports ----------------------------------------------------------------------------

struct Witness {
    double t;
    int x;
    int y;  // -1 for diagonal/state-level witnesses
    double value;
    double bound;
};

struct LabReport {
    std::string check;
    bool pass = true;
    double worst_slack = 0.0;
    std::vector<Witness> witnesses;  // violations, worst first (capped)
    std::optional<long long> t1_located;
    std::map<std::string, double> metrics;

    std::string to_json() const;
};

// Log-spaced sample times {10^1..10^6} plus the first `head` integer steps.
std::vector<double> default_t_grid(double t_max = 1e6, int head = 100);

// Override hook for negative-control experiments (corrupted constants).
struct LemmaOverrides {
    std::optional<double> l0;
    std::optional<double> l1;
    std::optional<double> e_min_shift;  // lemma 2: replace E_min by E_min + shift
};

// Entrywise lower bound w g(1) exp(-L0/T0 - L1/T1(t)) on off-diagonal moves,
// and the same bound on the diagonal for states outside S_m beyond a located
// t1 (predicate must hold 1000 consecutive steps).
LabReport verify_lemma1(const ExactChain& chain, const std::vector<double>& t_samples,
                        const LemmaOverrides& overrides = {});

// Walker analogue: bound dt Gamma(t) / (1 - dt (E_min - E_T) + N dt Gamma(t));
// the diagonal part is asserted only under decreasing schedules (the lemma's
// premise).
LabReport verify_lemma2(const ExactChain& chain, const std::vector<double>& t_samples,
                        const LemmaOverrides& overrides = {});

struct BlockRow {
    int k;
    double one_minus_alpha;
    double bound;
    double partial_sum;
};

struct WeakErgodicityReport {
    LabReport report;
    std::vector<BlockRow> blocks;
};

// Exact R-step block products: checks every block against the analytic lower
// bound on 1 - alpha, accumulates partial sums, fits the tail against log k,
// and reports plateau metrics (a plateau means the summability guarantee is
// lost at this horizon, not a proof of non-ergodicity).
WeakErgodicityReport weak_ergodicity_diagnostic(const ExactChain& chain, int blocks_k);

// ||G(t) q(t) - q(t)||_1 for the chain's stationary candidate.
double stationarity_residual(const ExactChain& chain, double t);

// q(x;t+1) >= q(x;t) for kinetic-term global minima (PIMC) or negative-energy
// states (GFMC G1) at every t; the opposite direction for the remaining states
// beyond a located t1.
LabReport monotonicity_check(const ExactChain& chain, long long t_max);

struct ConditionIiiReport {
    LabReport report;
    double total = 0.0;            // sum of ||q(t+1) - q(t)||_1 over the horizon
    double tail_increment = 0.0;   // contribution of the last decade [horizon/10, horizon)
    long long t1_used = 0;
    double bound = 0.0;            // 2 t1 + 2 (PIMC) or 2 (GFMC)
};

ConditionIiiReport condition_iii_sum(const ExactChain& chain, long long horizon);

}  // namespace qa
