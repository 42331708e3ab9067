#include "qa/pimc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "qa/errors.hpp"

namespace qa {

namespace {

double clamp_exponent(double d, ClampStats* stats) {
    if (d > 700.0) {
        if (stats) ++stats->exponent_clamps;
        return 700.0;
    }
    if (d < -700.0) {
        if (stats) ++stats->exponent_clamps;
        return -700.0;
    }
    return d;
}

void format_g17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

// --- ReplicaConfig -------------------------------------------------------------

ReplicaConfig ReplicaConfig::aligned(int n, int m, std::int8_t value) {
    if (n < 1 || m < 1) throw std::invalid_argument("ReplicaConfig: n and m must be >= 1");
    if (value != 1 && value != -1) throw std::invalid_argument("ReplicaConfig: value must be +-1");
    ReplicaConfig c;
    c.n = n;
    c.m = m;
    c.s.assign(static_cast<std::size_t>(n) * m, value);
    return c;
}

ReplicaConfig ReplicaConfig::random(int n, int m, Rng& rng) {
    ReplicaConfig c = aligned(n, m, +1);
    for (auto& v : c.s) v = static_cast<std::int8_t>(rng.spin());
    return c;
}

ReplicaConfig ReplicaConfig::from_index(std::uint64_t index, int n, int m) {
    ReplicaConfig c = aligned(n, m, +1);
    for (int b = 0; b < n * m; ++b)
        if (index >> b & 1u) c.s[b] = -1;
    return c;
}

std::uint64_t ReplicaConfig::index() const {
    std::uint64_t idx = 0;
    for (int b = 0; b < bits(); ++b)
        if (s[b] < 0) idx |= std::uint64_t{1} << b;
    return idx;
}

SpinConfig ReplicaConfig::slice(int k) const {
    return SpinConfig(s.begin() + static_cast<std::size_t>(k) * n,
                      s.begin() + static_cast<std::size_t>(k + 1) * n);
}

// --- Params ---------------------------------------------------------------------

void PimcParams::validate() const {
    if (!(beta > 0.0)) throw ConfigError("PimcParams: beta must be > 0");
    if (trotter_m < 1) throw ConfigError("PimcParams: trotter_m must be >= 1");
    if (acceptance == AcceptanceKind::Tsallis && !(tsallis_q > 1.0))
        throw ConfigError("PimcParams: generalized acceptance requires q > 1");
}

GKind PimcParams::g_kind() const {
    switch (acceptance) {
        case AcceptanceKind::HeatBath: return GKind::HeatBath;
        case AcceptanceKind::Metropolis: return GKind::Metropolis;
        case AcceptanceKind::Tsallis: return tsallis_g;
    }
    return GKind::HeatBath;
}

// --- Free-energy terms -----------------------------------------------------------

double replica_F0(const IsingInstance& instance, const ReplicaConfig& config) {
    if (config.n != instance.n_spins())
        throw std::invalid_argument("replica_F0: config width != n_spins");
    double sum = 0.0;
    for (int k = 0; k < config.m; ++k) sum += instance.energy(config.slice(k));
    return sum / config.m;
}

double replica_F1(const ReplicaConfig& config) {
    if (config.m == 1) return -static_cast<double>(config.n);
    double bonds = 0.0;
    for (int k = 0; k < config.m; ++k) {
        const int k1 = (k + 1) % config.m;
        for (int i = 0; i < config.n; ++i)
            bonds += static_cast<double>(config.spin(i, k)) * config.spin(i, k1);
    }
    return -bonds;
}

// --- Acceptance -------------------------------------------------------------------

double acceptance_g(GKind kind, double u) {
    if (!(u >= 0.0)) throw std::domain_error("acceptance_g: u must be >= 0");
    switch (kind) {
        case GKind::HeatBath:
            if (std::isinf(u)) return 1.0;
            return u / (1.0 + u);
        case GKind::Metropolis:
            return std::min(1.0, u);
    }
    return 0.0;
}

PimcControls pimc_controls_at(double t, const PimcParams& params, const Schedule& schedule) {
    switch (schedule.control()) {
        case ScheduleControl::GammaField: {
            const auto e = schedule.evaluate(t);
            return {1.0 / params.beta,
                    trotter_coupling(params.beta, params.trotter_m, e.value), e.clamped};
        }
        case ScheduleControl::SliceTemperature: {
            const auto e = schedule.evaluate(t);
            return {1.0 / params.beta, 1.0 / e.value, e.clamped};
        }
        case ScheduleControl::Temperature: {
            // Classical simulated annealing: the schedule drives T0 directly.
            // The log-inverse law is defined for t >= 1; step 0 uses T(1).
            if (params.trotter_m != 1)
                throw ConfigError("temperature-control schedules require trotter_m = 1");
            const auto e = schedule.evaluate(std::max(t, 1.0));
            return {e.value, 0.0, e.clamped};
        }
    }
    throw std::logic_error("pimc_controls_at: unknown control");
}

double boltzmann_ratio_from_deltas(double d_f0, double d_f1, double t0, double gamma_bond,
                                   ClampStats* stats) {
    return std::exp(clamp_exponent(-d_f0 / t0 - d_f1 * gamma_bond, stats));
}

double boltzmann_ratio(const ReplicaConfig& x, const ReplicaConfig& y, double t,
                       const IsingInstance& instance, const PimcParams& params,
                       const Schedule& schedule, ClampStats* stats) {
    const PimcControls c = pimc_controls_at(t, params, schedule);
    if (stats && c.floor_clamped) ++stats->floor_clamps;
    return boltzmann_ratio_from_deltas(replica_F0(instance, y) - replica_F0(instance, x),
                                       replica_F1(y) - replica_F1(x), c.t0, c.gamma_bond, stats);
}

double tsallis_u_from_deltas(double d_f0, double d_f1, double t0, double gamma_bond, double q,
                             ClampStats* stats) {
    if (!(q > 1.0)) throw ConfigError("tsallis_u: q must be > 1");
    const double bracket = 1.0 + (q - 1.0) * d_f1 * gamma_bond;
    if (bracket <= 0.0) {
        if (stats) ++stats->bracket_rejects;
        return 0.0;
    }
    const double classical = std::exp(clamp_exponent(-d_f0 / t0, stats));
    return classical * std::pow(bracket, 1.0 / (1.0 - q));
}

double tsallis_u(const ReplicaConfig& x, const ReplicaConfig& y, double t,
                 const IsingInstance& instance, const PimcParams& params,
                 const Schedule& schedule, ClampStats* stats) {
    const PimcControls c = pimc_controls_at(t, params, schedule);
    if (stats && c.floor_clamped) ++stats->floor_clamps;
    return tsallis_u_from_deltas(replica_F0(instance, y) - replica_F0(instance, x),
                                 replica_F1(y) - replica_F1(x), c.t0, c.gamma_bond,
                                 params.tsallis_q, stats);
}

// --- Chain ------------------------------------------------------------------------

PimcChain::PimcChain(const IsingInstance& instance, PimcParams params, Schedule schedule,
                     Rng rng, ReplicaConfig initial, long long t_start)
    : instance_(&instance),
      params_(std::move(params)),
      schedule_(std::move(schedule)),
      rng_(rng),
      state_(std::move(initial)),
      t_(t_start) {
    params_.validate();
    if (state_.n != instance.n_spins() || state_.m != params_.trotter_m)
        throw std::invalid_argument("PimcChain: state dimensions disagree with params");
    slice_energy_.resize(state_.m);
    best_energy_ = std::numeric_limits<double>::infinity();
    for (int k = 0; k < state_.m; ++k) {
        slice_energy_[k] = instance.energy(state_.slice(k));
        if (slice_energy_[k] < best_energy_) {
            best_energy_ = slice_energy_[k];
            best_config_ = state_.slice(k);
            best_energy_step_ = t_;
        }
    }
    f1_ = replica_F1(state_);
}

void PimcChain::step() {
    const PimcControls c = pimc_controls_at(static_cast<double>(t_), params_, schedule_);
    if (c.floor_clamped) ++clamp_stats_.floor_clamps;

    const int n = state_.n;
    const int m = state_.m;
    const int i = static_cast<int>(rng_.uniform_below(static_cast<std::uint64_t>(n)));
    const int k = static_cast<int>(rng_.uniform_below(static_cast<std::uint64_t>(m)));

    // Classical slice-energy change of flipping (i,k).
    double field_sum = instance_->fields().empty() ? 0.0 : instance_->fields()[i];
    for (const auto& [j, jv] : instance_->adjacency(i))
        field_sum += jv * state_.spin(j, k);
    const double d_e = 2.0 * state_.spin(i, k) * field_sum;
    const double d_f0 = d_e / m;

    // Trotter-bond change; degenerate (always 0) for a single slice.
    double d_f1 = 0.0;
    if (m >= 2) {
        const int up = (k + 1) % m;
        const int down = (k + m - 1) % m;
        d_f1 = 2.0 * state_.spin(i, k) *
               (static_cast<double>(state_.spin(i, up)) + state_.spin(i, down));
    }

    double u;
    if (params_.acceptance == AcceptanceKind::Tsallis)
        u = tsallis_u_from_deltas(d_f0, d_f1, c.t0, c.gamma_bond, params_.tsallis_q,
                                  &clamp_stats_);
    else
        u = boltzmann_ratio_from_deltas(d_f0, d_f1, c.t0, c.gamma_bond, &clamp_stats_);
    const double a = acceptance_g(params_.g_kind(), u);

    ++proposed_;
    if (rng_.bernoulli(a)) {
        ++accepted_;
        state_.flip(i, k);
        slice_energy_[k] += d_e;
        f1_ += d_f1;
        if (slice_energy_[k] < best_energy_) {
            best_energy_ = slice_energy_[k];
            best_config_ = state_.slice(k);
            best_energy_step_ = t_ + 1;
        }
    }
    ++t_;
}

void PimcChain::sweep() {
    const int steps = state_.n * state_.m;
    for (int r = 0; r < steps; ++r) step();
}

double PimcChain::f0() const {
    double sum = 0.0;
    for (double e : slice_energy_) sum += e;
    return sum / state_.m;
}

ReplicaConfig mc_sweep(ReplicaConfig state, long long t, const IsingInstance& instance,
                       const PimcParams& params, const Schedule& schedule, Rng& rng) {
    PimcChain chain(instance, params, schedule, rng, std::move(state), t);
    chain.sweep();
    rng = chain.rng();
    return chain.state();
}

// --- Annealing driver ----------------------------------------------------------

const char* AnnealTrace::csv_header() {
    return "step,control_value,mean_slice_energy,best_energy,acceptance_rate,clamp_count";
}

void AnnealTrace::write_csv(std::ostream& out) const {
    std::string line;
    out << csv_header() << "\n";
    for (const auto& r : rows) {
        line.clear();
        line += std::to_string(r.step);
        line += ',';
        format_g17(line, r.control_value);
        line += ',';
        format_g17(line, r.mean_slice_energy);
        line += ',';
        format_g17(line, r.best_energy);
        line += ',';
        format_g17(line, r.acceptance_rate);
        line += ',';
        line += std::to_string(r.clamp_count);
        line += '\n';
        out << line;
    }
}

AnnealTrace run_annealing(const IsingInstance& instance, const PimcParams& params,
                          const Schedule& schedule, long long horizon, std::uint64_t seed,
                          const AnnealOptions& options) {
    if (horizon < 1) throw std::invalid_argument("run_annealing: horizon must be >= 1");
    params.validate();

    Rng rng(seed);
    ReplicaConfig initial =
        options.start_ordered ? ReplicaConfig::aligned(instance.n_spins(), params.trotter_m)
                              : ReplicaConfig::random(instance.n_spins(), params.trotter_m, rng);
    PimcChain chain(instance, params, schedule, rng, std::move(initial));

    const long long every =
        options.checkpoint_every > 0 ? options.checkpoint_every : std::max<long long>(1, horizon / 200);

    AnnealTrace trace;
    long long accepted_at_row = 0;
    long long steps_at_row = 0;
    while (chain.t() < horizon) {
        const long long target = std::min(horizon, chain.t() + every);
        while (chain.t() < target) chain.step();
        const double window = static_cast<double>(chain.t() - steps_at_row);
        const double last_t = static_cast<double>(chain.t() - 1);
        trace.rows.push_back({chain.t(),
                              schedule.control() == ScheduleControl::Temperature
                                  ? schedule.value(std::max(last_t, 1.0))
                                  : schedule.value(last_t),
                              chain.f0(), chain.best_energy(),
                              (chain.accepted() - accepted_at_row) / window,
                              chain.clamp_stats().exponent_clamps});
        accepted_at_row = chain.accepted();
        steps_at_row = chain.t();
    }

    trace.final_best_energy = chain.best_energy();
    trace.best_energy_step = chain.best_energy_step();
    trace.best_config = chain.best_config();
    trace.steps = chain.t();
    trace.accepted = chain.accepted();
    trace.clamp_stats = chain.clamp_stats();
    return trace;
}

}  // namespace qa
