#include "qa/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "qa/errors.hpp"

namespace qa {

namespace {

constexpr double kSlackTol = 1e-14;       // numerical grace on analytic inequalities
constexpr double kMonotoneTol = 1e-15;    // grace on exact-equality monotone claims
constexpr long long kLocatorRun = 1000;   // consecutive steps confirming a t1
constexpr long long kLocatorCap = 200000; // give up scanning for t1 beyond this
constexpr std::size_t kWitnessCap = 16;

void push_witness(LabReport& report, const Witness& w) {
    report.witnesses.push_back(w);
    std::sort(report.witnesses.begin(), report.witnesses.end(),
              [](const Witness& a, const Witness& b) {
                  return a.value - a.bound < b.value - b.bound;
              });
    if (report.witnesses.size() > kWitnessCap) report.witnesses.resize(kWitnessCap);
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

// --- TransitionMatrix -----------------------------------------------------------

bool TransitionMatrix::column_stochastic(double tol) const {
    for (int x = 0; x < dim; ++x) {
        double sum = 0.0;
        for (int y = 0; y < dim; ++y) {
            const double v = at(y, x);
            if (v < -1e-15 || !std::isfinite(v)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

TransitionMatrix matrix_product(const TransitionMatrix& later, const TransitionMatrix& earlier) {
    if (later.dim != earlier.dim) throw std::invalid_argument("matrix_product: dim mismatch");
    const int n = later.dim;
    TransitionMatrix out;
    out.dim = n;
    out.time_tag = later.time_tag;
    out.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int x = 0; x < n; ++x)
        for (int z = 0; z < n; ++z) {
            const double b = earlier.at(z, x);
            if (b == 0.0) continue;
            for (int y = 0; y < n; ++y) out.at(y, x) += later.at(y, z) * b;
        }
    if (!out.column_stochastic(1e-12))
        throw std::logic_error("matrix_product: product lost column stochasticity");
    return out;
}

double ergodicity_coefficient(const TransitionMatrix& g) {
    if (!g.column_stochastic(1e-12))
        throw std::invalid_argument("ergodicity_coefficient: input not column-stochastic");
    if (g.dim <= 1) return 0.0;
    double min_overlap = std::numeric_limits<double>::infinity();
    for (int x = 0; x < g.dim; ++x)
        for (int y = x + 1; y < g.dim; ++y) {
            double overlap = 0.0;
            for (int z = 0; z < g.dim; ++z) overlap += std::min(g.at(z, x), g.at(z, y));
            min_overlap = std::min(min_overlap, overlap);
        }
    return 1.0 - min_overlap;
}

double tv_diameter(const TransitionMatrix& g) {
    if (!g.column_stochastic(1e-12))
        throw std::invalid_argument("tv_diameter: input not column-stochastic");
    double worst = 0.0;
    for (int x = 0; x < g.dim; ++x)
        for (int y = x + 1; y < g.dim; ++y) {
            double dist = 0.0;
            for (int z = 0; z < g.dim; ++z) dist += std::abs(g.at(z, x) - g.at(z, y));
            worst = std::max(worst, dist);
        }
    return worst;
}

// --- ExactChain -------------------------------------------------------------------

ChainKind chain_kind_from_name(const std::string& name) {
    if (name == "pimc_boltzmann") return ChainKind::PimcBoltzmann;
    if (name == "pimc_tsallis") return ChainKind::PimcTsallis;
    if (name == "gfmc_g1") return ChainKind::GfmcG1;
    if (name == "gfmc_g2") return ChainKind::GfmcG2;
    throw ConfigError("unknown chain kind \"" + name + "\"");
}

std::string chain_kind_name(ChainKind kind) {
    switch (kind) {
        case ChainKind::PimcBoltzmann: return "pimc_boltzmann";
        case ChainKind::PimcTsallis: return "pimc_tsallis";
        case ChainKind::GfmcG1: return "gfmc_g1";
        case ChainKind::GfmcG2: return "gfmc_g2";
    }
    return "pimc_boltzmann";
}

ExactChain::ExactChain(ChainSpec spec) : spec_(std::move(spec)) {
    const bool pimc = spec_.kind == ChainKind::PimcBoltzmann || spec_.kind == ChainKind::PimcTsallis;
    if (pimc) {
        spec_.pimc.validate();
        if (spec_.kind == ChainKind::PimcTsallis) {
            spec_.pimc.acceptance = AcceptanceKind::Tsallis;
            if (!(spec_.pimc.tsallis_q > 1.0))
                throw ConfigError("ExactChain: generalized acceptance requires q > 1");
        } else if (spec_.pimc.acceptance == AcceptanceKind::Tsallis) {
            throw ConfigError("ExactChain: pimc_boltzmann cannot use the generalized acceptance");
        }
        bits_ = spec_.instance.n_spins() * spec_.pimc.trotter_m;
    } else {
        bits_ = spec_.instance.n_spins();
    }
    if (bits_ > spec_.max_bits)
        throw CapacityError("ExactChain: state space too large", bits_, spec_.max_bits);
    dim_ = 1 << bits_;

    f0_.resize(dim_);
    if (pimc) {
        f1_.resize(dim_);
        for (int x = 0; x < dim_; ++x) {
            const ReplicaConfig cfg = ReplicaConfig::from_index(
                static_cast<std::uint64_t>(x), spec_.instance.n_spins(), spec_.pimc.trotter_m);
            f0_[x] = replica_F0(spec_.instance, cfg);
            f1_[x] = replica_F1(cfg);
        }
    } else {
        for (int x = 0; x < dim_; ++x)
            f0_[x] = spec_.instance.energy(
                state_from_index(spec_.instance.n_spins(), static_cast<std::uint64_t>(x)));
        gfmc_ = resolve_gfmc(spec_.instance, spec_.gfmc, spec_.schedule);
    }
}

int ExactChain::degree(int x) const {
    (void)x;
    switch (spec_.kind) {
        case ChainKind::PimcBoltzmann:
        case ChainKind::PimcTsallis: return bits_;
        case ChainKind::GfmcG1: return spec_.instance.n_spins();
        case ChainKind::GfmcG2: return dim_ - 1;
    }
    return 0;
}

int ExactChain::neighbor(int x, int j) const {
    switch (spec_.kind) {
        case ChainKind::PimcBoltzmann:
        case ChainKind::PimcTsallis:
        case ChainKind::GfmcG1: return x ^ (1 << j);
        case ChainKind::GfmcG2: return j < x ? j : j + 1;
    }
    return 0;
}

double ExactChain::generation_probability() const {
    return 1.0 / degree(0);
}

double ExactChain::t0_at(double t) const {
    return pimc_controls_at(t, spec_.pimc, spec_.schedule).t0;
}

double ExactChain::gamma_bond_at(double t) const {
    return pimc_controls_at(t, spec_.pimc, spec_.schedule).gamma_bond;
}

double ExactChain::gamma_at(double t) const {
    if (spec_.schedule.control() != ScheduleControl::GammaField)
        throw ConfigError("ExactChain: walker chains need a transverse-field schedule");
    return spec_.schedule.value(t);
}

const ResolvedGfmc& ExactChain::gfmc() const { return gfmc_; }

GKind ExactChain::g_kind() const { return spec_.pimc.g_kind(); }

double ExactChain::acceptance(int x, int y, double t0_val, double gamma_bond) const {
    const double d_f0 = f0_[y] - f0_[x];
    const double d_f1 = f1_[y] - f1_[x];
    if (spec_.kind == ChainKind::PimcTsallis) {
        const double u =
            tsallis_u_from_deltas(d_f0, d_f1, t0_val, gamma_bond, spec_.pimc.tsallis_q);
        return acceptance_g(spec_.pimc.tsallis_g, u);
    }
    const double d = -d_f0 / t0_val - d_f1 * gamma_bond;
    if (spec_.pimc.acceptance == AcceptanceKind::Metropolis)
        return std::exp(std::min(0.0, d));
    return 1.0 / (1.0 + std::exp(-d));  // heat bath, overflow-safe in both tails
}

void ExactChain::column(int x, double t, std::vector<double>& offdiag, double& diag) const {
    const int deg = degree(x);
    offdiag.resize(deg);
    switch (spec_.kind) {
        case ChainKind::PimcBoltzmann:
        case ChainKind::PimcTsallis: {
            const PimcControls c = pimc_controls_at(t, spec_.pimc, spec_.schedule);
            const double p = generation_probability();
            double total = 0.0;
            for (int j = 0; j < deg; ++j) {
                offdiag[j] = p * acceptance(x, neighbor(x, j), c.t0, c.gamma_bond);
                total += offdiag[j];
            }
            diag = 1.0 - total;
            break;
        }
        case ChainKind::GfmcG1: {
            const double gamma = gamma_at(t);
            const double stay_hat = 1.0 - gfmc_.dt * (f0_[x] - gfmc_.e_t);
            if (stay_hat < 0.0)
                throw ConfigError("ExactChain: negative Green's-function diagonal at state " +
                                  std::to_string(x) + " (dt too large or E_T too low)");
            const double w = stay_hat + deg * gfmc_.dt * gamma;
            const double move = gfmc_.dt * gamma / w;
            double total = 0.0;
            for (int j = 0; j < deg; ++j) {
                offdiag[j] = move;
                total += move;
            }
            diag = 1.0 - total;
            if (diag < 0.0)
                throw ConfigError("ExactChain: negative stay probability at state " +
                                  std::to_string(x));
            break;
        }
        case ChainKind::GfmcG2: {
            const double a = gfmc_.dt * gamma_at(t);
            const int n = spec_.instance.n_spins();
            std::vector<double> by_delta(n + 1);
            for (int d = 0; d <= n; ++d) by_delta[d] = g2_entry(d, n, a);
            double total = 0.0;
            for (int j = 0; j < deg; ++j) {
                const int y = neighbor(x, j);
                offdiag[j] = by_delta[__builtin_popcount(static_cast<unsigned>(x ^ y))];
                total += offdiag[j];
            }
            diag = 1.0 - total;
            break;
        }
    }
}

std::vector<double> ExactChain::stationary_candidate(double t) const {
    std::vector<double> q(dim_);
    switch (spec_.kind) {
        case ChainKind::PimcBoltzmann:
        case ChainKind::PimcTsallis: {
            const PimcControls c = pimc_controls_at(t, spec_.pimc, spec_.schedule);
            double max_e = -std::numeric_limits<double>::infinity();
            for (int x = 0; x < dim_; ++x) {
                q[x] = -f0_[x] / c.t0 - f1_[x] * c.gamma_bond;
                max_e = std::max(max_e, q[x]);
            }
            double z = 0.0;
            for (int x = 0; x < dim_; ++x) {
                q[x] = std::exp(q[x] - max_e);
                z += q[x];
            }
            for (auto& v : q) v /= z;
            break;
        }
        case ChainKind::GfmcG1: {
            const double gamma = gamma_at(t);
            double sum = 0.0;
            for (int x = 0; x < dim_; ++x) {
                q[x] = 1.0 - gfmc_.dt * (f0_[x] - gfmc_.e_t) +
                       spec_.instance.n_spins() * gfmc_.dt * gamma;
                sum += q[x];
            }
            for (auto& v : q) v /= sum;
            break;
        }
        case ChainKind::GfmcG2:
            q.assign(dim_, 1.0 / dim_);
            break;
    }
    return q;
}

TransitionMatrix build_matrix(const ExactChain& chain, double t, int dim_cap) {
    if (chain.dim() > dim_cap)
        throw CapacityError("build_matrix: dense matrix too large", chain.dim(), dim_cap);
    TransitionMatrix g;
    g.dim = chain.dim();
    g.time_tag = t;
    g.entries.assign(static_cast<std::size_t>(g.dim) * g.dim, 0.0);
    std::vector<double> offdiag;
    double diag = 0.0;
    for (int x = 0; x < g.dim; ++x) {
        chain.column(x, t, offdiag, diag);
        if (diag < 0.0)
            throw ConfigError("build_matrix: negative diagonal in column " + std::to_string(x));
        for (int j = 0; j < chain.degree(x); ++j) g.at(chain.neighbor(x, j), x) = offdiag[j];
        g.at(x, x) = diag;
    }
    return g;
}

// --- Structural constants ------------------------------------------------------------

StructuralConstants structural_constants(const ExactChain& chain) {
    if (chain.bits() > 14)
        throw CapacityError("structural_constants: BFS space too large", chain.bits(), 14);
    const int dim = chain.dim();
    StructuralConstants sc;
    sc.w_min = chain.generation_probability();

    std::vector<char> in_s_m(dim, 0);
    if (chain.has_f1()) {
        for (int x = 0; x < dim; ++x) {
            bool local_max = true;
            for (int j = 0; j < chain.degree(x) && local_max; ++j)
                local_max = chain.f1(chain.neighbor(x, j)) <= chain.f1(x);
            in_s_m[x] = local_max;
            if (local_max) sc.s_m.push_back(x);
        }
    }
    if (static_cast<int>(sc.s_m.size()) == dim)
        throw ConfigError("structural_constants: every state is a kinetic-term local maximum");

    double l0 = 0.0, l1 = 0.0;
    for (int x = 0; x < dim; ++x)
        for (int j = 0; j < chain.degree(x); ++j) {
            const int y = chain.neighbor(x, j);
            l0 = std::max(l0, std::abs(chain.f0(y) - chain.f0(x)));
            if (chain.has_f1()) l1 = std::max(l1, std::abs(chain.f1(y) - chain.f1(x)));
        }
    sc.l0 = l0;
    sc.l1 = l1;

    long long best_ecc = std::numeric_limits<long long>::max();
    int best_x = -1;
    std::vector<int> dist(dim);
    std::deque<int> queue;
    for (int src = 0; src < dim; ++src) {
        if (in_s_m[src]) continue;
        std::fill(dist.begin(), dist.end(), -1);
        dist[src] = 0;
        queue.assign(1, src);
        long long ecc = 0;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            ecc = std::max<long long>(ecc, dist[v]);
            for (int j = 0; j < chain.degree(v); ++j) {
                const int y = chain.neighbor(v, j);
                if (dist[y] < 0) {
                    dist[y] = dist[v] + 1;
                    queue.push_back(y);
                }
            }
        }
        if (ecc < best_ecc) {
            best_ecc = ecc;
            best_x = src;
        }
    }
    sc.r_steps = best_ecc;
    sc.x_star = best_x;
    return sc;
}

// --- Reports ---------------------------------------------------------------------------

std::string LabReport::to_json() const {
    nlohmann::json j;
    j["check"] = check;
    j["pass"] = pass;
    j["worst_slack"] = worst_slack;
    j["witnesses"] = nlohmann::json::array();
    for (const auto& w : witnesses)
        j["witnesses"].push_back(
            {{"t", w.t}, {"x", w.x}, {"y", w.y}, {"value", w.value}, {"bound", w.bound}});
    if (t1_located)
        j["t1_located"] = *t1_located;
    else
        j["t1_located"] = nullptr;
    for (const auto& [k, v] : metrics) j["metrics"][k] = v;
    if (metrics.empty()) j["metrics"] = nlohmann::json::object();
    return j.dump();
}

std::vector<double> default_t_grid(double t_max, int head) {
    std::vector<double> grid;
    for (int t = 1; t <= head; ++t) grid.push_back(t);
    for (double base = 10.0; base <= t_max; base *= 10.0)
        for (double mult : {1.0, 2.15443469, 4.64158883}) {
            const double t = std::floor(base * mult);
            if (t <= t_max) grid.push_back(t);
        }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

namespace {

// Scan forward until predicate(t) holds for kLocatorRun consecutive steps;
// returns the first step of the run, or nullopt when the scan cap is reached.
template <typename Pred>
std::optional<long long> locate_t1(const Pred& predicate, long long cap = kLocatorCap) {
    long long consecutive = 0;
    for (long long t = 0; t <= cap; ++t) {
        if (predicate(static_cast<double>(t))) {
            if (++consecutive == kLocatorRun) return t - (kLocatorRun - 1);
        } else {
            consecutive = 0;
        }
    }
    return std::nullopt;
}

}  // namespace

LabReport verify_lemma1(const ExactChain& chain, const std::vector<double>& t_samples,
                        const LemmaOverrides& overrides) {
    // The entrywise bound is proven for the Boltzmann-form acceptance only;
    // the generalized acceptance zeroes deep-downhill moves (bracket cutoff),
    // so no uniform positive bound exists for that chain.
    if (chain.kind() != ChainKind::PimcBoltzmann)
        throw ConfigError("verify_lemma1: needs the Boltzmann replica chain");
    LabReport report;
    report.check = "lemma1";
    report.worst_slack = std::numeric_limits<double>::infinity();

    const StructuralConstants sc = structural_constants(chain);
    const double l0 = overrides.l0.value_or(sc.l0);
    const double l1 = overrides.l1.value_or(sc.l1);
    const double w_g1 = sc.w_min * acceptance_g(chain.g_kind(), 1.0);
    auto bound_at = [&](double t) {
        return w_g1 * std::exp(-l0 / chain.t0_at(t) - l1 * chain.gamma_bond_at(t));
    };
    std::vector<char> in_s_m(chain.dim(), 0);
    for (int x : sc.s_m) in_s_m[x] = 1;

    std::vector<double> offdiag;
    double diag = 0.0;

    for (double t : t_samples) {
        const double bound = bound_at(t);
        for (int x = 0; x < chain.dim(); ++x) {
            chain.column(x, t, offdiag, diag);
            for (int j = 0; j < chain.degree(x); ++j) {
                const double slack = offdiag[j] - bound;
                report.worst_slack = std::min(report.worst_slack, slack);
                if (slack < -kSlackTol) {
                    report.pass = false;
                    push_witness(report, {t, x, chain.neighbor(x, j), offdiag[j], bound});
                }
            }
        }
    }

    auto diag_holds = [&](double t) {
        const double bound = bound_at(t);
        std::vector<double> od;
        double d = 0.0;
        for (int x = 0; x < chain.dim(); ++x) {
            if (in_s_m[x]) continue;
            chain.column(x, t, od, d);
            if (d < bound - kSlackTol) return false;
        }
        return true;
    };
    const auto t1 = locate_t1(diag_holds);
    report.t1_located = t1;
    if (!t1) {
        report.pass = false;
        report.metrics["t1_scan_exhausted"] = 1.0;
    } else {
        for (double t : t_samples) {
            if (t < static_cast<double>(*t1)) continue;
            const double bound = bound_at(t);
            for (int x = 0; x < chain.dim(); ++x) {
                if (in_s_m[x]) continue;
                chain.column(x, t, offdiag, diag);
                const double slack = diag - bound;
                report.worst_slack = std::min(report.worst_slack, slack);
                if (slack < -kSlackTol) {
                    report.pass = false;
                    push_witness(report, {t, x, -1, diag, bound});
                }
            }
        }
    }
    report.metrics["l0"] = l0;
    report.metrics["l1"] = l1;
    report.metrics["w_min"] = sc.w_min;
    return report;
}

LabReport verify_lemma2(const ExactChain& chain, const std::vector<double>& t_samples,
                        const LemmaOverrides& overrides) {
    if (chain.kind() != ChainKind::GfmcG1)
        throw ConfigError("verify_lemma2: needs the single-flip walker chain");
    LabReport report;
    report.check = "lemma2";
    report.worst_slack = std::numeric_limits<double>::infinity();

    double e_min = std::numeric_limits<double>::infinity();
    for (int x = 0; x < chain.dim(); ++x) e_min = std::min(e_min, chain.f0(x));
    e_min += overrides.e_min_shift.value_or(0.0);

    const ResolvedGfmc& r = chain.gfmc();
    const int n = chain.spec().instance.n_spins();
    auto bound_at = [&](double t) {
        const double g = chain.gamma_at(t);
        return r.dt * g / (1.0 - r.dt * (e_min - r.e_t) + n * r.dt * g);
    };

    std::vector<double> offdiag;
    double diag = 0.0;
    for (double t : t_samples) {
        const double bound = bound_at(t);
        for (int x = 0; x < chain.dim(); ++x) {
            chain.column(x, t, offdiag, diag);
            for (int j = 0; j < chain.degree(x); ++j) {
                const double slack = offdiag[j] - bound;
                report.worst_slack = std::min(report.worst_slack, slack);
                if (slack < -kSlackTol) {
                    report.pass = false;
                    push_witness(report, {t, x, chain.neighbor(x, j), offdiag[j], bound});
                }
            }
        }
    }

    // The diagonal statement rides on Gamma(t) -> 0; only assert it under a
    // decreasing schedule (the lemma's premise).
    if (chain.spec().schedule.direction() == ScheduleDirection::Decreasing) {
        auto diag_holds = [&](double t) {
            const double bound = bound_at(t);
            std::vector<double> od;
            double d = 0.0;
            for (int x = 0; x < chain.dim(); ++x) {
                chain.column(x, t, od, d);
                if (d < bound - kSlackTol) return false;
            }
            return true;
        };
        const auto t1 = locate_t1(diag_holds);
        report.t1_located = t1;
        if (!t1) {
            report.pass = false;
            report.metrics["t1_scan_exhausted"] = 1.0;
        } else {
            for (double t : t_samples) {
                if (t < static_cast<double>(*t1)) continue;
                const double bound = bound_at(t);
                for (int x = 0; x < chain.dim(); ++x) {
                    chain.column(x, t, offdiag, diag);
                    const double slack = diag - bound;
                    report.worst_slack = std::min(report.worst_slack, slack);
                    if (slack < -kSlackTol) {
                        report.pass = false;
                        push_witness(report, {t, x, -1, diag, bound});
                    }
                }
            }
        }
    } else {
        report.metrics["diagonal_skipped_nondecreasing_schedule"] = 1.0;
    }
    report.metrics["e_min_used"] = e_min;
    return report;
}

WeakErgodicityReport weak_ergodicity_diagnostic(const ExactChain& chain, int blocks_k) {
    if (blocks_k < 1) throw std::invalid_argument("weak_ergodicity_diagnostic: need K >= 1");
    if (chain.kind() == ChainKind::PimcTsallis)
        throw ConfigError(
            "weak_ergodicity_diagnostic: no analytic block bound for the generalized "
            "acceptance (bracket cutoff zeroes deep-downhill moves)");
    WeakErgodicityReport out;
    out.report.check = "weak_ergodicity";
    out.report.worst_slack = std::numeric_limits<double>::infinity();

    const StructuralConstants sc = structural_constants(chain);
    const long long r_steps = sc.r_steps;
    const bool pimc =
        chain.kind() == ChainKind::PimcBoltzmann || chain.kind() == ChainKind::PimcTsallis;

    auto block_bound = [&](double t_last) {
        switch (chain.kind()) {
            case ChainKind::PimcBoltzmann:
            case ChainKind::PimcTsallis: {
                const double per = sc.w_min * acceptance_g(chain.g_kind(), 1.0);
                return std::pow(per, static_cast<double>(r_steps)) *
                       std::exp(-r_steps * sc.l0 / chain.t0_at(t_last) -
                                r_steps * sc.l1 * chain.gamma_bond_at(t_last));
            }
            case ChainKind::GfmcG1: {
                const ResolvedGfmc& r = chain.gfmc();
                double e_min = std::numeric_limits<double>::infinity();
                for (int x = 0; x < chain.dim(); ++x) e_min = std::min(e_min, chain.f0(x));
                const double g = chain.gamma_at(t_last);
                const double per =
                    r.dt * g / (1.0 - r.dt * (e_min - r.e_t) +
                                chain.spec().instance.n_spins() * r.dt * g);
                return std::pow(per, static_cast<double>(r_steps));
            }
            case ChainKind::GfmcG2: {
                const double a = chain.gfmc().dt * chain.gamma_at(t_last);
                const int n = chain.spec().instance.n_spins();
                return chain.dim() * g2_entry(n, n, a);
            }
        }
        return 0.0;
    };

    double partial = 0.0;
    std::vector<double> log_k, sums;
    for (int k = 1; k <= blocks_k; ++k) {
        const double t_first = static_cast<double>((k - 1) * r_steps);
        TransitionMatrix block = build_matrix(chain, t_first);
        double alpha_product = ergodicity_coefficient(block);
        for (long long step = 1; step < r_steps; ++step) {
            TransitionMatrix g = build_matrix(chain, t_first + static_cast<double>(step));
            alpha_product *= ergodicity_coefficient(g);
            block = matrix_product(g, block);
        }
        const double t_last = t_first + static_cast<double>(r_steps - 1);
        const double alpha = ergodicity_coefficient(block);
        const double contraction = 1.0 - alpha;
        const double bound = block_bound(t_last);
        partial += contraction;

        const double slack = contraction - bound;
        out.report.worst_slack = std::min(out.report.worst_slack, slack);
        if (slack < -kSlackTol) {
            out.report.pass = false;
            push_witness(out.report, {t_last, k, -1, contraction, bound});
        }
        // Sanity: alpha is sub-multiplicative over the block factors.
        if (alpha > alpha_product + 1e-12) {
            out.report.pass = false;
            out.report.metrics["submultiplicativity_violated_at_k"] = k;
        }
        out.blocks.push_back({k, contraction, bound, partial});
        log_k.push_back(std::log(static_cast<double>(k)));
        sums.push_back(partial);
    }

    const std::size_t half = sums.size() / 2;
    std::vector<double> tail_x(log_k.begin() + half, log_k.end());
    std::vector<double> tail_y(sums.begin() + half, sums.end());
    out.report.metrics["partial_sum_total"] = partial;
    out.report.metrics["corr_log_full"] = pearson(log_k, sums);
    out.report.metrics["corr_log_tail"] = pearson(tail_x, tail_y);
    out.report.metrics["tail_plateau"] = sums.back() - sums[half];
    out.report.metrics["r_steps"] = static_cast<double>(r_steps);
    out.report.metrics["guarantee_lost"] =
        (sums.back() - sums[half]) < 1e-9 && pimc ? 1.0 : 0.0;
    return out;
}

double stationarity_residual(const ExactChain& chain, double t) {
    const std::vector<double> q = chain.stationary_candidate(t);
    std::vector<double> gq(chain.dim(), 0.0);
    std::vector<double> offdiag;
    double diag = 0.0;
    for (int x = 0; x < chain.dim(); ++x) {
        chain.column(x, t, offdiag, diag);
        gq[x] += diag * q[x];
        for (int j = 0; j < chain.degree(x); ++j) gq[chain.neighbor(x, j)] += offdiag[j] * q[x];
    }
    double residual = 0.0;
    for (int x = 0; x < chain.dim(); ++x) residual += std::abs(gq[x] - q[x]);
    return residual;
}

LabReport monotonicity_check(const ExactChain& chain, long long t_max) {
    if (chain.kind() == ChainKind::PimcTsallis)
        throw ConfigError(
            "monotonicity_check: no stationary closed form for the generalized-acceptance chain");
    if (t_max < 1) throw std::invalid_argument("monotonicity_check: t_max must be >= 1");
    LabReport report;
    report.check = "monotonicity";
    report.worst_slack = std::numeric_limits<double>::infinity();

    // States whose q must increase at every t; the rest must decrease beyond t1.
    std::vector<char> increasing(chain.dim(), 0);
    if (chain.kind() == ChainKind::PimcBoltzmann) {
        double f1_min = std::numeric_limits<double>::infinity();
        for (int x = 0; x < chain.dim(); ++x) f1_min = std::min(f1_min, chain.f1(x));
        for (int x = 0; x < chain.dim(); ++x) increasing[x] = chain.f1(x) == f1_min;
    } else if (chain.kind() == ChainKind::GfmcG1) {
        for (int x = 0; x < chain.dim(); ++x) increasing[x] = chain.f0(x) < 0.0;
    }
    // GfmcG2: uniform stationary state; nothing increases, everything is flat.

    std::vector<double> q_prev = chain.stationary_candidate(0.0);
    long long t1_candidate = 0;
    long long consecutive = 0;
    bool confirmed = false;
    for (long long t = 0; t < t_max; ++t) {
        const std::vector<double> q_next =
            chain.stationary_candidate(static_cast<double>(t + 1));
        bool others_decreasing = true;
        for (int x = 0; x < chain.dim(); ++x) {
            const double diff = q_next[x] - q_prev[x];
            if (increasing[x]) {
                report.worst_slack = std::min(report.worst_slack, diff);
                if (diff < -kMonotoneTol) {
                    report.pass = false;
                    push_witness(report, {static_cast<double>(t), x, -1, diff, 0.0});
                }
            } else if (diff > kMonotoneTol) {
                others_decreasing = false;
                if (confirmed) {
                    report.pass = false;
                    push_witness(report, {static_cast<double>(t), x, -1, diff, 0.0});
                }
            }
        }
        if (!confirmed) {
            if (others_decreasing) {
                if (consecutive == 0) t1_candidate = t;
                if (++consecutive >= kLocatorRun) confirmed = true;
            } else {
                consecutive = 0;
            }
        }
        q_prev = q_next;
    }
    if (confirmed || (consecutive > 0 && t1_candidate + consecutive >= t_max)) {
        // Accept a shorter trailing run when the horizon itself is short.
        report.t1_located = t1_candidate;
    } else {
        report.pass = false;
        report.metrics["t1_scan_exhausted"] = 1.0;
    }
    // No tracked increasing states (the all-to-all walk is exactly flat).
    if (!std::isfinite(report.worst_slack)) report.worst_slack = 0.0;
    return report;
}

ConditionIiiReport condition_iii_sum(const ExactChain& chain, long long horizon) {
    if (horizon < 2) throw std::invalid_argument("condition_iii_sum: horizon must be >= 2");
    ConditionIiiReport out;
    out.report.check = "condition_iii";
    const bool pimc =
        chain.kind() == ChainKind::PimcBoltzmann || chain.kind() == ChainKind::PimcTsallis;

    const LabReport mono = monotonicity_check(chain, std::min<long long>(horizon, 10000));
    out.t1_used = mono.t1_located.value_or(0);
    out.bound = pimc ? 2.0 * static_cast<double>(out.t1_used) + 2.0 : 2.0;

    // "Last decade" in the log-time sense: [horizon/10, horizon).
    const long long tail_start = horizon / 10;
    std::vector<double> q_prev = chain.stationary_candidate(0.0);
    for (long long t = 0; t < horizon; ++t) {
        const std::vector<double> q_next =
            chain.stationary_candidate(static_cast<double>(t + 1));
        double step_norm = 0.0;
        for (int x = 0; x < chain.dim(); ++x) step_norm += std::abs(q_next[x] - q_prev[x]);
        out.total += step_norm;
        if (t >= tail_start) out.tail_increment += step_norm;
        q_prev = q_next;
    }

    out.report.worst_slack = out.bound - out.total;
    if (!mono.t1_located) {
        out.report.pass = false;
        out.report.metrics["t1_scan_exhausted"] = 1.0;
    }
    if (out.total > out.bound + 1e-9) {
        out.report.pass = false;
        push_witness(out.report, {static_cast<double>(horizon), -1, -1, out.total, out.bound});
    }
    out.report.t1_located = out.t1_used;
    out.report.metrics["total"] = out.total;
    out.report.metrics["tail_increment"] = out.tail_increment;
    out.report.metrics["cauchy_flat_1e-10"] = out.tail_increment < 1e-10 ? 1.0 : 0.0;
    return out;
}

}  // namespace qa
