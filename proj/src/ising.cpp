#include "qa/ising.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "qa/errors.hpp"

namespace qa {

IsingInstance::IsingInstance(int n_spins, std::vector<Coupling> couplings,
                             std::vector<double> fields)
    : n_spins_(n_spins), couplings_(std::move(couplings)), fields_(std::move(fields)) {
    if (n_spins_ < 1) throw std::invalid_argument("IsingInstance: n_spins must be >= 1");
    if (fields_.empty()) fields_.assign(n_spins_, 0.0);
    if (static_cast<int>(fields_.size()) != n_spins_)
        throw std::invalid_argument("IsingInstance: fields length != n_spins");

    for (auto& c : couplings_) {
        if (c.i > c.j) std::swap(c.i, c.j);
        if (c.i == c.j) throw std::invalid_argument("IsingInstance: self-coupling (i,i)");
        if (c.i < 0 || c.j >= n_spins_)
            throw std::invalid_argument("IsingInstance: coupling index out of range");
    }
    std::sort(couplings_.begin(), couplings_.end(), [](const Coupling& a, const Coupling& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    for (std::size_t k = 1; k < couplings_.size(); ++k) {
        if (couplings_[k - 1].i == couplings_[k].i && couplings_[k - 1].j == couplings_[k].j)
            throw std::invalid_argument("IsingInstance: duplicate coupling pair");
    }

    adjacency_.assign(n_spins_, {});
    for (const auto& c : couplings_) {
        adjacency_[c.i].emplace_back(c.j, c.value);
        adjacency_[c.j].emplace_back(c.i, c.value);
        energy_bound_ += std::abs(c.value);
    }
    for (double h : fields_) {
        energy_bound_ += std::abs(h);
        if (h != 0.0) has_fields_ = true;
    }
}

double IsingInstance::energy(const SpinConfig& config) const {
    if (static_cast<int>(config.size()) != n_spins_)
        throw std::invalid_argument("energy: config length != n_spins");
    double e = 0.0;
    for (const auto& c : couplings_) e -= c.value * config[c.i] * config[c.j];
    for (int i = 0; i < n_spins_; ++i) e -= fields_[i] * config[i];
    return e;
}

double IsingInstance::flip_delta(const SpinConfig& config, int i) const {
    double acc = fields_[i];
    for (const auto& [j, v] : adjacency_[i]) acc += v * config[j];
    return 2.0 * config[i] * acc;
}

double IsingInstance::local_coupling_sum(int i) const {
    double acc = std::abs(fields_[i]);
    for (const auto& [j, v] : adjacency_[i]) acc += std::abs(v);
    return acc;
}

bool IsingInstance::operator==(const IsingInstance& other) const {
    if (n_spins_ != other.n_spins_ || fields_ != other.fields_) return false;
    if (couplings_.size() != other.couplings_.size()) return false;
    for (std::size_t k = 0; k < couplings_.size(); ++k) {
        const auto& a = couplings_[k];
        const auto& b = other.couplings_[k];
        if (a.i != b.i || a.j != b.j || a.value != b.value) return false;
    }
    return true;
}

std::string IsingInstance::to_json() const {
    nlohmann::json j;
    j["n_spins"] = n_spins_;
    auto& cs = j["couplings"] = nlohmann::json::array();
    for (const auto& c : couplings_) cs.push_back({c.i, c.j, c.value});
    auto& fs = j["fields"] = nlohmann::json::array();
    for (int i = 0; i < n_spins_; ++i)
        if (fields_[i] != 0.0) fs.push_back({i, fields_[i]});
    return j.dump(2);
}

IsingInstance IsingInstance::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    int n = j.at("n_spins").get<int>();
    std::vector<Coupling> cs;
    for (const auto& e : j.value("couplings", nlohmann::json::array()))
        cs.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    std::vector<double> fields(n, 0.0);
    for (const auto& e : j.value("fields", nlohmann::json::array()))
        fields.at(e.at(0).get<int>()) = e.at(1).get<double>();
    return IsingInstance(n, std::move(cs), std::move(fields));
}

IsingInstance IsingInstance::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open instance file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void IsingInstance::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write instance file: " + path);
    out << to_json() << "\n";
}

double MoveSet::generation_probability(int n) const {
    switch (kind) {
        case MoveKind::SingleSpinFlip:
            return 1.0 / n;
        case MoveKind::AllToAll:
            return 1.0 / (std::ldexp(1.0, n) - 1.0);
    }
    return 0.0;
}

std::vector<SpinConfig> enumerate_states(int n, int cap) {
    if (n < 1) throw std::invalid_argument("enumerate_states: n must be >= 1");
    if (n > cap) throw CapacityError("enumerate_states: n exceeds enumeration cap", n, cap);
    std::uint64_t total = 1ULL << n;
    std::vector<SpinConfig> out;
    out.reserve(total);
    for (std::uint64_t k = 0; k < total; ++k) out.push_back(state_from_index(n, k));
    return out;
}

SpinConfig state_from_index(int n, std::uint64_t index) {
    SpinConfig s(n);
    for (int i = 0; i < n; ++i) s[i] = ((index >> i) & 1ULL) ? -1 : +1;
    return s;
}

std::uint64_t index_of_state(const SpinConfig& config) {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < config.size(); ++i)
        if (config[i] < 0) k |= 1ULL << i;
    return k;
}

std::vector<SpinConfig> neighbors(const SpinConfig& config, const MoveSet& moves, int cap) {
    const int n = static_cast<int>(config.size());
    std::vector<SpinConfig> out;
    if (moves.kind == MoveKind::SingleSpinFlip) {
        out.reserve(n);
        for (int i = 0; i < n; ++i) {
            SpinConfig y = config;
            y[i] = static_cast<std::int8_t>(-y[i]);
            out.push_back(std::move(y));
        }
    } else {
        if (n > cap) throw CapacityError("neighbors: all-to-all needs enumeration", n, cap);
        std::uint64_t self = index_of_state(config);
        std::uint64_t total = 1ULL << n;
        out.reserve(total - 1);
        for (std::uint64_t k = 0; k < total; ++k)
            if (k != self) out.push_back(state_from_index(n, k));
    }
    return out;
}

GroundStates ground_states_bruteforce(const IsingInstance& instance, int cap) {
    const int n = instance.n_spins();
    if (n > cap)
        throw CapacityError("ground_states_bruteforce: n exceeds enumeration cap", n, cap);
    GroundStates gs;
    gs.e_min = std::numeric_limits<double>::infinity();
    std::uint64_t total = 1ULL << n;
    for (std::uint64_t k = 0; k < total; ++k) {
        SpinConfig s = state_from_index(n, k);
        double e = instance.energy(s);
        if (e < gs.e_min - 1e-12) {
            gs.e_min = e;
            gs.minimizers.clear();
            gs.minimizers.push_back(std::move(s));
        } else if (e <= gs.e_min + 1e-12) {
            gs.minimizers.push_back(std::move(s));
        }
    }
    return gs;
}

IsingInstance random_instance(int n, CouplingDist dist, std::uint64_t seed, double sigma) {
    if (n < 1) throw std::invalid_argument("random_instance: n must be >= 1");
    Rng rng(seed, /*stream=*/0x15a9ce);
    std::vector<IsingInstance::Coupling> cs;
    cs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double v = (dist == CouplingDist::PlusMinusJ)
                           ? static_cast<double>(rng.spin())
                           : sigma * rng.normal();
            cs.push_back({i, j, v});
        }
    }
    return IsingInstance(n, std::move(cs));
}

}  // namespace qa
