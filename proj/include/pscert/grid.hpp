#pragma once

// Static grid description: buses, branches, machines and exciters in per-unit
// on the system MVA base.

#include "pscert/core.hpp"

#include <queue>
#include <set>

namespace pscert {

enum class BusKind { generator, load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::load;
    Complex load{};          // constant-power consumption at the operating point (p.u.)
    double v_set = 1.0;      // voltage magnitude setpoint / nominal magnitude (p.u.)
    double angle = 0.0;      // slack reference angle (rad)
    double p_gen = 0.0;      // scheduled active generation for PV buses (p.u.)
    bool slack = false;

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from = 0;
    int to = 0;
    Complex impedance{};     // series r + jx (p.u.)
    double b = 0.0;          // total line charging susceptance (p.u.), half per end
    bool in_service = true;

    Complex admittance() const { return 1.0 / impedance; }
    bool operator==(const Branch&) const = default;
};

struct Machine {
    int bus = 0;
    double H = 1.0;          // inertia constant (s)
    double D = 0.0;          // damping (p.u. torque / p.u. speed)
    double xd = 1.0;
    double xd_p = 0.3;
    double xq = 1.0;
    double xq_p = 0.3;
    double td0_p = 5.0;      // d-axis transient open-circuit time constant (s)
    double omega_ref = 1.0;
    double omega_base = 2.0 * kPi * 60.0;  // rad/s

    bool salient() const { return xq_p != xd_p; }
    bool operator==(const Machine&) const = default;
};

struct Exciter {
    std::size_t machine = 0;  // index into PowerSystem::machines
    double ka = 1.0;
    double ta = 0.2;
    double efd_min = -std::numeric_limits<double>::infinity();
    double efd_max = std::numeric_limits<double>::infinity();

    bool operator==(const Exciter&) const = default;
};

struct PowerSystem {
    std::string name;
    double base_mva = 100.0;
    double frequency_hz = 60.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Machine> machines;
    std::vector<Exciter> exciters;

    std::size_t bus_count() const { return buses.size(); }
    std::size_t machine_count() const { return machines.size(); }

    std::size_t bus_index(int id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return i;
        throw NetworkError("unknown bus id " + std::to_string(id));
    }

    /// Exciter attached to machine `m`, if any.
    const Exciter* exciter_of(std::size_t m) const {
        for (const auto& e : exciters)
            if (e.machine == m) return &e;
        return nullptr;
    }

    Vec inertia() const {
        Vec h(static_cast<Eigen::Index>(machines.size()));
        for (std::size_t i = 0; i < machines.size(); ++i) h(static_cast<Eigen::Index>(i)) = machines[i].H;
        return h;
    }

    bool operator==(const PowerSystem&) const = default;
};

/// Solved complex bus voltages and generator injections, indexed like `buses`.
struct OperatingPoint {
    CVec voltage;
    CVec generation;
    double mismatch = 0.0;
    int iterations = 0;
};

/// Steady state of the full model; P_m and V_ref are back-solved.
struct EquilibriumState {
    Vec delta;
    Vec omega;
    Vec eq_p;
    Vec efd;
    Vec pm;
    Vec v_ref;     // NaN for machines without an exciter
};

/// True iff the in-service branches connect every bus. `skip_branch` lets
/// callers test a hypothetical outage.
inline bool is_connected(const PowerSystem& sys, const std::set<std::size_t>& skip_branch = {}) {
    const std::size_t n = sys.buses.size();
    if (n == 0) return false;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t k = 0; k < sys.branches.size(); ++k) {
        const auto& br = sys.branches[k];
        if (!br.in_service || skip_branch.count(k)) continue;
        const auto f = sys.bus_index(br.from);
        const auto t = sys.bus_index(br.to);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (auto v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                q.push(v);
            }
    }
    return count == n;
}

/// Checks every type invariant; throws SchemaError naming the field, or
/// NetworkError for topology problems.
inline void validate(const PowerSystem& sys) {
    if (!(sys.base_mva > 0)) throw SchemaError("base_mva", "must be positive");
    if (sys.buses.empty()) throw SchemaError("buses", "at least one bus required");

    std::set<int> ids;
    int generators = 0;
    int slacks = 0;
    for (std::size_t i = 0; i < sys.buses.size(); ++i) {
        const auto& b = sys.buses[i];
        const std::string where = "buses[" + std::to_string(i) + "]";
        if (!ids.insert(b.id).second) throw SchemaError(where + ".id", "duplicate bus id " + std::to_string(b.id));
        if (b.kind == BusKind::generator) ++generators;
        if (b.slack) {
            ++slacks;
            if (b.kind != BusKind::generator) throw SchemaError(where + ".slack", "slack bus must be a generator bus");
        }
        if (!(b.v_set > 0)) throw SchemaError(where + ".v_set", "must be positive");
    }
    if (generators == 0) throw SchemaError("buses", "at least one generator bus required");
    if (slacks != 1) throw SchemaError("buses", "exactly one slack bus required");

    for (std::size_t k = 0; k < sys.branches.size(); ++k) {
        const auto& br = sys.branches[k];
        const std::string where = "branches[" + std::to_string(k) + "]";
        if (!ids.count(br.from)) throw SchemaError(where + ".from", "references missing bus " + std::to_string(br.from));
        if (!ids.count(br.to)) throw SchemaError(where + ".to", "references missing bus " + std::to_string(br.to));
        if (br.from == br.to) throw SchemaError(where, "from and to must differ");
        if (std::abs(br.impedance) == 0.0) throw SchemaError(where + ".x", "series impedance must be nonzero");
    }

    std::set<int> machine_buses;
    for (std::size_t m = 0; m < sys.machines.size(); ++m) {
        const auto& g = sys.machines[m];
        const std::string where = "machines[" + std::to_string(m) + "]";
        if (!ids.count(g.bus)) throw SchemaError(where + ".bus", "references missing bus " + std::to_string(g.bus));
        if (sys.buses[sys.bus_index(g.bus)].kind != BusKind::generator)
            throw SchemaError(where + ".bus", "machine must sit on a generator bus");
        if (!machine_buses.insert(g.bus).second) throw SchemaError(where + ".bus", "one machine per generator bus");
        if (!(g.H > 0)) throw SchemaError(where + ".H", "must be positive");
        if (!(g.td0_p > 0)) throw SchemaError(where + ".td0_p", "must be positive");
        if (!(g.xd_p > 0) || g.xd < g.xd_p) throw SchemaError(where + ".xd", "require xd >= xd_p > 0");
        if (!(g.xq_p > 0) || g.xq < g.xq_p) throw SchemaError(where + ".xq", "require xq >= xq_p > 0");
        if (!(g.D >= 0)) throw SchemaError(where + ".D", "must be non-negative");
        if (!(g.omega_base > 0)) throw SchemaError("frequency_hz", "must be positive");
    }
    for (const auto& b : sys.buses)
        if (b.kind == BusKind::generator && !machine_buses.count(b.id))
            throw SchemaError("machines", "generator bus " + std::to_string(b.id) + " has no machine");

    std::set<std::size_t> excited;
    for (std::size_t e = 0; e < sys.exciters.size(); ++e) {
        const auto& x = sys.exciters[e];
        const std::string where = "exciters[" + std::to_string(e) + "]";
        if (x.machine >= sys.machines.size()) throw SchemaError(where + ".machine", "machine index out of range");
        if (!excited.insert(x.machine).second) throw SchemaError(where + ".machine", "machine already has an exciter");
        if (!(x.ka > 0)) throw SchemaError(where + ".ka", "must be positive");
        if (!(x.ta > 0)) throw SchemaError(where + ".ta", "must be positive");
        if (!(x.efd_min < x.efd_max)) throw SchemaError(where + ".efd_limits", "require efd_min < efd_max");
    }

    if (!is_connected(sys)) throw NetworkError("network of in-service branches is disconnected");
}

/// Center-of-inertia relative angles: d_i - sum(H d)/sum(H).
inline Vec coi_transform(const Vec& delta, const Vec& H) {
    if (delta.size() != H.size()) throw PreconditionError("coi_transform: size mismatch");
    if (H.size() > 0 && !(H.minCoeff() > 0)) throw PreconditionError("coi_transform: inertia must be positive");
    const double center = H.dot(delta) / H.sum();
    return delta.array() - center;
}

}  // namespace pscert
