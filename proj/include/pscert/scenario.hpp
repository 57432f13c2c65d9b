#pragma once

// Event scenarios: a time-ordered list of network snapshots, each with its own
// reduced network. Loads keep the admittance they had at the pre-event
// operating point.

#include "pscert/dynamics.hpp"
#include "pscert/integrator.hpp"

namespace pscert {

inline constexpr double kFaultAdmittance = 1.0e6;

struct FaultSpec {
    enum class Kind { none, bus, line };
    Kind kind = Kind::none;
    int bus = 0;                               // faulted bus
    int line_from = 0, line_to = 0;            // line faults sit at the line_to end
    double t_on = 0.0;
    double t_clear = 0.05;
    std::vector<std::pair<int, int>> trip;     // branches opened at clearing

    /// "none", "bus:<id>" or "line:<from>-<to>". Line faults trip their line.
    static FaultSpec parse(const std::string& text, double t_on = 0.0, double t_clear = 0.05) {
        FaultSpec f;
        f.t_on = t_on;
        f.t_clear = t_clear;
        if (text.empty() || text == "none") return f;
        const auto colon = text.find(':');
        if (colon == std::string::npos) throw PreconditionError("fault spec '" + text + "' lacks ':'");
        const std::string kind = text.substr(0, colon);
        const std::string body = text.substr(colon + 1);
        try {
            if (kind == "bus") {
                f.kind = Kind::bus;
                f.bus = std::stoi(body);
            } else if (kind == "line") {
                const auto dash = body.find('-');
                if (dash == std::string::npos) throw PreconditionError("line fault needs <from>-<to>");
                f.kind = Kind::line;
                f.line_from = std::stoi(body.substr(0, dash));
                f.line_to = std::stoi(body.substr(dash + 1));
                f.bus = f.line_to;
                f.trip.emplace_back(f.line_from, f.line_to);
            } else {
                throw PreconditionError("unknown fault kind '" + kind + "'");
            }
        } catch (const std::logic_error&) {
            throw PreconditionError("malformed fault spec '" + text + "'");
        }
        return f;
    }
};

struct Snapshot {
    double time = 0.0;
    std::string label;
    PowerSystem sys;     // topology in force during the snapshot
    ShuntVector extra;   // shunts added on top of the converted loads
    ReducedNetwork rn;
};

struct Scenario {
    std::string id;
    std::vector<Snapshot> snapshots;
    double step = 1e-3;
    double horizon = 10.0;

    std::vector<double> event_times() const {
        std::vector<double> t;
        for (std::size_t i = 1; i < snapshots.size(); ++i) t.push_back(snapshots[i].time);
        return t;
    }
    const ReducedNetwork& network(std::size_t segment) const { return snapshots.at(segment).rn; }
    const ReducedNetwork& final_network() const { return snapshots.back().rn; }
};

namespace detail {

inline std::size_t find_branch(const PowerSystem& sys, int a, int b) {
    for (std::size_t k = 0; k < sys.branches.size(); ++k) {
        const auto& br = sys.branches[k];
        if (br.in_service && ((br.from == a && br.to == b) || (br.from == b && br.to == a))) return k;
    }
    throw NetworkError("no in-service branch " + std::to_string(a) + "-" + std::to_string(b));
}

inline Snapshot make_snapshot(const PowerSystem& topo, const OperatingPoint& op, double t, std::string label,
                              ShuntVector extra) {
    Snapshot s;
    s.time = t;
    s.label = std::move(label);
    s.sys = topo;
    s.extra = std::move(extra);
    s.rn = reduce_network(assemble_admittance(topo, op, s.extra), topo.machines);
    return s;
}

}  // namespace detail

inline Scenario build_scenario(const PowerSystem& sys, const OperatingPoint& op, const FaultSpec& fault,
                               double step = 1e-3, double horizon = 10.0) {
    Scenario sc;
    sc.step = step;
    sc.horizon = horizon;
    const auto nb = static_cast<Eigen::Index>(sys.buses.size());
    const ShuntVector none = ShuntVector::Zero(nb);
    if (fault.kind == FaultSpec::Kind::none) {
        sc.id = "no-fault";
        sc.snapshots.push_back(detail::make_snapshot(sys, op, 0.0, "pre-fault", none));
        return sc;
    }
    if (!(fault.t_on >= 0) || !(fault.t_clear > fault.t_on))
        throw PreconditionError("fault times must satisfy 0 <= t_on < t_clear");
    if (fault.kind == FaultSpec::Kind::line) detail::find_branch(sys, fault.line_from, fault.line_to);

    ShuntVector faulted = none;
    faulted(static_cast<Eigen::Index>(sys.bus_index(fault.bus))) = kFaultAdmittance;

    PowerSystem post = sys;
    for (const auto& [a, b] : fault.trip) post.branches[detail::find_branch(post, a, b)].in_service = false;
    if (!is_connected(post))
        throw NetworkError("clearing the fault disconnects the network (a generator would be islanded)");

    sc.id = fault.kind == FaultSpec::Kind::line
                ? "line:" + std::to_string(fault.line_from) + "-" + std::to_string(fault.line_to)
                : "bus:" + std::to_string(fault.bus);
    if (fault.t_on > 0) sc.snapshots.push_back(detail::make_snapshot(sys, op, 0.0, "pre-fault", none));
    sc.snapshots.push_back(detail::make_snapshot(sys, op, fault.t_on, "fault-on", faulted));
    sc.snapshots.push_back(detail::make_snapshot(post, op, fault.t_clear, "post-fault", none));
    return sc;
}

/// Constant-admittance load step of `s` (p.u., converted at the operating
/// voltage) added at `bus` from time `t_step` on.
inline Scenario build_load_step_scenario(const PowerSystem& sys, const OperatingPoint& op, int bus, Complex s,
                                         double t_step = 0.0, double step = 1e-3, double horizon = 10.0) {
    Scenario sc;
    sc.step = step;
    sc.horizon = horizon;
    const auto nb = static_cast<Eigen::Index>(sys.buses.size());
    const auto i = static_cast<Eigen::Index>(sys.bus_index(bus));
    ShuntVector extra = ShuntVector::Zero(nb);
    extra(i) = std::conj(s) / std::norm(op.voltage(i));
    sc.id = "load-step:" + std::to_string(bus);
    if (t_step > 0) sc.snapshots.push_back(detail::make_snapshot(sys, op, 0.0, "pre-step", ShuntVector::Zero(nb)));
    sc.snapshots.push_back(detail::make_snapshot(sys, op, t_step, "post-step", extra));
    return sc;
}

/// Full-model simulation under a scenario.
inline Trajectory simulate_full(const DynamicModel& m, const Scenario& sc, const Vec& x0,
                                std::size_t record_stride = 1,
                                std::function<bool(std::size_t, double, const Vec&)> observer = {},
                                bool throw_on_blowup = true) {
    SimulationOptions opt;
    opt.step = sc.step;
    opt.horizon = sc.horizon;
    opt.events = sc.event_times();
    opt.record_stride = record_stride;
    opt.observer = std::move(observer);
    opt.throw_on_blowup = throw_on_blowup;
    auto tr = simulate([&](std::size_t seg, double, const Vec& x) { return full_rhs(m, sc.network(seg), x); }, x0, opt);
    tr.subsystem = "full";
    tr.scenario_id = sc.id;
    return tr;
}

/// Voltage-subsystem simulation with the rotor angles frozen at `delta`.
inline Trajectory simulate_voltage(const DynamicModel& m, const Scenario& sc, const Vec& delta, const Vec& x0,
                                   std::size_t record_stride = 1) {
    std::vector<CMat> maps;
    for (const auto& s : sc.snapshots) maps.push_back(frame_map(s.rn, delta));
    const auto n = m.n;
    SimulationOptions opt;
    opt.step = sc.step;
    opt.horizon = sc.horizon;
    opt.events = sc.event_times();
    opt.record_stride = record_stride;
    auto tr = simulate(
        [&](std::size_t seg, double, const Vec& x) { return voltage_rhs(m, maps[seg], x.head(n), x.tail(n)); }, x0,
        opt);
    tr.subsystem = "voltage";
    tr.scenario_id = sc.id;
    return tr;
}

}  // namespace pscert
