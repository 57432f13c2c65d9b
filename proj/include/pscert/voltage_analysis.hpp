#pragma once

// Voltage-subsystem views for the sign and envelope analyses: the
// (E'q, E_fd) vector field with the rotor angles held as an input, sign
// checks along full-model fault runs, and load-step envelopes.

#include "pscert/monotone.hpp"
#include "pscert/scenario.hpp"

namespace pscert {

/// Relative classification floor for Jacobians taken during a bolted fault:
/// the fault shunt resolves admittances only to about 1 / kFaultAdmittance.
inline constexpr double kSignRelTol = 1.0 / kFaultAdmittance;

inline VectorField voltage_field(const DynamicModel& m, const ReducedNetwork& rn, const Vec& delta) {
    const CMat p = frame_map(rn, delta);
    const auto n = m.n;
    return [m, p, n](const Vec& z) { return voltage_rhs(m, p, z.head(n), z.tail(n)); };
}

inline Vec voltage_state(const EquilibriumState& eq) {
    Vec z(eq.eq_p.size() * 2);
    z << eq.eq_p, eq.efd;
    return z;
}

inline std::vector<std::string> voltage_state_names(Eigen::Index n) {
    std::vector<std::string> names;
    for (const char* p : {"eqp_", "efd_"})
        for (Eigen::Index i = 1; i <= n; ++i) names.push_back(p + std::to_string(i));
    return names;
}

/// Everything the voltage analyses need about one system.
struct VoltageSetup {
    PowerSystem sys;
    OperatingPoint op;
    EquilibriumState eq;
    DynamicModel model;
    ReducedNetwork rn;

    static VoltageSetup from(const PowerSystem& sys) {
        VoltageSetup s;
        s.sys = sys;
        s.op = solve_power_flow(sys);
        s.eq = initialize_equilibrium(sys, s.op);
        s.model = DynamicModel::from(sys, s.eq);
        s.rn = base_network(sys, s.op);
        return s;
    }

    VectorField field() const { return voltage_field(model, rn, eq.delta); }
    Vec state() const { return voltage_state(eq); }
};

struct EquilibriumSigns {
    Mat jacobian;
    SignPattern pattern;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> structural;
};

inline EquilibriumSigns equilibrium_signs(const VoltageSetup& s, double tol = 1e-9) {
    EquilibriumSigns e;
    const auto f = s.field();
    e.jacobian = numeric_jacobian(f, s.state());
    e.pattern = sign_pattern(e.jacobian, tol);
    e.structural = structural_zeros(f, s.state());
    return e;
}

struct FaultSignCheck {
    EquilibriumSigns reference;
    Scenario scenario;
    Trajectory trajectory;
    SignStabilityReport report;
    double max_angle_spread = 0.0;  // max over samples of max_i delta_i - min_i delta_i
};

/// Segment index in force at time t (events fire on the step grid).
inline std::size_t segment_at(const std::vector<double>& events, double t, double step) {
    std::size_t s = 0;
    for (double e : events)
        if (t >= e - 0.5 * step) ++s;
    return s;
}

/// Full-model run under `fault`; the voltage-subsystem Jacobian is taken at
/// every `stride`-th sample with the network and rotor angles of that sample
/// and compared with the equilibrium pattern.
inline FaultSignCheck check_fault_signs(const VoltageSetup& s, const FaultSpec& fault, double step, double horizon,
                                        std::size_t stride = 1, double tol = 1e-9, double rel_tol = kSignRelTol) {
    FaultSignCheck c;
    c.reference = equilibrium_signs(s, tol);
    c.scenario = build_scenario(s.sys, s.op, fault, step, horizon);
    c.trajectory = simulate_full(s.model, c.scenario, full_state(s.eq), 1, {}, false);
    const auto n = s.model.n;
    const auto events = c.scenario.event_times();
    std::vector<Vec> states;
    states.reserve(c.trajectory.size());
    for (const auto& x : c.trajectory.x) {
        states.push_back(x.segment(2 * n, 2 * n));
        const Vec d = x.head(n);
        c.max_angle_spread = std::max(c.max_angle_spread, d.maxCoeff() - d.minCoeff());
    }
    c.report = sign_stability_along_trajectory(
        [&](std::size_t k) {
            const auto seg = segment_at(events, c.trajectory.t[k], step);
            return voltage_field(s.model, c.scenario.network(seg), c.trajectory.x[k].head(n));
        },
        states, stride, c.reference.pattern, c.reference.structural, rel_tol);
    return c;
}

struct LoadStepEnvelope {
    Scenario scenario;
    EnvelopeTrajectory envelope;
    Trajectory actual;         // voltage subsystem from the equilibrium
    std::size_t interior_runs = 0;
    double worst_excursion = 0.0;  // largest amount any run leaves the envelope by
    bool contained = true;

    double terminal_gap() const { return envelope_gap_metric(envelope).back(); }
};

/// Envelope of the voltage subsystem (rotor angles at equilibrium) under a
/// constant-admittance load step, started from the box equilibrium +- half_width.
/// `interior` seeded runs from inside the box are checked for containment.
inline LoadStepEnvelope load_step_envelope(const VoltageSetup& s, int bus, Complex load, double half_width,
                                           double step, double horizon, std::size_t interior = 0,
                                           std::uint64_t seed = 1, double contain_tol = 1e-8) {
    if (!(half_width >= 0)) throw PreconditionError("load_step_envelope: half width must be non-negative");
    LoadStepEnvelope r;
    r.scenario = build_load_step_scenario(s.sys, s.op, bus, load, 0.0, step, horizon);
    const SignPattern pattern = sign_pattern(numeric_jacobian(s.field(), s.state()));
    std::vector<MixedMonotoneDecomposition> per_segment;
    for (const auto& snap : r.scenario.snapshots)
        per_segment.emplace_back(voltage_field(s.model, snap.rn, s.eq.delta), pattern);

    SimulationOptions opt;
    opt.step = step;
    opt.horizon = horizon;
    opt.events = r.scenario.event_times();
    const Vec ze = s.state();
    const Vec lo = ze.array() - half_width, hi = ze.array() + half_width;
    r.envelope = simulate_envelope(
        [&](std::size_t seg) -> const MixedMonotoneDecomposition& { return per_segment.at(seg); }, lo, hi, opt);
    r.actual = simulate_voltage(s.model, r.scenario, s.eq.delta, ze);

    auto track = [&](const Trajectory& tr) {
        for (std::size_t k = 0; k < tr.size(); ++k) {
            const double out = std::max((tr.x[k] - r.envelope.hi[k]).maxCoeff(), (r.envelope.lo[k] - tr.x[k]).maxCoeff());
            r.worst_excursion = std::max(r.worst_excursion, out);
        }
    };
    track(r.actual);
    Rng rng(seed);
    for (std::size_t i = 0; i < interior; ++i) {
        Vec x0(ze.size());
        for (Eigen::Index j = 0; j < x0.size(); ++j) x0(j) = rng.uniform(lo(j), hi(j));
        track(simulate_voltage(s.model, r.scenario, s.eq.delta, x0));
    }
    r.interior_runs = interior;
    r.contained = r.worst_excursion <= contain_tol;
    return r;
}

/// Same system with every exciter time constant set to `ta`.
inline PowerSystem with_exciter_time_constant(PowerSystem sys, double ta) {
    if (!(ta > 0)) throw PreconditionError("exciter time constant must be positive");
    for (auto& x : sys.exciters) x.ta = ta;
    return sys;
}

/// Same system with every exciter gain set to `ka`; V_ref follows from the
/// equilibrium, which does not depend on the gain.
inline PowerSystem with_exciter_gain(PowerSystem sys, double ka) {
    if (!(ka > 0)) throw PreconditionError("exciter gain must be positive");
    for (auto& x : sys.exciters) x.ka = ka;
    return sys;
}

}  // namespace pscert
