#pragma once

// Rotor and voltage subsystems of a power system in the deviation
// coordinates used for ISS estimation.
//
// Rotor: state (COI angle deviation, speed relative to the COI speed), input
// the E'q deviation of machines with an exciter.
// Voltage: state (E'q, E_fd) deviation, input a COI-relative angle deviation.

#include "pscert/liss.hpp"
#include "pscert/scenario.hpp"

namespace pscert {

struct PowerContext {
    PowerSystem sys;
    OperatingPoint op;
    EquilibriumState eq;
    ReducedNetwork rn;
    DynamicModel model;
    Vec H;
    std::vector<Eigen::Index> excited;  // machine indices with an exciter

    static PowerContext from(const PowerSystem& sys) {
        PowerContext c;
        c.sys = sys;
        c.op = solve_power_flow(sys);
        c.eq = initialize_equilibrium(sys, c.op);
        c.rn = base_network(sys, c.op);
        c.model = DynamicModel::from(sys, c.eq);
        c.H = sys.inertia();
        for (Eigen::Index i = 0; i < c.model.n; ++i)
            if (c.model.excited[static_cast<std::size_t>(i)]) c.excited.push_back(i);
        return c;
    }

    Eigen::Index n() const { return model.n; }

    /// Subtracts the inertia-weighted mean.
    Vec coi(const Vec& x) const { return coi_transform(x, H); }
};

namespace detail {

inline std::vector<Vec> unique_nonzero(std::vector<Vec> in, bool inf_normalize) {
    std::vector<Vec> out;
    for (auto& v : in) {
        const double nv = inf_normalize ? inf_norm(v) : v.norm();
        if (!(nv > 1e-9)) continue;
        v /= nv;
        bool dup = false;
        for (const auto& o : out) dup = dup || (o - v).cwiseAbs().maxCoeff() < 1e-9;
        if (!dup) out.push_back(v);
    }
    return out;
}

}  // namespace detail

inline IssSubsystem rotor_subsystem(const PowerContext& c, std::size_t max_directions = 8, std::uint64_t seed = 11) {
    const auto n = c.n();
    IssSubsystem s;
    s.tag = "rotor";
    s.state_dim = 2 * n;
    s.input_dim = static_cast<Eigen::Index>(c.excited.size());
    s.v_cap = 2.0 * kPi;
    s.w_cap = 2.0;
    s.settle_horizon = 400.0;
    const Vec coi_e = c.coi(c.eq.delta);

    s.initial = [&c, n](const Vec& xi) {
        Vec z(2 * n);
        z.head(n) = c.eq.delta + xi.head(n);
        z.tail(n) = c.eq.omega + xi.tail(n);
        return z;
    };
    s.measure = [&c, n, coi_e](const Vec& z) {
        Vec x(2 * n);
        x.head(n) = c.coi(z.head(n)) - coi_e;
        x.tail(n) = c.coi(z.tail(n));
        return x;
    };
    s.unstable = [&c, n, coi_e](const Vec& z) {
        if (!z.allFinite()) return true;
        return inf_norm(c.coi(z.head(n)) - coi_e) > kPi;
    };
    s.field = [&c, n](const Vec& u) -> Rhs {
        Vec e = c.eq.eq_p;
        for (std::size_t k = 0; k < c.excited.size(); ++k) e(c.excited[k]) += u(static_cast<Eigen::Index>(k));
        return [&c, n, e](double, const Vec& z) {
            const Vec delta = z.head(n);
            return rotor_rhs(c.model, frame_map(c.rn, delta), delta, z.tail(n), e);
        };
    };

    std::vector<Vec> dirs;
    for (const auto& sv : sign_directions(n, max_directions, seed)) {
        Vec d = Vec::Zero(2 * n);
        d.head(n) = c.coi(sv);
        dirs.push_back(d);
    }
    s.state_directions = detail::unique_nonzero(dirs, false);
    s.input_directions = detail::unique_nonzero(sign_directions(s.input_dim, max_directions, seed + 1), true);
    return s;
}

inline IssSubsystem voltage_subsystem(const PowerContext& c, std::size_t max_directions = 8, std::uint64_t seed = 13) {
    const auto n = c.n();
    IssSubsystem s;
    s.tag = "voltage";
    s.state_dim = 2 * n;
    s.input_dim = n;
    s.v_cap = 5.0;
    s.w_cap = kPi;
    s.settle_horizon = 200.0;
    Vec ze(2 * n);
    ze << c.eq.eq_p, c.eq.efd;

    s.initial = [ze](const Vec& xi) -> Vec { return ze + xi; };
    s.measure = [ze](const Vec& z) -> Vec { return z - ze; };
    s.unstable = [n, ze](const Vec& z) {
        if (!z.allFinite()) return true;
        if ((z.head(n).array() <= 0.0).any()) return true;
        return inf_norm(z - ze) > 100.0;
    };
    s.field = [&c, n](const Vec& u) -> Rhs {
        const CMat p = frame_map(c.rn, c.eq.delta + u);
        return [&c, n, p](double, const Vec& z) { return voltage_rhs(c.model, p, z.head(n), z.tail(n)); };
    };

    // Active coordinates: every E'q, and E_fd of machines with an exciter.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i) active.push_back(i);
    for (auto i : c.excited) active.push_back(n + i);
    std::vector<Vec> dirs;
    for (const auto& sv : sign_directions(static_cast<Eigen::Index>(active.size()), max_directions, seed)) {
        Vec d = Vec::Zero(2 * n);
        for (std::size_t k = 0; k < active.size(); ++k) d(active[k]) = sv(static_cast<Eigen::Index>(k));
        dirs.push_back(d);
    }
    // Single-coordinate moves reach E'q = 0 soonest.
    for (auto i : active)
        for (double sgn : {1.0, -1.0}) {
            Vec d = Vec::Zero(2 * n);
            d(i) = sgn;
            dirs.push_back(d);
        }
    s.state_directions = detail::unique_nonzero(dirs, false);
    std::vector<Vec> inputs;
    for (const auto& sv : sign_directions(n, max_directions, seed + 1)) inputs.push_back(c.coi(sv));
    s.input_directions = detail::unique_nonzero(inputs, true);
    return s;
}

/// Seeded random directions for held-out validation, matching each
/// subsystem's coordinates.
inline std::function<Vec(Rng&)> rotor_random_state(const PowerContext& c) {
    return [&c](Rng& rng) {
        const auto n = c.n();
        Vec d = Vec::Zero(2 * n);
        d.head(n) = c.coi(rng.normal_vector(n));
        return Vec(d / d.norm());
    };
}

inline std::function<Vec(Rng&)> rotor_random_input(const PowerContext& c) {
    return [&c](Rng& rng) {
        Vec d(static_cast<Eigen::Index>(c.excited.size()));
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = rng.uniform(-1.0, 1.0);
        return Vec(d / inf_norm(d));
    };
}

inline std::function<Vec(Rng&)> voltage_random_state(const PowerContext& c) {
    return [&c](Rng& rng) {
        const auto n = c.n();
        Vec d = Vec::Zero(2 * n);
        d.head(n) = rng.normal_vector(n);
        for (auto i : c.excited) d(n + i) = rng.normal();
        return Vec(d / d.norm());
    };
}

inline std::function<Vec(Rng&)> voltage_random_input(const PowerContext& c) {
    return [&c](Rng& rng) {
        const Vec d = c.coi(rng.normal_vector(c.n()));
        return Vec(d / inf_norm(d));
    };
}

}  // namespace pscert
