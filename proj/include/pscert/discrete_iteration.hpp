#pragma once

// Static input-state characteristics of the two voltage-subsystem halves and
// the fixed-point iteration u <- K_v^{-1} k_x2(u) built from them.

#include "pscert/dynamics.hpp"

namespace pscert {

/// Everything the static characteristics need, frozen at one rotor-angle vector.
struct VoltageStatics {
    CouplingMatrices cm;
    Eigen::FullPivLU<Mat> kv_lu;
    Vec ka;          // 0 for machines without an exciter
    Vec v_ref;
    Vec efd_fixed;   // field voltage of machines without an exciter
    std::vector<bool> excited;
    Vec eq_e, efd_e; // equilibrium the statics were built around

    Eigen::Index size() const { return ka.size(); }
};

inline VoltageStatics voltage_statics(const PowerSystem& sys, const OperatingPoint& op, const EquilibriumState& eq) {
    VoltageStatics s;
    const auto rn = base_network(sys, op);
    s.cm = coupling_matrices(rn, eq.delta, sys.machines);
    s.kv_lu.compute(s.cm.K_v);
    if (!s.kv_lu.isInvertible()) throw NumericalError("K_v is singular");
    const auto m = DynamicModel::from(sys, eq);
    s.ka = m.ka;
    s.excited = m.excited;
    s.v_ref = eq.v_ref;
    s.efd_fixed = eq.efd;
    s.eq_e = eq.eq_p;
    s.efd_e = eq.efd;
    return s;
}

/// Same statics with every exciter gain set to `ka`; V_ref is re-solved so
/// the equilibrium is unchanged.
inline VoltageStatics with_uniform_ka(VoltageStatics s, double ka) {
    const Vec vt = terminal_voltage_magnitudes(s.cm, s.eq_e);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!s.excited[static_cast<std::size_t>(i)]) continue;
        s.ka(i) = ka;
        s.v_ref(i) = ka > 0 ? vt(i) + s.efd_e(i) / ka : std::numeric_limits<double>::infinity();
    }
    return s;
}

/// k_x1(u) = -K_v^{-1} u.
inline Vec static_char_voltage(const VoltageStatics& s, const Vec& u) { return -s.kv_lu.solve(u); }

/// k_x2(u) = K_A (h'(u) + V_ref), h'(u) = -h(-u); fixed field voltage where
/// there is no exciter.
inline Vec static_char_exciter(const VoltageStatics& s, const Vec& u) {
    if ((u.array() >= 0.0).any()) throw PreconditionError("static_char_exciter: -u must be positive");
    const Vec hp = -terminal_voltage_magnitudes(s.cm, -u);
    Vec out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        out(i) = s.excited[static_cast<std::size_t>(i)] ? s.ka(i) * (hp(i) + s.v_ref(i)) : s.efd_fixed(i);
    return out;
}

inline Vec iteration_map(const VoltageStatics& s, const Vec& u) { return s.kv_lu.solve(static_char_exciter(s, u)); }

struct DiscreteIterationResult {
    enum class Status { converged, diverged, cap_exceeded };
    Status status = Status::cap_exceeded;
    std::vector<Vec> history;
    Vec fixed_point;
    int iterations = 0;
    double step_norm = 0.0;
    double previous_step_norm = 0.0;

    bool converged() const { return status == Status::converged; }
};

/// Divergence: step norm growing for `growth_limit` consecutive iterations,
/// exceeding 1e6, or leaving the domain of h'.
inline DiscreteIterationResult iterate_discrete(const VoltageStatics& s, const Vec& u0, double tol = 1e-12,
                                                int cap = 1000, int growth_limit = 10) {
    DiscreteIterationResult r;
    r.history.push_back(u0);
    Vec u = u0;
    int growing = 0;
    for (int k = 0; k < cap; ++k) {
        if ((u.array() >= 0.0).any() || !u.allFinite()) {
            r.status = DiscreteIterationResult::Status::diverged;
            r.iterations = k;
            return r;
        }
        const Vec next = iteration_map(s, u);
        r.previous_step_norm = r.step_norm;
        r.step_norm = inf_norm(next - u);
        r.history.push_back(next);
        r.iterations = k + 1;
        u = next;
        if (r.step_norm < tol) {
            r.status = DiscreteIterationResult::Status::converged;
            r.fixed_point = u;
            return r;
        }
        growing = (k > 0 && r.step_norm > r.previous_step_norm) ? growing + 1 : 0;
        if (growing >= growth_limit || r.step_norm > 1e6) {
            r.status = DiscreteIterationResult::Status::diverged;
            return r;
        }
    }
    r.status = DiscreteIterationResult::Status::cap_exceeded;
    return r;
}

struct SpectralMeasure {
    Mat J_D;
    double rho = 0.0;
    Vec eq_p;
    Vec ka;
};

/// J_D = K_v^{-1} diag(K_A) dh/dE'q evaluated at E'q.
inline SpectralMeasure discrete_jacobian(const VoltageStatics& s, const Vec& eq_p) {
    SpectralMeasure m;
    m.eq_p = eq_p;
    m.ka = s.ka;
    m.J_D = s.kv_lu.solve(Mat(s.ka.asDiagonal() * jacobian_h(s.cm, eq_p)));
    m.rho = spectral_radius(m.J_D);
    return m;
}

struct KaSweep {
    std::vector<double> ka;
    std::vector<double> rho;
    bool monotone = true;
    std::optional<double> critical_ka;
};

/// rho(J_D) at the equilibrium for uniform gains `grid`; crossing of rho = 1
/// bisected to `tol`.
inline KaSweep sweep_KA(const VoltageStatics& base, const std::vector<double>& grid, double tol = 1e-3) {
    KaSweep sw;
    auto rho_at = [&](double ka) { return discrete_jacobian(with_uniform_ka(base, ka), base.eq_e).rho; };
    for (double ka : grid) {
        if (!(ka >= 0)) throw PreconditionError("sweep_KA: gains must be non-negative");
        sw.ka.push_back(ka);
        sw.rho.push_back(rho_at(ka));
    }
    for (std::size_t k = 1; k < sw.rho.size(); ++k)
        if (sw.ka[k] >= sw.ka[k - 1] && sw.rho[k] < sw.rho[k - 1] - 1e-12) sw.monotone = false;
    for (std::size_t k = 1; k < sw.rho.size(); ++k) {
        if (sw.rho[k - 1] < 1.0 && sw.rho[k] >= 1.0) {
            double lo = sw.ka[k - 1], hi = sw.ka[k];
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                (rho_at(mid) < 1.0 ? lo : hi) = mid;
            }
            sw.critical_ka = 0.5 * (lo + hi);
            break;
        }
    }
    return sw;
}

}  // namespace pscert
