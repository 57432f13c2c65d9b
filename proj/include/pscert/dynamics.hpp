#pragma once

// One-axis machine model with first-order exciters, split into the rotor
// subsystem (delta, omega) and the voltage subsystem (E'q, E_fd).
//
// Full state layout: [delta(n), omega(n), E'q(n), E_fd(n)].

#include "pscert/equilibrium.hpp"

namespace pscert {

/// Machine and exciter parameters as flat vectors plus the back-solved P_m
/// and V_ref. Machines without an exciter keep E_fd constant.
struct DynamicModel {
    Eigen::Index n = 0;
    Vec H, D, xd, xd_p, xq_p, td0_p, omega_base, omega_ref;
    Vec ka, ta, efd_min, efd_max, v_ref, pm;
    std::vector<bool> excited;

    static DynamicModel from(const PowerSystem& sys, const EquilibriumState& eq) {
        DynamicModel m;
        m.n = static_cast<Eigen::Index>(sys.machines.size());
        const auto n = m.n;
        for (Vec* v : {&m.H, &m.D, &m.xd, &m.xd_p, &m.xq_p, &m.td0_p, &m.omega_base, &m.omega_ref, &m.ka, &m.ta,
                       &m.efd_min, &m.efd_max})
            v->resize(n);
        m.excited.assign(static_cast<std::size_t>(n), false);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& g = sys.machines[static_cast<std::size_t>(i)];
            m.H(i) = g.H;
            m.D(i) = g.D;
            m.xd(i) = g.xd;
            m.xd_p(i) = g.xd_p;
            m.xq_p(i) = g.xq_p;
            m.td0_p(i) = g.td0_p;
            m.omega_base(i) = g.omega_base;
            m.omega_ref(i) = g.omega_ref;
            m.ka(i) = 0.0;
            m.ta(i) = 1.0;
            m.efd_min(i) = -std::numeric_limits<double>::infinity();
            m.efd_max(i) = std::numeric_limits<double>::infinity();
            if (const auto* x = sys.exciter_of(static_cast<std::size_t>(i))) {
                m.excited[static_cast<std::size_t>(i)] = true;
                m.ka(i) = x->ka;
                m.ta(i) = x->ta;
                m.efd_min(i) = x->efd_min;
                m.efd_max(i) = x->efd_max;
            }
        }
        m.pm = eq.pm;
        m.v_ref = eq.v_ref;
        return m;
    }
};

inline Vec full_state(const EquilibriumState& eq) {
    const auto n = eq.delta.size();
    Vec x(4 * n);
    x << eq.delta, eq.omega, eq.eq_p, eq.efd;
    return x;
}

inline Vec apply_saturation(const Vec& efd, const Vec& lo, const Vec& hi) { return efd.cwiseMax(lo).cwiseMin(hi); }

inline double apply_saturation(double efd, double lo, double hi) { return std::min(std::max(efd, lo), hi); }

/// p = diag(e^{-j delta}) K: maps E'q to Vq - jVd in each rotor frame.
inline CMat frame_map(const ReducedNetwork& rn, const Vec& delta) {
    const auto n = rn.size();
    CVec unrot(n);
    for (Eigen::Index i = 0; i < n; ++i) unrot(i) = std::polar(1.0, -delta(i));
    if (!rn.salient) {
        CVec rot(n);
        for (Eigen::Index i = 0; i < n; ++i) rot(i) = std::conj(unrot(i));
        return unrot.asDiagonal() * rn.W * rot.asDiagonal();
    }
    return unrot.asDiagonal() * salient_closed_form(rn, delta);
}

struct MachineFrame {
    Vec vd, vq, id, iq, vt;
};

inline MachineFrame machine_frame(const DynamicModel& m, const CMat& p, const Vec& eq_p) {
    const CVec pe = p * eq_p.cast<Complex>();
    MachineFrame f;
    f.vq = pe.real();
    f.vd = -pe.imag();
    f.vt = pe.cwiseAbs();
    f.id = (eq_p - f.vq).cwiseQuotient(m.xd_p);
    f.iq = f.vd.cwiseQuotient(m.xq_p);
    return f;
}

/// Rows 1-2: (d delta, d omega) with E'q as an exogenous input.
inline Vec rotor_rhs(const DynamicModel& m, const CMat& p, const Vec& delta, const Vec& omega, const Vec& eq_p) {
    (void)delta;
    const auto f = machine_frame(m, p, eq_p);
    const auto n = m.n;
    Vec dx(2 * n);
    const Vec dw = omega - m.omega_ref;
    dx.head(n) = m.omega_base.cwiseProduct(dw);
    const Vec pe = f.iq.cwiseProduct(eq_p) + (m.xq_p - m.xd_p).cwiseProduct(f.id).cwiseProduct(f.iq);
    dx.tail(n) = (m.pm - pe - m.D.cwiseProduct(dw)).cwiseQuotient(2.0 * m.H);
    return dx;
}

/// Rows 3-4: (d E'q, d E_fd) with the frame map p evaluated at the input delta.
inline Vec voltage_rhs(const DynamicModel& m, const CMat& p, const Vec& eq_p, const Vec& efd) {
    const auto f = machine_frame(m, p, eq_p);
    const auto n = m.n;
    Vec dx(2 * n);
    const Vec sat = apply_saturation(efd, m.efd_min, m.efd_max);
    dx.head(n) = (sat - eq_p - (m.xd - m.xd_p).cwiseProduct(f.id)).cwiseQuotient(m.td0_p);
    for (Eigen::Index i = 0; i < n; ++i)
        dx(n + i) = m.excited[static_cast<std::size_t>(i)] ? (m.ka(i) * (m.v_ref(i) - f.vt(i)) - efd(i)) / m.ta(i) : 0.0;
    return dx;
}

inline Vec voltage_rhs(const DynamicModel& m, const ReducedNetwork& rn, const Vec& delta, const Vec& eq_p,
                       const Vec& efd) {
    return voltage_rhs(m, frame_map(rn, delta), eq_p, efd);
}

inline Vec full_rhs(const DynamicModel& m, const ReducedNetwork& rn, const Vec& x) {
    const auto n = m.n;
    if (x.size() != 4 * n) throw PreconditionError("full_rhs: state size mismatch");
    const Vec delta = x.segment(0, n);
    const CMat p = frame_map(rn, delta);
    Vec dx(4 * n);
    dx.head(2 * n) = rotor_rhs(m, p, delta, x.segment(n, n), x.segment(2 * n, n));
    dx.tail(2 * n) = voltage_rhs(m, p, x.segment(2 * n, n), x.segment(3 * n, n));
    return dx;
}

}  // namespace pscert
