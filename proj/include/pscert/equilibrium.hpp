#pragma once

// Steady state of the one-axis model consistent with a solved power flow.

#include "pscert/network.hpp"

namespace pscert {

/// Reduced network of the unperturbed system, loads converted at `op`.
inline ReducedNetwork base_network(const PowerSystem& sys, const OperatingPoint& op) {
    return reduce_network(assemble_admittance(sys, op), sys.machines);
}

inline EquilibriumState initialize_equilibrium(const PowerSystem& sys, const OperatingPoint& op) {
    const auto n = static_cast<Eigen::Index>(sys.machines.size());
    const auto py = assemble_admittance(sys, op);
    const auto rn = reduce_network(py, sys.machines);

    CVec vg(n);
    for (Eigen::Index i = 0; i < n; ++i) vg(i) = op.voltage(static_cast<Eigen::Index>(py.gen_buses[static_cast<std::size_t>(i)]));
    // Current drawn from the reduced network keeps the residual at roundoff.
    const CVec ig = rn.Y_red * vg;

    EquilibriumState eq;
    eq.delta.resize(n);
    eq.omega.resize(n);
    eq.eq_p.resize(n);
    eq.efd.resize(n);
    eq.pm.resize(n);
    eq.v_ref.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = sys.machines[static_cast<std::size_t>(i)];
        if (std::abs(vg(i)) == 0.0)
            throw PreconditionError("machine " + std::to_string(i + 1) + ": terminal voltage is zero, current undefined");
        const Complex eQ = vg(i) + kJ * m.xq_p * ig(i);
        const double d = std::arg(eQ);
        const Complex rot = kJ * std::polar(1.0, -d);
        const Complex vdq = rot * vg(i);
        const Complex idq = rot * ig(i);
        const double id = idq.real(), iq = idq.imag();
        const double vq = vdq.imag();
        const double eqp = vq + m.xd_p * id;
        const double efd = eqp + (m.xd - m.xd_p) * id;
        eq.delta(i) = d;
        eq.omega(i) = m.omega_ref;
        eq.eq_p(i) = eqp;
        eq.efd(i) = efd;
        eq.pm(i) = iq * eqp + (m.xq_p - m.xd_p) * id * iq;
        if (const auto* x = sys.exciter_of(static_cast<std::size_t>(i))) {
            if (efd < x->efd_min || efd > x->efd_max)
                throw PreconditionError("machine " + std::to_string(i + 1) + ": equilibrium field voltage " +
                                        format_sig(efd, 6) + " outside exciter limits");
            eq.v_ref(i) = std::abs(vg(i)) + efd / x->ka;
        } else {
            eq.v_ref(i) = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return eq;
}

}  // namespace pscert
