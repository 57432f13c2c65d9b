#pragma once

// Newton-Raphson power flow in polar coordinates.

#include "pscert/grid.hpp"

namespace pscert {

/// Bus admittance matrix of the in-service branches (line charging included,
/// loads excluded).
inline CMat bus_admittance(const PowerSystem& sys) {
    const auto n = static_cast<Eigen::Index>(sys.buses.size());
    CMat Y = CMat::Zero(n, n);
    for (const auto& br : sys.branches) {
        if (!br.in_service) continue;
        const auto f = static_cast<Eigen::Index>(sys.bus_index(br.from));
        const auto t = static_cast<Eigen::Index>(sys.bus_index(br.to));
        const Complex y = br.admittance();
        const Complex half = Complex(0.0, br.b / 2.0);
        Y(f, f) += y + half;
        Y(t, t) += y + half;
        Y(f, t) -= y;
        Y(t, f) -= y;
    }
    return Y;
}

struct PowerFlowOptions {
    double tolerance = 1e-8;
    int max_iterations = 50;
};

inline OperatingPoint solve_power_flow(const PowerSystem& sys, const PowerFlowOptions& opt = {}) {
    validate(sys);
    const auto n = static_cast<Eigen::Index>(sys.buses.size());
    const CMat Y = bus_admittance(sys);

    std::vector<Eigen::Index> angle_vars;  // every non-slack bus
    std::vector<Eigen::Index> mag_vars;    // load (PQ) buses
    Vec vm(n), va(n);
    CVec s_spec(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = sys.buses[static_cast<std::size_t>(i)];
        vm(i) = b.kind == BusKind::generator ? b.v_set : 1.0;
        va(i) = b.slack ? b.angle : 0.0;
        s_spec(i) = (b.kind == BusKind::generator ? Complex(b.p_gen, 0.0) : Complex{}) - b.load;
        if (!b.slack) angle_vars.push_back(i);
        if (b.kind == BusKind::load) mag_vars.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(angle_vars.size());
    const auto nm = static_cast<Eigen::Index>(mag_vars.size());

    auto voltage = [&] {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
        return v;
    };
    auto mismatch = [&](const CVec& v, Vec& f) {
        const CVec s = v.cwiseProduct((Y * v).conjugate());
        const CVec d = s_spec - s;
        f.resize(na + nm);
        for (Eigen::Index k = 0; k < na; ++k) f(k) = d(angle_vars[static_cast<std::size_t>(k)]).real();
        for (Eigen::Index k = 0; k < nm; ++k) f(na + k) = d(mag_vars[static_cast<std::size_t>(k)]).imag();
        return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
    };

    CVec v = voltage();
    Vec f;
    double err = mismatch(v, f);
    int it = 0;
    while (!(err < opt.tolerance)) {
        if (it >= opt.max_iterations || !std::isfinite(err))
            throw ConvergenceError("power flow did not converge after " + std::to_string(it) +
                                       " iterations (mismatch " + format_sig(err, 6) + ")",
                                   err);
        const CVec ibus = Y * v;
        const CVec vnorm = v.cwiseQuotient(v.cwiseAbs().cast<Complex>());
        const CMat dS_dVa = kJ * v.asDiagonal() * (CMat(ibus.asDiagonal()) - Y * v.asDiagonal()).conjugate();
        const CMat dS_dVm = v.asDiagonal() * (Y * vnorm.asDiagonal()).conjugate() +
                            CMat(ibus.conjugate().asDiagonal()) * vnorm.asDiagonal();
        Mat J(na + nm, na + nm);
        for (Eigen::Index r = 0; r < na; ++r) {
            const auto i = angle_vars[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < na; ++c) J(r, c) = dS_dVa(i, angle_vars[static_cast<std::size_t>(c)]).real();
            for (Eigen::Index c = 0; c < nm; ++c) J(r, na + c) = dS_dVm(i, mag_vars[static_cast<std::size_t>(c)]).real();
        }
        for (Eigen::Index r = 0; r < nm; ++r) {
            const auto i = mag_vars[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < na; ++c) J(na + r, c) = dS_dVa(i, angle_vars[static_cast<std::size_t>(c)]).imag();
            for (Eigen::Index c = 0; c < nm; ++c) J(na + r, na + c) = dS_dVm(i, mag_vars[static_cast<std::size_t>(c)]).imag();
        }
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible())
            throw ConvergenceError("power flow Jacobian singular (mismatch " + format_sig(err, 6) + ")", err);
        const Vec dx = lu.solve(f);
        for (Eigen::Index k = 0; k < na; ++k) va(angle_vars[static_cast<std::size_t>(k)]) += dx(k);
        for (Eigen::Index k = 0; k < nm; ++k) vm(mag_vars[static_cast<std::size_t>(k)]) += dx(na + k);
        v = voltage();
        err = mismatch(v, f);
        ++it;
    }

    OperatingPoint op;
    op.voltage = v;
    op.generation = v.cwiseProduct((Y * v).conjugate());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = sys.buses[static_cast<std::size_t>(i)];
        op.generation(i) = b.kind == BusKind::generator ? op.generation(i) + b.load : Complex{};
    }
    op.mismatch = err;
    op.iterations = it;
    return op;
}

}  // namespace pscert
