#pragma once

// Admittance partitioning, Kron reduction of load buses and the rotor-frame
// coupling matrices that map E'q to machine currents and terminal voltages.

#include "pscert/power_flow.hpp"

#include <sstream>

namespace pscert {

/// Admittance blocks, generator buses first (in machine order). Loads are
/// positive shunt admittances; `Y_L` covers load buses, `Y_Lg` loads sitting
/// on generator buses.
struct PartitionedY {
    CMat Y;        // full network, no loads
    CMat Y_GG, Y_GL, Y_LG, Y_LL;
    CVec Y_L;
    CVec Y_Lg;
    std::vector<std::size_t> gen_buses;
    std::vector<std::size_t> load_buses;
};

/// Extra per-bus shunts applied on top of the converted loads (faults, load
/// steps). Indexed like PowerSystem::buses.
using ShuntVector = CVec;

/// Constant-admittance load model conj(S)/|V|^2 at the given voltages.
inline CVec load_admittances(const PowerSystem& sys, const CVec& voltage) {
    const auto n = static_cast<Eigen::Index>(sys.buses.size());
    if (voltage.size() != n) throw PreconditionError("load_admittances: voltage vector size mismatch");
    CVec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double vm2 = std::norm(voltage(i));
        if (!(vm2 > 0)) throw NumericalError("load conversion at zero bus voltage");
        y(i) = std::conj(sys.buses[static_cast<std::size_t>(i)].load) / vm2;
    }
    return y;
}

inline PartitionedY assemble_admittance(const PowerSystem& sys, const OperatingPoint& op,
                                        const ShuntVector& extra = {}) {
    PartitionedY py;
    py.Y = bus_admittance(sys);
    CVec shunt = load_admittances(sys, op.voltage);
    if (extra.size() != 0) {
        if (extra.size() != shunt.size()) throw PreconditionError("assemble_admittance: shunt vector size mismatch");
        shunt += extra;
    }
    std::vector<bool> is_gen(sys.buses.size(), false);
    for (const auto& m : sys.machines) {
        py.gen_buses.push_back(sys.bus_index(m.bus));
        is_gen[py.gen_buses.back()] = true;
    }
    for (std::size_t i = 0; i < sys.buses.size(); ++i)
        if (!is_gen[i]) py.load_buses.push_back(i);

    const auto ng = static_cast<Eigen::Index>(py.gen_buses.size());
    const auto nl = static_cast<Eigen::Index>(py.load_buses.size());
    auto block = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
        CMat b(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c)
                b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    py.Y(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
        return b;
    };
    py.Y_GG = block(py.gen_buses, py.gen_buses);
    py.Y_GL = block(py.gen_buses, py.load_buses);
    py.Y_LG = block(py.load_buses, py.gen_buses);
    py.Y_LL = block(py.load_buses, py.load_buses);
    py.Y_L.resize(nl);
    py.Y_Lg.resize(ng);
    for (Eigen::Index k = 0; k < nl; ++k) py.Y_L(k) = shunt(static_cast<Eigen::Index>(py.load_buses[static_cast<std::size_t>(k)]));
    for (Eigen::Index k = 0; k < ng; ++k) py.Y_Lg(k) = shunt(static_cast<Eigen::Index>(py.gen_buses[static_cast<std::size_t>(k)]));
    return py;
}

struct ReducedNetwork {
    CMat Y_red;       // generator-bus admittance with load buses eliminated
    Mat G, B;
    CMat Z_G;         // (Y_red + diag(Y_1))^{-1}
    CVec Y_1, Y_2;
    Vec xd_p, xq_p;
    CMat W;           // non-salient map: V_G = W (e^{j delta} o E'q)
    CMat load_recovery;  // V_L = load_recovery * V_G
    bool salient = false;

    Eigen::Index size() const { return Y_red.rows(); }
};

inline ReducedNetwork reduce_network(const PartitionedY& py, const std::vector<Machine>& machines) {
    const auto n = py.Y_GG.rows();
    if (static_cast<std::size_t>(n) != machines.size())
        throw PreconditionError("reduce_network: machine count does not match generator buses");
    ReducedNetwork rn;
    rn.Y_red = py.Y_GG;
    rn.Y_red.diagonal() += py.Y_Lg;
    if (py.Y_LL.rows() > 0) {
        CMat yll = py.Y_LL;
        yll.diagonal() += py.Y_L;
        Eigen::PartialPivLU<CMat> lu(yll);
        const double rcond = lu.rcond();
        if (!(rcond > 1e-14))
            throw NetworkError("singular load block (reciprocal condition estimate " + format_sig(rcond, 3) + ")");
        rn.load_recovery = -lu.solve(py.Y_LG);
        rn.Y_red += py.Y_GL * rn.load_recovery;
    } else {
        rn.load_recovery.resize(0, n);
    }
    rn.G = rn.Y_red.real();
    rn.B = rn.Y_red.imag();

    rn.xd_p.resize(n);
    rn.xq_p.resize(n);
    rn.Y_1.resize(n);
    rn.Y_2.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = machines[static_cast<std::size_t>(i)];
        rn.xd_p(i) = m.xd_p;
        rn.xq_p(i) = m.xq_p;
        rn.Y_1(i) = -kJ * (1.0 / m.xq_p + 1.0 / m.xd_p) / 2.0;
        rn.Y_2(i) = -kJ * (1.0 / m.xq_p - 1.0 / m.xd_p) / 2.0;
        rn.salient = rn.salient || m.salient();
    }
    CMat zinv = rn.Y_red;
    zinv.diagonal() += rn.Y_1;
    Eigen::PartialPivLU<CMat> lu(zinv);
    if (!(lu.rcond() > 1e-14)) throw NetworkError("generator impedance matrix is singular");
    rn.Z_G = lu.inverse();
    if (!rn.Z_G.allFinite()) throw NumericalError("Z_G is not finite");
    rn.W = -kJ * rn.Z_G * rn.xd_p.cwiseInverse().cast<Complex>().asDiagonal();
    return rn;
}

/// delta_D[i][j] = delta_i - delta_j.
inline Mat angle_differences(const Vec& delta) {
    const auto n = delta.size();
    Mat d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = delta(i) - delta(j);
    return d;
}

/// Saliency operators A_G = Z_G Y_2 e^{j2 delta} and B_G = -j Z_G X'd^{-1} e^{j delta}.
struct SaliencyOperators {
    CMat A, B;
};

inline SaliencyOperators saliency_operators(const ReducedNetwork& rn, const Vec& delta) {
    const auto n = rn.size();
    CVec a(n), b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i) = rn.Y_2(i) * std::polar(1.0, 2.0 * delta(i));
        b(i) = std::polar(1.0, delta(i)) / rn.xd_p(i);
    }
    return {rn.Z_G * a.asDiagonal(), -kJ * rn.Z_G * b.asDiagonal()};
}

/// Returns K_X + jK_Y with V_G = (K_X + jK_Y) E'q.
inline CMat salient_closed_form(const ReducedNetwork& rn, const Vec& delta, double* rho_out = nullptr) {
    if (delta.size() != rn.size()) throw PreconditionError("salient_closed_form: angle vector size mismatch");
    const auto ops = saliency_operators(rn, delta);
    const CMat AA = ops.A * ops.A.conjugate();
    const double rho = spectral_radius(AA);
    if (rho_out) *rho_out = rho;
    if (!(rho < 1.0))
        throw PreconditionError("spectral radius of A_G conj(A_G) is " + format_sig(rho, 6) + ", not below 1");
    const auto n = rn.size();
    if (rho == 0.0) return ops.B;
    return (CMat::Identity(n, n) - AA).partialPivLu().solve(ops.B + ops.A * ops.B.conjugate());
}

struct DommelSatoResult {
    CVec V;
    int iterations = 0;
    double last_change = 0.0;
};

/// Fixed-point solve of V = A conj(V) + B E.
inline DommelSatoResult dommel_sato_iterate(const CMat& A, const CMat& B, const Vec& eq_p, const CVec& v0,
                                            double tol = 1e-12) {
    const double rho = spectral_radius(CMat(A * A.conjugate()));
    if (!(rho < 1.0)) throw PreconditionError("Dommel-Sato iteration requires rho(A conj(A)) < 1");
    int cap = 10;
    if (rho > 0.0) cap = std::max(cap, 10 * static_cast<int>(std::ceil(std::log(tol) / std::log(rho))));
    const CVec be = B * eq_p.cast<Complex>();
    DommelSatoResult r;
    CVec v = v0;
    for (int k = 0; k < cap; ++k) {
        CVec next = A * v.conjugate() + be;
        r.last_change = (next - v).cwiseAbs().maxCoeff();
        if (r.last_change < tol) {
            r.V = next;
            r.iterations = k;
            return r;
        }
        v = std::move(next);
    }
    throw ConvergenceError("Dommel-Sato iteration cap exceeded", r.last_change);
}

/// Generator terminal voltages for given rotor angles and E'q.
inline CVec generator_voltages(const ReducedNetwork& rn, const Vec& delta, const Vec& eq_p) {
    if (!rn.salient) {
        CVec src(rn.size());
        for (Eigen::Index i = 0; i < rn.size(); ++i) src(i) = std::polar(eq_p(i), delta(i));
        return rn.W * src;
    }
    return salient_closed_form(rn, delta) * eq_p.cast<Complex>();
}

struct CouplingMatrices {
    Vec delta;
    CMat K;             // K_X + jK_Y
    Mat K_X, K_Y;
    Mat K_R, K_I;       // d- and q-axis terminal voltage maps
    Mat K_d, K_q;       // E'q -> I_d, I_q
    Mat K_v;            // -(I + diag(X_d - X'_d) K_d)
    std::vector<Mat> C; // C_i[j][k] = K_R[i][j] K_R[i][k] + K_I[i][j] K_I[i][k]
};

inline CouplingMatrices coupling_matrices(const ReducedNetwork& rn, const Vec& delta,
                                          const std::vector<Machine>& machines) {
    const auto n = rn.size();
    if (delta.size() != n || static_cast<std::size_t>(n) != machines.size())
        throw PreconditionError("coupling_matrices: dimension mismatch");
    if (!delta.allFinite()) throw PreconditionError("coupling_matrices: non-finite rotor angle");
    CouplingMatrices cm;
    cm.delta = delta;
    if (rn.salient) {
        cm.K = salient_closed_form(rn, delta);
    } else {
        CVec rot(n);
        for (Eigen::Index i = 0; i < n; ++i) rot(i) = std::polar(1.0, delta(i));
        cm.K = rn.W * rot.asDiagonal();
    }
    cm.K_X = cm.K.real();
    cm.K_Y = cm.K.imag();
    CVec unrot(n);
    for (Eigen::Index i = 0; i < n; ++i) unrot(i) = std::polar(1.0, -delta(i));
    const CMat p = unrot.asDiagonal() * cm.K;
    cm.K_I = p.real();
    cm.K_R = -p.imag();
    const Mat I = Mat::Identity(n, n);
    cm.K_d = rn.xd_p.cwiseInverse().asDiagonal() * (I - cm.K_I);
    cm.K_q = rn.xq_p.cwiseInverse().asDiagonal() * cm.K_R;
    Vec dx(n);
    for (Eigen::Index i = 0; i < n; ++i) dx(i) = machines[static_cast<std::size_t>(i)].xd - machines[static_cast<std::size_t>(i)].xd_p;
    cm.K_v = -(I + dx.asDiagonal() * cm.K_d);
    cm.C.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec r = cm.K_R.row(i).transpose();
        const Vec q = cm.K_I.row(i).transpose();
        cm.C[static_cast<std::size_t>(i)] = r * r.transpose() + q * q.transpose();
    }
    return cm;
}

/// The -B o cos(delta_D) approximation of K_d, kept for diagnostics only.
inline Mat kd_approximation(const ReducedNetwork& rn, const Vec& delta) {
    return -rn.B.cwiseProduct(angle_differences(delta).array().cos().matrix());
}

/// h_i(E'q) = sqrt(E'q^T C_i E'q), the terminal voltage magnitudes.
inline Vec terminal_voltage_magnitudes(const CouplingMatrices& cm, const Vec& eq_p) {
    const auto n = static_cast<Eigen::Index>(cm.C.size());
    Vec h(n);
    for (Eigen::Index i = 0; i < n; ++i)
        h(i) = std::sqrt(std::max(0.0, eq_p.dot(cm.C[static_cast<std::size_t>(i)] * eq_p)));
    return h;
}

inline Mat jacobian_h(const CouplingMatrices& cm, const Vec& eq_p) {
    const Vec h = terminal_voltage_magnitudes(cm, eq_p);
    const auto n = h.size();
    Mat J(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(h(k) > 0)) throw NumericalError("jacobian_h: h_" + std::to_string(k + 1) + " is zero");
        J.row(k) = (cm.C[static_cast<std::size_t>(k)] * eq_p).transpose() / h(k);
    }
    return J;
}

/// g(delta) with I_d = g(delta) E'q.
inline Mat d_axis_current_map(const ReducedNetwork& rn, const CouplingMatrices& cm, const Vec& delta) {
    const auto n = rn.size();
    const Vec c = delta.array().cos();
    const Vec s = delta.array().sin();
    return rn.xd_p.cwiseInverse().asDiagonal() *
           (Mat::Identity(n, n) - c.asDiagonal() * cm.K_X - s.asDiagonal() * cm.K_Y);
}

/// d(I_d)/d(delta) at fixed E'q, by implicit differentiation of the network fixed point.
inline Mat d_axis_current_sensitivity(const ReducedNetwork& rn, const Vec& delta, const Vec& eq_p) {
    const auto n = rn.size();
    const auto ops = saliency_operators(rn, delta);
    const CVec V = generator_voltages(rn, delta, eq_p);
    const CMat M = CMat::Identity(n, n) - ops.A * ops.A.conjugate();
    Eigen::PartialPivLU<CMat> lu(M);
    Mat S(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        // d A / d delta_k only touches column k, as does d B / d delta_k.
        CVec a = ops.A.col(k) * (2.0 * kJ) * std::conj(V(k)) + ops.B.col(k) * kJ * eq_p(k);
        const CVec x = lu.solve(a + ops.A * a.conjugate());
        for (Eigen::Index i = 0; i < n; ++i) {
            Complex dv = std::polar(1.0, -delta(i)) * x(i);
            if (i == k) dv += -kJ * std::polar(1.0, -delta(i)) * V(i);
            S(i, k) = -dv.real() / rn.xd_p(i);
        }
    }
    return S;
}

/// Assertion-1 style sign report for K_d, -K_v, C_i and dh/dE'q.
struct SignStructureReport {
    bool kd_ok = true;
    bool kv_ok = true;
    bool c_ok = true;
    bool jac_ok = true;
    double worst = 0.0;       // largest violation magnitude
    std::string worst_entry;  // human-readable location of the worst violation

    bool ok() const { return kd_ok && kv_ok && c_ok && jac_ok; }
};

namespace detail {

inline void check_m_structure(const Mat& m, const std::string& name, double tol, bool& flag, SignStructureReport& r) {
    auto note = [&](double amount, const std::string& where) {
        flag = false;
        if (amount > r.worst) {
            r.worst = amount;
            r.worst_entry = where;
        }
    };
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double off = 0.0;
        if (!(m(i, i) > -tol)) note(-m(i, i), name + "[" + std::to_string(i) + "][" + std::to_string(i) + "] diagonal");
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i == j) continue;
            off += std::abs(m(i, j));
            if (m(i, j) > tol) note(m(i, j), name + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        }
        if (m(i, i) - off < -tol) note(off - m(i, i), name + " row " + std::to_string(i) + " not diagonally dominant");
    }
}

inline void check_nonnegative(const Mat& m, const std::string& name, double tol, bool& flag, SignStructureReport& r) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) < -tol) {
                flag = false;
                if (-m(i, j) > r.worst) {
                    r.worst = -m(i, j);
                    r.worst_entry = name + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
                }
            }
}

}  // namespace detail

inline SignStructureReport check_sign_structure(const CouplingMatrices& cm, const Vec& eq_p, double tol = 1e-9) {
    SignStructureReport r;
    detail::check_m_structure(cm.K_d, "K_d", tol, r.kd_ok, r);
    detail::check_m_structure(-cm.K_v, "-K_v", tol, r.kv_ok, r);
    for (std::size_t i = 0; i < cm.C.size(); ++i)
        detail::check_nonnegative(cm.C[i], "C_" + std::to_string(i + 1), tol, r.c_ok, r);
    detail::check_nonnegative(jacobian_h(cm, eq_p), "dh/dEq", tol, r.jac_ok, r);
    return r;
}

/// True when the off-diagonal entries of B are non-negative, i.e. -B is a
/// loopy Laplacian pattern.
inline bool loopy_laplacian_pattern(const ReducedNetwork& rn, double tol = 1e-9) {
    for (Eigen::Index i = 0; i < rn.B.rows(); ++i)
        for (Eigen::Index j = 0; j < rn.B.cols(); ++j)
            if (i != j && rn.B(i, j) < -tol) return false;
    return true;
}

/// Row-major CSV with a one-line header naming the matrix and the angles.
inline std::string matrix_csv(const std::string& name, const Mat& m, const Vec& delta) {
    std::ostringstream os;
    os << "# " << name << " at delta=[";
    for (Eigen::Index i = 0; i < delta.size(); ++i) os << (i ? "," : "") << format_sig(delta(i), 12);
    os << "]\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_sig(m(i, j), 12);
        os << "\n";
    }
    return os.str();
}

}  // namespace pscert
