#pragma once

// Jacobian sign patterns, mixed-monotone decompositions and interval
// envelopes of the doubled (embedding) system.

#include "pscert/integrator.hpp"

#include <map>

namespace pscert {

using VectorField = std::function<Vec(const Vec&)>;

/// Central differences with per-variable step max(h, h*|x_i|).
inline Mat numeric_jacobian(const VectorField& f, const Vec& x, double h = 1e-6) {
    const auto n = x.size();
    Mat J;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s = std::max(h, h * std::abs(x(j)));
        Vec xp = x, xm = x;
        xp(j) += s;
        xm(j) -= s;
        const Vec col = (f(xp) - f(xm)) / (2.0 * s);
        if (j == 0) J.resize(col.size(), n);
        J.col(j) = col;
    }
    if (!J.allFinite()) throw NumericalError("numeric_jacobian: non-finite entries");
    return J;
}

enum class Sign : signed char { zero = 0, pos = 1, neg = -1, indefinite = 2 };

inline char sign_char(Sign s) {
    switch (s) {
        case Sign::pos: return '+';
        case Sign::neg: return '-';
        case Sign::zero: return '0';
        default: return '?';
    }
}

struct SignPattern {
    Eigen::Index n_rows = 0, n_cols = 0;
    std::vector<Sign> data;  // row-major
    double tol = 1e-9;

    SignPattern() = default;
    SignPattern(Eigen::Index r, Eigen::Index c, double t = 1e-9)
        : n_rows(r), n_cols(c), data(static_cast<std::size_t>(r * c), Sign::zero), tol(t) {}

    Eigen::Index rows() const { return n_rows; }
    Eigen::Index cols() const { return n_cols; }
    Sign operator()(Eigen::Index i, Eigen::Index j) const { return data[static_cast<std::size_t>(i * n_cols + j)]; }
    Sign& operator()(Eigen::Index i, Eigen::Index j) { return data[static_cast<std::size_t>(i * n_cols + j)]; }

    std::vector<std::string> row_strings() const {
        std::vector<std::string> rows;
        for (Eigen::Index i = 0; i < n_rows; ++i) {
            std::string r;
            for (Eigen::Index j = 0; j < n_cols; ++j) r += sign_char((*this)(i, j));
            rows.push_back(r);
        }
        return rows;
    }

    /// Text grid of + - 0 ? separated by spaces.
    std::string text() const {
        std::string out;
        for (const auto& r : row_strings()) {
            for (std::size_t j = 0; j < r.size(); ++j) {
                if (j) out += ' ';
                out += r[j];
            }
            out += '\n';
        }
        return out;
    }

    bool operator==(const SignPattern& o) const { return n_rows == o.n_rows && n_cols == o.n_cols && data == o.data; }
};

inline Sign classify(double v, double tol) {
    if (v > tol) return Sign::pos;
    if (v < -tol) return Sign::neg;
    return Sign::zero;
}

inline SignPattern sign_pattern(const Mat& J, double tol = 1e-9) {
    SignPattern p(J.rows(), J.cols(), tol);
    for (Eigen::Index i = 0; i < J.rows(); ++i)
        for (Eigen::Index j = 0; j < J.cols(); ++j) p(i, j) = classify(J(i, j), tol);
    return p;
}

/// Joins patterns observed at several states; entries seen with both signs
/// become indefinite.
inline SignPattern merge_patterns(const std::vector<SignPattern>& ps) {
    if (ps.empty()) throw PreconditionError("merge_patterns: no patterns");
    SignPattern out = ps.front();
    for (std::size_t k = 1; k < ps.size(); ++k)
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j) {
                const Sign a = out(i, j), b = ps[k](i, j);
                if (a == b || b == Sign::zero) continue;
                if (a == Sign::zero)
                    out(i, j) = b;
                else
                    out(i, j) = Sign::indefinite;
            }
    return out;
}

/// Entries that vanish at every probe state: the reference state and
/// `probes` seeded perturbations of relative size `scale`.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> structural_zeros(const VectorField& f, const Vec& x,
                                                                             std::uint64_t seed = 7, int probes = 4,
                                                                             double scale = 0.05, double tol = 1e-9) {
    Rng rng(seed);
    Mat J = numeric_jacobian(f, x);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> z = (J.array().abs() <= tol);
    for (int p = 0; p < probes; ++p) {
        Vec y = x;
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += scale * std::max(1.0, std::abs(x(i))) * rng.uniform(-1, 1);
        const Mat Jp = numeric_jacobian(f, y);
        z = z.array() && (Jp.array().abs() <= tol);
    }
    return z;
}

struct SignStabilityReport {
    bool stable = true;
    std::size_t samples_checked = 0;
    std::size_t first_violation_sample = 0;
    Eigen::Index row = -1, col = -1;
    Sign expected = Sign::zero, observed = Sign::zero;
    double value = 0.0;
};

/// f_at(k) gives the vector field in force at sample k (its exogenous input
/// and network snapshot); states[k] is the state at which J is evaluated.
/// Entries below max(reference.tol, rel_tol * max|J|) count as zero.
inline SignStabilityReport sign_stability_along_trajectory(
    const std::function<VectorField(std::size_t)>& f_at, const std::vector<Vec>& states, std::size_t stride,
    const SignPattern& reference, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& structural,
    double rel_tol = 0.0) {
    SignStabilityReport r;
    stride = std::max<std::size_t>(1, stride);
    for (std::size_t k = 0; k < states.size(); k += stride) {
        const Mat J = numeric_jacobian(f_at(k), states[k]);
        const double tol = std::max(reference.tol, rel_tol * J.cwiseAbs().maxCoeff());
        ++r.samples_checked;
        for (Eigen::Index i = 0; i < J.rows(); ++i)
            for (Eigen::Index j = 0; j < J.cols(); ++j) {
                if (structural.size() && structural(i, j)) continue;
                const Sign want = reference(i, j);
                const Sign got = classify(J(i, j), tol);
                const bool bad = (want == Sign::zero && got != Sign::zero) ||
                                 (want == Sign::pos && got == Sign::neg) || (want == Sign::neg && got == Sign::pos);
                if (bad) {
                    r.stable = false;
                    r.first_violation_sample = k;
                    r.row = i;
                    r.col = j;
                    r.expected = want;
                    r.observed = got;
                    r.value = J(i, j);
                    return r;
                }
            }
    }
    return r;
}

/// F(x, y): row i reads coordinate j from x when J_ij >= 0 or i == j, and
/// from y when J_ij < 0. Rows sharing a routing share one evaluation of f.
class MixedMonotoneDecomposition {
public:
    MixedMonotoneDecomposition(VectorField f, SignPattern pattern) : f_(std::move(f)), pattern_(std::move(pattern)) {
        const auto n = pattern_.rows();
        if (pattern_.cols() != n) throw PreconditionError("build_embedding: pattern must be square");
        signature_ = Vec::Ones(n);
        std::map<std::vector<bool>, std::size_t> index;
        row_group_.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            std::vector<bool> from_y(static_cast<std::size_t>(n), false);
            for (Eigen::Index j = 0; j < n; ++j) {
                const Sign s = pattern_(i, j);
                if (i != j && s == Sign::indefinite)
                    throw PreconditionError("build_embedding: indefinite entry (" + std::to_string(i) + ", " +
                                            std::to_string(j) + ")");
                from_y[static_cast<std::size_t>(j)] = (i != j && s == Sign::neg);
            }
            auto [it, fresh] = index.emplace(from_y, routes_.size());
            if (fresh) routes_.push_back(from_y);
            row_group_[static_cast<std::size_t>(i)] = it->second;
        }
    }

    Vec operator()(const Vec& x, const Vec& y) const {
        const auto n = x.size();
        std::vector<Vec> vals(routes_.size());
        for (std::size_t g = 0; g < routes_.size(); ++g) {
            Vec z = x;
            for (Eigen::Index j = 0; j < n; ++j)
                if (routes_[g][static_cast<std::size_t>(j)]) z(j) = y(j);
            vals[g] = f_(z);
        }
        Vec out(n);
        for (Eigen::Index i = 0; i < n; ++i) out(i) = vals[row_group_[static_cast<std::size_t>(i)]](i);
        return out;
    }

    const VectorField& f() const { return f_; }
    const SignPattern& pattern() const { return pattern_; }
    /// Order-cone signature (diagonal of P); identity by default.
    const Vec& signature() const { return signature_; }
    std::size_t route_count() const { return routes_.size(); }

private:
    VectorField f_;
    SignPattern pattern_;
    Vec signature_;
    std::vector<std::vector<bool>> routes_;
    std::vector<std::size_t> row_group_;
};

inline MixedMonotoneDecomposition build_embedding(VectorField f, const SignPattern& pattern) {
    return MixedMonotoneDecomposition(std::move(f), pattern);
}

struct BoxCheck {
    bool invariant = false;
    Vec upper;  // F(x+, x-), must be <= 0
    Vec lower;  // F(x-, x+), must be >= 0
};

inline BoxCheck check_invariant_box(const MixedMonotoneDecomposition& F, const Vec& lo, const Vec& hi) {
    if (lo.size() != hi.size() || (lo.array() > hi.array()).any())
        throw PreconditionError("check_invariant_box: require x- <= x+");
    BoxCheck b;
    b.upper = F(hi, lo);
    b.lower = F(lo, hi);
    b.invariant = (b.upper.array() <= 0.0).all() && (b.lower.array() >= 0.0).all();
    return b;
}

struct EnvelopeTrajectory {
    std::vector<double> t;
    std::vector<Vec> hi, lo;

    std::size_t size() const { return t.size(); }
};

/// Integrates x+' = F_s(x+, x-), x-' = F_s(x-, x+) where s is the active
/// segment; `F_at` supplies the decomposition of each segment.
inline EnvelopeTrajectory simulate_envelope(const std::function<const MixedMonotoneDecomposition&(std::size_t)>& F_at,
                                            const Vec& lo0, const Vec& hi0, const SimulationOptions& opt,
                                            double order_tol = 1e-8) {
    if (lo0.size() != hi0.size() || (lo0.array() > hi0.array()).any())
        throw PreconditionError("simulate_envelope: require x-(0) <= x+(0)");
    const auto n = lo0.size();
    Vec z(2 * n);
    z << hi0, lo0;
    auto tr = simulate(
        [&](std::size_t seg, double, const Vec& s) {
            const auto& F = F_at(seg);
            Vec d(2 * n);
            d.head(n) = F(s.head(n), s.tail(n));
            d.tail(n) = F(s.tail(n), s.head(n));
            return d;
        },
        z, opt);
    EnvelopeTrajectory env;
    env.t = tr.t;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        env.hi.push_back(tr.x[k].head(n));
        env.lo.push_back(tr.x[k].tail(n));
        if ((env.lo.back() - env.hi.back()).maxCoeff() > order_tol)
            throw NumericalError("simulate_envelope: order x- <= x+ violated at t = " + format_sig(tr.t[k], 6));
    }
    return env;
}

inline EnvelopeTrajectory simulate_envelope(const MixedMonotoneDecomposition& F, const Vec& lo0, const Vec& hi0,
                                            const SimulationOptions& opt, double order_tol = 1e-8) {
    return simulate_envelope([&](std::size_t) -> const MixedMonotoneDecomposition& { return F; }, lo0, hi0, opt,
                             order_tol);
}

/// Per-sample max_i (x+_i - x-_i).
inline std::vector<double> envelope_gap_metric(const EnvelopeTrajectory& env) {
    std::vector<double> g;
    g.reserve(env.size());
    for (std::size_t k = 0; k < env.size(); ++k) g.push_back((env.hi[k] - env.lo[k]).maxCoeff());
    return g;
}

inline std::string envelope_csv(const EnvelopeTrajectory& env, const std::vector<std::string>& names, int digits = 10) {
    std::ostringstream os;
    os << "t";
    for (const auto& s : names) os << "," << s << "_hi";
    for (const auto& s : names) os << "," << s << "_lo";
    os << "\n";
    for (std::size_t k = 0; k < env.size(); ++k) {
        os << format_sig(env.t[k], digits);
        for (Eigen::Index i = 0; i < env.hi[k].size(); ++i) os << "," << format_sig(env.hi[k](i), digits);
        for (Eigen::Index i = 0; i < env.lo[k].size(); ++i) os << "," << format_sig(env.lo[k](i), digits);
        os << "\n";
    }
    return os.str();
}

}  // namespace pscert
