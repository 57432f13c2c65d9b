#pragma once

// End-to-end certification: LISS estimates of the rotor and voltage
// subsystems, the small-gain verdict, a soundness grid checked by full-model
// simulation, and the exciter-gain limit read off a gamma_2(K_A) fit.

#include "pscert/polyfit.hpp"
#include "pscert/small_gain.hpp"
#include "pscert/subsystems.hpp"
#include "pscert/voltage_analysis.hpp"

namespace pscert {

using nlohmann::json;

/// Finite numbers rounded to 12 significant digits; non-finite ones as null.
inline json jnum(double v) { return std::isfinite(v) ? json(round_sig(v, 12)) : json(nullptr); }

inline json jvec(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(jnum(v(i)));
    return a;
}

inline json jmat(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(jvec(m.row(i).transpose()));
    return a;
}

inline json validation_json(const BoundValidation& b) {
    return {{"runs", b.runs},
            {"samples", b.samples},
            {"violations", b.violations},
            {"unstable_runs", b.unstable_runs},
            {"holding_fraction", jnum(b.holding_fraction())},
            {"worst_excess", jnum(b.worst_excess)}};
}

inline json iss_json(const ISSParams& p) {
    json gain = json::array();
    for (const auto& s : p.gain.curve) gain.push_back({{"u_norm", jnum(s.u_norm)}, {"gamma", jnum(s.gamma)}});
    json decay = json::array();
    for (const auto& s : p.decay.table) {
        if (!s.usable) continue;
        decay.push_back({{"xi_norm", jnum(s.xi_norm)},
                         {"x_max", jnum(s.x_max)},
                         {"t_max", jnum(s.t_max)},
                         {"x_end", jnum(s.x_end)},
                         {"t_end", jnum(s.t_end)},
                         {"lambda", jnum(s.lambda)},
                         {"beta", jnum(s.beta)}});
    }
    return {{"subsystem", p.tag},
            {"beta", jnum(p.beta)},
            {"lambda", jnum(p.lambda)},
            {"gamma", jnum(p.gamma)},
            {"v", jnum(p.v)},
            {"w", jnum(p.w)},
            {"v_is_search_cap", p.v_lower_bound},
            {"w_is_search_cap", p.w_lower_bound},
            {"gain_excluded_runs", p.gain.excluded},
            {"gain_curve", gain},
            {"decay_table", decay},
            {"heldout", validation_json(p.heldout)},
            {"heldout_zero_input", validation_json(p.heldout_free)},
            {"heldout_zero_deviation", validation_json(p.heldout_forced)},
            {"manifest", p.manifest}};
}

inline SubsystemSummary summary_of(const ISSParams& p) { return {p.beta, p.gamma, p.v, p.w}; }

inline std::string gain_curve_csv(const ISSParams& p) {
    std::string s = "u_norm,gamma\n";
    for (const auto& g : p.gain.curve) s += format_sig(g.u_norm, 12) + "," + format_sig(g.gamma, 12) + "\n";
    return s;
}

/// Largest xi_2 the small-gain test certifies at the given xi_1 (0 if none).
inline double certified_xi2_bound(const SubsystemSummary& p1, const SubsystemSummary& p2, double xi1) {
    const double det = 1.0 - p1.gamma * p2.gamma;
    if (!(det > 0) || xi1 > p1.v) return 0.0;
    const double b1 = (p1.w * det - p2.gamma * p1.beta * xi1) / p2.beta;
    const double b2 = (p2.w * det - p1.beta * xi1) / (p1.gamma * p2.beta);
    return std::max(0.0, std::min({b1, b2, p2.v}));
}

// ---------------------------------------------------------------------------
// Full-model stability probe

struct ProbeOptions {
    double step = 0.01;
    double horizon = 60.0;
    double tail = 5.0;              // trailing window compared against the peak
    double decay_ratio = 0.75;      // tail max must fall below this share of the peak
    std::size_t rotor_directions = 2;
    std::size_t voltage_directions = 2;
    unsigned threads = 0;
};

/// Initial full-model state with rotor deviation `r` (angles, speeds) and
/// voltage deviation `z` (E'q, E_fd) added to the equilibrium.
inline Vec perturbed_state(const PowerContext& c, const Vec& r, const Vec& z) {
    const auto n = c.n();
    Vec x = full_state(c.eq);
    x.head(2 * n) += r;
    x.tail(2 * n) += z;
    return x;
}

/// Stable: no pole slip (COI angle deviation above pi), E'q stays positive,
/// and the deviation over the trailing window has fallen well below its peak.
inline bool full_model_stable(const PowerContext& c, const Vec& x0, const ProbeOptions& o) {
    const auto n = c.n();
    const Vec coi_e = c.coi(c.eq.delta);
    const Vec ze = voltage_state(c.eq);
    auto deviation = [&](const Vec& x) {
        Vec d(4 * n);
        d << c.coi(x.head(n)) - coi_e, c.coi(x.segment(n, n)), x.tail(2 * n) - ze;
        return d.norm();
    };
    bool bad = false;
    double peak = deviation(x0), tail_max = 0.0;
    SimulationOptions opt;
    opt.step = o.step;
    opt.horizon = o.horizon;
    opt.record_stride = std::numeric_limits<std::size_t>::max();
    opt.throw_on_blowup = false;
    opt.observer = [&](std::size_t, double t, const Vec& x) {
        if (!x.allFinite() || inf_norm(c.coi(x.head(n)) - coi_e) > kPi || (x.segment(2 * n, n).array() <= 0.0).any()) {
            bad = true;
            return false;
        }
        const double d = deviation(x);
        peak = std::max(peak, d);
        if (t >= o.horizon - o.tail - 1e-9) tail_max = std::max(tail_max, d);
        return true;
    };
    const auto tr = simulate([&](double, const Vec& x) { return full_rhs(c.model, c.rn, x); }, x0, opt);
    if (bad || tr.stopped_early) return false;
    return tail_max <= std::max(1e-9, o.decay_ratio * peak);
}

/// Probe directions: the leading rotor and voltage search directions.
struct ProbeDirections {
    std::vector<Vec> rotor, voltage;

    static ProbeDirections from(const PowerContext& c, const ProbeOptions& o) {
        ProbeDirections d;
        const auto rs = rotor_subsystem(c);
        const auto vs = voltage_subsystem(c);
        for (std::size_t k = 0; k < std::min(o.rotor_directions, rs.state_directions.size()); ++k)
            d.rotor.push_back(rs.state_directions[k]);
        for (std::size_t k = 0; k < std::min(o.voltage_directions, vs.state_directions.size()); ++k)
            d.voltage.push_back(vs.state_directions[k]);
        return d;
    }
};

/// Stable from every direction pair at deviation norms (xi1, xi2).
inline bool stable_at(const PowerContext& c, const ProbeDirections& dirs, double xi1, double xi2, const ProbeOptions& o) {
    for (const auto& r : dirs.rotor)
        for (const auto& z : dirs.voltage)
            if (!full_model_stable(c, perturbed_state(c, xi1 * r, xi2 * z), o)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Certification

struct CertifyOptions {
    std::optional<double> xi1, xi2;
    std::optional<double> ka;          // uniform exciter gain override
    double default_xi_fraction = 0.2;  // xi = fraction * (v1, v2) when not given
    IssConfig iss;
};

struct CertificationReport {
    std::string system;
    std::optional<double> ka;
    bool estimated = false;
    std::string failure;  // why estimation stopped, if it did
    ISSParams rotor, voltage;
    double xi1 = 0.0, xi2 = 0.0;
    bool xi_default = true;
    SmallGainVerdict verdict;
    double xi2_bound = 0.0;  // certified_xi2_bound at xi1

    bool certified() const { return estimated && verdict.certified(); }

    json to_json() const {
        json j = {{"system", system},
                  {"ka_override", ka ? jnum(*ka) : json(nullptr)},
                  {"seed", rotor.manifest.value("seed", json(nullptr))},
                  {"certified", certified()}};
        if (!estimated) {
            j["verdict"] = "not-certified";
            j["reason"] = failure;
            return j;
        }
        j["verdict"] = certified() ? "asymptotically-stable" : "not-certified";
        j["outcome"] = SmallGainVerdict::name(verdict.outcome);
        j["xi"] = {jnum(xi1), jnum(xi2)};
        j["xi_source"] = xi_default ? "default" : "user";
        j["rho"] = jnum(verdict.rho);
        j["small_gain"] = verdict.small_gain;
        j["G_L"] = jmat(verdict.G_L);
        j["boundary"] = verdict.boundary ? jvec(*verdict.boundary) : json(nullptr);
        j["boundary_limit"] = {jnum(rotor.w), jnum(voltage.w)};
        j["boundary_ok"] = verdict.boundary_ok;
        j["in_region"] = verdict.in_region;
        j["certified_xi2_bound_at_xi1"] = jnum(xi2_bound);
        j["rotor"] = iss_json(rotor);
        j["voltage"] = iss_json(voltage);
        return j;
    }
};

inline CertificationReport certify(const PowerSystem& sys_in, const CertifyOptions& o) {
    CertificationReport r;
    r.ka = o.ka;
    const PowerSystem sys = o.ka ? with_exciter_gain(sys_in, *o.ka) : sys_in;
    r.system = sys.name;
    const auto c = PowerContext::from(sys);
    try {
        const auto rs = rotor_subsystem(c);
        const auto vs = voltage_subsystem(c);
        r.rotor = estimate_liss(rs, o.iss, rotor_random_state(c), rotor_random_input(c));
        r.voltage = estimate_liss(vs, o.iss, voltage_random_state(c), voltage_random_input(c));
    } catch (const PreconditionError& e) {
        r.failure = e.what();
        return r;
    }
    r.estimated = true;
    r.xi_default = !(o.xi1 || o.xi2);
    r.xi1 = o.xi1.value_or(o.default_xi_fraction * r.rotor.v);
    r.xi2 = o.xi2.value_or(o.default_xi_fraction * r.voltage.v);
    if (r.xi1 < 0 || r.xi2 < 0) throw PreconditionError("certify: xi norms must be non-negative");
    r.verdict = small_gain_check(summary_of(r.rotor), summary_of(r.voltage), r.xi1, r.xi2);
    r.xi2_bound = certified_xi2_bound(summary_of(r.rotor), summary_of(r.voltage), r.xi1);
    return r;
}

// ---------------------------------------------------------------------------
// Soundness grid

struct SoundnessPoint {
    double xi1 = 0.0, xi2 = 0.0;
    bool certified = false;
    bool simulated_stable = false;
};

struct GapRow {
    double xi1 = 0.0;
    double certified_xi2 = 0.0;
    double critical_xi2 = 0.0;  // simulated, bisection
    bool critical_at_cap = false;
    double gap() const { return critical_xi2 - certified_xi2; }
};

struct SoundnessReport {
    std::vector<SoundnessPoint> grid;
    std::vector<GapRow> gaps;
    bool sound = true;         // every certified point simulated stable
    std::size_t certified_points = 0;
    double xi2_extent = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();

    json to_json() const {
        json g = json::array();
        for (const auto& p : grid)
            g.push_back({{"xi1", jnum(p.xi1)},
                         {"xi2", jnum(p.xi2)},
                         {"certified", p.certified},
                         {"simulated_stable", p.simulated_stable}});
        json rows = json::array();
        for (const auto& row : gaps)
            rows.push_back({{"xi1", jnum(row.xi1)},
                            {"certified_xi2", jnum(row.certified_xi2)},
                            {"critical_xi2", jnum(row.critical_xi2)},
                            {"critical_at_search_cap", row.critical_at_cap},
                            {"gap", jnum(row.gap())}});
        return {{"grid", g},
                {"sound", sound},
                {"certified_points", certified_points},
                {"xi2_extent", jnum(xi2_extent)},
                {"conservatism", rows},
                {"min_gap", jnum(min_gap)}};
    }
};

struct SoundnessOptions {
    std::vector<double> fractions{0.2, 0.4, 0.6, 0.8, 1.0};  // of (v1, xi2 extent)
    double xi2_extent_factor = 2.0;    // xi2 extent: this multiple of the certified xi2 at xi1 = 0, capped at v2
    double critical_cap_factor = 3.0;  // xi2 search up to this multiple of v2
    double critical_tol = 1e-2;
    ProbeOptions probe;
};

/// Grid of (xi1, xi2) = (f_a v1, f_b X2) with X2 spanning past the
/// certified region: certificate against simulation, plus the simulated
/// critical xi2 at each grid xi1 compared with the certified bound there.
inline SoundnessReport soundness_grid(const PowerContext& c, const ISSParams& p1, const ISSParams& p2,
                                      const SoundnessOptions& o) {
    SoundnessReport r;
    const auto dirs = ProbeDirections::from(c, o.probe);
    const auto s1 = summary_of(p1), s2 = summary_of(p2);
    const double b0 = certified_xi2_bound(s1, s2, 0.0);
    r.xi2_extent = b0 > 0 ? std::min(p2.v, o.xi2_extent_factor * b0) : p2.v;
    const auto nf = o.fractions.size();
    r.grid.resize(nf * nf);
    r.gaps.resize(nf);
    parallel_for(
        nf * nf + nf,
        [&](std::size_t k) {
            if (k < nf * nf) {
                auto& pt = r.grid[k];
                pt.xi1 = o.fractions[k / nf] * p1.v;
                pt.xi2 = o.fractions[k % nf] * r.xi2_extent;
                pt.certified = small_gain_check(s1, s2, pt.xi1, pt.xi2).certified();
                pt.simulated_stable = stable_at(c, dirs, pt.xi1, pt.xi2, o.probe);
                return;
            }
            auto& row = r.gaps[k - nf * nf];
            row.xi1 = o.fractions[k - nf * nf] * p1.v;
            row.certified_xi2 = certified_xi2_bound(s1, s2, row.xi1);
            row.critical_xi2 = detail::critical_scale(
                [&](double xi2) { return stable_at(c, dirs, row.xi1, xi2, o.probe); },
                o.critical_cap_factor * p2.v, o.critical_tol, row.critical_at_cap);
        },
        o.probe.threads);
    for (const auto& pt : r.grid) {
        if (!pt.certified) continue;
        ++r.certified_points;
        r.sound = r.sound && pt.simulated_stable;
    }
    for (const auto& row : r.gaps) r.min_gap = std::min(r.min_gap, row.gap());
    return r;
}

// ---------------------------------------------------------------------------
// Exciter-gain limit

struct KaLimitOptions {
    std::vector<double> grid;       // K_A samples for the gamma_2 sweep
    double xi1 = 0.0, xi2 = 0.0;
    double true_lo = 0.0, true_hi = 0.0;  // bracket for the simulated limit
    double true_tol = 0.05;
    ProbeOptions probe;
    IssConfig iss;
};

struct KaLimitReport {
    std::vector<double> ka, gamma2;
    GainFit fit;
    double gamma1 = 0.0;
    double gamma2_target = 0.0;
    std::optional<double> ka_estimate;  // empty when the target lies outside the fitted range
    std::optional<double> ka_true;      // empty when unstable at the lower bracket end
    bool true_at_cap = false;

    bool conservative() const { return ka_estimate && ka_true && *ka_estimate <= *ka_true; }

    json to_json() const {
        json s = json::array();
        for (std::size_t k = 0; k < ka.size(); ++k) s.push_back({{"ka", jnum(ka[k])}, {"gamma2", jnum(gamma2[k])}});
        return {{"sweep", s},
                {"fit_coefficients", jvec(fit.poly.coeffs)},
                {"fit_rms_residual", jnum(fit.rms_residual)},
                {"fit_increasing", fit.increasing},
                {"gamma1", jnum(gamma1)},
                {"gamma2_target", jnum(gamma2_target)},
                {"ka_estimate", ka_estimate ? jnum(*ka_estimate) : json(nullptr)},
                {"ka_true", ka_true ? jnum(*ka_true) : json(nullptr)},
                {"ka_true_at_bracket_end", true_at_cap},
                {"conservative", conservative()}};
    }

    std::string sweep_csv() const {
        std::string out = "K_A,gamma2\n";
        for (std::size_t k = 0; k < ka.size(); ++k) out += format_sig(ka[k], 12) + "," + format_sig(gamma2[k], 12) + "\n";
        return out;
    }
};

/// Largest gamma_2 the small-gain test accepts at (xi1, xi2) with the other
/// figures held at their base values.
inline double gamma2_target(const ISSParams& p1, const ISSParams& p2, double xi1, double xi2) {
    const double from_w1 = (p1.w - p2.beta * xi2) / (p1.beta * xi1 + p1.gamma * p1.w);
    const double from_w2 = (1.0 - (p1.beta * xi1 + p1.gamma * p2.beta * xi2) / p2.w) / p1.gamma;
    return std::min({from_w1, from_w2, 1.0 / p1.gamma});
}

/// gamma_2 over a K_A sweep (same input set as the base estimate), a cubic
/// fit, the K_A where the fit reaches the small-gain target, and the K_A
/// limit found by full-model simulation from the same (xi1, xi2).
inline KaLimitReport ka_limit(const PowerSystem& sys, const ISSParams& rotor, const ISSParams& voltage,
                              const KaLimitOptions& o) {
    KaLimitReport r;
    r.gamma1 = rotor.gamma;
    const auto base = PowerContext::from(sys);
    const auto base_vs = voltage_subsystem(base);
    std::vector<Vec> inputs;
    for (const auto& d : base_vs.input_directions)
        for (double f : o.iss.gain_fractions) inputs.push_back(f * voltage.w * d);
    for (double ka : o.grid) {
        const auto c = PowerContext::from(with_exciter_gain(sys, ka));
        const auto vs = voltage_subsystem(c);
        r.ka.push_back(ka);
        r.gamma2.push_back(estimate_input_gain(vs, inputs, o.iss).gamma);
    }
    r.fit = fit_gain_curve(r.ka, r.gamma2, 3);
    r.gamma2_target = gamma2_target(rotor, voltage, o.xi1, o.xi2);
    if (r.fit.increasing) r.ka_estimate = r.fit.inverse(r.gamma2_target);

    auto stable = [&](double ka) {
        const auto c = PowerContext::from(with_exciter_gain(sys, ka));
        return stable_at(c, ProbeDirections::from(c, o.probe), o.xi1, o.xi2, o.probe);
    };
    if (o.true_hi > o.true_lo && stable(o.true_lo)) {
        if (stable(o.true_hi)) {
            r.ka_true = o.true_hi;
            r.true_at_cap = true;
        } else {
            double lo = o.true_lo, hi = o.true_hi;
            while (hi - lo > o.true_tol) {
                const double mid = 0.5 * (lo + hi);
                (stable(mid) ? lo : hi) = mid;
            }
            r.ka_true = lo;
        }
    }
    return r;
}

}  // namespace pscert
