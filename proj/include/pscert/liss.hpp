#pragma once

// Simulation-driven estimation of local ISS parameters (beta, lambda, gamma,
// v, w) for a subsystem driven by a constant input.

#include "pscert/integrator.hpp"

#include <deque>

#include <nlohmann/json.hpp>

namespace pscert {

/// A subsystem seen through deviation coordinates. `initial` maps a deviation
/// to the internal state, `measure` maps back; `field(u)` is the internal
/// vector field under the constant input u.
struct IssSubsystem {
    std::string tag;
    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    std::function<Vec(const Vec&)> initial;
    std::function<Rhs(const Vec&)> field;
    std::function<Vec(const Vec&)> measure;
    std::function<bool(const Vec&)> unstable;
    std::vector<Vec> state_directions;  // unit 2-norm
    std::vector<Vec> input_directions;  // unit inf-norm
    double v_cap = 5.0;                 // search limits for the constraints
    double w_cap = kPi;
    double settle_horizon = 400.0;
};

struct IssConfig {
    double step = 0.01;
    double constraint_horizon = 60.0;
    double settle_window = 1.0;
    double settle_tol = 1e-4;
    double decay_settle_tol = 1e-7;  // decay runs follow the tail further
    double peak_window = 2.0;
    double bisect_tol = 1e-3;
    double joint_tol = 1e-2;
    std::vector<double> gain_fractions{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> decay_fractions{0.25, 0.5, 0.9};
    int decay_random_directions = 16;
    int heldout_runs = 20;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct IssRun {
    std::vector<double> t;
    std::vector<double> norm;  // ||x(t)||_2 of the measured deviation
    Vec x_end;                 // trailing-window mean of the measured deviation
    bool unstable = false;
    bool settled = false;
    double settle_time = 0.0;
};

/// Simulates from deviation xi under constant input u. Stops at instability,
/// at settling (if `stop_on_settle`) or at the horizon.
inline IssRun run_subsystem(const IssSubsystem& sub, const Vec& xi, const Vec& u, const IssConfig& cfg,
                            double horizon, bool stop_on_settle = true) {
    IssRun run;
    const Vec z0 = sub.initial(xi);
    const Rhs f = sub.field(u);
    const auto window = static_cast<std::size_t>(std::llround(cfg.settle_window / cfg.step));
    std::deque<Vec> recent;
    const Vec m0 = sub.measure(z0);
    run.t.push_back(0.0);
    run.norm.push_back(m0.norm());
    recent.push_back(m0);

    SimulationOptions opt;
    opt.step = cfg.step;
    opt.horizon = horizon;
    opt.record_stride = std::numeric_limits<std::size_t>::max();
    opt.throw_on_blowup = false;
    opt.observer = [&](std::size_t k, double t, const Vec& z) {
        if (sub.unstable(z)) {
            run.unstable = true;
            return false;
        }
        const Vec m = sub.measure(z);
        run.t.push_back(t);
        run.norm.push_back(m.norm());
        recent.push_back(m);
        if (recent.size() > window + 1) recent.pop_front();
        if (recent.size() == window + 1 && k % 10 == 0) {
            Vec lo = recent.front(), hi = recent.front(), mean = Vec::Zero(m.size());
            for (const auto& r : recent) {
                lo = lo.cwiseMin(r);
                hi = hi.cwiseMax(r);
                mean += r;
            }
            mean /= static_cast<double>(recent.size());
            if ((hi - lo).maxCoeff() < cfg.settle_tol * std::max(1.0, inf_norm(mean))) {
                run.settled = true;
                run.settle_time = t;
                run.x_end = mean;
                if (stop_on_settle) return false;
            }
        }
        return true;
    };
    const auto tr = simulate(f, z0, opt);
    if (tr.stopped_early && !run.settled && !run.unstable) run.unstable = true;  // blow-up
    if (!run.settled) {
        Vec mean = Vec::Zero(m0.size());
        for (const auto& r : recent) mean += r;
        run.x_end = mean / static_cast<double>(recent.size());
        run.settle_time = run.t.back();
    }
    return run;
}

struct ConstraintEstimate {
    double v = 0.0, w = 0.0;
    bool v_lower_bound = false, w_lower_bound = false;
    std::vector<double> v_per_direction, w_per_direction;
    double joint_scale = 1.0;  // applied to both after the corner check
};

namespace detail {

/// Largest stable scale in [0, cap] along a direction, by bisection.
inline double critical_scale(const std::function<bool(double)>& stable, double cap, double tol, bool& at_cap) {
    at_cap = false;
    if (stable(cap)) {
        at_cap = true;
        return cap;
    }
    double lo = 0.0, hi = cap;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace detail

/// Zero-input runs must decay; otherwise no local ISS estimate exists.
inline void require_asymptotic_stability(const IssSubsystem& sub, const IssConfig& cfg) {
    const double eps = 1e-3;
    const Vec xi = eps * sub.state_directions.front();
    const auto run = run_subsystem(sub, xi, Vec::Zero(sub.input_dim), cfg, cfg.constraint_horizon, false);
    const double tail = *std::max_element(run.norm.end() - static_cast<std::ptrdiff_t>(std::min<std::size_t>(run.norm.size(), 100)), run.norm.end());
    if (run.unstable || !(tail < 0.5 * eps))
        throw PreconditionError(sub.tag + " subsystem: zero-input response does not decay; the subsystem is not "
                                "locally asymptotically stable, so LISS parameters cannot be estimated");
}

/// v: critical initial-deviation norm (zero input); w: critical input
/// magnitude (zero initial deviation). Minimum over the search directions.
inline ConstraintEstimate estimate_constraints(const IssSubsystem& sub, const IssConfig& cfg) {
    ConstraintEstimate c;
    const auto ns = sub.state_directions.size();
    const auto ni = sub.input_directions.size();
    c.v_per_direction.resize(ns);
    c.w_per_direction.resize(ni);
    std::vector<char> v_cap(ns), w_cap(ni);
    const Vec u0 = Vec::Zero(sub.input_dim);
    const Vec x0 = Vec::Zero(sub.state_dim);
    parallel_for(
        ns + ni,
        [&](std::size_t k) {
            bool at_cap = false;
            if (k < ns) {
                const Vec& d = sub.state_directions[k];
                c.v_per_direction[k] = detail::critical_scale(
                    [&](double s) { return !run_subsystem(sub, s * d, u0, cfg, cfg.constraint_horizon).unstable; },
                    sub.v_cap, cfg.bisect_tol, at_cap);
                v_cap[k] = at_cap;
            } else {
                const Vec& d = sub.input_directions[k - ns];
                c.w_per_direction[k - ns] = detail::critical_scale(
                    [&](double s) { return !run_subsystem(sub, x0, s * d, cfg, cfg.constraint_horizon).unstable; },
                    sub.w_cap, cfg.bisect_tol, at_cap);
                w_cap[k - ns] = at_cap;
            }
        },
        cfg.threads);
    const auto iv = std::min_element(c.v_per_direction.begin(), c.v_per_direction.end()) - c.v_per_direction.begin();
    const auto iw = std::min_element(c.w_per_direction.begin(), c.w_per_direction.end()) - c.w_per_direction.begin();
    c.v = c.v_per_direction[static_cast<std::size_t>(iv)];
    c.w = c.w_per_direction[static_cast<std::size_t>(iw)];
    c.v_lower_bound = v_cap[static_cast<std::size_t>(iv)];
    c.w_lower_bound = w_cap[static_cast<std::size_t>(iw)];

    // v and w come from separate searches; shrink both until every corner
    // (deviation s v d_x together with input s w d_u) is stable as well.
    const std::size_t corners = ns * ni;
    auto corners_stable = [&](double s) {
        std::vector<char> ok(corners, 1);
        parallel_for(
            corners,
            [&](std::size_t k) {
                const Vec xi = s * c.v * sub.state_directions[k / ni];
                const Vec u = s * c.w * sub.input_directions[k % ni];
                ok[k] = !run_subsystem(sub, xi, u, cfg, cfg.constraint_horizon).unstable;
            },
            cfg.threads);
        return std::all_of(ok.begin(), ok.end(), [](char b) { return b != 0; });
    };
    if (!corners_stable(1.0)) {
        double lo = 0.0, hi = 1.0;
        while (hi - lo > cfg.joint_tol) {
            const double mid = 0.5 * (lo + hi);
            (corners_stable(mid) ? lo : hi) = mid;
        }
        c.joint_scale = lo;
        c.v *= lo;
        c.w *= lo;
        c.v_lower_bound = c.w_lower_bound = false;
    }
    return c;
}

struct GainSample {
    double u_norm = 0.0;
    double gamma = 0.0;
    bool settled = false;
};

struct GainEstimate {
    double gamma = 0.0;
    std::vector<GainSample> curve;  // settled samples, by input norm
    std::size_t excluded = 0;       // runs that did not settle
};

/// gamma = max over samples of ||x_e||_2 / ||u||_inf with x_e the settled deviation.
inline GainEstimate estimate_input_gain(const IssSubsystem& sub, const std::vector<Vec>& inputs, const IssConfig& cfg) {
    std::vector<GainSample> samples(inputs.size());
    parallel_for(
        inputs.size(),
        [&](std::size_t k) {
            const double un = inf_norm(inputs[k]);
            samples[k].u_norm = un;
            if (un == 0.0) return;
            const auto run = run_subsystem(sub, Vec::Zero(sub.state_dim), inputs[k], cfg, sub.settle_horizon);
            samples[k].settled = run.settled && !run.unstable;
            if (samples[k].settled) samples[k].gamma = run.x_end.norm() / un;
        },
        cfg.threads);
    GainEstimate g;
    for (const auto& s : samples) {
        if (s.u_norm == 0.0) continue;
        if (!s.settled) {
            ++g.excluded;
            continue;
        }
        g.curve.push_back(s);
        g.gamma = std::max(g.gamma, s.gamma);
    }
    std::stable_sort(g.curve.begin(), g.curve.end(),
                     [](const GainSample& a, const GainSample& b) { return a.u_norm < b.u_norm; });
    return g;
}

struct DecaySample {
    double xi_norm = 0.0, u_norm = 0.0;
    double x_max = 0.0, t_max = 0.0, x_end = 0.0, t_end = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    bool usable = false;
};

/// Decay figures of one norm series. x_end is the last peak inside the
/// trailing `peak_window` before the end of the series.
inline DecaySample decay_from_series(const std::vector<double>& t, const std::vector<double>& norm, double xi_norm,
                                     double gamma_u, double peak_window) {
    DecaySample s;
    s.xi_norm = xi_norm;
    if (t.size() < 2 || !(xi_norm > 0)) return s;
    const auto imax = static_cast<std::size_t>(std::max_element(norm.begin(), norm.end()) - norm.begin());
    s.x_max = norm[imax];
    s.t_max = t[imax];
    const double t_last = t.back();
    std::size_t iend = t.size() - 1;
    for (std::size_t k = t.size(); k-- > 0 && t[k] >= t_last - peak_window - 1e-12;)
        if (norm[k] > norm[iend]) iend = k;
    s.x_end = norm[iend];
    s.t_end = t[iend];
    const double num = s.x_max - gamma_u;
    const double den = s.x_end - gamma_u;
    if (!(den > 0) || !(num > den) || !(s.t_end > s.t_max)) return s;
    s.lambda = std::log(num / den) / (s.t_end - s.t_max);
    s.beta = num * std::exp(s.lambda * s.t_max) / xi_norm;
    s.usable = true;
    return s;
}

struct DecayEstimate {
    double lambda = 0.0, beta = 0.0;
    std::vector<DecaySample> table;
};

/// Zero-input runs from each initial deviation; min lambda, then beta as the
/// smallest constant keeping every run under beta ||xi|| e^{-lambda t} (never
/// below the per-run peak value).
inline DecayEstimate estimate_decay(const IssSubsystem& sub, const std::vector<Vec>& initial, double gamma,
                                    const IssConfig& cfg) {
    (void)gamma;  // zero-input runs: the gain term vanishes
    std::vector<DecaySample> table(initial.size());
    std::vector<IssRun> runs(initial.size());
    IssConfig dcfg = cfg;
    dcfg.settle_tol = cfg.decay_settle_tol;
    parallel_for(
        initial.size(),
        [&](std::size_t k) {
            runs[k] = run_subsystem(sub, initial[k], Vec::Zero(sub.input_dim), dcfg, sub.settle_horizon);
            if (runs[k].unstable) return;
            table[k] = decay_from_series(runs[k].t, runs[k].norm, initial[k].norm(), 0.0, cfg.peak_window);
        },
        cfg.threads);
    DecayEstimate d;
    d.lambda = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& s : table) {
        if (!s.usable) continue;
        any = true;
        d.lambda = std::min(d.lambda, s.lambda);
    }
    if (!any) throw NumericalError(sub.tag + " subsystem: no decay run produced a usable lambda");
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (!table[k].usable) continue;
        double b = table[k].beta;
        for (std::size_t i = 0; i < runs[k].t.size(); ++i)
            b = std::max(b, runs[k].norm[i] * std::exp(d.lambda * runs[k].t[i]) / table[k].xi_norm);
        d.beta = std::max(d.beta, b);
    }
    d.table = std::move(table);
    return d;
}

struct BoundValidation {
    std::size_t runs = 0;
    std::size_t samples = 0;
    std::size_t violations = 0;
    std::size_t unstable_runs = 0;  // counted as one violating sample each
    double worst_excess = 0.0;

    double holding_fraction() const { return samples ? 1.0 - static_cast<double>(violations) / static_cast<double>(samples) : 1.0; }
};

struct ISSParams {
    std::string tag;
    double beta = 0.0, lambda = 0.0, gamma = 0.0, v = 0.0, w = 0.0;
    bool v_lower_bound = false, w_lower_bound = false;
    GainEstimate gain;
    DecayEstimate decay;
    ConstraintEstimate constraints;
    BoundValidation heldout;         // deviation and input together
    BoundValidation heldout_free;    // zero-input held-out runs
    BoundValidation heldout_forced;  // held-out runs with input
    nlohmann::json manifest;

    /// ||x(t)|| bound of the estimated LISS estimate.
    double bound(double xi_norm, double u_norm, double t) const {
        return beta * xi_norm * std::exp(-lambda * t) + gamma * u_norm;
    }
};

inline void accumulate_validation(BoundValidation& acc, const ISSParams& p, const IssRun& run, double xi_norm,
                                  double u_norm) {
    ++acc.runs;
    if (run.unstable) {
        ++acc.unstable_runs;
        ++acc.samples;
        ++acc.violations;
        acc.worst_excess = std::numeric_limits<double>::infinity();
        return;
    }
    for (std::size_t k = 0; k < run.t.size(); ++k) {
        const double excess = run.norm[k] - p.bound(xi_norm, u_norm, run.t[k]) - 1e-6;
        ++acc.samples;
        if (excess > 0) {
            ++acc.violations;
            acc.worst_excess = std::max(acc.worst_excess, excess);
        }
    }
}

/// Held-out runs from fresh seeded directions: `runs` runs with both a random
/// deviation inside v and a random input inside w (the validation set), plus
/// zero-input and zero-deviation runs reported separately.
inline void validate_bound(const IssSubsystem& sub, ISSParams& p, const IssConfig& cfg,
                           const std::function<Vec(Rng&)>& random_state_direction,
                           const std::function<Vec(Rng&)>& random_input_direction) {
    Rng rng(cfg.seed ^ 0x5bd1e995ull);
    const auto n = static_cast<std::size_t>(cfg.heldout_runs);
    std::vector<Vec> xi(n), u(n);
    for (std::size_t k = 0; k < n; ++k) {
        xi[k] = rng.uniform(0.05, 0.95) * p.v * random_state_direction(rng);
        u[k] = rng.uniform(0.05, 0.95) * p.w * random_input_direction(rng);
    }
    const Vec x0 = Vec::Zero(sub.state_dim), u0 = Vec::Zero(sub.input_dim);
    std::vector<IssRun> mixed(n), free(n), forced(n);
    parallel_for(
        3 * n,
        [&](std::size_t k) {
            const std::size_t i = k % n;
            if (k < n)
                mixed[i] = run_subsystem(sub, xi[i], u[i], cfg, sub.settle_horizon);
            else if (k < 2 * n)
                free[i] = run_subsystem(sub, xi[i], u0, cfg, sub.settle_horizon);
            else
                forced[i] = run_subsystem(sub, x0, u[i], cfg, sub.settle_horizon);
        },
        cfg.threads);
    p.heldout = {};
    p.heldout_free = {};
    p.heldout_forced = {};
    for (std::size_t k = 0; k < n; ++k) {
        accumulate_validation(p.heldout, p, mixed[k], xi[k].norm(), inf_norm(u[k]));
        accumulate_validation(p.heldout_free, p, free[k], xi[k].norm(), 0.0);
        accumulate_validation(p.heldout_forced, p, forced[k], 0.0, inf_norm(u[k]));
    }
}

/// Sign vectors in {-1, 1}^n: the two uniform ones first, then seeded random
/// ones, `count` in total (all of them when 2^n <= count).
inline std::vector<Vec> sign_directions(Eigen::Index n, std::size_t count, std::uint64_t seed) {
    std::vector<Vec> out;
    auto push_unique = [&](const Vec& v) {
        for (const auto& o : out)
            if (o == v) return;
        out.push_back(v);
    };
    if (n <= 20 && (std::size_t{1} << n) <= count) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            Vec v(n);
            for (Eigen::Index i = 0; i < n; ++i) v(i) = (mask >> i) & 1 ? -1.0 : 1.0;
            push_unique(v);
        }
        return out;
    }
    push_unique(Vec::Ones(n));
    push_unique(-Vec::Ones(n));
    Rng rng(seed);
    for (int guard = 0; out.size() < count && guard < 1000; ++guard) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
        push_unique(v);
    }
    return out;
}

inline ISSParams estimate_liss(const IssSubsystem& sub, const IssConfig& cfg,
                               const std::function<Vec(Rng&)>& random_state_direction,
                               const std::function<Vec(Rng&)>& random_input_direction) {
    if (sub.state_directions.empty() || sub.input_directions.empty())
        throw PreconditionError("estimate_liss: no search directions");
    require_asymptotic_stability(sub, cfg);

    ISSParams p;
    p.tag = sub.tag;
    p.constraints = estimate_constraints(sub, cfg);
    p.v = p.constraints.v;
    p.w = p.constraints.w;
    p.v_lower_bound = p.constraints.v_lower_bound;
    p.w_lower_bound = p.constraints.w_lower_bound;

    std::vector<Vec> inputs;
    for (const auto& d : sub.input_directions)
        for (double f : cfg.gain_fractions) inputs.push_back(f * p.w * d);
    p.gain = estimate_input_gain(sub, inputs, cfg);
    p.gamma = p.gain.gamma;

    std::vector<Vec> decay_dirs = sub.state_directions;
    Rng rng(cfg.seed);
    for (int k = 0; k < cfg.decay_random_directions; ++k) decay_dirs.push_back(random_state_direction(rng));
    std::vector<Vec> initial;
    for (const auto& d : decay_dirs)
        for (double f : cfg.decay_fractions) initial.push_back(f * p.v * d);
    p.decay = estimate_decay(sub, initial, p.gamma, cfg);
    p.lambda = p.decay.lambda;
    p.beta = p.decay.beta;

    validate_bound(sub, p, cfg, random_state_direction, random_input_direction);

    p.manifest = {{"subsystem", sub.tag},
                  {"step", cfg.step},
                  {"constraint_horizon", cfg.constraint_horizon},
                  {"settle_horizon", sub.settle_horizon},
                  {"settle_window", cfg.settle_window},
                  {"settle_tol", cfg.settle_tol},
                  {"decay_settle_tol", cfg.decay_settle_tol},
                  {"bisect_tol", cfg.bisect_tol},
                  {"joint_tol", cfg.joint_tol},
                  {"joint_scale", p.constraints.joint_scale},
                  {"gain_fractions", cfg.gain_fractions},
                  {"decay_fractions", cfg.decay_fractions},
                  {"decay_random_directions", cfg.decay_random_directions},
                  {"state_directions", sub.state_directions.size()},
                  {"input_directions", sub.input_directions.size()},
                  {"heldout_runs", cfg.heldout_runs},
                  {"seed", cfg.seed}};
    return p;
}

}  // namespace pscert
