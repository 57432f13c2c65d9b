// pscert command-line front end.
//
// Exit codes: 0 success / certified, 2 configuration error, 3 numerical
// failure, 4 sign violation, 5 not certified.

#include "pscert/pscert.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace pscert;

namespace {

enum Exit { ok = 0, config_error = 2, numerical_error = 3, sign_violation = 4, not_certified = 5 };

struct Globals {
    std::string system = "wscc3";
    std::string out = "out";
    std::string config;
    std::uint64_t seed = 1;
    std::optional<double> step, horizon;
};

/// Loaded system: a power system or a polynomial fixture.
struct Loaded {
    std::optional<PowerSystem> power;
    std::optional<PolynomialSystem> poly;
};

Loaded load(const std::string& spec) {
    Loaded l;
    const auto names = builtin_names();
    if (std::find(names.begin(), names.end(), spec) != names.end()) {
        l.power = builtin_system(spec);
        return l;
    }
    std::ifstream in(spec);
    if (!in) throw PreconditionError("'" + spec + "' is neither a builtin system nor a readable file");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", e.what());
    }
    if (is_polynomial_document(doc))
        l.poly = parse_polynomial_system(doc);
    else
        l.power = parse_system(doc);
    return l;
}

const PowerSystem& need_power(const Loaded& l, const char* cmd) {
    if (!l.power) throw PreconditionError(std::string(cmd) + " needs a power-system description");
    return *l.power;
}

void write_file(const Globals& g, const std::string& name, const std::string& text) {
    fs::create_directories(g.out);
    const auto path = fs::path(g.out) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw PreconditionError("cannot write '" + path.string() + "'");
    os << text;
}

void write_json(const Globals& g, const std::string& name, const nlohmann::json& j) { write_file(g, name, j.dump(2) + "\n"); }

/// Options not given on the command line are filled from the --config file;
/// keys are the long option names without dashes.
class ConfigBinder {
public:
    template <class T>
    void bind(CLI::Option* opt, T& target) {
        const std::string key = opt->get_name(false, true).substr(opt->get_name(false, true).find_first_not_of('-'));
        setters_.push_back({opt, key, [&target](const nlohmann::json& v) { target = v.get<T>(); }});
    }
    template <class T>
    void bind(CLI::Option* opt, std::optional<T>& target) {
        const std::string key = opt->get_name(false, true).substr(opt->get_name(false, true).find_first_not_of('-'));
        setters_.push_back({opt, key, [&target](const nlohmann::json& v) { target = v.get<T>(); }});
    }

    void apply(const std::string& path) const {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw PreconditionError("cannot open config '" + path + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError("$", std::string("config: ") + e.what());
        }
        if (!doc.is_object()) throw SchemaError("$", "config must be a JSON object");
        for (const auto& s : setters_) {
            if (s.opt->count() > 0 || !doc.contains(s.key)) continue;
            try {
                s.set(doc.at(s.key));
            } catch (const nlohmann::json::exception&) {
                throw SchemaError(s.key, "config value has the wrong type");
            }
        }
    }

private:
    struct Setter {
        CLI::Option* opt;
        std::string key;
        std::function<void(const nlohmann::json&)> set;
    };
    std::vector<Setter> setters_;
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> v;
    if (text.empty()) return v;
    const auto colon = std::count(text.begin(), text.end(), ':');
    try {
        if (colon == 2) {  // start:stop:count
            const auto a = text.find(':'), b = text.rfind(':');
            const double lo = std::stod(text.substr(0, a)), hi = std::stod(text.substr(a + 1, b - a - 1));
            const int n = std::stoi(text.substr(b + 1));
            if (n < 2) throw PreconditionError("grid '" + text + "' needs at least 2 points");
            for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * k / (n - 1));
            return v;
        }
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto comma = text.find(',', pos);
            v.push_back(std::stod(text.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    } catch (const std::logic_error&) {
        throw PreconditionError("cannot parse number list '" + text + "'");
    }
    return v;
}

nlohmann::json pattern_json(const SignPattern& p) { return {{"tol", jnum(p.tol)}, {"rows", p.row_strings()}}; }

nlohmann::json report_json(const SignStabilityReport& r, const std::vector<double>& t) {
    nlohmann::json j = {{"sign_stable", r.stable}, {"samples_checked", r.samples_checked}};
    if (!r.stable) {
        j["violation"] = {{"sample", r.first_violation_sample},
                          {"t", jnum(t.at(r.first_violation_sample))},
                          {"row", r.row},
                          {"col", r.col},
                          {"expected", std::string(1, sign_char(r.expected))},
                          {"observed", std::string(1, sign_char(r.observed))},
                          {"value", jnum(r.value)}};
    }
    return j;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string fault = "none";
    double t_on = 0.0, t_clear = 0.05;
    std::size_t stride = 1;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    const auto l = load(g.system);
    if (l.poly) {
        const auto tr = simulate_polynomial(*l.poly, l.poly->initial, g.step.value_or(1e-3), g.horizon.value_or(10.0), a.stride);
        write_file(g, "trajectory.csv", trajectory_csv(tr, l.poly->variables));
        write_json(g, "summary.json", {{"system", l.poly->name}, {"samples", tr.size()}, {"final", jvec(tr.back())}});
        return ok;
    }
    const auto s = VoltageSetup::from(need_power(l, "simulate"));
    const auto sc = build_scenario(s.sys, s.op, FaultSpec::parse(a.fault, a.t_on, a.t_clear), g.step.value_or(1e-3),
                                   g.horizon.value_or(10.0));
    const auto tr = simulate_full(s.model, sc, full_state(s.eq), a.stride);
    const auto n = s.model.n;
    const auto events = sc.event_times();
    const Vec x0 = full_state(s.eq);
    double spread = 0.0, vmin = std::numeric_limits<double>::infinity(), dev = 0.0;
    const Vec H = s.sys.inertia();
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const Vec d = coi_transform(tr.x[k].head(n), H);
        spread = std::max(spread, d.maxCoeff() - d.minCoeff());
        const auto seg = segment_at(events, tr.t[k], sc.step);
        const auto f = machine_frame(s.model, frame_map(sc.network(seg), tr.x[k].head(n)), tr.x[k].segment(2 * n, n));
        vmin = std::min(vmin, f.vt.minCoeff());
        dev = std::max(dev, inf_norm(tr.x[k] - x0));
    }
    // Settled: last second of the run varies by less than 1e-4.
    bool settled = true;
    const double t_end = tr.t.back();
    for (std::size_t k = tr.size(); k-- > 0 && tr.t[k] >= t_end - 1.0;)
        settled = settled && inf_norm(tr.x[k] - tr.back()) < 1e-4;
    write_file(g, "trajectory.csv", trajectory_csv(tr, full_state_names(n)));
    write_json(g, "summary.json",
               {{"system", s.sys.name},
                {"scenario", sc.id},
                {"step", jnum(sc.step)},
                {"horizon", jnum(sc.horizon)},
                {"samples", tr.size()},
                {"max_angle_spread", jnum(spread)},
                {"min_terminal_voltage", jnum(vmin)},
                {"max_deviation_from_equilibrium", jnum(dev)},
                {"settled", settled}});
    std::cout << "simulate: " << tr.size() << " samples, max angle spread " << format_sig(spread, 6) << " rad\n";
    return ok;
}

struct SignsArgs {
    std::string fault = "line:5-7";
    double t_on = 0.0, t_clear = 0.05;
    std::size_t stride = 1;
    std::string at = "trajectory";
    double tol = 1e-9;
};

int cmd_signs(const Globals& g, const SignsArgs& a) {
    if (a.at != "trajectory" && a.at != "equilibrium") throw PreconditionError("--at must be trajectory or equilibrium");
    const auto l = load(g.system);
    nlohmann::json j;
    SignPattern ref;
    bool stable = true;
    if (l.poly) {
        const auto f = l.poly->field();
        const Mat J = numeric_jacobian(f, l.poly->initial);
        ref = sign_pattern(J, a.tol);
        j = {{"system", l.poly->name}, {"reference_state", jvec(l.poly->initial)}, {"jacobian", jmat(J)}};
        if (a.at == "trajectory") {
            const auto tr = simulate_polynomial(*l.poly, l.poly->initial, g.step.value_or(1e-2), g.horizon.value_or(5.0));
            const auto rep = sign_stability_along_trajectory([&](std::size_t) { return f; }, tr.x, a.stride, ref,
                                                             structural_zeros(f, l.poly->initial));
            j.update(report_json(rep, tr.t));
            stable = rep.stable;
        }
    } else {
        const auto s = VoltageSetup::from(need_power(l, "signs"));
        if (a.at == "equilibrium") {
            const auto e = equilibrium_signs(s, a.tol);
            ref = e.pattern;
            j = {{"system", s.sys.name}, {"jacobian", jmat(e.jacobian)}};
        } else {
            const auto c = check_fault_signs(s, FaultSpec::parse(a.fault, a.t_on, a.t_clear), g.step.value_or(1e-3),
                                             g.horizon.value_or(5.0), a.stride, a.tol);
            ref = c.reference.pattern;
            j = {{"system", s.sys.name},
                 {"scenario", c.scenario.id},
                 {"jacobian", jmat(c.reference.jacobian)},
                 {"relative_tol", jnum(kSignRelTol)},
                 {"max_angle_spread", jnum(c.max_angle_spread)}};
            j.update(report_json(c.report, c.trajectory.t));
            stable = c.report.stable;
        }
    }
    j["at"] = a.at;
    j["pattern"] = pattern_json(ref);
    write_json(g, "signs.json", j);
    write_file(g, "pattern.txt", ref.text());
    std::cout << ref.text();
    if (!stable) {
        std::cout << "signs: violation at sample " << j["violation"]["sample"] << " entry (" << j["violation"]["row"]
                  << ", " << j["violation"]["col"] << ")\n";
        return sign_violation;
    }
    if (a.at == "trajectory") std::cout << "signs: sign stable over " << j["samples_checked"] << " samples\n";
    return ok;
}

struct EnvelopeArgs {
    int bus = 5;
    double q_mvar = 100.0;
    double p_mw = 0.0;
    double half_width = 0.05;
    std::size_t interior = 0;
};

int cmd_envelope(const Globals& g, const EnvelopeArgs& a) {
    const auto l = load(g.system);
    const double step = g.step.value_or(1e-2), horizon = g.horizon.value_or(20.0);
    if (l.poly) {
        const auto& p = *l.poly;
        const auto f = p.field();
        const auto F = build_embedding(f, sign_pattern(numeric_jacobian(f, p.initial)));
        Vec lo, hi;
        if (p.box) {
            lo = p.box->first;
            hi = p.box->second;
        } else {
            lo = p.initial.array() - a.half_width;
            hi = p.initial.array() + a.half_width;
        }
        const auto box = check_invariant_box(F, lo, hi);
        SimulationOptions opt;
        opt.step = step;
        opt.horizon = horizon;
        const auto env = simulate_envelope(F, lo, hi, opt);
        double worst = 0.0;
        Rng rng(g.seed);
        for (std::size_t i = 0; i < a.interior; ++i) {
            Vec x0(lo.size());
            for (Eigen::Index k = 0; k < x0.size(); ++k) x0(k) = rng.uniform(lo(k), hi(k));
            const auto tr = simulate_polynomial(p, x0, step, horizon);
            for (std::size_t k = 0; k < tr.size(); ++k)
                worst = std::max({worst, (tr.x[k] - env.hi[k]).maxCoeff(), (env.lo[k] - tr.x[k]).maxCoeff()});
        }
        write_file(g, "envelope.csv", envelope_csv(env, p.variables));
        write_json(g, "box.json",
                   {{"system", p.name},
                    {"lo", jvec(lo)},
                    {"hi", jvec(hi)},
                    {"invariant", box.invariant},
                    {"F_hi_lo", jvec(box.upper)},
                    {"F_lo_hi", jvec(box.lower)},
                    {"interior_runs", a.interior},
                    {"worst_excursion", jnum(worst)},
                    {"terminal_gap", jnum(envelope_gap_metric(env).back())}});
        std::cout << "envelope: box invariant " << (box.invariant ? "true" : "false") << "\n";
        return ok;
    }
    const auto s = VoltageSetup::from(need_power(l, "envelope"));
    const Complex load_pu(a.p_mw / s.sys.base_mva, a.q_mvar / s.sys.base_mva);
    const auto r = load_step_envelope(s, a.bus, load_pu, a.half_width, step, horizon, a.interior, g.seed);
    const auto names = voltage_state_names(s.model.n);
    write_file(g, "envelope.csv", envelope_csv(r.envelope, names));
    write_file(g, "actual.csv", trajectory_csv(r.actual, names));
    std::string gaps = "t,gap\n";
    const auto gm = envelope_gap_metric(r.envelope);
    for (std::size_t k = 0; k < gm.size(); ++k) gaps += format_sig(r.envelope.t[k], 10) + "," + format_sig(gm[k], 10) + "\n";
    write_file(g, "gap.csv", gaps);
    write_json(g, "box.json",
               {{"system", s.sys.name},
                {"scenario", r.scenario.id},
                {"half_width", jnum(a.half_width)},
                {"contained", r.contained},
                {"interior_runs", r.interior_runs},
                {"worst_excursion", jnum(r.worst_excursion)},
                {"terminal_gap", jnum(r.terminal_gap())}});
    std::cout << "envelope: terminal gap " << format_sig(r.terminal_gap(), 6) << ", contained "
              << (r.contained ? "true" : "false") << "\n";
    return ok;
}

struct EquilibriumArgs {
    std::optional<double> ka;
    std::string sweep;
    bool dump = false;
};

int cmd_equilibrium(const Globals& g, const EquilibriumArgs& a) {
    const auto l = load(g.system);
    const auto& sys = need_power(l, "equilibrium");
    const auto op = solve_power_flow(sys);
    const auto eq = initialize_equilibrium(sys, op);
    auto st = voltage_statics(sys, op, eq);
    if (a.ka) st = with_uniform_ka(st, *a.ka);
    const auto sm = discrete_jacobian(st, eq.eq_p);
    nlohmann::json j = {{"system", sys.name},
                        {"ka", jvec(st.ka)},
                        {"rho", jnum(sm.rho)},
                        {"J_D", jmat(sm.J_D)},
                        {"eqp", jvec(eq.eq_p)},
                        {"efd", jvec(eq.efd)},
                        {"delta", jvec(eq.delta)}};
    if (sm.rho > 0) {
        const auto it = iterate_discrete(st, -eq.eq_p + Vec::Constant(eq.eq_p.size(), 0.05));
        j["iteration"] = {{"converged", it.converged()},
                          {"iterations", it.iterations},
                          {"step_norm", jnum(it.step_norm)},
                          {"previous_step_norm", jnum(it.previous_step_norm)}};
        if (it.converged()) j["iteration"]["fixed_point"] = jvec(it.fixed_point);
    }
    if (!a.sweep.empty()) {
        const auto grid = parse_list(a.sweep);
        const auto sw = sweep_KA(voltage_statics(sys, op, eq), grid);
        std::string csv = "K_A,rho\n";
        for (std::size_t k = 0; k < sw.ka.size(); ++k) csv += format_sig(sw.ka[k], 12) + "," + format_sig(sw.rho[k], 12) + "\n";
        write_file(g, "ka_sweep.csv", csv);
        j["sweep"] = {{"monotone", sw.monotone}, {"critical_ka", sw.critical_ka ? jnum(*sw.critical_ka) : nlohmann::json(nullptr)}};
    }
    if (a.dump) {
        const auto rn = base_network(sys, op);
        const auto cm = coupling_matrices(rn, eq.delta, sys.machines);
        std::string text = matrix_csv("K_d", cm.K_d, eq.delta) + matrix_csv("K_q", cm.K_q, eq.delta) +
                           matrix_csv("K_v", cm.K_v, eq.delta) + matrix_csv("B", rn.B, eq.delta) +
                           matrix_csv("G", rn.G, eq.delta) + matrix_csv("dh_dEq", jacobian_h(cm, eq.eq_p), eq.delta);
        for (std::size_t i = 0; i < cm.C.size(); ++i) text += matrix_csv("C_" + std::to_string(i + 1), cm.C[i], eq.delta);
        write_file(g, "matrices.csv", text);
        const auto ss = check_sign_structure(cm, eq.eq_p);
        j["sign_structure_ok"] = ss.ok();
    }
    write_json(g, "equilibrium.json", j);
    std::cout << "equilibrium: rho(J_D) = " << format_sig(sm.rho, 8) << "\n";
    return ok;
}

IssConfig iss_config(const Globals& g) {
    IssConfig cfg;
    cfg.seed = g.seed;
    if (g.step) cfg.step = *g.step;
    if (g.horizon) cfg.constraint_horizon = *g.horizon;
    return cfg;
}

int cmd_iss(const Globals& g) {
    const auto l = load(g.system);
    const auto c = PowerContext::from(need_power(l, "iss"));
    const auto cfg = iss_config(g);
    const auto p1 = estimate_liss(rotor_subsystem(c), cfg, rotor_random_state(c), rotor_random_input(c));
    const auto p2 = estimate_liss(voltage_subsystem(c), cfg, voltage_random_state(c), voltage_random_input(c));
    write_json(g, "iss.json", {{"system", c.sys.name}, {"rotor", iss_json(p1)}, {"voltage", iss_json(p2)}});
    write_file(g, "gain_rotor.csv", gain_curve_csv(p1));
    write_file(g, "gain_voltage.csv", gain_curve_csv(p2));
    for (const auto* p : {&p1, &p2})
        std::cout << p->tag << ": beta " << format_sig(p->beta, 6) << " lambda " << format_sig(p->lambda, 6) << " gamma "
                  << format_sig(p->gamma, 6) << " v " << format_sig(p->v, 6) << " w " << format_sig(p->w, 6)
                  << " held-out " << format_sig(p->heldout.holding_fraction(), 6) << "\n";
    return ok;
}

struct CertifyArgs {
    std::optional<double> xi1, xi2, ka;
    bool soundness = false;
};

int cmd_certify(const Globals& g, const CertifyArgs& a) {
    const auto l = load(g.system);
    CertifyOptions o;
    o.xi1 = a.xi1;
    o.xi2 = a.xi2;
    o.ka = a.ka;
    o.iss = iss_config(g);
    const auto r = certify(need_power(l, "certify"), o);
    auto j = r.to_json();
    if (a.soundness && r.estimated) {
        const auto sys = a.ka ? with_exciter_gain(*l.power, *a.ka) : *l.power;
        const auto c = PowerContext::from(sys);
        j["soundness"] = soundness_grid(c, r.rotor, r.voltage, {}).to_json();
    }
    write_json(g, "certificate.json", j);
    if (r.estimated) {
        write_file(g, "gain_rotor.csv", gain_curve_csv(r.rotor));
        write_file(g, "gain_voltage.csv", gain_curve_csv(r.voltage));
    }
    std::cout << "certify: " << j["verdict"].get<std::string>();
    if (r.estimated) std::cout << " (rho " << format_sig(r.verdict.rho, 6) << ", " << SmallGainVerdict::name(r.verdict.outcome) << ")";
    else std::cout << " (" << r.failure << ")";
    std::cout << "\n";
    return r.certified() ? ok : not_certified;
}

struct KaLimitArgs {
    std::string grid;
    std::optional<double> xi1, xi2;
    double true_max = 40.0;
    double true_tol = 0.05;
};

int cmd_ka_limit(const Globals& g, const KaLimitArgs& a) {
    const auto l = load(g.system);
    const auto& sys = need_power(l, "ka-limit");
    CertifyOptions co;
    co.xi1 = a.xi1;
    co.xi2 = a.xi2;
    co.iss = iss_config(g);
    const auto base = certify(sys, co);
    if (!base.estimated) throw PreconditionError("ka-limit: base estimation failed: " + base.failure);
    KaLimitOptions o;
    o.iss = co.iss;
    o.xi1 = base.xi1;
    o.xi2 = base.xi2;
    double ka0 = std::numeric_limits<double>::infinity();
    for (const auto& x : sys.exciters) ka0 = std::min(ka0, x.ka);
    if (sys.exciters.empty()) throw PreconditionError("ka-limit: system has no exciter");
    o.grid = a.grid.empty() ? parse_list(format_sig(ka0, 12) + ":" + format_sig(ka0 + 10.0, 12) + ":8") : parse_list(a.grid);
    o.true_lo = o.grid.front();
    o.true_hi = a.true_max;
    o.true_tol = a.true_tol;
    const auto r = ka_limit(sys, base.rotor, base.voltage, o);
    auto j = r.to_json();
    j["system"] = sys.name;
    j["xi"] = {jnum(o.xi1), jnum(o.xi2)};
    write_json(g, "ka_limit.json", j);
    write_file(g, "ka_gamma2.csv", r.sweep_csv());
    std::cout << "ka-limit: estimate " << (r.ka_estimate ? format_sig(*r.ka_estimate, 6) : "n/a") << ", simulated "
              << (r.ka_true ? format_sig(*r.ka_true, 6) : "n/a") << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability certification for power-system models with monotone and small-gain tools"};
    app.require_subcommand(1);
    Globals g;
    ConfigBinder binder;
    binder.bind(app.add_option("--system", g.system, "builtin name (smib, wscc3, wscc3-salient) or JSON file"), g.system);
    binder.bind(app.add_option("--out", g.out, "output directory"), g.out);
    binder.bind(app.add_option("--seed", g.seed, "random seed"), g.seed);
    binder.bind(app.add_option("--step", g.step, "integration step (s)")->check(CLI::PositiveNumber), g.step);
    binder.bind(app.add_option("--horizon", g.horizon, "simulation horizon (s)")->check(CLI::NonNegativeNumber), g.horizon);
    app.add_option("--config", g.config, "JSON file with option values; command-line flags take precedence");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "full-model time-domain simulation");
    binder.bind(c_sim->add_option("--fault", sim.fault, "none | bus:<id> | line:<from>-<to>"), sim.fault);
    binder.bind(c_sim->add_option("--t-on", sim.t_on, "fault time (s)"), sim.t_on);
    binder.bind(c_sim->add_option("--t-clear", sim.t_clear, "clearing time (s)"), sim.t_clear);
    binder.bind(c_sim->add_option("--stride", sim.stride, "record every k-th step"), sim.stride);

    SignsArgs sg;
    auto* c_signs = app.add_subcommand("signs", "voltage-subsystem Jacobian sign pattern");
    binder.bind(c_signs->add_option("--fault", sg.fault, "fault for the trajectory check"), sg.fault);
    binder.bind(c_signs->add_option("--t-on", sg.t_on, "fault time (s)"), sg.t_on);
    binder.bind(c_signs->add_option("--t-clear", sg.t_clear, "clearing time (s)"), sg.t_clear);
    binder.bind(c_signs->add_option("--stride", sg.stride, "check every k-th sample"), sg.stride);
    binder.bind(c_signs->add_option("--at", sg.at, "trajectory | equilibrium"), sg.at);
    binder.bind(c_signs->add_option("--tol", sg.tol, "classification tolerance"), sg.tol);

    EnvelopeArgs ev;
    auto* c_env = app.add_subcommand("envelope", "mixed-monotone envelope and invariant-box check");
    binder.bind(c_env->add_option("--bus", ev.bus, "load-step bus"), ev.bus);
    binder.bind(c_env->add_option("--q-mvar", ev.q_mvar, "reactive load step (MVar)"), ev.q_mvar);
    binder.bind(c_env->add_option("--p-mw", ev.p_mw, "active load step (MW)"), ev.p_mw);
    binder.bind(c_env->add_option("--half-width", ev.half_width, "initial box half width"), ev.half_width);
    binder.bind(c_env->add_option("--interior", ev.interior, "seeded interior runs checked for containment"), ev.interior);

    EquilibriumArgs eqa;
    auto* c_eq = app.add_subcommand("equilibrium", "static characteristics, rho(J_D) and K_A sweeps");
    binder.bind(c_eq->add_option("--ka", eqa.ka, "uniform exciter gain")->check(CLI::NonNegativeNumber), eqa.ka);
    binder.bind(c_eq->add_option("--sweep", eqa.sweep, "K_A grid: a,b,c or start:stop:count"), eqa.sweep);
    binder.bind(c_eq->add_flag("--dump-matrices", eqa.dump, "write coupling matrices"), eqa.dump);

    auto* c_iss = app.add_subcommand("iss", "LISS estimates of the rotor and voltage subsystems");

    CertifyArgs ca;
    auto* c_cert = app.add_subcommand("certify", "small-gain certificate");
    binder.bind(c_cert->add_option("--xi1", ca.xi1, "rotor initial-deviation norm")->check(CLI::NonNegativeNumber), ca.xi1);
    binder.bind(c_cert->add_option("--xi2", ca.xi2, "voltage initial-deviation norm")->check(CLI::NonNegativeNumber), ca.xi2);
    binder.bind(c_cert->add_option("--ka", ca.ka, "uniform exciter gain")->check(CLI::PositiveNumber), ca.ka);
    binder.bind(c_cert->add_flag("--soundness", ca.soundness, "also run the simulated soundness grid"), ca.soundness);

    KaLimitArgs ka;
    auto* c_ka = app.add_subcommand("ka-limit", "exciter-gain limit from the gamma_2(K_A) fit");
    binder.bind(c_ka->add_option("--grid", ka.grid, "K_A grid: a,b,c or start:stop:count"), ka.grid);
    binder.bind(c_ka->add_option("--xi1", ka.xi1, "rotor initial-deviation norm")->check(CLI::NonNegativeNumber), ka.xi1);
    binder.bind(c_ka->add_option("--xi2", ka.xi2, "voltage initial-deviation norm")->check(CLI::NonNegativeNumber), ka.xi2);
    binder.bind(c_ka->add_option("--true-max", ka.true_max, "upper K_A bracket for the simulated limit"), ka.true_max);
    binder.bind(c_ka->add_option("--true-tol", ka.true_tol, "bisection tolerance for the simulated limit"), ka.true_tol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        binder.apply(g.config);
        if (*c_sim) return cmd_simulate(g, sim);
        if (*c_signs) return cmd_signs(g, sg);
        if (*c_env) return cmd_envelope(g, ev);
        if (*c_eq) return cmd_equilibrium(g, eqa);
        if (*c_iss) return cmd_iss(g);
        if (*c_cert) return cmd_certify(g, ca);
        if (*c_ka) return cmd_ka_limit(g, ka);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    } catch (const NetworkError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    }
    return config_error;
}
