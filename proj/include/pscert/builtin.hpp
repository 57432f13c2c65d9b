#pragma once

// Benchmark datasets shipped with the library.
//
// wscc3: WSCC 3-machine 9-bus network and loads (Anderson-Fouad, 100 MVA base).
// The transient reactances are set to X'd = X'q = Xq, which is the machine data
// under which the published coupling matrices for this network are reproduced.
// wscc3-salient keeps the original X'd / X'q for saliency work.
//
// smib: one machine against an infinite bus, the latter being a generator bus
// with huge inertia, tiny reactance and no exciter.

#include "pscert/grid.hpp"

namespace pscert {

namespace detail {

inline Bus make_bus(int id, BusKind kind, double v_set, double p_gen, bool slack, Complex load = {}) {
    Bus b;
    b.id = id;
    b.kind = kind;
    b.v_set = v_set;
    b.p_gen = p_gen;
    b.slack = slack;
    b.load = load;
    return b;
}

inline Branch make_branch(int from, int to, double r, double x, double b) {
    Branch br;
    br.from = from;
    br.to = to;
    br.impedance = {r, x};
    br.b = b;
    return br;
}

inline Machine make_machine(int bus, double H, double D, double xd, double xd_p, double xq, double xq_p,
                            double td0_p, double frequency_hz) {
    Machine g;
    g.bus = bus;
    g.H = H;
    g.D = D;
    g.xd = xd;
    g.xd_p = xd_p;
    g.xq = xq;
    g.xq_p = xq_p;
    g.td0_p = td0_p;
    g.omega_base = 2.0 * kPi * frequency_hz;
    return g;
}

inline Exciter make_exciter(std::size_t machine, double ka, double ta, double lo, double hi) {
    Exciter e;
    e.machine = machine;
    e.ka = ka;
    e.ta = ta;
    e.efd_min = lo;
    e.efd_max = hi;
    return e;
}

inline PowerSystem wscc3(bool salient) {
    PowerSystem s;
    s.name = salient ? "wscc3-salient" : "wscc3";
    s.base_mva = 100.0;
    s.frequency_hz = 60.0;
    s.buses = {
        make_bus(1, BusKind::generator, 1.04, 0.0, true),
        make_bus(2, BusKind::generator, 1.025, 1.63, false),
        make_bus(3, BusKind::generator, 1.025, 0.85, false),
        make_bus(4, BusKind::load, 1.0, 0.0, false),
        make_bus(5, BusKind::load, 1.0, 0.0, false, {1.25, 0.5}),
        make_bus(6, BusKind::load, 1.0, 0.0, false, {0.9, 0.3}),
        make_bus(7, BusKind::load, 1.0, 0.0, false),
        make_bus(8, BusKind::load, 1.0, 0.0, false, {1.0, 0.35}),
        make_bus(9, BusKind::load, 1.0, 0.0, false),
    };
    s.branches = {
        make_branch(1, 4, 0.0, 0.0576, 0.0),      make_branch(2, 7, 0.0, 0.0625, 0.0),
        make_branch(3, 9, 0.0, 0.0586, 0.0),      make_branch(4, 5, 0.010, 0.085, 0.176),
        make_branch(4, 6, 0.017, 0.092, 0.158),   make_branch(5, 7, 0.032, 0.161, 0.306),
        make_branch(6, 9, 0.039, 0.170, 0.358),   make_branch(7, 8, 0.0085, 0.072, 0.149),
        make_branch(8, 9, 0.0119, 0.1008, 0.209),
    };
    if (salient) {
        s.machines = {
            make_machine(1, 23.64, 1.0, 0.146, 0.0608, 0.0969, 0.0969, 8.96, 60.0),
            make_machine(2, 6.4, 1.0, 0.8958, 0.1198, 0.8645, 0.1969, 6.0, 60.0),
            make_machine(3, 3.01, 1.0, 1.3125, 0.1813, 1.2578, 0.25, 5.89, 60.0),
        };
    } else {
        s.machines = {
            make_machine(1, 23.64, 1.0, 0.146, 0.0969, 0.0969, 0.0969, 8.96, 60.0),
            make_machine(2, 6.4, 1.0, 0.8958, 0.8645, 0.8645, 0.8645, 6.0, 60.0),
            make_machine(3, 3.01, 1.0, 1.3125, 1.2578, 1.2578, 1.2578, 5.89, 60.0),
        };
    }
    for (std::size_t m = 0; m < 3; ++m) s.exciters.push_back(make_exciter(m, 0.1, 0.2, -5.0, 5.0));
    return s;
}

inline PowerSystem smib() {
    PowerSystem s;
    s.name = "smib";
    s.base_mva = 100.0;
    s.frequency_hz = 60.0;
    s.buses = {
        make_bus(1, BusKind::generator, 1.0, 0.8, false),
        make_bus(2, BusKind::generator, 1.0, 0.0, true),
    };
    s.branches = {make_branch(1, 2, 0.0, 0.3, 0.0)};
    s.machines = {
        make_machine(1, 4.0, 1.0, 0.5, 0.3, 0.3, 0.3, 6.0, 60.0),
        make_machine(2, 1.0e6, 0.0, 1.0e-3, 1.0e-3, 1.0e-3, 1.0e-3, 1.0, 60.0),
    };
    s.exciters = {make_exciter(0, 0.2, 0.2, -5.0, 5.0)};
    return s;
}

}  // namespace detail

inline std::vector<std::string> builtin_names() { return {"smib", "wscc3", "wscc3-salient"}; }

inline PowerSystem builtin_system(const std::string& name) {
    PowerSystem s;
    if (name == "smib")
        s = detail::smib();
    else if (name == "wscc3")
        s = detail::wscc3(false);
    else if (name == "wscc3-salient")
        s = detail::wscc3(true);
    else
        throw PreconditionError("unknown builtin system '" + name + "'");
    validate(s);
    return s;
}

}  // namespace pscert
