#pragma once

// Fixed-step classical RK4 with piecewise-constant right-hand sides switched
// at grid-snapped event times.

#include "pscert/core.hpp"

#include <sstream>

namespace pscert {

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec> x;
    std::string subsystem = "full";
    std::string scenario_id;
    bool stopped_early = false;

    std::size_t size() const { return t.size(); }
    const Vec& back() const { return x.back(); }
};

/// rhs(segment, t, x): segment counts the events that have fired.
using SegmentedRhs = std::function<Vec(std::size_t, double, const Vec&)>;
using Rhs = std::function<Vec(double, const Vec&)>;

struct SimulationOptions {
    double step = 1e-3;
    double horizon = 10.0;
    std::vector<double> events;
    std::size_t record_stride = 1;
    bool throw_on_blowup = true;
    /// Called after every accepted step; returning false stops the run.
    std::function<bool(std::size_t, double, const Vec&)> observer;
};

inline std::size_t step_count(double step, double horizon) {
    if (!(step > 0)) throw PreconditionError("simulate: step must be positive");
    if (!(horizon >= 0)) throw PreconditionError("simulate: horizon must be non-negative");
    return static_cast<std::size_t>(std::llround(horizon / step));
}

/// Grid index of each event; nearest grid point, so the snap error is at most step/2.
inline std::vector<std::size_t> snap_events(const std::vector<double>& events, double step) {
    std::vector<std::size_t> k;
    double prev = -std::numeric_limits<double>::infinity();
    for (double e : events) {
        if (!(e > prev)) throw PreconditionError("simulate: event times must be strictly increasing");
        if (e < 0) throw PreconditionError("simulate: event times must be non-negative");
        prev = e;
        k.push_back(static_cast<std::size_t>(std::llround(e / step)));
    }
    return k;
}

inline Trajectory simulate(const SegmentedRhs& rhs, const Vec& x0, const SimulationOptions& opt) {
    const std::size_t steps = step_count(opt.step, opt.horizon);
    const auto ev = snap_events(opt.events, opt.step);
    const std::size_t stride = std::max<std::size_t>(1, opt.record_stride);
    const double h = opt.step;

    Trajectory tr;
    tr.t.reserve(steps / stride + 2);
    tr.x.reserve(steps / stride + 2);
    tr.t.push_back(0.0);
    tr.x.push_back(x0);
    if (!x0.allFinite()) throw NumericalError("simulate: non-finite initial state");

    Vec x = x0;
    std::size_t segment = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        while (segment < ev.size() && ev[segment] <= k) ++segment;
        const double t = static_cast<double>(k) * h;
        const Vec k1 = rhs(segment, t, x);
        const Vec k2 = rhs(segment, t + h / 2, x + (h / 2) * k1);
        const Vec k3 = rhs(segment, t + h / 2, x + (h / 2) * k2);
        const Vec k4 = rhs(segment, t + h, x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double tn = static_cast<double>(k + 1) * h;
        if (!x.allFinite()) {
            if (opt.throw_on_blowup) throw NumericalError("simulate: state blew up at t = " + format_sig(tn, 6));
            tr.stopped_early = true;
            tr.t.push_back(tn);
            tr.x.push_back(x);
            return tr;
        }
        const bool keep_going = !opt.observer || opt.observer(k + 1, tn, x);
        if ((k + 1) % stride == 0 || k + 1 == steps || !keep_going) {
            tr.t.push_back(tn);
            tr.x.push_back(x);
        }
        if (!keep_going) {
            tr.stopped_early = true;
            break;
        }
    }
    return tr;
}

inline Trajectory simulate(const Rhs& rhs, const Vec& x0, const SimulationOptions& opt) {
    return simulate([&](std::size_t, double t, const Vec& x) { return rhs(t, x); }, x0, opt);
}

/// Column names for the full-model state layout.
inline std::vector<std::string> full_state_names(Eigen::Index n) {
    std::vector<std::string> names;
    for (const char* p : {"delta_", "omega_", "eqp_", "efd_"})
        for (Eigen::Index i = 1; i <= n; ++i) names.push_back(p + std::to_string(i));
    return names;
}

inline std::string trajectory_csv(const Trajectory& tr, const std::vector<std::string>& names, int digits = 10) {
    std::ostringstream os;
    os << "t";
    for (const auto& s : names) os << "," << s;
    os << "\n";
    for (std::size_t k = 0; k < tr.size(); ++k) {
        os << format_sig(tr.t[k], digits);
        for (Eigen::Index i = 0; i < tr.x[k].size(); ++i) os << "," << format_sig(tr.x[k](i), digits);
        os << "\n";
    }
    return os.str();
}

}  // namespace pscert
