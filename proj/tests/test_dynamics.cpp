#include "support.hpp"

#include <gtest/gtest.h>

using namespace pscert;
using namespace pscert::testing;

namespace {

Vec random_state(const VoltageSetup& s, Rng& rng, double spread) {
    Vec x = full_state(s.eq);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += rng.uniform(-spread, spread);
    return x;
}

}  // namespace

TEST(Dynamics, ToySystemConverges) {
    const auto tr = simulate_polynomial(toy(), (Vec(2) << 0.5, 0.5).finished(), 1e-2, 10.0);
    EXPECT_NEAR(tr.back()(0), 1.0 / 3.0, 1e-6);
    EXPECT_NEAR(tr.back()(1), 2.0 / 3.0, 1e-6);
}

TEST(Dynamics, FourthOrderConvergence) {
    // Richardson-style check against a step/8 reference.
    const auto f = [](double, const Vec& x) {
        Vec d(2);
        d << -x(0) * x(1) + std::sin(x(1)), 1.0 - x(0) * x(0) - 0.3 * x(1);
        return d;
    };
    const Vec x0 = (Vec(2) << 0.8, -0.4).finished();
    auto end = [&](double h) {
        SimulationOptions o;
        o.step = h;
        o.horizon = 2.0;
        return simulate(f, x0, o).back();
    };
    const Vec ref = end(0.1 / 8);
    const double e1 = (end(0.1) - ref).norm();
    const double e2 = (end(0.05) - ref).norm();
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e1 / e2, 20.0);
}

TEST(Dynamics, StrideAndEventsRecorded) {
    SimulationOptions o;
    o.step = 0.01;
    o.horizon = 1.0;
    o.record_stride = 10;
    o.events = {0.5};
    std::vector<std::size_t> segs;
    const auto tr = simulate([&](std::size_t s, double, const Vec& x) {
        segs.push_back(s);
        return Vec(-x);
    }, Vec::Ones(1), o);
    EXPECT_EQ(tr.size(), 11u);
    EXPECT_NEAR(tr.t.back(), 1.0, 1e-12);
    EXPECT_EQ(segs.front(), 0u);
    EXPECT_EQ(segs.back(), 1u);
    EXPECT_EQ(std::count(segs.begin(), segs.end(), 0u), 50 * 4);
}

TEST(Dynamics, BlowupReported) {
    SimulationOptions o;
    o.step = 0.01;
    o.horizon = 5.0;
    const auto f = [](double, const Vec& x) { return Vec(x.cwiseProduct(x).cwiseProduct(x)); };
    EXPECT_THROW(simulate(f, Vec::Constant(1, 10.0), o), NumericalError);
    o.throw_on_blowup = false;
    const auto tr = simulate(f, Vec::Constant(1, 10.0), o);
    EXPECT_TRUE(tr.stopped_early);
    EXPECT_THROW(simulate(f, Vec::Ones(1), SimulationOptions{.step = -1.0}), PreconditionError);
}

TEST(Dynamics, EquilibriumPersists) {
    const auto& s = setup("wscc3");
    const auto sc = build_scenario(s.sys, s.op, FaultSpec::parse("none"), 1e-2, 5.0);
    const auto tr = simulate_full(s.model, sc, full_state(s.eq));
    for (const auto& x : tr.x) EXPECT_LT(inf_norm(x - full_state(s.eq)), 1e-6);
}

TEST(Dynamics, DecompositionIdentity) {
    for (const char* name : {"wscc3", "wscc3-salient", "smib"}) {
        const auto& s = setup(name);
        const auto n = s.model.n;
        Rng rng(31);
        for (int k = 0; k < 10; ++k) {
            const Vec x = random_state(s, rng, 0.2);
            const CMat p = frame_map(s.rn, x.head(n));
            Vec stacked(4 * n);
            stacked << rotor_rhs(s.model, p, x.head(n), x.segment(n, n), x.segment(2 * n, n)),
                voltage_rhs(s.model, p, x.segment(2 * n, n), x.segment(3 * n, n));
            EXPECT_LT(inf_norm(stacked - full_rhs(s.model, s.rn, x)), 1e-14) << name;
        }
    }
}

TEST(Dynamics, FieldVoltageRaisesFlux) {
    const auto& s = setup("wscc3");
    const Vec efd = s.eq.efd.array() + 0.1;
    const Vec d = voltage_rhs(s.model, s.rn, s.eq.delta, s.eq.eq_p, efd);
    EXPECT_GE(d.head(3).minCoeff(), 0.0);
}

TEST(Dynamics, SaturationMonotone) {
    Rng rng(2);
    const Vec lo = Vec::Constant(4, -1.0), hi = Vec::Constant(4, 2.0);
    for (int k = 0; k < 200; ++k) {
        Vec x(4), y(4);
        for (int i = 0; i < 4; ++i) {
            x(i) = rng.uniform(-3, 3);
            y(i) = x(i) + rng.uniform(0, 2);
        }
        EXPECT_TRUE((apply_saturation(x, lo, hi).array() <= apply_saturation(y, lo, hi).array()).all());
    }
    EXPECT_EQ(apply_saturation(5.0, -1.0, 2.0), 2.0);
}

TEST(Dynamics, LineFaultScenario) {
    const auto& s = setup("wscc3");
    const auto sc = build_scenario(s.sys, s.op, FaultSpec::parse("line:5-7", 0.0, 0.05), 1e-3, 1.0);
    ASSERT_EQ(sc.snapshots.size(), 2u);
    EXPECT_EQ(sc.event_times(), std::vector<double>{0.05});
    EXPECT_EQ(sc.snapshots[0].label, "fault-on");
    const auto& post = sc.snapshots.back().sys;
    for (const auto& br : post.branches)
        EXPECT_EQ(br.in_service, !((br.from == 5 && br.to == 7) || (br.from == 7 && br.to == 5)));
    EXPECT_THROW(FaultSpec::parse("line:5"), PreconditionError);
    EXPECT_THROW(FaultSpec::parse("arc:3"), PreconditionError);
    EXPECT_THROW(build_scenario(s.sys, s.op, FaultSpec::parse("line:1-4"), 1e-3, 1.0), NetworkError);
}

TEST(Dynamics, LoadStepSnapshot) {
    const auto& s = setup("wscc3");
    const auto sc = build_load_step_scenario(s.sys, s.op, 5, Complex(0.0, 1.0), 0.0, 1e-2, 1.0);
    ASSERT_EQ(sc.snapshots.size(), 1u);
    const auto& extra = sc.snapshots[0].extra;
    const auto i = static_cast<Eigen::Index>(s.sys.bus_index(5));
    EXPECT_NEAR(std::abs(extra(i) - Complex(0.0, -1.0 / std::norm(s.op.voltage(i)))), 0.0, 1e-14);
    EXPECT_EQ(extra.cwiseAbs().sum(), std::abs(extra(i)));
    EXPECT_NE(sc.snapshots[0].rn.Y_red, s.rn.Y_red);
}

TEST(Dynamics, TrajectoryCsvLayout) {
    Trajectory tr;
    tr.t = {0.0, 0.5};
    tr.x = {(Vec(2) << 1, 2).finished(), (Vec(2) << 3, 4.25).finished()};
    EXPECT_EQ(trajectory_csv(tr, {"a", "b"}), "t,a,b\n0,1,2\n0.5,3,4.25\n");
    EXPECT_EQ(full_state_names(2).front(), "delta_1");
    EXPECT_EQ(full_state_names(2).back(), "efd_2");
}
