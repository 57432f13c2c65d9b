#include "support.hpp"

#include <gtest/gtest.h>

using namespace pscert;
using namespace pscert::testing;

namespace {

// Gauss-Seidel power flow, independent of the Newton solver.
CVec gauss_seidel(const PowerSystem& sys, double tol = 1e-10) {
    const CMat Y = bus_admittance(sys);
    const auto n = Y.rows();
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = sys.buses[static_cast<std::size_t>(i)];
        v(i) = b.slack ? std::polar(b.v_set, b.angle) : Complex(b.kind == BusKind::generator ? b.v_set : 1.0, 0.0);
    }
    for (int it = 0; it < 200000; ++it) {
        double change = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& b = sys.buses[static_cast<std::size_t>(i)];
            if (b.slack) continue;
            Complex s = -b.load;
            if (b.kind == BusKind::generator) {
                const Complex inj = std::conj(v(i)) * (Y.row(i) * v)(0);
                s = Complex(b.p_gen - b.load.real(), -inj.imag());
            }
            Complex acc = std::conj(s) / std::conj(v(i));
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) acc -= Y(i, j) * v(j);
            Complex next = acc / Y(i, i);
            if (b.kind == BusKind::generator) next = std::polar(b.v_set, std::arg(next));
            change = std::max(change, std::abs(next - v(i)));
            v(i) = next;
        }
        if (change < tol) return v;
    }
    throw std::runtime_error("Gauss-Seidel oracle did not converge");
}

nlohmann::json minimal_document() {
    return nlohmann::json::parse(R"({
      "base_mva": 100,
      "buses": [{"id": 1, "kind": "generator", "slack": true, "v_set": 1.0},
                {"id": 2, "kind": "load", "load": [0.5, 0.1]}],
      "branches": [{"from": 1, "to": 2, "x": 0.2}],
      "machines": [{"bus": 1, "H": 5, "xd": 1.0, "xd_p": 0.3, "xq": 0.9, "td0_p": 6}],
      "exciters": [{"machine": 0, "ka": 1.0, "ta": 0.2}]
    })");
}

}  // namespace

TEST(GridModel, BuiltinInventory) {
    const auto w = builtin_system("wscc3");
    EXPECT_EQ(w.bus_count(), 9u);
    EXPECT_EQ(w.machine_count(), 3u);
    EXPECT_EQ(w.exciters.size(), 3u);
    for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(w.machines[m].bus, static_cast<int>(m + 1));
    for (int id : {5, 6, 8}) EXPECT_GT(std::abs(w.buses[w.bus_index(id)].load), 0.0);
    EXPECT_EQ(builtin_system("smib").machine_count(), 2u);
    EXPECT_TRUE(builtin_system("wscc3-salient").machines[1].salient());
    EXPECT_THROW(builtin_system("ieee14"), PreconditionError);
}

TEST(GridModel, DataFilesMatchBuiltins) {
    EXPECT_EQ(load_system_file(std::string(PSCERT_DATA_DIR) + "/systems/wscc3.json"), builtin_system("wscc3"));
    EXPECT_EQ(load_system_file(std::string(PSCERT_DATA_DIR) + "/systems/smib.json"), builtin_system("smib"));
}

TEST(GridModel, SerializationRoundTrip) {
    for (const auto& name : builtin_names()) {
        const auto sys = builtin_system(name);
        EXPECT_EQ(parse_system(serialize_system(sys)), sys) << name;
    }
}

TEST(GridModel, MachineBaseConversion) {
    auto doc = minimal_document();
    doc["machines"][0]["mva_base"] = 200.0;
    const auto sys = parse_system(doc);
    EXPECT_DOUBLE_EQ(sys.machines[0].H, 10.0);
    EXPECT_DOUBLE_EQ(sys.machines[0].xd_p, 0.15);
}

TEST(GridModel, SchemaErrors) {
    auto missing = minimal_document();
    missing.erase("base_mva");
    EXPECT_THROW(parse_system(missing), SchemaError);

    auto bad_ref = minimal_document();
    bad_ref["branches"][0]["to"] = 9;
    EXPECT_THROW(parse_system(bad_ref), SchemaError);

    auto bad_kind = minimal_document();
    bad_kind["buses"][1]["kind"] = "motor";
    EXPECT_THROW(parse_system(bad_kind), SchemaError);

    auto two_slacks = minimal_document();
    two_slacks["buses"][1]["kind"] = "generator";
    two_slacks["buses"][1]["slack"] = true;
    EXPECT_THROW(parse_system(two_slacks), SchemaError);

    auto bad_exciter = minimal_document();
    bad_exciter["exciters"][0]["machine"] = 4;
    EXPECT_THROW(parse_system(bad_exciter), SchemaError);

    EXPECT_THROW(parse_system(std::string("{not json")), SchemaError);
    EXPECT_THROW(load_system_file("/nonexistent/system.json"), SchemaError);
}

TEST(GridModel, DisconnectedNetworkRejected) {
    auto doc = minimal_document();
    doc["buses"].push_back({{"id", 3}, {"kind", "load"}});
    EXPECT_THROW(parse_system(doc), NetworkError);
}

TEST(GridModel, PowerFlowMatchesGaussSeidel) {
    for (const char* name : {"wscc3", "smib"}) {
        const auto sys = builtin_system(name);
        const auto op = solve_power_flow(sys);
        const CVec oracle = gauss_seidel(sys);
        EXPECT_LT((op.voltage - oracle).cwiseAbs().maxCoeff(), 1e-6) << name;
    }
}

TEST(GridModel, PowerFlowBalancesInjections) {
    const auto sys = builtin_system("wscc3");
    const auto op = solve_power_flow(sys);
    const CVec s = op.voltage.cwiseProduct((bus_admittance(sys) * op.voltage).conjugate());
    for (std::size_t i = 0; i < sys.buses.size(); ++i) {
        const Complex expected = op.generation(static_cast<Eigen::Index>(i)) - sys.buses[i].load;
        EXPECT_NEAR(std::abs(s(static_cast<Eigen::Index>(i)) - expected), 0.0, 1e-8);
    }
    EXPECT_NEAR(op.generation(1).real(), 1.63, 1e-8);
    EXPECT_NEAR(std::abs(op.voltage(2)), 1.025, 1e-12);
}

TEST(GridModel, EquilibriumResidual) {
    for (const auto& name : builtin_names()) {
        const auto& s = setup(name);
        EXPECT_LT(inf_norm(full_rhs(s.model, s.rn, full_state(s.eq))), 1e-8) << name;
    }
}

TEST(GridModel, CenterOfInertiaIdentity) {
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        Vec d(4), h(4);
        for (int i = 0; i < 4; ++i) {
            d(i) = rng.uniform(-3, 3);
            h(i) = rng.uniform(0.5, 30);
        }
        EXPECT_NEAR(h.dot(coi_transform(d, h)), 0.0, 1e-12);
    }
}
