#pragma once

// Small polynomial vector fields read from JSON, used as analysis fixtures.
//
//   {"model": "polynomial", "name": "...", "variables": ["x1", "x2"],
//    "equations": [[{"c": -2, "p": [1, 0]}, ...], ...],
//    "initial": [..], "box": {"lo": [..], "hi": [..]}}
//
// Each equation is a sum of terms c * prod_j x_j^p_j.

#include "pscert/monotone.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace pscert {

struct Monomial {
    double c = 0.0;
    std::vector<int> p;
};

struct PolynomialSystem {
    std::string name;
    std::vector<std::string> variables;
    std::vector<std::vector<Monomial>> equations;
    Vec initial;
    std::optional<std::pair<Vec, Vec>> box;  // (lo, hi)

    Eigen::Index dim() const { return static_cast<Eigen::Index>(variables.size()); }

    Vec operator()(const Vec& x) const {
        Vec out = Vec::Zero(dim());
        for (std::size_t i = 0; i < equations.size(); ++i)
            for (const auto& m : equations[i]) {
                double term = m.c;
                for (std::size_t j = 0; j < m.p.size(); ++j)
                    if (m.p[j] != 0) term *= std::pow(x(static_cast<Eigen::Index>(j)), m.p[j]);
                out(static_cast<Eigen::Index>(i)) += term;
            }
        return out;
    }

    VectorField field() const {
        return [self = *this](const Vec& x) { return self(x); };
    }
};

inline bool is_polynomial_document(const nlohmann::json& doc) {
    return doc.is_object() && doc.value("model", std::string{}) == "polynomial";
}

inline PolynomialSystem parse_polynomial_system(const nlohmann::json& doc) {
    if (!is_polynomial_document(doc)) throw SchemaError("$.model", "expected \"polynomial\"");
    PolynomialSystem s;
    s.name = doc.value("name", std::string{"polynomial"});
    if (!doc.contains("variables") || !doc.at("variables").is_array() || doc.at("variables").empty())
        throw SchemaError("$.variables", "expected a non-empty array of names");
    for (const auto& v : doc.at("variables")) {
        if (!v.is_string()) throw SchemaError("$.variables", "names must be strings");
        s.variables.push_back(v.get<std::string>());
    }
    const auto n = s.variables.size();
    if (!doc.contains("equations") || !doc.at("equations").is_array() || doc.at("equations").size() != n)
        throw SchemaError("$.equations", "expected one term list per variable");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& eq = doc.at("equations").at(i);
        const std::string where = "$.equations[" + std::to_string(i) + "]";
        if (!eq.is_array()) throw SchemaError(where, "expected an array of terms");
        std::vector<Monomial> terms;
        for (const auto& t : eq) {
            if (!t.is_object() || !t.contains("c") || !t.at("c").is_number())
                throw SchemaError(where, "each term needs a numeric coefficient 'c'");
            Monomial m;
            m.c = t.at("c").get<double>();
            m.p.assign(n, 0);
            if (t.contains("p")) {
                const auto& p = t.at("p");
                if (!p.is_array() || p.size() != n) throw SchemaError(where + ".p", "expected one exponent per variable");
                for (std::size_t j = 0; j < n; ++j) {
                    if (!p.at(j).is_number_integer() || p.at(j).get<int>() < 0)
                        throw SchemaError(where + ".p", "exponents must be non-negative integers");
                    m.p[j] = p.at(j).get<int>();
                }
            }
            terms.push_back(std::move(m));
        }
        s.equations.push_back(std::move(terms));
    }
    auto vec = [&](const nlohmann::json& a, const std::string& where) {
        if (!a.is_array() || a.size() != n) throw SchemaError(where, "expected " + std::to_string(n) + " numbers");
        Vec v(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            if (!a.at(j).is_number()) throw SchemaError(where, "expected numbers");
            v(static_cast<Eigen::Index>(j)) = a.at(j).get<double>();
        }
        return v;
    };
    s.initial = doc.contains("initial") ? vec(doc.at("initial"), "$.initial") : Vec::Zero(static_cast<Eigen::Index>(n));
    if (doc.contains("box")) {
        const auto& b = doc.at("box");
        if (!b.is_object() || !b.contains("lo") || !b.contains("hi")) throw SchemaError("$.box", "expected lo and hi");
        Vec lo = vec(b.at("lo"), "$.box.lo"), hi = vec(b.at("hi"), "$.box.hi");
        if ((lo.array() > hi.array()).any()) throw SchemaError("$.box", "lo must not exceed hi");
        s.box = std::make_pair(lo, hi);
    }
    return s;
}

inline PolynomialSystem load_polynomial_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", e.what());
    }
    return parse_polynomial_system(doc);
}

/// Trajectory of a polynomial system (used by the envelope checks).
inline Trajectory simulate_polynomial(const PolynomialSystem& s, const Vec& x0, double step, double horizon,
                                      std::size_t stride = 1) {
    SimulationOptions opt;
    opt.step = step;
    opt.horizon = horizon;
    opt.record_stride = stride;
    const auto f = s.field();
    auto tr = simulate([&](double, const Vec& x) { return f(x); }, x0, opt);
    tr.subsystem = s.name;
    return tr;
}

}  // namespace pscert
