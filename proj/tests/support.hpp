#pragma once

#include "pscert/pscert.hpp"

#include <map>
#include <mutex>

namespace pscert::testing {

inline std::string fixture(const std::string& name) { return std::string(PSCERT_DATA_DIR) + "/fixtures/" + name; }

inline const PolynomialSystem& toy() {
    static const auto s = load_polynomial_file(fixture("toy_system.json"));
    return s;
}

inline const PolynomialSystem& sign_flip() {
    static const auto s = load_polynomial_file(fixture("sign_flip.json"));
    return s;
}

inline const VoltageSetup& setup(const std::string& name) {
    static std::map<std::string, VoltageSetup> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, VoltageSetup::from(builtin_system(name))).first;
    return it->second;
}

/// Default certification of a builtin, computed once per process.
inline const CertificationReport& certification(const std::string& name) {
    static std::map<std::string, CertificationReport> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, certify(builtin_system(name), {})).first;
    return it->second;
}

/// Independent reference for the toy embedding:
/// F(x, y) = (-2 x1 + x2, 10 - 10 y1 - 10 x2).
inline Vec toy_embedding_oracle(const Vec& x, const Vec& y) {
    Vec out(2);
    out << -2.0 * x(0) + x(1), 10.0 - 10.0 * y(0) - 10.0 * x(1);
    return out;
}

}  // namespace pscert::testing
