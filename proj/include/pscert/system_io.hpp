#pragma once

// JSON system-description files. Angles are degrees on disk, radians in memory.

#include "pscert/grid.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <sstream>

namespace pscert {

inline constexpr int kSchemaVersion = 1;

namespace detail {

using nlohmann::json;

inline const json& member(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(where + "." + key, "missing required field");
    return *it;
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = member(obj, key, where);
    if (!v.is_number()) throw SchemaError(where + "." + key, "expected a number");
    return v.get<double>();
}

inline double number_or(const json& obj, const std::string& key, const std::string& where, double fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return number(obj, key, where);
}

inline int integer(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = member(obj, key, where);
    if (!v.is_number_integer()) throw SchemaError(where + "." + key, "expected an integer");
    return v.get<int>();
}

inline const json& array(const json& obj, const std::string& key) {
    const auto& v = member(obj, key, "$");
    if (!v.is_array()) throw SchemaError(key, "expected an array");
    return v;
}

}  // namespace detail

/// Parses and validates a system description. Machine data given on its own
/// `mva_base` is converted to the system base.
inline PowerSystem parse_system(const nlohmann::json& doc) {
    using detail::number;
    using detail::number_or;
    if (!doc.is_object()) throw SchemaError("$", "document must be a JSON object");
    if (doc.contains("schema_version")) {
        const auto& v = doc.at("schema_version");
        if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
            throw SchemaError("schema_version", "unsupported schema version");
    }

    PowerSystem sys;
    if (doc.contains("name")) {
        if (!doc.at("name").is_string()) throw SchemaError("name", "expected a string");
        sys.name = doc.at("name").get<std::string>();
    }
    sys.base_mva = number(doc, "base_mva", "$");
    sys.frequency_hz = number_or(doc, "frequency_hz", "$", 60.0);
    if (!(sys.frequency_hz > 0)) throw SchemaError("frequency_hz", "must be positive");

    const auto& buses = detail::array(doc, "buses");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto& j = buses[i];
        const std::string where = "buses[" + std::to_string(i) + "]";
        Bus b;
        b.id = detail::integer(j, "id", where);
        const auto& kind = detail::member(j, "kind", where);
        if (kind == "generator")
            b.kind = BusKind::generator;
        else if (kind == "load")
            b.kind = BusKind::load;
        else
            throw SchemaError(where + ".kind", "expected \"generator\" or \"load\"");
        b.v_set = number_or(j, "v_set", where, 1.0);
        b.angle = number_or(j, "angle_deg", where, 0.0) * kPi / 180.0;
        b.p_gen = number_or(j, "p_gen", where, 0.0);
        if (j.contains("slack")) {
            if (!j.at("slack").is_boolean()) throw SchemaError(where + ".slack", "expected a boolean");
            b.slack = j.at("slack").get<bool>();
        }
        if (j.contains("load")) {
            const auto& l = j.at("load");
            if (!l.is_array() || l.size() != 2 || !l[0].is_number() || !l[1].is_number())
                throw SchemaError(where + ".load", "expected [p, q]");
            b.load = {l[0].get<double>(), l[1].get<double>()};
        }
        sys.buses.push_back(b);
    }

    const auto& branches = detail::array(doc, "branches");
    for (std::size_t k = 0; k < branches.size(); ++k) {
        const auto& j = branches[k];
        const std::string where = "branches[" + std::to_string(k) + "]";
        Branch br;
        br.from = detail::integer(j, "from", where);
        br.to = detail::integer(j, "to", where);
        br.impedance = {number_or(j, "r", where, 0.0), number(j, "x", where)};
        br.b = number_or(j, "b", where, 0.0);
        if (j.contains("in_service")) {
            if (!j.at("in_service").is_boolean()) throw SchemaError(where + ".in_service", "expected a boolean");
            br.in_service = j.at("in_service").get<bool>();
        }
        sys.branches.push_back(br);
    }

    const auto& machines = detail::array(doc, "machines");
    const double omega_base = 2.0 * kPi * sys.frequency_hz;
    for (std::size_t m = 0; m < machines.size(); ++m) {
        const auto& j = machines[m];
        const std::string where = "machines[" + std::to_string(m) + "]";
        Machine g;
        g.bus = detail::integer(j, "bus", where);
        const double mva = number_or(j, "mva_base", where, sys.base_mva);
        if (!(mva > 0)) throw SchemaError(where + ".mva_base", "must be positive");
        const double z = sys.base_mva / mva;
        g.H = number(j, "H", where) / z;
        g.D = number_or(j, "D", where, 0.0) / z;
        g.xd = number(j, "xd", where) * z;
        g.xd_p = number(j, "xd_p", where) * z;
        g.xq = number(j, "xq", where) * z;
        g.xq_p = number_or(j, "xq_p", where, g.xd_p / z) * z;
        g.td0_p = number(j, "td0_p", where);
        g.omega_base = omega_base;
        sys.machines.push_back(g);
    }

    if (doc.contains("exciters")) {
        const auto& exciters = detail::array(doc, "exciters");
        for (std::size_t e = 0; e < exciters.size(); ++e) {
            const auto& j = exciters[e];
            const std::string where = "exciters[" + std::to_string(e) + "]";
            Exciter x;
            const int idx = detail::integer(j, "machine", where);
            if (idx < 0) throw SchemaError(where + ".machine", "must be non-negative");
            x.machine = static_cast<std::size_t>(idx);
            x.ka = number(j, "ka", where);
            x.ta = number(j, "ta", where);
            x.efd_min = number_or(j, "efd_min", where, -std::numeric_limits<double>::infinity());
            x.efd_max = number_or(j, "efd_max", where, std::numeric_limits<double>::infinity());
            sys.exciters.push_back(x);
        }
    }

    validate(sys);
    return sys;
}

inline PowerSystem parse_system(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_system(doc);
}

inline PowerSystem load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("$", "cannot open system file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_system(ss.str());
}

inline nlohmann::json to_json(const PowerSystem& sys) {
    using nlohmann::json;
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["name"] = sys.name;
    doc["base_mva"] = sys.base_mva;
    doc["frequency_hz"] = sys.frequency_hz;
    doc["buses"] = json::array();
    for (const auto& b : sys.buses) {
        json j;
        j["id"] = b.id;
        j["kind"] = b.kind == BusKind::generator ? "generator" : "load";
        j["v_set"] = b.v_set;
        j["angle_deg"] = b.angle * 180.0 / kPi;
        j["p_gen"] = b.p_gen;
        j["slack"] = b.slack;
        j["load"] = {b.load.real(), b.load.imag()};
        doc["buses"].push_back(j);
    }
    doc["branches"] = json::array();
    for (const auto& br : sys.branches)
        doc["branches"].push_back({{"from", br.from},
                                   {"to", br.to},
                                   {"r", br.impedance.real()},
                                   {"x", br.impedance.imag()},
                                   {"b", br.b},
                                   {"in_service", br.in_service}});
    doc["machines"] = json::array();
    for (const auto& g : sys.machines)
        doc["machines"].push_back({{"bus", g.bus},
                                   {"H", g.H},
                                   {"D", g.D},
                                   {"xd", g.xd},
                                   {"xd_p", g.xd_p},
                                   {"xq", g.xq},
                                   {"xq_p", g.xq_p},
                                   {"td0_p", g.td0_p}});
    doc["exciters"] = json::array();
    for (const auto& x : sys.exciters) {
        json j{{"machine", x.machine}, {"ka", x.ka}, {"ta", x.ta}};
        if (std::isfinite(x.efd_min)) j["efd_min"] = x.efd_min;
        if (std::isfinite(x.efd_max)) j["efd_max"] = x.efd_max;
        doc["exciters"].push_back(j);
    }
    return doc;
}

inline std::string serialize_system(const PowerSystem& sys) { return to_json(sys).dump(2) + "\n"; }

}  // namespace pscert
