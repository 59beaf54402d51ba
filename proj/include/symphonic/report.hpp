#pragma once

/// @file report.hpp
/// Machine-readable reports. Everything except the trailing "timing" object
/// is a pure function of the command line and seed, so two runs produce the
/// same bytes up to that block. Numbers use the shortest round-trip form.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symphonic/cases.hpp"
#include "symphonic/error.hpp"

namespace symphonic {

inline constexpr const char* kToolVersion = "1.0.0";

inline nlohmann::ordered_json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline nlohmann::ordered_json to_json(const Check& c) {
    return {{"name", c.name},
            {"measured", number_or_null(c.measured)},
            {"expected", number_or_null(c.expected)},
            {"tolerance", number_or_null(c.tolerance)},
            {"comparison", c.comparison},
            {"negative_control", c.negative_control},
            {"pass", c.pass}};
}

inline nlohmann::ordered_json to_json(const CaseResult& r) {
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return {{"id", r.id},
            {"description", r.description},
            {"seed", r.seed},
            {"jacobi_form", r.jacobi_form},
            {"pass", r.pass},
            {"checks", std::move(checks)}};
}

/// Report under construction. `results` holds command-specific values.
struct Report {
    std::string command;
    std::uint64_t seed = kDefaultSeed;
    std::string jacobi_form = "printed";
    bool pass = false;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    std::vector<CaseResult> cases;
    double total_seconds = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tool"] = "symphonic";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["seed"] = seed;
        j["jacobi_form"] = jacobi_form;
        j["pass"] = pass;
        j["results"] = results;
        nlohmann::ordered_json cs = nlohmann::ordered_json::array();
        nlohmann::ordered_json per_case = nlohmann::ordered_json::object();
        for (const auto& c : cases) {
            cs.push_back(symphonic::to_json(c));
            per_case[c.id] = c.seconds;
        }
        j["cases"] = std::move(cs);
        j["timing"] = {{"total_seconds", total_seconds}, {"cases", std::move(per_case)}};
        return j;
    }

    std::string dump() const { return to_json().dump(2) + "\n"; }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        out << dump();
        out.flush();
        if (!out) throw IoError("error writing '" + path + "'");
    }
};

}  // namespace symphonic
