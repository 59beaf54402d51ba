#pragma once

/// @file spec_file.hpp
/// JSON spec documents (source chart, target chart, map, named fields) and
/// the built-in catalogue.
///
/// Document shape:
///   {
///     "source": {"dim": 2, "coords": ["x","y"], "metric": [["1","0"],["0","1"]],
///                "domain": {"intervals": [[0,"2*pi"],[0,"2*pi"]], "periodic": [true,true],
///                           "exclusions": [{"type": "ball", "center": [0,0], "radius": 0.2}]}},
///     "target": {...same...},
///     "map": {"components": ["x + y", "y"]},
///     "fields": [{"name": "v", "components": ["cos(x)", "0"], "bump": {"center": [1,1], "radius": 0.5}}]
///   }
/// Metric entries and interval ends are numbers or constant expressions
/// ("2*pi", "inf", "-inf"). Validation failures throw SpecError carrying the
/// JSON pointer of the offending node.

#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "symphonic/error.hpp"
#include "symphonic/maps.hpp"

namespace symphonic {

using json = nlohmann::json;

struct SpecDocument {
    std::string origin;  ///< file path or builtin name
    json document;
    MapSpec map;
    std::vector<TangentField> fields;

    const TangentField& field(const std::string& name) const {
        for (const auto& f : fields)
            if (f.name == name) return f;
        std::string known;
        for (const auto& f : fields) known += (known.empty() ? "" : ", ") + f.name;
        throw SpecError("/fields", "no field named '" + name + "'" + (known.empty() ? " (spec has no fields)" : " (known: " + known + ")"));
    }
};

namespace spec_detail {

inline std::string child(const std::string& ptr, std::string_view key) {
    std::string k;
    for (char c : key) {
        if (c == '~') k += "~0";
        else if (c == '/') k += "~1";
        else k += c;
    }
    return ptr + "/" + k;
}
inline std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

inline const json& member(const json& obj, const std::string& ptr, const char* key) {
    if (!obj.is_object()) throw SpecError(ptr, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SpecError(ptr, std::string("missing required key '") + key + "'");
    return *it;
}

inline const json& array_of(const json& v, const std::string& ptr, std::size_t size) {
    if (!v.is_array()) throw SpecError(ptr, "expected an array");
    if (v.size() != size)
        throw SpecError(ptr, "expected " + std::to_string(size) + " entries, found " + std::to_string(v.size()));
    return v;
}

inline double number(const json& v, const std::string& ptr) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            const Expr e = Expr::parse(s, std::span<const std::string>{});
            return e(std::span<const double>{});
        } catch (const ParseError& err) {
            throw SpecError(ptr, err.what());
        } catch (const DomainError& err) {
            throw SpecError(ptr, err.what());
        }
    }
    throw SpecError(ptr, "expected a number or a constant expression string");
}

inline std::string expression_text(const json& v, const std::string& ptr, std::span<const std::string> coords) {
    std::string s;
    if (v.is_string()) s = v.get<std::string>();
    else if (v.is_number()) s = format_double(v.get<double>());
    else throw SpecError(ptr, "expected an expression string or a number");
    try {
        (void)Expr::parse(s, coords);
    } catch (const ParseError& err) {
        throw SpecError(ptr, err.what());
    }
    return s;
}

inline ManifoldModel manifold(const json& j, const std::string& ptr) {
    const std::string dptr = child(ptr, "dim");
    const json& dimv = member(j, ptr, "dim");
    if (!dimv.is_number_integer()) throw SpecError(dptr, "expected an integer");
    const long long dim = dimv.get<long long>();
    if (dim < 1 || dim > kMaxJetVars)
        throw SpecError(dptr, "dimension must be between 1 and " + std::to_string(kMaxJetVars));
    const std::size_t m = std::size_t(dim);

    const std::string cptr = child(ptr, "coords");
    const json& cj = array_of(member(j, ptr, "coords"), cptr, m);
    std::vector<std::string> coords;
    for (std::size_t i = 0; i < m; ++i) {
        const std::string p = child(cptr, i);
        if (!cj[i].is_string()) throw SpecError(p, "expected an identifier string");
        const std::string name = cj[i].get<std::string>();
        const bool ident = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                           std::all_of(name.begin(), name.end(),
                                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
        if (!ident) throw SpecError(p, "'" + name + "' is not an identifier");
        for (const auto& prev : coords)
            if (prev == name) throw SpecError(p, "duplicate coordinate '" + name + "'");
        coords.push_back(name);
    }

    const std::string mptr = child(ptr, "metric");
    const json& mj = array_of(member(j, ptr, "metric"), mptr, m);
    std::vector<std::string> metric;
    for (std::size_t i = 0; i < m; ++i) {
        const json& row = array_of(mj[i], child(mptr, i), m);
        for (std::size_t k = 0; k < m; ++k) metric.push_back(expression_text(row[k], child(child(mptr, i), k), coords));
    }

    std::vector<Interval> domain(m);
    std::vector<Exclusion> exclusions;
    if (j.contains("domain")) {
        const std::string optr = child(ptr, "domain");
        const json& dj = j["domain"];
        if (!dj.is_object()) throw SpecError(optr, "expected an object");
        if (dj.contains("intervals")) {
            const std::string iptr = child(optr, "intervals");
            const json& ij = array_of(dj["intervals"], iptr, m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::string p = child(iptr, i);
                const json& pair = array_of(ij[i], p, 2);
                domain[i].lo = number(pair[0], child(p, 0));
                domain[i].hi = number(pair[1], child(p, 1));
                if (!(domain[i].lo < domain[i].hi)) throw SpecError(p, "interval must have lo < hi");
            }
        }
        if (dj.contains("periodic")) {
            const std::string pptr = child(optr, "periodic");
            const json& pj = array_of(dj["periodic"], pptr, m);
            for (std::size_t i = 0; i < m; ++i) {
                if (!pj[i].is_boolean()) throw SpecError(child(pptr, i), "expected true or false");
                domain[i].periodic = pj[i].get<bool>();
                if (domain[i].periodic && !domain[i].bounded())
                    throw SpecError(child(pptr, i), "a periodic coordinate needs a finite interval");
            }
        }
        if (dj.contains("exclusions")) {
            const std::string eptr = child(optr, "exclusions");
            const json& ej = dj["exclusions"];
            if (!ej.is_array()) throw SpecError(eptr, "expected an array");
            for (std::size_t k = 0; k < ej.size(); ++k) {
                const std::string p = child(eptr, k);
                const json& e = ej[k];
                const json& type = member(e, p, "type");
                Exclusion ex;
                ex.radius = e.contains("radius") ? number(e["radius"], child(p, "radius")) : 0.1;
                if (!(ex.radius > 0.0)) throw SpecError(child(p, "radius"), "radius must be positive");
                if (type == "ball") {
                    ex.kind = Exclusion::Kind::ball;
                    const json& c = array_of(member(e, p, "center"), child(p, "center"), m);
                    for (std::size_t i = 0; i < m; ++i) ex.center.push_back(number(c[i], child(child(p, "center"), i)));
                } else if (type == "slab") {
                    ex.kind = Exclusion::Kind::slab;
                    const json& c = member(e, p, "coord");
                    const std::string cp = child(p, "coord");
                    if (c.is_string()) {
                        auto it = std::find(coords.begin(), coords.end(), c.get<std::string>());
                        if (it == coords.end()) throw SpecError(cp, "unknown coordinate '" + c.get<std::string>() + "'");
                        ex.coord = int(it - coords.begin());
                    } else if (c.is_number_integer() && c.get<long long>() >= 0 && c.get<long long>() < dim) {
                        ex.coord = int(c.get<long long>());
                    } else {
                        throw SpecError(cp, "expected a coordinate name or index");
                    }
                    ex.value = number(member(e, p, "value"), child(p, "value"));
                } else {
                    throw SpecError(child(p, "type"), "expected \"ball\" or \"slab\"");
                }
                exclusions.push_back(std::move(ex));
            }
        }
    }
    ManifoldModel M(coords, metric, domain, exclusions);
    try {
        M.validate_symmetry();
    } catch (const std::invalid_argument& err) {
        throw SpecError(mptr, err.what());
    } catch (const DomainError& err) {
        throw SpecError(mptr, err.what());
    }
    return M;
}

inline std::vector<std::string> components(const json& v, const std::string& ptr, std::size_t n,
                                           std::span<const std::string> coords) {
    const json& cj = array_of(v, ptr, n);
    std::vector<std::string> out;
    for (std::size_t a = 0; a < n; ++a) out.push_back(expression_text(cj[a], child(ptr, a), coords));
    return out;
}

}  // namespace spec_detail

/// Validates and builds a spec document.
inline SpecDocument load_spec_json(const json& doc, std::string origin = "") {
    using namespace spec_detail;
    if (!doc.is_object()) throw SpecError("", "expected a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "source" && it.key() != "target" && it.key() != "map" && it.key() != "fields" &&
            it.key() != "description")
            throw SpecError(child("", it.key()), "unknown key");
    SpecDocument out;
    out.origin = std::move(origin);
    out.document = doc;
    ManifoldModel src = manifold(member(doc, "", "source"), "/source");
    ManifoldModel tgt = manifold(member(doc, "", "target"), "/target");
    const json& mj = member(doc, "", "map");
    const auto comps = components(member(mj, "/map", "components"), "/map/components", std::size_t(tgt.dim()), src.coords());
    out.map = MapSpec(std::move(src), std::move(tgt), comps);
    if (doc.contains("fields")) {
        const json& fj = doc["fields"];
        if (!fj.is_array()) throw SpecError("/fields", "expected an array");
        for (std::size_t k = 0; k < fj.size(); ++k) {
            const std::string p = child("/fields", k);
            const json& nm = member(fj[k], p, "name");
            if (!nm.is_string() || nm.get<std::string>().empty()) throw SpecError(child(p, "name"), "expected a non-empty string");
            for (const auto& prev : out.fields)
                if (prev.name == nm.get<std::string>()) throw SpecError(child(p, "name"), "duplicate field name");
            const auto fc = components(member(fj[k], p, "components"), child(p, "components"), std::size_t(out.map.n()),
                                       out.map.source.coords());
            std::optional<Bump> bump;
            if (fj[k].contains("bump")) {
                const std::string bp = child(p, "bump");
                const json& bj = fj[k]["bump"];
                Bump b;
                const json& c = array_of(member(bj, bp, "center"), child(bp, "center"), std::size_t(out.map.m()));
                for (std::size_t i = 0; i < c.size(); ++i) b.center.push_back(number(c[i], child(child(bp, "center"), i)));
                b.radius = number(member(bj, bp, "radius"), child(bp, "radius"));
                if (!(b.radius > 0.0)) throw SpecError(child(bp, "radius"), "radius must be positive");
                bump = b;
            }
            out.fields.emplace_back(nm.get<std::string>(), fc, out.map.source.coords(), bump);
        }
    }
    return out;
}

inline SpecDocument load_spec_text(std::string_view text, std::string origin = "") {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        throw SpecError("", std::string("invalid JSON: ") + err.what());
    }
    return load_spec_json(doc, std::move(origin));
}

// ---------------------------------------------------------------------------
// Built-in catalogue.

namespace builtin_detail {

inline json chart(std::vector<std::string> coords, std::vector<std::vector<std::string>> metric, json domain = nullptr) {
    json j{{"dim", coords.size()}, {"coords", coords}, {"metric", metric}};
    if (!domain.is_null()) j["domain"] = std::move(domain);
    return j;
}

inline json euclidean(std::vector<std::string> coords, json domain = nullptr) {
    std::vector<std::vector<std::string>> g(coords.size(), std::vector<std::string>(coords.size(), "0"));
    for (std::size_t i = 0; i < coords.size(); ++i) g[i][i] = "1";
    return chart(std::move(coords), std::move(g), std::move(domain));
}

inline json torus_domain() {
    return json{{"intervals", {{0, "2*pi"}, {0, "2*pi"}}}, {"periodic", {true, true}}};
}

inline json torus_fields() {
    return json::array({
        {{"name", "v"}, {"components", {"exp(sin(x))*cos(y)", "sin(x + y)*exp(cos(y))"}}},
        {{"name", "w"}, {"components", {"cos(x)*exp(sin(y))", "exp(cos(x - y))"}}},
    });
}

inline json flat_torus(std::vector<std::string> coords) { return euclidean(std::move(coords), torus_domain()); }

/// Round S^m in hyperspherical angles th1..th_{m-1} (polar, margin 0.1 at
/// both poles) and ph (periodic), embedded in R^{m+1}.
inline json sphere(int m, double scale = 1.0) {
    std::vector<std::string> c;
    if (m == 2) c = {"th", "ph"};
    else {
        for (int k = 1; k < m; ++k) c.push_back("th" + std::to_string(k));
        c.push_back("ph");
    }
    std::vector<std::vector<std::string>> g(m, std::vector<std::string>(m, "0"));
    std::string prod;  // product of sin(th_k)^2 so far
    for (int k = 0; k < m; ++k) {
        g[k][k] = prod.empty() ? "1" : prod;
        if (k < m - 1) prod += (prod.empty() ? "" : "*") + ("sin(" + c[k] + ")^2");
    }
    json intervals = json::array(), periodic = json::array(), exclusions = json::array();
    for (int k = 0; k < m - 1; ++k) {
        intervals.push_back({0, "pi"});
        periodic.push_back(false);
        exclusions.push_back({{"type", "slab"}, {"coord", c[k]}, {"value", 0}, {"radius", 0.1}});
        exclusions.push_back({{"type", "slab"}, {"coord", c[k]}, {"value", "pi"}, {"radius", 0.1}});
    }
    intervals.push_back({0, "2*pi"});
    periodic.push_back(true);
    // y_{m+1} = cos th1, y_m = sin th1 cos th2, ..., then listed last-first so
    // that m = 2 gives (sin th cos ph, sin th sin ph, cos th).
    std::vector<std::string> y;
    std::string sines;
    for (int k = 0; k < m - 1; ++k) {
        y.push_back(sines + "cos(" + c[k] + ")");
        sines += "sin(" + c[k] + ")*";
    }
    y.push_back(sines + "sin(ph)");
    y.push_back(sines + "cos(ph)");
    std::reverse(y.begin(), y.end());
    if (scale != 1.0)
        for (auto& s : y) s = format_double(scale) + "*" + s;
    std::vector<std::string> yc;
    for (int a = 1; a <= m + 1; ++a) yc.push_back("y" + std::to_string(a));
    json bump_center = json::array();
    for (int k = 0; k < m - 1; ++k) bump_center.push_back("pi/2");
    bump_center.push_back("pi");
    std::vector<std::string> vc;
    for (int a = 0; a < m + 1; ++a) vc.push_back(a % 2 == 0 ? "cos(ph + " + std::to_string(a) + ")" : "sin(" + c[0] + ")*" + std::to_string(a));
    return json{{"description", "canonical inclusion of the unit sphere S^" + std::to_string(m)},
                {"source", chart(c, g, json{{"intervals", intervals}, {"periodic", periodic}, {"exclusions", exclusions}})},
                {"target", euclidean(yc)},
                {"map", {{"components", y}}},
                {"fields", json::array({{{"name", "v"}, {"components", vc}, {"bump", {{"center", bump_center}, {"radius", 1.2}}}}})}};
}

}  // namespace builtin_detail

inline std::vector<std::string> builtin_names() {
    return {"sphere-2", "sphere-3", "sphere-4", "power-curve:A", "scalar-symphonic", "torus-test",
            "variation-torus", "linear-torus", "perturbed-torus", "linear-map"};
}

/// JSON text of a built-in spec. `name` excludes the "builtin:" prefix.
inline json builtin_spec_json(std::string_view name) {
    using namespace builtin_detail;
    const std::string n(name);
    if (n.rfind("sphere-", 0) == 0) {
        const std::string ms = n.substr(7);
        if (ms.size() == 1 && ms[0] >= '2' && ms[0] <= '7') return sphere(ms[0] - '0');
    }
    if (n.rfind("power-curve:", 0) == 0) {
        const std::string a = n.substr(12);
        double av = 0.0;
        try {
            av = Expr::parse(a, std::span<const std::string>{})(std::span<const double>{});
        } catch (const std::exception&) {
            throw SpecError("", "power-curve exponent '" + a + "' is not a constant expression");
        }
        (void)av;
        return json{{"description", "curve t -> t^(" + a + ") into the real line"},
                    {"source", euclidean({"t"}, json{{"intervals", {{0.5, 4}}}})},
                    {"target", euclidean({"y"})},
                    {"map", {{"components", {"t^(" + a + ")"}}}},
                    {"fields", json::array({{{"name", "v"}, {"components", {"1"}}, {"bump", {{"center", {2.25}}, {"radius", 1.5}}}}})}};
    }
    if (n == "scalar-symphonic") {
        return json{{"description", "f = (x^2 + y^2)^(1/3) on the plane minus a disc of radius 0.2"},
                    {"source", euclidean({"x", "y"}, json{{"intervals", {{-3, 3}, {-3, 3}}},
                                                          {"exclusions", json::array({{{"type", "ball"}, {"center", {0, 0}}, {"radius", 0.2}}})}})},
                    {"target", euclidean({"u"})},
                    {"map", {{"components", {"pow(x^2 + y^2, 1/3)"}}}},
                    {"fields", json::array({{{"name", "v"}, {"components", {"cos(x - y)"}}, {"bump", {{"center", {1, 1}}, {"radius", 0.5}}}}})}};
    }
    if (n == "torus-test") {
        return json{{"description", "non-critical map from the flat torus into a curved torus"},
                    {"source", flat_torus({"x", "y"})},
                    {"target", chart({"u", "v"}, {{"1 + 0.2*cos(v)", "0"}, {"0", "1 + 0.2*sin(u)"}}, torus_domain())},
                    {"map", {{"components", {"x + y + 0.2*sin(x)", "y + 0.2*cos(y)"}}}},
                    {"fields", torus_fields()}};
    }
    if (n == "variation-torus") {
        return json{{"description", "A x + 0.2 (sin x, cos y) between flat tori, A = [[1,1],[0,1]]"},
                    {"source", flat_torus({"x", "y"})},
                    {"target", flat_torus({"u", "v"})},
                    {"map", {{"components", {"x + y + 0.2*sin(x)", "y + 0.2*cos(y)"}}}},
                    {"fields", torus_fields()}};
    }
    if (n == "linear-torus") {
        return json{{"description", "linear (symphonic) map between flat tori"},
                    {"source", flat_torus({"x", "y"})},
                    {"target", flat_torus({"u", "v"})},
                    {"map", {{"components", {"x + y", "y"}}}},
                    {"fields", torus_fields()}};
    }
    if (n == "perturbed-torus") {
        return json{{"description", "perturbed linear map between flat tori, flow start"},
                    {"source", flat_torus({"x", "y"})},
                    {"target", flat_torus({"u", "v"})},
                    {"map", {{"components", {"x + y + 0.06*sin(x)", "y + 0.08*sin(x)"}}}},
                    {"fields", torus_fields()}};
    }
    if (n == "linear-map") {
        return json{{"description", "linear map of the unit square into the plane"},
                    {"source", euclidean({"x", "y"}, json{{"intervals", {{0, 1}, {0, 1}}}})},
                    {"target", euclidean({"u", "v"})},
                    {"map", {{"components", {"2*x + y", "x - y"}}}},
                    {"fields", json::array({{{"name", "v"}, {"components", {"x*y", "sin(x)"}}, {"bump", {{"center", {0.5, 0.5}}, {"radius", 0.4}}}}})}};
    }
    std::string known;
    for (const auto& b : builtin_names()) known += (known.empty() ? "" : ", ") + b;
    throw SpecError("", "unknown builtin '" + n + "' (known: " + known + ")");
}

/// Loads "builtin:NAME" or a JSON file path.
inline SpecDocument load_spec(const std::string& ref) {
    constexpr std::string_view prefix = "builtin:";
    if (ref.rfind(prefix, 0) == 0) return load_spec_json(builtin_spec_json(ref.substr(prefix.size())), ref);
    std::ifstream in(ref, std::ios::binary);
    if (!in) throw IoError("cannot open spec file '" + ref + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading spec file '" + ref + "'");
    return load_spec_text(ss.str(), ref);
}

}  // namespace symphonic
