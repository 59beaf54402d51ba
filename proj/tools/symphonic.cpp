// Command-line front end: verify, eval, variation, flow, spec.
//
// Exit codes: 0 pass, 1 checks failed, 2 usage or spec error, 3 I/O error,
// 4 numerical-domain error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "symphonic/cases.hpp"
#include "symphonic/flow.hpp"
#include "symphonic/report.hpp"
#include "symphonic/spec_file.hpp"

using namespace symphonic;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string seed_text;
    double tol_scale = 1.0;
    std::string jacobi = "printed";
    std::string json_path;
};

std::uint64_t parse_seed(const std::string& text, const char* origin) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used, 0);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("invalid seed '") + text + "' from " + origin);
    }
}

std::uint64_t resolve_seed(const Common& c) {
    if (!c.seed_text.empty()) return parse_seed(c.seed_text, "--seed");
    if (const char* env = std::getenv("SYMPHONIC_SEED"); env && *env) return parse_seed(env, "SYMPHONIC_SEED");
    return kDefaultSeed;
}

JacobiForm resolve_form(const Common& c) { return c.jacobi == "complete" ? JacobiForm::complete : JacobiForm::printed; }

std::string echo(int argc, char** argv) {
    std::string s;
    for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
    return s;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "NaN";
    return format_double(v);
}

void maybe_write(const Report& r, const Common& c) {
    if (!c.json_path.empty()) r.write(c.json_path);
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const std::string& which, const Common& c, const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> ids;
    if (which == "all") ids = case_names();
    else {
        const auto names = case_names();
        if (std::find(names.begin(), names.end(), which) == names.end()) {
            std::string known;
            for (const auto& n : names) known += " " + n;
            throw UsageError("unknown case '" + which + "' (known: all" + known + ")");
        }
        ids = {which};
    }
    CaseOptions opt;
    opt.seed = resolve_seed(c);
    opt.tol_scale = c.tol_scale;
    opt.form = resolve_form(c);

    Report rep;
    rep.command = command;
    rep.seed = opt.seed;
    rep.jacobi_form = to_string(opt.form);
    rep.pass = true;
    int controls = 0, controls_failed = 0, passed = 0;
    for (const auto& id : ids) {
        CaseResult r = run_case(id, opt);
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.id << "  (" << r.description << ")\n";
        for (const auto& ch : r.checks) {
            std::cout << "  [" << (ch.pass ? "ok" : "FAILED") << "] " << ch.name << ": " << format_double(ch.measured) << ' '
                      << ch.comparison << ' ' << format_double(ch.tolerance) << '\n';
            if (ch.negative_control) {
                ++controls;
                if (ch.pass) ++controls_failed;
            }
        }
        rep.pass = rep.pass && r.pass;
        passed += r.pass ? 1 : 0;
        rep.cases.push_back(std::move(r));
    }
    rep.results = {{"cases_run", ids.size()},
                   {"cases_passed", passed},
                   {"negative_controls", controls},
                   {"negative_controls_exceeding_tolerance", controls_failed}};
    rep.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << passed << "/" << ids.size() << " cases passed (seed " << opt.seed << ", Jacobi form "
              << rep.jacobi_form << ")\n";
    maybe_write(rep, c);
    return rep.pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------
// eval

std::vector<Vector> read_points(const std::string& path, int m) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open points file '" + path + "'");
    std::vector<Vector> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        Vector p;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
            if (end == cell.c_str() || (end && *end)) {
                numeric = false;
                break;
            }
            p.push_back(v);
        }
        if (!numeric) {
            if (pts.empty() && lineno == 1) continue;  // header
            throw UsageError("points file line " + std::to_string(lineno) + ": not a numeric row");
        }
        if (int(p.size()) != m)
            throw UsageError("points file line " + std::to_string(lineno) + ": expected " + std::to_string(m) +
                             " coordinates, found " + std::to_string(p.size()));
        pts.push_back(std::move(p));
    }
    if (in.bad()) throw IoError("error reading points file '" + path + "'");
    return pts;
}

int cmd_eval(const std::string& spec_ref, const std::string& op, const std::string& field_name,
             const std::string& points_path, int grid, const std::string& out_path, const Common& c) {
    const SpecDocument doc = load_spec(spec_ref);
    const MapSpec& f = doc.map;
    const JacobiForm form = resolve_form(c);
    const int m = f.m(), n = f.n();
    static const std::vector<std::string> ops = {"pullback", "energy-density", "tension", "symphonic-tension",
                                                 "bi-tension", "jacobi"};
    if (std::find(ops.begin(), ops.end(), op) == ops.end()) throw UsageError("unknown --op '" + op + "'");
    const TangentField* field = nullptr;
    if (op == "jacobi") {
        if (field_name.empty()) throw UsageError("--op jacobi requires --field");
        field = &doc.field(field_name);
    }
    if (points_path.empty() == (grid <= 0)) throw UsageError("give exactly one of --points FILE or --grid N");
    const std::vector<Vector> pts = points_path.empty() ? tensor_mesh(f.source, grid).points : read_points(points_path, m);

    std::vector<std::string> header(f.source.coords().begin(), f.source.coords().end());
    const auto& tc = f.target.coords();
    if (op == "pullback") {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) header.push_back("pullback." + f.source.coords()[i] + "." + f.source.coords()[j]);
    } else if (op == "energy-density") {
        header.push_back("energy-density");
    } else {
        for (int a = 0; a < n; ++a) header.push_back(op + "." + tc[a]);
    }
    const std::size_t width = header.size() - std::size_t(m);

    std::vector<Vector> rows(pts.size());
    std::vector<std::string> errors(pts.size());
    parallel_for(pts.size(), [&](std::size_t p) {
        const Vector& x = pts[p];
        try {
            Vector r;
            if (op == "pullback") r = pullback_metric(f, x).data;
            else if (op == "energy-density") r = {symphonic_energy_density(f, x)};
            else if (op == "tension") r = tension_field(f, x);
            else if (op == "symphonic-tension") r = symphonic_tension(f, x);
            else if (op == "bi-tension") r = bi_tension(f, x, form);
            else r = jacobi_operator(f, x, *field, form);
            rows[p] = std::move(r);
        } catch (const DomainError& e) {
            rows[p] = Vector(width, std::nan(""));
            errors[p] = e.what();
        }
    });

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw IoError("cannot open '" + out_path + "' for writing");
        out = &file;
    }
    for (std::size_t k = 0; k < header.size(); ++k) *out << (k ? "," : "") << header[k];
    *out << '\n';
    int bad = 0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
        for (int i = 0; i < m; ++i) *out << (i ? "," : "") << csv_number(pts[p][i]);
        for (double v : rows[p]) *out << ',' << csv_number(v);
        *out << '\n';
        if (!errors[p].empty()) {
            ++bad;
            std::cerr << "row " << p + 1 << ": " << errors[p] << '\n';
        }
    }
    out->flush();
    if (!*out) throw IoError("error writing CSV output");
    if (bad) {
        std::cerr << bad << " of " << pts.size() << " points hit a domain error (NaN rows)\n";
        return kExitNumeric;
    }
    return kExitPass;
}

// ---------------------------------------------------------------------------
// variation

int cmd_variation(const std::string& spec_ref, const std::string& vname, const std::string& wname, bool second,
                  int grid, double step, double rich_step, const std::string& energy_name, const Common& c,
                  const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    const SpecDocument doc = load_spec(spec_ref);
    const MapSpec& f = doc.map;
    const JacobiForm form = resolve_form(c);
    if (energy_name != "sym" && energy_name != "bisym") throw UsageError("--energy must be sym or bisym");
    const Energy energy = energy_name == "sym" ? Energy::sym : Energy::bisym;
    if (vname.empty()) throw UsageError("--field is required");
    if (second && wname.empty()) throw UsageError("--second requires --field2");
    if (second && energy == Energy::bisym) throw UsageError("--second is available for --energy sym only");
    const TangentField& v = doc.field(vname);
    const TangentField* w = second ? &doc.field(wname) : nullptr;
    if (step <= 0.0) step = second ? 1e-2 : 1e-3;
    const Mesh mesh = tensor_mesh(f.source, grid);

    const double e0 = energy_of(f, mesh, energy);
    double analytic = 0.0, oracle = 0.0, tol = 0.0;
    std::string label;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
    RichardsonResult rich;
    if (second) {
        label = "second variation -4 int h(J^s(v), w)";
        analytic = second_variation_pairing(f, v, *w, mesh, form);
        oracle = fd_second_variation(f, v, *w, mesh, step);
        rich = fd_second_variation_order(f, v, *w, mesh, rich_step);
        tol = 1e-3;
        extra["index_form_vw"] = index_form(f, v, *w, mesh, form);
        extra["index_form_wv"] = index_form(f, *w, v, mesh, form);
    } else if (energy == Energy::sym) {
        label = "first variation -4 int h(tau^s, v)";
        analytic = first_variation_pairing(f, v, mesh);
        oracle = fd_first_variation(f, v, mesh, step);
        rich = fd_first_variation_order(f, v, mesh, rich_step);
        tol = 1e-4;
    } else {
        label = "bi-energy first variation -int h(v, tau^s_2)";
        const double integral = bi_tension_integral(f, v, mesh, form);
        analytic = -integral;
        oracle = fd_first_variation(f, v, mesh, step, Energy::bisym);
        rich = fd_first_variation_order(f, v, mesh, rich_step, Energy::bisym);
        tol = 1e-3;
        extra["integral_h_v_tau2"] = integral;
        extra["measured_constant"] = number_or_null(oracle / integral);
    }
    tol *= c.tol_scale;
    const auto vr = VariationReport::make(analytic, oracle, mesh.descriptor, step);
    const double floor = 1e-9 * (1.0 + std::abs(e0));
    const bool pass = vr.abs_error <= tol * std::max(std::abs(analytic), std::abs(oracle)) || vr.abs_error <= floor;

    std::cout << "spec:            " << doc.origin << '\n'
              << "mesh:            " << mesh.descriptor << '\n'
              << "energy:          " << to_string(energy) << " = " << format_double(e0) << '\n'
              << "jacobi form:     " << to_string(form) << '\n'
              << "analytic:        " << format_double(analytic) << "  (" << label << ")\n"
              << "oracle (FD):     " << format_double(oracle) << "  (step " << format_double(step) << ")\n"
              << "abs discrepancy: " << format_double(vr.abs_error) << '\n'
              << "rel discrepancy: " << format_double(vr.rel_error) << "  (tolerance " << format_double(tol) << ")\n"
              << "richardson order: "
              << (rich.order ? format_double(*rich.order) : std::string("undefined (differences at rounding level)"))
              << "  (steps " << format_double(rich.steps[0]) << ", " << format_double(rich.steps[1]) << ", "
              << format_double(rich.steps[2]) << ")\n";
    for (auto it = extra.begin(); it != extra.end(); ++it) std::cout << it.key() << ": " << it.value().dump() << '\n';
    std::cout << (pass ? "PASS" : "FAIL") << '\n';

    Report rep;
    rep.command = command;
    rep.seed = resolve_seed(c);
    rep.jacobi_form = to_string(form);
    rep.pass = pass;
    rep.results = {{"spec", doc.origin},
                   {"mesh", mesh.descriptor},
                   {"energy", to_string(energy)},
                   {"energy_value", number_or_null(e0)},
                   {"analytic", number_or_null(analytic)},
                   {"oracle", number_or_null(oracle)},
                   {"abs_error", number_or_null(vr.abs_error)},
                   {"rel_error", number_or_null(vr.rel_error)},
                   {"tolerance", tol},
                   {"fd_step", step},
                   {"richardson_steps", {rich.steps[0], rich.steps[1], rich.steps[2]}},
                   {"richardson_order", rich.order ? nlohmann::ordered_json(*rich.order) : nlohmann::ordered_json(nullptr)}};
    for (auto it = extra.begin(); it != extra.end(); ++it) rep.results[it.key()] = it.value();
    rep.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    maybe_write(rep, c);
    return pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------
// flow

int cmd_flow(const std::string& spec_ref, int grid, int steps, double dt, double tol, const std::string& trace_path,
             const std::string& energy_name, const Common& c, const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    const SpecDocument doc = load_spec(spec_ref);
    if (!doc.map.source.fully_periodic())
        throw UsageError("flow needs a fully periodic source chart (a flat torus); '" + spec_ref +
                         "' has a non-periodic coordinate, and boundary conditions are not defined");
    if (energy_name != "sym" && energy_name != "bisym") throw UsageError("--energy must be sym or bisym");
    if (grid < 8) throw UsageError("--grid must be at least 8");
    const FlowEnergy energy = energy_name == "sym" ? FlowEnergy::sym : FlowEnergy::bisym;
    const JacobiForm form = resolve_form(c);

    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path, std::ios::binary);
        if (!trace) throw IoError("cannot open '" + trace_path + "' for writing");
        trace << "step,epsilon,E_sym,max_tau_s_norm" << (energy == FlowEnergy::bisym ? ",E_2sym" : "") << '\n';
    }
    FlowState s = flow_init(doc.map, grid, dt, energy, form);
    const double e_start = s.energy_history.front();
    if (energy == FlowEnergy::bisym) tol *= 10.0;
    double last_max = 0.0;
    s = flow_run(std::move(s), steps, tol, [&](const FlowTraceRow& r) {
        last_max = r.max_tau;
        if (trace) {
            trace << r.step << ',' << csv_number(r.epsilon) << ',' << csv_number(r.energy) << ',' << csv_number(r.max_tau);
            if (energy == FlowEnergy::bisym) trace << ',' << csv_number(r.bienergy);
            trace << '\n';
        }
    });
    if (trace) {
        trace.flush();
        if (!trace) throw IoError("error writing trace");
    }
    bool monotone = true;
    const Vector& hist = energy == FlowEnergy::bisym ? s.bienergy_history : s.energy_history;
    for (std::size_t k = 1; k < hist.size(); ++k) monotone = monotone && hist[k] <= hist[k - 1];

    std::cout << "status:       " << to_string(s.status) << '\n'
              << "steps:        " << s.iteration << '\n'
              << "E_sym:        " << format_double(e_start) << " -> " << format_double(s.energy_history.back()) << '\n'
              << "max |tau^s|:  " << format_double(last_max) << "  (tolerance " << format_double(tol) << ")\n"
              << "epsilon:      " << format_double(s.epsilon) << '\n'
              << "monotone:     " << (monotone ? "yes" : "NO") << '\n';

    const int code = s.status == FlowStatus::converged ? kExitPass
                     : s.status == FlowStatus::budget_exhausted ? kExitFail
                                                                : kExitNumeric;
    Report rep;
    rep.command = command;
    rep.seed = resolve_seed(c);
    rep.jacobi_form = to_string(form);
    rep.pass = code == kExitPass;
    rep.results = {{"spec", doc.origin},
                   {"grid", grid},
                   {"energy", energy_name},
                   {"status", to_string(s.status)},
                   {"steps", s.iteration},
                   {"initial_energy", number_or_null(e_start)},
                   {"final_energy", number_or_null(s.energy_history.back())},
                   {"final_max_tau", number_or_null(last_max)},
                   {"tolerance", tol},
                   {"monotone", monotone}};
    rep.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    maybe_write(rep, c);
    return code;
}

// ---------------------------------------------------------------------------
// spec

int cmd_spec(const std::string& ref, bool list) {
    if (list) {
        for (const auto& b : builtin_names()) std::cout << "builtin:" << b << '\n';
        return kExitPass;
    }
    if (ref.empty()) throw UsageError("give a spec reference or --list");
    const SpecDocument doc = load_spec(ref);
    std::cout << doc.document.dump(2) << '\n';
    return kExitPass;
}

void add_common(CLI::App* sub, Common& c, bool json) {
    sub->add_option("--seed", c.seed_text, "RNG seed (default: $SYMPHONIC_SEED, else 0x5EED)");
    sub->add_option("--tol-scale", c.tol_scale, "multiply every tolerance by this factor")->check(CLI::PositiveNumber);
    sub->add_option("--jacobi", c.jacobi, "Jacobi operator form: printed (as stated) or complete")
        ->check(CLI::IsMember({"printed", "complete"}));
    if (json) sub->add_option("--json", c.json_path, "write a JSON report to this path");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"symphonic: symphonic and bi-symphonic maps between chart-defined Riemannian manifolds"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 pass, 1 checks failed, 2 usage or spec error, 3 I/O error, 4 numerical-domain error.\n"
        "Specs: a JSON file or builtin:NAME (see `symphonic spec --list`).\n"
        "Default seed 0x5EED; SYMPHONIC_SEED overrides it and --seed overrides both.");
    Common common;

    std::string case_name = "all";
    auto* verify = app.add_subcommand("verify", "run the worked-example cases");
    verify->add_option("--case", case_name, "case id or 'all'");
    add_common(verify, common, true);

    std::string spec, op, field, field2, points, out, energy = "sym", trace;
    int grid = 0, steps = 5000;
    double fd_step = 0.0, rich_step = 0.1, dt = 0.0, tol = 1e-5;
    bool second = false, list = false;

    auto* eval = app.add_subcommand("eval", "evaluate a pointwise operator, CSV output");
    eval->add_option("--spec", spec, "spec file or builtin:NAME")->required();
    eval->add_option("--op", op, "pullback|energy-density|tension|symphonic-tension|bi-tension|jacobi")->required();
    eval->add_option("--field", field, "field name (for --op jacobi)");
    eval->add_option("--points", points, "CSV file of source points");
    eval->add_option("--grid", grid, "use the N^m quadrature nodes as points");
    eval->add_option("--out", out, "CSV output path (default stdout)");
    add_common(eval, common, false);

    auto* variation = app.add_subcommand("variation", "check a variation formula against finite differences");
    variation->add_option("--spec", spec, "spec file or builtin:NAME")->required();
    variation->add_option("--field", field, "variation field v")->required();
    variation->add_option("--field2", field2, "second field w");
    variation->add_flag("--second", second, "mixed second variation in v and w");
    variation->add_option("--grid", grid, "quadrature nodes per coordinate (default 32)");
    variation->add_option("--fd-step", fd_step, "FD step (default 1e-3, or 1e-2 for --second)");
    variation->add_option("--richardson-step", rich_step, "largest step of the h, h/2, h/4 order estimate")
        ->check(CLI::PositiveNumber);
    variation->add_option("--energy", energy, "sym or bisym")->check(CLI::IsMember({"sym", "bisym"}));
    add_common(variation, common, true);

    auto* flow = app.add_subcommand("flow", "gradient flow towards a symphonic map on a periodic grid");
    flow->add_option("--spec", spec, "spec file or builtin:NAME")->required();
    flow->add_option("--grid", grid, "grid points per coordinate (default 32)");
    flow->add_option("--steps", steps, "step budget")->check(CLI::NonNegativeNumber);
    flow->add_option("--dt", dt, "initial step (default: automatic)");
    flow->add_option("--tol", tol, "stop when max |tau^s| <= tol")->check(CLI::PositiveNumber);
    flow->add_option("--trace", trace, "per-step CSV trace path");
    flow->add_option("--energy", energy, "sym or bisym (experimental)")->check(CLI::IsMember({"sym", "bisym"}));
    add_common(flow, common, true);

    auto* specc = app.add_subcommand("spec", "validate a spec and print it as JSON");
    specc->add_option("ref", spec, "spec file or builtin:NAME");
    specc->add_flag("--list", list, "list the builtin specs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    const std::string command = echo(argc, argv);
    try {
        if (*verify) return cmd_verify(case_name, common, command);
        if (*eval) return cmd_eval(spec, op, field, points, grid, out, common);
        if (*variation) {
            return cmd_variation(spec, field, field2, second, grid > 0 ? grid : 32, fd_step, rich_step, energy, common,
                                 command);
        }
        if (*flow) return cmd_flow(spec, grid > 0 ? grid : 32, steps, dt, tol, trace, energy, common, command);
        if (*specc) return cmd_spec(spec, list);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SpecError& e) {
        std::cerr << "spec error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const StepTooLarge& e) {
        std::cerr << "step-too-large: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
