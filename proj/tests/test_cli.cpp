#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "schema_check.hpp"

namespace fs = std::filesystem;
using symphonic::testing::SchemaChecker;

namespace {

const std::string kCli = SYMPHONIC_CLI_PATH;
const std::string kDocs = SYMPHONIC_DOCS_DIR;

struct Outcome {
    int code;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("symphonic_cli_" + std::string(info->name()) + "_" +
                                           std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    Outcome run(const std::string& args, const std::string& env = "") const {
        const std::string out = path("stdout.txt");
        const std::string cmd = env + " '" + kCli + "' " + args + " > '" + out + "' 2>&1";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
    }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

const char* kBounded = R"J({
  "source": {"dim": 1, "coords": ["t"], "metric": [["1"]], "domain": {"intervals": [[0, 1]]}},
  "target": {"dim": 1, "coords": ["y"], "metric": [["1"]], "domain": {"intervals": [[-1, 1]]}},
  "map": {"components": ["0.9*t"]},
  "fields": [{"name": "v", "components": ["1"]}]
})J";

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("verify --bogus").code, 2);
    EXPECT_EQ(run("verify --case no-such-case").code, 2);
    EXPECT_EQ(run("eval --spec builtin:linear-map --op no-such-op --grid 2").code, 2);
    EXPECT_EQ(run("verify --jacobi sideways").code, 2);
    EXPECT_EQ(run("flow --spec builtin:linear-map").code, 2);
    EXPECT_EQ(run("flow --spec builtin:linear-torus --grid 4").code, 2);
    EXPECT_EQ(run("spec " + write("bad.json", "{\"source\": 1}")).code, 2);
}

TEST_F(Cli, IoErrorsExitThree) {
    EXPECT_EQ(run("spec " + path("missing.json")).code, 3);
    EXPECT_EQ(run("verify --case power-curves --json /nonexistent/dir/r.json").code, 3);
    EXPECT_EQ(run("eval --spec builtin:linear-map --op tension --points " + path("missing.csv")).code, 3);
}

TEST_F(Cli, NumericFailuresExitFour) {
    const auto spec = write("bounded.json", kBounded);
    EXPECT_EQ(run("variation --spec " + spec + " --field v --fd-step 1e-3 --richardson-step 1e-2").code, 0);
    const auto r = run("variation --spec " + spec + " --field v --fd-step 0.1");
    EXPECT_EQ(r.code, 4) << r.out;
}

TEST_F(Cli, VerifyOutcomes) {
    EXPECT_EQ(run("verify --case power-curves").code, 0);
    EXPECT_EQ(run("verify --case variation-formulas").code, 1);
    EXPECT_EQ(run("verify --case variation-formulas --jacobi complete").code, 0);
    EXPECT_EQ(run("verify --case sphere-inclusion-2 --tol-scale 1e-14").code, 1);
}

TEST_F(Cli, EvalWritesCsv) {
    const auto pts = write("pts.csv", "t\n1\n2\n");
    const auto r = run("eval --spec builtin:power-curve:2 --op bi-tension --points " + pts + " --out " + path("o.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream csv(slurp(path("o.csv")));
    std::string header, row1, row2;
    std::getline(csv, header);
    std::getline(csv, row1);
    std::getline(csv, row2);
    EXPECT_EQ(header, "t,bi-tension.y");
    ASSERT_EQ(row1.rfind("1,", 0), 0u);
    EXPECT_NEAR(std::stod(row1.substr(2)), 1344.0, 1e-9);
    EXPECT_NEAR(std::stod(row2.substr(2)), 1344.0 * std::pow(2.0, 2.0), 1e-8);  // t^(5a-8) = t^2
}

TEST_F(Cli, EvalOutsideDomainExitsFour) {
    const auto pts = write("pts.csv", "9\n");
    EXPECT_EQ(run("eval --spec builtin:power-curve:2 --op tension --points " + pts).code, 4);
}

TEST_F(Cli, FlowExitCodesAndTrace) {
    EXPECT_EQ(run("flow --spec builtin:linear-torus --grid 8").code, 0);
    EXPECT_EQ(run("flow --spec builtin:perturbed-torus --grid 8 --steps 0").code, 1);
    const auto r = run("flow --spec builtin:perturbed-torus --grid 8 --steps 5 --trace " + path("t.csv"));
    EXPECT_EQ(r.code, 1);
    std::istringstream trace(slurp(path("t.csv")));
    std::string line;
    std::getline(trace, line);
    EXPECT_EQ(line, "step,epsilon,E_sym,max_tau_s_norm");
    int rows = 0;
    while (std::getline(trace, line)) ++rows;
    EXPECT_EQ(rows, 6);
}

TEST_F(Cli, ReportsMatchSchemaAndAreReproducible) {
    const SchemaChecker schema(symphonic::testing::load_json_file(kDocs + "/report.schema.json"));
    const std::vector<std::string> commands = {
        "verify --case all",
        "variation --spec builtin:torus-test --field v",
        "variation --spec builtin:linear-torus --field v --field2 w --second",
        "flow --spec builtin:linear-torus --grid 8",
    };
    for (const auto& cmd : commands) {
        SCOPED_TRACE(cmd);
        // Same output path both times: the command line is echoed in the report.
        run(cmd + " --json " + path("r.json"));
        auto a = nlohmann::json::parse(slurp(path("r.json")));
        run(cmd + " --json " + path("r.json"));
        auto b = nlohmann::json::parse(slurp(path("r.json")));
        const auto errors = schema.validate(a);
        EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors.front());
        a.erase("timing");
        b.erase("timing");
        EXPECT_EQ(a.dump(), b.dump());
    }
}

TEST_F(Cli, SeedPrecedence) {
    auto seed_of = [&](const std::string& args, const std::string& env) {
        run("verify --case scalar-symphonic --json " + path("s.json") + " " + args, env);
        return nlohmann::json::parse(slurp(path("s.json")))["seed"].get<std::uint64_t>();
    };
    EXPECT_EQ(seed_of("", "env -u SYMPHONIC_SEED"), 0x5EEDu);
    EXPECT_EQ(seed_of("", "SYMPHONIC_SEED=17"), 17u);
    EXPECT_EQ(seed_of("--seed 5", "SYMPHONIC_SEED=17"), 5u);
}

TEST_F(Cli, SpecListAndEcho) {
    const auto r = run("spec --list");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("torus-test"), std::string::npos);
    const auto s = run("spec builtin:linear-map");
    EXPECT_EQ(s.code, 0);
    EXPECT_NO_THROW((void)nlohmann::json::parse(s.out));
}
