#include <gtest/gtest.h>

#include <fstream>

#include "schema_check.hpp"
#include "support.hpp"
#include "symphonic/report.hpp"

using namespace symphonic;
using namespace symphonic::testing;

namespace {

const std::string kDocs = SYMPHONIC_DOCS_DIR;

nlohmann::json base_doc() {
    return nlohmann::json::parse(R"J({
      "source": {"dim": 2, "coords": ["x", "y"], "metric": [["1", "0"], ["0", "1"]],
                 "domain": {"intervals": [[0, "2*pi"], [0, "2*pi"]], "periodic": [true, true]}},
      "target": {"dim": 2, "coords": ["u", "v"], "metric": [["1", "0"], ["0", "1"]]},
      "map": {"components": ["x + y", "y"]},
      "fields": [{"name": "v", "components": ["sin(x)", "cos(y)"], "bump": {"center": [1, 1], "radius": 0.5}}]
    })J");
}

std::string pointer_of(const nlohmann::json& doc) {
    try {
        load_spec_json(doc, "test");
    } catch (const SpecError& e) {
        return e.pointer();
    }
    return "<accepted>";
}

std::string expand(std::string name) {
    if (auto pos = name.find(":A"); pos != std::string::npos) name = name.substr(0, pos) + ":4/3";
    return name;
}

}  // namespace

TEST(SpecFile, LoadsValidDocument) {
    const auto d = load_spec_json(base_doc(), "inline");
    EXPECT_EQ(d.map.m(), 2);
    EXPECT_EQ(d.map.n(), 2);
    EXPECT_TRUE(d.map.source.fully_periodic());
    EXPECT_EQ(d.field("v").name, "v");
    EXPECT_THROW(d.field("missing"), SpecError);
}

TEST(SpecFile, ErrorsCarryJsonPointer) {
    auto doc = base_doc();
    doc["source"]["dim"] = 9;
    EXPECT_EQ(pointer_of(doc), "/source/dim");

    // dim is authoritative; the array whose length disagrees is reported.
    doc = base_doc();
    doc["source"]["dim"] = 3;
    EXPECT_EQ(pointer_of(doc), "/source/coords");

    doc = base_doc();
    doc["target"]["metric"][1][1] = "1 +";
    EXPECT_EQ(pointer_of(doc), "/target/metric/1/1");

    doc = base_doc();
    doc["map"]["components"] = {"x"};
    EXPECT_EQ(pointer_of(doc), "/map/components");

    doc = base_doc();
    doc["map"]["components"][0] = "x + z";
    EXPECT_EQ(pointer_of(doc), "/map/components/0");

    doc = base_doc();
    doc["source"]["coords"] = {"x", "x"};
    EXPECT_EQ(pointer_of(doc), "/source/coords/1");

    doc = base_doc();
    doc["extra"] = 1;
    EXPECT_EQ(pointer_of(doc), "/extra");

    doc = base_doc();
    doc["fields"][0]["components"] = {"1"};
    EXPECT_EQ(pointer_of(doc), "/fields/0/components");

    doc = base_doc();
    doc.erase("map");
    EXPECT_EQ(pointer_of(doc), "");  // the object missing the key

    EXPECT_THROW(load_spec_text("{not json", "x"), SpecError);
}

TEST(SpecFile, MissingFileIsIoError) {
    EXPECT_THROW(load_spec("/nonexistent/dir/spec.json"), IoError);
    EXPECT_THROW(load_spec("builtin:no-such-thing"), SpecError);
}

TEST(SpecFile, BuiltinsLoadAndMatchSchema) {
    const SchemaChecker schema(load_json_file(kDocs + "/spec.schema.json"));
    for (const auto& name : builtin_names()) {
        SCOPED_TRACE(name);
        const auto d = load_spec("builtin:" + expand(name));
        const auto errors = schema.validate(d.document);
        EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors.front());
        // Every builtin must also round-trip through the JSON loader.
        EXPECT_NO_THROW(load_spec_json(d.document, "roundtrip"));
    }
}

TEST(SpecFile, SchemaRejectsMalformedDocuments) {
    const SchemaChecker schema(load_json_file(kDocs + "/spec.schema.json"));
    EXPECT_TRUE(schema.validate(base_doc()).empty());
    auto doc = base_doc();
    doc["extra"] = 1;
    EXPECT_FALSE(schema.validate(doc).empty());
    doc = base_doc();
    doc["source"]["dim"] = 9;
    EXPECT_FALSE(schema.validate(doc).empty());
    doc = base_doc();
    doc["source"]["domain"]["exclusions"] = {{{"type", "cone"}}};
    EXPECT_FALSE(schema.validate(doc).empty());
}

TEST(SpecFile, ExclusionsRemoveMeshNodes) {
    const auto d = load_spec("builtin:scalar-symphonic");
    const auto mesh = tensor_mesh(d.map.source, 9);
    for (const auto& p : mesh.points) EXPECT_GT(std::hypot(p[0], p[1]), 0.2);
    EXPECT_NE(mesh.descriptor.find("excluded"), std::string::npos);
}

TEST(Report, KeyOrderSchemaAndDeterminism) {
    const SchemaChecker schema(load_json_file(kDocs + "/report.schema.json"));
    auto make = [] {
        Report r;
        r.command = "verify --case power-curves";
        r.cases.push_back(run_case("power-curves"));
        r.pass = r.cases.back().pass;
        r.results["cases_run"] = 1;
        return r;
    };
    auto a = make().to_json(), b = make().to_json();
    std::vector<std::string> keys;
    for (const auto& [k, v] : a.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"tool", "version", "command", "seed", "jacobi_form", "pass", "results",
                                              "cases", "timing"}));
    const auto errors = schema.validate(nlohmann::json::parse(a.dump()));
    EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors.front());
    a.erase("timing");
    b.erase("timing");
    EXPECT_EQ(a.dump(), b.dump());
}

TEST(Report, NonFiniteBecomesNullAndWriteFailureIsIoError) {
    EXPECT_TRUE(number_or_null(std::nan("")).is_null());
    EXPECT_TRUE(number_or_null(INFINITY).is_null());
    EXPECT_EQ(number_or_null(1.5), 1.5);
    Report r;
    EXPECT_THROW(r.write("/nonexistent/dir/report.json"), IoError);
}
