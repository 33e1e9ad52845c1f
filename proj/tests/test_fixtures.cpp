#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "smdt/fixtures.hpp"
#include "smdt/inspector.hpp"
#include "smdt/standardizer.hpp"
#include "smdt/store.hpp"
#include "testutil.hpp"

using namespace smdt;
using testutil::TempDir;
using testutil::ts;

namespace {

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE("fixtures") {

TEST_CASE("same seed regenerates byte-identical files") {
    TempDir a("fx_a"), b("fx_b");
    const auto m1 = generate_fixtures(42, a.path());
    const auto m2 = generate_fixtures(42, b.path());

    for (const auto& name : {"microblog.jsonl", "forum.jsonl"}) {
        CAPTURE(name);
        CHECK(file_bytes(a.file(name)) == file_bytes(b.file(name)));
    }
    CHECK(m1.datasets.at("microblog").sha256 == m2.datasets.at("microblog").sha256);
    CHECK(m1.datasets.at("forum").sha256 == m2.datasets.at("forum").sha256);
    CHECK(manifest_to_json(m1) == manifest_to_json(m2));

    const auto m3 = generate_fixtures(7, a.path());
    CHECK(m3.datasets.at("microblog").sha256 != m1.datasets.at("microblog").sha256);
}

TEST_CASE("files carry the declared line and malformed counts") {
    TempDir dir("fx");
    const auto manifest = generate_fixtures(42, dir.path());

    const auto& micro = manifest.datasets.at("microblog");
    CHECK(micro.lines == 1000);
    CHECK(micro.malformed == 3);
    const auto& forum = manifest.datasets.at("forum");
    CHECK(forum.lines == 500);
    CHECK(forum.malformed == 3);

    // actual line counts in the emitted files
    for (const auto& [name, ds] : manifest.datasets) {
        std::ifstream in(dir.file(ds.file_name));
        std::string line;
        std::int64_t lines = 0;
        while (std::getline(in, line)) ++lines;
        CAPTURE(name);
        CHECK(lines == ds.lines);
    }

    // timestamps stay inside the declared window
    CHECK(manifest.window_start == ts("2023-05-14T00:00:00Z"));
    CHECK(manifest.window_end == ts("2023-05-15T00:00:00Z"));
}

TEST_CASE("share tally in the manifest equals a scan of the file") {
    TempDir dir("fx");
    const auto manifest = generate_fixtures(42, dir.path());
    std::ifstream in(dir.file("microblog.jsonl"));
    std::string line;
    std::int64_t reposts = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("repost_of")) ++reposts;
    }
    CHECK(reposts == manifest.datasets.at("microblog").share_actions);
}

TEST_CASE("ingesting the fixtures reproduces the manifest exactly") {
    TempDir dir("fx");
    const auto manifest = generate_fixtures(42, dir.path());
    auto registry = AdapterRegistry::with_builtins();

    for (const auto& [name, ds] : manifest.datasets) {
        CAPTURE(name);
        auto store = Store::open(dir.file(name + ".db"), OpenMode::Overwrite);
        IngestOptions options;
        options.dataset_name = name;
        options.default_retrieved_at = ts("2023-05-21T00:00:00Z");
        const auto report =
            run_ingestion(store, registry, ds.adapter, {dir.file(ds.file_name)}, options);

        CHECK(report.records_read == ds.lines);
        CHECK(report.records_failed == ds.malformed);
        for (Table t : kAllTables) {
            const std::string tname(table_name(t));
            CAPTURE(tname);
            CHECK(report.insert_report.tables.at(tname) ==
                  ds.expected_insert.tables.at(tname));
        }

        // availability matrix agreement with the inspector
        const auto schema = inspect_store(store);
        for (Table t : kAllTables) {
            const std::string tname(table_name(t));
            for (const auto& field : table_fields(t)) {
                CAPTURE(tname + "." + field);
                CHECK(schema.available(tname, field) == ds.availability.at(tname).at(field));
            }
        }

        // re-ingestion inserts nothing
        const auto again =
            run_ingestion(store, registry, ds.adapter, {dir.file(ds.file_name)}, options);
        CHECK(again.insert_report.total_inserted() == 0);
    }
}

TEST_CASE("fixture stores disagree on community availability as designed") {
    TempDir dir("fx");
    const auto manifest = generate_fixtures(42, dir.path());
    const auto& micro = manifest.datasets.at("microblog").availability.at("communities");
    const auto& forum = manifest.datasets.at("forum").availability.at("communities");
    CHECK(!micro.at("community_id"));
    CHECK(forum.at("community_id"));
    CHECK(forum.at("member_count"));
    // core account/post fields present on both
    for (const auto& name : {"microblog", "forum"}) {
        const auto& availability = manifest.datasets.at(name).availability;
        CAPTURE(name);
        CHECK(availability.at("accounts").at("account_id"));
        CHECK(availability.at("posts").at("post_id"));
        CHECK(availability.at("posts").at("body"));
        CHECK(availability.at("posts").at("created_at"));
    }
}

TEST_CASE("manifest json is written next to the data") {
    TempDir dir("fx");
    generate_fixtures(42, dir.path());
    const auto j = nlohmann::json::parse(file_bytes(dir.file("manifest.json")));
    CHECK(j["seed"] == 42);
    CHECK(j["datasets"]["microblog"]["lines"] == 1000);
    CHECK(j["datasets"]["forum"]["adapter"] == "generic_forum");
}

}  // TEST_SUITE
