#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "smdt/errors.hpp"
#include "smdt/standardizer.hpp"
#include "smdt/store.hpp"
#include "testutil.hpp"

using namespace smdt;
using nlohmann::json;
using testutil::TempDir;
using testutil::ts;

namespace {

SourceInfo info_with_default() {
    SourceInfo info;
    info.dataset_name = "test";
    info.file_path = "mem";
    info.default_retrieved_at = ts("2023-05-20T00:00:00Z");
    return info;
}

}  // namespace

TEST_SUITE("standardizer") {

TEST_CASE("registry ships the three built-ins") {
    auto registry = AdapterRegistry::with_builtins();
    CHECK(registry.names() ==
          std::vector<std::string>{"generic_forum", "generic_microblog", "identity"});
    CHECK(registry.contains("generic_microblog"));
    CHECK_THROWS_AS(registry.at("nope"), ValidationError);
}

TEST_CASE("duplicate registration is rejected") {
    auto registry = AdapterRegistry::with_builtins();
    Adapter dup{"generic_microblog", SourceFormat::Jsonl,
                [](const json&, const SourceInfo&) { return std::vector<AnyRecord>{}; }};
    CHECK_THROWS_AS(registry.register_adapter(dup), ValidationError);

    Adapter fresh{"custom", SourceFormat::Jsonl,
                  [](const json&, const SourceInfo&) { return std::vector<AnyRecord>{}; }};
    registry.register_adapter(fresh);
    CHECK(registry.contains("custom"));
}

TEST_CASE("entity extraction handles the worked example") {
    const auto got =
        extract_entities("see #vaalit2023 and @anna at https://a.io, mail b@c.org");
    const std::vector<std::pair<EntityType, std::string>> want = {
        {EntityType::Hashtag, "#vaalit2023"},
        {EntityType::Mention, "@anna"},
        {EntityType::Url, "https://a.io"},
        {EntityType::Email, "b@c.org"},
    };
    CHECK(got == want);
}

TEST_CASE("entity extraction corner cases") {
    CHECK(extract_entities("").empty());

    SUBCASE("a leading '#' is not part of a tag body") {
        const auto got = extract_entities("##x");
        REQUIRE(got.size() == 1);
        CHECK(got[0] == std::pair{EntityType::Hashtag, std::string("#x")});
    }

    SUBCASE("email wins over the mention inside it") {
        const auto got = extract_entities("reach b@c.org now");
        REQUIRE(got.size() == 1);
        CHECK(got[0].first == EntityType::Email);
    }

    SUBCASE("trailing punctuation is stripped from URLs") {
        const auto got = extract_entities("read https://news.example.org/a.");
        REQUIRE(got.size() == 1);
        CHECK(got[0].second == "https://news.example.org/a");
    }

    SUBCASE("hashtags inside a URL belong to the URL") {
        const auto got = extract_entities("https://a.io/#frag plus #real");
        REQUIRE(got.size() == 2);
        CHECK(got[0].first == EntityType::Url);
        CHECK(got[0].second == "https://a.io/#frag");
        CHECK(got[1] == std::pair{EntityType::Hashtag, std::string("#real")});
    }

    SUBCASE("duplicates are preserved in document order") {
        const auto got = extract_entities("#a #b #a");
        REQUIRE(got.size() == 3);
        CHECK(got[0].second == "#a");
        CHECK(got[1].second == "#b");
        CHECK(got[2].second == "#a");
    }
}

TEST_CASE("extraction is a pure function of the text") {
    auto rng = testutil::make_rng(11);
    const std::vector<std::string> parts = {"word",     "#Tag1",          "@someone",
                                            "https://x.io/p", "a@b.co",   "plain,",
                                            "#t_2",     "!"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int n = static_cast<int>(testutil::draw(rng, 0, 8));
        for (int i = 0; i < n; ++i) {
            if (!text.empty()) text += ' ';
            text += parts[static_cast<size_t>(testutil::draw(
                rng, 0, static_cast<std::int64_t>(parts.size()) - 1))];
        }
        const auto a = extract_entities(text);
        const auto b = extract_entities(text);
        CHECK(a == b);
    }
}

TEST_CASE("generic_microblog maps the worked example") {
    auto registry = AdapterRegistry::with_builtins();
    const json raw = json::parse(
        R"({"id":"1","user":{"id":"u1","name":"alice"},"text":"hi #x","ts":"2023-05-14T10:00:00Z"})");
    const auto records = standardize_record(registry.at("generic_microblog"), raw,
                                            info_with_default());
    REQUIRE(records.size() == 3);

    const auto& account = std::get<AccountRecord>(records[0]);
    CHECK(account.account_id == "u1");
    CHECK(account.user_name == "alice");
    CHECK(account.retrieved_at == ts("2023-05-20T00:00:00Z"));

    const auto& post = std::get<PostRecord>(records[1]);
    CHECK(post.post_id == "1");
    CHECK(post.account_id == "u1");
    CHECK(post.body == "hi #x");
    CHECK(post.created_at == ts("2023-05-14T10:00:00Z"));

    const auto& entity = std::get<EntityRecord>(records[2]);
    CHECK(entity.post_id == "1");
    CHECK(entity.body == "#x");
    CHECK(entity.entity_type == EntityType::Hashtag);
    CHECK(entity.created_at == post.created_at);  // copies the parent post's
}

TEST_CASE("generic_microblog emits a SHARE action for repost references") {
    auto registry = AdapterRegistry::with_builtins();
    const json raw = json::parse(
        R"({"id":"1","user":{"id":"u1"},"text":"","ts":"2023-05-14T10:00:00Z","repost_of":"9"})");
    const auto records = standardize_record(registry.at("generic_microblog"), raw,
                                            info_with_default());
    REQUIRE(records.size() == 3);
    const auto& action = std::get<ActionRecord>(records.back());
    CHECK(action.originator_post_id == "1");
    CHECK(action.originator_account_id == "u1");
    CHECK(action.target_post_id == "9");
    CHECK(action.action_type == ActionType::Share);
}

TEST_CASE("generic_microblog normalizes string engagement counts") {
    auto registry = AdapterRegistry::with_builtins();
    const json raw = json::parse(
        R"({"id":"1","user":{"id":"u1","followers":"3.4K"},"text":"","ts":"2023-05-14T10:00:00Z","likes":"1,234"})");
    const auto records = standardize_record(registry.at("generic_microblog"), raw,
                                            info_with_default());
    CHECK(std::get<AccountRecord>(records[0]).follower_count == 3400);
    CHECK(std::get<PostRecord>(records[1]).like_count == 1234);
}

TEST_CASE("parse_count normalization table") {
    CHECK(parse_count(json("1,234")) == 1234);
    CHECK(parse_count(json("3.4K")) == 3400);
    CHECK(parse_count(json("2M")) == 2000000);
    CHECK(parse_count(json(42)) == 42);
    CHECK(parse_count(json("junk")) == std::nullopt);
    CHECK(parse_count(json(nullptr)) == std::nullopt);
}

TEST_CASE("generic_forum maps subforum metadata to a GROUP community") {
    auto registry = AdapterRegistry::with_builtins();
    const json raw = json::parse(R"({
        "id":"f1", "kind":"submission",
        "author":{"id":"fu1","name":"bob"},
        "subforum":{"id":"c1","name":"news","title":"News","members":1200},
        "title":"headline", "body":"text here", "score":17, "comments":3,
        "thread_id":"f1", "created_utc":1684058400,
        "retrieved_at":"2023-05-20T12:00:00Z"})");
    const auto records =
        standardize_record(registry.at("generic_forum"), raw, info_with_default());
    REQUIRE(records.size() >= 3);

    const auto& community = std::get<CommunityRecord>(records[0]);
    CHECK(community.community_id == "c1");
    CHECK(community.community_type == CommunityType::Group);
    CHECK(community.member_count == 1200);
    CHECK(community.retrieved_at == ts("2023-05-20T12:00:00Z"));

    const auto& post = std::get<PostRecord>(records[2]);
    CHECK(post.community_id == "c1");
    CHECK(post.body == "headline\n\ntext here");
    CHECK(post.like_count == 17);
    CHECK(post.created_at == Timestamp::from_seconds(1684058400));
}

TEST_CASE("generic_forum comments yield REPLY actions") {
    auto registry = AdapterRegistry::with_builtins();
    const json raw = json::parse(R"({
        "id":"f2", "kind":"comment", "author":{"name":"carol"},
        "body":"agreed", "score":2, "parent_id":"f1", "thread_id":"f1",
        "created_at":"2023-05-14T11:00:00Z", "retrieved_at":"2023-05-20T12:00:00Z"})");
    const auto records =
        standardize_record(registry.at("generic_forum"), raw, info_with_default());
    const auto& action = std::get<ActionRecord>(records.back());
    CHECK(action.action_type == ActionType::Reply);
    CHECK(action.target_post_id == "f1");
    CHECK(action.originator_account_id == "carol");  // falls back to the name
}

TEST_CASE("identity adapter recognizes every export shape") {
    auto registry = AdapterRegistry::with_builtins();
    const auto& identity = registry.at("identity");
    SourceInfo info = info_with_default();

    const std::vector<AnyRecord> originals = {
        testutil::make_post("p1", "u1"),
        testutil::make_account("u1"),
        testutil::make_share("u1", "p1", "p0"),
        testutil::make_entity("p1", EntityType::Mention, "@x"),
        [] {
            CommunityRecord c;
            c.community_id = "c1";
            c.community_type = CommunityType::Channel;
            c.retrieved_at = testutil::ts("2023-05-20T00:00:00Z");
            return c;
        }(),
        [] {
            EnrichmentRecord e;
            e.target_kind = EnrichmentTargetKind::Post;
            e.target_id = "p1";
            e.model_id = "m:1";
            e.body = "{\"a\":1}";
            e.created_at = testutil::ts("2023-05-21T00:00:00Z");
            e.retrieved_at = testutil::ts("2023-05-21T00:00:00Z");
            return e;
        }(),
    };
    for (const auto& original : originals) {
        const auto line = record_to_json(original);
        const auto back = standardize_record(identity, json::parse(line.dump()), info);
        REQUIRE(back.size() == 1);
        CHECK(record_to_json(back[0]) == line);
        CHECK(table_of(back[0]) == table_of(original));
    }
}

TEST_CASE("malformed raws surface as validation errors, not crashes") {
    auto registry = AdapterRegistry::with_builtins();
    const auto& adapter = registry.at("generic_microblog");
    SourceInfo info = info_with_default();

    CHECK_THROWS_AS(standardize_record(adapter, json::parse("[1,2]"), info),
                    ValidationError);
    CHECK_THROWS_AS(
        standardize_record(adapter, json::parse(R"({"text":"no id"})"), info),
        ValidationError);
    CHECK_THROWS_AS(
        standardize_record(
            adapter, json::parse(R"({"id":"1","ts":"2023-05-14T00:00:00Z"})"), info),
        ValidationError);  // no user object
}

TEST_CASE("ingestion counts failures with provenance and keeps going") {
    TempDir dir("ingest");
    const auto path = dir.file("mixed.jsonl");
    {
        std::ofstream out(path);
        out << R"({"id":"1","user":{"id":"u1"},"text":"ok #a","ts":"2023-05-14T01:00:00Z"})"
            << "\n";
        out << "{broken json\n";
        out << R"({"id":"2","user":{"id":"u1"},"text":"ok too","ts":"2023-05-14T02:00:00Z"})"
            << "\n";
        out << R"({"text":"missing id","ts":"2023-05-14T03:00:00Z","user":{"id":"u9"}})"
            << "\n";
    }
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto registry = AdapterRegistry::with_builtins();
    IngestOptions options;
    options.default_retrieved_at = ts("2023-05-20T00:00:00Z");

    auto report = run_ingestion(store, registry, "generic_microblog", {path}, options);
    CHECK(report.files_processed == 1);
    CHECK(report.records_read == 4);
    CHECK(report.records_failed == 2);
    REQUIRE(report.failures.size() == 2);
    CHECK(report.failures[0].file_path == path.string());
    CHECK(report.failures[0].record_index == 1);
    CHECK(report.failures[1].record_index == 3);
    CHECK(report.insert_report.tables.at("posts").inserted == 2);

    SUBCASE("second ingestion inserts nothing") {
        auto again = run_ingestion(store, registry, "generic_microblog", {path}, options);
        CHECK(again.insert_report.total_inserted() == 0);
    }

    SUBCASE("fail_fast raises instead") {
        auto fresh = Store::open(dir.file("db2"), OpenMode::Overwrite);
        IngestOptions strict = options;
        strict.fail_fast = true;
        CHECK_THROWS_AS(
            run_ingestion(fresh, registry, "generic_microblog", {path}, strict), Error);
    }
}

TEST_CASE("empty and unreadable files") {
    TempDir dir("ingest");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto registry = AdapterRegistry::with_builtins();
    IngestOptions options;
    options.default_retrieved_at = ts("2023-05-20T00:00:00Z");

    const auto empty = dir.file("empty.jsonl");
    { std::ofstream out(empty); }
    auto report = run_ingestion(store, registry, "generic_microblog", {empty}, options);
    CHECK(report.records_read == 0);
    CHECK(report.failures.empty());

    auto missing = run_ingestion(store, registry, "generic_microblog",
                                 {dir.file("missing.jsonl")}, options);
    CHECK(missing.records_failed == 1);
    CHECK(missing.failures[0].reason == "unreadable file");
    CHECK(missing.files_processed == 0);

    CHECK_THROWS_AS(run_ingestion(store, registry, "nope", {empty}, options),
                    ValidationError);
}

TEST_CASE("determinism: same file and default produce identical exports") {
    TempDir dir("ingest");
    const auto src = dir.file("posts.jsonl");
    {
        std::ofstream out(src);
        for (int i = 0; i < 50; ++i) {
            out << R"({"id":"p)" << i << R"(","user":{"id":"u)" << (i % 7)
                << R"("},"text":"w #t)" << (i % 5) << R"( https://d)" << (i % 3)
                << R"(.org/x","ts":"2023-05-14T0)" << (i % 10) << R"(:00:00Z"})" << "\n";
        }
    }
    auto registry = AdapterRegistry::with_builtins();
    IngestOptions options;
    options.default_retrieved_at = ts("2023-05-20T00:00:00Z");

    auto read_all = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };

    std::string first, second;
    for (int round = 0; round < 2; ++round) {
        auto store =
            Store::open(dir.file("db" + std::to_string(round)), OpenMode::Overwrite);
        run_ingestion(store, registry, "generic_microblog", {src}, options);
        std::string combined;
        for (Table t : kAllTables) {
            const auto out = dir.file("exp" + std::to_string(round) + ".jsonl");
            store.export_json(t, out);
            combined += read_all(out);
        }
        (round == 0 ? first : second) = combined;
    }
    CHECK(first == second);
    CHECK(!first.empty());
}

TEST_CASE("csv sources map header-named columns") {
    TempDir dir("csv");
    const auto path = dir.file("posts.csv");
    {
        std::ofstream out(path);
        out << "id,text,ts,author\n";
        out << "1,\"hello, quoted #x\",2023-05-14T01:00:00Z,u1\n";
        out << "2,plain,2023-05-14T02:00:00Z,u2\n";
    }
    auto registry = AdapterRegistry::with_builtins();
    Adapter csv_adapter{
        "csv_posts", SourceFormat::Csv,
        [](const json& raw, const SourceInfo& info) -> std::vector<AnyRecord> {
            PostRecord p;
            p.post_id = raw.at("id").get<std::string>();
            p.account_id = raw.at("author").get<std::string>();
            p.body = raw.value("text", "");
            p.created_at = Timestamp::parse(raw.at("ts").get<std::string>());
            p.retrieved_at = *info.default_retrieved_at;
            return {p};
        }};
    registry.register_adapter(csv_adapter);

    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    IngestOptions options;
    options.default_retrieved_at = ts("2023-05-20T00:00:00Z");
    auto report = run_ingestion(store, registry, "csv_posts", {path}, options);
    CHECK(report.records_read == 2);
    CHECK(report.records_failed == 0);
    CHECK(store.row_count(Table::Posts) == 2);

    auto rows = store.query(Table::Posts, {});
    CHECK(std::get<PostRecord>(rows[0]).body == "hello, quoted #x");
}

// Every record a built-in adapter emits passes store invariants.
TEST_CASE("adapter output closure over randomized raws") {
    auto registry = AdapterRegistry::with_builtins();
    const auto& adapter = registry.at("generic_microblog");
    auto rng = testutil::make_rng(23);
    SourceInfo info = info_with_default();

    for (int trial = 0; trial < 300; ++trial) {
        json raw;
        raw["id"] = "p" + std::to_string(trial);
        json user;
        user["id"] = "u" + std::to_string(testutil::draw(rng, 1, 5));
        if (testutil::draw(rng, 0, 1)) user["name"] = "name";
        if (testutil::draw(rng, 0, 1)) user["followers"] = testutil::draw(rng, 0, 5000);
        raw["user"] = user;
        raw["ts"] = "2023-05-14T0" + std::to_string(testutil::draw(rng, 0, 9)) + ":00:00Z";
        std::string text;
        for (int w = 0; w < testutil::draw(rng, 0, 4); ++w) {
            text += w ? " " : "";
            switch (testutil::draw(rng, 0, 3)) {
                case 0: text += "#t" + std::to_string(testutil::draw(rng, 0, 9)); break;
                case 1: text += "@u" + std::to_string(testutil::draw(rng, 0, 9)); break;
                case 2: text += "https://d.org/" + std::to_string(trial); break;
                default: text += "word";
            }
        }
        raw["text"] = text;
        if (testutil::draw(rng, 0, 3) == 0) raw["likes"] = testutil::draw(rng, 0, 100);
        if (testutil::draw(rng, 0, 3) == 0)
            raw["repost_of"] = "p" + std::to_string(testutil::draw(rng, 0, 99));

        const auto records = standardize_record(adapter, raw, info);
        for (const auto& rec : records) {
            const auto reason = validate(rec);
            CAPTURE(raw.dump());
            CHECK(!reason.has_value());
        }
    }
}

}  // TEST_SUITE
