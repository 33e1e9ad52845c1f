#include <doctest.h>

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "smdt/errors.hpp"
#include "smdt/standardizer.hpp"
#include "smdt/store.hpp"
#include "testutil.hpp"

using namespace smdt;
using testutil::make_account;
using testutil::make_post;
using testutil::make_share;
using testutil::TempDir;
using testutil::ts;

TEST_SUITE("store") {

TEST_CASE("fresh store has seven empty tables") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db_a"), OpenMode::Overwrite);
    for (Table t : kAllTables) CHECK(store.row_count(t) == 0);
}

TEST_CASE("open-or-create is an idempotent open") {
    TempDir dir("store");
    {
        auto store = Store::open(dir.file("db_a"), OpenMode::Overwrite);
        std::vector<AnyRecord> recs;
        for (int i = 0; i < 10; ++i)
            recs.push_back(make_post("p" + std::to_string(i), "u1"));
        store.insert_batch(recs);
        CHECK(store.row_count(Table::Posts) == 10);
    }
    {
        auto store = Store::open(dir.file("db_a"), OpenMode::OpenOrCreate);
        CHECK(store.row_count(Table::Posts) == 10);
    }
    {
        auto store = Store::open(dir.file("db_a"), OpenMode::Overwrite);
        CHECK(store.row_count(Table::Posts) == 0);
    }
}

TEST_CASE("create-new refuses an existing store, distinctly from IO failure") {
    TempDir dir("store");
    { Store::open(dir.file("db_a"), OpenMode::Overwrite); }
    CHECK_THROWS_AS(Store::open(dir.file("db_a"), OpenMode::CreateNew), StoreExistsError);
}

TEST_CASE("insert accounting matches the worked examples") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    std::vector<AnyRecord> posts = {make_post("p1", "u1"), make_post("p2", "u1"),
                                    make_post("p3", "u2")};

    auto first = store.insert_batch(posts);
    CHECK(first.tables.at("posts") == TableCounts{3, 3, 0});

    auto second = store.insert_batch(posts);
    CHECK(second.tables.at("posts") == TableCounts{3, 0, 3});
    CHECK(store.row_count(Table::Posts) == 3);
}

TEST_CASE("first record wins on a key collision within a batch") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto a = make_post("p1", "u1");
    a.body = "first";
    auto b = make_post("p1", "u1");
    b.body = "second";  // same (post_id, retrieved_at)
    auto report = store.insert_batch(std::vector<AnyRecord>{a, b});
    CHECK(report.tables.at("posts") == TableCounts{2, 1, 1});

    auto rows = store.query(Table::Posts, {});
    REQUIRE(rows.size() == 1);
    CHECK(std::get<PostRecord>(rows[0]).body == "first");
}

TEST_CASE("snapshots with different retrieved_at coexist") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto early = make_post("p1", "u1", "2023-05-14T10:00:00Z", "2023-05-15T00:00:00Z");
    auto late = make_post("p1", "u1", "2023-05-14T10:00:00Z", "2023-05-16T00:00:00Z");
    auto report = store.insert_batch(std::vector<AnyRecord>{early, late});
    CHECK(report.tables.at("posts") == TableCounts{2, 2, 0});
}

TEST_CASE("an invalid record aborts the whole batch") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto good = make_post("p1", "u1");
    auto bad = make_post("", "u1");  // empty post_id
    try {
        store.insert_batch(std::vector<AnyRecord>{good, bad});
        FAIL("expected InvariantViolationError");
    } catch (const InvariantViolationError& e) {
        CHECK(e.table() == "posts");
        CHECK(e.index() == 1);
        CHECK(e.reason() == "post_id is empty");
    }
    CHECK(store.row_count(Table::Posts) == 0);
}

TEST_CASE("action identity treats absent ids consistently") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    ActionRecord follow;
    follow.originator_account_id = "u1";
    follow.target_account_id = "u2";
    follow.action_type = ActionType::Follow;
    follow.created_at = ts("2023-05-14T10:00:00Z");
    follow.retrieved_at = ts("2023-05-20T00:00:00Z");

    auto r1 = store.insert_batch(std::vector<AnyRecord>{follow});
    auto r2 = store.insert_batch(std::vector<AnyRecord>{follow});
    CHECK(r1.tables.at("actions").inserted == 1);
    CHECK(r2.tables.at("actions").deduplicated == 1);
    CHECK(store.row_count(Table::Actions) == 1);
}

TEST_CASE("action invariants") {
    ActionRecord a;
    a.action_type = ActionType::Share;
    a.created_at = ts("2023-05-14T10:00:00Z");
    a.retrieved_at = ts("2023-05-20T00:00:00Z");
    CHECK(validate(a).has_value());  // no originator, no target

    a.originator_account_id = "u1";
    CHECK(validate(a).has_value());  // SHARE needs target_post_id
    a.target_post_id = "p9";
    CHECK(!validate(a).has_value());

    ActionRecord f = a;
    f.action_type = ActionType::Follow;
    CHECK(validate(f).has_value());  // FOLLOW needs target_account_id
    f.target_account_id = "u2";
    CHECK(!validate(f).has_value());
}

TEST_CASE("export writes JSON-Lines with nulls for absent optionals") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);

    SUBCASE("empty table exports zero lines") {
        CHECK(store.export_json(Table::Posts, dir.file("empty.jsonl")) == 0);
        std::ifstream in(dir.file("empty.jsonl"));
        std::string line;
        CHECK(!std::getline(in, line));
    }

    SUBCASE("five accounts export five parseable lines") {
        std::vector<AnyRecord> recs;
        for (int i = 0; i < 5; ++i) recs.push_back(make_account("u" + std::to_string(i)));
        store.insert_batch(recs);
        CHECK(store.export_json(Table::Accounts, dir.file("accounts.jsonl")) == 5);

        std::ifstream in(dir.file("accounts.jsonl"));
        std::string line;
        int lines = 0;
        while (std::getline(in, line)) {
            auto j = nlohmann::json::parse(line);
            CHECK(j.contains("account_id"));
            CHECK(j["user_name"].is_null());
            ++lines;
        }
        CHECK(lines == 5);
    }
}

TEST_CASE("export then identity re-ingest deduplicates everything") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    std::vector<AnyRecord> recs;
    for (int i = 0; i < 20; ++i) {
        auto p = make_post("p" + std::to_string(i), "u" + std::to_string(i % 3));
        if (i % 2 == 0) p.like_count = i * 10;
        if (i % 5 == 0) p.location = GeoPoint{12.5, -7.25};
        recs.push_back(p);
    }
    recs.push_back(make_account("u0"));
    recs.push_back(make_share("u1", "p1", "p0"));
    recs.push_back(testutil::make_entity("p1", EntityType::Hashtag, "#x"));
    store.insert_batch(recs);

    for (Table t : {Table::Posts, Table::Accounts, Table::Actions, Table::Entities}) {
        const auto path = dir.file(std::string(table_name(t)) + ".jsonl");
        store.export_json(t, path);
        auto registry = AdapterRegistry::with_builtins();
        IngestOptions options;
        auto report = run_ingestion(store, registry, "identity", {path}, options);
        const auto& counts = report.insert_report.tables.at(std::string(table_name(t)));
        CHECK(counts.inserted == 0);
        CHECK(counts.deduplicated == counts.received);
        CHECK(report.records_failed == 0);
    }
}

TEST_CASE("query validates its filter") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);

    Filter unknown;
    unknown.clauses.push_back(FilterClause::eq("no_such_field", std::string("x")));
    CHECK_THROWS_AS(store.query(Table::Posts, unknown), ValidationError);

    Filter backwards;
    backwards.clauses.push_back(FilterClause::time_range(
        "created_at", ts("2023-05-15T00:00:00Z"), ts("2023-05-14T00:00:00Z")));
    CHECK_THROWS_AS(store.query(Table::Posts, backwards), ValidationError);

    // empty half-open interval is valid and empty
    store.insert_batch(std::vector<AnyRecord>{make_post("p1", "u1")});
    Filter empty_range;
    empty_range.clauses.push_back(FilterClause::time_range(
        "created_at", ts("2023-05-14T10:00:00Z"), ts("2023-05-14T10:00:00Z")));
    CHECK(store.query(Table::Posts, empty_range).empty());

    CHECK(store.query(Table::Communities, {}).empty());
}

// Query results must equal a full-scan filter, exactly.
TEST_CASE("query matches a brute-force scan on randomized stores") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto rng = testutil::make_rng(7);

    std::vector<AnyRecord> recs;
    const std::int64_t day = ts("2023-05-14T00:00:00Z").micros();
    for (int i = 0; i < 400; ++i) {
        ActionRecord a;
        a.originator_account_id = "u" + std::to_string(testutil::draw(rng, 1, 8));
        a.originator_post_id = "p" + std::to_string(i);
        a.target_post_id = "p" + std::to_string(testutil::draw(rng, 0, 399));
        a.action_type = testutil::draw(rng, 0, 1) ? ActionType::Share : ActionType::Quote;
        a.created_at = Timestamp::from_micros(
            day + testutil::draw(rng, 0, 86399) * 1'000'000);
        a.retrieved_at = ts("2023-05-20T00:00:00Z");
        recs.push_back(a);
    }
    store.insert_batch(recs);

    const auto all = store.query(Table::Actions, {});
    for (int trial = 0; trial < 30; ++trial) {
        Filter f;
        const bool want_share = testutil::draw(rng, 0, 1) == 1;
        f.clauses.push_back(FilterClause::eq(
            "action_type", std::string(want_share ? "SHARE" : "QUOTE")));
        const auto t0 = Timestamp::from_micros(day + testutil::draw(rng, 0, 43200) * 1'000'000);
        const auto t1 = Timestamp::from_micros(t0.micros() +
                                               testutil::draw(rng, 0, 43200) * 1'000'000);
        f.clauses.push_back(FilterClause::time_range("created_at", t0, t1));

        std::vector<nlohmann::json> expected;
        for (const auto& rec : all) {
            const auto& a = std::get<ActionRecord>(rec);
            if (a.action_type != (want_share ? ActionType::Share : ActionType::Quote))
                continue;
            if (!(a.created_at >= t0 && a.created_at < t1)) continue;
            expected.push_back(record_to_json(rec));
        }
        std::vector<nlohmann::json> got;
        for (const auto& rec : store.query(Table::Actions, f))
            got.push_back(record_to_json(rec));
        CHECK(got == expected);
    }
}

// received = inserted + deduplicated, and re-insertion changes nothing.
TEST_CASE("insert conservation and idempotence over random batches") {
    TempDir dir("store");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto rng = testutil::make_rng(99);

    for (int round = 0; round < 10; ++round) {
        std::vector<AnyRecord> batch;
        const int n = static_cast<int>(testutil::draw(rng, 1, 60));
        for (int i = 0; i < n; ++i) {
            const auto id = std::to_string(testutil::draw(rng, 0, 30));
            switch (testutil::draw(rng, 0, 2)) {
                case 0: batch.push_back(make_post("p" + id, "u1")); break;
                case 1: batch.push_back(make_account("u" + id)); break;
                default:
                    batch.push_back(testutil::make_entity(
                        "p" + id, EntityType::Hashtag, "#t" + id));
            }
        }
        auto report = store.insert_batch(batch);
        for (const auto& [table, c] : report.tables) {
            CAPTURE(table);
            CHECK(c.received == c.inserted + c.deduplicated);
        }

        std::map<Table, std::int64_t> before;
        for (Table t : kAllTables) before[t] = store.row_count(t);
        auto again = store.insert_batch(batch);
        CHECK(again.total_inserted() == 0);
        for (Table t : kAllTables) CHECK(store.row_count(t) == before[t]);
    }
}

TEST_CASE("unknown table names are rejected at the edges") {
    CHECK(!table_from_name("nope").has_value());
    CHECK(table_from_name("posts") == Table::Posts);
    CHECK(table_from_name("account_enrichments") == Table::AccountEnrichments);
}

}  // TEST_SUITE
