#include <doctest.h>

#include <chrono>
#include <set>

#include "smdt/errors.hpp"
#include "smdt/networks.hpp"
#include "smdt/store.hpp"
#include "testutil.hpp"

using namespace smdt;
using testutil::make_account;
using testutil::make_post;
using testutil::make_share;
using testutil::TempDir;
using testutil::ts;

namespace {

std::string iso_hour(int hour, int minute = 0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2023-05-14T%02d:%02d:00Z", hour, minute);
    return buf;
}

// posts p_a..p_c authored by a, b, c so SHARE targets resolve via authorship
void seed_authors(Store& store) {
    std::vector<AnyRecord> recs;
    for (const char* who : {"a", "b", "c"}) {
        recs.push_back(make_post(std::string("p_") + who, who, "2023-05-14T00:00:00Z"));
    }
    store.insert_batch(recs);
}

void add_share(std::vector<AnyRecord>& recs, const std::string& actor,
               const std::string& target_post, const std::string& created,
               int disambiguator) {
    auto share = make_share(actor, "sp" + std::to_string(disambiguator), target_post);
    share.created_at = Timestamp::parse(created);
    recs.push_back(share);
}

}  // namespace

TEST_SUITE("networks") {

TEST_CASE("interaction network thresholds edges and prunes isolates") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    seed_authors(store);
    std::vector<AnyRecord> recs;
    // 3 shares a->b, 1 share a->c
    add_share(recs, "a", "p_b", iso_hour(1, 0), 1);
    add_share(recs, "a", "p_b", iso_hour(1, 10), 2);
    add_share(recs, "a", "p_b", iso_hour(1, 20), 3);
    add_share(recs, "a", "p_c", iso_hour(1, 30), 4);
    store.insert_batch(recs);

    SUBCASE("min_weight 3 with COUNT keeps the single heavy edge") {
        const auto net = build_user_interaction_network(store, ActionType::Share,
                                                        std::nullopt, Weighting::Count,
                                                        3, true);
        REQUIRE(net.edges.size() == 1);
        CHECK(net.edges.at({"a", "b"}) == 3);
        CHECK(net.nodes == std::set<std::string>{"a", "b"});  // c pruned as isolate
        CHECK(net.meta["edge_count"] == 1);
        CHECK(net.meta["node_count"] == 2);
    }

    SUBCASE("min_weight 1 with BINARY binarizes both edges") {
        const auto net = build_user_interaction_network(store, ActionType::Share,
                                                        std::nullopt, Weighting::Binary,
                                                        1, true);
        CHECK(net.edges.size() == 2);
        CHECK(net.edges.at({"a", "b"}) == 1);
        CHECK(net.edges.at({"a", "c"}) == 1);
    }

    SUBCASE("empty range gives an empty network") {
        const auto net = build_user_interaction_network(
            store, ActionType::Share,
            TimeRange{ts("2023-05-13T00:00:00Z"), ts("2023-05-13T01:00:00Z")},
            Weighting::Count, 1, true);
        CHECK(net.edges.empty());
        CHECK(net.nodes.empty());
        CHECK(net.meta["edge_count"] == 0);
    }
}

TEST_CASE("targets resolve through the target post's author; leftovers are counted") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    seed_authors(store);
    std::vector<AnyRecord> recs;
    add_share(recs, "a", "p_b", iso_hour(2), 1);     // resolves via author map
    add_share(recs, "a", "p_missing", iso_hour(2, 10), 2);  // unresolvable
    add_share(recs, "b", "p_b", iso_hour(2, 20), 3);  // self share -> skipped
    ActionRecord direct;                              // target account given directly
    direct.originator_account_id = "c";
    direct.target_account_id = "a";
    direct.target_post_id = "p_a";
    direct.action_type = ActionType::Share;
    direct.created_at = Timestamp::parse(iso_hour(2, 30));
    direct.retrieved_at = ts("2023-05-20T00:00:00Z");
    recs.push_back(direct);
    store.insert_batch(recs);

    const auto net = build_user_interaction_network(store, ActionType::Share,
                                                    std::nullopt, Weighting::Count, 1,
                                                    true);
    CHECK(net.edges.size() == 2);
    CHECK(net.edges.count({"a", "b"}) == 1);
    CHECK(net.edges.count({"c", "a"}) == 1);
    CHECK(net.meta["skipped"]["unresolved_targets"] == 1);
    CHECK(net.meta["skipped"]["self_loops"] == 1);
}

TEST_CASE("temporal windows partition the range") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    seed_authors(store);
    std::vector<AnyRecord> recs;
    for (int h = 0; h < 24; ++h) add_share(recs, "a", "p_b", iso_hour(h, 30), 100 + h);
    store.insert_batch(recs);

    SUBCASE("a whole day at 1h steps gives 24 windows") {
        const auto windows = user_interaction_over_time(
            store, ActionType::Share, ts("2023-05-14T00:00:00Z"),
            ts("2023-05-15T00:00:00Z"), std::chrono::hours(1), Weighting::Count, 1, true);
        REQUIRE(windows.size() == 24);
        CHECK(windows.front().window_start == ts("2023-05-14T00:00:00Z"));
        CHECK(windows.front().window_end == ts("2023-05-14T01:00:00Z"));
        CHECK(windows.back().window_start == ts("2023-05-14T23:00:00Z"));
        CHECK(windows.back().window_end == ts("2023-05-15T00:00:00Z"));
        for (const auto& w : windows) CHECK(w.network.edges.at({"a", "b"}) == 1);
    }

    SUBCASE("a 90 minute span at 1h steps emits a truncated tail window") {
        const auto windows = user_interaction_over_time(
            store, ActionType::Share, ts("2023-05-14T00:00:00Z"),
            ts("2023-05-14T01:30:00Z"), std::chrono::hours(1), Weighting::Count, 1, true);
        REQUIRE(windows.size() == 2);
        CHECK(windows[1].window_start == ts("2023-05-14T01:00:00Z"));
        CHECK(windows[1].window_end == ts("2023-05-14T01:30:00Z"));
    }

    SUBCASE("window weights add up to the brute-force action count") {
        const auto start = ts("2023-05-14T00:00:00Z");
        const auto end = ts("2023-05-15T00:00:00Z");
        const auto windows = user_interaction_over_time(
            store, ActionType::Share, start, end, std::chrono::hours(1),
            Weighting::Count, 1, true);
        std::int64_t window_sum = 0;
        for (const auto& w : windows) {
            for (const auto& [_, weight] : w.network.edges) window_sum += weight;
        }
        // brute force over the actions table
        std::int64_t expected = 0;
        store.scan(Table::Actions, [&](AnyRecord&& rec) {
            const auto& a = std::get<ActionRecord>(rec);
            if (a.action_type != ActionType::Share) return;
            if (a.created_at >= start && a.created_at < end) ++expected;
        });
        CHECK(window_sum == expected);
    }

    SUBCASE("bad arguments are rejected") {
        CHECK_THROWS_AS(user_interaction_over_time(
                            store, ActionType::Share, ts("2023-05-14T00:00:00Z"),
                            ts("2023-05-15T00:00:00Z"), std::chrono::hours(0),
                            Weighting::Count, 1, true),
                        ValidationError);
        CHECK_THROWS_AS(user_interaction_over_time(
                            store, ActionType::Share, ts("2023-05-15T00:00:00Z"),
                            ts("2023-05-14T00:00:00Z"), std::chrono::hours(1),
                            Weighting::Count, 1, true),
                        ValidationError);
    }
}

TEST_CASE("threshold monotonicity and COUNT/BINARY consistency") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto rng = testutil::make_rng(51);
    std::vector<AnyRecord> recs;
    for (int i = 0; i < 12; ++i) {
        recs.push_back(
            make_post("rp" + std::to_string(i), "acct" + std::to_string(i % 5),
                      "2023-05-14T00:00:00Z"));
    }
    for (int i = 0; i < 150; ++i) {
        auto share = make_share("acct" + std::to_string(testutil::draw(rng, 0, 4)),
                                "s" + std::to_string(i),
                                "rp" + std::to_string(testutil::draw(rng, 0, 11)));
        share.created_at = Timestamp::from_micros(
            ts("2023-05-14T00:00:00Z").micros() + testutil::draw(rng, 0, 86399) * 1'000'000);
        recs.push_back(share);
    }
    store.insert_batch(recs);

    std::set<std::pair<std::string, std::string>> previous_edges;
    bool first = true;
    for (std::int64_t mw : {1, 2, 3, 5, 8}) {
        const auto count_net = build_user_interaction_network(
            store, ActionType::Share, std::nullopt, Weighting::Count, mw, true);
        const auto binary_net = build_user_interaction_network(
            store, ActionType::Share, std::nullopt, Weighting::Binary, mw, true);

        std::set<std::pair<std::string, std::string>> edges, binary_edges;
        for (const auto& [pair, w] : count_net.edges) {
            CHECK(w >= mw);
            edges.insert(pair);
        }
        for (const auto& [pair, w] : binary_net.edges) {
            CHECK(w == 1);
            binary_edges.insert(pair);
        }
        CHECK(edges == binary_edges);  // same survivors, different weights

        if (!first) {
            for (const auto& e : edges) CHECK(previous_edges.count(e) == 1);
        }
        previous_edges = edges;
        first = false;
    }
}

TEST_CASE("co-occurrence counting") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);

    SUBCASE("one post with three hashtags forms a triangle") {
        std::vector<AnyRecord> recs = {
            testutil::make_entity("p1", EntityType::Hashtag, "#a"),
            testutil::make_entity("p1", EntityType::Hashtag, "#b"),
            testutil::make_entity("p1", EntityType::Hashtag, "#c"),
        };
        store.insert_batch(recs);
        const auto net = build_cooccurrence_network(store, EntityType::Hashtag,
                                                    std::nullopt, 1);
        CHECK(net.edges.size() == 3);
        for (const auto& [_, w] : net.edges) CHECK(w == 1);
        CHECK(!net.directed);
    }

    SUBCASE("repeated pairs accumulate weight; case folds") {
        std::vector<AnyRecord> recs = {
            testutil::make_entity("p1", EntityType::Hashtag, "#A"),
            testutil::make_entity("p1", EntityType::Hashtag, "#b"),
            testutil::make_entity("p2", EntityType::Hashtag, "#a"),
            testutil::make_entity("p2", EntityType::Hashtag, "#B"),
        };
        store.insert_batch(recs);
        const auto net = build_cooccurrence_network(store, EntityType::Hashtag,
                                                    std::nullopt, 1);
        REQUIRE(net.edges.size() == 1);
        CHECK(net.edges.at({"#a", "#b"}) == 2);
        CHECK(net.meta["exemplars"]["#a"] == "#A");  // first-seen casing
    }

    SUBCASE("duplicates within one post collapse before pairing") {
        std::vector<AnyRecord> recs = {
            testutil::make_entity("p1", EntityType::Hashtag, "#x", "2023-05-14T10:00:00Z"),
            testutil::make_entity("p1", EntityType::Hashtag, "#x", "2023-05-14T11:00:00Z"),
            testutil::make_entity("p1", EntityType::Hashtag, "#y"),
        };
        store.insert_batch(recs);
        const auto net = build_cooccurrence_network(store, EntityType::Hashtag,
                                                    std::nullopt, 1);
        REQUIRE(net.edges.size() == 1);
        CHECK(net.edges.at({"#x", "#y"}) == 1);
    }
}

TEST_CASE("co-occurrence weights equal quadratic per-post counting") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    auto rng = testutil::make_rng(61);
    std::vector<AnyRecord> recs;
    for (int p = 0; p < 120; ++p) {
        const int k = static_cast<int>(testutil::draw(rng, 0, 4));
        for (int i = 0; i < k; ++i) {
            recs.push_back(testutil::make_entity(
                "p" + std::to_string(p), EntityType::Hashtag,
                "#t" + std::to_string(testutil::draw(rng, 0, 9))));
        }
    }
    auto report = store.insert_batch(recs);
    (void)report;  // duplicates within a post are expected and fine

    // quadratic oracle over the stored entities
    std::map<std::string, std::set<std::string>> per_post;
    store.scan(Table::Entities, [&](AnyRecord&& rec) {
        const auto& e = std::get<EntityRecord>(rec);
        per_post[e.post_id].insert(e.body);  // bodies are lowercase already
    });
    std::map<std::pair<std::string, std::string>, std::int64_t> expected;
    for (const auto& [post, tags] : per_post) {
        for (auto a = tags.begin(); a != tags.end(); ++a) {
            for (auto b = std::next(a); b != tags.end(); ++b) expected[{*a, *b}] += 1;
        }
    }

    const auto net = build_cooccurrence_network(store, EntityType::Hashtag, std::nullopt, 1);
    CHECK(net.edges == expected);

    // symmetry by construction: canonical ordering
    for (const auto& [pair, _] : net.edges) CHECK(pair.first <= pair.second);
}

TEST_CASE("bipartite account-feature networks") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);

    SUBCASE("two posts with the same hashtag give weight 2") {
        std::vector<AnyRecord> recs = {
            make_post("p1", "a", "2023-05-14T01:00:00Z"),
            make_post("p2", "a", "2023-05-14T02:00:00Z"),
            testutil::make_entity("p1", EntityType::Hashtag, "#x"),
            testutil::make_entity("p2", EntityType::Hashtag, "#x"),
        };
        store.insert_batch(recs);
        const auto net =
            build_bipartite_network(store, BipartiteFeature::Hashtag, std::nullopt, 1);
        CHECK(net.bipartite);
        REQUIRE(net.edges.size() == 1);
        CHECK(net.edges.at({"a", "#x"}) == 2);
        CHECK(net.left_nodes == std::set<std::string>{"a"});
        CHECK(net.right_nodes == std::set<std::string>{"#x"});
    }

    SUBCASE("domain extraction lowers case, strips www and drops port") {
        std::vector<AnyRecord> recs = {
            make_post("p1", "a", "2023-05-14T01:00:00Z"),
            testutil::make_entity("p1", EntityType::Url,
                                  "https://www.Example.org:443/p"),
        };
        store.insert_batch(recs);
        const auto net =
            build_bipartite_network(store, BipartiteFeature::Domain, std::nullopt, 1);
        REQUIRE(net.edges.size() == 1);
        CHECK(net.edges.count({"a", "example.org"}) == 1);
    }

    SUBCASE("empty store yields an empty bipartite network") {
        const auto net =
            build_bipartite_network(store, BipartiteFeature::Domain, std::nullopt, 1);
        CHECK(net.edges.empty());
        CHECK(net.meta["edge_count"] == 0);
    }

    SUBCASE("malformed url entities are skipped and counted") {
        std::vector<AnyRecord> recs = {
            make_post("p1", "a", "2023-05-14T01:00:00Z"),
            testutil::make_entity("p1", EntityType::Url, "https://"),
        };
        store.insert_batch(recs);
        const auto net =
            build_bipartite_network(store, BipartiteFeature::Domain, std::nullopt, 1);
        CHECK(net.edges.empty());
        CHECK(net.meta["skipped"]["malformed_urls"] == 1);
    }
}

TEST_CASE("url_domain normalization table") {
    CHECK(url_domain("https://www.Example.org:443/p") == "example.org");
    CHECK(url_domain("http://news.site/a?b=1") == "news.site");
    CHECK(url_domain("https://user:pw@Host.io/x") == "host.io");
    CHECK(url_domain("https://example.org") == "example.org");
    CHECK(url_domain("no scheme") == std::nullopt);
    CHECK(url_domain("https://") == std::nullopt);
}

TEST_CASE("node metrics on fixed graphs") {
    Network triangle;
    triangle.directed = false;
    triangle.nodes = {"a", "b", "c"};
    triangle.edges = {{{"a", "b"}, 1}, {{"a", "c"}, 1}, {{"b", "c"}, 1}};

    auto metrics = node_metrics(triangle);
    for (const auto& [node, m] : metrics) {
        CAPTURE(node);
        CHECK(m.degree == 2);
        CHECK(m.local_clustering == doctest::Approx(1.0));
        CHECK(m.strength == doctest::Approx(2.0));
    }

    Network path;
    path.directed = false;
    path.nodes = {"a", "b", "c"};
    path.edges = {{{"a", "b"}, 2}, {{"b", "c"}, 3}};
    metrics = node_metrics(path);
    CHECK(metrics.at("b").degree == 2);
    CHECK(metrics.at("b").local_clustering == doctest::Approx(0.0));
    CHECK(metrics.at("b").strength == doctest::Approx(5.0));
    CHECK(metrics.at("a").degree == 1);
    CHECK(metrics.at("a").local_clustering == doctest::Approx(0.0));  // degree < 2

    Network bip;
    bip.bipartite = true;
    CHECK_THROWS_AS(node_metrics(bip), ValidationError);
}

TEST_CASE("clustering equals brute-force triangle enumeration on random graphs") {
    auto rng = testutil::make_rng(71);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = static_cast<int>(testutil::draw(rng, 2, 50));
        Network net;
        net.directed = false;
        std::vector<std::string> names;
        for (int i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (testutil::draw(rng, 0, 99) < 25) {
                    net.edges[{names[i], names[j]}] =
                        testutil::draw(rng, 1, 9);
                    net.nodes.insert(names[i]);
                    net.nodes.insert(names[j]);
                }
            }
        }

        const auto metrics = node_metrics(net);

        // O(n^3) oracle on the adjacency matrix
        std::map<std::string, int> index;
        int k = 0;
        for (const auto& node : net.nodes) index[node] = k++;
        std::vector<std::vector<bool>> adj(static_cast<size_t>(k),
                                           std::vector<bool>(static_cast<size_t>(k)));
        for (const auto& [pair, _] : net.edges) {
            adj[index[pair.first]][index[pair.second]] = true;
            adj[index[pair.second]][index[pair.first]] = true;
        }
        for (const auto& node : net.nodes) {
            const int u = index[node];
            int degree = 0;
            for (int v = 0; v < k; ++v) degree += adj[u][v] ? 1 : 0;
            std::int64_t triangles = 0;
            for (int v = 0; v < k; ++v) {
                if (!adj[u][v]) continue;
                for (int w = v + 1; w < k; ++w) {
                    if (adj[u][w] && adj[v][w]) ++triangles;
                }
            }
            const double expected =
                degree < 2 ? 0.0
                           : double(triangles) / (double(degree) * (degree - 1) / 2.0);
            CAPTURE(trial);
            CAPTURE(node);
            CHECK(metrics.at(node).degree == degree);
            CHECK(metrics.at(node).local_clustering == doctest::Approx(expected));
        }
    }
}

TEST_CASE("edge-list bytes are frozen") {
    Network net;
    net.directed = true;
    net.nodes = {"a", "b", "c"};
    net.edges = {{{"a", "b"}, 3}, {{"b", "c"}, 1}};
    CHECK(edgelist_text(net) ==
          "source\ttarget\tweight\n"
          "a\tb\t3\n"
          "b\tc\t1\n");
}

TEST_CASE("network json shape is frozen") {
    TempDir dir("net");
    auto store = Store::open(dir.file("db"), OpenMode::Overwrite);
    seed_authors(store);
    std::vector<AnyRecord> recs;
    add_share(recs, "a", "p_b", iso_hour(3), 1);
    store.insert_batch(recs);
    const auto net = build_user_interaction_network(store, ActionType::Share,
                                                    std::nullopt, Weighting::Count, 1,
                                                    true);
    const auto j = network_to_json(net);
    CHECK(j["directed"] == true);
    CHECK(j["bipartite"] == false);
    CHECK(j["nodes"] == std::vector<std::string>{"a", "b"});
    CHECK(j["edges"][0][0] == "a");
    CHECK(j["edges"][0][2] == 1);
    // frozen meta keys, in order
    std::vector<std::string> keys;
    for (const auto& [key, _] : j["meta"].items()) keys.push_back(key);
    CHECK(keys == std::vector<std::string>{"node_count", "edge_count", "kind", "params",
                                           "skipped"});
    CHECK(j["meta"]["kind"] == "interaction");
    CHECK(j["meta"]["params"]["interaction"] == "SHARE");
}

}  // TEST_SUITE
