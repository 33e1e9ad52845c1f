#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdt/records.hpp"
#include "smdt/store.hpp"

namespace smdt {

struct TimeRange {
    Timestamp start, end;  // half-open [start, end)
};

enum class Weighting { Count, Binary };
std::string_view to_string(Weighting w);

// Weighted graph with frozen metadata keys {node_count, edge_count, kind,
// params, skipped} (+"exemplars" where node names are case-folded).
// Undirected edges are stored with endpoints in canonical order u <= v;
// bipartite edges run LEFT (accounts) to RIGHT (features) only.
struct Network {
    bool directed = false;
    bool bipartite = false;
    std::set<std::string> nodes;       // unipartite
    std::set<std::string> left_nodes;  // bipartite only
    std::set<std::string> right_nodes;
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    nlohmann::ordered_json meta;
};

struct NetworkWindow {
    Timestamp window_start, window_end;
    Network network;
};

// Accounts as nodes; an edge a->b aggregates actions of the given type that
// a originated targeting b. Targets resolve directly or through the target
// post's author. Edges below min_weight and then isolated nodes are removed.
Network build_user_interaction_network(const Store& store, ActionType interaction,
                                       const std::optional<TimeRange>& time_range,
                                       Weighting weighting, std::int64_t min_weight,
                                       bool directed = true);

// Consecutive half-open windows [start + k*step, min(start + (k+1)*step, end));
// a truncated final window is emitted, not dropped.
std::vector<NetworkWindow> user_interaction_over_time(
    const Store& store, ActionType interaction, Timestamp start_time, Timestamp end_time,
    std::chrono::microseconds step, Weighting weighting, std::int64_t min_weight,
    bool directed = true);

// Undirected network of entities that appear together within a post.
// Duplicate entities within one post collapse before pair counting.
Network build_cooccurrence_network(const Store& store, EntityType entity_type,
                                   const std::optional<TimeRange>& time_range,
                                   std::int64_t min_weight);

// Right-hand node class of a bipartite account-feature network.
enum class BipartiteFeature { Hashtag, Mention, Url, Email, MediaKey, Domain };
std::string_view to_string(BipartiteFeature f);
BipartiteFeature bipartite_feature_from_string(std::string_view s);

// Accounts on the left, features on the right; edge weight counts the
// account's posts containing the feature. DOMAIN nodes derive from URL
// entities by host extraction.
Network build_bipartite_network(const Store& store, BipartiteFeature right,
                                const std::optional<TimeRange>& time_range,
                                std::int64_t min_weight);

struct NodeMetrics {
    std::int64_t degree = 0;     // distinct neighbors ignoring direction
    double strength = 0.0;       // sum of incident edge weights
    double local_clustering = 0.0;  // 0 when degree < 2
};

// Degree, strength and local clustering on the simple undirected unweighted
// projection. Rejects bipartite networks.
std::map<std::string, NodeMetrics> node_metrics(const Network& network);

// Host of an http(s) URL: lowercased, "www." stripped, port dropped.
// nullopt when no host can be extracted.
std::optional<std::string> url_domain(std::string_view url);

// "u<TAB>v<TAB>weight" rows under a one-line header; byte format frozen by
// golden-file tests.
void write_edgelist(const Network& network, const std::filesystem::path& path);
std::string edgelist_text(const Network& network);

nlohmann::ordered_json network_to_json(const Network& network);
void write_network_json(const Network& network, const std::filesystem::path& path);

}  // namespace smdt
