#include "smdt/networks.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "smdt/errors.hpp"

namespace smdt {

using nlohmann::ordered_json;

std::string_view to_string(Weighting w) {
    return w == Weighting::Count ? "count" : "binary";
}

std::string_view to_string(BipartiteFeature f) {
    switch (f) {
        case BipartiteFeature::Hashtag: return "hashtag";
        case BipartiteFeature::Mention: return "mention";
        case BipartiteFeature::Url: return "url";
        case BipartiteFeature::Email: return "email";
        case BipartiteFeature::MediaKey: return "media_key";
        case BipartiteFeature::Domain: return "domain";
    }
    return "hashtag";
}

BipartiteFeature bipartite_feature_from_string(std::string_view s) {
    for (auto f : {BipartiteFeature::Hashtag, BipartiteFeature::Mention,
                   BipartiteFeature::Url, BipartiteFeature::Email,
                   BipartiteFeature::MediaKey, BipartiteFeature::Domain}) {
        if (s == to_string(f)) return f;
    }
    throw ValidationError("unknown bipartite feature kind: '" + std::string(s) + "'");
}

namespace {

std::string ascii_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

ordered_json time_range_json(const std::optional<TimeRange>& range) {
    if (!range) return nullptr;
    return ordered_json::array({range->start.to_iso(), range->end.to_iso()});
}

Filter actions_filter(ActionType interaction, const std::optional<TimeRange>& range) {
    Filter f;
    f.clauses.push_back(
        FilterClause::eq("action_type", std::string(to_string(interaction))));
    if (range)
        f.clauses.push_back(FilterClause::time_range("created_at", range->start, range->end));
    return f;
}

Filter entities_filter(EntityType type, const std::optional<TimeRange>& range) {
    Filter f;
    f.clauses.push_back(FilterClause::eq("entity_type", std::string(to_string(type))));
    if (range)
        f.clauses.push_back(FilterClause::time_range("created_at", range->start, range->end));
    return f;
}

// post_id -> author account_id; the earliest snapshot wins when a post has
// several.
std::map<std::string, std::string> author_index(const Store& store) {
    std::map<std::string, std::string> authors;
    store.scan(Table::Posts, [&](AnyRecord&& rec) {
        const auto& post = std::get<PostRecord>(rec);
        authors.emplace(post.post_id, post.account_id);
    });
    return authors;
}

void finalize_edges(Network& net,
                    std::map<std::pair<std::string, std::string>, std::int64_t>&& tally,
                    Weighting weighting, std::int64_t min_weight) {
    for (auto& [pair, count] : tally) {
        if (count < min_weight) continue;
        net.edges.emplace(pair, weighting == Weighting::Binary ? 1 : count);
    }
    for (const auto& [pair, _] : net.edges) {
        if (net.bipartite) {
            net.left_nodes.insert(pair.first);
            net.right_nodes.insert(pair.second);
        } else {
            net.nodes.insert(pair.first);
            net.nodes.insert(pair.second);
        }
    }
}

void attach_meta(Network& net, std::string kind, ordered_json params,
                 ordered_json skipped,
                 const std::optional<std::map<std::string, std::string>>& exemplars =
                     std::nullopt) {
    ordered_json meta;
    meta["node_count"] = net.bipartite
                             ? static_cast<std::int64_t>(net.left_nodes.size() +
                                                         net.right_nodes.size())
                             : static_cast<std::int64_t>(net.nodes.size());
    meta["edge_count"] = static_cast<std::int64_t>(net.edges.size());
    meta["kind"] = std::move(kind);
    meta["params"] = std::move(params);
    meta["skipped"] = std::move(skipped);
    if (exemplars) {
        auto& e = meta["exemplars"] = ordered_json::object();
        for (const auto& [norm, original] : *exemplars) e[norm] = original;
    }
    net.meta = std::move(meta);
}

}  // namespace

Network build_user_interaction_network(const Store& store, ActionType interaction,
                                       const std::optional<TimeRange>& time_range,
                                       Weighting weighting, std::int64_t min_weight,
                                       bool directed) {
    if (min_weight < 1) throw ValidationError("min_weight must be >= 1");
    const auto authors = author_index(store);

    std::int64_t unresolved_originators = 0;
    std::int64_t unresolved_targets = 0;
    std::int64_t self_loops = 0;
    std::map<std::pair<std::string, std::string>, std::int64_t> tally;

    for (const AnyRecord& rec : store.query(Table::Actions,
                                            actions_filter(interaction, time_range))) {
        const auto& action = std::get<ActionRecord>(rec);

        std::optional<std::string> source = action.originator_account_id;
        if (!source && action.originator_post_id) {
            if (auto it = authors.find(*action.originator_post_id); it != authors.end())
                source = it->second;
        }
        if (!source) {
            ++unresolved_originators;
            continue;
        }

        std::optional<std::string> target = action.target_account_id;
        if (!target && action.target_post_id) {
            if (auto it = authors.find(*action.target_post_id); it != authors.end())
                target = it->second;
        }
        if (!target) {
            ++unresolved_targets;
            continue;
        }

        if (*source == *target) {
            ++self_loops;
            continue;
        }

        std::pair<std::string, std::string> key(*source, *target);
        if (!directed && key.second < key.first) std::swap(key.first, key.second);
        tally[key] += 1;
    }

    Network net;
    net.directed = directed;
    finalize_edges(net, std::move(tally), weighting, min_weight);

    ordered_json params;
    params["interaction"] = std::string(to_string(interaction));
    params["weighting"] = std::string(to_string(weighting));
    params["min_weight"] = min_weight;
    params["directed"] = directed;
    params["time_range"] = time_range_json(time_range);
    ordered_json skipped;
    skipped["unresolved_originators"] = unresolved_originators;
    skipped["unresolved_targets"] = unresolved_targets;
    skipped["self_loops"] = self_loops;
    attach_meta(net, "interaction", std::move(params), std::move(skipped));
    return net;
}

std::vector<NetworkWindow> user_interaction_over_time(
    const Store& store, ActionType interaction, Timestamp start_time, Timestamp end_time,
    std::chrono::microseconds step, Weighting weighting, std::int64_t min_weight,
    bool directed) {
    if (step.count() <= 0) throw ValidationError("step must be positive");
    if (!(start_time < end_time)) throw ValidationError("start_time must be before end_time");

    std::vector<NetworkWindow> windows;
    for (std::int64_t ws = start_time.micros(); ws < end_time.micros();
         ws += step.count()) {
        const std::int64_t we = std::min(ws + step.count(), end_time.micros());
        NetworkWindow window;
        window.window_start = Timestamp::from_micros(ws);
        window.window_end = Timestamp::from_micros(we);
        window.network = build_user_interaction_network(
            store, interaction, TimeRange{window.window_start, window.window_end},
            weighting, min_weight, directed);
        windows.push_back(std::move(window));
    }
    return windows;
}

Network build_cooccurrence_network(const Store& store, EntityType entity_type,
                                   const std::optional<TimeRange>& time_range,
                                   std::int64_t min_weight) {
    if (min_weight < 1) throw ValidationError("min_weight must be >= 1");

    const bool fold_case = entity_type == EntityType::Hashtag;
    std::map<std::string, std::string> exemplars;

    // post -> distinct normalized bodies
    std::map<std::string, std::set<std::string>> per_post;
    for (const AnyRecord& rec :
         store.query(Table::Entities, entities_filter(entity_type, time_range))) {
        const auto& entity = std::get<EntityRecord>(rec);
        std::string body = fold_case ? ascii_lower(entity.body) : entity.body;
        if (fold_case) exemplars.try_emplace(body, entity.body);
        per_post[entity.post_id].insert(std::move(body));
    }

    std::map<std::pair<std::string, std::string>, std::int64_t> tally;
    for (const auto& [post_id, bodies] : per_post) {
        for (auto a = bodies.begin(); a != bodies.end(); ++a) {
            for (auto b = std::next(a); b != bodies.end(); ++b) {
                tally[{*a, *b}] += 1;  // set iteration keeps *a < *b
            }
        }
    }

    Network net;
    net.directed = false;
    finalize_edges(net, std::move(tally), Weighting::Count, min_weight);

    // Drop exemplars for nodes that fell below the threshold.
    std::map<std::string, std::string> kept;
    for (const auto& node : net.nodes) {
        if (auto it = exemplars.find(node); it != exemplars.end()) kept.emplace(*it);
    }

    ordered_json params;
    params["entity_type"] = std::string(to_string(entity_type));
    params["min_weight"] = min_weight;
    params["time_range"] = time_range_json(time_range);
    attach_meta(net, "cooccurrence", std::move(params), ordered_json::object(),
                fold_case ? std::optional(kept) : std::nullopt);
    return net;
}

std::optional<std::string> url_domain(std::string_view url) {
    const size_t scheme = url.find("://");
    if (scheme == std::string_view::npos) return std::nullopt;
    std::string_view rest = url.substr(scheme + 3);
    const size_t path = rest.find_first_of("/?#");
    std::string_view authority = path == std::string_view::npos ? rest : rest.substr(0, path);
    if (const size_t at = authority.rfind('@'); at != std::string_view::npos)
        authority = authority.substr(at + 1);
    if (const size_t colon = authority.find(':'); colon != std::string_view::npos)
        authority = authority.substr(0, colon);
    if (authority.empty()) return std::nullopt;
    std::string host = ascii_lower(std::string(authority));
    if (host.rfind("www.", 0) == 0) host.erase(0, 4);
    if (host.empty()) return std::nullopt;
    return host;
}

Network build_bipartite_network(const Store& store, BipartiteFeature right,
                                const std::optional<TimeRange>& time_range,
                                std::int64_t min_weight) {
    if (min_weight < 1) throw ValidationError("min_weight must be >= 1");

    EntityType source_type;
    switch (right) {
        case BipartiteFeature::Hashtag: source_type = EntityType::Hashtag; break;
        case BipartiteFeature::Mention: source_type = EntityType::Mention; break;
        case BipartiteFeature::Url:
        case BipartiteFeature::Domain: source_type = EntityType::Url; break;
        case BipartiteFeature::Email: source_type = EntityType::Email; break;
        case BipartiteFeature::MediaKey: source_type = EntityType::MediaKey; break;
    }

    const bool fold_case = right == BipartiteFeature::Hashtag;
    const auto authors = author_index(store);

    std::int64_t malformed_urls = 0;
    std::int64_t unresolved_posts = 0;
    std::map<std::string, std::string> exemplars;

    std::map<std::string, std::set<std::string>> per_post;
    for (const AnyRecord& rec :
         store.query(Table::Entities, entities_filter(source_type, time_range))) {
        const auto& entity = std::get<EntityRecord>(rec);
        std::string feature;
        if (right == BipartiteFeature::Domain) {
            auto host = url_domain(entity.body);
            if (!host) {
                ++malformed_urls;
                continue;
            }
            feature = std::move(*host);
        } else if (fold_case) {
            feature = ascii_lower(entity.body);
            exemplars.try_emplace(feature, entity.body);
        } else {
            feature = entity.body;
        }
        per_post[entity.post_id].insert(std::move(feature));
    }

    std::map<std::pair<std::string, std::string>, std::int64_t> tally;
    for (const auto& [post_id, features] : per_post) {
        auto author = authors.find(post_id);
        if (author == authors.end()) {
            ++unresolved_posts;
            continue;
        }
        for (const auto& feature : features) tally[{author->second, feature}] += 1;
    }

    Network net;
    net.directed = false;
    net.bipartite = true;
    finalize_edges(net, std::move(tally), Weighting::Count, min_weight);

    std::map<std::string, std::string> kept;
    for (const auto& node : net.right_nodes) {
        if (auto it = exemplars.find(node); it != exemplars.end()) kept.emplace(*it);
    }

    ordered_json params;
    params["left"] = "account";
    params["right"] = std::string(to_string(right));
    params["min_weight"] = min_weight;
    params["time_range"] = time_range_json(time_range);
    ordered_json skipped;
    skipped["malformed_urls"] = malformed_urls;
    skipped["unresolved_posts"] = unresolved_posts;
    attach_meta(net, "bipartite", std::move(params), std::move(skipped),
                fold_case ? std::optional(kept) : std::nullopt);
    return net;
}

std::map<std::string, NodeMetrics> node_metrics(const Network& network) {
    if (network.bipartite)
        throw ValidationError("local clustering is undefined on bipartite networks");

    std::map<std::string, std::set<std::string>> adjacency;
    std::map<std::string, double> strength;
    for (const auto& node : network.nodes) {
        adjacency[node];
        strength[node] = 0.0;
    }
    for (const auto& [pair, weight] : network.edges) {
        adjacency[pair.first].insert(pair.second);
        adjacency[pair.second].insert(pair.first);
        strength[pair.first] += static_cast<double>(weight);
        strength[pair.second] += static_cast<double>(weight);
    }

    std::map<std::string, NodeMetrics> out;
    for (const auto& [node, neighbors] : adjacency) {
        NodeMetrics m;
        m.degree = static_cast<std::int64_t>(neighbors.size());
        m.strength = strength[node];
        if (m.degree >= 2) {
            std::int64_t closed = 0;
            for (auto a = neighbors.begin(); a != neighbors.end(); ++a) {
                for (auto b = std::next(a); b != neighbors.end(); ++b) {
                    if (adjacency.at(*a).count(*b) > 0) ++closed;
                }
            }
            const double possible =
                static_cast<double>(m.degree) * static_cast<double>(m.degree - 1) / 2.0;
            m.local_clustering = static_cast<double>(closed) / possible;
        }
        out.emplace(node, m);
    }
    return out;
}

std::string edgelist_text(const Network& network) {
    std::string out = "source\ttarget\tweight\n";
    for (const auto& [pair, weight] : network.edges) {
        out += pair.first;
        out += '\t';
        out += pair.second;
        out += '\t';
        out += std::to_string(weight);
        out += '\n';
    }
    return out;
}

void write_edgelist(const Network& network, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) throw StoreError("cannot open edge-list path: " + path.string());
    out << edgelist_text(network);
    out.flush();
    if (!out.good()) throw StoreError("write failed: " + path.string());
}

nlohmann::ordered_json network_to_json(const Network& network) {
    ordered_json j;
    j["directed"] = network.directed;
    j["bipartite"] = network.bipartite;
    if (network.bipartite) {
        ordered_json nodes;
        nodes["left"] = network.left_nodes;
        nodes["right"] = network.right_nodes;
        j["nodes"] = std::move(nodes);
    } else {
        j["nodes"] = network.nodes;
    }
    auto& edges = j["edges"] = ordered_json::array();
    for (const auto& [pair, weight] : network.edges) {
        edges.push_back(ordered_json::array({pair.first, pair.second, weight}));
    }
    j["meta"] = network.meta;
    return j;
}

void write_network_json(const Network& network, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) throw StoreError("cannot open network path: " + path.string());
    out << network_to_json(network).dump(2) << '\n';
    out.flush();
    if (!out.good()) throw StoreError("write failed: " + path.string());
}

}  // namespace smdt
