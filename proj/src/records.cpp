#include "smdt/records.hpp"

#include <nlohmann/json.hpp>

#include "smdt/errors.hpp"

namespace smdt {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(CommunityType t) {
    return t == CommunityType::Channel ? "CHANNEL" : "GROUP";
}

std::string_view to_string(ActionType t) {
    switch (t) {
        case ActionType::Like: return "LIKE";
        case ActionType::Upvote: return "UPVOTE";
        case ActionType::Downvote: return "DOWNVOTE";
        case ActionType::Share: return "SHARE";
        case ActionType::Quote: return "QUOTE";
        case ActionType::Reply: return "REPLY";
        case ActionType::Mention: return "MENTION";
        case ActionType::Follow: return "FOLLOW";
        case ActionType::Block: return "BLOCK";
        case ActionType::Link: return "LINK";
    }
    return "LIKE";
}

std::string_view to_string(EntityType t) {
    switch (t) {
        case EntityType::Hashtag: return "HASHTAG";
        case EntityType::Mention: return "MENTION";
        case EntityType::Url: return "URL";
        case EntityType::Email: return "EMAIL";
        case EntityType::MediaKey: return "MEDIA_KEY";
    }
    return "HASHTAG";
}

std::string_view to_string(EnrichmentTargetKind t) {
    return t == EnrichmentTargetKind::Account ? "ACCOUNT" : "POST";
}

CommunityType community_type_from_string(std::string_view s) {
    if (s == "CHANNEL") return CommunityType::Channel;
    if (s == "GROUP") return CommunityType::Group;
    throw ValidationError("unknown community_type: '" + std::string(s) + "'");
}

ActionType action_type_from_string(std::string_view s) {
    for (auto t : {ActionType::Like, ActionType::Upvote, ActionType::Downvote,
                   ActionType::Share, ActionType::Quote, ActionType::Reply,
                   ActionType::Mention, ActionType::Follow, ActionType::Block,
                   ActionType::Link}) {
        if (s == to_string(t)) return t;
    }
    throw ValidationError("unknown action_type: '" + std::string(s) + "'");
}

EntityType entity_type_from_string(std::string_view s) {
    for (auto t : {EntityType::Hashtag, EntityType::Mention, EntityType::Url,
                   EntityType::Email, EntityType::MediaKey}) {
        if (s == to_string(t)) return t;
    }
    throw ValidationError("unknown entity_type: '" + std::string(s) + "'");
}

EnrichmentTargetKind target_kind_from_string(std::string_view s) {
    if (s == "ACCOUNT") return EnrichmentTargetKind::Account;
    if (s == "POST") return EnrichmentTargetKind::Post;
    throw ValidationError("unknown target_kind: '" + std::string(s) + "'");
}

namespace {

std::optional<std::string> check_counts(
    std::initializer_list<std::pair<const char*, const std::optional<std::int64_t>*>> counts) {
    for (const auto& [name, value] : counts) {
        if (value->has_value() && **value < 0) {
            return std::string(name) + " must be >= 0";
        }
    }
    return std::nullopt;
}

std::optional<std::string> check_location(const std::optional<GeoPoint>& loc) {
    if (!loc) return std::nullopt;
    if (loc->lat < -90.0 || loc->lat > 90.0) return "location lat out of [-90, 90]";
    if (loc->lon < -180.0 || loc->lon > 180.0) return "location lon out of [-180, 180]";
    return std::nullopt;
}

}  // namespace

std::optional<std::string> validate(const CommunityRecord& r) {
    if (r.community_id.empty()) return "community_id is empty";
    if (auto e = check_counts({{"member_count", &r.member_count},
                               {"post_count", &r.post_count}}))
        return e;
    if (r.created_at && *r.created_at > r.retrieved_at)
        return "created_at is after retrieved_at";
    return std::nullopt;
}

std::optional<std::string> validate(const AccountRecord& r) {
    if (r.account_id.empty()) return "account_id is empty";
    if (auto e = check_counts({{"post_count", &r.post_count},
                               {"friend_count", &r.friend_count},
                               {"follower_count", &r.follower_count}}))
        return e;
    if (auto e = check_location(r.location)) return e;
    if (r.created_at && *r.created_at > r.retrieved_at)
        return "created_at is after retrieved_at";
    return std::nullopt;
}

std::optional<std::string> validate(const PostRecord& r) {
    if (r.post_id.empty()) return "post_id is empty";
    if (r.account_id.empty()) return "account_id is empty";
    if (auto e = check_counts({{"like_count", &r.like_count},
                               {"dislike_count", &r.dislike_count},
                               {"view_count", &r.view_count},
                               {"share_count", &r.share_count},
                               {"comment_count", &r.comment_count},
                               {"quote_count", &r.quote_count},
                               {"bookmark_count", &r.bookmark_count}}))
        return e;
    if (auto e = check_location(r.location)) return e;
    if (r.created_at > r.retrieved_at) return "created_at is after retrieved_at";
    return std::nullopt;
}

std::optional<std::string> validate(const ActionRecord& r) {
    const bool has_orig = r.originator_account_id || r.originator_post_id;
    const bool has_target = r.target_account_id || r.target_post_id;
    if (!has_orig) return "action has no originator";
    if (!has_target) return "action has no target";
    for (const auto* id : {&r.originator_account_id, &r.originator_post_id,
                           &r.target_account_id, &r.target_post_id}) {
        if (id->has_value() && (*id)->empty()) return "action id field is empty";
    }
    if (r.action_type == ActionType::Follow || r.action_type == ActionType::Block) {
        if (!r.originator_account_id || !r.target_account_id)
            return std::string(to_string(r.action_type)) +
                   " requires originator_account_id and target_account_id";
    }
    if (r.action_type == ActionType::Share || r.action_type == ActionType::Quote ||
        r.action_type == ActionType::Reply) {
        if (!r.target_post_id)
            return std::string(to_string(r.action_type)) + " requires target_post_id";
    }
    return std::nullopt;
}

std::optional<std::string> validate(const EntityRecord& r) {
    if (r.post_id.empty()) return "post_id is empty";
    if (r.body.empty()) return "entity body is empty";
    if (r.entity_type == EntityType::Hashtag && r.body.front() != '#')
        return "HASHTAG body must start with '#'";
    if (r.entity_type == EntityType::Mention && r.body.front() != '@')
        return "MENTION body must start with '@'";
    return std::nullopt;
}

std::optional<std::string> validate(const EnrichmentRecord& r) {
    if (r.target_id.empty()) return "target_id is empty";
    if (r.model_id.empty()) return "model_id is empty";
    const json parsed = json::parse(r.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        return "enrichment body does not parse as a JSON object";
    return std::nullopt;
}

std::optional<std::string> validate(const AnyRecord& r) {
    return std::visit([](const auto& rec) { return validate(rec); }, r);
}

std::string_view table_name(Table t) {
    switch (t) {
        case Table::Communities: return "communities";
        case Table::Accounts: return "accounts";
        case Table::Posts: return "posts";
        case Table::Actions: return "actions";
        case Table::Entities: return "entities";
        case Table::AccountEnrichments: return "account_enrichments";
        case Table::PostEnrichments: return "post_enrichments";
    }
    return "posts";
}

std::optional<Table> table_from_name(std::string_view name) {
    for (Table t : kAllTables) {
        if (table_name(t) == name) return t;
    }
    return std::nullopt;
}

Table table_of(const AnyRecord& r) {
    struct Visitor {
        Table operator()(const CommunityRecord&) const { return Table::Communities; }
        Table operator()(const AccountRecord&) const { return Table::Accounts; }
        Table operator()(const PostRecord&) const { return Table::Posts; }
        Table operator()(const ActionRecord&) const { return Table::Actions; }
        Table operator()(const EntityRecord&) const { return Table::Entities; }
        Table operator()(const EnrichmentRecord& e) const {
            return e.target_kind == EnrichmentTargetKind::Account
                       ? Table::AccountEnrichments
                       : Table::PostEnrichments;
        }
    };
    return std::visit(Visitor{}, r);
}

const std::vector<std::string>& table_fields(Table t) {
    static const std::vector<std::string> communities = {
        "community_id", "community_type", "community_username", "community_name",
        "bio",          "is_public",      "member_count",       "post_count",
        "profile_image_url", "owner_account_id", "created_at", "retrieved_at"};
    static const std::vector<std::string> accounts = {
        "account_id",  "user_name",      "profile_name",      "bio",
        "location",    "post_count",     "friend_count",      "follower_count",
        "is_verified", "profile_image_url", "created_at",     "retrieved_at"};
    static const std::vector<std::string> posts = {
        "post_id",       "account_id",  "conversation_id", "community_id",
        "body",          "location",    "like_count",      "dislike_count",
        "view_count",    "share_count", "comment_count",   "quote_count",
        "bookmark_count", "created_at", "retrieved_at"};
    static const std::vector<std::string> actions = {
        "originator_account_id", "originator_post_id", "target_account_id",
        "target_post_id",        "action_type",        "created_at",
        "retrieved_at"};
    static const std::vector<std::string> entities = {
        "post_id", "body", "entity_type", "created_at", "retrieved_at"};
    static const std::vector<std::string> account_enrichments = {
        "account_id", "model_id", "body", "created_at", "retrieved_at"};
    static const std::vector<std::string> post_enrichments = {
        "post_id", "model_id", "body", "created_at", "retrieved_at"};
    switch (t) {
        case Table::Communities: return communities;
        case Table::Accounts: return accounts;
        case Table::Posts: return posts;
        case Table::Actions: return actions;
        case Table::Entities: return entities;
        case Table::AccountEnrichments: return account_enrichments;
        case Table::PostEnrichments: return post_enrichments;
    }
    return posts;
}

namespace {

ordered_json opt_str(const std::optional<std::string>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}
ordered_json opt_int(const std::optional<std::int64_t>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}
ordered_json opt_bool(const std::optional<bool>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}
ordered_json opt_time(const std::optional<Timestamp>& v) {
    return v ? ordered_json(v->to_iso()) : ordered_json(nullptr);
}
ordered_json opt_geo(const std::optional<GeoPoint>& v) {
    if (!v) return nullptr;
    return ordered_json::array({v->lat, v->lon});
}

// Readers used when parsing the interchange form back into records.
std::optional<std::string> get_opt_str(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(std::string(key) + " must be a string");
    return it->get<std::string>();
}

std::string get_req_str(const json& j, const char* key) {
    auto v = get_opt_str(j, key);
    if (!v) throw ValidationError(std::string("missing required field ") + key);
    return *v;
}

std::optional<std::int64_t> get_opt_int(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer())
        throw ValidationError(std::string(key) + " must be an integer");
    return it->get<std::int64_t>();
}

std::optional<bool> get_opt_bool(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_boolean()) throw ValidationError(std::string(key) + " must be a boolean");
    return it->get<bool>();
}

std::optional<Timestamp> get_opt_time(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(std::string(key) + " must be a timestamp");
    return Timestamp::parse(it->get<std::string>());
}

Timestamp get_req_time(const json& j, const char* key) {
    auto v = get_opt_time(j, key);
    if (!v) throw ValidationError(std::string("missing required field ") + key);
    return *v;
}

std::optional<GeoPoint> get_opt_geo(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
        !(*it)[1].is_number())
        throw ValidationError(std::string(key) + " must be a [lat, lon] pair");
    return GeoPoint{(*it)[0].get<double>(), (*it)[1].get<double>()};
}

}  // namespace

nlohmann::ordered_json record_to_json(const AnyRecord& rec) {
    struct Visitor {
        ordered_json operator()(const CommunityRecord& r) const {
            ordered_json j;
            j["community_id"] = r.community_id;
            j["community_type"] = std::string(to_string(r.community_type));
            j["community_username"] = opt_str(r.community_username);
            j["community_name"] = opt_str(r.community_name);
            j["bio"] = opt_str(r.bio);
            j["is_public"] = opt_bool(r.is_public);
            j["member_count"] = opt_int(r.member_count);
            j["post_count"] = opt_int(r.post_count);
            j["profile_image_url"] = opt_str(r.profile_image_url);
            j["owner_account_id"] = opt_str(r.owner_account_id);
            j["created_at"] = opt_time(r.created_at);
            j["retrieved_at"] = r.retrieved_at.to_iso();
            return j;
        }
        ordered_json operator()(const AccountRecord& r) const {
            ordered_json j;
            j["account_id"] = r.account_id;
            j["user_name"] = opt_str(r.user_name);
            j["profile_name"] = opt_str(r.profile_name);
            j["bio"] = opt_str(r.bio);
            j["location"] = opt_geo(r.location);
            j["post_count"] = opt_int(r.post_count);
            j["friend_count"] = opt_int(r.friend_count);
            j["follower_count"] = opt_int(r.follower_count);
            j["is_verified"] = opt_bool(r.is_verified);
            j["profile_image_url"] = opt_str(r.profile_image_url);
            j["created_at"] = opt_time(r.created_at);
            j["retrieved_at"] = r.retrieved_at.to_iso();
            return j;
        }
        ordered_json operator()(const PostRecord& r) const {
            ordered_json j;
            j["post_id"] = r.post_id;
            j["account_id"] = r.account_id;
            j["conversation_id"] = opt_str(r.conversation_id);
            j["community_id"] = opt_str(r.community_id);
            j["body"] = r.body;
            j["location"] = opt_geo(r.location);
            j["like_count"] = opt_int(r.like_count);
            j["dislike_count"] = opt_int(r.dislike_count);
            j["view_count"] = opt_int(r.view_count);
            j["share_count"] = opt_int(r.share_count);
            j["comment_count"] = opt_int(r.comment_count);
            j["quote_count"] = opt_int(r.quote_count);
            j["bookmark_count"] = opt_int(r.bookmark_count);
            j["created_at"] = r.created_at.to_iso();
            j["retrieved_at"] = r.retrieved_at.to_iso();
            return j;
        }
        ordered_json operator()(const ActionRecord& r) const {
            ordered_json j;
            j["originator_account_id"] = opt_str(r.originator_account_id);
            j["originator_post_id"] = opt_str(r.originator_post_id);
            j["target_account_id"] = opt_str(r.target_account_id);
            j["target_post_id"] = opt_str(r.target_post_id);
            j["action_type"] = std::string(to_string(r.action_type));
            j["created_at"] = r.created_at.to_iso();
            j["retrieved_at"] = r.retrieved_at.to_iso();
            return j;
        }
        ordered_json operator()(const EntityRecord& r) const {
            ordered_json j;
            j["post_id"] = r.post_id;
            j["body"] = r.body;
            j["entity_type"] = std::string(to_string(r.entity_type));
            j["created_at"] = r.created_at.to_iso();
            j["retrieved_at"] = r.retrieved_at.to_iso();
            return j;
        }
        ordered_json operator()(const EnrichmentRecord& r) const {
            ordered_json j;
            j[r.target_kind == EnrichmentTargetKind::Account ? "account_id"
                                                             : "post_id"] = r.target_id;
            j["model_id"] = r.model_id;
            j["body"] = r.body;
            j["created_at"] = r.created_at.to_iso();
            j["retrieved_at"] = r.retrieved_at.to_iso();
            return j;
        }
    };
    return std::visit(Visitor{}, rec);
}

AnyRecord record_from_json(Table t, const json& j) {
    if (!j.is_object()) throw ValidationError("record is not a JSON object");
    switch (t) {
        case Table::Communities: {
            CommunityRecord r;
            r.community_id = get_req_str(j, "community_id");
            r.community_type = community_type_from_string(get_req_str(j, "community_type"));
            r.community_username = get_opt_str(j, "community_username");
            r.community_name = get_opt_str(j, "community_name");
            r.bio = get_opt_str(j, "bio");
            r.is_public = get_opt_bool(j, "is_public");
            r.member_count = get_opt_int(j, "member_count");
            r.post_count = get_opt_int(j, "post_count");
            r.profile_image_url = get_opt_str(j, "profile_image_url");
            r.owner_account_id = get_opt_str(j, "owner_account_id");
            r.created_at = get_opt_time(j, "created_at");
            r.retrieved_at = get_req_time(j, "retrieved_at");
            return r;
        }
        case Table::Accounts: {
            AccountRecord r;
            r.account_id = get_req_str(j, "account_id");
            r.user_name = get_opt_str(j, "user_name");
            r.profile_name = get_opt_str(j, "profile_name");
            r.bio = get_opt_str(j, "bio");
            r.location = get_opt_geo(j, "location");
            r.post_count = get_opt_int(j, "post_count");
            r.friend_count = get_opt_int(j, "friend_count");
            r.follower_count = get_opt_int(j, "follower_count");
            r.is_verified = get_opt_bool(j, "is_verified");
            r.profile_image_url = get_opt_str(j, "profile_image_url");
            r.created_at = get_opt_time(j, "created_at");
            r.retrieved_at = get_req_time(j, "retrieved_at");
            return r;
        }
        case Table::Posts: {
            PostRecord r;
            r.post_id = get_req_str(j, "post_id");
            r.account_id = get_req_str(j, "account_id");
            r.conversation_id = get_opt_str(j, "conversation_id");
            r.community_id = get_opt_str(j, "community_id");
            r.body = get_opt_str(j, "body").value_or("");
            r.location = get_opt_geo(j, "location");
            r.like_count = get_opt_int(j, "like_count");
            r.dislike_count = get_opt_int(j, "dislike_count");
            r.view_count = get_opt_int(j, "view_count");
            r.share_count = get_opt_int(j, "share_count");
            r.comment_count = get_opt_int(j, "comment_count");
            r.quote_count = get_opt_int(j, "quote_count");
            r.bookmark_count = get_opt_int(j, "bookmark_count");
            r.created_at = get_req_time(j, "created_at");
            r.retrieved_at = get_req_time(j, "retrieved_at");
            return r;
        }
        case Table::Actions: {
            ActionRecord r;
            r.originator_account_id = get_opt_str(j, "originator_account_id");
            r.originator_post_id = get_opt_str(j, "originator_post_id");
            r.target_account_id = get_opt_str(j, "target_account_id");
            r.target_post_id = get_opt_str(j, "target_post_id");
            r.action_type = action_type_from_string(get_req_str(j, "action_type"));
            r.created_at = get_req_time(j, "created_at");
            r.retrieved_at = get_req_time(j, "retrieved_at");
            return r;
        }
        case Table::Entities: {
            EntityRecord r;
            r.post_id = get_req_str(j, "post_id");
            r.body = get_req_str(j, "body");
            r.entity_type = entity_type_from_string(get_req_str(j, "entity_type"));
            r.created_at = get_req_time(j, "created_at");
            r.retrieved_at = get_req_time(j, "retrieved_at");
            return r;
        }
        case Table::AccountEnrichments:
        case Table::PostEnrichments: {
            EnrichmentRecord r;
            r.target_kind = t == Table::AccountEnrichments ? EnrichmentTargetKind::Account
                                                           : EnrichmentTargetKind::Post;
            r.target_id = get_req_str(
                j, t == Table::AccountEnrichments ? "account_id" : "post_id");
            r.model_id = get_req_str(j, "model_id");
            r.body = get_req_str(j, "body");
            r.created_at = get_req_time(j, "created_at");
            r.retrieved_at = get_req_time(j, "retrieved_at");
            return r;
        }
    }
    throw ValidationError("unknown table");
}

}  // namespace smdt
