#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smdt/timestamp.hpp"

namespace smdt {

enum class CommunityType { Channel, Group };
enum class ActionType {
    Like,
    Upvote,
    Downvote,
    Share,
    Quote,
    Reply,
    Mention,
    Follow,
    Block,
    Link,
};
enum class EntityType { Hashtag, Mention, Url, Email, MediaKey };
enum class EnrichmentTargetKind { Account, Post };

std::string_view to_string(CommunityType t);
std::string_view to_string(ActionType t);
std::string_view to_string(EntityType t);
std::string_view to_string(EnrichmentTargetKind t);
CommunityType community_type_from_string(std::string_view s);
ActionType action_type_from_string(std::string_view s);
EntityType entity_type_from_string(std::string_view s);
EnrichmentTargetKind target_kind_from_string(std::string_view s);

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const GeoPoint&) const = default;
};

struct CommunityRecord {
    std::string community_id;
    CommunityType community_type = CommunityType::Group;
    std::optional<std::string> community_username;
    std::optional<std::string> community_name;
    std::optional<std::string> bio;
    std::optional<bool> is_public;
    std::optional<std::int64_t> member_count;
    std::optional<std::int64_t> post_count;
    std::optional<std::string> profile_image_url;
    std::optional<std::string> owner_account_id;
    std::optional<Timestamp> created_at;
    Timestamp retrieved_at;
};

struct AccountRecord {
    std::string account_id;
    std::optional<std::string> user_name;
    std::optional<std::string> profile_name;
    std::optional<std::string> bio;
    std::optional<GeoPoint> location;
    std::optional<std::int64_t> post_count;
    std::optional<std::int64_t> friend_count;
    std::optional<std::int64_t> follower_count;
    std::optional<bool> is_verified;
    std::optional<std::string> profile_image_url;
    std::optional<Timestamp> created_at;
    Timestamp retrieved_at;
};

struct PostRecord {
    std::string post_id;
    std::string account_id;
    std::optional<std::string> conversation_id;
    std::optional<std::string> community_id;
    std::string body;
    std::optional<GeoPoint> location;
    std::optional<std::int64_t> like_count;
    std::optional<std::int64_t> dislike_count;
    std::optional<std::int64_t> view_count;
    std::optional<std::int64_t> share_count;
    std::optional<std::int64_t> comment_count;
    std::optional<std::int64_t> quote_count;
    std::optional<std::int64_t> bookmark_count;
    Timestamp created_at;
    Timestamp retrieved_at;
};

struct ActionRecord {
    std::optional<std::string> originator_account_id;
    std::optional<std::string> originator_post_id;
    std::optional<std::string> target_account_id;
    std::optional<std::string> target_post_id;
    ActionType action_type = ActionType::Like;
    Timestamp created_at;
    Timestamp retrieved_at;
};

struct EntityRecord {
    std::string post_id;
    std::string body;  // the entity literal, e.g. "#tag"
    EntityType entity_type = EntityType::Hashtag;
    Timestamp created_at;
    Timestamp retrieved_at;
};

struct EnrichmentRecord {
    EnrichmentTargetKind target_kind = EnrichmentTargetKind::Post;
    std::string target_id;
    std::string model_id;
    std::string body;  // serialized JSON object
    Timestamp created_at;
    Timestamp retrieved_at;
};

using AnyRecord = std::variant<CommunityRecord, AccountRecord, PostRecord, ActionRecord,
                               EntityRecord, EnrichmentRecord>;

// Returns a reason string when the record violates its type invariants.
std::optional<std::string> validate(const CommunityRecord& r);
std::optional<std::string> validate(const AccountRecord& r);
std::optional<std::string> validate(const PostRecord& r);
std::optional<std::string> validate(const ActionRecord& r);
std::optional<std::string> validate(const EntityRecord& r);
std::optional<std::string> validate(const EnrichmentRecord& r);
std::optional<std::string> validate(const AnyRecord& r);

// Schema tables. Enrichment records split into the two auxiliary tables by
// target kind.
enum class Table {
    Communities,
    Accounts,
    Posts,
    Actions,
    Entities,
    AccountEnrichments,
    PostEnrichments,
};

inline constexpr std::array<Table, 7> kAllTables = {
    Table::Communities,       Table::Accounts, Table::Posts,           Table::Actions,
    Table::Entities,          Table::AccountEnrichments,
    Table::PostEnrichments,
};

std::string_view table_name(Table t);
std::optional<Table> table_from_name(std::string_view name);
Table table_of(const AnyRecord& r);

// Schema field names per table, in export order. "location" covers the
// (lat, lon) pair as a single field.
const std::vector<std::string>& table_fields(Table t);

// Interchange form: one JSON object per record, Table 1 field names, absent
// optionals as null, ISO-8601 timestamps.
nlohmann::ordered_json record_to_json(const AnyRecord& r);
// Inverse of record_to_json for a known table. Throws ValidationError.
AnyRecord record_from_json(Table t, const nlohmann::json& j);

}  // namespace smdt
