#include "smdt/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smdt/errors.hpp"
#include "sqlite_util.hpp"

namespace smdt {

namespace fs = std::filesystem;

InsertReport::InsertReport() {
    for (Table t : kAllTables) tables.emplace(std::string(table_name(t)), TableCounts{});
}

void InsertReport::merge(const InsertReport& other) {
    for (const auto& [name, counts] : other.tables) {
        auto& mine = tables[name];
        mine.received += counts.received;
        mine.inserted += counts.inserted;
        mine.deduplicated += counts.deduplicated;
    }
}

std::int64_t InsertReport::total_inserted() const {
    std::int64_t n = 0;
    for (const auto& [_, c] : tables) n += c.inserted;
    return n;
}

std::int64_t InsertReport::total_received() const {
    std::int64_t n = 0;
    for (const auto& [_, c] : tables) n += c.received;
    return n;
}

FilterClause FilterClause::eq(std::string field, Value v) {
    FilterClause c;
    c.field = std::move(field);
    c.op = Op::Eq;
    c.values.push_back(std::move(v));
    return c;
}

FilterClause FilterClause::in(std::string field, std::vector<Value> vs) {
    FilterClause c;
    c.field = std::move(field);
    c.op = Op::In;
    c.values = std::move(vs);
    return c;
}

FilterClause FilterClause::time_range(std::string field, Timestamp t0, Timestamp t1) {
    FilterClause c;
    c.field = std::move(field);
    c.op = Op::TimeRange;
    c.range_start = t0;
    c.range_end = t1;
    return c;
}

const std::vector<FieldInfo>& table_field_info(Table t) {
    using K = FieldKind;
    static const std::vector<FieldInfo> communities = {
        {"community_id", K::Id, true},        {"community_type", K::Text, true},
        {"community_username", K::Text, false}, {"community_name", K::Text, false},
        {"bio", K::Text, false},              {"is_public", K::Flag, false},
        {"member_count", K::Count, false},    {"post_count", K::Count, false},
        {"profile_image_url", K::Text, false}, {"owner_account_id", K::Id, false},
        {"created_at", K::Time, false},       {"retrieved_at", K::Time, true},
    };
    static const std::vector<FieldInfo> accounts = {
        {"account_id", K::Id, true},          {"user_name", K::Text, false},
        {"profile_name", K::Text, false},     {"bio", K::Text, false},
        {"location", K::Geo, false},          {"post_count", K::Count, false},
        {"friend_count", K::Count, false},    {"follower_count", K::Count, false},
        {"is_verified", K::Flag, false},      {"profile_image_url", K::Text, false},
        {"created_at", K::Time, false},       {"retrieved_at", K::Time, true},
    };
    static const std::vector<FieldInfo> posts = {
        {"post_id", K::Id, true},            {"account_id", K::Id, true},
        {"conversation_id", K::Id, false},   {"community_id", K::Id, false},
        {"body", K::Text, true},             {"location", K::Geo, false},
        {"like_count", K::Count, false},     {"dislike_count", K::Count, false},
        {"view_count", K::Count, false},     {"share_count", K::Count, false},
        {"comment_count", K::Count, false},  {"quote_count", K::Count, false},
        {"bookmark_count", K::Count, false}, {"created_at", K::Time, true},
        {"retrieved_at", K::Time, true},
    };
    static const std::vector<FieldInfo> actions = {
        {"originator_account_id", K::Id, false}, {"originator_post_id", K::Id, false},
        {"target_account_id", K::Id, false},     {"target_post_id", K::Id, false},
        {"action_type", K::Text, true},          {"created_at", K::Time, true},
        {"retrieved_at", K::Time, true},
    };
    static const std::vector<FieldInfo> entities = {
        {"post_id", K::Id, true},    {"body", K::Text, true},
        {"entity_type", K::Text, true}, {"created_at", K::Time, true},
        {"retrieved_at", K::Time, true},
    };
    static const std::vector<FieldInfo> account_enrichments = {
        {"account_id", K::Id, true}, {"model_id", K::Text, true},
        {"body", K::Text, true},     {"created_at", K::Time, true},
        {"retrieved_at", K::Time, true},
    };
    static const std::vector<FieldInfo> post_enrichments = {
        {"post_id", K::Id, true},  {"model_id", K::Text, true},
        {"body", K::Text, true},   {"created_at", K::Time, true},
        {"retrieved_at", K::Time, true},
    };
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

const FieldInfo* find_field(Table t, std::string_view name) {
    for (const auto& f : table_field_info(t)) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

namespace {

constexpr const char* kSchemaSql = R"sql(
CREATE TABLE IF NOT EXISTS communities (
  community_id TEXT NOT NULL,
  community_type TEXT NOT NULL,
  community_username TEXT,
  community_name TEXT,
  bio TEXT,
  is_public INTEGER,
  member_count INTEGER,
  post_count INTEGER,
  profile_image_url TEXT,
  owner_account_id TEXT,
  created_at INTEGER,
  retrieved_at INTEGER NOT NULL,
  UNIQUE (community_id, retrieved_at)
);
CREATE TABLE IF NOT EXISTS accounts (
  account_id TEXT NOT NULL,
  user_name TEXT,
  profile_name TEXT,
  bio TEXT,
  location_lat REAL,
  location_lon REAL,
  post_count INTEGER,
  friend_count INTEGER,
  follower_count INTEGER,
  is_verified INTEGER,
  profile_image_url TEXT,
  created_at INTEGER,
  retrieved_at INTEGER NOT NULL,
  UNIQUE (account_id, retrieved_at)
);
CREATE TABLE IF NOT EXISTS posts (
  post_id TEXT NOT NULL,
  account_id TEXT NOT NULL,
  conversation_id TEXT,
  community_id TEXT,
  body TEXT NOT NULL,
  location_lat REAL,
  location_lon REAL,
  like_count INTEGER,
  dislike_count INTEGER,
  view_count INTEGER,
  share_count INTEGER,
  comment_count INTEGER,
  quote_count INTEGER,
  bookmark_count INTEGER,
  created_at INTEGER NOT NULL,
  retrieved_at INTEGER NOT NULL,
  UNIQUE (post_id, retrieved_at)
);
CREATE TABLE IF NOT EXISTS actions (
  originator_account_id TEXT,
  originator_post_id TEXT,
  target_account_id TEXT,
  target_post_id TEXT,
  action_type TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  retrieved_at INTEGER NOT NULL
);
CREATE UNIQUE INDEX IF NOT EXISTS actions_identity ON actions (
  coalesce(originator_account_id, ''),
  coalesce(originator_post_id, ''),
  coalesce(target_account_id, ''),
  coalesce(target_post_id, ''),
  action_type,
  created_at
);
CREATE TABLE IF NOT EXISTS entities (
  post_id TEXT NOT NULL,
  body TEXT NOT NULL,
  entity_type TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  retrieved_at INTEGER NOT NULL,
  UNIQUE (post_id, entity_type, body, created_at)
);
CREATE TABLE IF NOT EXISTS account_enrichments (
  account_id TEXT NOT NULL,
  model_id TEXT NOT NULL,
  body TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  retrieved_at INTEGER NOT NULL,
  UNIQUE (account_id, model_id, created_at)
);
CREATE TABLE IF NOT EXISTS post_enrichments (
  post_id TEXT NOT NULL,
  model_id TEXT NOT NULL,
  body TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  retrieved_at INTEGER NOT NULL,
  UNIQUE (post_id, model_id, created_at)
);
CREATE INDEX IF NOT EXISTS actions_type_time ON actions (action_type, created_at);
CREATE INDEX IF NOT EXISTS entities_type_time ON entities (entity_type, created_at);
CREATE INDEX IF NOT EXISTS posts_by_id ON posts (post_id);
CREATE TABLE IF NOT EXISTS _meta (
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
)sql";

// Deduplication key columns; also the deterministic ordering for queries and
// exports. Actions use coalesced expressions because identity fields may be
// NULL.
std::string order_by_key(Table t) {
    switch (t) {
        case Table::Communities: return "community_id, retrieved_at";
        case Table::Accounts: return "account_id, retrieved_at";
        case Table::Posts: return "post_id, retrieved_at";
        case Table::Actions:
            return "coalesce(originator_account_id, ''), coalesce(originator_post_id, ''), "
                   "coalesce(target_account_id, ''), coalesce(target_post_id, ''), "
                   "action_type, created_at";
        case Table::Entities: return "post_id, entity_type, body, created_at";
        case Table::AccountEnrichments: return "account_id, model_id, created_at";
        case Table::PostEnrichments: return "post_id, model_id, created_at";
    }
    return "rowid";
}

// Physical column list per table (location expands to two columns).
std::vector<std::string> physical_columns(Table t) {
    std::vector<std::string> cols;
    for (const auto& f : table_field_info(t)) {
        if (f.kind == FieldKind::Geo) {
            cols.push_back(f.name + "_lat");
            cols.push_back(f.name + "_lon");
        } else {
            cols.push_back(f.name);
        }
    }
    return cols;
}

std::string insert_sql(Table t) {
    const auto cols = physical_columns(t);
    std::ostringstream sql;
    sql << "INSERT OR IGNORE INTO " << table_name(t) << " (";
    for (size_t i = 0; i < cols.size(); ++i) sql << (i ? ", " : "") << cols[i];
    sql << ") VALUES (";
    for (size_t i = 0; i < cols.size(); ++i) sql << (i ? ", ?" : "?");
    sql << ")";
    return sql.str();
}

std::string select_sql(Table t, const std::string& where) {
    const auto cols = physical_columns(t);
    std::ostringstream sql;
    sql << "SELECT ";
    for (size_t i = 0; i < cols.size(); ++i) sql << (i ? ", " : "") << cols[i];
    sql << " FROM " << table_name(t);
    if (!where.empty()) sql << " WHERE " << where;
    sql << " ORDER BY " << order_by_key(t);
    return sql.str();
}

void bind_record(sqlite::Statement& stmt, const AnyRecord& rec) {
    int i = 0;
    auto b_str = [&](const std::string& v) { stmt.bind(++i, v); };
    auto b_opt_str = [&](const std::optional<std::string>& v) { stmt.bind_opt(++i, v); };
    auto b_opt_int = [&](const std::optional<std::int64_t>& v) { stmt.bind_opt(++i, v); };
    auto b_opt_flag = [&](const std::optional<bool>& v) {
        if (v) {
            stmt.bind(++i, static_cast<std::int64_t>(*v ? 1 : 0));
        } else {
            stmt.bind_null(++i);
        }
    };
    auto b_time = [&](const Timestamp& v) { stmt.bind(++i, v.micros()); };
    auto b_opt_time = [&](const std::optional<Timestamp>& v) {
        if (v) {
            stmt.bind(++i, v->micros());
        } else {
            stmt.bind_null(++i);
        }
    };
    auto b_geo = [&](const std::optional<GeoPoint>& v) {
        if (v) {
            stmt.bind(++i, v->lat);
            stmt.bind(++i, v->lon);
        } else {
            stmt.bind_null(++i);
            stmt.bind_null(++i);
        }
    };

    struct Visitor {
        decltype(b_str)& s;
        decltype(b_opt_str)& os;
        decltype(b_opt_int)& oi;
        decltype(b_opt_flag)& of;
        decltype(b_time)& tm;
        decltype(b_opt_time)& ot;
        decltype(b_geo)& geo;

        void operator()(const CommunityRecord& r) const {
            s(r.community_id);
            s(std::string(to_string(r.community_type)));
            os(r.community_username);
            os(r.community_name);
            os(r.bio);
            of(r.is_public);
            oi(r.member_count);
            oi(r.post_count);
            os(r.profile_image_url);
            os(r.owner_account_id);
            ot(r.created_at);
            tm(r.retrieved_at);
        }
        void operator()(const AccountRecord& r) const {
            s(r.account_id);
            os(r.user_name);
            os(r.profile_name);
            os(r.bio);
            geo(r.location);
            oi(r.post_count);
            oi(r.friend_count);
            oi(r.follower_count);
            of(r.is_verified);
            os(r.profile_image_url);
            ot(r.created_at);
            tm(r.retrieved_at);
        }
        void operator()(const PostRecord& r) const {
            s(r.post_id);
            s(r.account_id);
            os(r.conversation_id);
            os(r.community_id);
            s(r.body);
            geo(r.location);
            oi(r.like_count);
            oi(r.dislike_count);
            oi(r.view_count);
            oi(r.share_count);
            oi(r.comment_count);
            oi(r.quote_count);
            oi(r.bookmark_count);
            tm(r.created_at);
            tm(r.retrieved_at);
        }
        void operator()(const ActionRecord& r) const {
            os(r.originator_account_id);
            os(r.originator_post_id);
            os(r.target_account_id);
            os(r.target_post_id);
            s(std::string(to_string(r.action_type)));
            tm(r.created_at);
            tm(r.retrieved_at);
        }
        void operator()(const EntityRecord& r) const {
            s(r.post_id);
            s(r.body);
            s(std::string(to_string(r.entity_type)));
            tm(r.created_at);
            tm(r.retrieved_at);
        }
        void operator()(const EnrichmentRecord& r) const {
            s(r.target_id);
            s(r.model_id);
            s(r.body);
            tm(r.created_at);
            tm(r.retrieved_at);
        }
    };
    std::visit(Visitor{b_str, b_opt_str, b_opt_int, b_opt_flag, b_time, b_opt_time, b_geo},
               rec);
}

std::optional<Timestamp> read_opt_time(const sqlite::Statement& stmt, int col) {
    if (stmt.is_null(col)) return std::nullopt;
    return Timestamp::from_micros(stmt.column_int(col));
}

std::optional<bool> read_opt_flag(const sqlite::Statement& stmt, int col) {
    if (stmt.is_null(col)) return std::nullopt;
    return stmt.column_int(col) != 0;
}

std::optional<GeoPoint> read_geo(const sqlite::Statement& stmt, int lat_col) {
    if (stmt.is_null(lat_col) || stmt.is_null(lat_col + 1)) return std::nullopt;
    return GeoPoint{stmt.column_double(lat_col), stmt.column_double(lat_col + 1)};
}

AnyRecord read_record(Table t, const sqlite::Statement& stmt) {
    switch (t) {
        case Table::Communities: {
            CommunityRecord r;
            r.community_id = stmt.column_text(0);
            r.community_type = community_type_from_string(stmt.column_text(1));
            r.community_username = stmt.column_opt_text(2);
            r.community_name = stmt.column_opt_text(3);
            r.bio = stmt.column_opt_text(4);
            r.is_public = read_opt_flag(stmt, 5);
            r.member_count = stmt.column_opt_int(6);
            r.post_count = stmt.column_opt_int(7);
            r.profile_image_url = stmt.column_opt_text(8);
            r.owner_account_id = stmt.column_opt_text(9);
            r.created_at = read_opt_time(stmt, 10);
            r.retrieved_at = Timestamp::from_micros(stmt.column_int(11));
            return r;
        }
        case Table::Accounts: {
            AccountRecord r;
            r.account_id = stmt.column_text(0);
            r.user_name = stmt.column_opt_text(1);
            r.profile_name = stmt.column_opt_text(2);
            r.bio = stmt.column_opt_text(3);
            r.location = read_geo(stmt, 4);
            r.post_count = stmt.column_opt_int(6);
            r.friend_count = stmt.column_opt_int(7);
            r.follower_count = stmt.column_opt_int(8);
            r.is_verified = read_opt_flag(stmt, 9);
            r.profile_image_url = stmt.column_opt_text(10);
            r.created_at = read_opt_time(stmt, 11);
            r.retrieved_at = Timestamp::from_micros(stmt.column_int(12));
            return r;
        }
        case Table::Posts: {
            PostRecord r;
            r.post_id = stmt.column_text(0);
            r.account_id = stmt.column_text(1);
            r.conversation_id = stmt.column_opt_text(2);
            r.community_id = stmt.column_opt_text(3);
            r.body = stmt.column_text(4);
            r.location = read_geo(stmt, 5);
            r.like_count = stmt.column_opt_int(7);
            r.dislike_count = stmt.column_opt_int(8);
            r.view_count = stmt.column_opt_int(9);
            r.share_count = stmt.column_opt_int(10);
            r.comment_count = stmt.column_opt_int(11);
            r.quote_count = stmt.column_opt_int(12);
            r.bookmark_count = stmt.column_opt_int(13);
            r.created_at = Timestamp::from_micros(stmt.column_int(14));
            r.retrieved_at = Timestamp::from_micros(stmt.column_int(15));
            return r;
        }
        case Table::Actions: {
            ActionRecord r;
            r.originator_account_id = stmt.column_opt_text(0);
            r.originator_post_id = stmt.column_opt_text(1);
            r.target_account_id = stmt.column_opt_text(2);
            r.target_post_id = stmt.column_opt_text(3);
            r.action_type = action_type_from_string(stmt.column_text(4));
            r.created_at = Timestamp::from_micros(stmt.column_int(5));
            r.retrieved_at = Timestamp::from_micros(stmt.column_int(6));
            return r;
        }
        case Table::Entities: {
            EntityRecord r;
            r.post_id = stmt.column_text(0);
            r.body = stmt.column_text(1);
            r.entity_type = entity_type_from_string(stmt.column_text(2));
            r.created_at = Timestamp::from_micros(stmt.column_int(3));
            r.retrieved_at = Timestamp::from_micros(stmt.column_int(4));
            return r;
        }
        case Table::AccountEnrichments:
        case Table::PostEnrichments: {
            EnrichmentRecord r;
            r.target_kind = t == Table::AccountEnrichments ? EnrichmentTargetKind::Account
                                                           : EnrichmentTargetKind::Post;
            r.target_id = stmt.column_text(0);
            r.model_id = stmt.column_text(1);
            r.body = stmt.column_text(2);
            r.created_at = Timestamp::from_micros(stmt.column_int(3));
            r.retrieved_at = Timestamp::from_micros(stmt.column_int(4));
            return r;
        }
    }
    throw StoreError("unknown table");
}

}  // namespace

struct Store::Impl {
    fs::path path;
    sqlite::Database db;
    std::mutex write_mutex;
};

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;
Store::~Store() = default;

bool Store::exists(const fs::path& db_path) { return fs::exists(db_path); }

void Store::remove(const fs::path& db_path) {
    std::error_code ec;
    fs::remove(db_path, ec);
    fs::remove(db_path.string() + "-wal", ec);
    fs::remove(db_path.string() + "-shm", ec);
}

Store Store::open(const fs::path& db_path, OpenMode mode) {
    const bool already = fs::exists(db_path);
    if (mode == OpenMode::CreateNew && already) throw StoreExistsError(db_path.string());
    if (mode == OpenMode::Overwrite && already) remove(db_path);

    if (db_path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(db_path.parent_path(), ec);
    }

    auto impl = std::make_unique<Impl>();
    impl->path = db_path;
    impl->db = sqlite::Database(
        db_path.string(),
        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX);
    impl->db.exec("PRAGMA journal_mode=WAL");
    impl->db.exec("PRAGMA synchronous=NORMAL");
    impl->db.exec("PRAGMA foreign_keys=OFF");
    impl->db.exec(kSchemaSql);
    return Store(std::move(impl));
}

const fs::path& Store::path() const { return impl_->path; }

std::string Store::name() const { return impl_->path.stem().string(); }

InsertReport Store::insert_batch(std::span<const AnyRecord> records) {
    // Validate the whole batch up front so a bad record cannot leave a
    // partial batch behind.
    for (size_t i = 0; i < records.size(); ++i) {
        if (auto reason = validate(records[i])) {
            throw InvariantViolationError(std::string(table_name(table_of(records[i]))),
                                          static_cast<std::int64_t>(i), *reason);
        }
    }

    std::lock_guard lock(impl_->write_mutex);
    InsertReport report;
    sqlite::Transaction tx(impl_->db);
    std::map<Table, std::unique_ptr<sqlite::Statement>> stmts;
    for (const AnyRecord& rec : records) {
        const Table t = table_of(rec);
        auto it = stmts.find(t);
        if (it == stmts.end()) {
            it = stmts.emplace(t, std::make_unique<sqlite::Statement>(impl_->db,
                                                                      insert_sql(t)))
                     .first;
        }
        sqlite::Statement& stmt = *it->second;
        stmt.reset();
        bind_record(stmt, rec);
        stmt.step();
        auto& counts = report.tables[std::string(table_name(t))];
        counts.received += 1;
        if (sqlite3_changes(impl_->db.get()) > 0) {
            counts.inserted += 1;
        } else {
            counts.deduplicated += 1;
        }
    }
    tx.commit();
    return report;
}

namespace {

struct BoundValue {
    enum class Kind { Text, Int, Real } kind;
    std::string text;
    std::int64_t integer = 0;
    double real = 0.0;
};

BoundValue to_bound(const FieldInfo& field, const FilterClause::Value& v) {
    BoundValue out{BoundValue::Kind::Text, {}, 0, 0.0};
    switch (field.kind) {
        case FieldKind::Id:
        case FieldKind::Text:
            if (!std::holds_alternative<std::string>(v))
                throw ValidationError("field '" + field.name + "' expects a string value");
            out.kind = BoundValue::Kind::Text;
            out.text = std::get<std::string>(v);
            return out;
        case FieldKind::Count:
            if (!std::holds_alternative<std::int64_t>(v))
                throw ValidationError("field '" + field.name + "' expects an integer value");
            out.kind = BoundValue::Kind::Int;
            out.integer = std::get<std::int64_t>(v);
            return out;
        case FieldKind::Flag:
            if (!std::holds_alternative<bool>(v))
                throw ValidationError("field '" + field.name + "' expects a boolean value");
            out.kind = BoundValue::Kind::Int;
            out.integer = std::get<bool>(v) ? 1 : 0;
            return out;
        case FieldKind::Time:
            if (std::holds_alternative<std::string>(v)) {
                out.kind = BoundValue::Kind::Int;
                out.integer = Timestamp::parse(std::get<std::string>(v)).micros();
                return out;
            }
            if (std::holds_alternative<std::int64_t>(v)) {
                out.kind = BoundValue::Kind::Int;
                out.integer = std::get<std::int64_t>(v);
                return out;
            }
            throw ValidationError("field '" + field.name +
                                  "' expects an ISO-8601 string or integer micros");
        case FieldKind::Geo:
            throw ValidationError("cannot filter on geo field '" + field.name + "'");
    }
    throw ValidationError("bad field kind");
}

std::string build_where(Table t, const Filter& filter, std::vector<BoundValue>& binds) {
    std::ostringstream where;
    bool first = true;
    for (const auto& clause : filter.clauses) {
        const FieldInfo* field = find_field(t, clause.field);
        if (field == nullptr)
            throw ValidationError("unknown field '" + clause.field + "' in table '" +
                                  std::string(table_name(t)) + "'");
        if (!first) where << " AND ";
        first = false;
        switch (clause.op) {
            case FilterClause::Op::Eq: {
                if (clause.values.size() != 1)
                    throw ValidationError("equality clause needs exactly one value");
                binds.push_back(to_bound(*field, clause.values[0]));
                where << field->name << " = ?";
                break;
            }
            case FilterClause::Op::In: {
                if (clause.values.empty())
                    throw ValidationError("membership clause needs at least one value");
                where << field->name << " IN (";
                for (size_t i = 0; i < clause.values.size(); ++i) {
                    binds.push_back(to_bound(*field, clause.values[i]));
                    where << (i ? ", ?" : "?");
                }
                where << ")";
                break;
            }
            case FilterClause::Op::TimeRange: {
                if (field->kind != FieldKind::Time)
                    throw ValidationError("range clause on non-timestamp field '" +
                                          field->name + "'");
                if (clause.range_start > clause.range_end)
                    throw ValidationError("malformed range: start is after end");
                BoundValue lo{BoundValue::Kind::Int, {}, clause.range_start.micros(), 0.0};
                BoundValue hi{BoundValue::Kind::Int, {}, clause.range_end.micros(), 0.0};
                binds.push_back(lo);
                binds.push_back(hi);
                where << field->name << " >= ? AND " << field->name << " < ?";
                break;
            }
        }
    }
    return where.str();
}

void bind_values(sqlite::Statement& stmt, const std::vector<BoundValue>& binds) {
    for (size_t i = 0; i < binds.size(); ++i) {
        const int idx = static_cast<int>(i) + 1;
        switch (binds[i].kind) {
            case BoundValue::Kind::Text: stmt.bind(idx, binds[i].text); break;
            case BoundValue::Kind::Int: stmt.bind(idx, binds[i].integer); break;
            case BoundValue::Kind::Real: stmt.bind(idx, binds[i].real); break;
        }
    }
}

}  // namespace

std::vector<AnyRecord> Store::query(Table table, const Filter& filter) const {
    std::vector<BoundValue> binds;
    const std::string where = build_where(table, filter, binds);
    sqlite::Statement stmt(impl_->db, select_sql(table, where));
    bind_values(stmt, binds);
    std::vector<AnyRecord> out;
    while (stmt.step()) out.push_back(read_record(table, stmt));
    return out;
}

void Store::scan(Table table, const std::function<void(AnyRecord&&)>& fn) const {
    sqlite::Statement stmt(impl_->db, select_sql(table, ""));
    while (stmt.step()) fn(read_record(table, stmt));
}

std::int64_t Store::row_count(Table table) const {
    sqlite::Statement stmt(impl_->db,
                           "SELECT COUNT(*) FROM " + std::string(table_name(table)));
    stmt.step();
    return stmt.column_int(0);
}

std::int64_t Store::export_json(Table table, const fs::path& out_path) const {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out.is_open())
        throw StoreError("cannot open export path: " + out_path.string());
    sqlite::Statement stmt(impl_->db, select_sql(table, ""));
    std::int64_t lines = 0;
    while (stmt.step()) {
        const AnyRecord rec = read_record(table, stmt);
        out << record_to_json(rec).dump() << '\n';
        ++lines;
    }
    out.flush();
    if (!out.good()) throw StoreError("write failed: " + out_path.string());
    return lines;
}

std::int64_t Store::delete_enrichments(EnrichmentTargetKind kind,
                                       const std::string& model_id) {
    std::lock_guard lock(impl_->write_mutex);
    const Table t = kind == EnrichmentTargetKind::Account ? Table::AccountEnrichments
                                                          : Table::PostEnrichments;
    sqlite::Statement stmt(impl_->db, "DELETE FROM " + std::string(table_name(t)) +
                                          " WHERE model_id = ?");
    stmt.bind(1, model_id);
    stmt.step();
    return sqlite3_changes(impl_->db.get());
}

void Store::set_meta(const std::string& key, const std::string& value) {
    std::lock_guard lock(impl_->write_mutex);
    sqlite::Statement stmt(impl_->db,
                           "INSERT INTO _meta (key, value) VALUES (?, ?) "
                           "ON CONFLICT(key) DO UPDATE SET value = excluded.value");
    stmt.bind(1, key);
    stmt.bind(2, value);
    stmt.step();
}

std::optional<std::string> Store::get_meta(const std::string& key) const {
    sqlite::Statement stmt(impl_->db, "SELECT value FROM _meta WHERE key = ?");
    stmt.bind(1, key);
    if (!stmt.step()) return std::nullopt;
    return stmt.column_text(0);
}

void Store::clear_meta(const std::string& key) {
    std::lock_guard lock(impl_->write_mutex);
    sqlite::Statement stmt(impl_->db, "DELETE FROM _meta WHERE key = ?");
    stmt.bind(1, key);
    stmt.step();
}

}  // namespace smdt
