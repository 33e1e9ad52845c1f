#include "smdt/standardizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "smdt/errors.hpp"

namespace smdt {

using nlohmann::json;

void AdapterRegistry::register_adapter(Adapter adapter) {
    if (adapter.name.empty()) throw ValidationError("adapter name is empty");
    auto [it, inserted] = adapters_.emplace(adapter.name, std::move(adapter));
    if (!inserted)
        throw ValidationError("adapter '" + it->first + "' is already registered");
}

const Adapter& AdapterRegistry::at(const std::string& name) const {
    auto it = adapters_.find(name);
    if (it == adapters_.end()) throw ValidationError("unknown adapter '" + name + "'");
    return it->second;
}

bool AdapterRegistry::contains(const std::string& name) const {
    return adapters_.count(name) > 0;
}

std::vector<std::string> AdapterRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(adapters_.size());
    for (const auto& [name, _] : adapters_) out.push_back(name);
    return out;
}

// --- entity extraction ------------------------------------------------------

namespace {

using Candidate = EntitySpan;

const std::regex& hashtag_re() {
    static const std::regex re("#[A-Za-z0-9_]+");
    return re;
}
const std::regex& mention_re() {
    static const std::regex re("@[A-Za-z0-9_]+");
    return re;
}
const std::regex& url_re() {
    static const std::regex re("https?://[^\\s]+");
    return re;
}
const std::regex& email_re() {
    static const std::regex re("[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\\.[A-Za-z]{2,}");
    return re;
}

void collect(const std::string& text, const std::regex& re, EntityType type,
             std::vector<Candidate>& out) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
         it != std::sregex_iterator(); ++it) {
        std::string body = it->str();
        size_t len = body.size();
        if (type == EntityType::Url) {
            // Trailing sentence punctuation is not part of the URL.
            while (!body.empty() && std::string_view(".,;:!?)").find(body.back()) !=
                                        std::string_view::npos) {
                body.pop_back();
                --len;
            }
            if (body.empty()) continue;
        }
        out.push_back(Candidate{static_cast<size_t>(it->position()), len, type,
                                std::move(body)});
    }
}

}  // namespace

std::vector<EntitySpan> extract_entity_spans(std::string_view text) {
    const std::string s(text);
    std::vector<Candidate> candidates;
    collect(s, email_re(), EntityType::Email, candidates);
    collect(s, url_re(), EntityType::Url, candidates);
    collect(s, hashtag_re(), EntityType::Hashtag, candidates);
    collect(s, mention_re(), EntityType::Mention, candidates);

    // Leftmost match wins; on a shared start the longest one does (EMAIL over
    // the MENTION inside it).
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a,
                                                       const Candidate& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.length != b.length) return a.length > b.length;
        return static_cast<int>(a.type) < static_cast<int>(b.type);
    });

    std::vector<EntitySpan> out;
    size_t cursor = 0;
    for (auto& c : candidates) {
        if (c.start < cursor) continue;
        cursor = c.start + c.length;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<std::pair<EntityType, std::string>> extract_entities(std::string_view text) {
    std::vector<std::pair<EntityType, std::string>> out;
    for (auto& span : extract_entity_spans(text)) {
        out.emplace_back(span.type, std::move(span.body));
    }
    return out;
}

// --- shared adapter helpers --------------------------------------------------

std::optional<std::int64_t> parse_count(const json& value) {
    if (value.is_null()) return std::nullopt;
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_unsigned()) return static_cast<std::int64_t>(value.get<std::uint64_t>());
    if (value.is_number_float()) return std::llround(value.get<double>());
    if (!value.is_string()) return std::nullopt;

    std::string s = value.get<std::string>();
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return c == ',' || std::isspace(c); }),
            s.end());
    if (s.empty()) return std::nullopt;

    double multiplier = 1.0;
    switch (s.back()) {
        case 'K': case 'k': multiplier = 1e3; s.pop_back(); break;
        case 'M': case 'm': multiplier = 1e6; s.pop_back(); break;
        case 'B': case 'b': multiplier = 1e9; s.pop_back(); break;
        default: break;
    }
    if (s.empty()) return std::nullopt;
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return std::llround(v * multiplier);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

namespace {

std::optional<std::string> opt_id(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) {
        std::string v = it->get<std::string>();
        if (v.empty()) return std::nullopt;
        return v;
    }
    if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
    if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
    throw ValidationError(std::string(key) + " is not an id");
}

std::string req_id(const json& j, const char* key) {
    auto v = opt_id(j, key);
    if (!v) throw ValidationError(std::string("missing required field '") + key + "'");
    return *v;
}

std::optional<std::string> opt_str(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(std::string(key) + " is not a string");
    return it->get<std::string>();
}

std::optional<bool> opt_flag(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (it->is_boolean()) return it->get<bool>();
    throw ValidationError(std::string(key) + " is not a boolean");
}

std::optional<std::int64_t> opt_count(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    return parse_count(*it);
}

std::optional<Timestamp> opt_time(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return Timestamp::parse(it->get<std::string>());
    if (it->is_number_integer()) return Timestamp::from_seconds(it->get<std::int64_t>());
    throw ValidationError(std::string(key) + " is not a timestamp");
}

std::optional<GeoPoint> opt_geo(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
        throw ValidationError(std::string(key) + " is not a [lat, lon] pair");
    return GeoPoint{(*it)[0].get<double>(), (*it)[1].get<double>()};
}

Timestamp resolve_retrieved_at(const json& raw, const SourceInfo& info) {
    if (auto t = opt_time(raw, "retrieved_at")) return *t;
    if (info.default_retrieved_at) return *info.default_retrieved_at;
    throw ValidationError("record has no retrieved_at and no default was provided");
}

void append_text_entities(std::vector<AnyRecord>& out, const std::string& post_id,
                          const std::string& text, Timestamp created_at,
                          Timestamp retrieved_at) {
    for (auto& [type, body] : extract_entities(text)) {
        out.push_back(EntityRecord{post_id, body, type, created_at, retrieved_at});
    }
}

// Flat microblog JSONL (Twitter-like): post body + embedded author object,
// engagement counts, and repost/quote/reply references.
std::vector<AnyRecord> map_generic_microblog(const json& raw, const SourceInfo& info) {
    if (!raw.is_object()) throw ValidationError("record is not a JSON object");
    const Timestamp retrieved_at = resolve_retrieved_at(raw, info);

    const std::string post_id = req_id(raw, "id");
    const auto created_at_opt = opt_time(raw, "ts");
    if (!created_at_opt) throw ValidationError("missing required field 'ts'");
    const Timestamp created_at = *created_at_opt;

    auto user_it = raw.find("user");
    if (user_it == raw.end() || !user_it->is_object())
        throw ValidationError("missing required object 'user'");
    const json& user = *user_it;
    const std::string account_id = req_id(user, "id");

    std::vector<AnyRecord> out;

    AccountRecord account;
    account.account_id = account_id;
    account.user_name = opt_str(user, "name");
    account.profile_name = opt_str(user, "display_name");
    account.bio = opt_str(user, "bio");
    account.post_count = opt_count(user, "posts");
    account.friend_count = opt_count(user, "friends");
    account.follower_count = opt_count(user, "followers");
    account.is_verified = opt_flag(user, "verified");
    account.profile_image_url = opt_str(user, "image");
    account.created_at = opt_time(user, "created_at");
    account.retrieved_at = retrieved_at;
    out.push_back(account);

    PostRecord post;
    post.post_id = post_id;
    post.account_id = account_id;
    post.conversation_id = opt_id(raw, "conversation_id");
    post.body = opt_str(raw, "text").value_or("");
    post.location = opt_geo(raw, "geo");
    post.like_count = opt_count(raw, "likes");
    post.view_count = opt_count(raw, "views");
    post.share_count = opt_count(raw, "shares");
    post.comment_count = opt_count(raw, "replies");
    post.quote_count = opt_count(raw, "quotes");
    post.created_at = created_at;
    post.retrieved_at = retrieved_at;
    out.push_back(post);

    append_text_entities(out, post_id, post.body, created_at, retrieved_at);

    if (auto media = raw.find("media_keys"); media != raw.end() && media->is_array()) {
        for (const auto& key : *media) {
            if (key.is_string() && !key.get<std::string>().empty()) {
                out.push_back(EntityRecord{post_id, key.get<std::string>(),
                                           EntityType::MediaKey, created_at,
                                           retrieved_at});
            }
        }
    }

    const std::pair<const char*, ActionType> refs[] = {
        {"repost_of", ActionType::Share},
        {"quote_of", ActionType::Quote},
        {"reply_to", ActionType::Reply},
    };
    for (const auto& [key, type] : refs) {
        if (auto target = opt_id(raw, key)) {
            ActionRecord action;
            action.originator_account_id = account_id;
            action.originator_post_id = post_id;
            action.target_post_id = *target;
            action.action_type = type;
            action.created_at = created_at;
            action.retrieved_at = retrieved_at;
            out.push_back(action);
        }
    }
    return out;
}

// Forum JSONL (Reddit-like): subforum metadata, submissions and comments,
// score as like_count.
std::vector<AnyRecord> map_generic_forum(const json& raw, const SourceInfo& info) {
    if (!raw.is_object()) throw ValidationError("record is not a JSON object");
    const Timestamp retrieved_at = resolve_retrieved_at(raw, info);

    const std::string post_id = req_id(raw, "id");
    auto created_at_opt = opt_time(raw, "created_at");
    if (!created_at_opt) created_at_opt = opt_time(raw, "created_utc");
    if (!created_at_opt)
        throw ValidationError("missing required field 'created_at' or 'created_utc'");
    const Timestamp created_at = *created_at_opt;

    auto author_it = raw.find("author");
    if (author_it == raw.end() || !author_it->is_object())
        throw ValidationError("missing required object 'author'");
    const json& author = *author_it;
    auto account_id = opt_id(author, "id");
    if (!account_id) account_id = opt_id(author, "name");
    if (!account_id) throw ValidationError("author has neither id nor name");

    std::vector<AnyRecord> out;

    std::optional<std::string> community_id;
    if (auto sub_it = raw.find("subforum"); sub_it != raw.end() && sub_it->is_object()) {
        const json& sub = *sub_it;
        CommunityRecord community;
        community.community_id = req_id(sub, "id");
        community.community_type = CommunityType::Group;
        community.community_username = opt_str(sub, "name");
        community.community_name = opt_str(sub, "title");
        community.bio = opt_str(sub, "description");
        community.is_public = opt_flag(sub, "public");
        community.member_count = opt_count(sub, "members");
        community.profile_image_url = opt_str(sub, "image");
        community.owner_account_id = opt_id(sub, "owner_id");
        community.created_at = opt_time(sub, "created_at");
        community.retrieved_at = retrieved_at;
        community_id = community.community_id;
        out.push_back(community);
    }

    AccountRecord account;
    account.account_id = *account_id;
    account.user_name = opt_str(author, "name");
    account.profile_name = opt_str(author, "display_name");
    account.created_at = opt_time(author, "created_at");
    account.retrieved_at = retrieved_at;
    out.push_back(account);

    std::string body = opt_str(raw, "body").value_or("");
    if (auto title = opt_str(raw, "title")) {
        body = body.empty() ? *title : *title + "\n\n" + body;
    }

    PostRecord post;
    post.post_id = post_id;
    post.account_id = *account_id;
    post.conversation_id = opt_id(raw, "thread_id");
    post.community_id = community_id;
    post.body = body;
    post.like_count = opt_count(raw, "score");
    post.comment_count = opt_count(raw, "comments");
    post.created_at = created_at;
    post.retrieved_at = retrieved_at;
    out.push_back(post);

    append_text_entities(out, post_id, body, created_at, retrieved_at);

    if (auto parent = opt_id(raw, "parent_id")) {
        ActionRecord reply;
        reply.originator_account_id = *account_id;
        reply.originator_post_id = post_id;
        reply.target_post_id = *parent;
        reply.action_type = ActionType::Reply;
        reply.created_at = created_at;
        reply.retrieved_at = retrieved_at;
        out.push_back(reply);
    }
    return out;
}

// Re-ingests this toolkit's own JSON-Lines exports. The table is recognized
// from the line's key set.
std::vector<AnyRecord> map_identity(const json& raw, const SourceInfo&) {
    if (!raw.is_object()) throw ValidationError("record is not a JSON object");
    Table table;
    if (raw.contains("model_id")) {
        table = raw.contains("account_id") ? Table::AccountEnrichments
                                           : Table::PostEnrichments;
    } else if (raw.contains("action_type")) {
        table = Table::Actions;
    } else if (raw.contains("entity_type")) {
        table = Table::Entities;
    } else if (raw.contains("community_type")) {
        table = Table::Communities;
    } else if (raw.contains("post_id")) {
        table = Table::Posts;
    } else if (raw.contains("account_id")) {
        table = Table::Accounts;
    } else {
        throw ValidationError("line does not match any schema table");
    }
    return {record_from_json(table, raw)};
}

}  // namespace

AdapterRegistry AdapterRegistry::with_builtins() {
    AdapterRegistry reg;
    reg.register_adapter({"generic_microblog", SourceFormat::Jsonl, map_generic_microblog});
    reg.register_adapter({"generic_forum", SourceFormat::Jsonl, map_generic_forum});
    reg.register_adapter({"identity", SourceFormat::Jsonl, map_identity});
    return reg;
}

std::vector<AnyRecord> standardize_record(const Adapter& adapter, const json& raw,
                                          const SourceInfo& info) {
    std::vector<AnyRecord> records;
    try {
        records = adapter.map(raw, info);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("malformed record: ") + e.what());
    }
    for (size_t i = 0; i < records.size(); ++i) {
        if (auto reason = validate(records[i])) {
            throw ValidationError("adapter '" + adapter.name +
                                  "' produced an invalid " +
                                  std::string(table_name(table_of(records[i]))) +
                                  " record: " + *reason);
        }
    }
    return records;
}

// --- ingestion ---------------------------------------------------------------

namespace {

// One CSV row; quoted fields may contain commas and doubled quotes. Embedded
// newlines are not supported.
std::vector<std::string> split_csv_row(const std::string& line, std::int64_t index) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"' && cell.empty()) {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    if (quoted)
        throw ValidationError("unterminated quote in CSV row " + std::to_string(index));
    cells.push_back(std::move(cell));
    return cells;
}

json csv_row_to_json(const std::vector<std::string>& header,
                     const std::vector<std::string>& cells, std::int64_t index) {
    if (cells.size() != header.size())
        throw ValidationError("CSV row " + std::to_string(index) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
    json obj = json::object();
    for (size_t i = 0; i < header.size(); ++i) {
        if (!cells[i].empty()) obj[header[i]] = cells[i];
    }
    return obj;
}

void apply_field_map(json& raw, const std::map<std::string, std::string>& field_map) {
    for (const auto& [from, to] : field_map) {
        if (auto it = raw.find(from); it != raw.end()) {
            raw[to] = std::move(*it);
            raw.erase(from);
        }
    }
}

}  // namespace

IngestReport run_ingestion(Store& store, const AdapterRegistry& registry,
                           const std::string& adapter_name,
                           const std::vector<std::filesystem::path>& sources,
                           const IngestOptions& options) {
    const Adapter& adapter = registry.at(adapter_name);

    IngestReport report;
    std::vector<AnyRecord> buffer;
    buffer.reserve(static_cast<size_t>(options.chunk_records));

    // One wall-clock default per run keeps a run internally consistent.
    SourceInfo info;
    info.dataset_name = options.dataset_name;
    info.platform = options.platform;
    info.default_retrieved_at =
        options.default_retrieved_at ? options.default_retrieved_at : Timestamp::now();

    auto flush = [&] {
        if (buffer.empty()) return;
        report.insert_report.merge(store.insert_batch(buffer));
        buffer.clear();
    };

    auto fail_record = [&](const std::string& file, std::int64_t index,
                           const std::string& reason) {
        report.records_failed += 1;
        report.failures.push_back(IngestFailure{file, index, reason});
        if (options.fail_fast) {
            throw Error("ingestion failed at " + file + ":" + std::to_string(index) +
                        ": " + reason);
        }
    };

    auto process_raw = [&](json raw, std::int64_t index) {
        apply_field_map(raw, options.field_map);
        info.record_index = index;
        auto records = standardize_record(adapter, raw, info);
        buffer.insert(buffer.end(), std::make_move_iterator(records.begin()),
                      std::make_move_iterator(records.end()));
        if (static_cast<std::int64_t>(buffer.size()) >= options.chunk_records) flush();
    };

    for (const auto& path : sources) {
        std::ifstream in(path, std::ios::binary);
        if (!in.is_open()) {
            if (options.fail_fast)
                throw StoreError("cannot open source file: " + path.string());
            fail_record(path.string(), 0, "unreadable file");
            continue;
        }
        info.file_path = path.string();

        std::string line;
        std::int64_t index = -1;

        if (adapter.accepted_format == SourceFormat::Csv) {
            std::vector<std::string> header;
            bool header_ok = true;
            if (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                try {
                    header = split_csv_row(line, 0);
                } catch (const std::exception& e) {
                    fail_record(path.string(), 0, e.what());
                    header_ok = false;
                }
            }
            while (header_ok && std::getline(in, line)) {
                ++index;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                report.records_read += 1;
                try {
                    const auto cells = split_csv_row(line, index);
                    process_raw(csv_row_to_json(header, cells, index), index);
                } catch (const Error& e) {
                    fail_record(path.string(), index, e.what());
                }
            }
        } else {
            while (std::getline(in, line)) {
                ++index;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;  // stray blank lines are not records
                report.records_read += 1;
                json raw = json::parse(line, nullptr, false);
                if (raw.is_discarded()) {
                    fail_record(path.string(), index, "unparseable JSON");
                    continue;
                }
                try {
                    process_raw(std::move(raw), index);
                } catch (const Error& e) {
                    fail_record(path.string(), index, e.what());
                }
            }
        }
        report.files_processed += 1;
    }
    flush();
    return report;
}

}  // namespace smdt
