#include "smdt/anonymizer.hpp"

#include <openssl/evp.h>
#include <openssl/provider.h>

#include <algorithm>
#include <mutex>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "smdt/errors.hpp"
#include "smdt/standardizer.hpp"

namespace smdt {

using nlohmann::json;

std::string_view to_string(HashAlgorithm a) {
    switch (a) {
        case HashAlgorithm::Sha256: return "SHA256";
        case HashAlgorithm::Sha512: return "SHA512";
        case HashAlgorithm::Whirlpool: return "WHIRLPOOL";
        case HashAlgorithm::Blake2b: return "BLAKE2B";
    }
    return "SHA256";
}

HashAlgorithm hash_algorithm_from_string(std::string_view s) {
    if (s == "SHA256") return HashAlgorithm::Sha256;
    if (s == "SHA512") return HashAlgorithm::Sha512;
    if (s == "WHIRLPOOL") return HashAlgorithm::Whirlpool;
    if (s == "BLAKE2B") return HashAlgorithm::Blake2b;
    throw ValidationError("unsupported hash algorithm: '" + std::string(s) + "'");
}

namespace {

const EVP_MD* fetch_digest(HashAlgorithm a) {
    switch (a) {
        case HashAlgorithm::Sha256: return EVP_sha256();
        case HashAlgorithm::Sha512: return EVP_sha512();
        case HashAlgorithm::Blake2b: return EVP_blake2b512();
        case HashAlgorithm::Whirlpool: {
            // Whirlpool lives in OpenSSL's legacy provider. Loaded once; if
            // the provider is missing we reject the algorithm outright
            // rather than substituting another digest.
            static const EVP_MD* md = [] {
                OSSL_PROVIDER_load(nullptr, "legacy");
                OSSL_PROVIDER_load(nullptr, "default");
                return EVP_MD_fetch(nullptr, "WHIRLPOOL", nullptr);
            }();
            if (md == nullptr)
                throw ValidationError(
                    "WHIRLPOOL is not available in this crypto backend "
                    "(legacy provider missing); choose SHA256, SHA512 or BLAKE2B");
            return md;
        }
    }
    throw ValidationError("unsupported hash algorithm");
}

}  // namespace

int digest_hex_length(HashAlgorithm a) {
    return EVP_MD_get_size(fetch_digest(a)) * 2;
}

std::string hash_value(std::string_view value, HashAlgorithm algorithm,
                       std::string_view pepper, int output_hex_len) {
    if (value.empty()) throw ValidationError("cannot hash an empty value");
    const EVP_MD* md = fetch_digest(algorithm);
    const int full_hex = EVP_MD_get_size(md) * 2;
    if (output_hex_len < 8 || output_hex_len > full_hex || output_hex_len % 2 != 0)
        throw ValidationError("output_hex_len must be even and within [8, " +
                              std::to_string(full_hex) + "]");

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, md, nullptr) != 1 ||
        EVP_DigestUpdate(ctx, pepper.data(), pepper.size()) != 1 ||
        EVP_DigestUpdate(ctx, value.data(), value.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("digest computation failed");
    }
    EVP_MD_CTX_free(ctx);

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(static_cast<size_t>(output_hex_len));
    for (unsigned int i = 0; i < digest_len && out.size() < static_cast<size_t>(output_hex_len);
         ++i) {
        out.push_back(hex[digest[i] >> 4]);
        if (out.size() < static_cast<size_t>(output_hex_len))
            out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

AnonymizePolicy AnonymizePolicy::default_policy() {
    AnonymizePolicy p;
    p.hashed_fields = {
        {"communities", {"community_id", "community_username", "owner_account_id"}},
        {"accounts", {"account_id", "user_name", "profile_name"}},
        {"posts", {"post_id", "account_id", "conversation_id", "community_id"}},
        {"actions",
         {"originator_account_id", "originator_post_id", "target_account_id",
          "target_post_id"}},
        {"entities", {"post_id"}},
        {"account_enrichments", {"account_id"}},
        {"post_enrichments", {"post_id"}},
    };
    p.redacted_text_fields = {
        {"posts", {"body"}},
        {"accounts", {"bio"}},
        {"communities", {"bio"}},
    };
    p.entity_redaction_types = {EntityType::Mention, EntityType::Email};
    p.dropped_fields = {
        {"communities", {"profile_image_url"}},
        {"accounts", {"profile_image_url", "location"}},
        {"posts", {"location"}},
    };
    return p;
}

void validate_anonymize_config(const AnonymizeConfig& config) {
    if (config.src_db_name.empty() || config.dst_db_name.empty())
        throw ValidationError("src and dst store names must be set");
    if (config.src_db_name == config.dst_db_name)
        throw ValidationError("src and dst stores must differ");
    if (config.pepper.empty()) throw ValidationError("pepper must not be empty");
    const int full_hex = digest_hex_length(config.algorithm);
    if (config.output_hex_len < 8 || config.output_hex_len > full_hex ||
        config.output_hex_len % 2 != 0)
        throw ValidationError("output_hex_len must be even and within [8, " +
                              std::to_string(full_hex) + "] for " +
                              std::string(to_string(config.algorithm)));
    if (config.chunk_rows <= 0) throw ValidationError("chunk_rows must be positive");
}

namespace {

struct PolicyFieldCheck {
    const char* what;
    const std::map<std::string, std::vector<std::string>>& fields;
};

// Identifier families that must be hashed together to keep joins intact.
const std::vector<std::vector<std::pair<std::string, std::string>>>& id_groups() {
    static const std::vector<std::vector<std::pair<std::string, std::string>>> groups = {
        {{"accounts", "account_id"},
         {"posts", "account_id"},
         {"actions", "originator_account_id"},
         {"actions", "target_account_id"},
         {"account_enrichments", "account_id"},
         {"communities", "owner_account_id"}},
        {{"posts", "post_id"},
         {"posts", "conversation_id"},
         {"entities", "post_id"},
         {"actions", "originator_post_id"},
         {"actions", "target_post_id"},
         {"post_enrichments", "post_id"}},
        {{"communities", "community_id"}, {"posts", "community_id"}},
    };
    return groups;
}

bool policy_lists(const std::map<std::string, std::vector<std::string>>& m,
                  const std::string& table, const std::string& field) {
    auto it = m.find(table);
    if (it == m.end()) return false;
    return std::find(it->second.begin(), it->second.end(), field) != it->second.end();
}

}  // namespace

void validate_anonymize_policy(const AnonymizePolicy& policy) {
    for (const auto& check :
         {PolicyFieldCheck{"hashed", policy.hashed_fields},
          PolicyFieldCheck{"redacted", policy.redacted_text_fields},
          PolicyFieldCheck{"dropped", policy.dropped_fields}}) {
        const std::string_view what(check.what);
        for (const auto& [table_str, fields] : check.fields) {
            auto table = table_from_name(table_str);
            if (!table)
                throw ValidationError(std::string(check.what) + "_fields names unknown table '" +
                                      table_str + "'");
            for (const auto& fname : fields) {
                const FieldInfo* f = find_field(*table, fname);
                if (f == nullptr)
                    throw ValidationError("unknown field '" + table_str + "." + fname + "'");
                if (what == "hashed" && !(f->kind == FieldKind::Id || f->kind == FieldKind::Text))
                    throw ValidationError("cannot hash non-text field '" + table_str + "." +
                                          fname + "'");
                if (what == "redacted" && f->kind != FieldKind::Text)
                    throw ValidationError("cannot redact non-text field '" + table_str + "." +
                                          fname + "'");
                if (what == "dropped" && f->required)
                    throw ValidationError("cannot drop required field '" + table_str + "." +
                                          fname + "'");
            }
        }
    }
    for (auto t : policy.entity_redaction_types) {
        if (t != EntityType::Mention && t != EntityType::Email && t != EntityType::Url)
            throw ValidationError("entity_redaction_types must be within {MENTION, EMAIL, URL}");
    }
    for (const auto& group : id_groups()) {
        int listed = 0;
        for (const auto& [table, field] : group)
            listed += policy_lists(policy.hashed_fields, table, field) ? 1 : 0;
        if (listed != 0 && listed != static_cast<int>(group.size())) {
            throw ValidationError(
                "inconsistent hashed_fields: id family of '" + group.front().first + "." +
                group.front().second + "' must be hashed in all tables or none");
        }
    }
}

void RedactionCounts::merge(const RedactionCounts& other) {
    for (const auto& [k, v] : other.by_type) by_type[k] += v;
}

std::pair<std::string, RedactionCounts> anonymize_text(
    std::string_view body, const std::set<EntityType>& redaction_types,
    const Hasher& hasher) {
    RedactionCounts counts;
    if (body.empty() || redaction_types.empty())
        return {std::string(body), counts};

    // Spans are non-overlapping and in document order, so the replacement is
    // a single left-to-right splice.
    const std::string text(body);
    std::string out;
    out.reserve(text.size());
    size_t cursor = 0;
    for (const auto& span : extract_entity_spans(text)) {
        if (redaction_types.count(span.type) == 0) continue;
        out.append(text, cursor, span.start - cursor);
        std::string_view to_hash = span.body;
        if (span.type == EntityType::Mention) to_hash.remove_prefix(1);
        out += '<';
        out += to_string(span.type);
        out += ':';
        out += hasher(to_hash);
        out += '>';
        cursor = span.start + span.length;
        counts.by_type[std::string(to_string(span.type))] += 1;
    }
    out.append(text, cursor, text.size() - cursor);
    return {out, counts};
}

namespace {

class TokenIssuer {
public:
    TokenIssuer(const AnonymizeConfig& config)
        : config_(config) {}

    std::string token_for(std::string_view value) {
        auto it = cache_.find(std::string(value));
        if (it != cache_.end()) return it->second;
        std::string token =
            hash_value(value, config_.algorithm, config_.pepper, config_.output_hex_len);
        auto [owner, fresh] = owners_.try_emplace(token, value);
        if (!fresh && owner->second != value) {
            throw TokenCollisionError("token collision between distinct source values; "
                                      "increase output_hex_len");
        }
        cache_.emplace(std::string(value), token);
        return token;
    }

    std::int64_t issued() const { return static_cast<std::int64_t>(cache_.size()); }

private:
    const AnonymizeConfig& config_;
    std::unordered_map<std::string, std::string> cache_;
    std::unordered_map<std::string, std::string> owners_;
};

}  // namespace

AnonymizeReport run_anonymization(const AnonymizeConfig& config,
                                  const AnonymizePolicy& policy,
                                  const AnonymizeRunControl& control) {
    validate_anonymize_config(config);
    validate_anonymize_policy(policy);

    if (!Store::exists(config.src_db_name))
        throw StoreError("source store missing: " + config.src_db_name);

    if (Store::exists(config.dst_db_name)) {
        const bool confirmed =
            control.force ||
            (config.ask_reinit && control.confirm && control.confirm(config.dst_db_name));
        if (!confirmed) throw StoreExistsError(config.dst_db_name);
        Store::remove(config.dst_db_name);
    }

    Store src = Store::open(config.src_db_name, OpenMode::OpenOrCreate);
    Store dst = Store::open(config.dst_db_name, OpenMode::CreateNew);
    dst.set_meta("anonymize_incomplete", "1");

    TokenIssuer issuer(config);
    const Hasher hasher = [&](std::string_view v) { return issuer.token_for(v); };

    AnonymizeReport report;

    for (Table table : kAllTables) {
        const std::string tname(table_name(table));
        const auto hashed = policy.hashed_fields.find(tname);
        const auto redacted = policy.redacted_text_fields.find(tname);
        const auto dropped = policy.dropped_fields.find(tname);

        std::vector<AnyRecord> buffer;
        std::int64_t copied = 0;
        auto flush = [&] {
            if (buffer.empty()) return;
            const InsertReport r = dst.insert_batch(buffer);
            copied += r.tables.at(tname).inserted;
            buffer.clear();
        };

        src.scan(table, [&](AnyRecord&& rec) {
            json row = record_to_json(rec);
            if (hashed != policy.hashed_fields.end()) {
                for (const auto& field : hashed->second) {
                    auto it = row.find(field);
                    if (it == row.end() || !it->is_string()) continue;
                    const std::string value = it->get<std::string>();
                    if (!value.empty()) *it = issuer.token_for(value);
                }
            }
            if (redacted != policy.redacted_text_fields.end()) {
                for (const auto& field : redacted->second) {
                    auto it = row.find(field);
                    if (it == row.end() || !it->is_string()) continue;
                    auto [clean, counts] = anonymize_text(
                        it->get<std::string>(), policy.entity_redaction_types, hasher);
                    *it = std::move(clean);
                    report.redactions.merge(counts);
                }
            }
            if (dropped != policy.dropped_fields.end()) {
                for (const auto& field : dropped->second) {
                    if (auto it = row.find(field); it != row.end()) *it = nullptr;
                }
            }
            buffer.push_back(record_from_json(table, row));
            if (static_cast<std::int64_t>(buffer.size()) >= config.chunk_rows) flush();
        });
        flush();

        const std::int64_t expected = src.row_count(table);
        if (copied != expected) {
            throw StoreError("destination row count mismatch for " + tname + ": copied " +
                             std::to_string(copied) + " of " + std::to_string(expected) +
                             " (policy merged rows that differ only in transformed fields)");
        }
        report.rows_copied[tname] = copied;
    }

    report.tokens_issued = issuer.issued();
    dst.clear_meta("anonymize_incomplete");
    return report;
}

}  // namespace smdt
