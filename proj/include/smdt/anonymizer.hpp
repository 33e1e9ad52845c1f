#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smdt/records.hpp"
#include "smdt/store.hpp"

namespace smdt {

enum class HashAlgorithm { Sha256, Sha512, Whirlpool, Blake2b };

std::string_view to_string(HashAlgorithm a);
HashAlgorithm hash_algorithm_from_string(std::string_view s);
int digest_hex_length(HashAlgorithm a);

// Lowercase hex of digest(pepper || value), truncated to output_hex_len
// characters. Pure and deterministic.
std::string hash_value(std::string_view value, HashAlgorithm algorithm,
                       std::string_view pepper, int output_hex_len);

struct AnonymizeConfig {
    std::string src_db_name;
    std::string dst_db_name;
    std::string pepper;  // secret; never logged or persisted
    HashAlgorithm algorithm = HashAlgorithm::Sha256;
    int output_hex_len = 64;
    std::int64_t chunk_rows = 5000;
    bool ask_reinit = true;
};

// Which fields get hashed, redacted, or nulled, per table.
struct AnonymizePolicy {
    std::map<std::string, std::vector<std::string>> hashed_fields;
    std::map<std::string, std::vector<std::string>> redacted_text_fields;
    std::set<EntityType> entity_redaction_types;  // subset of {MENTION, EMAIL, URL}
    std::map<std::string, std::vector<std::string>> dropped_fields;

    // Hashes every cross-table identifier plus user_name, profile_name and
    // community_username; redacts mentions and emails in post bodies and
    // bios; drops profile image URLs and locations. Shared URLs are kept.
    static AnonymizePolicy default_policy();
};

// Throws ValidationError when the config or policy is inconsistent (unknown
// fields, odd hex length, an id group hashed in one table but not another).
void validate_anonymize_config(const AnonymizeConfig& config);
void validate_anonymize_policy(const AnonymizePolicy& policy);

using Hasher = std::function<std::string(std::string_view)>;

struct RedactionCounts {
    std::map<std::string, std::int64_t> by_type;  // entity-type name -> count
    void merge(const RedactionCounts& other);
};

// Replaces each matched entity of a redacted type with "<TYPE:token>". The
// leading '@' of a mention is stripped before hashing so "@u1" and the id
// "u1" map to the same token. Everything else is preserved byte for byte.
std::pair<std::string, RedactionCounts> anonymize_text(
    std::string_view body, const std::set<EntityType>& redaction_types,
    const Hasher& hasher);

struct AnonymizeReport {
    std::map<std::string, std::int64_t> rows_copied;  // per table
    std::int64_t tokens_issued = 0;
    RedactionCounts redactions;
};

struct AnonymizeRunControl {
    bool force = false;  // clear an existing destination without asking
    std::function<bool(const std::string& dst)> confirm;  // interactive reinit hook
};

AnonymizeReport run_anonymization(const AnonymizeConfig& config,
                                  const AnonymizePolicy& policy,
                                  const AnonymizeRunControl& control = {});

}  // namespace smdt
