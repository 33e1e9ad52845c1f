#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdt/records.hpp"
#include "smdt/store.hpp"

namespace smdt {

// Provenance of one raw input record.
struct SourceInfo {
    std::string dataset_name;
    std::string platform;
    std::string file_path;
    std::int64_t record_index = 0;  // 0-based line/row index
    std::optional<Timestamp> default_retrieved_at;
};

enum class SourceFormat { Jsonl, Csv };

// Maps one raw record plus provenance to schema records. CSV rows arrive as
// a flat JSON object keyed by header names, so adapters see one shape.
using MapFn =
    std::function<std::vector<AnyRecord>(const nlohmann::json&, const SourceInfo&)>;

struct Adapter {
    std::string name;
    SourceFormat accepted_format = SourceFormat::Jsonl;
    MapFn map;
};

class AdapterRegistry {
public:
    // Registry preloaded with generic_microblog, generic_forum and identity.
    static AdapterRegistry with_builtins();

    void register_adapter(Adapter adapter);  // throws ValidationError on duplicate
    const Adapter& at(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;  // sorted

private:
    std::map<std::string, Adapter> adapters_;
};

// All non-overlapping entity matches, left to right, duplicates preserved.
// MEDIA_KEY never comes from free text.
std::vector<std::pair<EntityType, std::string>> extract_entities(std::string_view text);

// As extract_entities, but with byte offsets into the source text. For URLs
// the span excludes stripped trailing punctuation.
struct EntitySpan {
    size_t start = 0;
    size_t length = 0;
    EntityType type = EntityType::Hashtag;
    std::string body;
};
std::vector<EntitySpan> extract_entity_spans(std::string_view text);

// Runs the adapter and validates every produced record. Throws
// ValidationError for unparseable raws or invariant-violating output (with
// the adapter named in the message).
std::vector<AnyRecord> standardize_record(const Adapter& adapter,
                                          const nlohmann::json& raw,
                                          const SourceInfo& info);

struct IngestFailure {
    std::string file_path;
    std::int64_t record_index = 0;
    std::string reason;
};

struct IngestReport {
    std::int64_t files_processed = 0;
    std::int64_t records_read = 0;
    std::int64_t records_failed = 0;
    std::vector<IngestFailure> failures;
    InsertReport insert_report;
};

struct IngestOptions {
    std::string dataset_name = "dataset";
    std::string platform;
    bool fail_fast = false;
    std::optional<Timestamp> default_retrieved_at;  // wall clock when unset
    std::int64_t chunk_records = 5000;
    // Optional top-level raw key renames (from -> to), applied before mapping.
    std::map<std::string, std::string> field_map;
};

IngestReport run_ingestion(Store& store, const AdapterRegistry& registry,
                           const std::string& adapter_name,
                           const std::vector<std::filesystem::path>& sources,
                           const IngestOptions& options);

// "1,234" -> 1234, "3.4K" -> 3400, "2M" -> 2000000. Adapters use this to
// normalize engagement counts; the store itself stays strict.
std::optional<std::int64_t> parse_count(const nlohmann::json& value);

}  // namespace smdt
