#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdt/store.hpp"

namespace smdt {

struct FieldStats {
    std::int64_t non_null_count = 0;
    std::int64_t row_count = 0;
    double null_rate = 0.0;  // 0 for empty tables
    std::int64_t distinct_count = 0;
    std::optional<Timestamp> min_timestamp;  // timestamp fields only
    std::optional<Timestamp> max_timestamp;

    bool available() const { return non_null_count > 0; }
};

struct SchemaReport {
    std::string store_name;
    // table -> field -> stats; tables and fields come from the schema only.
    std::map<std::string, std::map<std::string, FieldStats>> tables;

    bool available(const std::string& table, const std::string& field) const;
};

// Exact per-field counts over all rows of one table.
std::map<std::string, FieldStats> table_stats(const Store& store, Table table);

// Stats for every schema table.
SchemaReport inspect_store(const Store& store);

// Side-by-side fixed-width text report; one column per store, schema fields
// grouped by table, "+"/"-" availability glyph next to the non-null count.
std::string report_schemas(const std::vector<SchemaReport>& reports,
                           const std::optional<std::vector<std::string>>& only_tables =
                               std::nullopt);

nlohmann::ordered_json schema_report_to_json(const SchemaReport& report);

// Recovers the availability glyph matrix from rendered text:
// store name -> "table.field" -> available. Used to cross-check rendering.
std::map<std::string, std::map<std::string, bool>> parse_report_availability(
    const std::string& rendered);

}  // namespace smdt
