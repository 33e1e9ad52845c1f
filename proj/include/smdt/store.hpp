#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "smdt/records.hpp"

namespace smdt {

enum class OpenMode {
    OpenOrCreate,  // open an existing store unchanged, create when absent
    Overwrite,     // start from an empty store, clearing any existing one
    CreateNew,     // require that no store exists yet (StoreExistsError otherwise)
};

struct TableCounts {
    std::int64_t received = 0;
    std::int64_t inserted = 0;
    std::int64_t deduplicated = 0;
    bool operator==(const TableCounts&) const = default;
};

// Per-table insertion accounting. received = inserted + deduplicated holds
// for every table.
struct InsertReport {
    std::map<std::string, TableCounts> tables;  // keyed by table name, all 7 present

    InsertReport();
    void merge(const InsertReport& other);
    std::int64_t total_inserted() const;
    std::int64_t total_received() const;
};

// One conjunction clause of a query filter.
struct FilterClause {
    enum class Op { Eq, In, TimeRange };
    using Value = std::variant<std::string, std::int64_t, double, bool>;

    std::string field;
    Op op = Op::Eq;
    std::vector<Value> values;  // Eq: one value; In: one or more
    Timestamp range_start, range_end;  // TimeRange: [start, end)

    static FilterClause eq(std::string field, Value v);
    static FilterClause in(std::string field, std::vector<Value> vs);
    static FilterClause time_range(std::string field, Timestamp t0, Timestamp t1);
};

struct Filter {
    std::vector<FilterClause> clauses;  // conjunction; empty matches everything
};

// Single-file relational store for the unified schema. One writer per store,
// any number of readers; write operations serialize internally.
class Store {
public:
    static Store open(const std::filesystem::path& db_path, OpenMode mode);
    static bool exists(const std::filesystem::path& db_path);
    static void remove(const std::filesystem::path& db_path);

    Store(Store&&) noexcept;
    Store& operator=(Store&&) noexcept;
    ~Store();

    const std::filesystem::path& path() const;
    std::string name() const;  // file stem, used in reports

    // Validates, then persists the batch atomically. Records whose
    // deduplication key already exists are skipped and counted.
    InsertReport insert_batch(std::span<const AnyRecord> records);

    std::vector<AnyRecord> query(Table table, const Filter& filter) const;
    std::int64_t row_count(Table table) const;

    // Streams every row of a table in deduplication-key order without
    // materializing the table.
    void scan(Table table, const std::function<void(AnyRecord&&)>& fn) const;

    // Writes the table as JSON-Lines (one object per line, ISO-8601
    // timestamps, null for absent optionals). Returns the line count.
    std::int64_t export_json(Table table, const std::filesystem::path& out_path) const;

    std::int64_t delete_enrichments(EnrichmentTargetKind kind, const std::string& model_id);

    // Small key-value side channel (run markers); not a schema table.
    void set_meta(const std::string& key, const std::string& value);
    std::optional<std::string> get_meta(const std::string& key) const;
    void clear_meta(const std::string& key);

private:
    struct Impl;
    explicit Store(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

// Column kinds used by modules that work on rows generically (inspector,
// anonymizer, query building).
enum class FieldKind { Id, Text, Count, Flag, Time, Geo };

struct FieldInfo {
    std::string name;
    FieldKind kind;
    bool required;
};

const std::vector<FieldInfo>& table_field_info(Table t);
const FieldInfo* find_field(Table t, std::string_view name);

}  // namespace smdt
