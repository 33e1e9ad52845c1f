#include "smdt/inspector.hpp"

#include <algorithm>
#include <sstream>

#include "smdt/errors.hpp"
#include "sqlite_util.hpp"

namespace smdt {

bool SchemaReport::available(const std::string& table, const std::string& field) const {
    auto t = tables.find(table);
    if (t == tables.end()) return false;
    auto f = t->second.find(field);
    if (f == t->second.end()) return false;
    return f->second.available();
}

std::map<std::string, FieldStats> table_stats(const Store& store, Table table) {
    // Reads through a connection of its own so profiling never touches the
    // store's writer connection.
    sqlite::Database db(store.path().string(), SQLITE_OPEN_READONLY | SQLITE_OPEN_FULLMUTEX);

    const auto& fields = table_field_info(table);
    std::ostringstream sql;
    sql << "SELECT COUNT(*)";
    for (const auto& f : fields) {
        if (f.kind == FieldKind::Geo) {
            sql << ", COUNT(" << f.name << "_lat)"
                << ", COUNT(DISTINCT " << f.name << "_lat || ',' || " << f.name << "_lon)";
        } else {
            sql << ", COUNT(" << f.name << ")"
                << ", COUNT(DISTINCT " << f.name << ")";
        }
        if (f.kind == FieldKind::Time) {
            sql << ", MIN(" << f.name << "), MAX(" << f.name << ")";
        }
    }
    sql << " FROM " << table_name(table);

    sqlite::Statement stmt(db, sql.str());
    stmt.step();

    std::map<std::string, FieldStats> out;
    const std::int64_t rows = stmt.column_int(0);
    int col = 1;
    for (const auto& f : fields) {
        FieldStats s;
        s.row_count = rows;
        s.non_null_count = stmt.column_int(col++);
        s.distinct_count = stmt.column_int(col++);
        if (f.kind == FieldKind::Time) {
            if (!stmt.is_null(col)) s.min_timestamp = Timestamp::from_micros(stmt.column_int(col));
            ++col;
            if (!stmt.is_null(col)) s.max_timestamp = Timestamp::from_micros(stmt.column_int(col));
            ++col;
        }
        s.null_rate = rows > 0
                          ? 1.0 - static_cast<double>(s.non_null_count) / static_cast<double>(rows)
                          : 0.0;
        out.emplace(f.name, s);
    }
    return out;
}

SchemaReport inspect_store(const Store& store) {
    SchemaReport report;
    report.store_name = store.name();
    for (Table t : kAllTables) {
        report.tables.emplace(std::string(table_name(t)), table_stats(store, t));
    }
    return report;
}

namespace {

std::vector<Table> resolve_tables(const std::optional<std::vector<std::string>>& only) {
    if (!only) return std::vector<Table>(kAllTables.begin(), kAllTables.end());
    std::vector<Table> out;
    for (const auto& name : *only) {
        auto t = table_from_name(name);
        if (!t) throw ValidationError("unknown table '" + name + "'");
        out.push_back(*t);
    }
    return out;
}

std::string pad(std::string s, size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

std::string report_schemas(const std::vector<SchemaReport>& reports,
                           const std::optional<std::vector<std::string>>& only_tables) {
    if (reports.empty()) throw ValidationError("report_schemas needs at least one report");
    const auto tables = resolve_tables(only_tables);

    auto cell_for = [](const SchemaReport& r, const std::string& table,
                       const std::string& field) {
        std::int64_t n = 0;
        if (auto t = r.tables.find(table); t != r.tables.end()) {
            if (auto f = t->second.find(field); f != t->second.end())
                n = f->second.non_null_count;
        }
        return std::string(n > 0 ? "+ " : "- ") + std::to_string(n);
    };

    size_t label_width = std::string("field").size();
    for (Table t : tables) {
        label_width = std::max(label_width, std::string(table_name(t)).size());
        for (const auto& f : table_fields(t))
            label_width = std::max(label_width, f.size() + 2);
    }

    std::vector<size_t> col_widths;
    for (const auto& r : reports) {
        size_t w = r.store_name.size();
        for (Table t : tables) {
            const std::string tname(table_name(t));
            for (const auto& f : table_fields(t))
                w = std::max(w, cell_for(r, tname, f).size());
        }
        col_widths.push_back(w);
    }

    std::ostringstream out;
    out << pad("field", label_width);
    for (size_t i = 0; i < reports.size(); ++i)
        out << " | " << pad(reports[i].store_name, col_widths[i]);
    out << '\n';
    out << std::string(label_width, '-');
    for (size_t w : col_widths) out << "-+-" << std::string(w, '-');
    out << '\n';

    for (Table t : tables) {
        const std::string tname(table_name(t));
        out << pad(tname, label_width);
        for (size_t i = 0; i < reports.size(); ++i)
            out << " | " << pad("", col_widths[i]);
        out << '\n';
        for (const auto& f : table_fields(t)) {
            out << pad("  " + f, label_width);
            for (size_t i = 0; i < reports.size(); ++i)
                out << " | " << pad(cell_for(reports[i], tname, f), col_widths[i]);
            out << '\n';
        }
    }
    return out.str();
}

nlohmann::ordered_json schema_report_to_json(const SchemaReport& report) {
    nlohmann::ordered_json j;
    j["store_name"] = report.store_name;
    auto& tables = j["tables"] = nlohmann::ordered_json::object();
    for (Table t : kAllTables) {
        const std::string tname(table_name(t));
        auto it = report.tables.find(tname);
        if (it == report.tables.end()) continue;
        auto& tj = tables[tname] = nlohmann::ordered_json::object();
        for (const auto& fname : table_fields(t)) {
            auto fit = it->second.find(fname);
            if (fit == it->second.end()) continue;
            const FieldStats& s = fit->second;
            nlohmann::ordered_json fj;
            fj["non_null_count"] = s.non_null_count;
            fj["row_count"] = s.row_count;
            fj["null_rate"] = s.null_rate;
            fj["distinct_count"] = s.distinct_count;
            fj["min_timestamp"] =
                s.min_timestamp ? nlohmann::ordered_json(s.min_timestamp->to_iso())
                                : nlohmann::ordered_json(nullptr);
            fj["max_timestamp"] =
                s.max_timestamp ? nlohmann::ordered_json(s.max_timestamp->to_iso())
                                : nlohmann::ordered_json(nullptr);
            fj["available"] = s.available();
            tj[fname] = fj;
        }
    }
    return j;
}

std::map<std::string, std::map<std::string, bool>> parse_report_availability(
    const std::string& rendered) {
    std::istringstream in(rendered);
    std::string line;
    std::vector<std::string> stores;
    std::map<std::string, std::map<std::string, bool>> out;

    auto split_row = [](const std::string& row) {
        std::vector<std::string> cells;
        size_t start = 0;
        while (true) {
            size_t bar = row.find(" | ", start);
            if (bar == std::string::npos) {
                cells.push_back(row.substr(start));
                break;
            }
            cells.push_back(row.substr(start, bar - start));
            start = bar + 3;
        }
        for (auto& c : cells) {
            while (!c.empty() && c.back() == ' ') c.pop_back();
        }
        return cells;
    };

    if (!std::getline(in, line)) return out;
    auto header = split_row(line);
    for (size_t i = 1; i < header.size(); ++i) stores.push_back(header[i]);
    std::getline(in, line);  // separator

    std::string current_table;
    while (std::getline(in, line)) {
        auto cells = split_row(line);
        if (cells.empty() || cells[0].empty()) continue;
        if (cells[0][0] != ' ') {
            current_table = cells[0];
            continue;
        }
        std::string field = cells[0].substr(2);
        for (size_t i = 0; i + 1 < cells.size() && i < stores.size(); ++i) {
            const std::string& cell = cells[i + 1];
            if (!cell.empty())
                out[stores[i]][current_table + "." + field] = cell[0] == '+';
        }
    }
    return out;
}

}  // namespace smdt
