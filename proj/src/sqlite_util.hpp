#pragma once

// Thin RAII layer over the sqlite3 C API. Internal to the store and the
// modules that read through it.

#include <sqlite3.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "smdt/errors.hpp"

namespace smdt::sqlite {

class Database {
public:
    Database() = default;
    Database(const std::string& path, int flags) {
        if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
            std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
            sqlite3_close(db_);
            db_ = nullptr;
            throw StoreError("cannot open '" + path + "': " + msg);
        }
        sqlite3_extended_result_codes(db_, 1);
    }
    ~Database() { sqlite3_close_v2(db_); }

    Database(Database&& other) noexcept : db_(std::exchange(other.db_, nullptr)) {}
    Database& operator=(Database&& other) noexcept {
        if (this != &other) {
            sqlite3_close_v2(db_);
            db_ = std::exchange(other.db_, nullptr);
        }
        return *this;
    }
    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;

    sqlite3* get() const { return db_; }
    explicit operator bool() const { return db_ != nullptr; }

    void exec(const std::string& sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw StoreError("sql failed (" + sql.substr(0, 60) + "...): " + msg);
        }
    }

    std::string error() const { return db_ ? sqlite3_errmsg(db_) : "closed"; }

private:
    sqlite3* db_ = nullptr;
};

class Statement {
public:
    Statement(const Database& db, std::string_view sql) : db_(db.get()) {
        if (sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &stmt_,
                               nullptr) != SQLITE_OK) {
            throw StoreError("prepare failed: " + std::string(sqlite3_errmsg(db_)) +
                             " in: " + std::string(sql));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    void bind_null(int i) { check(sqlite3_bind_null(stmt_, i)); }
    void bind(int i, std::int64_t v) { check(sqlite3_bind_int64(stmt_, i, v)); }
    void bind(int i, double v) { check(sqlite3_bind_double(stmt_, i, v)); }
    void bind(int i, std::string_view v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()),
                                SQLITE_TRANSIENT));
    }
    template <typename T>
    void bind_opt(int i, const std::optional<T>& v) {
        if (v) {
            bind(i, *v);
        } else {
            bind_null(i);
        }
    }

    // Returns true while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StoreError("step failed: " + std::string(sqlite3_errmsg(db_)));
    }

    void reset() {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::int64_t column_int(int col) const { return sqlite3_column_int64(stmt_, col); }
    double column_double(int col) const { return sqlite3_column_double(stmt_, col); }
    std::string column_text(int col) const {
        const unsigned char* p = sqlite3_column_text(stmt_, col);
        if (p == nullptr) return {};
        return std::string(reinterpret_cast<const char*>(p),
                           static_cast<size_t>(sqlite3_column_bytes(stmt_, col)));
    }
    std::optional<std::string> column_opt_text(int col) const {
        if (is_null(col)) return std::nullopt;
        return column_text(col);
    }
    std::optional<std::int64_t> column_opt_int(int col) const {
        if (is_null(col)) return std::nullopt;
        return column_int(col);
    }
    int column_count() const { return sqlite3_column_count(stmt_); }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) {
            throw StoreError("bind failed: " + std::string(sqlite3_errmsg(db_)));
        }
    }
    sqlite3* db_ = nullptr;
    sqlite3_stmt* stmt_ = nullptr;
};

// Rolls back automatically unless commit() is called.
class Transaction {
public:
    explicit Transaction(Database& db) : db_(&db) { db_->exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (active_) {
            try {
                db_->exec("ROLLBACK");
            } catch (...) {
            }
        }
    }
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;

    void commit() {
        db_->exec("COMMIT");
        active_ = false;
    }

private:
    Database* db_;
    bool active_ = true;
};

}  // namespace smdt::sqlite
