#pragma once

// Shared helpers for the unit suites.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "smdt/records.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<unsigned> counter{0};
        path_ = base / ("smdt_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline smdt::Timestamp ts(const char* iso) { return smdt::Timestamp::parse(iso); }

inline smdt::PostRecord make_post(const std::string& post_id, const std::string& account_id,
                                  const char* created = "2023-05-14T10:00:00Z",
                                  const char* retrieved = "2023-05-20T00:00:00Z",
                                  const std::string& body = "hello") {
    smdt::PostRecord p;
    p.post_id = post_id;
    p.account_id = account_id;
    p.body = body;
    p.created_at = ts(created);
    p.retrieved_at = ts(retrieved);
    return p;
}

inline smdt::AccountRecord make_account(const std::string& account_id,
                                        const char* retrieved = "2023-05-20T00:00:00Z") {
    smdt::AccountRecord a;
    a.account_id = account_id;
    a.retrieved_at = ts(retrieved);
    return a;
}

inline smdt::ActionRecord make_share(const std::string& origin_account,
                                     const std::string& origin_post,
                                     const std::string& target_post,
                                     const char* created = "2023-05-14T12:00:00Z",
                                     smdt::ActionType type = smdt::ActionType::Share) {
    smdt::ActionRecord a;
    a.originator_account_id = origin_account;
    a.originator_post_id = origin_post;
    a.target_post_id = target_post;
    a.action_type = type;
    a.created_at = ts(created);
    a.retrieved_at = ts("2023-05-20T00:00:00Z");
    return a;
}

inline smdt::EntityRecord make_entity(const std::string& post_id, smdt::EntityType type,
                                      const std::string& body,
                                      const char* created = "2023-05-14T10:00:00Z") {
    smdt::EntityRecord e;
    e.post_id = post_id;
    e.body = body;
    e.entity_type = type;
    e.created_at = ts(created);
    e.retrieved_at = ts("2023-05-20T00:00:00Z");
    return e;
}

inline std::mt19937_64 make_rng(std::uint64_t seed = 0x5eed5eedULL) {
    return std::mt19937_64{seed};
}

inline std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace testutil
