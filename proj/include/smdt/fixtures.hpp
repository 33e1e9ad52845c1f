#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "smdt/store.hpp"

namespace smdt {

struct DatasetExpectation {
    std::string file_name;
    std::string adapter;
    std::int64_t lines = 0;
    std::int64_t malformed = 0;
    std::string sha256;  // of the emitted file
    InsertReport expected_insert;
    // table -> field -> any non-null value present after ingestion
    std::map<std::string, std::map<std::string, bool>> availability;
    std::int64_t share_actions = 0;  // SHARE rows the file carries
};

struct FixtureManifest {
    std::uint64_t seed = 0;
    Timestamp window_start, window_end;  // event timestamps live in [start, end)
    std::map<std::string, DatasetExpectation> datasets;  // "microblog", "forum"
};

// Writes microblog.jsonl, forum.jsonl and manifest.json into out_dir.
// Byte-identical output for identical seeds. Each file carries three
// deliberately malformed lines so failure accounting has known-bad input.
FixtureManifest generate_fixtures(std::uint64_t seed,
                                  const std::filesystem::path& out_dir);

nlohmann::ordered_json manifest_to_json(const FixtureManifest& manifest);

}  // namespace smdt
