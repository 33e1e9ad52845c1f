// smdt: standardize, inspect, anonymize, network, enrich and export
// social-media datasets held in single-file stores.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "smdt/anonymizer.hpp"
#include "smdt/enricher.hpp"
#include "smdt/errors.hpp"
#include "smdt/fixtures.hpp"
#include "smdt/inspector.hpp"
#include "smdt/networks.hpp"
#include "smdt/standardizer.hpp"
#include "smdt/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// --- config file ---------------------------------------------------------------

void check_keys(const json& obj, const std::string& context,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw smdt::ValidationError("config section '" + context + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw smdt::ValidationError("unknown config key '" + key + "' in " + context);
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open())
        throw smdt::ValidationError("cannot open config file: " + path);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded())
        throw smdt::ValidationError("config file is not valid JSON: " + path);
    check_keys(cfg, "config", {"stores", "ingest", "anonymize", "enrichers"});
    return cfg;
}

// Store aliases: config "stores" maps short names to paths.
std::string resolve_store(const json& cfg, const std::string& name) {
    if (cfg.contains("stores") && cfg["stores"].is_object() &&
        cfg["stores"].contains(name) && cfg["stores"][name].is_string()) {
        return cfg["stores"][name].get<std::string>();
    }
    return name;
}

std::string env_or_fail(const std::string& var) {
    const char* v = std::getenv(var.c_str());
    if (v == nullptr || *v == '\0')
        throw smdt::ValidationError("environment variable " + var + " is not set");
    return v;
}

std::map<std::string, std::vector<std::string>> field_list_map(const json& j,
                                                               const std::string& ctx) {
    std::map<std::string, std::vector<std::string>> out;
    if (!j.is_object()) throw smdt::ValidationError(ctx + " must map tables to field lists");
    for (const auto& [table, fields] : j.items()) {
        if (!fields.is_array())
            throw smdt::ValidationError(ctx + "." + table + " must be a list");
        for (const auto& f : fields) out[table].push_back(f.get<std::string>());
    }
    return out;
}

smdt::AnonymizePolicy policy_from_json(const json& j) {
    check_keys(j, "anonymize.policy",
               {"hashed_fields", "redacted_text_fields", "entity_redaction_types",
                "dropped_fields"});
    smdt::AnonymizePolicy p;
    if (j.contains("hashed_fields"))
        p.hashed_fields = field_list_map(j["hashed_fields"], "hashed_fields");
    if (j.contains("redacted_text_fields"))
        p.redacted_text_fields =
            field_list_map(j["redacted_text_fields"], "redacted_text_fields");
    if (j.contains("dropped_fields"))
        p.dropped_fields = field_list_map(j["dropped_fields"], "dropped_fields");
    if (j.contains("entity_redaction_types")) {
        p.entity_redaction_types.clear();
        for (const auto& t : j["entity_redaction_types"])
            p.entity_redaction_types.insert(
                smdt::entity_type_from_string(t.get<std::string>()));
    }
    return p;
}

smdt::Filter filter_from_json(const json& j) {
    smdt::Filter filter;
    if (!j.is_array()) throw smdt::ValidationError("target_filter must be a list of clauses");
    for (const auto& c : j) {
        check_keys(c, "filter clause", {"field", "op", "value", "values", "start", "end"});
        const std::string field = c.at("field").get<std::string>();
        const std::string op = c.at("op").get<std::string>();
        auto to_value = [](const json& v) -> smdt::FilterClause::Value {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_boolean()) return v.get<bool>();
            if (v.is_number_integer()) return v.get<std::int64_t>();
            if (v.is_number_float()) return v.get<double>();
            throw smdt::ValidationError("unsupported filter value type");
        };
        if (op == "eq") {
            filter.clauses.push_back(smdt::FilterClause::eq(field, to_value(c.at("value"))));
        } else if (op == "in") {
            std::vector<smdt::FilterClause::Value> vs;
            for (const auto& v : c.at("values")) vs.push_back(to_value(v));
            filter.clauses.push_back(smdt::FilterClause::in(field, std::move(vs)));
        } else if (op == "range") {
            filter.clauses.push_back(smdt::FilterClause::time_range(
                field, smdt::Timestamp::parse(c.at("start").get<std::string>()),
                smdt::Timestamp::parse(c.at("end").get<std::string>())));
        } else {
            throw smdt::ValidationError("unknown filter op '" + op + "'");
        }
    }
    return filter;
}

smdt::EnricherConfig enricher_from_json(const json& section) {
    check_keys(section, "enricher",
               {"model_id_postfix", "chat_model_id", "base_url", "api_key_env",
                "provider_kind", "system_prompt", "user_template", "only_missing",
                "batch_size", "reset_cache", "max_tokens", "target_kind", "target_filter",
                "parallelism", "max_attempts", "retry_base_ms", "mock_mode",
                "mock_fixed_text", "mock_fail_marker"});
    smdt::EnricherConfig cfg;
    auto str = [&](const char* k, std::string& out) {
        if (section.contains(k)) out = section.at(k).get<std::string>();
    };
    str("model_id_postfix", cfg.model_id_postfix);
    str("chat_model_id", cfg.chat_model_id);
    str("base_url", cfg.base_url);
    str("system_prompt", cfg.system_prompt);
    str("user_template", cfg.user_template);
    str("mock_fixed_text", cfg.mock_fixed_text);
    str("mock_fail_marker", cfg.mock_fail_marker);
    if (section.contains("provider_kind"))
        cfg.provider_kind =
            smdt::provider_kind_from_string(section.at("provider_kind").get<std::string>());
    if (section.contains("api_key_env"))
        cfg.api_key = env_or_fail(section.at("api_key_env").get<std::string>());
    if (section.contains("only_missing")) cfg.only_missing = section.at("only_missing").get<bool>();
    if (section.contains("batch_size")) cfg.batch_size = section.at("batch_size").get<std::int64_t>();
    if (section.contains("reset_cache")) cfg.reset_cache = section.at("reset_cache").get<bool>();
    if (section.contains("max_tokens")) cfg.max_tokens = section.at("max_tokens").get<std::int64_t>();
    if (section.contains("parallelism")) cfg.parallelism = section.at("parallelism").get<int>();
    if (section.contains("max_attempts")) cfg.max_attempts = section.at("max_attempts").get<int>();
    if (section.contains("retry_base_ms")) cfg.retry_base_ms = section.at("retry_base_ms").get<int>();
    if (section.contains("target_kind"))
        cfg.target_kind =
            smdt::target_kind_from_string(section.at("target_kind").get<std::string>());
    if (section.contains("target_filter"))
        cfg.target_filter = filter_from_json(section.at("target_filter"));
    if (section.contains("mock_mode")) {
        const std::string mode = section.at("mock_mode").get<std::string>();
        if (mode == "echo") {
            cfg.mock_mode = smdt::EnricherConfig::MockMode::Echo;
        } else if (mode == "fixed") {
            cfg.mock_mode = smdt::EnricherConfig::MockMode::Fixed;
        } else {
            throw smdt::ValidationError("mock_mode must be 'echo' or 'fixed'");
        }
    }
    return cfg;
}

// --- report rendering ------------------------------------------------------------

ordered_json insert_report_json(const smdt::InsertReport& r) {
    ordered_json j;
    for (smdt::Table t : smdt::kAllTables) {
        const auto& c = r.tables.at(std::string(smdt::table_name(t)));
        j[std::string(smdt::table_name(t))] = {{"received", c.received},
                                               {"inserted", c.inserted},
                                               {"deduplicated", c.deduplicated}};
    }
    return j;
}

void print_insert_report(std::ostream& out, const smdt::InsertReport& r) {
    out << "table                 received  inserted  deduplicated\n";
    for (smdt::Table t : smdt::kAllTables) {
        const std::string name(smdt::table_name(t));
        const auto& c = r.tables.at(name);
        out << name << std::string(22 - name.size(), ' ');
        std::string rec = std::to_string(c.received);
        out << rec << std::string(10 - rec.size(), ' ');
        std::string ins = std::to_string(c.inserted);
        out << ins << std::string(10 - ins.size(), ' ');
        out << c.deduplicated << '\n';
    }
}

std::int64_t parse_duration_seconds(const std::string& text) {
    if (text.empty()) throw smdt::ValidationError("empty duration");
    std::int64_t mult = 1;
    std::string digits = text;
    switch (text.back()) {
        case 's': mult = 1; digits.pop_back(); break;
        case 'm': mult = 60; digits.pop_back(); break;
        case 'h': mult = 3600; digits.pop_back(); break;
        case 'd': mult = 86400; digits.pop_back(); break;
        default: break;
    }
    try {
        size_t used = 0;
        const std::int64_t v = std::stoll(digits, &used);
        if (used != digits.size() || v <= 0)
            throw smdt::ValidationError("bad duration: '" + text + "'");
        return v * mult;
    } catch (const std::exception&) {
        throw smdt::ValidationError("bad duration: '" + text + "'");
    }
}

std::string compact_stamp(const smdt::Timestamp& t) {
    std::string s = t.to_iso();
    std::string out;
    for (char c : s) {
        if (c != '-' && c != ':') out += c;
    }
    return out;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) throw smdt::StoreError("cannot open output: " + out_path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"social media data toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->envname("SMDT_CONFIG");

    // fixtures
    auto* cmd_fixtures = app.add_subcommand("fixtures", "generate synthetic datasets");
    std::uint64_t fx_seed = 42;
    std::string fx_out = "fixtures";
    cmd_fixtures->add_option("--seed", fx_seed, "generator seed");
    cmd_fixtures->add_option("--out", fx_out, "output directory")->required();

    // ingest
    auto* cmd_ingest = app.add_subcommand("ingest", "standardize files into a store");
    std::string in_store, in_adapter, in_dataset = "dataset", in_retrieved;
    bool in_fail_fast = false, in_json = false;
    std::vector<std::string> in_files;
    cmd_ingest->add_option("--store", in_store, "store path or alias")->required();
    cmd_ingest->add_option("--adapter", in_adapter, "registered adapter name")->required();
    cmd_ingest->add_option("--dataset", in_dataset, "dataset name for provenance");
    cmd_ingest->add_option("--retrieved-at", in_retrieved,
                           "pin the default retrieved_at (reproducible ingestion)");
    cmd_ingest->add_flag("--fail-fast", in_fail_fast, "stop on the first failure");
    cmd_ingest->add_flag("--json", in_json, "machine-readable report");
    cmd_ingest->add_option("files", in_files, "input files")->required();

    // inspect
    auto* cmd_inspect = app.add_subcommand("inspect", "field availability report");
    std::string is_stores, is_tables, is_json_path, is_out;
    cmd_inspect->add_option("--stores", is_stores, "comma-separated store paths")->required();
    cmd_inspect->add_option("--tables", is_tables, "restrict to these tables");
    cmd_inspect->add_option("--json", is_json_path, "also write the report as JSON here");
    cmd_inspect->add_option("--out", is_out, "write the text report here instead of stdout");

    // anonymize
    auto* cmd_anon = app.add_subcommand("anonymize", "pseudonymize a store");
    bool an_force = false;
    cmd_anon->add_flag("--force", an_force, "clear an existing destination");

    // network
    auto* cmd_net = app.add_subcommand("network", "build graphs from a store");
    cmd_net->require_subcommand(1);
    std::string nw_store, nw_interaction = "SHARE", nw_entity = "HASHTAG",
                nw_right = "domain", nw_start, nw_end, nw_step, nw_out,
                nw_format = "edgelist", nw_weighting = "count";
    std::int64_t nw_min_weight = 1;
    bool nw_undirected = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--store", nw_store, "store path or alias")->required();
        sub->add_option("--start", nw_start, "range start (ISO-8601)");
        sub->add_option("--end", nw_end, "range end (ISO-8601)");
        sub->add_option("--min-weight", nw_min_weight, "drop edges below this weight");
        sub->add_option("--out", nw_out, "output file (or directory with --step)")
            ->required();
        sub->add_option("--format", nw_format, "edgelist or json")
            ->check(CLI::IsMember({"edgelist", "json"}));
    };
    auto* net_inter = cmd_net->add_subcommand("interaction", "user-user action network");
    add_common(net_inter);
    net_inter->add_option("--interaction", nw_interaction, "action type, e.g. SHARE");
    net_inter->add_option("--step", nw_step, "window step (e.g. 1h) for temporal slices");
    net_inter->add_option("--weighting", nw_weighting, "count or binary")
        ->check(CLI::IsMember({"count", "binary"}));
    net_inter->add_flag("--undirected", nw_undirected, "collapse edge direction");
    auto* net_cooc = cmd_net->add_subcommand("cooccur", "entity co-occurrence network");
    add_common(net_cooc);
    net_cooc->add_option("--entity-type", nw_entity, "HASHTAG, MENTION, URL, ...");
    auto* net_bip = cmd_net->add_subcommand("bipartite", "account-feature network");
    add_common(net_bip);
    net_bip->add_option("--right", nw_right,
                        "hashtag, mention, url, email, media_key or domain");

    // enrich
    auto* cmd_enrich = app.add_subcommand("enrich", "run a model enricher over a store");
    std::string en_store, en_name = "textgen", en_retrieved;
    bool en_json = false;
    cmd_enrich->add_option("--store", en_store, "store path or alias")->required();
    cmd_enrich->add_option("--name", en_name, "enricher section name");
    cmd_enrich->add_option("--retrieved-at", en_retrieved,
                           "pin the enrichment timestamps (reproducible runs)");
    cmd_enrich->add_flag("--json", en_json, "machine-readable report");

    // export
    auto* cmd_export = app.add_subcommand("export", "write a table as JSON-Lines");
    std::string ex_store, ex_table, ex_out;
    cmd_export->add_option("--store", ex_store, "store path or alias")->required();
    cmd_export->add_option("--table", ex_table, "schema table name")->required();
    cmd_export->add_option("--out", ex_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        json cfg = json::object();
        if (!config_path.empty()) cfg = load_config(config_path);

        if (cmd_fixtures->parsed()) {
            const auto manifest = smdt::generate_fixtures(fx_seed, fx_out);
            std::cout << "wrote " << manifest.datasets.size() << " datasets to " << fx_out
                      << " (seed " << fx_seed << ")\n";
            return 0;
        }

        if (cmd_ingest->parsed()) {
            auto store =
                smdt::Store::open(resolve_store(cfg, in_store), smdt::OpenMode::OpenOrCreate);
            auto registry = smdt::AdapterRegistry::with_builtins();
            smdt::IngestOptions options;
            options.dataset_name = in_dataset;
            options.fail_fast = in_fail_fast;
            if (!in_retrieved.empty())
                options.default_retrieved_at = smdt::Timestamp::parse(in_retrieved);
            if (cfg.contains("ingest")) {
                check_keys(cfg["ingest"], "ingest", {"dataset", "platform", "field_map"});
                if (cfg["ingest"].contains("platform"))
                    options.platform = cfg["ingest"]["platform"].get<std::string>();
                if (cfg["ingest"].contains("dataset") && in_dataset == "dataset")
                    options.dataset_name = cfg["ingest"]["dataset"].get<std::string>();
                if (cfg["ingest"].contains("field_map")) {
                    for (const auto& [from, to] : cfg["ingest"]["field_map"].items())
                        options.field_map[from] = to.get<std::string>();
                }
            }
            std::vector<fs::path> files(in_files.begin(), in_files.end());
            const auto report = smdt::run_ingestion(store, registry, in_adapter, files, options);
            if (in_json) {
                ordered_json j;
                j["files_processed"] = report.files_processed;
                j["records_read"] = report.records_read;
                j["records_failed"] = report.records_failed;
                auto& fails = j["failures"] = ordered_json::array();
                for (const auto& f : report.failures)
                    fails.push_back({{"file", f.file_path},
                                     {"record_index", f.record_index},
                                     {"reason", f.reason}});
                j["insert_report"] = insert_report_json(report.insert_report);
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << "files processed: " << report.files_processed
                          << "\nrecords read:    " << report.records_read
                          << "\nrecords failed:  " << report.records_failed << '\n';
                for (const auto& f : report.failures)
                    std::cout << "  " << f.file_path << ":" << f.record_index << "  "
                              << f.reason << '\n';
                print_insert_report(std::cout, report.insert_report);
            }
            return 0;
        }

        if (cmd_inspect->parsed()) {
            std::vector<smdt::SchemaReport> reports;
            for (const auto& name : split_commas(is_stores)) {
                const std::string path = resolve_store(cfg, name);
                if (!smdt::Store::exists(path))
                    throw smdt::ValidationError("store does not exist: " + path);
                auto store = smdt::Store::open(path, smdt::OpenMode::OpenOrCreate);
                reports.push_back(smdt::inspect_store(store));
            }
            std::optional<std::vector<std::string>> only;
            if (!is_tables.empty()) only = split_commas(is_tables);
            write_or_print(smdt::report_schemas(reports, only), is_out);
            if (!is_json_path.empty()) {
                ordered_json j = ordered_json::array();
                for (const auto& r : reports) j.push_back(smdt::schema_report_to_json(r));
                std::ofstream out(is_json_path, std::ios::binary | std::ios::trunc);
                if (!out.is_open())
                    throw smdt::StoreError("cannot open output: " + is_json_path);
                out << j.dump(2) << '\n';
            }
            return 0;
        }

        if (cmd_anon->parsed()) {
            if (!cfg.contains("anonymize"))
                throw smdt::ValidationError("config has no 'anonymize' section");
            const json& section = cfg["anonymize"];
            check_keys(section, "anonymize",
                       {"src", "dst", "algorithm", "output_hex_len", "chunk_rows",
                        "ask_reinit", "pepper_env", "policy"});
            smdt::AnonymizeConfig acfg;
            acfg.src_db_name = resolve_store(cfg, section.at("src").get<std::string>());
            acfg.dst_db_name = resolve_store(cfg, section.at("dst").get<std::string>());
            if (section.contains("algorithm"))
                acfg.algorithm =
                    smdt::hash_algorithm_from_string(section.at("algorithm").get<std::string>());
            if (section.contains("output_hex_len"))
                acfg.output_hex_len = section.at("output_hex_len").get<int>();
            if (section.contains("chunk_rows"))
                acfg.chunk_rows = section.at("chunk_rows").get<std::int64_t>();
            if (section.contains("ask_reinit"))
                acfg.ask_reinit = section.at("ask_reinit").get<bool>();
            const std::string pepper_env = section.contains("pepper_env")
                                               ? section.at("pepper_env").get<std::string>()
                                               : std::string("SMDT_PEPPER");
            acfg.pepper = env_or_fail(pepper_env);

            smdt::AnonymizePolicy policy = section.contains("policy")
                                               ? policy_from_json(section.at("policy"))
                                               : smdt::AnonymizePolicy::default_policy();

            smdt::AnonymizeRunControl control;
            control.force = an_force;
            if (acfg.ask_reinit && isatty(fileno(stdin)) != 0) {
                control.confirm = [](const std::string& dst) {
                    std::cout << "destination store '" << dst
                              << "' exists; clear and continue? [y/N] " << std::flush;
                    std::string answer;
                    std::getline(std::cin, answer);
                    return answer == "y" || answer == "Y" || answer == "yes";
                };
            }
            const auto report = smdt::run_anonymization(acfg, policy, control);
            std::cout << "rows copied:\n";
            for (const auto& [table, n] : report.rows_copied)
                std::cout << "  " << table << ": " << n << '\n';
            std::cout << "tokens issued: " << report.tokens_issued << '\n';
            for (const auto& [type, n] : report.redactions.by_type)
                std::cout << "redacted " << type << ": " << n << '\n';
            return 0;
        }

        if (cmd_net->parsed()) {
            const std::string store_path = resolve_store(cfg, nw_store);
            if (!smdt::Store::exists(store_path))
                throw smdt::ValidationError("store does not exist: " + store_path);
            auto store = smdt::Store::open(store_path, smdt::OpenMode::OpenOrCreate);

            std::optional<smdt::TimeRange> range;
            if (!nw_start.empty() || !nw_end.empty()) {
                if (nw_start.empty() || nw_end.empty())
                    throw smdt::ValidationError("--start and --end go together");
                range = smdt::TimeRange{smdt::Timestamp::parse(nw_start),
                                        smdt::Timestamp::parse(nw_end)};
            }

            auto write_one = [&](const smdt::Network& net, const fs::path& out_path) {
                if (nw_format == "json") {
                    smdt::write_network_json(net, out_path);
                } else {
                    smdt::write_edgelist(net, out_path);
                }
            };
            const std::string ext = nw_format == "json" ? ".json" : ".tsv";

            if (net_inter->parsed()) {
                const auto type = smdt::action_type_from_string(nw_interaction);
                const auto weighting = nw_weighting == "binary" ? smdt::Weighting::Binary
                                                                : smdt::Weighting::Count;
                if (!nw_step.empty()) {
                    if (!range)
                        throw smdt::ValidationError("--step needs --start and --end");
                    const auto step =
                        std::chrono::seconds(parse_duration_seconds(nw_step));
                    const auto windows = smdt::user_interaction_over_time(
                        store, type, range->start, range->end,
                        std::chrono::duration_cast<std::chrono::microseconds>(step),
                        weighting, nw_min_weight, !nw_undirected);
                    fs::create_directories(nw_out);
                    std::int64_t idx = 0;
                    for (const auto& win : windows) {
                        std::string name = "w";
                        std::string num = std::to_string(idx);
                        name += std::string(3 - std::min<size_t>(3, num.size()), '0') + num;
                        name += "_" + compact_stamp(win.window_start) + ext;
                        write_one(win.network, fs::path(nw_out) / name);
                        ++idx;
                    }
                    std::cout << windows.size() << " windows written to " << nw_out << '\n';
                } else {
                    const auto net = smdt::build_user_interaction_network(
                        store, type, range, weighting, nw_min_weight, !nw_undirected);
                    write_one(net, nw_out);
                    std::cout << "nodes: " << net.meta["node_count"]
                              << " edges: " << net.meta["edge_count"] << '\n';
                }
            } else if (net_cooc->parsed()) {
                const auto net = smdt::build_cooccurrence_network(
                    store, smdt::entity_type_from_string(nw_entity), range, nw_min_weight);
                write_one(net, nw_out);
                std::cout << "nodes: " << net.meta["node_count"]
                          << " edges: " << net.meta["edge_count"] << '\n';
            } else if (net_bip->parsed()) {
                const auto net = smdt::build_bipartite_network(
                    store, smdt::bipartite_feature_from_string(nw_right), range,
                    nw_min_weight);
                write_one(net, nw_out);
                std::cout << "nodes: " << net.meta["node_count"]
                          << " edges: " << net.meta["edge_count"] << '\n';
            }
            return 0;
        }

        if (cmd_enrich->parsed()) {
            if (!cfg.contains("enrichers") || !cfg["enrichers"].contains(en_name))
                throw smdt::ValidationError("config has no enricher section named '" +
                                            en_name + "'");
            smdt::EnricherConfig ecfg = enricher_from_json(cfg["enrichers"][en_name]);
            if (!en_retrieved.empty())
                ecfg.now_override = smdt::Timestamp::parse(en_retrieved);
            auto store =
                smdt::Store::open(resolve_store(cfg, en_store), smdt::OpenMode::OpenOrCreate);
            const auto report = smdt::run_enricher(en_name, store, ecfg);
            if (en_json) {
                ordered_json j;
                j["targets_considered"] = report.targets_considered;
                j["targets_skipped_cached"] = report.targets_skipped_cached;
                j["requests_sent"] = report.requests_sent;
                j["responses_stored"] = report.responses_stored;
                j["failures"] = report.failures;
                j["batches_dispatched"] = report.batches_dispatched;
                j["retries_total"] = report.retries_total;
                auto& fails = j["failure_details"] = ordered_json::array();
                for (const auto& f : report.failure_details)
                    fails.push_back({{"target_id", f.target_id}, {"reason", f.reason}});
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << "targets considered: " << report.targets_considered
                          << "\nskipped (cached):   " << report.targets_skipped_cached
                          << "\nrequests sent:      " << report.requests_sent
                          << "\nresponses stored:   " << report.responses_stored
                          << "\nfailures:           " << report.failures
                          << "\nbatches:            " << report.batches_dispatched << '\n';
                for (const auto& f : report.failure_details)
                    std::cout << "  " << f.target_id << ": " << f.reason << '\n';
            }
            return 0;
        }

        if (cmd_export->parsed()) {
            const std::string path = resolve_store(cfg, ex_store);
            if (!smdt::Store::exists(path))
                throw smdt::ValidationError("store does not exist: " + path);
            auto table = smdt::table_from_name(ex_table);
            if (!table) throw smdt::ValidationError("unknown table '" + ex_table + "'");
            auto store = smdt::Store::open(path, smdt::OpenMode::OpenOrCreate);
            const auto lines = store.export_json(*table, ex_out);
            std::cout << lines << " lines written to " << ex_out << '\n';
            return 0;
        }

        return 0;
    } catch (const smdt::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
