#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "smdt/enricher.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <set>
#include <thread>

#include "smdt/errors.hpp"

namespace smdt {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ProviderKind k) {
    switch (k) {
        case ProviderKind::OpenAiCompat: return "openai_compat";
        case ProviderKind::Anthropic: return "anthropic";
        case ProviderKind::Gemini: return "gemini";
        case ProviderKind::Mock: return "mock";
    }
    return "mock";
}

ProviderKind provider_kind_from_string(std::string_view s) {
    for (auto k : {ProviderKind::OpenAiCompat, ProviderKind::Anthropic,
                   ProviderKind::Gemini, ProviderKind::Mock}) {
        if (s == to_string(k)) return k;
    }
    throw ValidationError("unknown provider_kind: '" + std::string(s) + "'");
}

std::string render_prompt(std::string_view user_template, const json& record) {
    std::string out;
    out.reserve(user_template.size());
    for (size_t i = 0; i < user_template.size(); ++i) {
        const char c = user_template[i];
        if (c == '{') {
            if (i + 1 < user_template.size() && user_template[i + 1] == '{') {
                out += '{';
                ++i;
                continue;
            }
            const size_t close = user_template.find('}', i + 1);
            if (close == std::string_view::npos)
                throw ValidationError("unterminated placeholder in template");
            const std::string key(user_template.substr(i + 1, close - i - 1));
            auto it = record.find(key);
            if (it == record.end())
                throw ValidationError("unknown placeholder '{" + key + "}'");
            if (it->is_null()) {
                // absent optionals render as empty
            } else if (it->is_string()) {
                out += it->get<std::string>();
            } else {
                out += it->dump();
            }
            i = close;
        } else if (c == '}') {
            if (i + 1 < user_template.size() && user_template[i + 1] == '}') {
                out += '}';
                ++i;
                continue;
            }
            throw ValidationError("unmatched '}' in template");
        } else {
            out += c;
        }
    }
    return out;
}

// --- providers ----------------------------------------------------------------

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // leading '/', possibly "/"
};

SplitUrl split_url(const std::string& url) {
    const size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw ValidationError("base_url must include a scheme: '" + url + "'");
    const size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

struct HttpResult {
    bool transport_ok = false;
    int status = 0;
    std::string body;
    std::string error;
};

class HttpProviderBase : public Provider {
public:
    explicit HttpProviderBase(const EnricherConfig& config)
        : url_(split_url(config.base_url)),
          api_key_(config.api_key),
          max_attempts_(std::max(1, config.max_attempts)),
          retry_base_ms_(std::max(0, config.retry_base_ms)) {}

protected:
    virtual std::string request_path() const = 0;
    virtual httplib::Headers request_headers() const = 0;
    virtual std::string request_body(const std::string& system_prompt,
                                     const std::string& user_prompt,
                                     const std::string& chat_model_id,
                                     std::int64_t max_tokens) const = 0;
    virtual ProviderResponse parse_response(const std::string& body) const = 0;

public:
    ProviderResponse send(const std::string& system_prompt, const std::string& user_prompt,
                          const std::string& chat_model_id,
                          std::int64_t max_tokens) override {
        const std::string path = request_path();
        const std::string payload =
            request_body(system_prompt, user_prompt, chat_model_id, max_tokens);
        const httplib::Headers headers = request_headers();

        HttpResult result;
        int retries = 0;
        for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
            result = post_once(path, headers, payload);
            const bool retryable =
                !result.transport_ok ||
                result.status == 429 || result.status >= 500;
            if (!retryable) break;
            if (attempt == max_attempts_) break;
            ++retries;
            const auto delay = std::chrono::milliseconds(
                static_cast<std::int64_t>(retry_base_ms_) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }

        if (!result.transport_ok)
            throw TransportError("transport failure after " +
                                 std::to_string(max_attempts_) + " attempts: " +
                                 result.error);
        if (result.status == 401 || result.status == 403)
            throw AuthError("authentication rejected (HTTP " +
                            std::to_string(result.status) + ")");
        if (result.status < 200 || result.status >= 300)
            throw TransportError("terminal HTTP status " + std::to_string(result.status));

        ProviderResponse response = parse_response(result.body);
        response.retries = retries;
        return response;
    }

private:
    HttpResult post_once(const std::string& path, const httplib::Headers& headers,
                         const std::string& payload) const {
        httplib::Client client(url_.origin);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        httplib::Result res = client.Post(path, headers, payload, "application/json");
        HttpResult out;
        if (!res) {
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.transport_ok = true;
        out.status = res->status;
        out.body = res->body;
        return out;
    }

protected:
    SplitUrl url_;
    std::string api_key_;
    int max_attempts_;
    int retry_base_ms_;
};

// POST {base_url}/chat/completions with bearer auth; text at
// choices[0].message.content. Gemini rides the same surface.
class OpenAiCompatProvider final : public HttpProviderBase {
public:
    using HttpProviderBase::HttpProviderBase;

private:
    std::string request_path() const override { return url_.path + "/chat/completions"; }

    httplib::Headers request_headers() const override {
        httplib::Headers h;
        if (!api_key_.empty()) h.emplace("Authorization", "Bearer " + api_key_);
        return h;
    }

    std::string request_body(const std::string& system_prompt,
                             const std::string& user_prompt,
                             const std::string& chat_model_id,
                             std::int64_t max_tokens) const override {
        ordered_json body;
        body["model"] = chat_model_id;
        body["messages"] = ordered_json::array(
            {{{"role", "system"}, {"content", system_prompt}},
             {{"role", "user"}, {"content", user_prompt}}});
        body["max_tokens"] = max_tokens;
        return body.dump();
    }

    ProviderResponse parse_response(const std::string& body) const override {
        const json j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty() || !j["choices"][0].contains("message") ||
            !j["choices"][0]["message"].contains("content") ||
            !j["choices"][0]["message"]["content"].is_string()) {
            throw TransportError("response body does not match the chat-completions schema");
        }
        ProviderResponse r;
        r.response_text = j["choices"][0]["message"]["content"].get<std::string>();
        if (j["choices"][0].contains("finish_reason") &&
            j["choices"][0]["finish_reason"].is_string())
            r.finish_reason = j["choices"][0]["finish_reason"].get<std::string>();
        return r;
    }
};

// POST to base_url as given; api-key and version headers; text at
// content[0].text.
class AnthropicProvider final : public HttpProviderBase {
public:
    using HttpProviderBase::HttpProviderBase;

private:
    std::string request_path() const override {
        return url_.path.empty() ? "/" : url_.path;
    }

    httplib::Headers request_headers() const override {
        httplib::Headers h;
        h.emplace("x-api-key", api_key_);
        h.emplace("anthropic-version", "2023-06-01");
        return h;
    }

    std::string request_body(const std::string& system_prompt,
                             const std::string& user_prompt,
                             const std::string& chat_model_id,
                             std::int64_t max_tokens) const override {
        ordered_json body;
        body["model"] = chat_model_id;
        body["system"] = system_prompt;
        body["messages"] =
            ordered_json::array({{{"role", "user"}, {"content", user_prompt}}});
        body["max_tokens"] = max_tokens;
        return body.dump();
    }

    ProviderResponse parse_response(const std::string& body) const override {
        const json j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("content") || !j["content"].is_array() ||
            j["content"].empty() || !j["content"][0].contains("text") ||
            !j["content"][0]["text"].is_string()) {
            throw TransportError("response body does not match the messages schema");
        }
        ProviderResponse r;
        r.response_text = j["content"][0]["text"].get<std::string>();
        if (j.contains("stop_reason") && j["stop_reason"].is_string())
            r.finish_reason = j["stop_reason"].get<std::string>();
        return r;
    }
};

class MockProvider final : public Provider {
public:
    explicit MockProvider(const EnricherConfig& config)
        : mode_(config.mock_mode),
          fixed_text_(config.mock_fixed_text),
          fail_marker_(config.mock_fail_marker) {}

    ProviderResponse send(const std::string&, const std::string& user_prompt,
                          const std::string&, std::int64_t) override {
        if (!fail_marker_.empty() && user_prompt.find(fail_marker_) != std::string::npos)
            throw TransportError("mock provider failure (marker matched)");
        ProviderResponse r;
        r.response_text =
            mode_ == EnricherConfig::MockMode::Echo ? user_prompt : fixed_text_;
        r.finish_reason = "stop";
        return r;
    }

private:
    EnricherConfig::MockMode mode_;
    std::string fixed_text_;
    std::string fail_marker_;
};

}  // namespace

std::unique_ptr<Provider> make_provider(const EnricherConfig& config) {
    switch (config.provider_kind) {
        case ProviderKind::Mock:
            return std::make_unique<MockProvider>(config);
        case ProviderKind::OpenAiCompat:
        case ProviderKind::Gemini:
            // Gemini is reached through its OpenAI-compatible endpoint; point
            // base_url at that surface.
            if (config.base_url.empty())
                throw ValidationError("base_url is required for HTTP providers");
            return std::make_unique<OpenAiCompatProvider>(config);
        case ProviderKind::Anthropic:
            if (config.base_url.empty())
                throw ValidationError("base_url is required for HTTP providers");
            return std::make_unique<AnthropicProvider>(config);
    }
    throw ValidationError("unknown provider kind");
}

// --- runner -------------------------------------------------------------------

namespace {

void validate_enricher_config(const EnricherConfig& config) {
    if (config.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (config.max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
    if (config.chat_model_id.empty()) throw ValidationError("chat_model_id must be set");
    if (config.model_id_postfix.empty())
        throw ValidationError("model_id_postfix must be set");
    if (config.parallelism < 1) throw ValidationError("parallelism must be >= 1");

    // Placeholders must name fields of the target table.
    const Table table = config.target_kind == EnrichmentTargetKind::Account
                            ? Table::Accounts
                            : Table::Posts;
    const auto& fields = table_fields(table);
    const std::string_view tmpl = config.user_template;
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') continue;
        if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            ++i;
            continue;
        }
        const size_t close = tmpl.find('}', i + 1);
        if (close == std::string_view::npos)
            throw ValidationError("unterminated placeholder in template");
        const std::string key(tmpl.substr(i + 1, close - i - 1));
        if (std::find(fields.begin(), fields.end(), key) == fields.end())
            throw ValidationError("template placeholder '{" + key +
                                  "}' is not a field of " +
                                  std::string(table_name(table)));
        i = close;
    }
}

struct Target {
    std::string id;
    json row;  // interchange view used for rendering
};

std::vector<Target> collect_targets(Store& store, const EnricherConfig& config) {
    const Table table = config.target_kind == EnrichmentTargetKind::Account
                            ? Table::Accounts
                            : Table::Posts;
    Filter filter = config.target_filter.value_or(Filter{});
    std::vector<Target> targets;
    // Rows arrive ordered by (id, retrieved_at); the latest snapshot of each
    // id wins for template rendering.
    for (const AnyRecord& rec : store.query(table, filter)) {
        json row = record_to_json(rec);
        std::string id = config.target_kind == EnrichmentTargetKind::Account
                             ? row.at("account_id").get<std::string>()
                             : row.at("post_id").get<std::string>();
        if (!targets.empty() && targets.back().id == id) {
            targets.back().row = std::move(row);
        } else {
            targets.push_back(Target{std::move(id), std::move(row)});
        }
    }
    return targets;
}

std::set<std::string> cached_target_ids(Store& store, const EnricherConfig& config,
                                        const std::string& model_id) {
    const Table table = config.target_kind == EnrichmentTargetKind::Account
                            ? Table::AccountEnrichments
                            : Table::PostEnrichments;
    Filter filter;
    filter.clauses.push_back(FilterClause::eq("model_id", model_id));
    std::set<std::string> ids;
    for (const AnyRecord& rec : store.query(table, filter)) {
        ids.insert(std::get<EnrichmentRecord>(rec).target_id);
    }
    return ids;
}

}  // namespace

EnrichReport run_enricher(const std::string& enricher_name, Store& store,
                          const EnricherConfig& config) {
    if (enricher_name != "textgen")
        throw ValidationError("unknown enricher '" + enricher_name + "'");
    validate_enricher_config(config);

    const std::string model_id = config.chat_model_id + ":" + config.model_id_postfix;
    const Timestamp run_at = config.now_override.value_or(Timestamp::now());
    auto provider = make_provider(config);

    EnrichReport report;

    if (config.reset_cache) store.delete_enrichments(config.target_kind, model_id);

    const auto cached = cached_target_ids(store, config, model_id);
    std::vector<Target> targets = collect_targets(store, config);
    report.targets_considered = static_cast<std::int64_t>(targets.size());

    std::vector<Target> pending;
    for (auto& t : targets) {
        if (config.only_missing && cached.count(t.id) > 0) {
            report.targets_skipped_cached += 1;
        } else {
            pending.push_back(std::move(t));
        }
    }

    struct Outcome {
        bool ok = false;
        EnrichmentRecord record;
        std::string failure;
        int retries = 0;
    };

    const size_t batch_size = static_cast<size_t>(config.batch_size);
    for (size_t base = 0; base < pending.size(); base += batch_size) {
        const size_t count = std::min(batch_size, pending.size() - base);
        report.batches_dispatched += 1;

        std::vector<Outcome> outcomes(count);
        std::atomic<size_t> next{0};
        std::atomic<std::int64_t> sent{0};
        std::exception_ptr abort_error;
        std::mutex abort_mutex;

        auto worker = [&] {
            while (true) {
                const size_t slot = next.fetch_add(1);
                if (slot >= count) return;
                {
                    std::lock_guard lock(abort_mutex);
                    if (abort_error) return;
                }
                const Target& target = pending[base + slot];
                Outcome& outcome = outcomes[slot];
                try {
                    const std::string user_prompt =
                        render_prompt(config.user_template, target.row);
                    sent.fetch_add(1);
                    const ProviderResponse resp = provider->send(
                        config.system_prompt, user_prompt, config.chat_model_id,
                        config.max_tokens);
                    outcome.retries = resp.retries;

                    ordered_json body;
                    body["response_text"] = resp.response_text;
                    body["provider_kind"] = std::string(to_string(config.provider_kind));
                    body["finish_reason"] = resp.finish_reason;

                    EnrichmentRecord rec;
                    rec.target_kind = config.target_kind;
                    rec.target_id = target.id;
                    rec.model_id = model_id;
                    rec.body = body.dump();
                    rec.created_at = run_at;
                    rec.retrieved_at = run_at;
                    outcome.record = std::move(rec);
                    outcome.ok = true;
                } catch (const AuthError&) {
                    std::lock_guard lock(abort_mutex);
                    if (!abort_error) abort_error = std::current_exception();
                    return;
                } catch (const std::exception& e) {
                    outcome.failure = e.what();
                }
            }
        };

        const size_t workers =
            std::min<size_t>(static_cast<size_t>(config.parallelism), count);
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        report.requests_sent += sent.load();
        if (abort_error) std::rethrow_exception(abort_error);

        std::vector<AnyRecord> to_store;
        for (size_t slot = 0; slot < count; ++slot) {
            Outcome& outcome = outcomes[slot];
            if (outcome.ok) {
                to_store.push_back(std::move(outcome.record));
                report.retries_total += outcome.retries;
            } else {
                report.failures += 1;
                report.failure_details.push_back(
                    EnrichFailure{pending[base + slot].id, outcome.failure});
            }
        }
        if (!to_store.empty()) {
            store.insert_batch(to_store);
            report.responses_stored += static_cast<std::int64_t>(to_store.size());
        }
    }
    return report;
}

}  // namespace smdt
