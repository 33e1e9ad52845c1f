#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdt/records.hpp"
#include "smdt/store.hpp"

namespace smdt {

enum class ProviderKind { OpenAiCompat, Anthropic, Gemini, Mock };
std::string_view to_string(ProviderKind k);
ProviderKind provider_kind_from_string(std::string_view s);

struct EnricherConfig {
    std::string model_id_postfix;
    std::string chat_model_id;
    std::string base_url;  // unused by MOCK
    std::string api_key;   // secret; never logged or persisted
    ProviderKind provider_kind = ProviderKind::Mock;
    std::string system_prompt;
    std::string user_template;  // {field} placeholders over the target table
    bool only_missing = true;
    std::int64_t batch_size = 10;
    bool reset_cache = false;
    std::int64_t max_tokens = 1000;
    EnrichmentTargetKind target_kind = EnrichmentTargetKind::Post;
    std::optional<Filter> target_filter;

    // Dispatch and retry knobs.
    int parallelism = 4;    // concurrent requests within a batch
    int max_attempts = 3;   // transport errors and HTTP 429/5xx retry
    int retry_base_ms = 1000;  // exponential backoff start

    // Pinning the run clock makes stored enrichments reproducible.
    std::optional<Timestamp> now_override;

    // MOCK provider behaviour.
    enum class MockMode { Echo, Fixed };
    MockMode mock_mode = MockMode::Echo;
    std::string mock_fixed_text;
    std::string mock_fail_marker;  // prompts containing this fail per target
};

struct ProviderResponse {
    std::string response_text;
    std::string finish_reason;
    int retries = 0;  // retry attempts consumed before success
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderResponse send(const std::string& system_prompt,
                                  const std::string& user_prompt,
                                  const std::string& chat_model_id,
                                  std::int64_t max_tokens) = 0;
};

std::unique_ptr<Provider> make_provider(const EnricherConfig& config);

inline ProviderResponse provider_send(Provider& provider, const std::string& system_prompt,
                                      const std::string& user_prompt,
                                      const std::string& chat_model_id,
                                      std::int64_t max_tokens) {
    return provider.send(system_prompt, user_prompt, chat_model_id, max_tokens);
}

// Replaces {field} placeholders with the record's values (null -> empty
// string); "{{" and "}}" escape literal braces. Unknown placeholders throw
// ValidationError naming the key.
std::string render_prompt(std::string_view user_template, const nlohmann::json& record);

struct EnrichFailure {
    std::string target_id;
    std::string reason;
};

struct EnrichReport {
    std::int64_t targets_considered = 0;
    std::int64_t targets_skipped_cached = 0;
    std::int64_t requests_sent = 0;
    std::int64_t responses_stored = 0;
    std::int64_t failures = 0;
    std::int64_t batches_dispatched = 0;
    std::int64_t retries_total = 0;
    std::vector<EnrichFailure> failure_details;
};

// Runs the named enricher ("textgen") over the store. Persists one
// enrichment row per target under model_id "chat_model_id:model_id_postfix";
// only_missing skips already-enriched targets, reset_cache deletes the
// model's rows first. Authentication failures abort the run; per-target
// failures are recorded and the run continues.
EnrichReport run_enricher(const std::string& enricher_name, Store& store,
                          const EnricherConfig& config);

}  // namespace smdt
