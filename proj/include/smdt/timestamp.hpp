#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace smdt {

// UTC instant with microsecond precision. Serializes as ISO-8601 with an
// explicit "Z" designator; the fractional part is omitted for whole seconds.
class Timestamp {
public:
    Timestamp() = default;

    static Timestamp from_micros(std::int64_t micros) { return Timestamp(micros); }
    static Timestamp from_seconds(std::int64_t seconds) {
        return Timestamp(seconds * 1'000'000);
    }
    static Timestamp now();

    // Accepts "YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|+00:00|+0000]". A missing zone
    // designator is read as UTC. Throws ValidationError on anything else.
    static Timestamp parse(std::string_view iso);
    static std::optional<Timestamp> try_parse(std::string_view iso);

    std::int64_t micros() const { return micros_; }
    std::int64_t seconds() const { return micros_ / 1'000'000; }

    std::string to_iso() const;

    auto operator<=>(const Timestamp&) const = default;

private:
    explicit Timestamp(std::int64_t micros) : micros_(micros) {}
    std::int64_t micros_ = 0;
};

}  // namespace smdt
