#include "smdt/timestamp.hpp"

#include <array>
#include <chrono>
#include <cstdio>

#include "smdt/errors.hpp"

namespace smdt {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

bool days_in_month_ok(int y, int m, int d) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1) return false;
    int max_d = lengths[static_cast<size_t>(m - 1)];
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) max_d = 29;
    return d <= max_d;
}

bool take_digits(std::string_view s, size_t& pos, int count, int& out) {
    if (pos + count > s.size()) return false;
    int v = 0;
    for (int i = 0; i < count; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    pos += count;
    out = v;
    return true;
}

}  // namespace

Timestamp Timestamp::now() {
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::system_clock::now().time_since_epoch());
    return Timestamp::from_micros(us.count());
}

std::optional<Timestamp> Timestamp::try_parse(std::string_view s) {
    size_t pos = 0;
    int y, mo, d, h, mi, se;
    if (!take_digits(s, pos, 4, y)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, mo)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, d)) return std::nullopt;
    if (pos >= s.size() || (s[pos] != 'T' && s[pos] != ' ')) return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, h)) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, mi)) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, se)) return std::nullopt;

    if (!days_in_month_ok(y, mo, d) || h > 23 || mi > 59 || se > 60) return std::nullopt;
    if (se == 60) se = 59;  // fold leap seconds

    std::int64_t frac_micros = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        std::int64_t frac = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 6) frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int i = digits; i < 6; ++i) frac *= 10;
        frac_micros = frac;
    }

    if (pos < s.size()) {
        const std::string_view zone = s.substr(pos);
        if (zone != "Z" && zone != "z" && zone != "+00:00" && zone != "+0000" &&
            zone != "+00") {
            return std::nullopt;
        }
    }

    const std::int64_t days = days_from_civil(y, mo, d);
    const std::int64_t secs = days * 86400 + h * 3600 + mi * 60 + se;
    return Timestamp::from_micros(secs * 1'000'000 + frac_micros);
}

Timestamp Timestamp::parse(std::string_view s) {
    auto t = try_parse(s);
    if (!t) throw ValidationError("unparseable timestamp: '" + std::string(s) + "'");
    return *t;
}

std::string Timestamp::to_iso() const {
    std::int64_t secs = micros_ / 1'000'000;
    std::int64_t frac = micros_ % 1'000'000;
    if (frac < 0) {  // keep the fractional part nonnegative for negative instants
        frac += 1'000'000;
        secs -= 1;
    }
    std::int64_t days = secs / 86400;
    std::int64_t sod = secs % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);

    char buf[40];
    int n = std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                          static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                          static_cast<int>(sod % 60));
    std::string out(buf, static_cast<size_t>(n));
    if (frac != 0) {
        std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(frac));
        std::string f(buf);
        while (f.back() == '0') f.pop_back();
        out += '.';
        out += f;
    }
    out += 'Z';
    return out;
}

}  // namespace smdt
