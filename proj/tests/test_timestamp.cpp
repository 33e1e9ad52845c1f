#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smdt/errors.hpp"
#include "smdt/timestamp.hpp"

using smdt::Timestamp;

TEST_SUITE("timestamp") {

TEST_CASE("parses ISO-8601 with UTC designators") {
    const auto t = Timestamp::parse("2023-05-14T00:00:00Z");
    CHECK(t.seconds() == 1684022400);
    CHECK(Timestamp::parse("2023-05-14 00:00:00+00:00") == t);
    CHECK(Timestamp::parse("2023-05-14T00:00:00") == t);
    CHECK(Timestamp::parse("2023-05-14T00:00:00.000000Z") == t);
}

TEST_CASE("round trips through to_iso") {
    for (const char* iso : {"2023-05-14T00:00:00Z", "2019-12-31T23:59:59Z",
                            "2020-02-29T12:30:45Z", "1970-01-01T00:00:00Z"}) {
        const auto t = Timestamp::parse(iso);
        CHECK(t.to_iso() == iso);
        CHECK(Timestamp::parse(t.to_iso()) == t);
    }
}

TEST_CASE("keeps sub-second precision") {
    const auto t = Timestamp::parse("2023-05-14T08:15:30.250Z");
    CHECK(t.micros() % 1'000'000 == 250000);
    CHECK(t.to_iso() == "2023-05-14T08:15:30.25Z");
    CHECK(Timestamp::parse(t.to_iso()) == t);
}

TEST_CASE("total order matches chronology") {
    CHECK(Timestamp::parse("2023-05-14T00:00:00Z") <
          Timestamp::parse("2023-05-14T00:00:00.5Z"));
    CHECK(Timestamp::parse("2023-05-14T00:00:00.5Z") <
          Timestamp::parse("2023-05-14T00:00:01Z"));
}

TEST_CASE("rejects garbage") {
    CHECK_THROWS_AS(Timestamp::parse("not a time"), smdt::ValidationError);
    CHECK_THROWS_AS(Timestamp::parse("2023-13-01T00:00:00Z"), smdt::ValidationError);
    CHECK_THROWS_AS(Timestamp::parse("2023-02-30T00:00:00Z"), smdt::ValidationError);
    CHECK_THROWS_AS(Timestamp::parse("2023-05-14T25:00:00Z"), smdt::ValidationError);
    CHECK_THROWS_AS(Timestamp::parse("2023-05-14T00:00:00+03:00"), smdt::ValidationError);
    CHECK(!Timestamp::try_parse("").has_value());
}

TEST_CASE("epoch seconds constructor") {
    CHECK(Timestamp::from_seconds(1684022400).to_iso() == "2023-05-14T00:00:00Z");
}

}  // TEST_SUITE
