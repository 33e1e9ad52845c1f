#include "smdt/fixtures.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "smdt/errors.hpp"
#include "smdt/timestamp.hpp"

namespace smdt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::int64_t kDayStartSec = 1684022400;  // 2023-05-14T00:00:00Z
constexpr std::int64_t kDaySeconds = 86400;

// std::mt19937_64 output is pinned by the standard; distributions are not.
// All draws go through these helpers so files stay byte-identical across
// toolchains.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}

    std::int64_t below(std::int64_t n) {  // uniform-ish in [0, n)
        return static_cast<std::int64_t>(gen() % static_cast<std::uint64_t>(n));
    }
    std::int64_t between(std::int64_t lo, std::int64_t hi) {  // [lo, hi]
        return lo + below(hi - lo + 1);
    }
    bool chance(int percent) { return below(100) < percent; }
};

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string zero_pad(std::int64_t n, int width) {
    std::string s = std::to_string(n);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

std::string iso_at(std::int64_t offset_sec) {
    return Timestamp::from_seconds(kDayStartSec + offset_sec).to_iso();
}

// Tracks, per table, exactly what the adapter will hand to the store:
// received/inserted/deduplicated counts plus which fields carry values.
struct Tally {
    InsertReport expected;
    std::map<std::string, std::set<std::string>> seen_keys;
    std::map<std::string, std::map<std::string, bool>> availability;

    Tally() {
        for (Table t : kAllTables) {
            auto& fields = availability[std::string(table_name(t))];
            for (const auto& f : table_fields(t)) fields[f] = false;
        }
    }

    void record(Table table, const std::string& key,
                std::initializer_list<std::pair<const char*, bool>> fields) {
        const std::string tname(table_name(table));
        auto& counts = expected.tables[tname];
        counts.received += 1;
        if (seen_keys[tname].insert(key).second) {
            counts.inserted += 1;
        } else {
            counts.deduplicated += 1;
        }
        auto& avail = availability[tname];
        for (const auto& [field, present] : fields) {
            if (present) avail[field] = true;
        }
    }
};

// One extracted entity the generator planted in a text.
struct PlannedEntity {
    EntityType type;
    std::string body;
};

struct TextPlan {
    std::string text;
    std::vector<PlannedEntity> entities;
};

const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> words = {
        "election", "news",   "today",  "vote",    "people", "live",
        "update",   "crowd",  "stream", "poll",    "result", "debate",
        "turnout",  "ballot", "record", "evening", "matters", "watch",
        "report",   "local",  "square", "moment",  "count",  "night"};
    return words;
}

const std::vector<std::string>& hashtag_pool() {
    static const std::vector<std::string> tags = {
        "#tag01",   "#tag02",   "#tag03",  "#tag04",   "#tag05",  "#Topic06",
        "#topic06", "#Topic07", "#topic07", "#rally08", "#Rally08", "#tag09",
        "#tag10",   "#tag11",   "#tag12",  "#tag13",   "#tag14",  "#tag15",
        "#LongDebate16", "#longdebate16", "#tag17", "#tag18", "#tag19", "#tag20"};
    return tags;
}

const std::vector<std::string>& url_pool() {
    static const std::vector<std::string> urls = {
        "https://example.org/a",
        "https://www.Example.org:443/p",
        "https://news-site.io/article?id=7",
        "http://blog.example.net/post/3",
        "https://sub.domain.org/x",
        "https://video.example.com/watch",
        "https://www.portal.example.com/read",
        "https://example.org/b",
        "http://mirror.example.net/item/9",
        "https://papers.example.edu/doc"};
    return urls;
}

const std::vector<std::string>& email_pool() {
    static const std::vector<std::string> emails = {
        "press@newsroom.org", "tips@example.com", "desk@daily.example.org",
        "contact@forum.example.net"};
    return emails;
}

std::string pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<size_t>(rng.below(static_cast<std::int64_t>(pool.size())))];
}

void add_words(Rng& rng, std::string& text, int count) {
    for (int i = 0; i < count; ++i) {
        if (!text.empty()) text += ' ';
        text += pick(rng, word_pool());
    }
}

// Composes a post body out of known tokens so the embedded entity list is
// exact by construction.
TextPlan compose_text(Rng& rng, int hashtags, bool mention, bool url, bool email,
                      bool duplicate_hashtag, const std::string& mention_name) {
    TextPlan plan;
    add_words(rng, plan.text, static_cast<int>(rng.between(1, 3)));
    std::string first_tag;
    for (int i = 0; i < hashtags; ++i) {
        const std::string tag = pick(rng, hashtag_pool());
        if (i == 0) first_tag = tag;
        plan.text += ' ';
        plan.text += tag;
        plan.entities.push_back({EntityType::Hashtag, tag});
    }
    if (mention) {
        plan.text += " @";
        plan.text += mention_name;
        plan.entities.push_back({EntityType::Mention, "@" + mention_name});
    }
    if (url) {
        const std::string u = pick(rng, url_pool());
        plan.text += ' ';
        plan.text += u;
        if (rng.chance(40)) plan.text += '.';  // extraction strips this
        plan.entities.push_back({EntityType::Url, u});
    }
    add_words(rng, plan.text, static_cast<int>(rng.between(1, 2)));
    if (email) {
        const std::string e = pick(rng, email_pool());
        plan.text += " mail ";
        plan.text += e;
        plan.entities.push_back({EntityType::Email, e});
    }
    if (duplicate_hashtag && !first_tag.empty()) {
        plan.text += ' ';
        plan.text += first_tag;
        plan.entities.push_back({EntityType::Hashtag, first_tag});
    }
    return plan;
}

std::string entity_key(const std::string& post_id, EntityType type,
                       const std::string& body, std::int64_t created_sec) {
    return post_id + "\x1f" + std::string(to_string(type)) + "\x1f" + body + "\x1f" +
           std::to_string(created_sec);
}

std::string action_key(const std::string& oa, const std::string& op,
                       const std::string& ta, const std::string& tp,
                       const std::string& type, std::int64_t created_sec) {
    return oa + "\x1f" + op + "\x1f" + ta + "\x1f" + tp + "\x1f" + type + "\x1f" +
           std::to_string(created_sec);
}

// --- microblog dataset --------------------------------------------------------

struct MicroAccount {
    std::string id;
    std::string user_name;
    std::string display_name;
    std::string bio;        // empty = absent
    std::int64_t followers;
    std::string followers_raw;  // as written into JSON (may be "3.4K")
    std::int64_t friends;   // -1 = absent
    std::int64_t posts;     // -1 = absent
    bool verified_present;
    bool verified;
    std::string image;      // empty = absent
    std::string created_at;
};

enum class MicroKind { Organic, Share, Quote, Reply, BadShare, SelfShare };

struct MicroEvent {
    std::int64_t t = 0;  // seconds into the day
    int author = 0;
    MicroKind kind = MicroKind::Organic;
    int target = -1;            // index into the pre-sort event vector
    std::string bad_target_id;  // BadShare only
    TextPlan text;
    bool has_likes = false, has_shares = false, has_quotes = false,
         has_replies = false, has_views = false, has_geo = false;
    std::int64_t likes = 0, shares = 0, quotes = 0, replies = 0, views = 0;
    double lat = 0.0, lon = 0.0;
    std::vector<std::string> media_keys;
};

DatasetExpectation generate_microblog(Rng& rng, const std::filesystem::path& path) {
    constexpr int kAccounts = 200;
    constexpr int kViral = 10;
    constexpr int kOrganic = 621;
    constexpr int kBursts = 12;
    constexpr int kScatteredShares = 150;
    constexpr int kQuotes = 60;
    constexpr int kReplies = 100;
    constexpr int kBadShares = 5;
    constexpr int kSelfShares = 3;

    std::vector<MicroAccount> accounts;
    accounts.reserve(kAccounts);
    for (int i = 1; i <= kAccounts; ++i) {
        MicroAccount a;
        a.id = "u" + zero_pad(i, 3);
        a.user_name = "user" + zero_pad(i, 3);
        a.display_name = "User " + zero_pad(i, 3);
        if (rng.chance(60)) {
            std::string bio;
            add_words(rng, bio, 3);
            if (rng.chance(20)) bio += " mail " + pick(rng, email_pool());
            a.bio = bio;
        }
        a.followers = rng.between(10, 40000);
        if (rng.chance(20)) {
            // thousands written as "12,345"
            if (a.followers >= 1000) {
                a.followers_raw = std::to_string(a.followers / 1000) + "," +
                                  zero_pad(a.followers % 1000, 3);
            } else {
                a.followers_raw = std::to_string(a.followers);
            }
        } else if (rng.chance(10)) {
            // "3.4K" style; value rounded to hundreds
            a.followers = (a.followers / 100) * 100;
            if (a.followers < 1000) a.followers += 1000;
            a.followers_raw = std::to_string(a.followers / 1000) + "." +
                              std::to_string((a.followers % 1000) / 100) + "K";
        }
        a.friends = rng.chance(80) ? rng.between(5, 2000) : -1;
        a.posts = rng.chance(70) ? rng.between(1, 9000) : -1;
        a.verified_present = rng.chance(30);
        a.verified = a.verified_present && rng.chance(30);
        if (rng.chance(40)) a.image = "https://img.example.com/u/" + a.id + ".png";
        a.created_at = "20" + zero_pad(10 + i % 12, 2) + "-" + zero_pad(1 + i % 12, 2) +
                       "-" + zero_pad(1 + i % 28, 2) + "T00:00:00Z";
        accounts.push_back(std::move(a));
    }

    std::vector<MicroEvent> events;
    auto reserve_total = kViral + kOrganic + kBursts * 5 + kScatteredShares + kQuotes +
                         kReplies + kBadShares + kSelfShares;
    events.reserve(static_cast<size_t>(reserve_total));

    // Viral seed posts: five authors, early in the day, heavily shared later.
    for (int i = 0; i < kViral; ++i) {
        MicroEvent e;
        e.t = rng.between(0, 7199);
        e.author = i % 5;  // u001..u005
        e.kind = MicroKind::Organic;
        e.text = compose_text(rng, 2, false, rng.chance(50), false, false, "");
        e.has_likes = true;
        e.likes = rng.between(100, 5000);
        e.has_shares = true;
        e.shares = rng.between(50, 900);
        events.push_back(std::move(e));
    }

    for (int i = 0; i < kOrganic; ++i) {
        MicroEvent e;
        e.t = rng.between(0, kDaySeconds - 1);
        e.author = static_cast<int>(rng.below(kAccounts));
        e.kind = MicroKind::Organic;
        const int tags = static_cast<int>(rng.between(0, 3));
        const bool dup = tags > 0 && rng.chance(4);
        const std::string mention_name =
            accounts[static_cast<size_t>(rng.below(kAccounts))].user_name;
        e.text = compose_text(rng, tags, rng.chance(25), rng.chance(30), rng.chance(6),
                              dup, mention_name);
        e.has_likes = rng.chance(90);
        e.likes = rng.between(0, 800);
        e.has_shares = rng.chance(70);
        e.shares = rng.between(0, 300);
        e.has_quotes = rng.chance(40);
        e.quotes = rng.between(0, 60);
        e.has_replies = rng.chance(60);
        e.replies = rng.between(0, 120);
        e.has_views = rng.chance(30);
        e.views = rng.between(100, 90000);
        if (rng.chance(5)) {
            e.has_geo = true;
            e.lat = static_cast<double>(rng.between(-60, 60)) + 0.5;
            e.lon = static_cast<double>(rng.between(-170, 170)) + 0.5;
        }
        if (rng.chance(10)) {
            e.media_keys.push_back("mk_" + zero_pad(rng.between(1, 500), 4));
        }
        events.push_back(std::move(e));
    }

    // Share bursts: one fan repeatedly reshares one viral author within a
    // single hour, so hourly windows keep edges at min_weight 3.
    for (int k = 0; k < kBursts; ++k) {
        const int fan = 5 + k;                 // u006..u017
        const int viral_author = k % 5;        // u001..u005
        const std::int64_t hour = 3 + k;       // hours 3..14
        const int reposts = 3 + k % 3;         // 3, 4, 5
        for (int r = 0; r < reposts; ++r) {
            MicroEvent e;
            e.t = hour * 3600 + rng.between(0, 3599);
            e.author = fan;
            e.kind = MicroKind::Share;
            // any viral post by that author
            int candidate = viral_author + 5 * static_cast<int>(rng.below(2));
            e.target = candidate;
            e.text = TextPlan{};  // plain reshares carry no text
            events.push_back(std::move(e));
        }
    }

    auto pick_earlier_target = [&](std::int64_t& t_out) {
        // Reference targets come from the viral/organic range with room left
        // in the day for the referencing post.
        while (true) {
            const int idx = static_cast<int>(rng.below(kViral + kOrganic));
            const MicroEvent& target = events[static_cast<size_t>(idx)];
            if (target.t >= kDaySeconds - 120) continue;
            const std::int64_t latest = std::min<std::int64_t>(
                target.t + rng.between(60, 3 * 3600), kDaySeconds - 1);
            t_out = std::max(latest, target.t + 1);
            return idx;
        }
    };

    for (int i = 0; i < kScatteredShares; ++i) {
        MicroEvent e;
        e.kind = MicroKind::Share;
        e.target = pick_earlier_target(e.t);
        e.author = static_cast<int>(rng.below(kAccounts));
        if (rng.chance(30)) {
            e.text = TextPlan{};
        } else {
            e.text = compose_text(rng, 0, false, false, false, false, "");
        }
        events.push_back(std::move(e));
    }
    for (int i = 0; i < kQuotes; ++i) {
        MicroEvent e;
        e.kind = MicroKind::Quote;
        e.target = pick_earlier_target(e.t);
        e.author = static_cast<int>(rng.below(kAccounts));
        e.text = compose_text(rng, static_cast<int>(rng.between(0, 1)), false,
                              rng.chance(15), false, false, "");
        e.has_likes = rng.chance(70);
        e.likes = rng.between(0, 200);
        events.push_back(std::move(e));
    }
    for (int i = 0; i < kReplies; ++i) {
        MicroEvent e;
        e.kind = MicroKind::Reply;
        e.target = pick_earlier_target(e.t);
        e.author = static_cast<int>(rng.below(kAccounts));
        const std::string mention_name =
            accounts[static_cast<size_t>(rng.below(kAccounts))].user_name;
        e.text = compose_text(rng, 0, rng.chance(60), false, false, false, mention_name);
        e.has_likes = rng.chance(60);
        e.likes = rng.between(0, 90);
        events.push_back(std::move(e));
    }
    for (int i = 0; i < kBadShares; ++i) {
        MicroEvent e;
        e.kind = MicroKind::BadShare;
        e.t = rng.between(4 * 3600, kDaySeconds - 1);
        e.author = static_cast<int>(rng.below(kAccounts));
        e.bad_target_id = "px" + zero_pad(9000 + i, 4);  // never assigned
        e.text = TextPlan{};
        events.push_back(std::move(e));
    }
    for (int i = 0; i < kSelfShares; ++i) {
        MicroEvent e;
        e.kind = MicroKind::SelfShare;
        e.target = pick_earlier_target(e.t);
        e.author = events[static_cast<size_t>(e.target)].author;  // own post
        e.text = TextPlan{};
        events.push_back(std::move(e));
    }

    // Chronological ids, stable for equal timestamps.
    std::vector<size_t> order(events.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return events[a].t < events[b].t;
    });
    std::vector<std::string> post_ids(events.size());
    for (size_t pos = 0; pos < order.size(); ++pos) {
        post_ids[order[pos]] = "p" + zero_pad(static_cast<std::int64_t>(pos) + 1, 4);
    }

    // Emit JSONL with three malformed lines at fixed offsets, tallying what
    // the generic_microblog adapter will produce for each valid line.
    Tally tally;
    std::int64_t share_actions = 0;
    std::string out;
    std::int64_t line_no = 0;
    const std::map<std::int64_t, std::string> malformed = {
        {100, "{\"id\": \"broken"},
        {500, "[\"not\",\"an\",\"object\"]"},
        {900,
         "{\"text\": \"missing id\", \"ts\": \"2023-05-14T12:00:00Z\", "
         "\"user\": {\"id\": \"u001\"}}"},
    };

    const std::string retr_key = "<run-default>";  // one default per ingestion run

    for (size_t pos = 0; pos < order.size(); ++pos) {
        if (auto it = malformed.find(line_no); it != malformed.end()) {
            out += it->second;
            out += '\n';
            ++line_no;
        }
        const MicroEvent& e = events[order[pos]];
        const MicroAccount& a = accounts[static_cast<size_t>(e.author)];
        const std::string& post_id = post_ids[order[pos]];

        ordered_json line;
        line["id"] = post_id;
        line["ts"] = iso_at(e.t);
        line["text"] = e.text.text;

        ordered_json user;
        user["id"] = a.id;
        user["name"] = a.user_name;
        user["display_name"] = a.display_name;
        if (!a.bio.empty()) user["bio"] = a.bio;
        if (!a.followers_raw.empty()) {
            user["followers"] = a.followers_raw;
        } else {
            user["followers"] = a.followers;
        }
        if (a.friends >= 0) user["friends"] = a.friends;
        if (a.posts >= 0) user["posts"] = a.posts;
        if (a.verified_present) user["verified"] = a.verified;
        if (!a.image.empty()) user["image"] = a.image;
        user["created_at"] = a.created_at;
        line["user"] = std::move(user);

        if (e.has_likes) line["likes"] = e.likes;
        if (e.has_shares) line["shares"] = e.shares;
        if (e.has_quotes) line["quotes"] = e.quotes;
        if (e.has_replies) line["replies"] = e.replies;
        if (e.has_views) line["views"] = e.views;
        if (e.has_geo) line["geo"] = ordered_json::array({e.lat, e.lon});
        if (!e.media_keys.empty()) line["media_keys"] = e.media_keys;

        std::string target_id;
        if (e.kind == MicroKind::BadShare) {
            target_id = e.bad_target_id;
        } else if (e.target >= 0) {
            target_id = post_ids[static_cast<size_t>(e.target)];
        }
        const char* ref_key = nullptr;
        const char* action_name = nullptr;
        switch (e.kind) {
            case MicroKind::Share:
            case MicroKind::BadShare:
            case MicroKind::SelfShare:
                ref_key = "repost_of";
                action_name = "SHARE";
                break;
            case MicroKind::Quote:
                ref_key = "quote_of";
                action_name = "QUOTE";
                break;
            case MicroKind::Reply:
                ref_key = "reply_to";
                action_name = "REPLY";
                break;
            case MicroKind::Organic: break;
        }
        if (ref_key != nullptr) line[ref_key] = target_id;

        out += line.dump();
        out += '\n';
        ++line_no;

        // Adapter output tally.
        tally.record(Table::Accounts, a.id + "\x1f" + retr_key,
                     {{"account_id", true},
                      {"user_name", true},
                      {"profile_name", true},
                      {"bio", !a.bio.empty()},
                      {"location", false},
                      {"post_count", a.posts >= 0},
                      {"friend_count", a.friends >= 0},
                      {"follower_count", true},
                      {"is_verified", a.verified_present},
                      {"profile_image_url", !a.image.empty()},
                      {"created_at", true},
                      {"retrieved_at", true}});
        tally.record(Table::Posts, post_id + "\x1f" + retr_key,
                     {{"post_id", true},
                      {"account_id", true},
                      {"conversation_id", false},
                      {"community_id", false},
                      {"body", true},
                      {"location", e.has_geo},
                      {"like_count", e.has_likes},
                      {"dislike_count", false},
                      {"view_count", e.has_views},
                      {"share_count", e.has_shares},
                      {"comment_count", e.has_replies},
                      {"quote_count", e.has_quotes},
                      {"bookmark_count", false},
                      {"created_at", true},
                      {"retrieved_at", true}});
        for (const auto& entity : e.text.entities) {
            tally.record(Table::Entities,
                         entity_key(post_id, entity.type, entity.body, e.t),
                         {{"post_id", true},
                          {"body", true},
                          {"entity_type", true},
                          {"created_at", true},
                          {"retrieved_at", true}});
        }
        for (const auto& mk : e.media_keys) {
            tally.record(Table::Entities,
                         entity_key(post_id, EntityType::MediaKey, mk, e.t),
                         {{"post_id", true},
                          {"body", true},
                          {"entity_type", true},
                          {"created_at", true},
                          {"retrieved_at", true}});
        }
        if (action_name != nullptr) {
            tally.record(Table::Actions,
                         action_key(a.id, post_id, "", target_id, action_name, e.t),
                         {{"originator_account_id", true},
                          {"originator_post_id", true},
                          {"target_account_id", false},
                          {"target_post_id", true},
                          {"action_type", true},
                          {"created_at", true},
                          {"retrieved_at", true}});
            if (std::string_view(action_name) == "SHARE") ++share_actions;
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file.is_open()) throw StoreError("cannot write fixture: " + path.string());
    file << out;
    file.flush();
    if (!file.good()) throw StoreError("write failed: " + path.string());

    DatasetExpectation ds;
    ds.file_name = path.filename().string();
    ds.adapter = "generic_microblog";
    ds.lines = line_no;
    ds.malformed = static_cast<std::int64_t>(malformed.size());
    ds.sha256 = sha256_hex(out);
    ds.expected_insert = tally.expected;
    ds.availability = tally.availability;
    ds.share_actions = share_actions;
    return ds;
}

// --- forum dataset -------------------------------------------------------------

struct ForumEvent {
    std::int64_t t = 0;
    int author = 0;
    int community = 0;
    bool is_submission = true;
    int target = -1;  // parent, for comments
    int root = -1;    // thread submission, for comments
    TextPlan text;
    std::string title;  // submissions only
    std::int64_t score = 0;
    bool has_comments = false;
    std::int64_t comments = 0;
    bool iso_time = true;  // otherwise epoch "created_utc"
};

DatasetExpectation generate_forum(Rng& rng, const std::filesystem::path& path) {
    constexpr int kAccounts = 100;
    constexpr int kCommunities = 10;
    constexpr int kSubmissions = 150;
    constexpr int kComments = 347;

    struct ForumCommunity {
        std::string id, name, title, description, image, created_at;
        std::int64_t members;
    };
    std::vector<ForumCommunity> communities;
    for (int i = 1; i <= kCommunities; ++i) {
        ForumCommunity c;
        c.id = "c" + zero_pad(i, 2);
        c.name = "forum_" + zero_pad(i, 2);
        c.title = "Forum " + zero_pad(i, 2);
        std::string desc;
        add_words(rng, desc, 4);
        if (i <= 2) desc += " mail " + pick(rng, email_pool());
        c.description = desc;
        c.members = rng.between(200, 90000);
        if (rng.chance(50)) c.image = "https://img.example.com/c/" + c.id + ".png";
        c.created_at = "2019-" + zero_pad(1 + i % 12, 2) + "-01T00:00:00Z";
        communities.push_back(std::move(c));
    }

    struct ForumAccount {
        std::string id, name, display_name, created_at;
    };
    std::vector<ForumAccount> accounts;
    for (int i = 1; i <= kAccounts; ++i) {
        ForumAccount a;
        a.id = "fu" + zero_pad(i, 3);
        a.name = "forum_user_" + zero_pad(i, 3);
        a.display_name = "Forum User " + zero_pad(i, 3);
        a.created_at = "2018-" + zero_pad(1 + i % 12, 2) + "-" +
                       zero_pad(1 + i % 28, 2) + "T00:00:00Z";
        accounts.push_back(std::move(a));
    }

    std::vector<ForumEvent> events;
    events.reserve(kSubmissions + kComments);
    for (int i = 0; i < kSubmissions; ++i) {
        ForumEvent e;
        e.t = rng.between(0, 72000);  // leave room for comment threads
        e.author = static_cast<int>(rng.below(kAccounts));
        e.community = static_cast<int>(rng.below(kCommunities));
        e.is_submission = true;
        std::string title;
        add_words(rng, title, static_cast<int>(rng.between(2, 4)));
        e.title = title;
        e.text = compose_text(rng, static_cast<int>(rng.between(0, 2)), false,
                              rng.chance(35), rng.chance(5), false, "");
        e.score = rng.between(0, 4000);
        e.has_comments = true;
        e.comments = rng.between(0, 400);
        e.iso_time = rng.chance(50);
        events.push_back(std::move(e));
    }
    for (int i = 0; i < kComments; ++i) {
        ForumEvent e;
        e.is_submission = false;
        // parent among everything created so far (submissions and earlier comments)
        const int parent = static_cast<int>(rng.below(static_cast<std::int64_t>(events.size())));
        const ForumEvent& p = events[static_cast<size_t>(parent)];
        e.target = parent;
        e.root = p.is_submission ? parent : p.root;
        e.community = events[static_cast<size_t>(e.root)].community;
        e.t = std::min<std::int64_t>(p.t + rng.between(60, 4 * 3600), kDaySeconds - 1);
        if (e.t <= p.t) e.t = std::min<std::int64_t>(p.t + 1, kDaySeconds - 1);
        e.author = static_cast<int>(rng.below(kAccounts));
        const std::string mention_name =
            accounts[static_cast<size_t>(rng.below(kAccounts))].name;
        e.text = compose_text(rng, static_cast<int>(rng.between(0, 1)),
                              rng.chance(20), rng.chance(15), false, false,
                              mention_name);
        e.score = rng.between(-20, 900);
        if (e.score < 0) e.score = 0;  // store rejects negative counts
        e.iso_time = rng.chance(50);
        events.push_back(std::move(e));
    }

    std::vector<size_t> order(events.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return events[a].t < events[b].t;
    });
    std::vector<std::string> post_ids(events.size());
    for (size_t pos = 0; pos < order.size(); ++pos) {
        post_ids[order[pos]] = "f" + zero_pad(static_cast<std::int64_t>(pos) + 1, 4);
    }

    const std::string retrieved_iso = "2023-05-20T12:00:00Z";

    Tally tally;
    std::string out;
    std::int64_t line_no = 0;
    const std::map<std::int64_t, std::string> malformed = {
        {50, "{\"id\": \"fbroken"},
        {250, "42"},
        {450, "{\"id\": \"fx01\", \"author\": {\"id\": \"fu001\"}, \"body\": \"no time\"}"},
    };

    for (size_t pos = 0; pos < order.size(); ++pos) {
        if (auto it = malformed.find(line_no); it != malformed.end()) {
            out += it->second;
            out += '\n';
            ++line_no;
        }
        const ForumEvent& e = events[order[pos]];
        const ForumAccount& a = accounts[static_cast<size_t>(e.author)];
        const ForumCommunity& c = communities[static_cast<size_t>(e.community)];
        const std::string& post_id = post_ids[order[pos]];

        ordered_json line;
        line["id"] = post_id;
        line["kind"] = e.is_submission ? "submission" : "comment";
        if (e.iso_time) {
            line["created_at"] = iso_at(e.t);
        } else {
            line["created_utc"] = kDayStartSec + e.t;
        }
        line["retrieved_at"] = retrieved_iso;

        ordered_json author;
        author["id"] = a.id;
        author["name"] = a.name;
        author["display_name"] = a.display_name;
        author["created_at"] = a.created_at;
        line["author"] = std::move(author);

        ordered_json sub;
        sub["id"] = c.id;
        sub["name"] = c.name;
        sub["title"] = c.title;
        sub["description"] = c.description;
        sub["public"] = true;
        sub["members"] = c.members;
        if (!c.image.empty()) sub["image"] = c.image;
        sub["created_at"] = c.created_at;
        line["subforum"] = std::move(sub);

        if (e.is_submission) line["title"] = e.title;
        line["body"] = e.text.text;
        line["score"] = e.score;
        if (e.has_comments) line["comments"] = e.comments;
        line["thread_id"] = e.is_submission ? post_id
                                            : post_ids[static_cast<size_t>(e.root)];
        if (!e.is_submission)
            line["parent_id"] = post_ids[static_cast<size_t>(e.target)];

        out += line.dump();
        out += '\n';
        ++line_no;

        // Adapter output tally. The stored body prepends the title for
        // submissions, matching generic_forum.
        tally.record(Table::Communities, c.id + "\x1f" + retrieved_iso,
                     {{"community_id", true},
                      {"community_type", true},
                      {"community_username", true},
                      {"community_name", true},
                      {"bio", true},
                      {"is_public", true},
                      {"member_count", true},
                      {"post_count", false},
                      {"profile_image_url", !c.image.empty()},
                      {"owner_account_id", false},
                      {"created_at", true},
                      {"retrieved_at", true}});
        tally.record(Table::Accounts, a.id + "\x1f" + retrieved_iso,
                     {{"account_id", true},
                      {"user_name", true},
                      {"profile_name", true},
                      {"bio", false},
                      {"location", false},
                      {"post_count", false},
                      {"friend_count", false},
                      {"follower_count", false},
                      {"is_verified", false},
                      {"profile_image_url", false},
                      {"created_at", true},
                      {"retrieved_at", true}});
        tally.record(Table::Posts, post_id + "\x1f" + retrieved_iso,
                     {{"post_id", true},
                      {"account_id", true},
                      {"conversation_id", true},
                      {"community_id", true},
                      {"body", true},
                      {"location", false},
                      {"like_count", true},
                      {"dislike_count", false},
                      {"view_count", false},
                      {"share_count", false},
                      {"comment_count", e.has_comments},
                      {"quote_count", false},
                      {"bookmark_count", false},
                      {"created_at", true},
                      {"retrieved_at", true}});
        for (const auto& entity : e.text.entities) {
            tally.record(Table::Entities,
                         entity_key(post_id, entity.type, entity.body, e.t),
                         {{"post_id", true},
                          {"body", true},
                          {"entity_type", true},
                          {"created_at", true},
                          {"retrieved_at", true}});
        }
        if (!e.is_submission) {
            tally.record(Table::Actions,
                         action_key(a.id, post_id, "",
                                    post_ids[static_cast<size_t>(e.target)], "REPLY",
                                    e.t),
                         {{"originator_account_id", true},
                          {"originator_post_id", true},
                          {"target_account_id", false},
                          {"target_post_id", true},
                          {"action_type", true},
                          {"created_at", true},
                          {"retrieved_at", true}});
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file.is_open()) throw StoreError("cannot write fixture: " + path.string());
    file << out;
    file.flush();
    if (!file.good()) throw StoreError("write failed: " + path.string());

    DatasetExpectation ds;
    ds.file_name = path.filename().string();
    ds.adapter = "generic_forum";
    ds.lines = line_no;
    ds.malformed = static_cast<std::int64_t>(malformed.size());
    ds.sha256 = sha256_hex(out);
    ds.expected_insert = tally.expected;
    ds.availability = tally.availability;
    ds.share_actions = 0;
    return ds;
}

}  // namespace

FixtureManifest generate_fixtures(std::uint64_t seed,
                                  const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    FixtureManifest manifest;
    manifest.seed = seed;
    manifest.window_start = Timestamp::from_seconds(kDayStartSec);
    manifest.window_end = Timestamp::from_seconds(kDayStartSec + kDaySeconds);

    {
        Rng rng(seed);
        manifest.datasets.emplace("microblog",
                                  generate_microblog(rng, out_dir / "microblog.jsonl"));
    }
    {
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        manifest.datasets.emplace("forum", generate_forum(rng, out_dir / "forum.jsonl"));
    }

    std::ofstream mf(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf.is_open())
        throw StoreError("cannot write manifest: " + (out_dir / "manifest.json").string());
    mf << manifest_to_json(manifest).dump(2) << '\n';
    mf.flush();
    if (!mf.good()) throw StoreError("manifest write failed");
    return manifest;
}

nlohmann::ordered_json manifest_to_json(const FixtureManifest& manifest) {
    ordered_json j;
    j["seed"] = manifest.seed;
    j["window"] = ordered_json::array(
        {manifest.window_start.to_iso(), manifest.window_end.to_iso()});
    auto& datasets = j["datasets"] = ordered_json::object();
    for (const auto& [name, ds] : manifest.datasets) {
        ordered_json d;
        d["file"] = ds.file_name;
        d["adapter"] = ds.adapter;
        d["lines"] = ds.lines;
        d["malformed"] = ds.malformed;
        d["sha256"] = ds.sha256;
        auto& insert = d["expected_insert"] = ordered_json::object();
        for (Table t : kAllTables) {
            const auto& counts = ds.expected_insert.tables.at(std::string(table_name(t)));
            insert[std::string(table_name(t))] = {{"received", counts.received},
                                                  {"inserted", counts.inserted},
                                                  {"deduplicated", counts.deduplicated}};
        }
        auto& avail = d["availability"] = ordered_json::object();
        for (Table t : kAllTables) {
            const auto& fields = ds.availability.at(std::string(table_name(t)));
            auto& tj = avail[std::string(table_name(t))] = ordered_json::object();
            for (const auto& fname : table_fields(t)) tj[fname] = fields.at(fname);
        }
        d["share_actions"] = ds.share_actions;
        datasets[name] = std::move(d);
    }
    return j;
}

}  // namespace smdt
