#include "doctest.h"

#include <random>
#include <set>
#include <string>
#include <vector>

#include "generators.hpp"
#include "pushsim/errors.hpp"
#include "pushsim/pushpolicy.hpp"
#include "pushsim/simulator.hpp"

using namespace pushsim;
using pushsim::testing::Rng;

namespace {

Resource make(const char* id, ResourceKind kind, int64_t size, const char* parent,
              int64_t offset) {
    Resource r;
    r.id = id;
    r.url = std::string("https://t.test/") + id;
    r.kind = kind;
    r.size_bytes = size;
    r.parent_id = parent;
    r.discovery_offset_bytes = offset;
    return r;
}

} // namespace

TEST_CASE("manifest order: stylesheets jump the queue, order kept otherwise") {
    SUBCASE("js discovered before css still trails it") {
        DependencyTree page = DependencyTree::from_resources(
            "jsfirst", {make("r.html", ResourceKind::html, 1000, "", 0),
                        make("a.js", ResourceKind::script, 100, "r.html", 0),
                        make("b.css", ResourceKind::css, 100, "r.html", 500),
                        make("c.png", ResourceKind::image, 100, "r.html", 800)});
        CHECK(build_manifest(page).ids ==
              std::vector<std::string>{"b.css", "a.js", "c.png"});
    }
    SUBCASE("fixtures") {
        CHECK(build_manifest(fixture_page("p0")).ids.empty());
        CHECK(build_manifest(fixture_page("p1")).ids ==
              std::vector<std::string>{"imga.jpg"});
        CHECK(build_manifest(fixture_page("p2")).ids ==
              std::vector<std::string>{"imga.jpg", "script.js", "imgb.jpg"});
    }
    SUBCASE("discovery order survives within each class") {
        DependencyTree page = DependencyTree::from_resources(
            "twocss", {make("r.html", ResourceKind::html, 1000, "", 0),
                       make("a.css", ResourceKind::css, 100, "r.html", 0),
                       make("i.png", ResourceKind::image, 100, "r.html", 400),
                       make("b.css", ResourceKind::css, 100, "r.html", 900)});
        CHECK(build_manifest(page).ids ==
              std::vector<std::string>{"a.css", "b.css", "i.png"});
    }
}

TEST_CASE("property: manifest is complete, stable, and no slower than naive order") {
    Rng rng(808);
    for (int i = 0; i < 60; ++i) {
        DependencyTree page = testing::random_page(rng, "mf" + std::to_string(i));
        PushManifest manifest = build_manifest(page);
        CHECK(manifest.ids == build_manifest(page).ids);

        std::set<std::string> seen(manifest.ids.begin(), manifest.ids.end());
        CHECK(seen.size() == manifest.ids.size());
        CHECK(manifest.ids.size() == page.resources().size() - 1);
        for (const std::string& id : manifest.ids) CHECK(id != page.root().id);

        LinkParams link = testing::random_link(rng);
        SimConfig c;
        c.mode = SimMode::push;
        c.link = link;
        c.push_order = manifest;
        SimResult ordered = simulate(page, c);
        CHECK(ordered.bytes_transferred == page.total_bytes());

        // Same resources in raw discovery order: equal batch, equal finish.
        SimConfig naive = c;
        naive.push_order = testing::full_manifest(page);
        CHECK(ordered.plt_s <= simulate(page, naive).plt_s + 1e-6);
    }
}

TEST_CASE("golden: digest hashes and sizing") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

    CHECK(recommended_digest_size(1000, 0.01) == std::pair<int64_t, int>{9586, 7});
    CHECK(recommended_digest_size(1, 0.5) == std::pair<int64_t, int>{2, 1});
    CHECK(recommended_digest_size(100, 0.001).first >
          recommended_digest_size(100, 0.01).first);

    CHECK(CacheDigest::with_recommended_size(1, 0.5).bit_count() == 8);
    CHECK_THROWS_AS(CacheDigest(4, 1), ValidationError);
    CHECK_THROWS_AS(CacheDigest(64, 0), ValidationError);
    CHECK_THROWS_AS(recommended_digest_size(0, 0.01), ValidationError);
    CHECK_THROWS_AS(recommended_digest_size(10, 1.0), ValidationError);
}

TEST_CASE("digest membership: no false negatives, plausible false positives") {
    CacheDigest digest(9586, 7);
    CHECK_FALSE(digest.may_contain("https://t.test/anything"));

    std::vector<std::string> inserted;
    for (int i = 0; i < 1000; ++i) {
        inserted.push_back("https://corpus.test/in/" + std::to_string(i));
        digest.insert(inserted.back());
    }
    CHECK(digest.inserted_count() == 1000);
    for (const std::string& url : inserted) CHECK(digest.may_contain(url));

    int hits = 0;
    const int probes = 100000;
    for (int i = 0; i < probes; ++i)
        hits += digest.may_contain("https://corpus.test/out/" + std::to_string(i));
    double fpr = static_cast<double>(hits) / probes;
    CHECK(fpr > 0.005);
    CHECK(fpr < 0.02);
}

TEST_CASE("digest serialization") {
    CacheDigest digest(9586, 7);
    digest.insert("https://t.test/a.css");
    digest.insert("https://t.test/b.png");

    std::vector<uint8_t> blob = digest.serialize();
    REQUIRE(blob.size() == 13 + (9586 + 7) / 8);
    CHECK(blob[0] == 0x01);
    CHECK(std::vector<uint8_t>(blob.begin() + 1, blob.begin() + 5) ==
          std::vector<uint8_t>{0, 0, 0, 7});
    CHECK(std::vector<uint8_t>(blob.begin() + 5, blob.begin() + 13) ==
          std::vector<uint8_t>{0, 0, 0, 0, 0, 0, 0x25, 0x72});

    CacheDigest back = CacheDigest::deserialize(blob);
    CHECK(back.bit_count() == 9586);
    CHECK(back.hash_count() == 7);
    CHECK(back.may_contain("https://t.test/a.css"));
    CHECK(back.may_contain("https://t.test/b.png"));
    CHECK(back.serialize() == blob);

    SUBCASE("malformed blobs are rejected") {
        CHECK_THROWS_AS(CacheDigest::deserialize({}), ParseError);
        std::vector<uint8_t> wrong_version = blob;
        wrong_version[0] = 0x02;
        CHECK_THROWS_AS(CacheDigest::deserialize(wrong_version), ParseError);
        std::vector<uint8_t> truncated(blob.begin(), blob.end() - 1);
        CHECK_THROWS_AS(CacheDigest::deserialize(truncated), ParseError);
    }
}

TEST_CASE("filtering drops cached urls and keeps manifest order") {
    DependencyTree p2 = fixture_page("p2");
    PushManifest manifest = build_manifest(p2);

    SUBCASE("one cached resource") {
        CacheDigest digest(1024, 5);
        digest.insert(p2.resource("imga.jpg").url);
        PushManifest got = filter_manifest(manifest, p2, digest);
        CHECK(got.ids == std::vector<std::string>{"script.js", "imgb.jpg"});

        SimConfig c;
        c.mode = SimMode::push;
        c.link = LinkParams{0.1, 1e8};
        c.push_order = got;
        CHECK(simulate(p2, c).bytes_transferred == p2.total_bytes());
    }
    SUBCASE("empty digest changes nothing") {
        CacheDigest digest(1024, 5);
        CHECK(filter_manifest(manifest, p2, digest).ids == manifest.ids);
    }
    SUBCASE("everything cached degrades the load to pull") {
        CacheDigest digest(1024, 5);
        for (const std::string& id : manifest.ids)
            digest.insert(p2.resource(id).url);
        PushManifest got = filter_manifest(manifest, p2, digest);
        CHECK(got.ids.empty());

        SimConfig pushc;
        pushc.mode = SimMode::push;
        pushc.link = LinkParams{0.1, 1e8};
        pushc.push_order = got;
        SimConfig pullc;
        pullc.mode = SimMode::pull;
        pullc.link = pushc.link;
        CHECK(simulate(p2, pushc).plt_s ==
              doctest::Approx(simulate(p2, pullc).plt_s).epsilon(1e-12));
    }
}

TEST_CASE("property: filtering removes exactly the inserted subsequence") {
    Rng rng(909);
    for (int i = 0; i < 50; ++i) {
        DependencyTree page = testing::random_page(rng, "fl" + std::to_string(i));
        PushManifest manifest = build_manifest(page);
        CacheDigest digest = CacheDigest::with_recommended_size(64, 0.001);

        std::set<std::string> cached;
        for (const std::string& id : manifest.ids)
            if (std::bernoulli_distribution(0.4)(rng)) {
                cached.insert(id);
                digest.insert(page.resource(id).url);
            }

        PushManifest got = filter_manifest(manifest, page, digest);
        // Subsequence of the input.
        std::size_t at = 0;
        for (const std::string& id : got.ids) {
            while (at < manifest.ids.size() && manifest.ids[at] != id) ++at;
            CHECK(at < manifest.ids.size());
            ++at;
        }
        // Nothing cached survives. (False positives may trim extras.)
        for (const std::string& id : got.ids) CHECK(cached.count(id) == 0);
    }
}
