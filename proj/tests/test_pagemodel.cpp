#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "pushsim/errors.hpp"
#include "pushsim/pagemodel.hpp"

using namespace pushsim;
using pushsim::testing::Rng;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

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

bool mentions(const std::vector<Violation>& vs, const std::string& needle) {
    return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) {
        return v.message.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("fixture pages have the documented shape") {
    DependencyTree p0 = fixture_page("p0");
    DependencyTree p1 = fixture_page("p1");
    DependencyTree p2 = fixture_page("p2");

    CHECK(p0.height() == 0);
    CHECK(p1.height() == 1);
    CHECK(p2.height() == 2);

    CHECK(p0.total_bytes() == 1024);
    CHECK(p1.total_bytes() == 1024 + 131072);
    CHECK(p2.total_bytes() == 1024 + 131072 + 1024 + 131072);

    auto db = p2.depth_bytes();
    CHECK(db.size() == 3);
    CHECK(db[0] == 1024);
    CHECK(db[1] == 132096);
    CHECK(db[2] == 131072);

    CHECK(validate(p2).empty());
    CHECK(p2.depth_of("imgb.jpg") == 2);
    CHECK(p2.children_of("index.html") ==
          std::vector<std::string>{"imga.jpg", "script.js"});
    CHECK_THROWS_AS(fixture_page("p9"), ValidationError);
}

TEST_CASE("depth_bytes covers every level and conserves the total") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        DependencyTree t = testing::random_page(rng, "t" + std::to_string(i));
        auto db = t.depth_bytes();
        CHECK(static_cast<int>(db.size()) == t.height() + 1);
        int64_t sum = 0;
        for (auto& [depth, bytes] : db) {
            CHECK(depth >= 0);
            CHECK(depth <= t.height());
            sum += bytes;
        }
        CHECK(sum == t.total_bytes());
        CHECK(t.height() <= static_cast<int>(t.resources().size()) - 1);
    }
}

TEST_CASE("validate reports structural problems as data") {
    SUBCASE("minimal page is fine") {
        CHECK(DependencyTree::validate({make("a", ResourceKind::html, 10, "", 0)})
                  .empty());
    }
    SUBCASE("non-parser parent") {
        auto vs = DependencyTree::validate(
            {make("a", ResourceKind::html, 10, "", 0),
             make("b", ResourceKind::image, 10, "a", 0),
             make("c", ResourceKind::css, 10, "b", 0)});
        CHECK(mentions(vs, "non-parser resource has children"));
    }
    SUBCASE("multiple roots") {
        auto vs = DependencyTree::validate(
            {make("a", ResourceKind::html, 10, "", 0),
             make("b", ResourceKind::html, 10, "", 0)});
        CHECK(mentions(vs, "multiple roots"));
    }
    SUBCASE("offset past the parent") {
        auto vs = DependencyTree::validate(
            {make("a", ResourceKind::html, 10, "", 0),
             make("b", ResourceKind::image, 10, "a", 11)});
        CHECK(mentions(vs, "exceeds parent size"));
    }
    SUBCASE("cycles") {
        auto vs = DependencyTree::validate(
            {make("root", ResourceKind::html, 10, "", 0),
             make("a", ResourceKind::css, 10, "b", 0),
             make("b", ResourceKind::css, 10, "a", 0)});
        CHECK(mentions(vs, "cycle"));
    }
    SUBCASE("root must be html") {
        auto vs = DependencyTree::validate({make("a", ResourceKind::css, 10, "", 0)});
        CHECK(mentions(vs, "kind html"));
    }
    SUBCASE("unknown parent") {
        auto vs = DependencyTree::validate(
            {make("a", ResourceKind::html, 10, "", 0),
             make("b", ResourceKind::image, 10, "zzz", 0)});
        CHECK(mentions(vs, "unknown parent"));
    }
    SUBCASE("from_resources throws on any violation") {
        CHECK_THROWS_AS(DependencyTree::from_resources(
                            "bad", {make("a", ResourceKind::css, 10, "", 0)}),
                        ValidationError);
    }
}

TEST_CASE("validate rejects random edge permutations that introduce cycles") {
    Rng rng(23);
    for (int i = 0; i < 40; ++i) {
        DependencyTree t = testing::random_page(rng, "t", 12);
        if (t.resources().size() < 2) continue;
        std::vector<Resource> res = t.resources();
        // Rewire the root's parent to a random descendant: always a cycle
        // (and no resource is left parentless).
        std::size_t victim =
            std::uniform_int_distribution<std::size_t>(1, res.size() - 1)(rng);
        for (Resource& r : res)
            if (r.parent_id.empty()) r.parent_id = res[victim].id;
        auto vs = DependencyTree::validate(res);
        CHECK(!vs.empty());
        bool cyclic_or_rootless = mentions(vs, "cycle") || mentions(vs, "no root");
        CHECK(cyclic_or_rootless);
    }
}

TEST_CASE("page JSON round-trips") {
    SUBCASE("fixture files on disk match the built-in pages") {
        for (const std::string& name : fixture_names()) {
            DependencyTree from_file = ingest_page_json(
                read_file(std::string(PUSHSIM_FIXTURE_DIR) + "/" + name + ".json"));
            DependencyTree builtin = fixture_page(name);
            CHECK(from_file.name() == builtin.name());
            CHECK(from_file.resources() == builtin.resources());
        }
    }
    SUBCASE("random pages survive export then ingest") {
        Rng rng(31);
        for (int i = 0; i < 50; ++i) {
            DependencyTree t = testing::random_page(rng, "rt" + std::to_string(i));
            DependencyTree back = ingest_page_json(export_page_json(t));
            CHECK(back.name() == t.name());
            CHECK(back.resources() == t.resources());
        }
    }
}

TEST_CASE("page JSON ingestion rejects malformed documents") {
    CHECK_THROWS_AS(ingest_page_json("{nope"), ParseError);
    CHECK_THROWS_AS(ingest_page_json("[]"), ParseError);
    CHECK_THROWS_AS(ingest_page_json(R"({"version":2,"name":"x","resources":[]})"),
                    ParseError);

    SUBCASE("negative size is a parse error naming the field") {
        try {
            ingest_page_json(
                R"({"version":1,"name":"x","resources":[
                     {"id":"a","kind":"html","size_bytes":-5}]})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("size_bytes") != std::string::npos);
        }
    }
    SUBCASE("unknown kind is a parse error") {
        CHECK_THROWS_AS(ingest_page_json(
                            R"({"version":1,"name":"x","resources":[
                                 {"id":"a","kind":"wasm","size_bytes":1}]})"),
                        ParseError);
    }
    SUBCASE("cycles are validation errors, not parse errors") {
        CHECK_THROWS_AS(ingest_page_json(
                            R"({"version":1,"name":"x","resources":[
                                 {"id":"r","kind":"html","size_bytes":1},
                                 {"id":"a","kind":"css","size_bytes":1,"parent":"b"},
                                 {"id":"b","kind":"css","size_bytes":1,"parent":"a"}]})"),
                        ValidationError);
    }
    SUBCASE("defaults: url falls back to id, offset to 0, async to false") {
        DependencyTree t = ingest_page_json(
            R"({"version":1,"name":"x","resources":[
                 {"id":"a","kind":"html","size_bytes":1}]})");
        CHECK(t.root().url == "a");
        CHECK(t.root().discovery_offset_bytes == 0);
        CHECK_FALSE(t.root().script_async);
    }
}

TEST_CASE("HAR ingestion builds trees from initiators") {
    auto har = [](const std::string& entries) {
        return R"({"log":{"version":"1.2","entries":[)" + entries + "]}}";
    };
    std::string doc_entry = R"({
        "request": {"url": "https://h.test/"},
        "response": {"bodySize": 512,
                     "content": {"size": 512, "mimeType": "text/html"}},
        "_resourceType": "document"})";

    SUBCASE("document plus two images initiated by it") {
        std::string img = R"({
            "request": {"url": "https://h.test/%ID%"},
            "response": {"bodySize": 100, "content": {"mimeType": "image/png"}},
            "_initiator": {"url": "https://h.test/"}})";
        auto img1 = img;
        img1.replace(img1.find("%ID%"), 4, "a.png");
        auto img2 = img;
        img2.replace(img2.find("%ID%"), 4, "b.png");
        HarIngest got = ingest_har(har(doc_entry + "," + img1 + "," + img2), "page");
        CHECK(got.warnings.empty());
        CHECK(got.tree.height() == 1);
        CHECK(got.tree.resources().size() == 3);
        CHECK(got.tree.root().id == "e0");
        CHECK(got.tree.root().size_bytes == 512);
        CHECK(got.tree.resource("e1").kind == ResourceKind::image);
        CHECK(got.tree.resource("e1").parent_id == "e0");
    }

    SUBCASE("script initiating an image makes height 2") {
        std::string script = R"({
            "request": {"url": "https://h.test/app.js"},
            "response": {"bodySize": 50,
                         "content": {"mimeType": "application/javascript"}},
            "_initiator": {"url": "https://h.test/"}})";
        std::string img = R"({
            "request": {"url": "https://h.test/lazy.png"},
            "response": {"bodySize": 70, "content": {"mimeType": "image/png"}},
            "_initiator": {"stack": {"callFrames": [
                {"url": "https://h.test/app.js"}]}}})";
        HarIngest got = ingest_har(har(doc_entry + "," + script + "," + img), "page");
        CHECK(got.tree.height() == 2);
        CHECK(got.tree.resource("e2").parent_id == "e1");
        CHECK(got.tree.resource("e1").kind == ResourceKind::script);
    }

    SUBCASE("missing initiator attaches to root with a warning") {
        std::string orphan = R"({
            "request": {"url": "https://h.test/ghost.png"},
            "response": {"bodySize": 70, "content": {"mimeType": "image/png"}}})";
        HarIngest got = ingest_har(har(doc_entry + "," + orphan), "page");
        CHECK(got.tree.resource("e1").parent_id == "e0");
        REQUIRE(got.warnings.size() == 1);
        CHECK(got.warnings[0].find("no initiator") != std::string::npos);
    }

    SUBCASE("body size -1 falls back to content size, then to zero") {
        std::string nobody = R"({
            "request": {"url": "https://h.test/x.png"},
            "response": {"bodySize": -1, "content": {"size": 321,
                                                     "mimeType": "image/png"}},
            "_initiator": {"url": "https://h.test/"}})";
        std::string nothing = R"({
            "request": {"url": "https://h.test/y.png"},
            "response": {"content": {"mimeType": "image/png"}},
            "_initiator": {"url": "https://h.test/"}})";
        HarIngest got = ingest_har(har(doc_entry + "," + nobody + "," + nothing), "p");
        CHECK(got.tree.resource("e1").size_bytes == 321);
        CHECK(got.tree.resource("e2").size_bytes == 0);
    }

    SUBCASE("no document entry is an error") {
        std::string img = R"({
            "request": {"url": "https://h.test/a.png"},
            "response": {"bodySize": 1, "content": {"mimeType": "image/png"}}})";
        CHECK_THROWS_AS(ingest_har(har(img), "page"), ParseError);
    }

    SUBCASE("garbage is a parse error") {
        CHECK_THROWS_AS(ingest_har("not har", "page"), ParseError);
    }
}
