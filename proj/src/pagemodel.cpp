#include "pushsim/pagemodel.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

#include "pushsim/errors.hpp"

namespace pushsim {

using ojson = nlohmann::ordered_json;

// ─── Kinds ───

const char* to_string(ResourceKind kind) {
    switch (kind) {
        case ResourceKind::html: return "html";
        case ResourceKind::css: return "css";
        case ResourceKind::script: return "script";
        case ResourceKind::image: return "image";
        case ResourceKind::font: return "font";
        case ResourceKind::other: return "other";
    }
    return "other";
}

bool kind_from_string(const std::string& name, ResourceKind& out) {
    if (name == "html") out = ResourceKind::html;
    else if (name == "css") out = ResourceKind::css;
    else if (name == "script") out = ResourceKind::script;
    else if (name == "image") out = ResourceKind::image;
    else if (name == "font") out = ResourceKind::font;
    else if (name == "other") out = ResourceKind::other;
    else return false;
    return true;
}

bool kind_can_parent(ResourceKind kind) {
    return kind == ResourceKind::html || kind == ResourceKind::css ||
           kind == ResourceKind::script;
}

// ─── Validation ───

std::vector<Violation> DependencyTree::validate(const std::vector<Resource>& resources) {
    std::vector<Violation> out;
    if (resources.empty()) {
        out.push_back({"", "page has no resources"});
        return out;
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < resources.size(); ++i) {
        const Resource& r = resources[i];
        if (r.id.empty()) out.push_back({r.id, "resource has an empty id"});
        if (!index.emplace(r.id, i).second)
            out.push_back({r.id, "duplicate resource id"});
        if (r.size_bytes < 0) out.push_back({r.id, "negative size_bytes"});
        if (r.discovery_offset_bytes < 0)
            out.push_back({r.id, "negative discovery_offset_bytes"});
    }

    std::vector<const Resource*> roots;
    for (const Resource& r : resources)
        if (r.parent_id.empty()) roots.push_back(&r);
    if (roots.empty()) out.push_back({"", "no root: every resource has a parent"});
    if (roots.size() > 1)
        for (const Resource* r : roots)
            out.push_back({r->id, "multiple roots: more than one resource has no parent"});
    for (const Resource* r : roots)
        if (r->kind != ResourceKind::html)
            out.push_back({r->id, "root resource must have kind html"});

    std::set<std::string> flagged_parents;
    for (const Resource& r : resources) {
        if (r.parent_id.empty()) continue;
        auto it = index.find(r.parent_id);
        if (it == index.end()) {
            out.push_back({r.id, "unknown parent id '" + r.parent_id + "'"});
            continue;
        }
        const Resource& parent = resources[it->second];
        if (!kind_can_parent(parent.kind) && flagged_parents.insert(parent.id).second)
            out.push_back({parent.id, "non-parser resource has children"});
        if (r.discovery_offset_bytes > parent.size_bytes)
            out.push_back({r.id, "discovery_offset_bytes exceeds parent size"});
    }

    // Cycle check: walk parent chains with memoized states. Valid chains end
    // at a parentless resource; a chain that revisits itself is a cycle.
    enum class State { unvisited, visiting, ok, cyclic };
    std::map<std::string, State> state;
    for (const Resource& r : resources) state.emplace(r.id, State::unvisited);
    for (const Resource& r : resources) {
        if (state[r.id] != State::unvisited) continue;
        std::vector<const Resource*> chain;
        const Resource* cur = &r;
        State verdict = State::ok;
        while (true) {
            State& s = state[cur->id];
            if (s == State::visiting) { verdict = State::cyclic; break; }
            if (s != State::unvisited) { verdict = s; break; }
            s = State::visiting;
            chain.push_back(cur);
            if (cur->parent_id.empty()) break;
            auto it = index.find(cur->parent_id);
            if (it == index.end()) break;  // already reported as unknown parent
            cur = &resources[it->second];
        }
        for (const Resource* c : chain) {
            state[c->id] = verdict;
            if (verdict == State::cyclic)
                out.push_back({c->id, "dependency cycle through this resource"});
        }
    }
    return out;
}

std::vector<Violation> validate(const DependencyTree& tree) {
    return DependencyTree::validate(tree.resources());
}

DependencyTree DependencyTree::from_resources(std::string name, std::vector<Resource> resources) {
    std::vector<Violation> violations = validate(resources);
    if (!violations.empty()) {
        std::ostringstream oss;
        oss << "invalid page '" << name << "':";
        for (const Violation& v : violations) {
            oss << " [" << (v.resource_id.empty() ? "page" : v.resource_id) << "] "
                << v.message << ";";
        }
        throw ValidationError(oss.str());
    }

    DependencyTree t;
    t.name_ = std::move(name);
    t.resources_ = std::move(resources);
    for (std::size_t i = 0; i < t.resources_.size(); ++i) {
        t.index_by_id_.emplace(t.resources_[i].id, i);
        t.children_.emplace(t.resources_[i].id, std::vector<std::string>{});
        if (t.resources_[i].parent_id.empty()) t.root_index_ = i;
        t.total_bytes_ += t.resources_[i].size_bytes;
    }
    for (const Resource& r : t.resources_)
        if (!r.parent_id.empty()) t.children_[r.parent_id].push_back(r.id);

    for (const Resource& r : t.resources_) {
        int d = 0;
        for (const Resource* cur = &r; !cur->parent_id.empty();
             cur = &t.resources_[t.index_by_id_[cur->parent_id]])
            ++d;
        t.depth_[r.id] = d;
        t.height_ = std::max(t.height_, d);
    }
    return t;
}

bool DependencyTree::has_resource(const std::string& id) const {
    return index_by_id_.count(id) != 0;
}

const Resource& DependencyTree::resource(const std::string& id) const {
    auto it = index_by_id_.find(id);
    if (it == index_by_id_.end())
        throw ValidationError("unknown resource id '" + id + "' in page '" + name_ + "'");
    return resources_[it->second];
}

const std::vector<std::string>& DependencyTree::children_of(const std::string& id) const {
    auto it = children_.find(id);
    if (it == children_.end())
        throw ValidationError("unknown resource id '" + id + "' in page '" + name_ + "'");
    return it->second;
}

int DependencyTree::depth_of(const std::string& id) const {
    auto it = depth_.find(id);
    if (it == depth_.end())
        throw ValidationError("unknown resource id '" + id + "' in page '" + name_ + "'");
    return it->second;
}

std::map<int, int64_t> DependencyTree::depth_bytes() const {
    std::map<int, int64_t> out;
    for (int d = 0; d <= height_; ++d) out[d] = 0;
    for (const Resource& r : resources_) out[depth_.at(r.id)] += r.size_bytes;
    return out;
}

// ─── Page-description JSON ───

namespace {

int64_t require_int(const ojson& obj, const std::string& where, const char* key) {
    if (!obj.contains(key))
        throw ParseError(where + "." + key + ": missing required field");
    const ojson& v = obj.at(key);
    if (!v.is_number_integer())
        throw ParseError(where + "." + key + ": expected an integer");
    return v.get<int64_t>();
}

std::string require_string(const ojson& obj, const std::string& where, const char* key) {
    if (!obj.contains(key))
        throw ParseError(where + "." + key + ": missing required field");
    const ojson& v = obj.at(key);
    if (!v.is_string())
        throw ParseError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

} // namespace

DependencyTree ingest_page_json(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("page JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("page JSON: top level must be an object");
    if (require_int(doc, "page", "version") != 1)
        throw ParseError("page.version: unsupported schema version (expected 1)");
    std::string name = require_string(doc, "page", "name");
    if (!doc.contains("resources") || !doc.at("resources").is_array())
        throw ParseError("page.resources: missing or not an array");

    std::vector<Resource> resources;
    std::size_t i = 0;
    for (const ojson& item : doc.at("resources")) {
        std::string where = "resources[" + std::to_string(i++) + "]";
        if (!item.is_object()) throw ParseError(where + ": expected an object");
        Resource r;
        r.id = require_string(item, where, "id");
        std::string kind = require_string(item, where, "kind");
        if (!kind_from_string(kind, r.kind))
            throw ParseError(where + ".kind: unknown kind '" + kind + "'");
        r.size_bytes = require_int(item, where, "size_bytes");
        if (r.size_bytes < 0)
            throw ParseError(where + ".size_bytes: must be non-negative");
        if (item.contains("url")) {
            if (!item.at("url").is_string())
                throw ParseError(where + ".url: expected a string");
            r.url = item.at("url").get<std::string>();
        } else {
            r.url = r.id;
        }
        if (item.contains("parent") && !item.at("parent").is_null()) {
            if (!item.at("parent").is_string())
                throw ParseError(where + ".parent: expected a string or null");
            r.parent_id = item.at("parent").get<std::string>();
        }
        if (item.contains("discovery_offset_bytes")) {
            if (!item.at("discovery_offset_bytes").is_number_integer())
                throw ParseError(where + ".discovery_offset_bytes: expected an integer");
            r.discovery_offset_bytes = item.at("discovery_offset_bytes").get<int64_t>();
            if (r.discovery_offset_bytes < 0)
                throw ParseError(where + ".discovery_offset_bytes: must be non-negative");
        }
        if (item.contains("async")) {
            if (!item.at("async").is_boolean())
                throw ParseError(where + ".async: expected a boolean");
            r.script_async = item.at("async").get<bool>();
        }
        resources.push_back(std::move(r));
    }
    return DependencyTree::from_resources(std::move(name), std::move(resources));
}

std::string export_page_json(const DependencyTree& tree) {
    ojson doc;
    doc["version"] = 1;
    doc["name"] = tree.name();
    doc["resources"] = ojson::array();
    for (const Resource& r : tree.resources()) {
        ojson item;
        item["id"] = r.id;
        item["url"] = r.url;
        item["kind"] = to_string(r.kind);
        item["size_bytes"] = r.size_bytes;
        if (r.parent_id.empty()) item["parent"] = nullptr;
        else item["parent"] = r.parent_id;
        item["discovery_offset_bytes"] = r.discovery_offset_bytes;
        item["async"] = r.script_async;
        doc["resources"].push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

// ─── HAR ingestion ───

namespace {

struct HarEntry {
    std::string url;
    ResourceKind kind = ResourceKind::other;
    bool is_document = false;
    int64_t size = 0;
    std::string initiator_url;  // empty when absent
};

ResourceKind kind_from_mime(const std::string& mime) {
    auto has = [&mime](const char* s) { return mime.find(s) != std::string::npos; };
    if (has("text/html")) return ResourceKind::html;
    if (has("text/css")) return ResourceKind::css;
    if (has("javascript") || has("ecmascript")) return ResourceKind::script;
    if (mime.rfind("image/", 0) == 0) return ResourceKind::image;
    if (mime.rfind("font/", 0) == 0 || has("woff") || has("opentype") || has("truetype"))
        return ResourceKind::font;
    return ResourceKind::other;
}

HarEntry parse_har_entry(const ojson& entry) {
    HarEntry e;
    if (entry.contains("request") && entry.at("request").is_object()) {
        const ojson& req = entry.at("request");
        if (req.contains("url") && req.at("url").is_string())
            e.url = req.at("url").get<std::string>();
    }

    std::string mime;
    int64_t body_size = -1;
    int64_t content_size = -1;
    if (entry.contains("response") && entry.at("response").is_object()) {
        const ojson& resp = entry.at("response");
        if (resp.contains("bodySize") && resp.at("bodySize").is_number_integer())
            body_size = resp.at("bodySize").get<int64_t>();
        if (resp.contains("content") && resp.at("content").is_object()) {
            const ojson& content = resp.at("content");
            if (content.contains("size") && content.at("size").is_number_integer())
                content_size = content.at("size").get<int64_t>();
            if (content.contains("mimeType") && content.at("mimeType").is_string())
                mime = content.at("mimeType").get<std::string>();
        }
    }
    e.size = body_size >= 0 ? body_size : (content_size >= 0 ? content_size : 0);

    std::string rtype;
    if (entry.contains("_resourceType") && entry.at("_resourceType").is_string())
        rtype = entry.at("_resourceType").get<std::string>();
    if (rtype == "document") e.kind = ResourceKind::html;
    else if (rtype == "stylesheet") e.kind = ResourceKind::css;
    else if (rtype == "script") e.kind = ResourceKind::script;
    else if (rtype == "image") e.kind = ResourceKind::image;
    else if (rtype == "font") e.kind = ResourceKind::font;
    else e.kind = kind_from_mime(mime);
    e.is_document = rtype == "document" ||
                    (rtype.empty() && e.kind == ResourceKind::html);

    if (entry.contains("_initiator")) {
        const ojson& init = entry.at("_initiator");
        if (init.is_string()) {
            e.initiator_url = init.get<std::string>();
        } else if (init.is_object()) {
            if (init.contains("url") && init.at("url").is_string()) {
                e.initiator_url = init.at("url").get<std::string>();
            } else if (init.contains("stack") && init.at("stack").is_object()) {
                const ojson& stack = init.at("stack");
                if (stack.contains("callFrames") && stack.at("callFrames").is_array() &&
                    !stack.at("callFrames").empty()) {
                    const ojson& frame = stack.at("callFrames").front();
                    if (frame.is_object() && frame.contains("url") &&
                        frame.at("url").is_string())
                        e.initiator_url = frame.at("url").get<std::string>();
                }
            }
        }
    }
    return e;
}

} // namespace

HarIngest ingest_har(const std::string& text, const std::string& page_name) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("HAR: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("log") || !doc.at("log").is_object() ||
        !doc.at("log").contains("entries") || !doc.at("log").at("entries").is_array())
        throw ParseError("HAR: expected an object with log.entries");

    std::vector<HarEntry> entries;
    for (const ojson& raw : doc.at("log").at("entries")) {
        if (!raw.is_object()) throw ParseError("HAR: entry is not an object");
        entries.push_back(parse_har_entry(raw));
    }
    if (entries.empty()) throw ParseError("HAR: no entries");

    std::size_t root = entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].is_document) { root = i; break; }
    }
    if (root == entries.size()) throw ParseError("HAR: no root (no document entry)");
    entries[root].kind = ResourceKind::html;

    std::vector<std::string> warnings;
    std::map<std::string, std::size_t> by_url;
    for (std::size_t i = 0; i < entries.size(); ++i)
        by_url.emplace(entries[i].url, i);  // first occurrence wins

    // Resolve each entry's parent index; kNone marks "attach to root".
    const std::size_t kNone = entries.size();
    std::vector<std::size_t> parent(entries.size(), kNone);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i == root) continue;
        const HarEntry& e = entries[i];
        std::string note;
        if (e.initiator_url.empty()) {
            note = "no initiator";
        } else {
            auto it = by_url.find(e.initiator_url);
            if (it == by_url.end()) note = "initiator url not among entries";
            else if (it->second == i) note = "entry initiated by itself";
            else if (!kind_can_parent(entries[it->second].kind))
                note = "initiator is not a parseable resource";
            else parent[i] = it->second;
        }
        if (parent[i] == kNone && !note.empty() && i != root)
            warnings.push_back("entry " + std::to_string(i) + " (" + e.url +
                                   "): " + note + "; attached to root");
    }

    // Initiator chains can loop (HAR order is not topological); break loops
    // by re-attaching the entry where the loop is detected to the root.
    for (std::size_t i = 0; i < entries.size(); ++i) {
        std::set<std::size_t> seen;
        std::size_t cur = i;
        while (cur != root && parent[cur] != kNone) {
            if (!seen.insert(cur).second) {
                parent[cur] = kNone;
                warnings.push_back("entry " + std::to_string(cur) + " (" +
                                       entries[cur].url +
                                       "): initiator cycle; attached to root");
                break;
            }
            cur = parent[cur];
        }
    }

    std::vector<Resource> resources;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Resource r;
        r.id = "e" + std::to_string(i);
        r.url = entries[i].url;
        r.kind = entries[i].kind;
        r.size_bytes = entries[i].size;
        if (i != root)
            r.parent_id = parent[i] == kNone ? "e" + std::to_string(root)
                                             : "e" + std::to_string(parent[i]);
        resources.push_back(std::move(r));
    }
    return {DependencyTree::from_resources(page_name, std::move(resources)),
            std::move(warnings)};
}

// ─── Fixtures ───

const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names = {"p0", "p1", "p2"};
    return names;
}

DependencyTree fixture_page(const std::string& name) {
    auto res = [](const char* id, ResourceKind kind, int64_t size, const char* parent,
                  int64_t offset) {
        Resource r;
        r.id = id;
        r.url = std::string("https://example.test/") + id;
        r.kind = kind;
        r.size_bytes = size;
        r.parent_id = parent;
        r.discovery_offset_bytes = offset;
        return r;
    };
    if (name == "p0") {
        return DependencyTree::from_resources(
            "p0", {res("index.html", ResourceKind::html, 1024, "", 0)});
    }
    if (name == "p1") {
        return DependencyTree::from_resources(
            "p1", {res("index.html", ResourceKind::html, 1024, "", 0),
                   res("imga.jpg", ResourceKind::image, 131072, "index.html", 1024)});
    }
    if (name == "p2") {
        return DependencyTree::from_resources(
            "p2", {res("index.html", ResourceKind::html, 1024, "", 0),
                   res("imga.jpg", ResourceKind::image, 131072, "index.html", 1024),
                   res("script.js", ResourceKind::script, 1024, "index.html", 1024),
                   res("imgb.jpg", ResourceKind::image, 131072, "script.js", 1024)});
    }
    throw ValidationError("unknown fixture page '" + name + "'");
}

} // namespace pushsim
