#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pushsim {

// ─── Resources ───

enum class ResourceKind { html, css, script, image, font, other };

const char* to_string(ResourceKind kind);
// Returns false and leaves `out` untouched when the name is unknown.
bool kind_from_string(const std::string& name, ResourceKind& out);

// Whether resources of this kind can reference further resources.
// Only parsed formats can: html, css, script.
bool kind_can_parent(ResourceKind kind);

struct Resource {
    std::string id;
    std::string url;
    ResourceKind kind = ResourceKind::other;
    int64_t size_bytes = 0;
    std::string parent_id;               // empty for the root
    int64_t discovery_offset_bytes = 0;  // byte position in the parent where
                                         // the reference to this resource sits
    bool script_async = false;           // scripts only: async scripts do not
                                         // block sibling discovery

    bool operator==(const Resource&) const = default;
};

struct Violation {
    std::string resource_id;  // empty for page-level problems
    std::string message;
};

// ─── Dependency tree ───
//
// A page is a rooted tree: the root html file plus every resource reachable
// from it, each child annotated with the byte offset in its parent at which
// it is referenced. Immutable after construction; safe to share across
// threads.

class DependencyTree {
public:
    // Checks every page invariant and reports all violations, not just the
    // first. An empty result means the resource set forms a valid page.
    static std::vector<Violation> validate(const std::vector<Resource>& resources);

    // Builds a tree, throwing ValidationError with the full violation list
    // if the resources do not form a valid page.
    static DependencyTree from_resources(std::string name, std::vector<Resource> resources);

    const std::string& name() const { return name_; }
    const std::vector<Resource>& resources() const { return resources_; }  // declaration order
    const Resource& root() const { return resources_[root_index_]; }

    bool has_resource(const std::string& id) const;
    const Resource& resource(const std::string& id) const;  // throws ValidationError if unknown
    // Children in declaration order (the tiebreak for simultaneous discovery).
    const std::vector<std::string>& children_of(const std::string& id) const;
    int depth_of(const std::string& id) const;  // root is 0

    int height() const { return height_; }
    int64_t total_bytes() const { return total_bytes_; }
    // Bytes per depth level; keys run 0..height() and values sum to total_bytes().
    std::map<int, int64_t> depth_bytes() const;

private:
    DependencyTree() = default;

    std::string name_;
    std::vector<Resource> resources_;
    std::size_t root_index_ = 0;
    std::map<std::string, std::size_t> index_by_id_;
    std::map<std::string, std::vector<std::string>> children_;
    std::map<std::string, int> depth_;
    int height_ = 0;
    int64_t total_bytes_ = 0;
};

// Convenience form of validate for an already-built tree (always empty for
// trees produced by from_resources; exists so callers can re-check imported
// data uniformly).
std::vector<Violation> validate(const DependencyTree& tree);

// ─── Serialization ───

// Page-description JSON, schema version 1:
//   { "version": 1, "name": str, "resources": [ { "id": str, "url": str,
//     "kind": "html|css|script|image|font|other", "size_bytes": int,
//     "parent": str|null, "discovery_offset_bytes": int (default 0),
//     "async": bool (default false) } ] }
// A missing url defaults to the id. Malformed documents raise ParseError
// naming the offending field; structurally sound documents that violate a
// page invariant raise ValidationError.
DependencyTree ingest_page_json(const std::string& text);
std::string export_page_json(const DependencyTree& tree);

// HAR 1.2 ingestion. The first document entry becomes the root; parents come
// from each entry's _initiator url (directly or via the first stack frame).
// Entries whose initiator is missing, unknown, itself unparseable, or part of
// an initiator cycle attach to the root, with a note in `warnings`.
// Discovery offsets are 0 throughout: HAR records no byte positions.
struct HarIngest {
    DependencyTree tree;
    std::vector<std::string> warnings;
};
HarIngest ingest_har(const std::string& text, const std::string& page_name);

// ─── Fixtures ───
//
// The three reference pages used throughout the tests and the default
// experiment grid:
//   p0: one 1024 B html file, no dependencies (height 0)
//   p1: html plus one 128 KiB image referenced at the end of the html (height 1)
//   p2: html referencing a 128 KiB image and a 1 KiB script, the script
//       referencing a second 128 KiB image at its end (height 2)
const std::vector<std::string>& fixture_names();
DependencyTree fixture_page(const std::string& name);  // throws ValidationError if unknown

} // namespace pushsim
