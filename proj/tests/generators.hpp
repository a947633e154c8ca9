#pragma once

#include <random>
#include <string>
#include <vector>

#include "pushsim/netmodel.hpp"
#include "pushsim/pagemodel.hpp"
#include "pushsim/simulator.hpp"

namespace pushsim::testing {

using Rng = std::mt19937_64;

inline int64_t rand_size(Rng& rng, int64_t max_bytes = 1 << 20) {
    // Mix of magnitudes so tiny, mid, and large resources all appear.
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: return std::uniform_int_distribution<int64_t>(0, 2048)(rng);
        case 1: return std::uniform_int_distribution<int64_t>(0, 65536)(rng);
        default: return std::uniform_int_distribution<int64_t>(0, max_bytes)(rng);
    }
}

// Arbitrary valid page: any parseable resource may take children, offsets are
// independent, scripts are randomly async. Exercises the full rule set.
inline DependencyTree random_page(Rng& rng, std::string name, int max_resources = 24,
                                  int64_t max_bytes = 1 << 20) {
    int n = std::uniform_int_distribution<int>(1, max_resources)(rng);
    std::vector<Resource> res(static_cast<std::size_t>(n));
    std::vector<int> parseable;
    static const ResourceKind kAllKinds[] = {
        ResourceKind::html, ResourceKind::css,  ResourceKind::script,
        ResourceKind::image, ResourceKind::font, ResourceKind::other};
    for (int i = 0; i < n; ++i) {
        Resource& r = res[static_cast<std::size_t>(i)];
        r.id = "r" + std::to_string(i);
        r.url = "https://gen.test/" + r.id;
        r.kind = i == 0 ? ResourceKind::html
                        : kAllKinds[std::uniform_int_distribution<int>(0, 5)(rng)];
        if (r.kind == ResourceKind::script)
            r.script_async = std::bernoulli_distribution(0.4)(rng);
        r.size_bytes = rand_size(rng, max_bytes);
        if (i > 0) {
            int p = parseable[std::uniform_int_distribution<std::size_t>(
                0, parseable.size() - 1)(rng)];
            r.parent_id = res[static_cast<std::size_t>(p)].id;
            r.discovery_offset_bytes = std::uniform_int_distribution<int64_t>(
                0, res[static_cast<std::size_t>(p)].size_bytes)(rng);
        }
        if (kind_can_parent(r.kind)) parseable.push_back(i);
    }
    return DependencyTree::from_resources(std::move(name), std::move(res));
}

// Page whose same-depth discoveries are simultaneous: one parseable "spine"
// node per depth carries the next level, and all children of a node share a
// single discovery offset. Staggered same-depth discoveries can beat the
// per-depth masking bound (see the bounds tests for a counterexample), so the
// bound-compliance suites draw from this class.
inline DependencyTree wave_page(Rng& rng, std::string name, int max_height = 6,
                                int64_t max_bytes = 1 << 20) {
    int h = std::uniform_int_distribution<int>(0, max_height)(rng);
    std::vector<Resource> res;
    int counter = 0;
    auto add = [&](ResourceKind k, const std::string& parent, int64_t off) {
        Resource r;
        r.id = "w" + std::to_string(counter++);
        r.url = "https://gen.test/" + r.id;
        r.kind = k;
        r.size_bytes = rand_size(rng, max_bytes);
        r.parent_id = parent;
        r.discovery_offset_bytes = off;
        if (k == ResourceKind::script)
            r.script_async = std::bernoulli_distribution(0.5)(rng);
        res.push_back(r);
        return r.id;
    };
    static const ResourceKind kParseable[] = {ResourceKind::html, ResourceKind::css,
                                              ResourceKind::script};
    static const ResourceKind kAnyKind[] = {
        ResourceKind::html, ResourceKind::css,  ResourceKind::script,
        ResourceKind::image, ResourceKind::font, ResourceKind::other};

    std::string spine = add(ResourceKind::html, "", 0);
    int64_t spine_size = res.back().size_bytes;
    for (int d = 1; d <= h; ++d) {
        int64_t off =
            std::uniform_int_distribution<int64_t>(0, spine_size)(rng);
        ResourceKind kind =
            d < h ? kParseable[std::uniform_int_distribution<int>(0, 2)(rng)]
                  : kAnyKind[std::uniform_int_distribution<int>(0, 5)(rng)];
        std::string next = add(kind, spine, off);
        int64_t next_size = res.back().size_bytes;
        int leaves = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int i = 0; i < leaves; ++i)
            add(kAnyKind[std::uniform_int_distribution<int>(0, 5)(rng)], spine, off);
        spine = next;
        spine_size = next_size;
    }
    return DependencyTree::from_resources(std::move(name), std::move(res));
}

// Straight chain of height h where each child sits at the very end of its
// parent, so every level costs the pull load exactly one round trip.
inline DependencyTree chain_page(Rng& rng, std::string name, int h,
                                 int64_t min_size = 50, int64_t max_size = 2000) {
    std::uniform_int_distribution<int64_t> size_dist(min_size, max_size);
    std::vector<Resource> res;
    for (int d = 0; d <= h; ++d) {
        Resource r;
        r.id = "c" + std::to_string(d);
        r.url = "https://gen.test/" + r.id;
        r.kind = d == 0 ? ResourceKind::html
                        : (d == h ? ResourceKind::image : ResourceKind::css);
        r.size_bytes = size_dist(rng);
        if (d > 0) {
            r.parent_id = "c" + std::to_string(d - 1);
            r.discovery_offset_bytes = res.back().size_bytes;
        }
        res.push_back(r);
    }
    return DependencyTree::from_resources(std::move(name), std::move(res));
}

inline LinkParams random_link(Rng& rng, double min_rtt_ms = 5, double max_rtt_ms = 250,
                              double min_mbps = 8, double max_mbps = 500) {
    LinkParams link;
    link.rtt_s = std::uniform_real_distribution<double>(min_rtt_ms, max_rtt_ms)(rng) / 1e3;
    link.bandwidth_bps =
        std::uniform_real_distribution<double>(min_mbps, max_mbps)(rng) * 1e6;
    return link;
}

// Every non-root resource in declaration order; the trivial complete manifest.
inline PushManifest full_manifest(const DependencyTree& page) {
    PushManifest m;
    for (const Resource& r : page.resources())
        if (!r.parent_id.empty()) m.ids.push_back(r.id);
    return m;
}

} // namespace pushsim::testing
