#pragma once

#include <cstdint>
#include <vector>

#include "pushsim/netmodel.hpp"
#include "pushsim/pagemodel.hpp"
#include "pushsim/simulator.hpp"

namespace pushsim {

// Closed-form limits on load time and on how much pushing can save.

// No load can beat the handshake plus the page serialized at the link rate:
// 4*RTT + total_bytes*8/bandwidth.
double plt_lower_bound(const DependencyTree& tree, const LinkParams& link);

// Each dependency level costs at most one extra round trip, so pushing can
// save at most RTT * height(tree).
double spr_upper_bound_loose(const DependencyTree& tree, const LinkParams& link);

// Per-depth refinement: a level's saving is masked by the upstream bytes that
// were still in flight to the client when the level was first discovered.
struct TightBoundTerm {
    int depth = 0;             // 1..height
    int64_t rsize_bytes = 0;   // upstream bytes not yet delivered at discovery
    double term_s = 0.0;       // max(RTT - rsize_bytes*8/bandwidth, 0)
};

struct TightBoundBreakdown {
    std::vector<TightBoundTerm> per_depth_terms;  // ascending depth
    double total_s = 0.0;
};

// The schedule must carry one entry for every depth 1..height(tree); it
// normally comes from trace_discovery_schedule over a pull-mode run.
TightBoundBreakdown spr_upper_bound_tight(const DependencyTree& tree,
                                          const LinkParams& link,
                                          const DiscoverySchedule& discovery_model);

} // namespace pushsim
