#include "pushsim/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "pushsim/errors.hpp"

namespace pushsim {

double plt_lower_bound(const DependencyTree& tree, const LinkParams& link) {
    return handshake_time(link) + transfer_time(tree.total_bytes(), link);
}

double spr_upper_bound_loose(const DependencyTree& tree, const LinkParams& link) {
    if (!link.valid()) throw SimError("invalid link parameters");
    return link.rtt_s * static_cast<double>(tree.height());
}

TightBoundBreakdown spr_upper_bound_tight(const DependencyTree& tree,
                                          const LinkParams& link,
                                          const DiscoverySchedule& discovery_model) {
    if (!link.valid()) throw SimError("invalid link parameters");

    std::map<int, double> rsize_at;
    for (const DepthDiscovery& d : discovery_model.depths) {
        if (d.depth < 1)
            throw ValidationError("discovery schedule has an entry for depth " +
                                  std::to_string(d.depth));
        if (!rsize_at.emplace(d.depth, d.rsize_bytes).second)
            throw ValidationError("discovery schedule repeats depth " +
                                  std::to_string(d.depth));
    }

    TightBoundBreakdown out;
    for (int depth = 1; depth <= tree.height(); ++depth) {
        auto it = rsize_at.find(depth);
        if (it == rsize_at.end())
            throw ValidationError("discovery schedule is missing depth " +
                                  std::to_string(depth));
        double rsize = std::max(0.0, it->second);
        TightBoundTerm term;
        term.depth = depth;
        term.rsize_bytes = std::llround(rsize);
        term.term_s = std::max(link.rtt_s - rsize * 8.0 / link.bandwidth_bps, 0.0);
        out.total_s += term.term_s;
        out.per_depth_terms.push_back(term);
    }
    return out;
}

} // namespace pushsim
