#pragma once

#include <map>
#include <string>

#include "pushsim/netmodel.hpp"
#include "pushsim/pagemodel.hpp"
#include "pushsim/simulator.hpp"

namespace pushsim::testing {

struct OracleResult {
    double plt_s = 0.0;
    double bubble_total_s = 0.0;
    std::map<std::string, double> discovery_s;   // non-root resources only
    std::map<std::string, double> send_start_s;  // server-side send interval
    std::map<std::string, double> send_end_s;
};

// Reference timeline computation, written independently of the engine: rather
// than processing events incrementally, it re-plans the entire first-come
// first-served send schedule from scratch until the plan stops changing.
// Intentionally simple and quadratic. Slow start is not supported (the engine
// is compared against it only with the window model off).
OracleResult oracle_simulate(const DependencyTree& page, const LinkParams& link,
                             SimMode mode, const PushManifest* manifest);

} // namespace pushsim::testing
