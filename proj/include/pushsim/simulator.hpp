#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pushsim/netmodel.hpp"
#include "pushsim/pagemodel.hpp"

namespace pushsim {

// ─── Modes and manifests ───

enum class SimMode { pull, push, optimal };

const char* to_string(SimMode mode);
bool mode_from_string(const std::string& name, SimMode& out);

// Ordered list of resource ids the server sends unprompted after the root.
// Resources missing from the manifest are fetched pull-style on discovery,
// which is how digest-filtered loads degrade.
struct PushManifest {
    std::vector<std::string> ids;
};

// ─── Timeline events ───

enum class SimEventKind {
    handshake_done,
    request_sent,
    first_byte,
    last_byte,
    dependency_discovered,
    parse_blocked,
    parse_resumed,
    push_promised,
    bubble_start,
    bubble_end,
};

const char* to_string(SimEventKind kind);

struct SimEvent {
    double time_s = 0.0;
    SimEventKind kind = SimEventKind::handshake_done;
    std::string resource_id;  // empty when the event is not about one resource
};

// ─── Delivery bookkeeping ───

// One stretch of a resource arriving at the client at the link rate.
// Slow-start stalls split a resource into several segments.
struct DeliverySegment {
    double start_s = 0.0;
    double end_s = 0.0;
    int64_t bytes = 0;
};

struct ResourceDelivery {
    std::vector<DeliverySegment> segments;
    double first_byte_s = 0.0;
    double last_byte_s = 0.0;

    // Bytes of this resource that have reached the client by time t.
    double bytes_by(double t) const;
};

// ─── Config and result ───

struct SimConfig {
    SimMode mode = SimMode::pull;
    LinkParams link;
    CongestionState congestion;
    std::optional<PushManifest> push_order;  // required iff mode == push
    bool parse_instantaneous = true;         // fixed true in this version
};

struct SimResult {
    double plt_s = 0.0;
    std::vector<SimEvent> events;  // sorted by (time, kind, resource id)
    double bubble_total_s = 0.0;
    int64_t bytes_transferred = 0;

    // Discovery instants in scheduling order (ties broken by declaration
    // order), which is what the manifest builder and the tight bound consume.
    std::vector<std::pair<double, std::string>> discoveries;
    std::map<std::string, ResourceDelivery> deliveries;
};

// Runs one page load. Deterministic: equal inputs give equal results.
//
// Timing rules: navigation at t=0; handshake done at 4*RTT; requests and
// response bytes each travel one-way in RTT/2; the server sends queued
// responses back to back at the link rate, first-come first-served (ties by
// declaration order), optionally capped by the slow-start window. A child is
// discovered once discovery_offset_bytes of its parent have arrived and every
// non-async script sibling sitting at a strictly smaller offset has fully
// arrived. A bubble is a stretch where the server has nothing to send but
// page bytes remain unsent. PLT is the arrival time of the page's last byte.
SimResult simulate(const DependencyTree& page, const SimConfig& config);

// PLT(pull) − PLT(push) for the same page and link.
double spr(const DependencyTree& page, const LinkParams& link,
           const CongestionState& congestion, const PushManifest& manifest);

// ─── Discovery schedule (feeds the masking-aware SPR bound) ───

struct DepthDiscovery {
    int depth = 0;          // 1..height
    double time_s = 0.0;    // first discovery of any resource at this depth
    double rsize_bytes = 0; // bytes of depth < `depth` not yet at the client
                            // at that instant (fractional mid-byte states
                            // occur in the fluid model)
};

struct DiscoverySchedule {
    std::vector<DepthDiscovery> depths;  // ascending depth, one entry per depth
};

// Extracts per-depth first-discovery instants and residual upstream bytes
// from a pull-mode run of the same page.
DiscoverySchedule trace_discovery_schedule(const SimResult& pull_result,
                                           const DependencyTree& page);

// One event per line as {"time_s":..., "kind":"...", "resource_id":...}.
std::string write_timeline_jsonl(const SimResult& result);

} // namespace pushsim
