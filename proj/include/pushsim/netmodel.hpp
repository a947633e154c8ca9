#pragma once

#include <cstdint>

namespace pushsim {

// ─── Link parameters ───

struct LinkParams {
    double rtt_s = 0.1;            // round-trip time, seconds
    double bandwidth_bps = 1e8;    // bottleneck rate, bits per second

    bool valid() const {
        return rtt_s > 0.0 && rtt_s < 1e6 && bandwidth_bps > 0.0 && bandwidth_bps < 1e15;
    }
};

// ─── Congestion window model ───
//
// Slow start without loss: the window starts at init_cwnd_segments * mss_bytes,
// doubles once per RTT from the first data send, and saturates at
// max_cwnd_bytes. cwnd_bytes mirrors the current window while a simulation is
// running; as config input it is ignored and starts at the initial window.
// Disabled by default: the headline experiments assume the transfer is
// latency-bound, not window-bound.

struct CongestionState {
    bool enabled = false;
    int64_t mss_bytes = 1460;
    int64_t init_cwnd_segments = 10;
    int64_t cwnd_bytes = 14600;
    int64_t max_cwnd_bytes = 4 * 1024 * 1024;

    bool valid() const {
        return mss_bytes > 0 && init_cwnd_segments > 0 && max_cwnd_bytes > 0 &&
               cwnd_bytes >= initial_window() && initial_window() <= max_cwnd_bytes;
    }
    int64_t initial_window() const { return mss_bytes * init_cwnd_segments; }
};

// Sentinel returned by allowed_inflight when the window model is off.
inline constexpr int64_t kUnboundedWindow = INT64_MAX;

// Connection setup cost before the first request can leave the client:
// DNS + TCP + TLS + the request round itself, each charged one RTT.
double handshake_time(const LinkParams& link);

// Serialization delay for `bytes` payload bytes at the link rate.
double transfer_time(int64_t bytes, double bandwidth_bps);
double transfer_time(int64_t bytes, const LinkParams& link);

// Window size after `elapsed_rtts` full RTT epochs, clamped to the maximum.
// Returns kUnboundedWindow when the model is disabled.
int64_t allowed_inflight(const CongestionState& cong, int64_t elapsed_rtts);

} // namespace pushsim
