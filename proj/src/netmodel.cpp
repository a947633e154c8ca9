#include "pushsim/netmodel.hpp"

#include "pushsim/errors.hpp"

namespace pushsim {

double handshake_time(const LinkParams& link) {
    if (!link.valid()) throw SimError("handshake_time: invalid link parameters");
    return 4.0 * link.rtt_s;
}

double transfer_time(int64_t bytes, double bandwidth_bps) {
    if (bytes < 0) throw SimError("transfer_time: negative byte count");
    if (bandwidth_bps <= 0.0) throw SimError("transfer_time: bandwidth must be positive");
    return static_cast<double>(bytes) * 8.0 / bandwidth_bps;
}

double transfer_time(int64_t bytes, const LinkParams& link) {
    if (!link.valid()) throw SimError("transfer_time: invalid link parameters");
    return transfer_time(bytes, link.bandwidth_bps);
}

int64_t allowed_inflight(const CongestionState& cong, int64_t elapsed_rtts) {
    if (!cong.enabled) return kUnboundedWindow;
    if (!cong.valid()) throw SimError("allowed_inflight: invalid congestion parameters");
    if (elapsed_rtts < 0) throw SimError("allowed_inflight: negative epoch count");

    int64_t w = cong.initial_window();
    for (int64_t i = 0; i < elapsed_rtts; ++i) {
        if (w >= cong.max_cwnd_bytes) break;
        if (w > cong.max_cwnd_bytes / 2) { w = cong.max_cwnd_bytes; break; }
        w *= 2;
    }
    return w < cong.max_cwnd_bytes ? w : cong.max_cwnd_bytes;
}

} // namespace pushsim
