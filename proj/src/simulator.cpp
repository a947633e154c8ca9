#include "pushsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "pushsim/errors.hpp"

namespace pushsim {

// ─── Enum helpers ───

const char* to_string(SimMode mode) {
    switch (mode) {
        case SimMode::pull: return "pull";
        case SimMode::push: return "push";
        case SimMode::optimal: return "optimal";
    }
    return "?";
}

bool mode_from_string(const std::string& name, SimMode& out) {
    if (name == "pull") { out = SimMode::pull; return true; }
    if (name == "push") { out = SimMode::push; return true; }
    if (name == "optimal") { out = SimMode::optimal; return true; }
    return false;
}

const char* to_string(SimEventKind kind) {
    switch (kind) {
        case SimEventKind::handshake_done: return "handshake_done";
        case SimEventKind::request_sent: return "request_sent";
        case SimEventKind::first_byte: return "first_byte";
        case SimEventKind::last_byte: return "last_byte";
        case SimEventKind::dependency_discovered: return "dependency_discovered";
        case SimEventKind::parse_blocked: return "parse_blocked";
        case SimEventKind::parse_resumed: return "parse_resumed";
        case SimEventKind::push_promised: return "push_promised";
        case SimEventKind::bubble_start: return "bubble_start";
        case SimEventKind::bubble_end: return "bubble_end";
    }
    return "?";
}

double ResourceDelivery::bytes_by(double t) const {
    double got = 0.0;
    for (const DeliverySegment& seg : segments) {
        if (t >= seg.end_s) {
            got += static_cast<double>(seg.bytes);
        } else if (t > seg.start_s && seg.end_s > seg.start_s) {
            got += static_cast<double>(seg.bytes) * (t - seg.start_s) /
                   (seg.end_s - seg.start_s);
        }
    }
    return got;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ─── Aggregate send curve ───
// Busy stretches of the server link, all at the nominal byte rate. The
// slow-start walk reads it back to know what has been acked (the send stream
// delayed by one RTT).

class SendCurve {
  public:
    explicit SendCurve(double byte_rate) : byte_rate_(byte_rate) {}

    void append(double start, double end) {
        if (!segs_.empty() && start == segs_.back().start_ + segs_.back().len()) {
            segs_.back().end = end;
            return;
        }
        segs_.push_back({start, end, total_bytes_before(segs_.size())});
    }

    double sent_by(double t) const {
        int idx = last_at_or_before(t);
        if (idx < 0) return 0.0;
        const Seg& s = segs_[static_cast<std::size_t>(idx)];
        double upto = std::min(t, s.end);
        return s.bytes_before + (upto - s.start_) * byte_rate_;
    }

    bool in_busy(double t) const {
        int idx = last_at_or_before(t);
        return idx >= 0 && t < segs_[static_cast<std::size_t>(idx)].end;
    }

    // Smallest segment start strictly after t (where the ack flow resumes).
    double next_start_after(double t) const {
        for (const Seg& s : segs_)
            if (s.start_ > t) return s.start_;
        return kInf;
    }

    // End of the busy run covering t (or starting within tol after it); t
    // itself when the link is idle there.
    double busy_end_from(double t, double tol) const {
        int idx = last_at_or_before(t);
        if (idx >= 0 && t < segs_[static_cast<std::size_t>(idx)].end)
            return segs_[static_cast<std::size_t>(idx)].end;
        auto next = static_cast<std::size_t>(idx + 1);
        if (next < segs_.size() && segs_[next].start_ <= t + tol)
            return segs_[next].end;
        return t;
    }

  private:
    struct Seg {
        double start_;
        double end;
        double bytes_before;
        double len() const { return end - start_; }
    };

    double total_bytes_before(std::size_t n) const {
        if (n == 0) return 0.0;
        const Seg& s = segs_[n - 1];
        return s.bytes_before + s.len() * byte_rate_;
    }

    int last_at_or_before(double t) const {
        int lo = 0, hi = static_cast<int>(segs_.size()) - 1, best = -1;
        while (lo <= hi) {
            int mid = (lo + hi) / 2;
            if (segs_[static_cast<std::size_t>(mid)].start_ <= t) {
                best = mid;
                lo = mid + 1;
            } else {
                hi = mid - 1;
            }
        }
        return best;
    }

    double byte_rate_;
    std::vector<Seg> segs_;
};

// ─── Engine ───

struct Node {
    std::string id;
    ResourceKind kind = ResourceKind::other;
    int64_t size = 0;
    int parent = -1;
    int64_t offset = 0;
    bool async_script = false;
    int decl = 0;
    bool manifested = false;
    int64_t queue_key = 0;

    bool discovered = false;
    bool planned = false;
    double first_arr = 0.0;
    double last_arr = 0.0;
    // Client-side arrival plan: (start, end, bytes), fractional bytes.
    std::vector<std::tuple<double, double, double>> plan;
};

class Engine {
  public:
    Engine(const DependencyTree& page, const SimConfig& cfg)
        : page_(page), cfg_(cfg), curve_(cfg.link.bandwidth_bps / 8.0) {
        rtt_ = cfg.link.rtt_s;
        half_ = rtt_ / 2.0;
        byte_rate_ = cfg.link.bandwidth_bps / 8.0;
        t0_ = 4.5 * rtt_;
        build_nodes();
    }

    SimResult run() {
        const Node& root = nodes_[static_cast<std::size_t>(root_)];
        add_event(4.0 * rtt_, SimEventKind::handshake_done, "");
        add_event(4.0 * rtt_, SimEventKind::request_sent, root.id);
        nodes_[static_cast<std::size_t>(root_)].discovered = true;
        discoveries_.emplace_back(4.0 * rtt_, root.id);
        schedule(t0_, kReqArrive, root_);
        for (int idx : manifest_nodes_) {
            add_event(t0_, SimEventKind::push_promised,
                      nodes_[static_cast<std::size_t>(idx)].id);
            schedule(t0_, kReqArrive, idx);
        }

        while (!events_.empty()) {
            Ev ev = events_.top();
            events_.pop();
            switch (ev.type) {
                case kReqArrive: on_req_arrive(ev.t, ev.node); break;
                case kClientCheck: on_client_check(ev.t, ev.node); break;
                case kKick: on_kick(ev.t); break;
            }
        }

        if (served_ != nodes_.size())
            throw SimError("simulation ended with undelivered resources");
        if (bubble_open_)
            throw SimError("simulation ended inside a bubble");
        return finalize();
    }

  private:
    enum EvType { kReqArrive = 0, kClientCheck = 1, kKick = 2 };

    struct Ev {
        double t;
        int type;  // doubles as the same-instant processing rank
        uint64_t seq;
        int node;
    };
    struct EvAfter {
        bool operator()(const Ev& a, const Ev& b) const {
            return std::tie(a.t, a.type, a.seq) > std::tie(b.t, b.type, b.seq);
        }
    };

    void build_nodes() {
        if (cfg_.mode == SimMode::optimal) {
            Node n;
            n.id = page_.root().id;
            n.kind = ResourceKind::html;
            n.size = page_.total_bytes();
            n.decl = 0;
            n.queue_key = -2'000'000;
            nodes_.push_back(std::move(n));
            root_ = 0;
            groups_.resize(1);
            group_offsets_.resize(1);
            next_group_.assign(1, 0);
            gates_.resize(1);
            return;
        }

        const std::vector<Resource>& res = page_.resources();
        std::map<std::string, int> index;
        for (std::size_t i = 0; i < res.size(); ++i) {
            Node n;
            n.id = res[i].id;
            n.kind = res[i].kind;
            n.size = res[i].size_bytes;
            n.offset = res[i].discovery_offset_bytes;
            n.async_script = res[i].script_async;
            n.decl = static_cast<int>(i);
            n.queue_key = static_cast<int>(i);
            index[n.id] = static_cast<int>(i);
            nodes_.push_back(std::move(n));
        }
        for (std::size_t i = 0; i < res.size(); ++i) {
            if (res[i].parent_id.empty()) {
                root_ = static_cast<int>(i);
                nodes_[i].queue_key = -2'000'000;
            } else {
                nodes_[i].parent = index.at(res[i].parent_id);
            }
        }

        if (cfg_.mode == SimMode::push) {
            if (!cfg_.push_order.has_value())
                throw SimError("push mode requires a push manifest");
            std::set<std::string> seen;
            int pos = 0;
            for (const std::string& id : cfg_.push_order->ids) {
                auto it = index.find(id);
                if (it == index.end())
                    throw ValidationError("manifest references unknown resource '" +
                                          id + "'");
                if (!seen.insert(id).second)
                    throw ValidationError("manifest lists '" + id + "' twice");
                if (it->second == root_)
                    throw ValidationError(
                        "the root document is sent on request, not pushed");
                Node& n = nodes_[static_cast<std::size_t>(it->second)];
                n.manifested = true;
                n.queue_key = -1'000'000 + pos;
                manifest_nodes_.push_back(it->second);
                ++pos;
            }
        }

        // Children grouped by equal discovery offset, declaration order inside
        // a group. The parser walks groups in offset order.
        groups_.resize(nodes_.size());
        group_offsets_.resize(nodes_.size());
        next_group_.assign(nodes_.size(), 0);
        gates_.resize(nodes_.size());
        for (std::size_t p = 0; p < nodes_.size(); ++p) {
            std::vector<int> kids;
            for (std::size_t c = 0; c < nodes_.size(); ++c)
                if (nodes_[c].parent == static_cast<int>(p))
                    kids.push_back(static_cast<int>(c));
            std::stable_sort(kids.begin(), kids.end(), [&](int a, int b) {
                return nodes_[static_cast<std::size_t>(a)].offset <
                       nodes_[static_cast<std::size_t>(b)].offset;
            });
            for (int c : kids) {
                const Node& n = nodes_[static_cast<std::size_t>(c)];
                if (group_offsets_[p].empty() || group_offsets_[p].back() != n.offset) {
                    group_offsets_[p].push_back(n.offset);
                    groups_[p].emplace_back();
                }
                groups_[p].back().push_back(c);
            }
        }
    }

    // ─── Event plumbing ───

    void schedule(double t, EvType type, int node) {
        events_.push(Ev{t, type, seq_++, node});
    }

    void add_event(double t, SimEventKind kind, const std::string& id) {
        out_events_.push_back(SimEvent{t, kind, id});
    }

    void on_req_arrive(double now, int node) {
        queue_.insert({now, nodes_[static_cast<std::size_t>(node)].queue_key, node});
        schedule(now, kKick, -1);
    }

    void on_kick(double now) {
        if (now < server_free_) return;
        if (queue_.empty()) {
            if (served_ < nodes_.size() && !bubble_open_) {
                bubble_open_ = true;
                bubble_from_ = now;
            }
            return;
        }
        auto head = *queue_.begin();
        queue_.erase(queue_.begin());
        if (bubble_open_) {
            bubbles_.emplace_back(bubble_from_, now);
            bubble_open_ = false;
        }
        start_transmission(std::get<2>(head), now);
    }

    void start_transmission(int idx, double now) {
        Node& n = nodes_[static_cast<std::size_t>(idx)];
        std::vector<std::pair<double, double>> raw;
        double done = now;
        if (n.size > 0) {
            if (!cfg_.congestion.enabled) {
                done = now + static_cast<double>(n.size) / byte_rate_;
                raw.emplace_back(now, done);
                curve_.append(now, done);
            } else {
                raw = window_walk(now, n.size);
                done = raw.back().second;
            }
        }

        n.planned = true;
        n.first_arr = (raw.empty() ? now : raw.front().first) + half_;
        n.last_arr = done + half_;
        for (const auto& [s, e] : raw)
            n.plan.emplace_back(s + half_, e + half_, (e - s) * byte_rate_);

        add_event(n.first_arr, SimEventKind::first_byte, n.id);
        add_event(n.last_arr, SimEventKind::last_byte, n.id);

        served_ += 1;
        server_free_ = done;
        schedule(done, kKick, -1);

        if (n.parent >= 0) schedule(n.last_arr, kClientCheck, n.parent);
        for (std::size_t gi = 0; gi < groups_[static_cast<std::size_t>(idx)].size();
             ++gi)
            schedule(group_offset_arrival(idx, gi), kClientCheck, idx);
    }

    // ─── Slow-start send plan ───
    // Sends at the link rate whenever unacked bytes fit the window, where the
    // ack stream is the send stream delayed by one RTT and the window doubles
    // each RTT elapsed since the first send opportunity.

    double cwnd_bytes(double t) const {
        auto epoch = static_cast<int64_t>(std::floor((t - t0_) / rtt_ + 1e-9));
        if (epoch < 0) epoch = 0;
        int64_t w = allowed_inflight(cfg_.congestion, epoch);
        return w == kUnboundedWindow ? kInf : static_cast<double>(w);
    }

    double next_epoch_after(double t) const {
        auto epoch = static_cast<int64_t>(std::floor((t - t0_) / rtt_ + 1e-9));
        if (epoch < 0) epoch = 0;
        return t0_ + static_cast<double>(epoch + 1) * rtt_;
    }

    // How long the ack stream keeps flowing after time t: the ack stream is
    // the send stream one RTT back, so it runs until the busy run under the
    // base point ends. Returns t itself when acks are not flowing (a run that
    // ends a float tie past the base point counts as already over).
    double ack_flow_until(double t) const {
        double base = t - rtt_;
        double end = curve_.busy_end_from(base, 1e-12);
        if (end <= base + 1e-12) return t;
        double until = end + rtt_;
        return until > t ? until : t;
    }

    std::vector<std::pair<double, double>> window_walk(double start, int64_t size) {
        std::vector<std::pair<double, double>> out;
        double remaining = static_cast<double>(size);
        double now = start;
        for (int guard = 0; remaining > 0.0; ++guard) {
            if (guard > 1'000'000)
                throw SimError("send window walk failed to converge");

            // Wait until sending is allowed: free window headroom, or acks
            // draining the window at the link rate.
            while (true) {
                double head = cwnd_bytes(now) -
                              (curve_.sent_by(now) - curve_.sent_by(now - rtt_));
                if (head > 1e-6) break;
                if (head > -1e-3 && ack_flow_until(now) > now) break;
                double cand = next_epoch_after(now);
                double ns = curve_.next_start_after(now - rtt_);
                while (ns < kInf && ns + rtt_ <= now)
                    ns = curve_.next_start_after(ns);
                if (ns < kInf) cand = std::min(cand, ns + rtt_);
                if (!(cand > now)) throw SimError("send window made no progress");
                now = cand;
            }

            double head = std::max(
                0.0, cwnd_bytes(now) - (curve_.sent_by(now) - curve_.sent_by(now - rtt_)));
            double bp = now + remaining / byte_rate_;
            bool finishes = true;
            auto cut = [&](double t) {
                if (t < bp) { bp = t; finishes = false; }
            };
            cut(next_epoch_after(now));
            if (cwnd_bytes(now) < kInf) {
                double au = ack_flow_until(now);
                if (au > now)
                    cut(au);  // inflight holds steady until the acks stop
                else
                    cut(now + head / byte_rate_);  // sending fills the window
            }
            if (!(bp > now)) throw SimError("send window stalled");

            double sent = (bp - now) * byte_rate_;
            if (!finishes && remaining - sent < 1e-6) {
                // Absorb float residue instead of stalling over it.
                bp += (remaining - sent) / byte_rate_;
                finishes = true;
            }
            curve_.append(now, bp);
            if (!out.empty() && out.back().second == now)
                out.back().second = bp;
            else
                out.emplace_back(now, bp);
            remaining = finishes ? 0.0 : remaining - sent;
            now = bp;
        }
        return out;
    }

    // ─── Client parser ───

    double group_offset_arrival(int idx, std::size_t gi) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        int64_t offset = group_offsets_[static_cast<std::size_t>(idx)][gi];
        if (offset == 0) return n.first_arr;
        double acc = 0.0;
        for (const auto& [s, e, b] : n.plan) {
            if (static_cast<double>(offset) <= acc + b + 1e-6) {
                double within = static_cast<double>(offset) - acc;
                if (within >= b) return e;
                return s + (e - s) * (within / b);
            }
            acc += b;
        }
        return n.last_arr;
    }

    bool arrived(int idx, double now) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        return n.planned && n.last_arr <= now;
    }

    void on_client_check(double now, int p) {
        auto pu = static_cast<std::size_t>(p);
        Node& parent = nodes_[pu];

        auto& gate = gates_[pu];
        for (auto it = gate.begin(); it != gate.end();) {
            if (arrived(*it, now)) {
                add_event(now, SimEventKind::parse_resumed, parent.id);
                it = gate.erase(it);
            } else {
                ++it;
            }
        }

        while (next_group_[pu] < groups_[pu].size()) {
            std::size_t gi = next_group_[pu];

            // A pending non-async script earlier in the document halts the
            // parser, so nothing past it can be discovered yet.
            bool blocked = false;
            for (std::size_t ei = 0; ei < gi && !blocked; ++ei)
                for (int c : groups_[pu][ei]) {
                    const Node& sib = nodes_[static_cast<std::size_t>(c)];
                    if (sib.kind == ResourceKind::script && !sib.async_script &&
                        !arrived(c, now)) {
                        blocked = true;
                        break;
                    }
                }
            if (blocked || !parent.planned) break;

            if (group_offset_arrival(p, gi) > now) break;

            for (int c : groups_[pu][gi]) {
                Node& child = nodes_[static_cast<std::size_t>(c)];
                child.discovered = true;
                discoveries_.emplace_back(now, child.id);
                add_event(now, SimEventKind::dependency_discovered, child.id);
                if (child.kind == ResourceKind::script && !child.async_script &&
                    !arrived(c, now)) {
                    gate.push_back(c);
                    add_event(now, SimEventKind::parse_blocked, parent.id);
                }
                if (!child.manifested) {
                    add_event(now, SimEventKind::request_sent, child.id);
                    schedule(now + half_, kReqArrive, c);
                }
            }
            next_group_[pu] += 1;
        }
    }

    // ─── Result assembly ───

    SimResult finalize() {
        SimResult r;
        for (const Node& n : nodes_) {
            r.plt_s = std::max(r.plt_s, n.last_arr);
            r.bytes_transferred += n.size;

            ResourceDelivery d;
            d.first_byte_s = n.first_arr;
            d.last_byte_s = n.last_arr;
            int64_t acc = 0;
            for (std::size_t i = 0; i < n.plan.size(); ++i) {
                const auto& [s, e, b] = n.plan[i];
                int64_t bytes = i + 1 == n.plan.size()
                                    ? n.size - acc
                                    : static_cast<int64_t>(std::llround(b));
                acc += bytes;
                d.segments.push_back(DeliverySegment{s, e, bytes});
            }
            r.deliveries.emplace(n.id, std::move(d));
        }

        for (const auto& [from, to] : bubbles_) {
            r.bubble_total_s += to - from;
            add_event(from, SimEventKind::bubble_start, "");
            add_event(to, SimEventKind::bubble_end, "");
        }

        std::stable_sort(out_events_.begin(), out_events_.end(),
                         [](const SimEvent& a, const SimEvent& b) {
                             return std::tie(a.time_s, a.kind, a.resource_id) <
                                    std::tie(b.time_s, b.kind, b.resource_id);
                         });
        r.events = std::move(out_events_);

        std::stable_sort(discoveries_.begin(), discoveries_.end(),
                         [this](const auto& a, const auto& b) {
                             if (a.first != b.first) return a.first < b.first;
                             return decl_of(a.second) < decl_of(b.second);
                         });
        r.discoveries = std::move(discoveries_);
        return r;
    }

    int decl_of(const std::string& id) const {
        for (const Node& n : nodes_)
            if (n.id == id) return n.decl;
        return 0;
    }

    const DependencyTree& page_;
    const SimConfig& cfg_;
    SendCurve curve_;
    double rtt_ = 0.0, half_ = 0.0, byte_rate_ = 0.0, t0_ = 0.0;

    std::vector<Node> nodes_;
    int root_ = 0;
    std::vector<int> manifest_nodes_;
    std::vector<std::vector<std::vector<int>>> groups_;   // parent -> group -> children
    std::vector<std::vector<int64_t>> group_offsets_;     // parent -> group offset
    std::vector<std::size_t> next_group_;
    std::vector<std::vector<int>> gates_;                 // parent -> pending scripts

    std::priority_queue<Ev, std::vector<Ev>, EvAfter> events_;
    uint64_t seq_ = 0;
    std::set<std::tuple<double, int64_t, int>> queue_;  // (arrival, key, node)
    double server_free_ = 0.0;
    std::size_t served_ = 0;

    bool bubble_open_ = false;
    double bubble_from_ = 0.0;
    std::vector<std::pair<double, double>> bubbles_;

    std::vector<SimEvent> out_events_;
    std::vector<std::pair<double, std::string>> discoveries_;
};

} // namespace

// ─── Public entry points ───

SimResult simulate(const DependencyTree& page, const SimConfig& config) {
    if (!config.link.valid())
        throw SimError("invalid link parameters");
    if (config.congestion.enabled && !config.congestion.valid())
        throw SimError("invalid congestion parameters");
    Engine engine(page, config);
    return engine.run();
}

double spr(const DependencyTree& page, const LinkParams& link,
           const CongestionState& congestion, const PushManifest& manifest) {
    SimConfig pull;
    pull.mode = SimMode::pull;
    pull.link = link;
    pull.congestion = congestion;

    SimConfig push = pull;
    push.mode = SimMode::push;
    push.push_order = manifest;

    return simulate(page, pull).plt_s - simulate(page, push).plt_s;
}

DiscoverySchedule trace_discovery_schedule(const SimResult& pull_result,
                                           const DependencyTree& page) {
    std::map<int, double> first_at_depth;
    for (const auto& [t, id] : pull_result.discoveries) {
        if (!page.has_resource(id))
            throw SimError("discovery trace names unknown resource '" + id + "'");
        int d = page.depth_of(id);
        if (d >= 1 && first_at_depth.find(d) == first_at_depth.end())
            first_at_depth[d] = t;
    }

    DiscoverySchedule sched;
    for (int d = 1; d <= page.height(); ++d) {
        auto it = first_at_depth.find(d);
        if (it == first_at_depth.end())
            throw SimError("pull trace has no discovery at depth " +
                           std::to_string(d));
        DepthDiscovery entry;
        entry.depth = d;
        entry.time_s = it->second;
        for (const Resource& r : page.resources()) {
            if (page.depth_of(r.id) >= d) continue;
            auto del = pull_result.deliveries.find(r.id);
            if (del == pull_result.deliveries.end())
                throw SimError("pull trace has no delivery for '" + r.id + "'");
            entry.rsize_bytes += std::max(
                0.0, static_cast<double>(r.size_bytes) -
                         del->second.bytes_by(entry.time_s));
        }
        sched.depths.push_back(entry);
    }
    return sched;
}

std::string write_timeline_jsonl(const SimResult& result) {
    std::string out;
    for (const SimEvent& e : result.events) {
        nlohmann::ordered_json j;
        j["time_s"] = e.time_s;
        j["kind"] = to_string(e.kind);
        j["resource_id"] = e.resource_id;
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace pushsim
