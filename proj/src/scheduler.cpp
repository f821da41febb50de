#include "wimaxsim/scheduler.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace wimaxsim {

namespace {

constexpr std::size_t class_index(SchedulingType t)
{
    return static_cast<std::size_t>(t);
}

constexpr std::int64_t kUnitsPerByte = 8'000'000;

} // namespace

std::string_view to_string(GrantKind k)
{
    return k == GrantKind::data_grant ? "data" : "poll";
}

Bytes FrameLedger::granted_total() const
{
    Bytes total = 0;
    for (const auto& g : grants)
        total += g.granted_bytes;
    return total;
}

void FrameLedger::settle()
{
    bytes_used = 0;
    for (const auto& g : grants)
        bytes_used += g.used_bytes;
    bytes_wasted = granted_total() - bytes_used;
}

void audit_frame(const FrameLedger& ledger)
{
    const Bytes granted = ledger.granted_total();
    if (granted > ledger.capacity_bytes)
        throw InvariantViolation(fmt::format("{} frame {}: granted {} B exceeds capacity {} B",
                                             to_string(ledger.direction), ledger.frame_index, granted,
                                             ledger.capacity_bytes));
    for (const auto& g : ledger.grants) {
        if (g.used_bytes < 0 || g.used_bytes > g.granted_bytes)
            throw InvariantViolation(fmt::format("{} frame {}: flow {} used {} B of a {} B grant",
                                                 to_string(ledger.direction), ledger.frame_index, g.flow_id,
                                                 g.used_bytes, g.granted_bytes));
    }
    if (ledger.bytes_used + ledger.bytes_wasted != granted)
        throw InvariantViolation(fmt::format("{} frame {}: used {} + wasted {} != granted {}",
                                             to_string(ledger.direction), ledger.frame_index, ledger.bytes_used,
                                             ledger.bytes_wasted, granted));
}

RateAccumulator::RateAccumulator(std::int64_t rate_bps, SimTime frame_duration) : frame_us_(frame_duration.us)
{
    set_rate_bps(rate_bps);
}

void RateAccumulator::set_rate_bps(std::int64_t rate_bps)
{
    per_frame_ = rate_bps * frame_us_;
}

void RateAccumulator::set_per_frame_bytes(Bytes bytes)
{
    per_frame_ = bytes * kUnitsPerByte;
}

Bytes RateAccumulator::next_frame_bytes()
{
    credit_ += per_frame_;
    const Bytes out = credit_ / kUnitsPerByte;
    credit_ -= out * kUnitsPerByte;
    return out;
}

Bytes RateAccumulator::next_frame_units(Bytes unit)
{
    if (unit <= 0)
        return next_frame_bytes();
    credit_ += per_frame_;
    const std::int64_t n = credit_ / (unit * kUnitsPerByte);
    credit_ -= n * unit * kUnitsPerByte;
    return n * unit;
}

Bytes ugs_grant_bytes(std::int64_t rate_bps, SimTime frame_duration)
{
    RateAccumulator acc(rate_bps, frame_duration);
    return acc.next_frame_bytes();
}

Bytes ertps_update_grant(ErtpsGrantState& state, std::optional<Bytes> latest_request, Bytes backlog,
                         Bytes mstr_frame_bytes, Bytes bw_request_bytes)
{
    if (latest_request) {
        if (*latest_request <= 0) {
            state.silent = true;
            state.current_grant_bytes = bw_request_bytes;
        } else {
            state.silent = false;
            state.current_grant_bytes = std::min(*latest_request, mstr_frame_bytes);
        }
    } else if (state.silent && backlog > 0) {
        state.silent = false;
        state.current_grant_bytes = state.nominal_grant_bytes;
    }
    return state.current_grant_bytes;
}

std::optional<BwRequest> ertps_station_request(const Grant& grant, Bytes backlog_at_grant, Bytes nominal_frame_bytes)
{
    if (grant.kind == GrantKind::data_grant && backlog_at_grant == 0)
        return BwRequest{grant.flow_id, 0, grant.frame_index, RequestKind::grant_change};
    if (grant.kind == GrantKind::unicast_poll && backlog_at_grant > 0)
        return BwRequest{grant.flow_id, nominal_frame_bytes, grant.frame_index, RequestKind::grant_change};
    return std::nullopt;
}

bool rtps_poll_due(std::int64_t frame_index, std::int64_t polling_interval_frames)
{
    return polling_interval_frames > 0 && frame_index % polling_interval_frames == 0;
}

std::optional<BwRequest> be_contention_request(const ServiceFlow& flow, std::int64_t frame_index,
                                               std::int64_t contention_period_frames)
{
    const auto t = flow.scheduling_type();
    if (t != SchedulingType::BE && t != SchedulingType::nrtPS)
        return std::nullopt;
    if (flow.empty() || contention_period_frames <= 0 || frame_index % contention_period_frames != 0)
        return std::nullopt;
    return BwRequest{flow.id(), flow.backlog_bytes(), frame_index, RequestKind::bandwidth};
}

Bytes serve_bw_request(const BwRequest& request, Bytes mstr_allowance, Bytes remaining_capacity)
{
    return std::max<Bytes>(0, std::min({request.requested_bytes, mstr_allowance, remaining_capacity}));
}

GrantScheduler::GrantScheduler(Direction direction, SchedulerParams params) : direction_(direction), params_(params)
{
}

void GrantScheduler::add_flow(const ServiceFlow& flow, Bytes grant_unit_bytes)
{
    if (flow.direction() != direction_)
        throw SimulationError(fmt::format("flow {} added to the {} scheduler", flow.id(), to_string(direction_)));
    if (find(flow.id()))
        throw SimulationError(fmt::format("flow {} added twice", flow.id()));

    const auto& cls = flow.service_class();
    FlowState s;
    s.id = flow.id();
    s.type = cls.scheduling_type;
    s.grant_unit = grant_unit_bytes;
    s.mrtr_bps = cls.min_reserved_rate_bps;
    s.accumulator = RateAccumulator(cls.min_reserved_rate_bps, params_.frame_duration);
    s.mstr_frame_bytes = ugs_grant_bytes(cls.max_sustained_rate_bps, params_.frame_duration);
    s.ertps.flow_id = flow.id();
    s.ertps.nominal_grant_bytes = ugs_grant_bytes(cls.min_reserved_rate_bps, params_.frame_duration);
    s.ertps.current_grant_bytes = s.ertps.nominal_grant_bytes;

    if (cls.max_sustained_rate_bps > 0) {
        s.bucket_rate_units = cls.max_sustained_rate_bps * params_.frame_duration.us;
        // Default burst: 100 ms at MSTR, never less than one frame's worth.
        Bytes depth = cls.max_traffic_burst_bytes > 0 ? cls.max_traffic_burst_bytes
                                                      : cls.max_sustained_rate_bps / 80;
        s.bucket_depth_units = std::max(depth * kUnitsPerByte, s.bucket_rate_units);
        s.bucket_units = s.bucket_depth_units;
    }

    by_class_[class_index(s.type)].push_back(flows_.size());
    flows_.push_back(s);
}

GrantScheduler::FlowState& GrantScheduler::state(FlowId id)
{
    for (auto& s : flows_) {
        if (s.id == id)
            return s;
    }
    throw SimulationError(fmt::format("flow {} is not known to the {} scheduler", id, to_string(direction_)));
}

const GrantScheduler::FlowState* GrantScheduler::find(FlowId id) const
{
    for (const auto& s : flows_) {
        if (s.id == id)
            return &s;
    }
    return nullptr;
}

const ErtpsGrantState* GrantScheduler::ertps_state(FlowId id) const
{
    const auto* s = find(id);
    return s && s->type == SchedulingType::ertPS ? &s->ertps : nullptr;
}

Bytes GrantScheduler::outstanding_request(FlowId id) const
{
    const auto* s = find(id);
    return s ? s->outstanding : 0;
}

Bytes GrantScheduler::grant_unit(FlowId id) const
{
    const auto* s = find(id);
    return s ? s->grant_unit : 0;
}

// MSTR 0 leaves the flow uncapped.
Bytes GrantScheduler::bucket_bytes(const FlowState& s) const
{
    if (s.bucket_rate_units == 0)
        return std::numeric_limits<Bytes>::max();
    return s.bucket_units / kUnitsPerByte;
}

void GrantScheduler::take_tokens(FlowState& s, Bytes bytes)
{
    if (s.bucket_rate_units != 0)
        s.bucket_units -= bytes * kUnitsPerByte;
}

void GrantScheduler::sync_ertps(FlowState& s, bool was_silent)
{
    if (s.ertps.silent) {
        s.accumulator.reset();
        return;
    }
    if (s.ertps.current_grant_bytes == s.ertps.nominal_grant_bytes)
        s.accumulator.set_rate_bps(s.mrtr_bps);
    else
        s.accumulator.set_per_frame_bytes(s.ertps.current_grant_bytes);
    // A restored flow gets its first burst immediately.
    if (was_silent)
        s.accumulator.prime(s.grant_unit > 0 ? s.grant_unit : s.ertps.current_grant_bytes);
}

void GrantScheduler::apply_request(const BwRequest& req, std::span<const ServiceFlow> flows)
{
    auto& s = state(req.flow_id);
    if (req.kind == RequestKind::grant_change) {
        if (s.type != SchedulingType::ertPS)
            throw SimulationError(fmt::format("grant-change request for non-ertPS flow {}", req.flow_id));
        const bool was_silent = s.ertps.silent;
        const Bytes backlog = req.flow_id < flows.size() ? flows[req.flow_id].backlog_bytes() : 0;
        ertps_update_grant(s.ertps, req.requested_bytes, backlog, s.mstr_frame_bytes, params_.bw_request_bytes);
        sync_ertps(s, was_silent);
        return;
    }
    s.outstanding = std::max<Bytes>(0, req.requested_bytes);
}

void GrantScheduler::unsolicited(FlowState& s, std::int64_t frame_index, Bytes& remaining, FrameLedger& ledger)
{
    if (s.type == SchedulingType::ertPS && s.ertps.silent) {
        // The BS sees downlink queues directly; no request slot needed.
        if (direction_ == Direction::downlink)
            return;
        const Bytes slot = params_.bw_request_bytes;
        if (slot <= remaining) {
            ledger.grants.push_back(Grant{s.id, frame_index, slot, GrantKind::unicast_poll});
            remaining -= slot;
        } else {
            ++shed_grants_;
        }
        return;
    }

    const Bytes sdu = s.accumulator.next_frame_units(s.grant_unit);
    if (sdu <= 0)
        return;
    const Bytes bursts = s.grant_unit > 0 ? sdu / s.grant_unit : 1;
    const Bytes air = sdu + bursts * params_.mac_header_bytes;
    if (air > remaining) {
        // Admission violation: skip this frame. A burst-sized grant carries
        // over once; a per-frame grant is simply lost.
        if (s.grant_unit > 0)
            s.accumulator.refund(sdu, s.grant_unit);
        ++shed_grants_;
        if (!s.shed_warned) {
            s.shed_warned = true;
            warnings_.push_back(fmt::format("{} frame {}: {} flow {} grant of {} B shed, reservations exceed capacity",
                                            to_string(direction_), frame_index, to_string(s.type), s.id, air));
        }
        return;
    }
    ledger.grants.push_back(Grant{s.id, frame_index, air, GrantKind::data_grant});
    remaining -= air;
}

void GrantScheduler::polled(FlowState& s, std::int64_t frame_index, std::int64_t interval, Bytes& remaining,
                            FrameLedger& ledger)
{
    // Downlink queues are visible to the BS, so there is nothing to poll.
    if (direction_ == Direction::uplink && rtps_poll_due(frame_index, interval)) {
        if (params_.bw_request_bytes <= remaining) {
            ledger.grants.push_back(Grant{s.id, frame_index, params_.bw_request_bytes, GrantKind::unicast_poll});
            remaining -= params_.bw_request_bytes;
        }
    }
    if (s.outstanding > 0) {
        const Bytes g = serve_bw_request(BwRequest{s.id, s.outstanding, frame_index}, bucket_bytes(s), remaining);
        if (g > 0) {
            ledger.grants.push_back(Grant{s.id, frame_index, g, GrantKind::data_grant});
            remaining -= g;
            s.outstanding -= g;
            take_tokens(s, g);
        }
    }
}

void GrantScheduler::best_effort(std::vector<FlowState*>& order, std::span<const ServiceFlow> flows,
                                 std::int64_t frame_index, Bytes& remaining, FrameLedger& ledger)
{
    const std::size_t n = order.size();
    std::vector<Bytes> caps(n, 0);
    std::vector<Bytes> floor_bytes(n, 0);
    std::vector<bool> eligible(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        caps[i] = std::min(order[i]->outstanding, bucket_bytes(*order[i]));
        eligible[i] = caps[i] > 0;
        // A grant smaller than the head-of-line PDU cannot carry anything.
        if (order[i]->id < flows.size()) {
            if (const auto* head = flows[order[i]->id].head())
                floor_bytes[i] = std::min(head->total_bytes(), caps[i]);
        }
    }
    if (remaining <= 0)
        return;

    std::vector<Bytes> share(n, 0);
    for (;;) {
        Bytes total = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (eligible[i])
                total += caps[i];
        if (total <= 0)
            return;

        std::fill(share.begin(), share.end(), 0);
        if (total <= remaining) {
            for (std::size_t i = 0; i < n; ++i)
                if (eligible[i])
                    share[i] = caps[i];
        } else {
            Bytes given = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!eligible[i])
                    continue;
                share[i] = remaining * caps[i] / total;
                given += share[i];
            }
            Bytes left = remaining - given;
            for (std::size_t i = 0; left > 0 && i < n; ++i) {
                if (eligible[i] && share[i] < caps[i]) {
                    ++share[i];
                    --left;
                }
            }
        }

        // Drop the unusable flow furthest from the cursor and share again.
        std::optional<std::size_t> drop;
        for (std::size_t i = 0; i < n; ++i)
            if (eligible[i] && share[i] < floor_bytes[i])
                drop = i;
        if (!drop)
            break;
        eligible[*drop] = false;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (share[i] <= 0)
            continue;
        ledger.grants.push_back(Grant{order[i]->id, frame_index, share[i], GrantKind::data_grant});
        remaining -= share[i];
        order[i]->outstanding -= share[i];
        take_tokens(*order[i], share[i]);
    }
}

FrameLedger GrantScheduler::build_frame_map(std::int64_t frame_index, std::span<const ServiceFlow> flows,
                                            std::span<const BwRequest> pending_requests, Bytes capacity)
{
    if (capacity <= 0)
        throw SimulationError("frame capacity must be positive");

    for (const auto& req : pending_requests)
        apply_request(req, flows);

    for (auto& s : flows_) {
        if (s.bucket_rate_units != 0)
            s.bucket_units = std::min(s.bucket_units + s.bucket_rate_units, s.bucket_depth_units);
        if (direction_ == Direction::downlink && s.id < flows.size()) {
            const auto& flow = flows[s.id];
            if (s.type == SchedulingType::rtPS || s.type == SchedulingType::nrtPS || s.type == SchedulingType::BE)
                s.outstanding = flow.backlog_bytes();
            else if (s.type == SchedulingType::ertPS && s.ertps.silent) {
                ertps_update_grant(s.ertps, std::nullopt, flow.backlog_bytes(), s.mstr_frame_bytes,
                                   params_.bw_request_bytes);
                sync_ertps(s, true);
            }
        }
    }

    FrameLedger ledger;
    ledger.frame_index = frame_index;
    ledger.direction = direction_;
    ledger.capacity_bytes = capacity;
    Bytes remaining = capacity;

    for (std::size_t c = 0; c < kClasses; ++c) {
        const auto& members = by_class_[c];
        if (members.empty())
            continue;
        std::vector<FlowState*> order;
        order.reserve(members.size());
        const std::size_t start = cursor_[c] % members.size();
        for (std::size_t i = 0; i < members.size(); ++i)
            order.push_back(&flows_[members[(start + i) % members.size()]]);
        cursor_[c] = (start + 1) % members.size();

        const auto type = static_cast<SchedulingType>(c);
        switch (type) {
        case SchedulingType::UGS:
        case SchedulingType::ertPS:
            for (auto* s : order)
                unsolicited(*s, frame_index, remaining, ledger);
            break;
        case SchedulingType::rtPS:
            for (auto* s : order)
                polled(*s, frame_index, params_.rtps_poll_interval_frames, remaining, ledger);
            break;
        case SchedulingType::nrtPS:
            for (auto* s : order)
                polled(*s, frame_index, params_.nrtps_poll_interval_frames, remaining, ledger);
            break;
        case SchedulingType::BE:
            best_effort(order, flows, frame_index, remaining, ledger);
            break;
        }
    }

    if (params_.oversubscribe_frame && *params_.oversubscribe_frame == frame_index)
        ledger.grants.push_back(Grant{flows_.empty() ? 0 : flows_.front().id, frame_index, remaining + 1,
                                      GrantKind::data_grant});

    return ledger;
}

} // namespace wimaxsim
