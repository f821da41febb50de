#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wimaxsim/engine.hpp"
#include "wimaxsim/qos_model.hpp"

namespace wimaxsim {

struct SchedulerParams
{
    SimTime frame_duration = SimTime::from_us(5000);
    Bytes mac_header_bytes = 6;
    Bytes bw_request_bytes = 6;
    std::int64_t rtps_poll_interval_frames = 4;
    std::int64_t nrtps_poll_interval_frames = 200;
    std::int64_t be_contention_period_frames = 10;
    // Fault injection for the capacity audit: grants capacity + 1 bytes in
    // frame `oversubscribe_frame` when set.
    std::optional<std::int64_t> oversubscribe_frame;
};

enum class GrantKind : std::uint8_t { data_grant, unicast_poll };

std::string_view to_string(GrantKind k);

// One UL-MAP/DL-MAP entry.
struct Grant
{
    FlowId flow_id = 0;
    std::int64_t frame_index = 0;
    Bytes granted_bytes = 0;
    GrantKind kind = GrantKind::data_grant;
    // Filled in when the grant is consumed.
    Bytes used_bytes = 0;

    friend bool operator==(const Grant&, const Grant&) = default;
};

struct FrameLedger
{
    std::int64_t frame_index = 0;
    Direction direction = Direction::uplink;
    Bytes capacity_bytes = 0;
    std::vector<Grant> grants;
    Bytes bytes_used = 0;
    Bytes bytes_wasted = 0;

    Bytes granted_total() const;
    // Sums used_bytes over grants into bytes_used / bytes_wasted.
    void settle();
};

// Throws InvariantViolation when grants exceed capacity or used+wasted
// does not add up.
void audit_frame(const FrameLedger& ledger);

class InvariantViolation : public SimulationError
{
public:
    using SimulationError::SimulationError;
};

enum class RequestKind : std::uint8_t { bandwidth, grant_change };

struct BwRequest
{
    FlowId flow_id = 0;
    // bandwidth: on-air backlog bytes. grant_change: SDU bytes per frame.
    Bytes requested_bytes = 0;
    std::int64_t issued_frame = 0;
    RequestKind kind = RequestKind::bandwidth;
};

// Deficit accumulator that turns a bit rate into per-frame byte grants with
// no long-run drift. Credit is kept in bit-microseconds so every rate is exact.
class RateAccumulator
{
public:
    RateAccumulator() = default;
    RateAccumulator(std::int64_t rate_bps, SimTime frame_duration);

    void set_rate_bps(std::int64_t rate_bps);
    void set_per_frame_bytes(Bytes bytes);

    // Adds one frame of credit and returns floor(credit) bytes.
    Bytes next_frame_bytes();
    // Adds one frame of credit and releases it in whole multiples of unit.
    Bytes next_frame_units(Bytes unit);
    // Returns bytes that were released but not granted, keeping at most
    // `cap` bytes of credit so a flow that keeps being shed cannot build up
    // an ever larger burst.
    void refund(Bytes bytes, Bytes cap) { credit_ = std::min(credit_ + bytes * kUnitsPerByte, cap * kUnitsPerByte); }
    void prime(Bytes bytes) { credit_ = bytes * kUnitsPerByte; }
    void reset() { credit_ = 0; }

    // Whole bytes granted per frame on average, rounded down.
    Bytes nominal_frame_bytes() const { return per_frame_ / kUnitsPerByte; }

private:
    static constexpr std::int64_t kUnitsPerByte = 8'000'000;  // 8 bits x 1e6 us/s

    std::int64_t frame_us_ = 5000;
    std::int64_t per_frame_ = 0;
    std::int64_t credit_ = 0;
};

// First-frame UGS grant for a rate; successive frames come from RateAccumulator.
Bytes ugs_grant_bytes(std::int64_t rate_bps, SimTime frame_duration);

struct ErtpsGrantState
{
    FlowId flow_id = 0;
    // SDU bytes per frame while active; bw_request_bytes while silent.
    Bytes current_grant_bytes = 0;
    Bytes nominal_grant_bytes = 0;
    bool silent = false;
};

// Applies a grant-change request (or its absence) to an ertPS flow.
// A request of 0 means silence: only a bandwidth-request slot remains.
// Without a request, a silent flow with visible backlog returns to nominal.
Bytes ertps_update_grant(ErtpsGrantState& state, std::optional<Bytes> latest_request, Bytes backlog,
                         Bytes mstr_frame_bytes, Bytes bw_request_bytes);

// Station side of ertPS: what the SS signals after using a grant.
// Data grant found the queue empty -> request 0. Request slot with backlog ->
// request nominal.
std::optional<BwRequest> ertps_station_request(const Grant& grant, Bytes backlog_at_grant, Bytes nominal_frame_bytes);

bool rtps_poll_due(std::int64_t frame_index, std::int64_t polling_interval_frames);

// BE (and nrtPS) contention: a backlogged flow requests once per period.
std::optional<BwRequest> be_contention_request(const ServiceFlow& flow, std::int64_t frame_index,
                                               std::int64_t contention_period_frames);

// Bytes granted for a received request: min(requested, MSTR allowance, remaining capacity).
Bytes serve_bw_request(const BwRequest& request, Bytes mstr_allowance, Bytes remaining_capacity);

// Base-station grant scheduler for one direction.
//
// Strict priority UGS > ertPS > rtPS > nrtPS > BE; round robin inside a
// class from a cursor that advances every frame. BE shares whatever is left
// in proportion to outstanding requests, capped by each flow's MSTR bucket;
// a flow whose share cannot carry its head PDU sits the frame out.
class GrantScheduler
{
public:
    GrantScheduler(Direction direction, SchedulerParams params);

    Direction direction() const { return direction_; }
    const SchedulerParams& params() const { return params_; }

    // grant_unit_bytes: SDU bytes per unsolicited grant for UGS/ertPS
    // (0 = floor of the accumulated rate every frame).
    void add_flow(const ServiceFlow& flow, Bytes grant_unit_bytes = 0);

    // `flows` is indexed by FlowId. Requests were issued in earlier frames.
    FrameLedger build_frame_map(std::int64_t frame_index, std::span<const ServiceFlow> flows,
                                std::span<const BwRequest> pending_requests, Bytes capacity);

    const ErtpsGrantState* ertps_state(FlowId id) const;
    Bytes outstanding_request(FlowId id) const;
    Bytes grant_unit(FlowId id) const;
    std::int64_t shed_grants() const { return shed_grants_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    struct FlowState
    {
        FlowId id = 0;
        SchedulingType type = SchedulingType::BE;
        RateAccumulator accumulator;
        Bytes grant_unit = 0;
        std::int64_t mrtr_bps = 0;
        ErtpsGrantState ertps;
        Bytes mstr_frame_bytes = 0;
        Bytes outstanding = 0;
        std::int64_t bucket_rate_units = 0;  // bit-us per frame
        std::int64_t bucket_depth_units = 0;
        std::int64_t bucket_units = 0;
        bool shed_warned = false;
    };

    static constexpr std::size_t kClasses = 5;

    FlowState& state(FlowId id);
    const FlowState* find(FlowId id) const;
    Bytes bucket_bytes(const FlowState& s) const;
    void take_tokens(FlowState& s, Bytes bytes);
    void sync_ertps(FlowState& s, bool was_silent);
    void apply_request(const BwRequest& req, std::span<const ServiceFlow> flows);
    void unsolicited(FlowState& s, std::int64_t frame_index, Bytes& remaining, FrameLedger& ledger);
    void polled(FlowState& s, std::int64_t frame_index, std::int64_t interval, Bytes& remaining, FrameLedger& ledger);
    void best_effort(std::vector<FlowState*>& order, std::span<const ServiceFlow> flows, std::int64_t frame_index,
                     Bytes& remaining, FrameLedger& ledger);

    Direction direction_;
    SchedulerParams params_;
    std::vector<FlowState> flows_;
    std::array<std::vector<std::size_t>, kClasses> by_class_;
    std::array<std::size_t, kClasses> cursor_{};
    std::int64_t shed_grants_ = 0;
    std::vector<std::string> warnings_;
};

} // namespace wimaxsim
