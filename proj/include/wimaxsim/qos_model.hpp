#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wimaxsim/engine.hpp"

namespace wimaxsim {

using Bytes = std::int64_t;
using FlowId = std::uint32_t;
using StationId = std::uint32_t;

// Ordered by scheduling priority.
enum class SchedulingType : std::uint8_t { UGS, ertPS, rtPS, nrtPS, BE };

std::string_view to_string(SchedulingType t);
std::optional<SchedulingType> parse_scheduling_type(std::string_view s);

enum class Direction : std::uint8_t { uplink, downlink };

std::string_view to_string(Direction d);

enum class AppTag : std::uint8_t { voice, data, reservation };

struct ServiceClass
{
    std::string name;
    SchedulingType scheduling_type = SchedulingType::BE;
    std::int64_t max_sustained_rate_bps = 0;
    std::int64_t min_reserved_rate_bps = 0;
    // Token-bucket depth for the MSTR cap of polled/contention grants.
    // 0 means "derive from the rate".
    Bytes max_traffic_burst_bytes = 0;

    // Empty when the class is consistent; otherwise one message per problem.
    std::vector<std::string> validate() const;
};

struct MacPdu
{
    std::uint64_t id = 0;
    FlowId flow_id = 0;
    Bytes payload_bytes = 0;
    Bytes mac_header_bytes = 0;
    SimTime created_at;
    SimTime enqueued_at;
    AppTag app_tag = AppTag::data;
    // Transaction id for data PDUs, sequence number for voice.
    std::uint64_t app_seq = 0;

    Bytes total_bytes() const { return payload_bytes + mac_header_bytes; }
};

enum class EnqueueOutcome : std::uint8_t { accepted, dropped };

// Unidirectional MAC connection with a FIFO of whole PDUs.
//
// Counters are in SDU (payload) bytes so that load, throughput and queue
// depth all refer to what the higher layer offered. backlog_bytes() is the
// on-air size (payload + MAC header) that a bandwidth request reports.
class ServiceFlow
{
public:
    struct Counters
    {
        Bytes offered = 0;
        Bytes sent = 0;
        Bytes dropped = 0;
        std::int64_t pdus_offered = 0;
        std::int64_t pdus_sent = 0;
        std::int64_t pdus_dropped = 0;
    };

    ServiceFlow(FlowId id, Direction direction, ServiceClass service_class, StationId owner,
                std::optional<Bytes> queue_byte_cap = std::nullopt);

    FlowId id() const { return id_; }
    Direction direction() const { return direction_; }
    const ServiceClass& service_class() const { return class_; }
    SchedulingType scheduling_type() const { return class_.scheduling_type; }
    StationId owner() const { return owner_; }
    std::optional<Bytes> queue_byte_cap() const { return cap_; }

    // Rejects a PDU of another flow with SimulationError. The cap applies to
    // queued SDU bytes.
    EnqueueOutcome enqueue(MacPdu pdu, SimTime now);

    // Removes whole PDUs head-first while they fit in grant_bytes (on-air size).
    std::vector<MacPdu> dequeue_up_to(Bytes grant_bytes);

    Bytes backlog_bytes() const { return queued_air_bytes_; }
    Bytes queued_sdu_bytes() const { return queued_sdu_bytes_; }
    std::size_t queued_pdus() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }
    const MacPdu* head() const { return queue_.empty() ? nullptr : &queue_.front(); }
    const Counters& counters() const { return counters_; }

    // Recomputes queue sums from the PDUs themselves and compares them with
    // the running counters. Returns offered - (sent + dropped + queued).
    Bytes conservation_delta() const;

    // Test hook: corrupts the offered counter the way a double-counting bug would.
    void inject_double_count(Bytes bytes) { counters_.offered += bytes; }

private:
    FlowId id_;
    Direction direction_;
    ServiceClass class_;
    StationId owner_;
    std::optional<Bytes> cap_;
    std::deque<MacPdu> queue_;
    Bytes queued_air_bytes_ = 0;
    Bytes queued_sdu_bytes_ = 0;
    Counters counters_;
};

} // namespace wimaxsim
