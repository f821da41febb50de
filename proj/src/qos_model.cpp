#include "wimaxsim/qos_model.hpp"

#include <fmt/format.h>

namespace wimaxsim {

std::string_view to_string(SchedulingType t)
{
    switch (t) {
    case SchedulingType::UGS: return "UGS";
    case SchedulingType::ertPS: return "ertPS";
    case SchedulingType::rtPS: return "rtPS";
    case SchedulingType::nrtPS: return "nrtPS";
    case SchedulingType::BE: return "BE";
    }
    return "?";
}

std::optional<SchedulingType> parse_scheduling_type(std::string_view s)
{
    for (auto t : {SchedulingType::UGS, SchedulingType::ertPS, SchedulingType::rtPS, SchedulingType::nrtPS,
                   SchedulingType::BE}) {
        if (s == to_string(t))
            return t;
    }
    return std::nullopt;
}

std::string_view to_string(Direction d)
{
    return d == Direction::uplink ? "ul" : "dl";
}

std::vector<std::string> ServiceClass::validate() const
{
    std::vector<std::string> errors;
    if (max_sustained_rate_bps < 0 || min_reserved_rate_bps < 0)
        errors.push_back(fmt::format("service class '{}': rates must be non-negative", name));
    if (min_reserved_rate_bps > max_sustained_rate_bps)
        errors.push_back(fmt::format("service class '{}': min_reserved_rate_bps ({}) exceeds max_sustained_rate_bps ({})",
                                     name, min_reserved_rate_bps, max_sustained_rate_bps));
    if (scheduling_type == SchedulingType::UGS && min_reserved_rate_bps != max_sustained_rate_bps)
        errors.push_back(fmt::format("service class '{}': UGS requires min_reserved_rate_bps == max_sustained_rate_bps", name));
    if (max_traffic_burst_bytes < 0)
        errors.push_back(fmt::format("service class '{}': max_traffic_burst_bytes must be non-negative", name));
    return errors;
}

ServiceFlow::ServiceFlow(FlowId id, Direction direction, ServiceClass service_class, StationId owner,
                         std::optional<Bytes> queue_byte_cap)
    : id_(id), direction_(direction), class_(std::move(service_class)), owner_(owner), cap_(queue_byte_cap)
{
}

EnqueueOutcome ServiceFlow::enqueue(MacPdu pdu, SimTime now)
{
    if (pdu.flow_id != id_)
        throw SimulationError(fmt::format("PDU for flow {} enqueued on flow {}", pdu.flow_id, id_));
    if (pdu.total_bytes() <= 0)
        throw SimulationError(fmt::format("flow {}: PDU with non-positive size", id_));

    counters_.offered += pdu.payload_bytes;
    ++counters_.pdus_offered;
    if (cap_ && queued_sdu_bytes_ + pdu.payload_bytes > *cap_) {
        counters_.dropped += pdu.payload_bytes;
        ++counters_.pdus_dropped;
        return EnqueueOutcome::dropped;
    }
    pdu.enqueued_at = now;
    queued_air_bytes_ += pdu.total_bytes();
    queued_sdu_bytes_ += pdu.payload_bytes;
    queue_.push_back(std::move(pdu));
    return EnqueueOutcome::accepted;
}

std::vector<MacPdu> ServiceFlow::dequeue_up_to(Bytes grant_bytes)
{
    std::vector<MacPdu> out;
    Bytes room = grant_bytes;
    while (!queue_.empty() && queue_.front().total_bytes() <= room) {
        MacPdu pdu = std::move(queue_.front());
        queue_.pop_front();
        room -= pdu.total_bytes();
        queued_air_bytes_ -= pdu.total_bytes();
        queued_sdu_bytes_ -= pdu.payload_bytes;
        counters_.sent += pdu.payload_bytes;
        ++counters_.pdus_sent;
        out.push_back(std::move(pdu));
    }
    return out;
}

Bytes ServiceFlow::conservation_delta() const
{
    Bytes sdu = 0;
    Bytes air = 0;
    for (const auto& p : queue_) {
        sdu += p.payload_bytes;
        air += p.total_bytes();
    }
    if (sdu != queued_sdu_bytes_)
        return queued_sdu_bytes_ - sdu;
    if (air != queued_air_bytes_)
        return queued_air_bytes_ - air;
    return counters_.offered - (counters_.sent + counters_.dropped + sdu);
}

} // namespace wimaxsim
