#include "wimaxsim/traffic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace wimaxsim {

Bytes VoiceSourceConfig::packet_bytes() const
{
    const std::int64_t bits = codec_rate_bps * packetization.us;
    if (bits % 8'000'000 != 0)
        throw SimulationError(fmt::format("codec rate {} bps over {} us is not a whole number of bytes",
                                          codec_rate_bps, packetization.us));
    return bits / 8'000'000 + header_overhead_bytes;
}

double VoiceSourceConfig::offered_rate_bps() const
{
    return static_cast<double>(packet_bytes()) * 8.0 / packetization.seconds();
}

namespace {

SimTime draw_holding(RandomStreams& rng, std::uint32_t stream, SimTime mean)
{
    const double us = rng.next_exponential(stream, static_cast<double>(mean.us));
    // At least one microsecond so a transition never re-fires at the same instant.
    return SimTime::from_us(std::max<std::int64_t>(1, std::llround(us)));
}

} // namespace

TalkTransition talk_state_transition(const TalkState& state, const VoiceSourceConfig& cfg, RandomStreams& rng,
                                     std::uint32_t stream_id, SimTime now)
{
    TalkTransition out;
    out.state.entered_at = now;
    out.state.phase = state.phase == TalkPhase::talking ? TalkPhase::silent : TalkPhase::talking;
    if (cfg.silence_mean.us <= 0) {
        out.state.phase = TalkPhase::talking;
        return out;
    }
    const SimTime mean = out.state.phase == TalkPhase::talking ? cfg.talk_spurt_mean : cfg.silence_mean;
    out.next_transition = now + draw_holding(rng, stream_id, mean);
    return out;
}

VoiceSource::VoiceSource(VoiceSourceConfig cfg, FlowId flow, Bytes mac_header_bytes, std::uint32_t stream_id)
    : cfg_(cfg), flow_(flow), header_(mac_header_bytes), stream_(stream_id)
{
    (void)cfg_.packet_bytes();
}

std::optional<SimTime> VoiceSource::start(RandomStreams& rng, SimTime now)
{
    // Entering "talking" from a notional silent state.
    auto tr = talk_state_transition(TalkState{TalkPhase::silent, now}, cfg_, rng, stream_, now);
    state_ = tr.state;
    return tr.next_transition;
}

std::optional<SimTime> VoiceSource::toggle(RandomStreams& rng, SimTime now)
{
    auto tr = talk_state_transition(state_, cfg_, rng, stream_, now);
    state_ = tr.state;
    return tr.next_transition;
}

std::optional<MacPdu> VoiceSource::voice_emit_packet(SimTime now)
{
    if (cfg_.silence_suppression && state_.phase == TalkPhase::silent)
        return std::nullopt;
    MacPdu pdu;
    pdu.id = 0;
    pdu.flow_id = flow_;
    pdu.payload_bytes = cfg_.packet_bytes();
    pdu.mac_header_bytes = header_;
    pdu.created_at = now;
    pdu.enqueued_at = now;
    pdu.app_tag = AppTag::voice;
    pdu.app_seq = seq_++;
    return pdu;
}

DataClient::DataClient(DataSourceConfig cfg, std::uint32_t stream_id) : cfg_(cfg), stream_(stream_id)
{
    if (cfg_.concurrency < 1)
        throw SimulationError("data client concurrency must be at least 1");
    slots_.resize(static_cast<std::size_t>(cfg_.concurrency));
}

int DataClient::outstanding() const
{
    return static_cast<int>(std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.waiting; }));
}

data_action::Think DataClient::think(int slot, RandomStreams& rng, SimTime now)
{
    const double us = rng.next_exponential(stream_, static_cast<double>(cfg_.think_time_mean.us));
    return data_action::Think{slot, now + SimTime::from_us(std::llround(us))};
}

DataAction DataClient::data_transaction_step(const DataEvent& event, RandomStreams& rng, SimTime now)
{
    if (event.slot < 0 || event.slot >= cfg_.concurrency)
        throw SimulationError(fmt::format("data client slot {} out of range", event.slot));
    auto& slot = slots_[static_cast<std::size_t>(event.slot)];

    switch (event.kind) {
    case DataEventKind::start:
        return think(event.slot, rng, now);
    case DataEventKind::think_done: {
        if (slot.waiting)
            return data_action::Ignore{};
        slot.waiting = true;
        slot.transaction = next_transaction_++;
        slot.sent_at = now;
        return data_action::SendRequest{event.slot, slot.transaction, now + cfg_.request_timeout};
    }
    case DataEventKind::response:
        if (!slot.waiting || slot.transaction != event.transaction) {
            ++late_;
            return data_action::Ignore{};
        }
        slot.waiting = false;
        ++completed_;
        response_time_ = response_time_ + (now - slot.sent_at);
        return think(event.slot, rng, now);
    case DataEventKind::timeout:
        if (!slot.waiting || slot.transaction != event.transaction)
            return data_action::Ignore{};
        slot.waiting = false;
        ++timed_out_;
        return think(event.slot, rng, now);
    }
    return data_action::Ignore{};
}

} // namespace wimaxsim
