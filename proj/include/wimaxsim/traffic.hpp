#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "wimaxsim/engine.hpp"
#include "wimaxsim/qos_model.hpp"

namespace wimaxsim {

struct VoiceSourceConfig
{
    std::int64_t codec_rate_bps = 64'000;
    SimTime packetization = SimTime::from_us(10'000);
    // Transport + network headers (RTP/UDP/IP) added to every codec frame.
    Bytes header_overhead_bytes = 40;
    SimTime talk_spurt_mean = SimTime::from_ms(1000);
    SimTime silence_mean = SimTime::from_ms(1350);
    bool silence_suppression = false;

    // codec_rate * packetization / 8 + header_overhead. Throws on a
    // packetization that does not yield whole codec bytes.
    Bytes packet_bytes() const;
    double offered_rate_bps() const;
};

enum class TalkPhase : std::uint8_t { talking, silent };

struct TalkState
{
    TalkPhase phase = TalkPhase::talking;
    SimTime entered_at;
};

struct TalkTransition
{
    TalkState state;
    // Time of the following transition; nullopt when the source never leaves
    // the new state.
    std::optional<SimTime> next_transition;
};

// Draws the holding time of the state being entered from the source's stream.
TalkTransition talk_state_transition(const TalkState& state, const VoiceSourceConfig& cfg, RandomStreams& rng,
                                     std::uint32_t stream_id, SimTime now);

// PCM voice source with optional talk-spurt on/off behaviour.
class VoiceSource
{
public:
    VoiceSource(VoiceSourceConfig cfg, FlowId flow, Bytes mac_header_bytes, std::uint32_t stream_id);

    const VoiceSourceConfig& config() const { return cfg_; }
    FlowId flow() const { return flow_; }
    std::uint32_t stream_id() const { return stream_; }
    const TalkState& talk_state() const { return state_; }

    // Initial state at `now`. Returns the first transition time, if any.
    std::optional<SimTime> start(RandomStreams& rng, SimTime now);
    std::optional<SimTime> toggle(RandomStreams& rng, SimTime now);

    // One packetization tick.
    std::optional<MacPdu> voice_emit_packet(SimTime now);

    std::uint64_t packets_emitted() const { return seq_; }

private:
    VoiceSourceConfig cfg_;
    FlowId flow_;
    Bytes header_;
    std::uint32_t stream_;
    TalkState state_;
    std::uint64_t seq_ = 0;
};

struct DataSourceConfig
{
    Bytes request_bytes = 500;
    Bytes response_bytes = 2000;
    SimTime think_time_mean = SimTime::from_ms(1000);
    int concurrency = 1;
    // Requests without a response by then are abandoned; the PDU itself
    // stays wherever it is.
    SimTime request_timeout = SimTime::from_ms(2000);
};

namespace data_action {
struct SendRequest
{
    int slot = 0;
    std::uint64_t transaction = 0;
    SimTime timeout_at;
};
struct Think
{
    int slot = 0;
    SimTime until;
};
struct Ignore
{
};
} // namespace data_action

using DataAction = std::variant<data_action::SendRequest, data_action::Think, data_action::Ignore>;

enum class DataEventKind : std::uint8_t { start, think_done, response, timeout };

struct DataEvent
{
    DataEventKind kind = DataEventKind::start;
    int slot = 0;
    std::uint64_t transaction = 0;
};

// Closed-loop request/response client. Each of `concurrency` slots cycles
// think -> request -> (response | timeout) -> think.
class DataClient
{
public:
    DataClient(DataSourceConfig cfg, std::uint32_t stream_id);

    const DataSourceConfig& config() const { return cfg_; }
    std::uint32_t stream_id() const { return stream_; }

    DataAction data_transaction_step(const DataEvent& event, RandomStreams& rng, SimTime now);

    int outstanding() const;
    std::uint64_t completed() const { return completed_; }
    std::uint64_t timed_out() const { return timed_out_; }
    std::uint64_t late_responses() const { return late_; }
    SimTime total_response_time() const { return response_time_; }

private:
    struct Slot
    {
        bool waiting = false;
        std::uint64_t transaction = 0;
        SimTime sent_at;
    };

    data_action::Think think(int slot, RandomStreams& rng, SimTime now);

    DataSourceConfig cfg_;
    std::uint32_t stream_;
    std::vector<Slot> slots_;
    std::uint64_t next_transaction_ = 1;
    std::uint64_t completed_ = 0;
    std::uint64_t timed_out_ = 0;
    std::uint64_t late_ = 0;
    SimTime response_time_;
};

} // namespace wimaxsim
