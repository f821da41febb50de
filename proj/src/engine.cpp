#include "wimaxsim/engine.hpp"

#include <cmath>

#include <fmt/format.h>

namespace wimaxsim {

EventHandle EventQueue::schedule(SimTime time, EventPayload payload)
{
    if (time < now_)
        throw SimulationError(fmt::format("event kind {} scheduled at {} us, before current time {} us",
                                          payload.kind, time.us, now_.us));
    const auto seq = next_sequence_++;
    heap_.push(Event{time, seq, payload});
    return seq;
}

SimTime EventQueue::run_until(SimTime end, const Handler& handler)
{
    halted_ = false;
    SimTime last = now_;
    while (!heap_.empty() && !halted_) {
        if (heap_.top().fire_time > end)
            break;
        Event ev = heap_.top();
        heap_.pop();
        now_ = ev.fire_time;
        last = now_;
        ++processed_;
        handler(ev);
    }
    return last;
}

FrameClock::FrameClock(SimTime frame_duration) : duration_(frame_duration)
{
    if (frame_duration.us <= 0)
        throw SimulationError("frame duration must be positive");
}

void RandomStreams::register_stream(std::uint32_t stream_id)
{
    if (streams_.contains(stream_id))
        throw SimulationError(fmt::format("random stream {} registered twice", stream_id));
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32), stream_id,
                      0x5749u};
    streams_.emplace(stream_id, std::mt19937_64(seq));
}

double RandomStreams::next_random(std::uint32_t stream_id)
{
    auto it = streams_.find(stream_id);
    if (it == streams_.end())
        throw SimulationError(fmt::format("random stream {} is not registered", stream_id));
    // 53 high bits -> [0, 1); std::uniform_real_distribution is not portable.
    return static_cast<double>(it->second() >> 11) * 0x1.0p-53;
}

double RandomStreams::next_exponential(std::uint32_t stream_id, double mean)
{
    const double u = next_random(stream_id);
    if (mean <= 0.0)
        return 0.0;
    return -mean * std::log1p(-u);
}

} // namespace wimaxsim
