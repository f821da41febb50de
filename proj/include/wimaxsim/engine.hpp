#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wimaxsim {

// Simulation time in integer microseconds.
struct SimTime
{
    std::int64_t us = 0;

    static constexpr SimTime from_us(std::int64_t v) { return SimTime{v}; }
    static constexpr SimTime from_ms(std::int64_t v) { return SimTime{v * 1000}; }
    static constexpr SimTime from_s(std::int64_t v) { return SimTime{v * 1'000'000}; }

    constexpr double seconds() const { return static_cast<double>(us) / 1e6; }
    constexpr double millis() const { return static_cast<double>(us) / 1e3; }

    friend constexpr auto operator<=>(SimTime, SimTime) = default;
    friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us + b.us}; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us - b.us}; }
};

class SimulationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// What an event does is up to the owner; the engine only orders them.
struct EventPayload
{
    std::uint32_t kind = 0;
    std::uint32_t target = 0;
    std::uint64_t aux = 0;

    friend bool operator==(const EventPayload&, const EventPayload&) = default;
};

struct Event
{
    SimTime fire_time;
    std::uint64_t sequence = 0;
    EventPayload payload;
};

using EventHandle = std::uint64_t;

// Single-threaded event queue. Events fire in (time, insertion sequence) order.
class EventQueue
{
public:
    using Handler = std::function<void(const Event&)>;

    SimTime now() const { return now_; }
    std::size_t pending() const { return heap_.size(); }
    std::uint64_t processed() const { return processed_; }

    // Throws SimulationError if `time` is earlier than now().
    EventHandle schedule(SimTime time, EventPayload payload);

    // Processes every event with fire_time <= end. Returns the time of the
    // last processed event (or now() if nothing fired).
    SimTime run_until(SimTime end, const Handler& handler);

    // Stops run_until after the current event.
    void halt() { halted_ = true; }

private:
    struct Later
    {
        bool operator()(const Event& a, const Event& b) const
        {
            if (a.fire_time != b.fire_time)
                return a.fire_time > b.fire_time;
            return a.sequence > b.sequence;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    SimTime now_{};
    std::uint64_t next_sequence_ = 0;
    std::uint64_t processed_ = 0;
    bool halted_ = false;
};

// Frame k starts at exactly k * frame_duration.
class FrameClock
{
public:
    explicit FrameClock(SimTime frame_duration);

    SimTime frame_duration() const { return duration_; }
    SimTime frame_start(std::int64_t frame_index) const { return SimTime{frame_index * duration_.us}; }
    std::int64_t frame_at(SimTime t) const { return t.us / duration_.us; }

private:
    SimTime duration_;
};

// Named, independently seeded uniform streams. Each stream is its own
// generator seeded from (seed, stream id), so adding a stream never shifts
// the draws of another.
class RandomStreams
{
public:
    explicit RandomStreams(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    void register_stream(std::uint32_t stream_id);
    bool has_stream(std::uint32_t stream_id) const { return streams_.contains(stream_id); }

    // Uniform in [0, 1). Throws SimulationError for unregistered streams.
    double next_random(std::uint32_t stream_id);

    // Exponential with the given mean (mean <= 0 returns 0).
    double next_exponential(std::uint32_t stream_id, double mean);

private:
    std::uint64_t seed_;
    std::map<std::uint32_t, std::mt19937_64> streams_;
};

} // namespace wimaxsim
