#include <gtest/gtest.h>

#include <vector>

#include "wimaxsim/engine.hpp"

using namespace wimaxsim;

namespace {

std::vector<std::uint32_t> drain(EventQueue& q, SimTime end)
{
    std::vector<std::uint32_t> order;
    q.run_until(end, [&](const Event& e) { order.push_back(e.payload.target); });
    return order;
}

} // namespace

TEST(EventQueue, FrameStartAtZeroFiresFirst)
{
    EventQueue q;
    q.schedule(SimTime::from_us(10), {0, 2});
    q.schedule(SimTime::from_us(0), {0, 1});
    EXPECT_EQ(drain(q, SimTime::from_s(1)), (std::vector<std::uint32_t>{1, 2}));
}

TEST(EventQueue, EqualTimesKeepInsertionOrder)
{
    EventQueue q;
    q.schedule(SimTime::from_us(5000), {0, 'A'});
    q.schedule(SimTime::from_us(5000), {0, 'B'});
    q.schedule(SimTime::from_us(4000), {0, 'C'});
    EXPECT_EQ(drain(q, SimTime::from_s(1)), (std::vector<std::uint32_t>{'C', 'A', 'B'}));
}

TEST(EventQueue, EmptyQueueReturnsWithoutEvents)
{
    EventQueue q;
    EXPECT_EQ(q.run_until(SimTime::from_us(1'000'000), [](const Event&) { FAIL(); }).us, 0);
    EXPECT_EQ(q.processed(), 0u);
}

TEST(EventQueue, EndBoundaryIsInclusive)
{
    EventQueue q;
    for (int t = 1; t <= 3; ++t)
        q.schedule(SimTime::from_us(t), {0, static_cast<std::uint32_t>(t)});
    EXPECT_EQ(drain(q, SimTime::from_us(2)).size(), 2u);
    EXPECT_EQ(q.pending(), 1u);
    EXPECT_EQ(q.now().us, 2);
}

TEST(EventQueue, HaltsAtFourHundredSeconds)
{
    EventQueue q;
    const auto end = SimTime::from_us(400'000'000);
    q.schedule(SimTime::from_s(399), {0, 1});
    q.schedule(end, {0, 2});
    q.schedule(SimTime::from_s(401), {0, 3});
    EXPECT_EQ(drain(q, end), (std::vector<std::uint32_t>{1, 2}));
    EXPECT_EQ(q.now(), end);
}

TEST(EventQueue, SchedulingInThePastThrows)
{
    EventQueue q;
    q.schedule(SimTime::from_us(100), {});
    q.run_until(SimTime::from_us(100), [](const Event&) {});
    EXPECT_THROW(q.schedule(SimTime::from_us(99), {}), SimulationError);
}

TEST(EventQueue, HandlerMayScheduleAndHalt)
{
    EventQueue q;
    q.schedule(SimTime::from_us(0), {0, 0});
    std::vector<std::uint32_t> seen;
    q.run_until(SimTime::from_s(1), [&](const Event& e) {
        seen.push_back(e.payload.target);
        if (e.payload.target < 5)
            q.schedule(e.fire_time + SimTime::from_us(10), {0, e.payload.target + 1});
        if (e.payload.target == 3)
            q.halt();
    });
    EXPECT_EQ(seen, (std::vector<std::uint32_t>{0, 1, 2, 3}));
}

TEST(FrameClock, FrameBoundaries)
{
    FrameClock clock(SimTime::from_us(5000));
    EXPECT_EQ(clock.frame_start(80'000).us, 400'000'000);
    EXPECT_EQ(clock.frame_at(SimTime::from_us(4999)), 0);
    EXPECT_EQ(clock.frame_at(SimTime::from_us(5000)), 1);
}

TEST(RandomStreams, SameSeedSameStreamSameValue)
{
    RandomStreams a(42), b(42);
    a.register_stream(7);
    b.register_stream(7);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(a.next_random(7), b.next_random(7));
}

TEST(RandomStreams, DifferentStreamsDiffer)
{
    RandomStreams r(42);
    r.register_stream(1);
    r.register_stream(2);
    int equal = 0;
    for (int i = 0; i < 1000; ++i)
        equal += r.next_random(1) == r.next_random(2);
    EXPECT_EQ(equal, 0);
}

TEST(RandomStreams, StreamsAreIsolatedFromEachOther)
{
    RandomStreams a(9), b(9);
    a.register_stream(1);
    b.register_stream(1);
    b.register_stream(2);
    for (int i = 0; i < 50; ++i) {
        (void)b.next_random(2);
        EXPECT_EQ(a.next_random(1), b.next_random(1));
    }
}

TEST(RandomStreams, UniformMeanMonteCarlo)
{
    RandomStreams r(1);
    r.register_stream(3);
    double sum = 0.0;
    for (int i = 0; i < 100'000; ++i) {
        const double u = r.next_random(3);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    const double mean = sum / 100'000;
    EXPECT_GE(mean, 0.49);
    EXPECT_LE(mean, 0.51);
}

TEST(RandomStreams, ExponentialMean)
{
    RandomStreams r(5);
    r.register_stream(0);
    double sum = 0.0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i)
        sum += r.next_exponential(0, 2.5);
    EXPECT_NEAR(sum / n, 2.5, 0.03);
    EXPECT_EQ(r.next_exponential(0, 0.0), 0.0);
}

TEST(RandomStreams, ErrorsOnMisuse)
{
    RandomStreams r(1);
    EXPECT_THROW(r.next_random(4), SimulationError);
    r.register_stream(4);
    EXPECT_THROW(r.register_stream(4), SimulationError);
    EXPECT_TRUE(r.has_stream(4));
}
