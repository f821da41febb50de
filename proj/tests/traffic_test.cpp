#include <gtest/gtest.h>

#include <variant>

#include "wimaxsim/traffic.hpp"

using namespace wimaxsim;

TEST(VoiceSource, DefaultsOfferNinetySixKbps)
{
    VoiceSourceConfig cfg;
    EXPECT_EQ(cfg.packet_bytes(), 120);
    EXPECT_DOUBLE_EQ(cfg.offered_rate_bps(), 96'000.0);
}

TEST(VoiceSource, SuppressionControlsSilentEmission)
{
    RandomStreams rng(1);
    rng.register_stream(0);
    VoiceSourceConfig cfg;
    cfg.silence_suppression = true;
    VoiceSource quiet(cfg, 4, 6, 0);
    quiet.start(rng, {});
    while (quiet.talk_state().phase != TalkPhase::silent)
        quiet.toggle(rng, {});
    EXPECT_FALSE(quiet.voice_emit_packet(SimTime::from_ms(10)));

    cfg.silence_suppression = false;
    VoiceSource cbr(cfg, 4, 6, 0);
    cbr.start(rng, {});
    while (cbr.talk_state().phase != TalkPhase::silent)
        cbr.toggle(rng, {});
    auto p = cbr.voice_emit_packet(SimTime::from_ms(10));
    ASSERT_TRUE(p);
    EXPECT_EQ(p->payload_bytes, 120);
    EXPECT_EQ(p->mac_header_bytes, 6);
    EXPECT_EQ(p->flow_id, 4u);
}

TEST(TalkSpurt, LongRunTalkingFraction)
{
    RandomStreams rng(11);
    rng.register_stream(5);
    VoiceSourceConfig cfg;
    TalkState st{TalkPhase::silent, {}};
    SimTime now{};
    std::int64_t talking_us = 0;
    for (int cycles = 0; cycles < 20'000; ++cycles) {
        auto tr = talk_state_transition(st, cfg, rng, 5, now);
        ASSERT_TRUE(tr.next_transition);
        if (tr.state.phase == TalkPhase::talking)
            talking_us += (*tr.next_transition - now).us;
        st = tr.state;
        now = *tr.next_transition;
    }
    const double fraction = static_cast<double>(talking_us) / static_cast<double>(now.us);
    EXPECT_NEAR(fraction, 1.0 / 2.35, 0.01);
}

TEST(TalkSpurt, ZeroSilenceMeansAlwaysTalking)
{
    RandomStreams rng(1);
    rng.register_stream(0);
    VoiceSourceConfig cfg;
    cfg.silence_mean = SimTime{};
    VoiceSource src(cfg, 0, 6, 0);
    EXPECT_FALSE(src.start(rng, {}));
    EXPECT_EQ(src.talk_state().phase, TalkPhase::talking);
}

TEST(TalkSpurt, SameSeedSameTrace)
{
    auto trace = [](std::uint64_t seed) {
        RandomStreams rng(seed);
        rng.register_stream(0);
        VoiceSource src(VoiceSourceConfig{}, 0, 6, 0);
        std::vector<std::int64_t> t;
        auto next = src.start(rng, {});
        for (int i = 0; i < 50 && next; ++i) {
            t.push_back(next->us);
            next = src.toggle(rng, *next);
        }
        return t;
    };
    EXPECT_EQ(trace(3), trace(3));
    EXPECT_NE(trace(3), trace(4));
}

TEST(DataClient, ClosedLoopCycle)
{
    RandomStreams rng(2);
    rng.register_stream(0);
    DataClient c(DataSourceConfig{}, 0);
    auto a = c.data_transaction_step({DataEventKind::start, 0, 0}, rng, {});
    ASSERT_TRUE(std::holds_alternative<data_action::Think>(a));
    const auto until = std::get<data_action::Think>(a).until;
    auto b = c.data_transaction_step({DataEventKind::think_done, 0, 0}, rng, until);
    ASSERT_TRUE(std::holds_alternative<data_action::SendRequest>(b));
    const auto req = std::get<data_action::SendRequest>(b);
    EXPECT_EQ(req.timeout_at, until + SimTime::from_ms(2000));
    EXPECT_EQ(c.outstanding(), 1);

    // Never more than `concurrency` outstanding requests.
    auto dup = c.data_transaction_step({DataEventKind::think_done, 0, 0}, rng, until);
    EXPECT_TRUE(std::holds_alternative<data_action::Ignore>(dup));
    EXPECT_EQ(c.outstanding(), 1);

    auto done = c.data_transaction_step({DataEventKind::response, 0, req.transaction}, rng,
                                        until + SimTime::from_ms(50));
    EXPECT_TRUE(std::holds_alternative<data_action::Think>(done));
    EXPECT_EQ(c.completed(), 1u);
    EXPECT_EQ(c.outstanding(), 0);
    EXPECT_EQ(c.total_response_time(), SimTime::from_ms(50));
}

TEST(DataClient, TimeoutAbandonsAndLateResponseIsIgnored)
{
    RandomStreams rng(2);
    rng.register_stream(0);
    DataClient c(DataSourceConfig{}, 0);
    c.data_transaction_step({DataEventKind::start, 0, 0}, rng, {});
    auto b = c.data_transaction_step({DataEventKind::think_done, 0, 0}, rng, SimTime::from_s(1));
    const auto req = std::get<data_action::SendRequest>(b);
    auto t = c.data_transaction_step({DataEventKind::timeout, 0, req.transaction}, rng, req.timeout_at);
    EXPECT_TRUE(std::holds_alternative<data_action::Think>(t));
    EXPECT_EQ(c.timed_out(), 1u);
    auto late = c.data_transaction_step({DataEventKind::response, 0, req.transaction}, rng,
                                        req.timeout_at + SimTime::from_ms(1));
    EXPECT_TRUE(std::holds_alternative<data_action::Ignore>(late));
    EXPECT_EQ(c.late_responses(), 1u);
    EXPECT_EQ(c.completed(), 0u);
}

// Zero think time: a transaction starts the moment the previous one ends.
TEST(DataClient, ZeroThinkIsRoundTripLimited)
{
    RandomStreams rng(2);
    rng.register_stream(0);
    DataSourceConfig cfg;
    cfg.think_time_mean = SimTime{};
    DataClient c(cfg, 0);
    SimTime now{};
    auto a = c.data_transaction_step({DataEventKind::start, 0, 0}, rng, now);
    const SimTime rtt = SimTime::from_ms(20);
    for (int i = 0; i < 100; ++i) {
        if (auto* th = std::get_if<data_action::Think>(&a)) {
            EXPECT_EQ(th->until, now);
            a = c.data_transaction_step({DataEventKind::think_done, th->slot, 0}, rng, now);
        }
        const auto req = std::get<data_action::SendRequest>(a);
        now = now + rtt;
        a = c.data_transaction_step({DataEventKind::response, req.slot, req.transaction}, rng, now);
    }
    EXPECT_EQ(c.completed(), 100u);
    EXPECT_EQ(now, SimTime::from_ms(2000));
}
