#pragma once

#include <cstdint>
#include <variant>

#include "wimaxsim/engine.hpp"
#include "wimaxsim/qos_model.hpp"

namespace wimaxsim {

// Constant delay plus independent per-PDU Bernoulli loss.
struct LinkModel
{
    SimTime one_way_delay = SimTime::from_us(1000);
    double pdu_loss_prob = 0.005;
    std::uint32_t random_stream = 0;
};

struct Delivery
{
    SimTime deliver_at;
};

struct Lost
{
    SimTime lost_at;
};

using TransmitOutcome = std::variant<Delivery, Lost>;

// `now` is when the PDU finishes leaving the sender. One draw per call.
TransmitOutcome transmit(const MacPdu& pdu, const LinkModel& link, RandomStreams& rng, SimTime now);

} // namespace wimaxsim
