#include "wimaxsim/channel.hpp"

namespace wimaxsim {

TransmitOutcome transmit(const MacPdu& /*pdu*/, const LinkModel& link, RandomStreams& rng, SimTime now)
{
    const double u = rng.next_random(link.random_stream);
    if (u < link.pdu_loss_prob)
        return Lost{now + link.one_way_delay};
    return Delivery{now + link.one_way_delay};
}

} // namespace wimaxsim
