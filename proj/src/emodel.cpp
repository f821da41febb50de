#include "wimaxsim/emodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wimaxsim::emodel {

double compute_id(double d)
{
    if (!(d >= 0.0))
        throw std::invalid_argument("mouth-to-ear delay must be non-negative");
    const double excess = d > 177.3 ? d - 177.3 : 0.0;
    return 0.024 * d + 0.11 * excess;
}

double compute_ie(double e, const CodecImpairment& codec)
{
    if (!(e >= 0.0 && e <= 1.0))
        throw std::invalid_argument("loss fraction must be in [0, 1]");
    return codec.gamma1 + codec.gamma2 * std::log1p(codec.gamma3 * e);
}

double compute_r(double ie, double id)
{
    return 94.2 - ie - id;
}

double compute_r_full(double is, double ie, double id, double a)
{
    return 100.0 - is - ie - id + a;
}

double r_to_mos(double r)
{
    if (r <= 0.0)
        return 1.0;
    if (r >= 100.0)
        return 4.5;
    // The cubic dips below 1 for 0 < R < 6.5; holding it at 1 keeps MOS
    // non-decreasing in R.
    return std::max(1.0, 1.0 + 0.035 * r + 7e-6 * r * (r - 60.0) * (100.0 - r));
}

std::optional<VoiceQualityScore> score_window(const VoiceWindowStats& stats, const CodecImpairment& codec)
{
    if (stats.received_packets <= 0)
        return std::nullopt;
    VoiceQualityScore s;
    s.id_component = compute_id(stats.mean_mouth_to_ear_delay_ms);
    s.ie_component = compute_ie(stats.packet_loss_fraction, codec);
    s.r_value = compute_r(s.ie_component, s.id_component);
    s.mos = r_to_mos(s.r_value);
    return s;
}

} // namespace wimaxsim::emodel
