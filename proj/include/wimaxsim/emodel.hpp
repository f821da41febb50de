#pragma once

#include <optional>

#include "wimaxsim/engine.hpp"

namespace wimaxsim::emodel {

// Equipment impairment parameters Ie = g1 + g2 * ln(1 + g3 * e).
struct CodecImpairment
{
    double gamma1 = 0.0;
    double gamma2 = 30.0;
    double gamma3 = 15.0;
};

inline constexpr CodecImpairment kG711{0.0, 30.0, 15.0};

// Default signal-to-noise impairment and expectation factor; chosen so that
// 100 - Is + A = 94.2.
inline constexpr double kDefaultIs = 5.8;
inline constexpr double kDefaultA = 0.0;

// Delay impairment, d in milliseconds. Throws std::invalid_argument for d < 0.
double compute_id(double mouth_to_ear_delay_ms);

// Throws std::invalid_argument unless 0 <= loss_fraction <= 1.
double compute_ie(double loss_fraction, const CodecImpairment& codec = kG711);

// Reduced form: 94.2 - Ie - Id.
double compute_r(double ie, double id);

double compute_r_full(double is, double ie, double id, double a);

// 1 for r <= 0, 4.5 for r >= 100, cubic in between.
double r_to_mos(double r);

struct VoiceWindowStats
{
    SimTime window_start;
    SimTime window_end;
    double mean_mouth_to_ear_delay_ms = 0.0;
    double packet_loss_fraction = 0.0;
    long received_packets = 0;
};

struct VoiceQualityScore
{
    double r_value = 0.0;
    double mos = 1.0;
    double id_component = 0.0;
    double ie_component = 0.0;
};

// nullopt when the window received nothing.
std::optional<VoiceQualityScore> score_window(const VoiceWindowStats& stats,
                                              const CodecImpairment& codec = kG711);

} // namespace wimaxsim::emodel
