#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wimaxsim/emodel.hpp"
#include "wimaxsim/engine.hpp"
#include "wimaxsim/qos_model.hpp"

namespace wimaxsim {

struct MetricSample
{
    SimTime time;
    double value = 0.0;
};

struct MetricSeries
{
    std::string name;
    std::string unit;
    std::vector<MetricSample> samples;

    // Sample times must be strictly increasing.
    void add(SimTime t, double value);
};

struct DelaySample
{
    SimTime created_at;
    SimTime delivered_at;

    SimTime end_to_end() const { return delivered_at - created_at; }
};

// Per-flow measurement buckets of one reporting interval each. Bucket b
// covers [b*interval, (b+1)*interval); its series sample is stamped at the
// bucket end.
class FlowMeter
{
public:
    struct Bucket
    {
        Bytes load_bytes = 0;
        Bytes throughput_bytes = 0;
        std::int64_t delay_sum_us = 0;
        std::int64_t delivered = 0;
        std::int64_t lost = 0;
        // Queue depth (SDU bytes) at the bucket end.
        Bytes queue_end = 0;
    };

    explicit FlowMeter(SimTime interval);

    SimTime interval() const { return interval_; }

    void record_load(Bytes sdu_bytes, SimTime now);
    void record_throughput(Bytes sdu_bytes, SimTime now);
    void record_delay(const DelaySample& sample);
    void record_loss(SimTime now, std::int64_t count = 1);
    // Call after every queue change with the new depth.
    void record_queue(Bytes depth, SimTime now);
    // Closes every bucket that ends at or before `end`.
    void finish(SimTime end);

    const std::vector<Bucket>& buckets() const { return buckets_; }
    const std::vector<std::int64_t>& delays_us() const { return delays_; }

    MetricSeries load_series() const;
    MetricSeries throughput_series() const;
    MetricSeries queue_series() const;
    // Windows without deliveries are skipped.
    MetricSeries delay_series() const;

    double mean_delay_ms() const;
    // Nearest-rank percentile over all delay samples; nullopt if none.
    std::optional<double> delay_percentile_ms(double pct) const;

private:
    Bucket& bucket_at(SimTime t);
    std::size_t index(SimTime t) const { return static_cast<std::size_t>(t.us / interval_.us); }

    SimTime interval_;
    std::vector<Bucket> buckets_;
    std::vector<std::int64_t> delays_;
    Bytes last_depth_ = 0;
    std::size_t closed_ = 0;  // buckets whose queue_end is final
};

struct AuditResult
{
    bool pass = true;
    Bytes delta = 0;
};

// offered == sent + dropped + queued, exact to the byte.
AuditResult audit_conservation(const ServiceFlow& flow);

struct VoiceScoreRow
{
    SimTime time;  // window end
    emodel::VoiceWindowStats stats;
    std::optional<emodel::VoiceQualityScore> score;
};

// Sliding windows over a flow's buckets: windows end at window, window+stride, ...
// up to `end`. window and stride must be multiples of the meter interval.
std::vector<VoiceScoreRow> score_voice_windows(const FlowMeter& meter, SimTime window, SimTime stride, SimTime end,
                                               const emodel::CodecImpairment& codec = emodel::kG711);

} // namespace wimaxsim
