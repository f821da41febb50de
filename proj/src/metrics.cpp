#include "wimaxsim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace wimaxsim {

void MetricSeries::add(SimTime t, double value)
{
    if (!samples.empty() && t <= samples.back().time)
        throw SimulationError(fmt::format("series '{}': sample at {} us not after {} us", name, t.us,
                                          samples.back().time.us));
    samples.push_back(MetricSample{t, value});
}

FlowMeter::FlowMeter(SimTime interval) : interval_(interval)
{
    if (interval.us <= 0)
        throw SimulationError("metric interval must be positive");
}

FlowMeter::Bucket& FlowMeter::bucket_at(SimTime t)
{
    const auto i = index(t);
    if (i >= buckets_.size())
        buckets_.resize(i + 1);
    return buckets_[i];
}

void FlowMeter::record_load(Bytes sdu_bytes, SimTime now)
{
    bucket_at(now).load_bytes += sdu_bytes;
}

void FlowMeter::record_throughput(Bytes sdu_bytes, SimTime now)
{
    bucket_at(now).throughput_bytes += sdu_bytes;
}

void FlowMeter::record_delay(const DelaySample& sample)
{
    auto& b = bucket_at(sample.delivered_at);
    const auto d = sample.end_to_end().us;
    b.delay_sum_us += d;
    ++b.delivered;
    delays_.push_back(d);
}

void FlowMeter::record_loss(SimTime now, std::int64_t count)
{
    bucket_at(now).lost += count;
}

void FlowMeter::record_queue(Bytes depth, SimTime now)
{
    // Buckets that ended before this change saw the previous depth.
    const auto i = index(now);
    if (i > closed_) {
        if (i > buckets_.size())
            buckets_.resize(i);
        for (std::size_t k = closed_; k < i; ++k)
            buckets_[k].queue_end = last_depth_;
        closed_ = i;
    }
    bucket_at(now);
    last_depth_ = depth;
}

void FlowMeter::finish(SimTime end)
{
    const auto n = static_cast<std::size_t>(end.us / interval_.us);
    if (buckets_.size() < n)
        buckets_.resize(n);
    if (buckets_.size() > n)
        buckets_.resize(n);
    for (std::size_t k = closed_; k < n; ++k)
        buckets_[k].queue_end = last_depth_;
    closed_ = std::max(closed_, n);
}

namespace {

SimTime bucket_end(std::size_t i, SimTime interval)
{
    return SimTime{static_cast<std::int64_t>(i + 1) * interval.us};
}

} // namespace

MetricSeries FlowMeter::load_series() const
{
    MetricSeries s{"load_bps", "bit/s", {}};
    for (std::size_t i = 0; i < buckets_.size(); ++i)
        s.add(bucket_end(i, interval_), static_cast<double>(buckets_[i].load_bytes) * 8.0 / interval_.seconds());
    return s;
}

MetricSeries FlowMeter::throughput_series() const
{
    MetricSeries s{"throughput_bps", "bit/s", {}};
    for (std::size_t i = 0; i < buckets_.size(); ++i)
        s.add(bucket_end(i, interval_),
              static_cast<double>(buckets_[i].throughput_bytes) * 8.0 / interval_.seconds());
    return s;
}

MetricSeries FlowMeter::queue_series() const
{
    MetricSeries s{"queue_bytes", "byte", {}};
    for (std::size_t i = 0; i < buckets_.size(); ++i)
        s.add(bucket_end(i, interval_), static_cast<double>(buckets_[i].queue_end));
    return s;
}

MetricSeries FlowMeter::delay_series() const
{
    MetricSeries s{"delay_ms", "ms", {}};
    for (std::size_t i = 0; i < buckets_.size(); ++i) {
        const auto& b = buckets_[i];
        if (b.delivered > 0)
            s.add(bucket_end(i, interval_), static_cast<double>(b.delay_sum_us) / b.delivered / 1e3);
    }
    return s;
}

double FlowMeter::mean_delay_ms() const
{
    if (delays_.empty())
        return 0.0;
    long double sum = 0;
    for (auto d : delays_)
        sum += d;
    return static_cast<double>(sum / delays_.size() / 1e3L);
}

std::optional<double> FlowMeter::delay_percentile_ms(double pct) const
{
    if (delays_.empty())
        return std::nullopt;
    auto sorted = delays_;
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return static_cast<double>(sorted[rank - 1]) / 1e3;
}

AuditResult audit_conservation(const ServiceFlow& flow)
{
    const Bytes delta = flow.conservation_delta();
    return AuditResult{delta == 0, delta};
}

std::vector<VoiceScoreRow> score_voice_windows(const FlowMeter& meter, SimTime window, SimTime stride, SimTime end,
                                               const emodel::CodecImpairment& codec)
{
    const auto iv = meter.interval().us;
    if (window.us <= 0 || stride.us <= 0 || window.us % iv != 0 || stride.us % iv != 0)
        throw SimulationError("voice window and stride must be positive multiples of the report interval");

    const auto& buckets = meter.buckets();
    const auto per_window = static_cast<std::size_t>(window.us / iv);
    std::vector<VoiceScoreRow> rows;
    for (SimTime t = window; t <= end; t = t + stride) {
        const auto last = static_cast<std::size_t>(t.us / iv);  // exclusive
        std::int64_t delay_sum = 0;
        std::int64_t delivered = 0;
        std::int64_t lost = 0;
        for (std::size_t k = last - per_window; k < last && k < buckets.size(); ++k) {
            delay_sum += buckets[k].delay_sum_us;
            delivered += buckets[k].delivered;
            lost += buckets[k].lost;
        }
        VoiceScoreRow row;
        row.time = t;
        row.stats.window_start = t - window;
        row.stats.window_end = t;
        row.stats.received_packets = delivered;
        if (delivered > 0)
            row.stats.mean_mouth_to_ear_delay_ms = static_cast<double>(delay_sum) / delivered / 1e3;
        if (delivered + lost > 0)
            row.stats.packet_loss_fraction = static_cast<double>(lost) / static_cast<double>(delivered + lost);
        row.score = emodel::score_window(row.stats, codec);
        rows.push_back(row);
    }
    return rows;
}

} // namespace wimaxsim
