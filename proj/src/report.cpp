#include "wimaxsim/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <functional>
#include <tuple>
#include <algorithm>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace wimaxsim {

namespace {

std::string num(double v)
{
    if (v == 0.0)
        return "0";
    return fmt::format("{}", v);
}

std::string num(std::int64_t v)
{
    return fmt::format("{}", v);
}

bool is_voice(const FlowReport& f)
{
    return f.source == SourceKind::voice;
}

double mean_rate(Bytes bytes, SimTime span)
{
    return span.us > 0 ? static_cast<double>(bytes) * 8.0 / span.seconds() : 0.0;
}

// Mean absolute difference of consecutive delays, in ms.
double jitter_ms(const std::vector<std::int64_t>& delays)
{
    if (delays.size() < 2)
        return 0.0;
    long double sum = 0;
    for (std::size_t i = 1; i < delays.size(); ++i)
        sum += std::llabs(delays[i] - delays[i - 1]);
    return static_cast<double>(sum / (delays.size() - 1) / 1e3L);
}

struct ScoreStats
{
    int windows = 0;
    int no_data = 0;
    double mos_sum = 0, r_sum = 0, id_sum = 0, ie_sum = 0;
    double mos_min = 0, mos_max = 0, mos_final = 0;
};

ScoreStats score_stats(const std::vector<VoiceScoreRow>& rows)
{
    ScoreStats s;
    for (const auto& r : rows) {
        if (!r.score) {
            ++s.no_data;
            continue;
        }
        const auto& q = *r.score;
        if (s.windows == 0) {
            s.mos_min = s.mos_max = q.mos;
        }
        s.mos_min = std::min(s.mos_min, q.mos);
        s.mos_max = std::max(s.mos_max, q.mos);
        s.mos_final = q.mos;
        s.mos_sum += q.mos;
        s.r_sum += q.r_value;
        s.id_sum += q.id_component;
        s.ie_sum += q.ie_component;
        ++s.windows;
    }
    return s;
}

bool under_provisioned(const FlowReport& f, SimTime span)
{
    if (f.source == SourceKind::none)
        return false;
    if (f.scheduling_type != SchedulingType::UGS && f.scheduling_type != SchedulingType::ertPS)
        return false;
    return mean_rate(f.counters.offered, span) > 1.01 * static_cast<double>(f.reserved_rate_bps);
}

} // namespace

void write_metrics_csv(const RunReport& run, std::ostream& out)
{
    out << "time_s,entity,metric,value\n";
    for (const auto& cell : run.cells) {
        struct Row
        {
            std::int64_t t;
            std::size_t flow;
            int order;
            std::string metric;
            std::string value;
        };
        std::vector<Row> rows;
        for (std::size_t i = 0; i < cell.flows.size(); ++i) {
            const auto& f = cell.flows[i];
            auto add_series = [&](const MetricSeries& s, int order) {
                for (const auto& smp : s.samples)
                    rows.push_back(Row{smp.time.us, i, order, s.name, num(smp.value)});
            };
            add_series(f.meter.load_series(), 0);
            add_series(f.meter.throughput_series(), 1);
            add_series(f.meter.queue_series(), 2);
            add_series(f.meter.delay_series(), 3);
            for (const auto& sc : f.voice_scores) {
                const auto t = sc.time.us;
                if (!sc.score) {
                    rows.push_back(Row{t, i, 4, "no_data", "1"});
                    continue;
                }
                rows.push_back(Row{t, i, 4, "r_factor", num(sc.score->r_value)});
                rows.push_back(Row{t, i, 5, "mos", num(sc.score->mos)});
                rows.push_back(Row{t, i, 6, "id", num(sc.score->id_component)});
                rows.push_back(Row{t, i, 7, "ie", num(sc.score->ie_component)});
                rows.push_back(Row{t, i, 8, "mte_delay_ms", num(sc.stats.mean_mouth_to_ear_delay_ms)});
                rows.push_back(Row{t, i, 9, "loss_fraction", num(sc.stats.packet_loss_fraction)});
            }
        }
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            return std::tie(a.t, a.flow, a.order) < std::tie(b.t, b.flow, b.order);
        });
        for (const auto& r : rows)
            out << num(static_cast<double>(r.t) / 1e6) << ',' << cell.flows[r.flow].entity << ',' << r.metric << ','
                << r.value << '\n';
    }
}

void write_summary_csv(const RunReport& run, std::ostream& out)
{
    out << "entity,metric,value\n";
    auto row = [&](const std::string& e, const std::string& m, const std::string& v) {
        out << e << ',' << m << ',' << v << '\n';
    };
    row("run", "scenario", run.config.name);
    row("run", "duration_s", num(run.config.run.duration_s));
    row("run", "seed", fmt::format("{}", run.config.run.seed));
    row("run", "cells", num(static_cast<std::int64_t>(run.cells.size())));

    for (const auto& cell : run.cells) {
        const auto prefix = run.cells.size() > 1 ? fmt::format("cell{}.", cell.cell) : std::string();
        const auto span = cell.end;
        row(prefix + "cell", "seed", fmt::format("{}", cell.seed));
        row(prefix + "cell", "frames", num(cell.frames));
        row(prefix + "cell", "events", fmt::format("{}", cell.events));
        row(prefix + "cell", "audits_passed", num(cell.audits));
        row(prefix + "cell", "ugs_shed_grants", num(cell.ugs_shed_grants));

        for (const auto& f : cell.flows) {
            const auto& e = f.entity;
            const auto& c = f.counters;
            row(e, "scheduling_type", std::string(to_string(f.scheduling_type)));
            row(e, "source", std::string(to_string(f.source)));
            row(e, "offered_bytes", num(c.offered));
            row(e, "sent_bytes", num(c.sent));
            row(e, "dropped_bytes", num(c.dropped));
            row(e, "queued_bytes", num(f.queued_sdu_bytes));
            row(e, "delivered_bytes", num(f.delivered_bytes));
            row(e, "lost_bytes", num(f.lost_bytes));
            row(e, "delivered_pdus", num(f.delivered_pdus));
            row(e, "lost_pdus", num(f.lost_pdus));
            row(e, "granted_bytes", num(f.granted_bytes));
            row(e, "wasted_bytes", num(f.wasted_bytes));
            row(e, "mean_load_bps", num(mean_rate(c.offered, span)));
            row(e, "mean_throughput_bps", num(mean_rate(f.delivered_bytes, span)));
            if (f.delivered_pdus > 0) {
                row(e, "mean_delay_ms", num(f.meter.mean_delay_ms()));
                row(e, "p95_delay_ms", num(*f.meter.delay_percentile_ms(95.0)));
                row(e, "jitter_ms", num(jitter_ms(f.meter.delays_us())));
            }
            if (f.scheduling_type == SchedulingType::ertPS)
                row(e, "silent_frames", num(f.silent_frames));
            if (f.scheduling_type == SchedulingType::UGS || f.scheduling_type == SchedulingType::ertPS)
                row(e, "ugs_under_provisioned", under_provisioned(f, span) ? "1" : "0");
            if (is_voice(f)) {
                const auto s = score_stats(f.voice_scores);
                row(e, "score_windows", num(static_cast<std::int64_t>(s.windows)));
                row(e, "no_data_windows", num(static_cast<std::int64_t>(s.no_data)));
                if (s.windows > 0) {
                    row(e, "mos_mean", num(s.mos_sum / s.windows));
                    row(e, "mos_min", num(s.mos_min));
                    row(e, "mos_max", num(s.mos_max));
                    row(e, "mos_final", num(s.mos_final));
                    row(e, "r_mean", num(s.r_sum / s.windows));
                    row(e, "id_mean", num(s.id_sum / s.windows));
                    row(e, "ie_mean", num(s.ie_sum / s.windows));
                }
            }
        }
        for (const auto& cl : cell.clients) {
            const auto e = prefix + fmt::format("ss{}.app", cl.station);
            row(e, "transactions_completed", fmt::format("{}", cl.completed));
            row(e, "transactions_timed_out", fmt::format("{}", cl.timed_out));
            row(e, "late_responses", fmt::format("{}", cl.late_responses));
            row(e, "mean_response_ms", num(cl.mean_response_ms));
        }
        for (const auto& w : cell.warnings)
            row(prefix + "cell", "warning", fmt::format("\"{}\"", w));
    }

    const auto d = digest(run);
    row("voice", "mean_delay_ms", num(d.voice_mean_delay_ms));
    row("voice", "mos_mean", num(d.voice_mos_mean));
    row("voice", "ugs_under_provisioned", d.ugs_under_provisioned ? "1" : "0");
    row("be_uplink", "delivered_bytes", num(d.be_uplink_delivered_bytes));
    row("run", "status", "ok");
}

void write_frames_csv(const RunReport& run, std::ostream& out)
{
    out << "frame,direction,capacity_bytes,entity,kind,granted_bytes,used_bytes\n";
    for (const auto& cell : run.cells) {
        for (const auto& l : cell.frames_log) {
            const auto dir = to_string(l.direction);
            out << l.frame_index << ',' << dir << ',' << l.capacity_bytes << ",frame,total," << l.granted_total()
                << ',' << l.bytes_used << '\n';
            for (const auto& g : l.grants)
                out << l.frame_index << ',' << dir << ',' << l.capacity_bytes << ',' << cell.flows[g.flow_id].entity
                    << ',' << to_string(g.kind) << ',' << g.granted_bytes << ',' << g.used_bytes << '\n';
        }
    }
}

OutputPaths OutputPaths::in(const std::filesystem::path& dir)
{
    return OutputPaths{dir / "metrics.csv", dir / "summary.csv", dir / "frames.csv", dir / "config.yaml"};
}

void prepare_output_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
    const auto probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f)
            throw std::runtime_error(fmt::format("output directory {} is not writable", dir.string()));
    }
    std::filesystem::remove(probe, ec);
}

namespace {

void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& fn)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", p.string()));
    fn(out);
    if (!out)
        throw std::runtime_error(fmt::format("error writing {}", p.string()));
}

} // namespace

void write_run(const RunReport& run, const OutputPaths& paths, bool with_frames)
{
    write_file(paths.metrics, [&](std::ostream& o) { write_metrics_csv(run, o); });
    write_file(paths.summary, [&](std::ostream& o) { write_summary_csv(run, o); });
    write_file(paths.config, [&](std::ostream& o) { o << dump_config(run.config); });
    if (with_frames)
        write_file(paths.frames, [&](std::ostream& o) { write_frames_csv(run, o); });
}

RunDigest digest(const RunReport& run)
{
    RunDigest d;
    long double delay_sum = 0;
    std::int64_t delay_n = 0;
    double mos_sum = 0;
    int mos_n = 0;
    for (const auto& cell : run.cells) {
        for (const auto& f : cell.flows) {
            if (is_voice(f)) {
                for (auto v : f.meter.delays_us())
                    delay_sum += v;
                delay_n += static_cast<std::int64_t>(f.meter.delays_us().size());
                const auto s = score_stats(f.voice_scores);
                mos_sum += s.mos_sum;
                mos_n += s.windows;
                if (under_provisioned(f, cell.end))
                    d.ugs_under_provisioned = true;
            }
            if (f.direction == Direction::uplink && f.scheduling_type == SchedulingType::BE)
                d.be_uplink_delivered_bytes += f.delivered_bytes;
        }
    }
    if (delay_n > 0)
        d.voice_mean_delay_ms = static_cast<double>(delay_sum / delay_n / 1e3L);
    if (mos_n > 0)
        d.voice_mos_mean = mos_sum / mos_n;
    return d;
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
            continue;
        }
        if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_double(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        return std::nullopt;
    return v;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p, std::size_t columns)
{
    std::ifstream in(p);
    if (!in)
        throw std::runtime_error(fmt::format("cannot read {}", p.string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        auto f = split(line);
        if (f.size() != columns)
            throw std::runtime_error(fmt::format("{}: malformed row '{}'", p.string(), line));
        rows.push_back(std::move(f));
    }
    return rows;
}

} // namespace

Comparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b)
{
    Comparison cmp;
    const auto pa = OutputPaths::in(run_a);
    const auto pb = OutputPaths::in(run_b);

    using Key = std::tuple<double, std::string, std::string>;
    auto load = [](const std::filesystem::path& p) {
        std::map<Key, double> m;
        double horizon = 0.0;
        for (const auto& r : read_csv(p, 4)) {
            const auto t = parse_double(r[0]);
            const auto v = parse_double(r[3]);
            if (!t || !v)
                continue;
            m[Key{*t, r[1], r[2]}] = *v;
            horizon = std::max(horizon, *t);
        }
        return std::pair{m, horizon};
    };
    const auto [ma, ha] = load(pa.metrics);
    const auto [mb, hb] = load(pb.metrics);
    cmp.common_horizon_s = std::min(ha, hb);
    if (ha != hb)
        cmp.warnings.push_back(fmt::format("horizons differ ({} s vs {} s); truncated to {} s", ha, hb,
                                           cmp.common_horizon_s));

    for (const auto& [key, va] : ma) {
        const auto& [t, entity, metric] = key;
        if (t > cmp.common_horizon_s)
            continue;
        auto it = mb.find(key);
        if (it == mb.end())
            continue;
        cmp.series.push_back(ComparisonRow{t, entity, metric, va, it->second, it->second - va});
    }

    auto load_summary = [](const std::filesystem::path& p) {
        std::vector<std::pair<std::pair<std::string, std::string>, std::string>> rows;
        for (auto& r : read_csv(p, 3))
            rows.push_back({{r[0], r[1]}, r[2]});
        return rows;
    };
    const auto sa = load_summary(pa.summary);
    const auto sb = load_summary(pb.summary);
    std::map<std::pair<std::string, std::string>, std::string> b_index;
    for (const auto& [k, v] : sb)
        b_index.emplace(k, v);
    for (const auto& [k, va] : sa) {
        auto it = b_index.find(k);
        if (it == b_index.end() || k.second == "warning")
            continue;
        SummaryDelta d{k.first, k.second, va, it->second, std::nullopt};
        const auto na = parse_double(va);
        const auto nb = parse_double(it->second);
        if (na && nb)
            d.delta = *nb - *na;
        cmp.summary.push_back(std::move(d));
    }
    return cmp;
}

void write_comparison_csv(const Comparison& cmp, std::ostream& out)
{
    out << "time_s,entity,metric,value_a,value_b,delta\n";
    for (const auto& r : cmp.series)
        out << num(r.time_s) << ',' << r.entity << ',' << r.metric << ',' << num(r.a) << ',' << num(r.b) << ','
            << num(r.delta) << '\n';
}

void write_comparison_summary(const Comparison& cmp, std::ostream& out)
{
    out << "entity,metric,value_a,value_b,delta\n";
    for (const auto& r : cmp.summary)
        out << r.entity << ',' << r.metric << ',' << r.a << ',' << r.b << ',' << (r.delta ? num(*r.delta) : "")
            << '\n';
}

} // namespace wimaxsim
