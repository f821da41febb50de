// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "golden_cases.hpp"
#include "wimaxsim/emodel.hpp"
#include "wimaxsim/report.hpp"
#include "wimaxsim/simulation.hpp"

using namespace wimaxsim;

namespace {

constexpr std::int64_t kWarmupS = 20;

struct Verdict
{
    bool pass = false;
    std::string detail;
};

ScenarioConfig preset(std::string_view name)
{
    auto r = load_preset(name);
    if (!r.ok())
        throw std::runtime_error("preset " + std::string(name) + " failed to load");
    return *r.config;
}

// Full-length preset runs are shared between criteria.
struct Runs
{
    std::map<std::string, RunReport> by_name;
    std::map<std::string, double> seconds;

    const RunReport& get(const std::string& name)
    {
        auto it = by_name.find(name);
        if (it != by_name.end())
            return it->second;
        const auto t0 = std::chrono::steady_clock::now();
        auto run = run_scenario(preset(name));
        seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return by_name.emplace(name, std::move(run)).first->second;
    }
};

std::vector<const FlowReport*> select(const RunReport& run, const std::function<bool(const FlowReport&)>& pred)
{
    std::vector<const FlowReport*> out;
    for (const auto& cell : run.cells)
        for (const auto& f : cell.flows)
            if (pred(f))
                out.push_back(&f);
    return out;
}

bool is_voice(const FlowReport& f)
{
    return f.source == SourceKind::voice;
}

bool is_ul_be(const FlowReport& f)
{
    return f.direction == Direction::uplink && f.scheduling_type == SchedulingType::BE;
}

// Aggregate throughput (bps) and end-of-window queue (SDU bytes) over
// consecutive 10 s windows of the given flows.
struct Window
{
    std::int64_t end_s;
    double throughput_bps;
    Bytes queue_start;
    Bytes queue_end;
};

std::vector<Window> ten_second_windows(const std::vector<const FlowReport*>& flows, std::int64_t from_s,
                                       std::int64_t to_s)
{
    std::vector<Window> out;
    for (std::int64_t start = from_s; start + 10 <= to_s; start += 10) {
        Window w{start + 10, 0.0, 0, 0};
        Bytes bytes = 0;
        for (const auto* f : flows) {
            const auto& b = f->meter.buckets();
            for (std::int64_t s = start; s < start + 10; ++s)
                bytes += b.at(static_cast<std::size_t>(s)).throughput_bytes;
            w.queue_start += start > 0 ? b.at(static_cast<std::size_t>(start - 1)).queue_end : 0;
            w.queue_end += b.at(static_cast<std::size_t>(start + 9)).queue_end;
        }
        w.throughput_bps = static_cast<double>(bytes) * 8.0 / 10.0;
        out.push_back(w);
    }
    return out;
}

double mean_delay_after(const std::vector<const FlowReport*>& flows, std::int64_t from_s)
{
    long double sum = 0;
    std::int64_t n = 0;
    for (const auto* f : flows) {
        const auto& b = f->meter.buckets();
        for (std::size_t s = static_cast<std::size_t>(from_s); s < b.size(); ++s) {
            sum += b[s].delay_sum_us;
            n += b[s].delivered;
        }
    }
    return n > 0 ? static_cast<double>(sum / n / 1000.0L) : 0.0;
}

std::string outputs_of(const RunReport& run)
{
    std::ostringstream os;
    write_metrics_csv(run, os);
    write_summary_csv(run, os);
    return os.str();
}

// ---------------------------------------------------------------------------

Verdict c1_emodel()
{
    using namespace emodel;
    bool ok = compute_r(0, 0) == 94.2 && r_to_mos(60) == 3.1;
    ok = ok && r_to_mos(-1) == 1.0 && r_to_mos(-1e9) == 1.0 && r_to_mos(100.5) == 4.5 && r_to_mos(1e9) == 4.5;
    const double lo_gap = std::abs(r_to_mos(1e-13) - r_to_mos(0));
    const double hi_gap = std::abs(r_to_mos(100 - 1e-13) - r_to_mos(100));
    ok = ok && lo_gap <= 1e-12 && hi_gap <= 1e-12;
    int violations = 0;
    auto mos = [](double d, double e) { return r_to_mos(compute_r(compute_ie(e), compute_id(d))); };
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            const double d = i * 10.0, e = j / 49.0 * 0.5;
            if (i + 1 < 50 && mos(d + 10.0, e) > mos(d, e))
                ++violations;
            if (j + 1 < 50 && mos(d, (j + 1) / 49.0 * 0.5) > mos(d, e))
                ++violations;
        }
    ok = ok && violations == 0;
    return {ok, fmt::format("R(0,0)={} MOS(60)={} endpoint gaps {:.1e}/{:.1e}, grid violations {}", compute_r(0, 0),
                            r_to_mos(60), lo_gap, hi_gap, violations)};
}

Verdict c2_discrepancy()
{
    auto cfg = preset("baseline");
    cfg.channel.pdu_loss_prob = 0.0;
    cfg.run.duration_s = 120;
    const auto run = run_scenario(cfg);
    const auto voice = select(run, [](const FlowReport& f) { return is_voice(f); });
    bool ok = !voice.empty();
    std::string detail;
    for (const auto* f : voice) {
        const auto& b = f->meter.buckets();
        Bytes load = 0, thr = 0;
        for (std::size_t s = 0; s < 100; ++s) {
            load += b[s].load_bytes;
            thr += b[s].throughput_bytes;
        }
        const double load_bps = static_cast<double>(load) * 8.0 / 100.0;
        const double thr_bps = static_cast<double>(thr) * 8.0 / 100.0;
        const Bytes q100 = b.at(99).queue_end;  // bucket [99 s, 100 s) ends at t = 100 s
        const bool f_ok = std::abs(load_bps - 96'000) <= 960 && std::abs(thr_bps - 64'000) <= 640 &&
                          std::abs(q100 - 400'000) <= 2 * 120;
        ok = ok && f_ok;
        detail += fmt::format("{}: load {:.0f} thr {:.0f} q(100s) {}; ", f->entity, load_bps, thr_bps, q100);
    }
    return {ok, detail};
}

Verdict c3_improve_voice(Runs& runs)
{
    const auto& run = runs.get("improve_voice");
    const auto voice = select(run, [](const FlowReport& f) { return is_voice(f); });
    const double delay = mean_delay_after(voice, 100);
    // Least-squares slope of total voice queue depth over the last 300 s.
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    Bytes max_q = 0;
    for (std::size_t s = 100; s < 400; ++s) {
        Bytes q = 0;
        for (const auto* f : voice)
            q += f->meter.buckets().at(s).queue_end;
        max_q = std::max(max_q, q);
        const double x = static_cast<double>(s), y = static_cast<double>(q);
        sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const Bytes bound = static_cast<Bytes>(voice.size()) * 4 * 120;
    const bool ok = delay < 80.0 && std::abs(slope) < 1.0 && max_q <= bound;
    return {ok, fmt::format("steady-state voice delay {:.2f} ms, queue slope {:.4f} B/s, max queue {} B (bound {})",
                            delay, slope, max_q, bound)};
}

Verdict c4_be_starvation(Runs& runs)
{
    const auto& run = runs.get("improve_voice");
    const auto be = select(run, is_ul_be);
    const auto windows = ten_second_windows(be, kWarmupS, 400);
    double worst = 0;
    int not_growing = 0;
    for (const auto& w : windows) {
        worst = std::max(worst, w.throughput_bps);
        if (w.queue_end <= w.queue_start)
            ++not_growing;
    }
    const bool ok = !windows.empty() && worst < 1000.0 && not_growing == 0;
    return {ok, fmt::format("{} windows: max BE throughput {:.1f} bps, windows without queue growth {}, final queue {} B",
                            windows.size(), worst, not_growing, windows.empty() ? 0 : windows.back().queue_end)};
}

Verdict c5_ertps_relief(Runs& runs)
{
    const auto& run = runs.get("improve_data");
    const auto be = select(run, is_ul_be);
    const auto windows = ten_second_windows(be, kWarmupS, 400);
    double weakest = 1e300;
    for (const auto& w : windows)
        weakest = std::min(weakest, w.throughput_bps);
    Bytes delivered = 0;
    for (const auto* f : be)
        delivered += f->delivered_bytes;
    const auto voice_ul = select(run, [](const FlowReport& f) {
        return is_voice(f) && f.direction == Direction::uplink && f.scheduling_type == SchedulingType::ertPS;
    });
    std::int64_t silent_backlogged = 0, silent_all = 0;
    Bytes nominal = 0;
    for (const auto* f : voice_ul) {
        silent_backlogged += f->silent_frames_be_backlogged;
        silent_all += f->silent_frames;
        nominal = ugs_grant_bytes(f->reserved_rate_bps, run.config.frame.duration);
    }
    const double bound = static_cast<double>(nominal - run.config.mac.bw_request_bytes) *
                         static_cast<double>(silent_backlogged) * 0.9;
    const double bound_all = static_cast<double>(nominal - run.config.mac.bw_request_bytes) *
                             static_cast<double>(silent_all) * 0.9;
    const bool ok = !windows.empty() && weakest > 0.0 && static_cast<double>(delivered) >= bound;
    return {ok, fmt::format("min BE window throughput {:.0f} bps; BE delivered {} B vs bound {:.0f} B "
                            "({} silent frames with BE demand; over all {} silent frames the bound would be {:.0f} B)",
                            weakest, delivered, bound, silent_backlogged, silent_all, bound_all)};
}

Verdict c6_voice_unharmed(Runs& runs)
{
    const auto dv = digest(runs.get("improve_voice")).voice_mean_delay_ms;
    const auto dd = digest(runs.get("improve_data")).voice_mean_delay_ms;
    const bool ok = dd - dv <= 10.0 && dv < 80.0 && dd < 80.0;
    return {ok, fmt::format("mean voice delay improve_voice {:.3f} ms, improve_data {:.3f} ms, delta {:+.3f} ms", dv,
                            dd, dd - dv)};
}

Verdict c7_ugs_exactness()
{
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::int64_t> rate_dist(8'000, 5'000'000);
    std::uniform_int_distribution<std::int64_t> frames_dist(1, 20'000);
    std::uniform_int_distribution<int> backlog_dist(0, 200);
    int failures = 0;
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto rate = rate_dist(gen);
        const auto frames = frames_dist(gen);
        SchedulerParams params;
        params.mac_header_bytes = 0;
        GrantScheduler s(Direction::uplink, params);
        std::vector<ServiceFlow> flows;
        flows.emplace_back(0, Direction::uplink, ServiceClass{"u", SchedulingType::UGS, rate, rate, 0}, 1);
        const int backlog = backlog_dist(gen);
        for (int i = 0; i < backlog; ++i) {
            MacPdu p;
            p.payload_bytes = 120;
            flows[0].enqueue(p, {});
        }
        s.add_flow(flows[0]);
        Bytes total = 0;
        for (std::int64_t k = 0; k < frames; ++k)
            total += s.build_frame_map(k, flows, {}, 1'000'000).granted_total();
        const double ideal = static_cast<double>(rate) * static_cast<double>(frames) * 0.005 / 8.0;
        const double max_pdu = std::ceil(static_cast<double>(rate) * 0.005 / 8.0);
        const double err = std::abs(static_cast<double>(total) - ideal);
        worst = std::max(worst, err / max_pdu);
        if (err > max_pdu)
            ++failures;
    }
    return {failures == 0, fmt::format("100 trials, {} outside one grant; worst error {:.3f} of a grant", failures,
                                       worst)};
}

Verdict c8_audits(Runs& runs)
{
    std::string detail;
    bool ok = true;
    for (const auto* name : {"baseline", "improve_voice", "improve_data"}) {
        const auto& run = runs.get(name);
        for (const auto& cell : run.cells) {
            std::int64_t delta = 0;
            for (const auto& f : cell.flows)
                delta += std::llabs(f.counters.offered - (f.counters.sent + f.counters.dropped + f.queued_sdu_bytes));
            ok = ok && delta == 0 && cell.audits == 41;
            detail += fmt::format("{}: {} audits, conservation delta {}; ", name, cell.audits, delta);
        }
    }
    auto caught = [](SimulationOptions opts) {
        auto cfg = preset("improve_voice");
        cfg.run.duration_s = 30;
        try {
            run_scenario(cfg, opts);
        } catch (const InvariantViolation&) {
            return true;
        }
        return false;
    };
    SimulationOptions over;
    over.oversubscribe_frame = 1000;
    SimulationOptions dbl;
    dbl.double_count_at = SimTime::from_ms(12'345);
    const bool neg_over = caught(over);
    const bool neg_dbl = caught(dbl);
    ok = ok && neg_over && neg_dbl;
    detail += fmt::format("fault injection caught: oversubscribe {}, double count {}", neg_over, neg_dbl);
    return {ok, detail};
}

Verdict c9_golden()
{
    int matched = 0;
    std::string detail;
    for (const auto& c : golden::all_cases()) {
        const auto expected = golden::read_table(std::string(WIMAXSIM_GOLDEN_DIR) + "/" + c.table);
        const auto got = golden::replay(c).rows;
        const bool same = got == expected;
        matched += same;
        detail += fmt::format("{} {} ({} grants); ", c.table, same ? "matches" : "DIFFERS", expected.size());
    }
    return {matched == 3, detail};
}

Verdict c10_mos_operating_point(Runs& runs)
{
    using namespace emodel;
    // Loss that puts R at 62 with 80 ms delay under G.711 impairment.
    const double target_ie = 94.2 - compute_id(80.0) - 62.0;
    const double e = (std::exp(target_ie / kG711.gamma2) - 1.0) / kG711.gamma3;
    VoiceWindowStats s;
    s.mean_mouth_to_ear_delay_ms = 80.0;
    s.packet_loss_fraction = e;
    s.received_packets = 1000;
    const auto q = score_window(s);
    const bool ok = q && std::abs(q->mos - 3.2) <= 0.1;
    std::string detail = fmt::format("loss {:.5f}: R {:.3f} MOS {:.4f}", e, q ? q->r_value : 0, q ? q->mos : 0);
    for (const auto* name : {"baseline", "improve_voice", "improve_data"}) {
        const auto& run = runs.get(name);
        double mos = 0, id = 0, ie = 0;
        int n = 0;
        for (const auto* f : select(run, [](const FlowReport& f) { return is_voice(f); }))
            for (const auto& row : f->voice_scores)
                if (row.score) {
                    mos += row.score->mos, id += row.score->id_component, ie += row.score->ie_component;
                    ++n;
                }
        if (n > 0)
            detail += fmt::format("; {} MOS {:.3f} (Id {:.2f}, Ie {:.2f})", name, mos / n, id / n, ie / n);
        else
            detail += fmt::format("; {} no scored windows", name);
    }
    return {ok, detail};
}

Verdict c11_determinism(Runs& runs)
{
    bool ok = true;
    std::string detail;
    for (const auto* name : {"baseline", "improve_voice", "improve_data"}) {
        const auto first = outputs_of(runs.get(name));
        const auto again = outputs_of(run_scenario(preset(name)));
        SimulationOptions other;
        other.seed_override = preset(name).run.seed + 1;
        const auto reseeded = outputs_of(run_scenario(preset(name), other));
        const bool same = first == again;
        const bool differs = first != reseeded;
        const double secs = runs.seconds[name];
        ok = ok && same && differs && secs < 60.0;
        detail += fmt::format("{}: identical {}, other seed differs {}, {:.2f} s; ", name, same, differs, secs);
    }
    return {ok, detail};
}

} // namespace

int main()
{
    Runs runs;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"E-model formulas", c1_emodel},
        {"96-vs-64 load/throughput discrepancy", c2_discrepancy},
        {"improve_voice bounded voice delay", [&] { return c3_improve_voice(runs); }},
        {"BE starvation under improve_voice", [&] { return c4_be_starvation(runs); }},
        {"ertPS relief for BE", [&] { return c5_ertps_relief(runs); }},
        {"voice unharmed by ertPS", [&] { return c6_voice_unharmed(runs); }},
        {"UGS exactness", c7_ugs_exactness},
        {"conservation and capacity audits", [&] { return c8_audits(runs); }},
        {"scheduler golden tables", c9_golden},
        {"MOS operating point", [&] { return c10_mos_operating_point(runs); }},
        {"determinism", [&] { return c11_determinism(runs); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << fmt::format("criterion {:>2} {}: {} - {}\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                                 v.detail);
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
