#include "wimaxsim/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <map>
#include <memory>

#include <fmt/format.h>

#include "wimaxsim/channel.hpp"
#include "wimaxsim/engine.hpp"
#include "wimaxsim/traffic.hpp"

namespace wimaxsim {

std::string flow_entity(int cell, int cells, StationId station, Direction dir, std::string_view service_class)
{
    std::string cls(service_class);
    std::transform(cls.begin(), cls.end(), cls.begin(), [](unsigned char ch) { return std::tolower(ch); });
    auto name = fmt::format("ss{}.{}.{}", station, to_string(dir), cls);
    if (cells > 1)
        return fmt::format("cell{}.{}", cell, name);
    return name;
}

namespace {

enum Kind : std::uint32_t {
    kFrameStart = 1,
    kVoiceTick,
    kTalkToggle,
    kDataThink,
    kDataTimeout,
    kDeliver,
    kAudit,
    kInjectFault,
};

constexpr std::uint32_t kVoiceStreamBase = 100;
constexpr std::uint32_t kDataStreamBase = 200;
constexpr std::uint32_t kLinkStreamBase = 1000;

std::uint64_t pack_txn(int slot, std::uint64_t txn)
{
    return (static_cast<std::uint64_t>(slot) << 48) | txn;
}

int txn_slot(std::uint64_t v)
{
    return static_cast<int>(v >> 48);
}

std::uint64_t txn_id(std::uint64_t v)
{
    return v & ((std::uint64_t{1} << 48) - 1);
}

class CellSimulation
{
public:
    CellSimulation(const ScenarioConfig& cfg, int cell, std::uint64_t seed, const SimulationOptions& opts);

    CellReport run();

private:
    struct Client
    {
        StationId station = 0;
        FlowId uplink = 0;
        FlowId downlink = 0;
        DataClient client;
    };

    void build();
    void handle(const Event& ev);
    void on_frame(std::int64_t k);
    void serve(FrameLedger& ledger, std::vector<BwRequest>& next_requests);
    void send(const MacPdu& pdu, SimTime leave_at);
    void on_deliver(std::uint64_t pdu_id);
    void offer(MacPdu pdu);
    void apply(std::size_t client_index, const DataAction& action);
    void audit(SimTime now);
    [[noreturn]] void fail(const std::string& what);

    const ScenarioConfig& cfg_;
    SimulationOptions opts_;
    CellReport report_;
    EventQueue queue_;
    FrameClock clock_;
    RandomStreams rng_;
    SimTime end_;

    std::vector<ServiceFlow> flows_;
    std::vector<LinkModel> links_;
    std::unique_ptr<GrantScheduler> ul_;
    std::unique_ptr<GrantScheduler> dl_;
    std::vector<BwRequest> pending_ul_;
    std::vector<BwRequest> pending_dl_;
    std::vector<VoiceSource> voices_;
    std::vector<Client> clients_;
    std::map<std::uint64_t, MacPdu> in_flight_;
    std::uint64_t next_pdu_id_ = 1;
    std::vector<FrameLedger> last_frames_;
};

CellSimulation::CellSimulation(const ScenarioConfig& cfg, int cell, std::uint64_t seed, const SimulationOptions& opts)
    : cfg_(cfg), opts_(opts), clock_(cfg.frame.duration), rng_(seed), end_(SimTime::from_s(cfg.run.duration_s))
{
    report_.cell = cell;
    report_.seed = seed;
    build();
}

void CellSimulation::build()
{
    SchedulerParams params;
    params.frame_duration = cfg_.frame.duration;
    params.mac_header_bytes = cfg_.mac.header_bytes;
    params.bw_request_bytes = cfg_.mac.bw_request_bytes;
    params.rtps_poll_interval_frames = cfg_.mac.rtps_poll_interval_frames;
    params.nrtps_poll_interval_frames = cfg_.mac.nrtps_poll_interval_frames;
    params.be_contention_period_frames = cfg_.mac.be_contention_period_frames;
    params.oversubscribe_frame = opts_.oversubscribe_frame;
    ul_ = std::make_unique<GrantScheduler>(Direction::uplink, params);
    dl_ = std::make_unique<GrantScheduler>(Direction::downlink, params);

    const int voice_count = cfg_.topology.voice_station_count();
    for (int st = 1; st <= cfg_.topology.nodes_per_cell; ++st) {
        const bool voice_station = st <= voice_count;
        const auto& profile = voice_station ? cfg_.voice_station : cfg_.data_station;
        std::optional<FlowId> data_ul, data_dl;
        for (const auto& b : profile) {
            const auto* cls = cfg_.find_class(b.service_class);
            const auto id = static_cast<FlowId>(flows_.size());
            flows_.emplace_back(id, b.direction, *cls, static_cast<StationId>(st), b.queue_cap_bytes);

            Bytes unit = 0;
            if (cls->scheduling_type == SchedulingType::UGS || cls->scheduling_type == SchedulingType::ertPS)
                unit = b.grant_unit_bytes.value_or(b.source == SourceKind::voice ? cfg_.voice.packet_bytes() : 0);
            (b.direction == Direction::uplink ? *ul_ : *dl_).add_flow(flows_.back(), unit);

            LinkModel link;
            link.one_way_delay = cfg_.channel.one_way_delay;
            link.pdu_loss_prob = b.pdu_loss_prob.value_or(cfg_.channel.pdu_loss_prob);
            link.random_stream = kLinkStreamBase + id;
            rng_.register_stream(link.random_stream);
            links_.push_back(link);

            FlowReport fr;
            fr.id = id;
            fr.entity = flow_entity(report_.cell, cfg_.topology.cells, static_cast<StationId>(st), b.direction,
                                    cls->name);
            fr.station = static_cast<StationId>(st);
            fr.direction = b.direction;
            fr.service_class = cls->name;
            fr.scheduling_type = cls->scheduling_type;
            fr.source = b.source;
            fr.grant_unit_bytes = unit;
            fr.reserved_rate_bps = cls->min_reserved_rate_bps;
            fr.meter = FlowMeter(cfg_.metrics.report_interval);
            report_.flows.push_back(std::move(fr));

            if (b.source == SourceKind::voice) {
                const auto stream = kVoiceStreamBase + static_cast<std::uint32_t>(voices_.size());
                rng_.register_stream(stream);
                voices_.emplace_back(cfg_.voice, id, cfg_.mac.header_bytes, stream);
            } else if (b.source == SourceKind::data) {
                (b.direction == Direction::uplink ? data_ul : data_dl) = id;
            }
        }
        if (data_ul && data_dl) {
            const auto stream = kDataStreamBase + static_cast<std::uint32_t>(st);
            rng_.register_stream(stream);
            clients_.push_back(Client{static_cast<StationId>(st), *data_ul, *data_dl, DataClient(cfg_.data, stream)});
        }
    }
}

CellReport CellSimulation::run()
{
    const SimTime zero{};
    queue_.schedule(zero, EventPayload{kFrameStart, 0, 0});

    for (std::uint32_t i = 0; i < voices_.size(); ++i) {
        auto& v = voices_[i];
        const auto first_toggle = v.start(rng_, zero);
        if (cfg_.voice.silence_suppression && first_toggle)
            queue_.schedule(*first_toggle, EventPayload{kTalkToggle, i, 0});
        const double u = rng_.next_random(v.stream_id());
        const auto offset = static_cast<std::int64_t>(u * static_cast<double>(cfg_.voice.packetization.us));
        queue_.schedule(SimTime::from_us(offset), EventPayload{kVoiceTick, i, 0});
    }

    for (std::uint32_t c = 0; c < clients_.size(); ++c) {
        for (int slot = 0; slot < cfg_.data.concurrency; ++slot) {
            auto action =
                clients_[c].client.data_transaction_step(DataEvent{DataEventKind::start, slot, 0}, rng_, zero);
            apply(c, action);
        }
    }

    queue_.schedule(zero + cfg_.metrics.audit_interval, EventPayload{kAudit, 0, 0});
    if (opts_.double_count_at)
        queue_.schedule(*opts_.double_count_at, EventPayload{kInjectFault, 0, 0});

    queue_.run_until(end_, [this](const Event& ev) { handle(ev); });
    audit(end_);

    report_.end = end_;
    report_.events = queue_.processed();
    report_.ugs_shed_grants = ul_->shed_grants() + dl_->shed_grants();
    for (const auto* s : {ul_.get(), dl_.get()})
        report_.warnings.insert(report_.warnings.end(), s->warnings().begin(), s->warnings().end());

    for (auto& fr : report_.flows) {
        const auto& flow = flows_[fr.id];
        fr.counters = flow.counters();
        fr.queued_sdu_bytes = flow.queued_sdu_bytes();
        fr.meter.finish(end_);
        if (fr.source == SourceKind::voice)
            fr.voice_scores =
                score_voice_windows(fr.meter, cfg_.metrics.voice_window, cfg_.metrics.voice_stride, end_);
    }
    for (const auto& c : clients_) {
        DataClientReport r;
        r.station = c.station;
        r.completed = c.client.completed();
        r.timed_out = c.client.timed_out();
        r.late_responses = c.client.late_responses();
        if (r.completed > 0)
            r.mean_response_ms = c.client.total_response_time().millis() / static_cast<double>(r.completed);
        report_.clients.push_back(r);
    }
    return std::move(report_);
}

void CellSimulation::handle(const Event& ev)
{
    const auto now = queue_.now();
    switch (ev.payload.kind) {
    case kFrameStart:
        on_frame(static_cast<std::int64_t>(ev.payload.aux));
        break;
    case kVoiceTick: {
        auto& v = voices_[ev.payload.target];
        if (auto pdu = v.voice_emit_packet(now))
            offer(std::move(*pdu));
        queue_.schedule(now + cfg_.voice.packetization, ev.payload);
        break;
    }
    case kTalkToggle: {
        auto& v = voices_[ev.payload.target];
        if (auto next = v.toggle(rng_, now))
            queue_.schedule(*next, ev.payload);
        break;
    }
    case kDataThink: {
        const auto c = ev.payload.target;
        const DataEvent de{DataEventKind::think_done, static_cast<int>(ev.payload.aux), 0};
        apply(c, clients_[c].client.data_transaction_step(de, rng_, now));
        break;
    }
    case kDataTimeout: {
        const auto c = ev.payload.target;
        const DataEvent de{DataEventKind::timeout, txn_slot(ev.payload.aux), txn_id(ev.payload.aux)};
        apply(c, clients_[c].client.data_transaction_step(de, rng_, now));
        break;
    }
    case kDeliver:
        on_deliver(ev.payload.aux);
        break;
    case kAudit:
        audit(now);
        queue_.schedule(now + cfg_.metrics.audit_interval, ev.payload);
        break;
    case kInjectFault:
        if (!flows_.empty())
            flows_.front().inject_double_count(1);
        break;
    default:
        fail(fmt::format("unknown event kind {}", ev.payload.kind));
    }
}

void CellSimulation::apply(std::size_t client_index, const DataAction& action)
{
    auto& c = clients_[client_index];
    const auto now = queue_.now();
    const auto idx = static_cast<std::uint32_t>(client_index);
    if (const auto* send = std::get_if<data_action::SendRequest>(&action)) {
        MacPdu pdu;
        pdu.flow_id = c.uplink;
        pdu.payload_bytes = cfg_.data.request_bytes;
        pdu.mac_header_bytes = cfg_.mac.header_bytes;
        pdu.created_at = now;
        pdu.app_tag = AppTag::data;
        pdu.app_seq = pack_txn(send->slot, send->transaction);
        offer(std::move(pdu));
        if (cfg_.data.request_timeout.us > 0)
            queue_.schedule(send->timeout_at, EventPayload{kDataTimeout, idx, pack_txn(send->slot, send->transaction)});
    } else if (const auto* think = std::get_if<data_action::Think>(&action)) {
        queue_.schedule(think->until, EventPayload{kDataThink, idx, static_cast<std::uint64_t>(think->slot)});
    }
}

void CellSimulation::offer(MacPdu pdu)
{
    const auto now = queue_.now();
    pdu.id = next_pdu_id_++;
    auto& flow = flows_[pdu.flow_id];
    auto& fr = report_.flows[pdu.flow_id];
    fr.meter.record_load(pdu.payload_bytes, now);
    const bool voice = pdu.app_tag == AppTag::voice;
    if (flow.enqueue(std::move(pdu), now) == EnqueueOutcome::dropped) {
        if (voice)
            fr.meter.record_loss(now);
        return;
    }
    fr.meter.record_queue(flow.queued_sdu_bytes(), now);
}

void CellSimulation::on_frame(std::int64_t k)
{
    std::vector<BwRequest> next_ul;
    std::vector<BwRequest> next_dl;

    auto ul = ul_->build_frame_map(k, flows_, pending_ul_, cfg_.frame.ul_capacity_bytes);
    pending_ul_.clear();

    // Did the uplink BE pool have demand the BS knew about in this frame?
    bool be_backlogged = false;
    for (const auto& f : flows_) {
        if (f.direction() == Direction::uplink && f.scheduling_type() == SchedulingType::BE &&
            ul_->outstanding_request(f.id()) > 0)
            be_backlogged = true;
    }
    for (const auto& g : ul.grants) {
        if (flows_[g.flow_id].scheduling_type() == SchedulingType::BE && g.kind == GrantKind::data_grant)
            be_backlogged = true;
    }
    for (auto& fr : report_.flows) {
        if (fr.direction != Direction::uplink || fr.scheduling_type != SchedulingType::ertPS)
            continue;
        if (const auto* st = ul_->ertps_state(fr.id); st && st->silent) {
            ++fr.silent_frames;
            if (be_backlogged)
                ++fr.silent_frames_be_backlogged;
        }
    }
    for (auto& fr : report_.flows) {
        if (fr.direction == Direction::downlink && fr.scheduling_type == SchedulingType::ertPS) {
            if (const auto* st = dl_->ertps_state(fr.id); st && st->silent)
                ++fr.silent_frames;
        }
    }

    serve(ul, next_ul);

    for (const auto& f : flows_) {
        if (f.direction() != Direction::uplink)
            continue;
        if (auto req = be_contention_request(f, k, cfg_.mac.be_contention_period_frames))
            next_ul.push_back(*req);
    }

    auto dl = dl_->build_frame_map(k, flows_, pending_dl_, cfg_.frame.dl_capacity_bytes);
    pending_dl_.clear();
    serve(dl, next_dl);

    for (auto* ledger : {&ul, &dl}) {
        ledger->settle();
        try {
            audit_frame(*ledger);
        } catch (const InvariantViolation& e) {
            last_frames_.push_back(*ledger);
            fail(e.what());
        }
    }

    pending_ul_ = std::move(next_ul);
    pending_dl_ = std::move(next_dl);
    ++report_.frames;

    last_frames_.clear();
    last_frames_.push_back(ul);
    last_frames_.push_back(dl);
    if (opts_.keep_frames) {
        report_.frames_log.push_back(std::move(ul));
        report_.frames_log.push_back(std::move(dl));
    }

    const auto next = clock_.frame_start(k + 1);
    if (next <= end_)
        queue_.schedule(next, EventPayload{kFrameStart, 0, static_cast<std::uint64_t>(k + 1)});
}

void CellSimulation::serve(FrameLedger& ledger, std::vector<BwRequest>& next_requests)
{
    const auto now = queue_.now();
    const auto leave_at = now + clock_.frame_duration();
    for (auto& g : ledger.grants) {
        auto& flow = flows_[g.flow_id];
        auto& fr = report_.flows[g.flow_id];
        const Bytes backlog = flow.backlog_bytes();
        const auto& sched = flow.direction() == Direction::uplink ? *ul_ : *dl_;
        const auto* ertps = sched.ertps_state(g.flow_id);
        fr.granted_bytes += g.granted_bytes;

        if (g.kind == GrantKind::data_grant) {
            auto pdus = flow.dequeue_up_to(g.granted_bytes);
            for (const auto& p : pdus)
                g.used_bytes += p.total_bytes();
            if (!pdus.empty())
                fr.meter.record_queue(flow.queued_sdu_bytes(), now);
            for (auto& p : pdus)
                send(p, leave_at);
            if (ertps) {
                if (auto req = ertps_station_request(g, backlog, ertps->nominal_grant_bytes)) {
                    next_requests.push_back(*req);
                    if (g.used_bytes == 0)
                        g.used_bytes = std::min(g.granted_bytes, cfg_.mac.bw_request_bytes);
                }
            }
        } else {
            if (ertps) {
                if (auto req = ertps_station_request(g, backlog, ertps->nominal_grant_bytes)) {
                    next_requests.push_back(*req);
                    g.used_bytes = g.granted_bytes;
                }
            } else {
                // Polled station answers with its backlog, possibly zero.
                next_requests.push_back(BwRequest{g.flow_id, backlog, g.frame_index, RequestKind::bandwidth});
                g.used_bytes = g.granted_bytes;
            }
        }
        fr.wasted_bytes += g.granted_bytes - g.used_bytes;
    }
}

void CellSimulation::send(const MacPdu& pdu, SimTime leave_at)
{
    auto& fr = report_.flows[pdu.flow_id];
    const auto outcome = transmit(pdu, links_[pdu.flow_id], rng_, leave_at);
    if (const auto* d = std::get_if<Delivery>(&outcome)) {
        in_flight_.emplace(pdu.id, pdu);
        queue_.schedule(d->deliver_at, EventPayload{kDeliver, pdu.flow_id, pdu.id});
        return;
    }
    const auto& lost = std::get<Lost>(outcome);
    fr.lost_bytes += pdu.payload_bytes;
    ++fr.lost_pdus;
    if (pdu.app_tag == AppTag::voice && lost.lost_at <= end_)
        fr.meter.record_loss(lost.lost_at);
}

void CellSimulation::on_deliver(std::uint64_t pdu_id)
{
    auto it = in_flight_.find(pdu_id);
    if (it == in_flight_.end())
        fail(fmt::format("delivery of unknown PDU {}", pdu_id));
    const MacPdu pdu = std::move(it->second);
    in_flight_.erase(it);

    const auto now = queue_.now();
    auto& fr = report_.flows[pdu.flow_id];
    fr.delivered_bytes += pdu.payload_bytes;
    ++fr.delivered_pdus;
    fr.meter.record_throughput(pdu.payload_bytes, now);
    fr.meter.record_delay(DelaySample{pdu.created_at, now});

    if (pdu.app_tag != AppTag::data)
        return;
    for (std::size_t c = 0; c < clients_.size(); ++c) {
        auto& client = clients_[c];
        if (pdu.flow_id == client.uplink) {
            // Request reached the server; the response goes out on the downlink.
            MacPdu resp;
            resp.flow_id = client.downlink;
            resp.payload_bytes = cfg_.data.response_bytes;
            resp.mac_header_bytes = cfg_.mac.header_bytes;
            resp.created_at = now;
            resp.app_tag = AppTag::data;
            resp.app_seq = pdu.app_seq;
            offer(std::move(resp));
            return;
        }
        if (pdu.flow_id == client.downlink) {
            const DataEvent de{DataEventKind::response, txn_slot(pdu.app_seq), txn_id(pdu.app_seq)};
            apply(c, client.client.data_transaction_step(de, rng_, now));
            return;
        }
    }
}

void CellSimulation::audit(SimTime now)
{
    ++report_.audits;
    for (const auto& f : flows_) {
        const auto r = audit_conservation(f);
        if (!r.pass) {
            const auto& c = f.counters();
            fail(fmt::format("conservation audit failed at {} us for {}: offered {} != sent {} + dropped {} + "
                             "queued {} (delta {})",
                             now.us, report_.flows[f.id()].entity, c.offered, c.sent, c.dropped,
                             f.queued_sdu_bytes(), r.delta));
        }
    }
}

void CellSimulation::fail(const std::string& what)
{
    std::string dump = what;
    for (const auto& l : last_frames_) {
        dump += fmt::format("\n  {} frame {} capacity {} granted {} used {} wasted {}", to_string(l.direction),
                            l.frame_index, l.capacity_bytes, l.granted_total(), l.bytes_used, l.bytes_wasted);
        for (const auto& g : l.grants)
            dump += fmt::format("\n    flow {} {} {} B used {}", g.flow_id, to_string(g.kind), g.granted_bytes,
                                g.used_bytes);
    }
    throw InvariantViolation(dump);
}

} // namespace

CellReport run_cell(const ScenarioConfig& config, int cell, std::uint64_t seed, const SimulationOptions& options)
{
    CellSimulation sim(config, cell, seed, options);
    return sim.run();
}

RunReport run_scenario(const ScenarioConfig& config, const SimulationOptions& options)
{
    if (auto errors = config.validate(); !errors.empty())
        throw SimulationError("invalid scenario: " + errors.front());

    RunReport report;
    report.config = config;
    const auto base_seed = options.seed_override.value_or(config.run.seed);
    if (options.seed_override)
        report.config.run.seed = *options.seed_override;

    std::vector<std::future<CellReport>> futures;
    for (int c = 0; c < config.topology.cells; ++c) {
        const auto seed = base_seed + static_cast<std::uint64_t>(c);
        futures.push_back(std::async(std::launch::async, [&config, c, seed, &options] {
            return run_cell(config, c, seed, options);
        }));
    }
    for (auto& f : futures)
        report.cells.push_back(f.get());
    return report;
}

} // namespace wimaxsim
