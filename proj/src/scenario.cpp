#include "wimaxsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace wimaxsim {

std::string_view to_string(SourceKind k)
{
    switch (k) {
    case SourceKind::none: return "none";
    case SourceKind::voice: return "voice";
    case SourceKind::data: return "data";
    }
    return "?";
}

int TopologyConfig::voice_station_count() const
{
    if (voice_nodes)
        return *voice_nodes;
    return (nodes_per_cell + 3) / 4;
}

const ServiceClass* ScenarioConfig::find_class(std::string_view n) const
{
    for (const auto& c : service_classes) {
        if (c.name == n)
            return &c;
    }
    return nullptr;
}

ServiceClass* ScenarioConfig::find_class(std::string_view n)
{
    for (auto& c : service_classes) {
        if (c.name == n)
            return &c;
    }
    return nullptr;
}

namespace {

// Reads one YAML mapping, recording type errors and unknown keys.
class Section
{
public:
    Section(const YAML::Node& node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors)
    {
        if (node_ && !node_.IsMap()) {
            errors_.push_back(fmt::format("{}: expected a mapping", path_));
            valid_ = false;
        }
    }

    bool present() const { return node_ && valid_; }

    template <typename T>
    void get(const std::string& key, T& out)
    {
        seen_.insert(key);
        if (!present())
            return;
        const auto v = node_[key];
        if (!v)
            return;
        try {
            out = v.as<T>();
        } catch (const YAML::Exception&) {
            errors_.push_back(fmt::format("{}.{}: invalid value '{}'", path_, key, scalar(v)));
        }
    }

    template <typename T>
    void get_opt(const std::string& key, std::optional<T>& out)
    {
        seen_.insert(key);
        if (!present() || !node_[key])
            return;
        T tmp{};
        get(key, tmp);
        out = tmp;
    }

    void get_time_us(const std::string& key, SimTime& out)
    {
        std::int64_t v = out.us;
        get(key, v);
        out = SimTime::from_us(v);
    }

    void get_time_ms(const std::string& key, SimTime& out)
    {
        std::int64_t v = out.us / 1000;
        const bool has = present() && node_[key];
        get(key, v);
        if (has)
            out = SimTime::from_ms(v);
    }

    YAML::Node child(const std::string& key)
    {
        seen_.insert(key);
        return present() ? node_[key] : YAML::Node();
    }

    void reject_unknown()
    {
        if (!present())
            return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.contains(key))
                errors_.push_back(fmt::format("{}: unknown key '{}'", path_, key));
        }
    }

    const std::string& path() const { return path_; }

private:
    static std::string scalar(const YAML::Node& n)
    {
        if (n.IsScalar())
            return n.Scalar();
        return n.IsSequence() ? "<sequence>" : "<mapping>";
    }

    YAML::Node node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
    bool valid_ = true;
};

std::optional<Direction> parse_direction(const std::string& s)
{
    if (s == "uplink" || s == "ul")
        return Direction::uplink;
    if (s == "downlink" || s == "dl")
        return Direction::downlink;
    return std::nullopt;
}

std::optional<SourceKind> parse_source(const std::string& s)
{
    if (s == "none")
        return SourceKind::none;
    if (s == "voice")
        return SourceKind::voice;
    if (s == "data")
        return SourceKind::data;
    return std::nullopt;
}

std::vector<FlowBinding> parse_bindings(const YAML::Node& node, const std::string& path,
                                        std::vector<std::string>& errors)
{
    std::vector<FlowBinding> out;
    if (!node)
        return out;
    if (!node.IsSequence()) {
        errors.push_back(fmt::format("{}: expected a list of flows", path));
        return out;
    }
    for (std::size_t i = 0; i < node.size(); ++i) {
        Section s(node[i], fmt::format("{}[{}]", path, i), errors);
        FlowBinding b;
        std::string dir = "uplink";
        std::string src = "none";
        s.get("direction", dir);
        s.get("service_class", b.service_class);
        s.get("source", src);
        s.get_opt("queue_cap_bytes", b.queue_cap_bytes);
        s.get_opt("grant_unit_bytes", b.grant_unit_bytes);
        s.get_opt("pdu_loss_prob", b.pdu_loss_prob);
        s.reject_unknown();
        if (auto d = parse_direction(dir))
            b.direction = *d;
        else
            errors.push_back(fmt::format("{}.direction: expected uplink or downlink, got '{}'", s.path(), dir));
        if (auto k = parse_source(src))
            b.source = *k;
        else
            errors.push_back(fmt::format("{}.source: expected none, voice or data, got '{}'", s.path(), src));
        out.push_back(b);
    }
    return out;
}

void parse_document(const YAML::Node& root, ScenarioConfig& c, std::vector<std::string>& errors)
{
    Section top(root, "config", errors);
    top.get("name", c.name);

    Section topo(top.child("topology"), "topology", errors);
    topo.get("cells", c.topology.cells);
    topo.get("nodes_per_cell", c.topology.nodes_per_cell);
    topo.get_opt("voice_nodes", c.topology.voice_nodes);
    topo.reject_unknown();

    Section frame(top.child("frame"), "frame", errors);
    frame.get_time_us("duration_us", c.frame.duration);
    frame.get("ul_capacity_bytes", c.frame.ul_capacity_bytes);
    frame.get("dl_capacity_bytes", c.frame.dl_capacity_bytes);
    frame.reject_unknown();

    Section mac(top.child("mac"), "mac", errors);
    mac.get("header_bytes", c.mac.header_bytes);
    mac.get("bw_request_bytes", c.mac.bw_request_bytes);
    mac.get("rtps_poll_interval_frames", c.mac.rtps_poll_interval_frames);
    mac.get("nrtps_poll_interval_frames", c.mac.nrtps_poll_interval_frames);
    mac.get("be_contention_period_frames", c.mac.be_contention_period_frames);
    mac.reject_unknown();

    if (auto classes = top.child("service_classes")) {
        if (!classes.IsSequence()) {
            errors.push_back("service_classes: expected a list");
        } else {
            c.service_classes.clear();
            for (std::size_t i = 0; i < classes.size(); ++i) {
                Section s(classes[i], fmt::format("service_classes[{}]", i), errors);
                ServiceClass sc;
                std::string type = "BE";
                s.get("name", sc.name);
                s.get("scheduling_type", type);
                s.get("max_sustained_rate_bps", sc.max_sustained_rate_bps);
                s.get("min_reserved_rate_bps", sc.min_reserved_rate_bps);
                s.get("max_traffic_burst_bytes", sc.max_traffic_burst_bytes);
                s.reject_unknown();
                if (auto t = parse_scheduling_type(type))
                    sc.scheduling_type = *t;
                else
                    errors.push_back(fmt::format("{}.scheduling_type: unknown type '{}'", s.path(), type));
                c.service_classes.push_back(sc);
            }
        }
    }

    Section stations(top.child("stations"), "stations", errors);
    if (stations.present()) {
        c.voice_station = parse_bindings(stations.child("voice"), "stations.voice", errors);
        c.data_station = parse_bindings(stations.child("data"), "stations.data", errors);
    }
    stations.reject_unknown();

    Section voice(top.child("voice"), "voice", errors);
    voice.get("codec_rate_bps", c.voice.codec_rate_bps);
    voice.get_time_us("packetization_us", c.voice.packetization);
    voice.get("header_overhead_bytes", c.voice.header_overhead_bytes);
    voice.get_time_ms("talk_spurt_mean_ms", c.voice.talk_spurt_mean);
    voice.get_time_ms("silence_mean_ms", c.voice.silence_mean);
    voice.get("silence_suppression", c.voice.silence_suppression);
    voice.reject_unknown();

    Section data(top.child("data"), "data", errors);
    data.get("request_bytes", c.data.request_bytes);
    data.get("response_bytes", c.data.response_bytes);
    data.get_time_ms("think_time_mean_ms", c.data.think_time_mean);
    data.get("concurrency", c.data.concurrency);
    data.get_time_ms("request_timeout_ms", c.data.request_timeout);
    data.reject_unknown();

    Section channel(top.child("channel"), "channel", errors);
    channel.get_time_us("one_way_delay_us", c.channel.one_way_delay);
    channel.get("pdu_loss_prob", c.channel.pdu_loss_prob);
    channel.reject_unknown();

    Section metrics(top.child("metrics"), "metrics", errors);
    metrics.get_time_ms("report_interval_ms", c.metrics.report_interval);
    metrics.get_time_ms("voice_window_ms", c.metrics.voice_window);
    metrics.get_time_ms("voice_stride_ms", c.metrics.voice_stride);
    metrics.get_time_ms("audit_interval_ms", c.metrics.audit_interval);
    metrics.reject_unknown();

    Section run(top.child("run"), "run", errors);
    run.get("duration_s", c.run.duration_s);
    run.get("seed", c.run.seed);
    run.get("output_dir", c.run.output_dir);
    run.reject_unknown();

    if (auto meta = top.child("metadata")) {
        if (!meta.IsMap()) {
            errors.push_back("metadata: expected a mapping");
        } else {
            for (const auto& kv : meta) {
                if (kv.second.IsScalar())
                    c.metadata[kv.first.as<std::string>()] = kv.second.Scalar();
                else
                    errors.push_back(fmt::format("metadata.{}: expected a scalar", kv.first.as<std::string>()));
            }
        }
    }

    top.reject_unknown();
}

void validate_bindings(const ScenarioConfig& c, const std::vector<FlowBinding>& flows, const std::string& role,
                       std::vector<std::string>& errors)
{
    const auto path = fmt::format("stations.{}", role);
    bool has_uplink = false;
    int voice_ul = 0, voice_dl = 0, data_ul = 0, data_dl = 0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& b = flows[i];
        const auto* cls = c.find_class(b.service_class);
        if (!cls)
            errors.push_back(fmt::format("{}[{}]: service class '{}' is not declared", path, i, b.service_class));
        if (b.direction == Direction::uplink)
            has_uplink = true;
        if (b.queue_cap_bytes && *b.queue_cap_bytes < 0)
            errors.push_back(fmt::format("{}[{}]: queue_cap_bytes must be non-negative", path, i));
        if (b.grant_unit_bytes && *b.grant_unit_bytes < 0)
            errors.push_back(fmt::format("{}[{}]: grant_unit_bytes must be non-negative", path, i));
        if (b.pdu_loss_prob && !(*b.pdu_loss_prob >= 0.0 && *b.pdu_loss_prob <= 1.0))
            errors.push_back(fmt::format("{}[{}]: pdu_loss_prob must be in [0, 1]", path, i));
        if (b.source == SourceKind::voice)
            ++(b.direction == Direction::uplink ? voice_ul : voice_dl);
        if (b.source == SourceKind::data)
            ++(b.direction == Direction::uplink ? data_ul : data_dl);
    }
    if (!has_uplink)
        errors.push_back(fmt::format("{}: every station needs at least one uplink flow", path));
    if (voice_ul > 1 || voice_dl > 1)
        errors.push_back(fmt::format("{}: at most one voice flow per direction", path));
    if (data_ul > 1 || data_dl > 1)
        errors.push_back(fmt::format("{}: at most one data flow per direction", path));
    if (data_ul != data_dl)
        errors.push_back(fmt::format("{}: a data application needs one uplink and one downlink data flow", path));
}

} // namespace

std::vector<std::string> ScenarioConfig::validate() const
{
    std::vector<std::string> errors;
    if (topology.cells < 1)
        errors.push_back("topology.cells must be at least 1");
    if (topology.nodes_per_cell < 1)
        errors.push_back("topology.nodes_per_cell must be at least 1");
    if (topology.voice_nodes && (*topology.voice_nodes < 0 || *topology.voice_nodes > topology.nodes_per_cell))
        errors.push_back("topology.voice_nodes must be between 0 and nodes_per_cell");
    if (frame.duration.us <= 0)
        errors.push_back("frame.duration_us must be positive");
    if (frame.ul_capacity_bytes <= 0 || frame.dl_capacity_bytes <= 0)
        errors.push_back("frame capacities must be positive");
    if (mac.header_bytes < 0 || mac.bw_request_bytes <= 0)
        errors.push_back("mac.header_bytes must be >= 0 and mac.bw_request_bytes > 0");
    if (mac.rtps_poll_interval_frames <= 0 || mac.nrtps_poll_interval_frames <= 0 ||
        mac.be_contention_period_frames <= 0)
        errors.push_back("mac polling/contention intervals must be positive");

    std::set<std::string> names;
    for (const auto& sc : service_classes) {
        if (sc.name.empty())
            errors.push_back("service class without a name");
        else if (!names.insert(sc.name).second)
            errors.push_back(fmt::format("service class '{}' declared twice", sc.name));
        for (auto& e : sc.validate())
            errors.push_back(std::move(e));
    }

    if (topology.voice_station_count() > 0)
        validate_bindings(*this, voice_station, "voice", errors);
    if (topology.voice_station_count() < topology.nodes_per_cell)
        validate_bindings(*this, data_station, "data", errors);

    if (voice.codec_rate_bps <= 0 || voice.packetization.us <= 0)
        errors.push_back("voice.codec_rate_bps and voice.packetization_us must be positive");
    else if ((voice.codec_rate_bps * voice.packetization.us) % 8'000'000 != 0)
        errors.push_back("voice: codec_rate_bps x packetization_us must give whole codec bytes");
    if (voice.header_overhead_bytes < 0)
        errors.push_back("voice.header_overhead_bytes must be non-negative");
    if (voice.talk_spurt_mean.us < 0 || voice.silence_mean.us < 0)
        errors.push_back("voice talk/silence means must be non-negative");
    if (voice.silence_suppression && voice.silence_mean.us > 0 && voice.talk_spurt_mean.us <= 0)
        errors.push_back("voice.talk_spurt_mean_ms must be positive when silences are modelled");

    if (data.request_bytes <= 0 || data.response_bytes <= 0)
        errors.push_back("data request/response sizes must be positive");
    if (data.concurrency < 1)
        errors.push_back("data.concurrency must be at least 1");
    if (data.think_time_mean.us < 0 || data.request_timeout.us < 0)
        errors.push_back("data think time and timeout must be non-negative");

    if (errors.empty()) {
        const auto voice_pdu = voice.packet_bytes() + mac.header_bytes;
        if (voice_pdu > frame.ul_capacity_bytes || voice_pdu > frame.dl_capacity_bytes)
            errors.push_back(fmt::format("voice PDU of {} B does not fit a frame", voice_pdu));
        if (data.request_bytes + mac.header_bytes > frame.ul_capacity_bytes)
            errors.push_back("data request PDU does not fit the uplink frame");
        if (data.response_bytes + mac.header_bytes > frame.dl_capacity_bytes)
            errors.push_back("data response PDU does not fit the downlink frame");
    }

    if (!(channel.pdu_loss_prob >= 0.0 && channel.pdu_loss_prob <= 1.0))
        errors.push_back("channel.pdu_loss_prob must be in [0, 1]");
    if (channel.one_way_delay.us < 0)
        errors.push_back("channel.one_way_delay_us must be non-negative");

    const auto iv = metrics.report_interval.us;
    if (iv <= 0)
        errors.push_back("metrics.report_interval_ms must be positive");
    else {
        if (metrics.voice_window.us <= 0 || metrics.voice_window.us % iv != 0)
            errors.push_back("metrics.voice_window_ms must be a positive multiple of report_interval_ms");
        if (metrics.voice_stride.us <= 0 || metrics.voice_stride.us % iv != 0)
            errors.push_back("metrics.voice_stride_ms must be a positive multiple of report_interval_ms");
    }
    if (metrics.audit_interval.us <= 0)
        errors.push_back("metrics.audit_interval_ms must be positive");
    if (run.duration_s <= 0)
        errors.push_back("run.duration_s must be positive");
    return errors;
}

ConfigResult parse_config(std::string_view text, std::string_view origin)
{
    ConfigResult result;
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        result.errors.push_back(fmt::format("{}: {}", origin, e.what()));
        return result;
    }
    if (!root || !root.IsMap()) {
        result.errors.push_back(fmt::format("{}: top level must be a mapping", origin));
        return result;
    }

    ScenarioConfig c;
    parse_document(root, c, result.errors);
    for (auto& e : c.validate())
        result.errors.push_back(std::move(e));
    if (result.errors.empty())
        result.config = std::move(c);
    return result;
}

ConfigResult load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        ConfigResult r;
        r.errors.push_back(fmt::format("{}: cannot open", path.string()));
        return r;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string dump_config(const ScenarioConfig& c)
{
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;

    out << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "cells" << YAML::Value << c.topology.cells;
    out << YAML::Key << "nodes_per_cell" << YAML::Value << c.topology.nodes_per_cell;
    if (c.topology.voice_nodes)
        out << YAML::Key << "voice_nodes" << YAML::Value << *c.topology.voice_nodes;
    out << YAML::EndMap;

    out << YAML::Key << "frame" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "duration_us" << YAML::Value << c.frame.duration.us;
    out << YAML::Key << "ul_capacity_bytes" << YAML::Value << c.frame.ul_capacity_bytes;
    out << YAML::Key << "dl_capacity_bytes" << YAML::Value << c.frame.dl_capacity_bytes;
    out << YAML::EndMap;

    out << YAML::Key << "mac" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "header_bytes" << YAML::Value << c.mac.header_bytes;
    out << YAML::Key << "bw_request_bytes" << YAML::Value << c.mac.bw_request_bytes;
    out << YAML::Key << "rtps_poll_interval_frames" << YAML::Value << c.mac.rtps_poll_interval_frames;
    out << YAML::Key << "nrtps_poll_interval_frames" << YAML::Value << c.mac.nrtps_poll_interval_frames;
    out << YAML::Key << "be_contention_period_frames" << YAML::Value << c.mac.be_contention_period_frames;
    out << YAML::EndMap;

    out << YAML::Key << "service_classes" << YAML::Value << YAML::BeginSeq;
    for (const auto& sc : c.service_classes) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << sc.name;
        out << YAML::Key << "scheduling_type" << YAML::Value << std::string(to_string(sc.scheduling_type));
        out << YAML::Key << "max_sustained_rate_bps" << YAML::Value << sc.max_sustained_rate_bps;
        out << YAML::Key << "min_reserved_rate_bps" << YAML::Value << sc.min_reserved_rate_bps;
        if (sc.max_traffic_burst_bytes > 0)
            out << YAML::Key << "max_traffic_burst_bytes" << YAML::Value << sc.max_traffic_burst_bytes;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    auto bindings = [&](const std::vector<FlowBinding>& flows) {
        out << YAML::BeginSeq;
        for (const auto& b : flows) {
            out << YAML::BeginMap;
            out << YAML::Key << "direction" << YAML::Value
                << (b.direction == Direction::uplink ? "uplink" : "downlink");
            out << YAML::Key << "service_class" << YAML::Value << b.service_class;
            out << YAML::Key << "source" << YAML::Value << std::string(to_string(b.source));
            if (b.queue_cap_bytes)
                out << YAML::Key << "queue_cap_bytes" << YAML::Value << *b.queue_cap_bytes;
            if (b.grant_unit_bytes)
                out << YAML::Key << "grant_unit_bytes" << YAML::Value << *b.grant_unit_bytes;
            if (b.pdu_loss_prob)
                out << YAML::Key << "pdu_loss_prob" << YAML::Value << *b.pdu_loss_prob;
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    };
    out << YAML::Key << "stations" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "voice" << YAML::Value;
    bindings(c.voice_station);
    out << YAML::Key << "data" << YAML::Value;
    bindings(c.data_station);
    out << YAML::EndMap;

    out << YAML::Key << "voice" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "codec_rate_bps" << YAML::Value << c.voice.codec_rate_bps;
    out << YAML::Key << "packetization_us" << YAML::Value << c.voice.packetization.us;
    out << YAML::Key << "header_overhead_bytes" << YAML::Value << c.voice.header_overhead_bytes;
    out << YAML::Key << "talk_spurt_mean_ms" << YAML::Value << c.voice.talk_spurt_mean.us / 1000;
    out << YAML::Key << "silence_mean_ms" << YAML::Value << c.voice.silence_mean.us / 1000;
    out << YAML::Key << "silence_suppression" << YAML::Value << c.voice.silence_suppression;
    out << YAML::EndMap;

    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "request_bytes" << YAML::Value << c.data.request_bytes;
    out << YAML::Key << "response_bytes" << YAML::Value << c.data.response_bytes;
    out << YAML::Key << "think_time_mean_ms" << YAML::Value << c.data.think_time_mean.us / 1000;
    out << YAML::Key << "concurrency" << YAML::Value << c.data.concurrency;
    out << YAML::Key << "request_timeout_ms" << YAML::Value << c.data.request_timeout.us / 1000;
    out << YAML::EndMap;

    out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "one_way_delay_us" << YAML::Value << c.channel.one_way_delay.us;
    out << YAML::Key << "pdu_loss_prob" << YAML::Value << c.channel.pdu_loss_prob;
    out << YAML::EndMap;

    out << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "report_interval_ms" << YAML::Value << c.metrics.report_interval.us / 1000;
    out << YAML::Key << "voice_window_ms" << YAML::Value << c.metrics.voice_window.us / 1000;
    out << YAML::Key << "voice_stride_ms" << YAML::Value << c.metrics.voice_stride.us / 1000;
    out << YAML::Key << "audit_interval_ms" << YAML::Value << c.metrics.audit_interval.us / 1000;
    out << YAML::EndMap;

    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "duration_s" << YAML::Value << c.run.duration_s;
    out << YAML::Key << "seed" << YAML::Value << c.run.seed;
    if (!c.run.output_dir.empty())
        out << YAML::Key << "output_dir" << YAML::Value << c.run.output_dir;
    out << YAML::EndMap;

    if (!c.metadata.empty()) {
        out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap;
        for (const auto& [k, v] : c.metadata)
            out << YAML::Key << k << YAML::Value << v;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace wimaxsim
