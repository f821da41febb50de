#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wimaxsim/channel.hpp"
#include "wimaxsim/engine.hpp"
#include "wimaxsim/qos_model.hpp"
#include "wimaxsim/traffic.hpp"

namespace wimaxsim {

enum class SourceKind : std::uint8_t { none, voice, data };

std::string_view to_string(SourceKind k);

struct FlowBinding
{
    Direction direction = Direction::uplink;
    std::string service_class;
    SourceKind source = SourceKind::none;
    std::optional<Bytes> queue_cap_bytes;
    // UGS/ertPS unsolicited grant size in SDU bytes. Defaults to the voice
    // packet size for voice flows, otherwise per-frame grants.
    std::optional<Bytes> grant_unit_bytes;
    std::optional<double> pdu_loss_prob;
};

struct TopologyConfig
{
    int cells = 1;
    int nodes_per_cell = 5;
    // Explicit voice-station count; when absent ceil(nodes / 4).
    std::optional<int> voice_nodes;

    int voice_station_count() const;
};

struct FrameConfig
{
    SimTime duration = SimTime::from_us(5000);
    Bytes ul_capacity_bytes = 3400;
    Bytes dl_capacity_bytes = 3250;
};

struct MacConfig
{
    Bytes header_bytes = 6;
    Bytes bw_request_bytes = 6;
    std::int64_t rtps_poll_interval_frames = 4;
    std::int64_t nrtps_poll_interval_frames = 200;
    std::int64_t be_contention_period_frames = 10;
};

struct ChannelConfig
{
    SimTime one_way_delay = SimTime::from_us(1000);
    double pdu_loss_prob = 0.005;
};

struct MetricsConfig
{
    SimTime report_interval = SimTime::from_ms(1000);
    SimTime voice_window = SimTime::from_ms(10'000);
    SimTime voice_stride = SimTime::from_ms(1000);
    SimTime audit_interval = SimTime::from_ms(10'000);
};

struct RunConfig
{
    std::int64_t duration_s = 400;
    std::uint64_t seed = 1;
    std::string output_dir;
};

struct ScenarioConfig
{
    std::string name = "scenario";
    TopologyConfig topology;
    FrameConfig frame;
    MacConfig mac;
    std::vector<ServiceClass> service_classes;
    std::vector<FlowBinding> voice_station;
    std::vector<FlowBinding> data_station;
    VoiceSourceConfig voice;
    DataSourceConfig data;
    ChannelConfig channel;
    MetricsConfig metrics;
    RunConfig run;
    // Documentation-only values (PHY profile, powers, ...). Never read by the model.
    std::map<std::string, std::string> metadata;

    const ServiceClass* find_class(std::string_view name) const;
    ServiceClass* find_class(std::string_view name);

    // Every problem found, not just the first.
    std::vector<std::string> validate() const;
};

struct ConfigResult
{
    std::optional<ScenarioConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return config.has_value(); }
};

ConfigResult parse_config(std::string_view text, std::string_view origin = "<text>");
ConfigResult load_config(const std::filesystem::path& path);

// Serialises a config in the same schema parse_config reads.
std::string dump_config(const ScenarioConfig& config);

// Shipped presets: "baseline", "improve_voice", "improve_data".
std::vector<std::string> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);
ConfigResult load_preset(std::string_view name);

} // namespace wimaxsim
