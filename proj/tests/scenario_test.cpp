#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "wimaxsim/scenario.hpp"

using namespace wimaxsim;

namespace {

ScenarioConfig preset(std::string_view name)
{
    auto r = load_preset(name);
    EXPECT_TRUE(r.ok()) << (r.errors.empty() ? "" : r.errors.front());
    return *r.config;
}

bool mentions(const std::vector<std::string>& errors, std::string_view needle)
{
    return std::any_of(errors.begin(), errors.end(),
                       [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

std::string baseline_text()
{
    return std::string(*preset_text("baseline"));
}

std::string replace(std::string text, std::string_view from, std::string_view to)
{
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}

} // namespace

TEST(Presets, AllShippedPresetsParse)
{
    const auto names = preset_names();
    EXPECT_EQ(names, (std::vector<std::string>{"baseline", "improve_data", "improve_voice"}));
    for (const auto& n : names)
        EXPECT_TRUE(load_preset(n).ok()) << n;
    EXPECT_FALSE(load_preset("nope").ok());
}

TEST(Presets, EmbeddedTextMatchesFilesOnDisk)
{
    for (const auto& n : preset_names()) {
        std::ifstream in(std::string(WIMAXSIM_PRESET_DIR) + "/" + n + ".yaml", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        EXPECT_EQ(ss.str(), *preset_text(n)) << n;
    }
}

TEST(Presets, BaselineRates)
{
    const auto c = preset("baseline");
    const auto* gold = c.find_class("Gold");
    const auto* plat = c.find_class("Platinum");
    const auto* silver = c.find_class("Silver");
    const auto* bronze = c.find_class("Bronze");
    ASSERT_TRUE(gold && plat && silver && bronze);
    EXPECT_EQ(gold->scheduling_type, SchedulingType::UGS);
    EXPECT_EQ(gold->max_sustained_rate_bps, 64'000);
    EXPECT_EQ(plat->scheduling_type, SchedulingType::UGS);
    EXPECT_EQ(plat->max_sustained_rate_bps, 2'500'000);
    EXPECT_EQ(silver->scheduling_type, SchedulingType::rtPS);
    EXPECT_EQ(silver->max_sustained_rate_bps, 1'000'000);
    EXPECT_EQ(silver->min_reserved_rate_bps, 500'000);
    EXPECT_EQ(bronze->scheduling_type, SchedulingType::BE);
    EXPECT_EQ(bronze->max_sustained_rate_bps, 384'000);
    EXPECT_EQ(c.metadata.at("modulation"), "QPSK");
    EXPECT_EQ(c.metadata.at("coding_rate"), "1/2");
    EXPECT_EQ(c.metadata.at("cell_radius_km"), "0.2");
    EXPECT_EQ(c.topology.voice_station_count(), 2);
}

TEST(Presets, ImproveVoiceResizesGold)
{
    const auto c = preset("improve_voice");
    EXPECT_EQ(c.find_class("Gold")->scheduling_type, SchedulingType::UGS);
    EXPECT_EQ(c.find_class("Gold")->max_sustained_rate_bps, 96'000);
    EXPECT_EQ(c.find_class("Gold")->min_reserved_rate_bps, 96'000);
}

TEST(Presets, ImproveDataSwitchesVoiceToErtps)
{
    const auto c = preset("improve_data");
    EXPECT_EQ(c.find_class("Gold")->scheduling_type, SchedulingType::ertPS);
    EXPECT_EQ(c.find_class("Gold")->min_reserved_rate_bps, 96'000);
    EXPECT_EQ(c.find_class("Platinum")->scheduling_type, SchedulingType::ertPS);
    EXPECT_TRUE(c.voice.silence_suppression);
}

TEST(Config, UnknownKeyIsAnError)
{
    const auto text = replace(baseline_text(), "  cells: 1\n", "  cells: 1\n  cell_count: 7\n");
    const auto r = parse_config(text);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(mentions(r.errors, "cell_count"));
}

TEST(Config, UgsWithUnequalRatesIsAnError)
{
    const auto text = replace(baseline_text(), "    max_sustained_rate_bps: 64000\n    min_reserved_rate_bps: 64000",
                              "    max_sustained_rate_bps: 96000\n    min_reserved_rate_bps: 64000");
    const auto r = parse_config(text);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(mentions(r.errors, "Gold"));
}

TEST(Config, ReportsEveryErrorNotJustTheFirst)
{
    auto text = replace(baseline_text(), "  nodes_per_cell: 5\n", "  nodes_per_cell: 5\n  bogus: 1\n");
    text = replace(text, "pdu_loss_prob: 0.005", "pdu_loss_prob: 1.5");
    text = replace(text, "{direction: downlink, service_class: Gold, source: voice}",
                   "{direction: downlink, service_class: Diamond, source: voice}");
    const auto r = parse_config(text);
    EXPECT_FALSE(r.ok());
    EXPECT_GE(r.errors.size(), 3u);
    EXPECT_TRUE(mentions(r.errors, "bogus"));
    EXPECT_TRUE(mentions(r.errors, "pdu_loss_prob"));
    EXPECT_TRUE(mentions(r.errors, "Diamond"));
}

TEST(Config, StationWithoutUplinkFlowIsAnError)
{
    auto c = preset("baseline");
    c.data_station = {FlowBinding{Direction::downlink, "Bronze", SourceKind::none}};
    EXPECT_TRUE(mentions(c.validate(), "uplink"));
}

TEST(Config, MalformedYamlIsReported)
{
    const auto r = parse_config("name: [unterminated", "inline");
    EXPECT_FALSE(r.ok());
    ASSERT_FALSE(r.errors.empty());
    EXPECT_NE(r.errors.front().find("inline"), std::string::npos);
}

TEST(Config, DumpRoundTrips)
{
    for (const auto& n : preset_names()) {
        const auto c = preset(n);
        const auto again = parse_config(dump_config(c));
        ASSERT_TRUE(again.ok()) << n << ": " << (again.errors.empty() ? "" : again.errors.front());
        EXPECT_EQ(dump_config(*again.config), dump_config(c)) << n;
    }
}

TEST(Config, MissingFileIsReported)
{
    EXPECT_FALSE(load_config("/nonexistent/scenario.yaml").ok());
}

TEST(Topology, VoiceStationRule)
{
    TopologyConfig t;
    for (auto [nodes, voice] : {std::pair{1, 1}, {4, 1}, {5, 2}, {8, 2}, {9, 3}}) {
        t.nodes_per_cell = nodes;
        EXPECT_EQ(t.voice_station_count(), voice) << nodes;
    }
    t.voice_nodes = 0;
    EXPECT_EQ(t.voice_station_count(), 0);
}
