#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wimaxsim/metrics.hpp"
#include "wimaxsim/scenario.hpp"
#include "wimaxsim/scheduler.hpp"

namespace wimaxsim {

struct SimulationOptions
{
    bool keep_frames = false;
    std::optional<std::uint64_t> seed_override;
    // Fault injection for the audits.
    std::optional<std::int64_t> oversubscribe_frame;
    std::optional<SimTime> double_count_at;
};

struct FlowReport
{
    FlowId id = 0;
    std::string entity;
    StationId station = 0;
    Direction direction = Direction::uplink;
    std::string service_class;
    SchedulingType scheduling_type = SchedulingType::BE;
    SourceKind source = SourceKind::none;
    Bytes grant_unit_bytes = 0;
    std::int64_t reserved_rate_bps = 0;

    ServiceFlow::Counters counters;
    Bytes queued_sdu_bytes = 0;
    Bytes delivered_bytes = 0;
    Bytes lost_bytes = 0;
    std::int64_t delivered_pdus = 0;
    std::int64_t lost_pdus = 0;
    Bytes granted_bytes = 0;
    Bytes wasted_bytes = 0;

    // ertPS only: frames spent in the silent (request-slot) state, and the
    // subset in which uplink BE flows had outstanding requests.
    std::int64_t silent_frames = 0;
    std::int64_t silent_frames_be_backlogged = 0;

    FlowMeter meter{SimTime::from_s(1)};
    std::vector<VoiceScoreRow> voice_scores;
};

struct DataClientReport
{
    StationId station = 0;
    std::uint64_t completed = 0;
    std::uint64_t timed_out = 0;
    std::uint64_t late_responses = 0;
    double mean_response_ms = 0.0;
};

struct CellReport
{
    int cell = 0;
    std::uint64_t seed = 0;
    SimTime end;
    std::int64_t frames = 0;
    std::uint64_t events = 0;
    std::int64_t audits = 0;
    std::int64_t ugs_shed_grants = 0;
    std::vector<std::string> warnings;
    std::vector<FlowReport> flows;
    std::vector<DataClientReport> clients;
    std::vector<FrameLedger> frames_log;  // only with keep_frames
};

struct RunReport
{
    ScenarioConfig config;
    std::vector<CellReport> cells;
};

// Entity name for a flow, e.g. "ss1.ul.gold" (prefixed "cellN." when the
// scenario has several cells).
std::string flow_entity(int cell, int cells, StationId station, Direction dir, std::string_view service_class);

// Runs one cell. Throws InvariantViolation when an audit fails.
CellReport run_cell(const ScenarioConfig& config, int cell, std::uint64_t seed, const SimulationOptions& options);

// Runs every cell (in parallel; each cell is independent and single-threaded).
RunReport run_scenario(const ScenarioConfig& config, const SimulationOptions& options = {});

} // namespace wimaxsim
