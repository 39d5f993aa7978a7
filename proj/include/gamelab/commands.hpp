#pragma once

#include "gamelab/scenario.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace gamelab {

enum class OutputFormat { Csv, Json };

// 17 significant digits, enough to read back the same double.
std::string format_number(double v);

// Worker count from GAME_LAB_THREADS, capped by the hardware. Throws ConfigError
// when the variable is set but not a positive integer.
unsigned thread_budget();

struct CommandResult {
    std::string text;               // the single output artifact
    std::vector<std::string> notes; // human-readable summary lines
};

// Structured results, shared by the serializers and the tests.
nlohmann::json nep_report(const Scenario& s);
VectorField simulation_field(const Scenario& s, const std::string& name);
TrajectoryLog run_simulation(const Scenario& s);
AlphaSweep run_aloha_sweep(const Scenario& s, unsigned threads);
std::vector<PowerSweepRow> run_power_sweep(const Scenario& s);

struct ContourGrid {
    std::string function;
    GridSpec grid;
    std::vector<double> values; // row-major over (iy, ix); NaN where undefined

    double at(std::size_t ix, std::size_t iy) const { return values[iy * grid.nx + ix]; }
};

// Cells strictly below every finite neighbour (8-neighbourhood), as (ix, iy).
std::vector<std::pair<std::size_t, std::size_t>> local_minima(const ContourGrid& c);

ContourGrid run_contour(const Scenario& s);
BasinGrid run_basin(const Scenario& s, unsigned threads);

CommandResult cmd_nep(const Scenario& s, OutputFormat f);
CommandResult cmd_simulate(const Scenario& s, OutputFormat f);
CommandResult cmd_sweep(const Scenario& s, OutputFormat f, unsigned threads);
CommandResult cmd_contour(const Scenario& s, OutputFormat f);
CommandResult cmd_basin(const Scenario& s, OutputFormat f, unsigned threads);

} // namespace gamelab
