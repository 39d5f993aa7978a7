#pragma once

#include "gamelab/aloha.hpp"
#include "gamelab/dynamics.hpp"
#include "gamelab/powerctl.hpp"
#include "gamelab/variations.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gamelab {

struct PowerScenario {
    PowerGame game;
    std::optional<double> cap; // power box upper bound; defaults to default_power_cap
};

using GameSpec = std::variant<AlohaGame, PowerScenario, LinearGame, PowerCostGame>;

std::string_view game_type(const GameSpec& g);

struct SimulateParams {
    std::string field;    // empty picks the game's selfish field
    std::string lyapunov = "auto";
    std::optional<State> start;
    bool random_start = false;
    double dt = 0.01;
    double t_end = 50.0;
    std::size_t stride = 1; // emit every stride-th step
};

struct SweepParams {
    std::vector<double> alphas;
    double threshold_width = 1e-3;
    std::vector<std::size_t> nep_indices; // empty means every interior equilibrium
    std::optional<State> start;           // power sweeps only
};

struct ContourParams {
    std::string function; // empty picks the game's default
    std::optional<double> alpha;
    std::optional<GridSpec> grid;
    double offset = 0.0;
};

struct BasinParams {
    std::string field;
    std::optional<GridSpec> grid;
    std::vector<Attractor> attractors; // empty picks the game's equilibria
    double radius = 1e-3;
    BasinMode mode = BasinMode::Limit;
    double dt = 0.01;
    double t_end = 200.0;
};

struct Scenario {
    GameSpec game;
    std::uint64_t seed = 0;
    SimulateParams simulate;
    SweepParams sweep;
    ContourParams contour;
    BasinParams basin;
};

// Throws ConfigError with a line/column or field path in the message.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

} // namespace gamelab
