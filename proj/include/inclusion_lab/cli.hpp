#pragma once

// Command-line front end. Exit codes: 0 success, 1 the analysis says no,
// 2 usage/config/tool error.

#include "inclusion_lab/lyap.hpp"
#include "inclusion_lab/scenarios.hpp"
#include "inclusion_lab/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace inclusion_lab::cli {

struct RunConfig {
    std::string command;
    std::string scenario;
    ScenarioParams params;

    std::optional<double> dt;
    std::optional<double> tfinal;
    std::optional<double> delta;
    std::optional<std::size_t> samples;
    std::optional<double> tol;
    std::optional<std::string> grid;
    std::optional<std::string> mode;
    std::optional<std::string> method;
    std::optional<Vector> point;
    std::uint64_t seed = 0;

    /// simulate: CSV path; other commands: JSON summary path.
    std::string out;
    /// simulate only: JSON summary path.
    std::string json;
};

/// Reads a JSON config. Recognised keys: scenario, params (object), dt,
/// tfinal, delta, samples, tol, grid, mode, method, point (array), seed,
/// out, json. Unknown keys throw std::invalid_argument.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Fills unset fields of `base` from `overrides` (flags win).
void apply_overrides(RunConfig& base, const RunConfig& overrides);

/// "min:max:count,..." with count >= 2 on every axis.
std::vector<GridAxis> parse_grid(const std::string& text);

/// Header t,x1..xn,V,W,event; 17 significant digits; LF line endings.
void write_csv(std::ostream& os, const Trajectory& traj);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace inclusion_lab::cli
