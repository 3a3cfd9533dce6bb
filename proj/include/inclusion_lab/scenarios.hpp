#pragma once

// Built-in scenarios: fully wired fields, switching signals, candidates,
// selection rules and defaults for the worked examples.
//
//   sec4_example         countable family whose signal accumulates at 0
//   sec7_counterexample  two subsystems sharing V = max(|x1|,|x2|) whose
//                        union hull is not decreasing on |x1| = |x2|
//   sec8_example1        adaptive controller with a signum term
//   sec8_example2        two subsystems with distinct parameters/disturbances

#include "inclusion_lab/fields.hpp"
#include "inclusion_lab/lyap.hpp"
#include "inclusion_lab/nonsmooth.hpp"
#include "inclusion_lab/sim.hpp"

#include <map>
#include <string>
#include <vector>

namespace inclusion_lab {

using ScenarioParams = std::map<std::string, double>;

struct Scenario {
    explicit Scenario(PiecewiseField assembled) : field(std::move(assembled)) {}

    std::string name;
    std::string description;
    SubsystemFamily family;
    SwitchingSignal rho;
    PiecewiseField field;
    LyapunovCandidate V;
    SelectionRule rule;
    /// Regularized subsystem maps used by certify.
    std::map<int, SetValuedMap> subsystem_maps;

    /// Leading state coordinates forming the plant state x (the rest are
    /// parameter errors in the adaptive examples).
    Eigen::Index n_x = 0;
    Vector x0;
    double t0 = 0.0;
    double t_final = 1.0;
    double dt = 1e-3;
    Method method = Method::rk4;

    /// Default point for contain/probe.
    Vector point;
    std::vector<GridAxis> grid;
    std::vector<double> probe_deltas;
    DerivativeMode mode = DerivativeMode::upper;

    /// Effective parameter values, defaults filled in.
    ScenarioParams params;
    std::vector<std::string> warnings;
};

std::vector<std::string> scenario_names();

/// Accepts full names and the short forms sec4, sec7, sec8_1/ex1, sec8_2/ex2.
/// Throws std::invalid_argument listing the known names.
std::string canonical_scenario(const std::string& name);

/// Unknown parameter keys and out-of-range values throw std::invalid_argument.
Scenario make_scenario(const std::string& name, const ScenarioParams& params = {});

} // namespace inclusion_lab
