#pragma once

// Fixed-step integration of one selection of a differential inclusion.
//
// Three selection rules are supported:
//   direct  - evaluate the piece of the field that contains the state;
//   sliding - as direct, but on declared surfaces s(x,t) = 0 whose two sides
//             both push into the surface the Filippov equivalent control
//             lambda f+ + (1 - lambda) f- is used;
//   custom  - a user map (x, t, F) -> q with q in F(x, t).
//
// Piece changes inside a step are located by bisection on the step length
// to a time tolerance of dt * 1e-3 and logged as events.

#include "inclusion_lab/fields.hpp"
#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/lyap.hpp"
#include "inclusion_lab/nonsmooth.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace inclusion_lab {

struct SlidingSurface {
    std::string label;
    ScalarFn value;
    /// [grad_x s; ds/dt]
    VectorFn gradient;
};

struct SelectionRule {
    enum class Kind { direct, sliding, custom };
    using Selector = std::function<Vector(const Vector&, double, const Polytope&)>;

    Kind kind = Kind::direct;
    std::vector<SlidingSurface> surfaces;
    SetValuedMap inclusion;
    Selector select;
    double membership_tol = 1e-6;

    static SelectionRule direct();
    static SelectionRule sliding(std::vector<SlidingSurface> surfaces);
    static SelectionRule custom(SetValuedMap inclusion, Selector select);
};

enum class Method { euler, rk4 };

const char* to_string(Method m);
Method parse_method(const std::string& text);

enum class EventKind { switching, slide_enter, slide_exit };

const char* to_string(EventKind kind);

struct Event {
    double time;
    EventKind kind;
    /// Index of the trajectory sample at which the event was logged.
    std::size_t sample;
    std::string detail;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    /// Selected velocity at each sample.
    std::vector<Vector> velocities;
    std::vector<double> V_values;
    std::vector<double> W_values;
    std::vector<Event> events;

    std::size_t size() const { return times.size(); }
};

/// Thrown when the state norm exceeds the blow-up cap; carries the partial run.
class FiniteEscape : public std::runtime_error {
public:
    FiniteEscape(const std::string& what, Trajectory partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

struct IntegrateOptions {
    double blowup_cap = 1e9;
    /// When set, V and W are recorded along the run.
    const LyapunovCandidate* candidate = nullptr;
    std::size_t max_events = 1000000;
};

Trajectory integrate(const PiecewiseField& f, const SelectionRule& rule, const Vector& x0, double t0,
                     double t_final, double dt, Method method, const IntegrateOptions& options = {});

/// Fills V_values and W_values from the states.
void attach_lyapunov(Trajectory& traj, const LyapunovCandidate& V);

struct MonitorReport {
    bool nonincreasing = true;
    double max_uptick = 0.0;
    double tol_up = 0.0;
    double W_integral = 0.0;
    double W_tail = 0.0;
    double V_initial = 0.0;
    double V_final = 0.0;
};

/// V monotonicity (uptick tolerance 1e-6 + 10 dt^2, dt the largest step),
/// trapezoidal integral of W, and max W over the last 10% of the horizon.
MonitorReport monitor(const Trajectory& traj, const LyapunovCandidate& V);

} // namespace inclusion_lab
