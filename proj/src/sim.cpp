#include "inclusion_lab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace inclusion_lab {

SelectionRule SelectionRule::direct() { return {}; }

SelectionRule SelectionRule::sliding(std::vector<SlidingSurface> surfaces)
{
    SelectionRule r;
    r.kind = Kind::sliding;
    r.surfaces = std::move(surfaces);
    return r;
}

SelectionRule SelectionRule::custom(SetValuedMap inclusion, Selector select)
{
    SelectionRule r;
    r.kind = Kind::custom;
    r.inclusion = std::move(inclusion);
    r.select = std::move(select);
    return r;
}

const char* to_string(Method m) { return m == Method::euler ? "euler" : "rk4"; }

Method parse_method(const std::string& text)
{
    if (text == "euler") return Method::euler;
    if (text == "rk4") return Method::rk4;
    throw std::invalid_argument("unknown integration method '" + text + "' (expected euler or rk4)");
}

const char* to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::switching: return "switch";
    case EventKind::slide_enter: return "slide_enter";
    case EventKind::slide_exit: return "slide_exit";
    }
    return "?";
}

namespace {

struct Mode {
    std::size_t piece = 0;
    std::vector<std::size_t> sliding;
    /// Piece on each corner of the sliding surfaces; bit k set means the
    /// + side of sliding[k].
    std::vector<std::size_t> corners;

    bool operator==(const Mode&) const = default;
};

struct SideSpeeds {
    std::vector<double> lambda;   // clamped equivalent-control weights
    std::vector<double> a_plus;   // grad s . [f+; 1]
    std::vector<double> a_minus;  // grad s . [f-; 1]
};

class Engine {
public:
    Engine(const PiecewiseField& f, const SelectionRule& rule, Method method)
        : f_(f), rule_(rule), method_(method)
    {
    }

    Vector rhs(const Vector& x, double t, const Mode& m) const
    {
        if (rule_.kind == SelectionRule::Kind::custom) {
            const Polytope F = rule_.inclusion(x, t);
            Vector q = rule_.select(x, t, F);
            if (!contains(F, q, rule_.membership_tol)) {
                std::ostringstream os;
                os << "custom selection left F(x,t) at t=" << t << " (distance " << distance(F, q) << ")";
                throw std::runtime_error(os.str());
            }
            return q;
        }
        if (m.sliding.empty()) return f_.eval_piece(m.piece, x, t);
        return combine(x, t, m, speeds(x, t, m));
    }

    Vector advance(const Vector& x, double t, double h, const Mode& m) const
    {
        if (method_ == Method::euler) return x + h * rhs(x, t, m);
        const Vector k1 = rhs(x, t, m);
        const Vector k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h, m);
        const Vector k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h, m);
        const Vector k4 = rhs(x + h * k3, t + h, m);
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    Vector unit_normal(std::size_t i, const Vector& x, double t) const
    {
        const Vector g = rule_.surfaces[i].gradient(x, t);
        Vector n = g.head(x.size());
        const double len = n.norm();
        if (len == 0.0) throw DegenerateSliding("surface '" + rule_.surfaces[i].label + "' has zero state gradient");
        return n / len;
    }

    Vector project(Vector x, double t, const std::vector<std::size_t>& sliding) const
    {
        for (int pass = 0; pass < 3; ++pass) {
            for (std::size_t i : sliding) {
                const double s = rule_.surfaces[i].value(x, t);
                const Vector g = rule_.surfaces[i].gradient(x, t).head(x.size());
                const double g2 = g.squaredNorm();
                if (g2 > 0.0) x -= (s / g2) * g;
            }
        }
        return x;
    }

    static double probe_eps(const Vector& x) { return 1e-9 * (1.0 + x.norm()); }

    Mode make_mode(const Vector& x, double t, std::vector<std::size_t> sliding, const Vector& hint) const
    {
        Mode m;
        std::sort(sliding.begin(), sliding.end());
        m.sliding = std::move(sliding);
        Vector base = m.sliding.empty() ? x : project(x, t, m.sliding);
        if (hint.size() == base.size()) base += hint;
        if (m.sliding.empty()) {
            m.piece = f_.locate(base, t);
            return m;
        }
        const double eps = probe_eps(x);
        std::vector<Vector> normals;
        for (std::size_t i : m.sliding) normals.push_back(unit_normal(i, base, t));
        const std::size_t n_corners = std::size_t{1} << m.sliding.size();
        for (std::size_t c = 0; c < n_corners; ++c) {
            Vector probe = base;
            for (std::size_t k = 0; k < m.sliding.size(); ++k) probe += (((c >> k) & 1U) ? eps : -eps) * normals[k];
            m.corners.push_back(f_.locate(probe, t));
        }
        m.piece = m.corners.front();
        return m;
    }

    bool same_mode(const Vector& x, double t, const Mode& m) const
    {
        return make_mode(x, t, m.sliding, Vector()) == m;
    }

    SideSpeeds speeds(const Vector& x, double t, const Mode& m) const
    {
        const std::size_t k = m.sliding.size();
        std::vector<Vector> values;
        values.reserve(m.corners.size());
        for (std::size_t piece : m.corners) values.push_back(f_.eval_piece(piece, x, t));

        SideSpeeds out{std::vector<double>(k, 0.5), std::vector<double>(k), std::vector<double>(k)};
        const auto weight_except = [&](std::size_t c, std::size_t skip) {
            double w = 1.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (j == skip) continue;
                w *= ((c >> j) & 1U) ? out.lambda[j] : 1.0 - out.lambda[j];
            }
            return w;
        };
        // Gauss-Seidel over surfaces; exact after one pass when each switching
        // term only enters its own surface's normal speed.
        for (int pass = 0; pass < 3; ++pass) {
            for (std::size_t i = 0; i < k; ++i) {
                Vector fp = Vector::Zero(x.size());
                Vector fm = Vector::Zero(x.size());
                for (std::size_t c = 0; c < values.size(); ++c) {
                    const double w = weight_except(c, i);
                    if ((c >> i) & 1U) {
                        fp += w * values[c];
                    } else {
                        fm += w * values[c];
                    }
                }
                const Vector g = rule_.surfaces[m.sliding[i]].gradient(x, t);
                const double ap = g.dot(lift_time(fp));
                const double am = g.dot(lift_time(fm));
                out.a_plus[i] = ap;
                out.a_minus[i] = am;
                const double denom = am - ap;
                out.lambda[i] = denom > 0.0 ? std::clamp(am / denom, 0.0, 1.0) : 0.5;
            }
        }
        return out;
    }

    Vector combine(const Vector& x, double t, const Mode& m, const SideSpeeds& sp) const
    {
        Vector out = Vector::Zero(x.size());
        for (std::size_t c = 0; c < m.corners.size(); ++c) {
            double w = 1.0;
            for (std::size_t j = 0; j < m.sliding.size(); ++j) w *= ((c >> j) & 1U) ? sp.lambda[j] : 1.0 - sp.lambda[j];
            if (w != 0.0) out += w * f_.eval_piece(m.corners[c], x, t);
        }
        return out;
    }

    const SelectionRule& rule() const { return rule_; }

private:
    const PiecewiseField& f_;
    const SelectionRule& rule_;
    Method method_;
};

double speed_tol(double a, double b) { return 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

} // namespace

Trajectory integrate(const PiecewiseField& f, const SelectionRule& rule, const Vector& x0, double t0, double t_final,
                     double dt, Method method, const IntegrateOptions& options)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrate: dt must be positive");
    if (!(t_final > t0)) throw std::invalid_argument("integrate: t_final must exceed t0");
    require_finite(x0, "integrate");
    if (rule.kind != SelectionRule::Kind::custom) require_dim(x0.size(), f.dim(), "integrate");
    if (rule.kind == SelectionRule::Kind::custom && (!rule.inclusion || !rule.select)) {
        throw std::invalid_argument("integrate: custom rule needs an inclusion and a selector");
    }

    const Engine eng(f, rule, method);
    const bool pieces = rule.kind != SelectionRule::Kind::custom;
    const bool sliding_rule = rule.kind == SelectionRule::Kind::sliding;

    Trajectory traj;
    const auto record = [&](double t, const Vector& x) {
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.velocities.push_back(Vector::Zero(x.size()));
    };
    const auto log_event = [&](double t, EventKind kind, std::string detail) {
        traj.events.push_back({t, kind, traj.times.size() - 1, std::move(detail)});
        if (traj.events.size() > options.max_events) {
            throw std::runtime_error("integrate: event limit exceeded (chattering?)");
        }
    };
    const auto finish = [&]() {
        if (options.candidate) attach_lyapunov(traj, *options.candidate);
    };

    Vector x = x0;
    double t = t0;
    Mode mode;

    // Tries to add each candidate surface to the sliding set at (x, t).
    const auto try_enter = [&](const std::vector<std::size_t>& candidates, std::vector<std::size_t> sliding) {
        std::vector<std::size_t> entered;
        for (std::size_t i : candidates) {
            if (std::find(sliding.begin(), sliding.end(), i) != sliding.end()) continue;
            std::vector<std::size_t> trial = sliding;
            trial.push_back(i);
            const Mode m = eng.make_mode(x, t, trial, Vector());
            const SideSpeeds sp = eng.speeds(eng.project(x, t, m.sliding), t, m);
            const auto pos = static_cast<std::size_t>(std::find(m.sliding.begin(), m.sliding.end(), i) - m.sliding.begin());
            const double ap = sp.a_plus[pos];
            const double am = sp.a_minus[pos];
            const double tol = speed_tol(ap, am);
            if (std::abs(am - ap) <= tol && std::abs(am) <= tol) {
                throw DegenerateSliding("degenerate sliding on surface '" + rule.surfaces[i].label + "'");
            }
            if (am >= -tol && ap <= tol && am - ap > 0.0) {
                sliding = trial;
                entered.push_back(i);
            }
        }
        return std::make_pair(sliding, entered);
    };

    record(t, x);
    if (pieces) {
        std::vector<std::size_t> sliding;
        if (sliding_rule) {
            std::vector<std::size_t> on;
            for (std::size_t i = 0; i < rule.surfaces.size(); ++i) {
                if (std::abs(rule.surfaces[i].value(x, t)) <= 1e-12 * (1.0 + x.norm())) on.push_back(i);
            }
            auto [s, entered] = try_enter(on, {});
            sliding = s;
            if (!sliding.empty()) x = eng.project(x, t, sliding);
            traj.states.back() = x;
            for (std::size_t i : entered) log_event(t, EventKind::slide_enter, rule.surfaces[i].label);
        }
        mode = eng.make_mode(x, t, sliding, Vector());
    }

    const double t_eps = 1e-12 * std::max(1.0, std::abs(t_final));
    const double bisect_tol = dt * 1e-3;

    while (t < t_final - t_eps) {
        // Leave any surface whose sides no longer both point inward.
        if (pieces && !mode.sliding.empty()) {
            const SideSpeeds sp = eng.speeds(x, t, mode);
            std::vector<std::size_t> keep;
            Vector hint = Vector::Zero(x.size());
            std::vector<std::size_t> left;
            for (std::size_t k = 0; k < mode.sliding.size(); ++k) {
                const double tol = speed_tol(sp.a_plus[k], sp.a_minus[k]);
                const std::size_t i = mode.sliding[k];
                if (sp.a_plus[k] > tol) {
                    hint += Engine::probe_eps(x) * eng.unit_normal(i, x, t);
                    left.push_back(i);
                } else if (sp.a_minus[k] < -tol) {
                    hint -= Engine::probe_eps(x) * eng.unit_normal(i, x, t);
                    left.push_back(i);
                } else {
                    keep.push_back(i);
                }
            }
            if (!left.empty()) {
                mode = eng.make_mode(x, t, keep, hint);
                for (std::size_t i : left) log_event(t, EventKind::slide_exit, rule.surfaces[i].label);
            }
        }

        traj.velocities.back() = eng.rhs(x, t, mode);
        const double h = std::min(dt, t_final - t);
        const auto post = [&](const Vector& y, double ty) {
            return mode.sliding.empty() ? y : eng.project(y, ty, mode.sliding);
        };

        Vector x_new = post(eng.advance(x, t, h, mode), t + h);
        if (!x_new.allFinite() || x_new.norm() > options.blowup_cap) {
            finish();
            throw FiniteEscape("finite escape suspected near t=" + std::to_string(t + h), std::move(traj));
        }

        if (!pieces || eng.same_mode(x_new, t + h, mode)) {
            x = std::move(x_new);
            t = t_final - t - h <= t_eps ? t_final : t + h;
            record(t, x);
            continue;
        }

        // A piece boundary was crossed within the step: bisect on the step length.
        double lo = 0.0;
        double hi = h;
        while (hi - lo > bisect_tol) {
            const double mid = 0.5 * (lo + hi);
            if (eng.same_mode(post(eng.advance(x, t, mid, mode), t + mid), t + mid, mode)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const Vector x_prev = x;
        x = post(eng.advance(x, t, hi, mode), t + hi);
        t = t_final - t - hi <= t_eps ? t_final : t + hi;
        record(t, x);

        std::vector<std::size_t> sliding = mode.sliding;
        std::vector<std::size_t> entered;
        if (sliding_rule) {
            std::vector<std::size_t> crossed;
            for (std::size_t i = 0; i < rule.surfaces.size(); ++i) {
                if (std::find(sliding.begin(), sliding.end(), i) != sliding.end()) continue;
                const double s0 = rule.surfaces[i].value(x_prev, t - hi);
                const double s1 = rule.surfaces[i].value(x, t);
                if (s0 * s1 <= 0.0) crossed.push_back(i);
            }
            auto [s, e] = try_enter(crossed, sliding);
            sliding = s;
            entered = e;
            if (!entered.empty()) {
                x = eng.project(x, t, sliding);
                traj.states.back() = x;
            }
        }
        mode = eng.make_mode(x, t, sliding, Vector());
        if (entered.empty()) {
            log_event(t, EventKind::switching, f.pieces()[mode.piece].label);
        } else {
            for (std::size_t i : entered) log_event(t, EventKind::slide_enter, rule.surfaces[i].label);
        }
    }
    traj.velocities.back() = eng.rhs(x, t, mode);
    finish();
    return traj;
}

void attach_lyapunov(Trajectory& traj, const LyapunovCandidate& V)
{
    traj.V_values.resize(traj.size());
    traj.W_values.resize(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        traj.V_values[k] = V.value(traj.states[k], traj.times[k]);
        traj.W_values[k] = V.W(traj.states[k], traj.times[k]);
    }
}

MonitorReport monitor(const Trajectory& traj, const LyapunovCandidate& V)
{
    MonitorReport rep;
    if (traj.size() == 0) return rep;
    std::vector<double> v(traj.size());
    std::vector<double> w(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        require_dim(traj.states[k].size(), V.dim_state, "monitor");
        v[k] = V.value(traj.states[k], traj.times[k]);
        w[k] = V.W(traj.states[k], traj.times[k]);
    }
    double max_dt = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        max_dt = std::max(max_dt, traj.times[k] - traj.times[k - 1]);
        rep.max_uptick = std::max(rep.max_uptick, v[k] - v[k - 1]);
        rep.W_integral += 0.5 * (w[k] + w[k - 1]) * (traj.times[k] - traj.times[k - 1]);
    }
    rep.tol_up = 1e-6 + 10.0 * max_dt * max_dt;
    rep.nonincreasing = rep.max_uptick <= rep.tol_up;
    const double t0 = traj.times.front();
    const double t1 = traj.times.back();
    const double tail_start = t0 + 0.9 * (t1 - t0) - 1e-9 * (t1 - t0);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] >= tail_start) rep.W_tail = std::max(rep.W_tail, w[k]);
    }
    rep.V_initial = v.front();
    rep.V_final = v.back();
    return rep;
}

} // namespace inclusion_lab
