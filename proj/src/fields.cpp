#include "inclusion_lab/fields.hpp"

#include "inclusion_lab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

namespace inclusion_lab {

namespace {

void require_positive_delta(double delta, std::size_t n_samples, const char* what)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument(std::string(what) + ": delta must be positive");
    }
    if (n_samples == 0) throw std::invalid_argument(std::string(what) + ": n_samples must be >= 1");
}

std::string describe_point(const Vector& x, double t)
{
    std::ostringstream os;
    os.precision(17);
    os << "x=[";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
    os << "], t=" << t;
    return os.str();
}

} // namespace

Vector SmoothField::operator()(const Vector& x, double t) const
{
    Vector v = eval(x, t);
    if (v.size() != dim_state) throw std::invalid_argument("SmoothField: output has wrong dimension");
    if (!v.allFinite()) throw std::domain_error("SmoothField: non-finite value at " + describe_point(x, t));
    return v;
}

PiecewiseField::PiecewiseField(Eigen::Index dim, std::vector<Piece> pieces, std::vector<Predicate> null_sets)
    : dim_(dim), pieces_(std::move(pieces)), null_sets_(std::move(null_sets))
{
    if (dim_ <= 0) throw std::invalid_argument("PiecewiseField: dimension must be positive");
    if (pieces_.empty()) throw std::invalid_argument("PiecewiseField: no pieces");
    for (const auto& p : pieces_) {
        if (!p.region || !p.field.eval) throw std::invalid_argument("PiecewiseField: incomplete piece");
        require_dim(p.field.dim_state, dim_, "PiecewiseField");
    }
}

PiecewiseField PiecewiseField::from_smooth(SmoothField f, std::string label)
{
    const Eigen::Index dim = f.dim_state;
    Piece piece{std::move(label), [](const Vector&, double) { return true; }, std::move(f), {}};
    return PiecewiseField(dim, {std::move(piece)});
}

std::size_t PiecewiseField::locate(const Vector& x, double t) const
{
    require_dim(x.size(), dim_, "PiecewiseField::locate");
    if (locator_) return locator_(x, t);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (pieces_[i].region(x, t)) return i;
    }
    throw CoverageViolated("coverage violated: no piece contains " + describe_point(x, t));
}

Vector PiecewiseField::eval(const Vector& x, double t) const { return eval_piece(locate(x, t), x, t); }

Vector PiecewiseField::eval_piece(std::size_t piece, const Vector& x, double t) const
{
    return pieces_.at(piece).field(x, t);
}

bool PiecewiseField::in_null_set(const Vector& x, double t) const
{
    return std::any_of(null_sets_.begin(), null_sets_.end(), [&](const Predicate& p) { return p(x, t); });
}

SwitchingSignal SwitchingSignal::constant(int index)
{
    SwitchingSignal s;
    s.eval = [index](const Vector&, double) { return index; };
    s.universe = {true, 1, "constant"};
    return s;
}

PiecewiseField assemble_switched(const SubsystemFamily& subfields, const SwitchingSignal& rho)
{
    if (subfields.empty()) throw std::invalid_argument("assemble_switched: empty family");
    if (!rho.eval) throw std::invalid_argument("assemble_switched: switching signal has no evaluator");
    const Eigen::Index dim = subfields.begin()->second.dim();

    std::vector<PiecewiseField::Piece> pieces;
    std::vector<Predicate> null_sets;
    auto offsets = std::make_shared<std::map<int, std::size_t>>();
    for (const auto& [sigma, sub] : subfields) {
        require_dim(sub.dim(), dim, "assemble_switched");
        (*offsets)[sigma] = pieces.size();
        for (const auto& p : sub.pieces()) {
            PiecewiseField::Piece piece = p;
            piece.label = std::to_string(sigma) + ":" + p.label;
            piece.region = [rho_eval = rho.eval, sigma = sigma, region = p.region](const Vector& x, double t) {
                return rho_eval(x, t) == sigma && region(x, t);
            };
            if (p.essentially_active) {
                // The author's test is for the subsystem alone; switching may
                // still remove the piece, so fall back to probing.
                piece.essentially_active = {};
            }
            pieces.push_back(std::move(piece));
        }
        null_sets.insert(null_sets.end(), sub.null_sets().begin(), sub.null_sets().end());
    }
    null_sets.insert(null_sets.end(), rho.boundaries.begin(), rho.boundaries.end());

    PiecewiseField out(dim, std::move(pieces), std::move(null_sets));
    out.set_locator([family = std::make_shared<SubsystemFamily>(subfields), offsets,
                     rho_eval = rho.eval](const Vector& x, double t) -> std::size_t {
        const int sigma = rho_eval(x, t);
        const auto it = family->find(sigma);
        if (it == family->end()) {
            throw UnknownIndex("switching signal returned unknown index " + std::to_string(sigma) + " at "
                               + describe_point(x, t));
        }
        return offsets->at(sigma) + it->second.locate(x, t);
    });
    return out;
}

Polytope krasovskii_estimate(const PiecewiseField& f, const Vector& x, double t, double delta,
                             std::size_t n_samples, std::uint64_t seed)
{
    require_positive_delta(delta, n_samples, "krasovskii_estimate");
    require_dim(x.size(), f.dim(), "krasovskii_estimate");
    require_finite(x, "krasovskii_estimate");
    std::vector<Vector> values;
    values.reserve(n_samples + 1);
    values.push_back(f.eval(x, t));
    BallSampler sampler(x, delta, seed);
    for (std::size_t i = 0; i < n_samples; ++i) values.push_back(f.eval(sampler.next(), t));
    return Polytope(std::move(values));
}

Polytope filippov_estimate(const PiecewiseField& f, const Vector& x, double t, double delta,
                           std::size_t n_samples, std::uint64_t seed)
{
    require_positive_delta(delta, n_samples, "filippov_estimate");
    require_dim(x.size(), f.dim(), "filippov_estimate");
    require_finite(x, "filippov_estimate");
    constexpr int kMaxRedraws = 100;

    std::vector<Vector> values;
    values.reserve(n_samples);
    BallSampler sampler(x, delta, seed);
    std::size_t draws = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
            const Vector y = sampler.next();
            ++draws;
            if (f.in_null_set(y, t)) {
                ++hits;
                continue;
            }
            values.push_back(f.eval(y, t));
            break;
        }
    }
    if (2 * hits > draws || values.empty()) {
        throw NullSetNotNegligible("null-set predicate not measure-zero: " + std::to_string(hits) + " of "
                                   + std::to_string(draws) + " draws rejected near " + describe_point(x, t));
    }
    return Polytope(std::move(values));
}

ScheduledEstimate krasovskii_schedule(const PiecewiseField& f, const Vector& x, double t,
                                      const std::vector<double>& deltas, std::size_t n_samples,
                                      std::uint64_t seed)
{
    if (deltas.empty()) throw std::invalid_argument("krasovskii_schedule: empty schedule");
    std::vector<double> sorted = deltas;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::vector<ScheduleEntry> diag;
    std::optional<Polytope> last;
    for (double d : sorted) {
        Polytope est = krasovskii_estimate(f, x, t, d, n_samples, seed);
        diag.push_back({d, est.diameter()});
        last = std::move(est);
    }
    return {std::move(*last), std::move(diag)};
}

std::vector<std::size_t> essentially_active_pieces(const PiecewiseField& f, const Vector& x, double t,
                                                   double delta)
{
    if (!(delta > 0.0)) throw std::invalid_argument("essentially_active_pieces: delta must be positive");
    require_dim(x.size(), f.dim(), "essentially_active_pieces");
    constexpr std::size_t kProbes = 64;

    std::vector<Vector> probes;
    for (auto& p : halton_ball(x, 0.5 * delta, kProbes)) {
        if (!f.in_null_set(p, t)) probes.push_back(std::move(p));
    }

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < f.pieces().size(); ++i) {
        const auto& piece = f.pieces()[i];
        const bool hit = piece.essentially_active
                             ? piece.essentially_active(x, t)
                             : std::any_of(probes.begin(), probes.end(),
                                           [&](const Vector& p) { return piece.region(p, t); });
        if (hit) active.push_back(i);
    }
    return active;
}

Polytope analytic_regularization(const PiecewiseField& f, const Vector& x, double t, double delta)
{
    const auto active = essentially_active_pieces(f, x, t, delta);
    if (active.empty()) {
        throw CoverageViolated("coverage violated: no essentially active piece at " + describe_point(x, t));
    }
    std::vector<Vector> values;
    values.reserve(active.size());
    for (std::size_t i : active) values.push_back(f.eval_piece(i, x, t));
    return Polytope(std::move(values));
}

ContainmentReport containment_check(const SubsystemFamily& subfields, const SwitchingSignal& rho,
                                    const Vector& x, double t, const ContainmentOptions& options)
{
    require_positive_delta(options.delta, options.n_samples, "containment_check");
    if (!(options.fine_ratio > 0.0 && options.fine_ratio <= 1.0)) {
        throw std::invalid_argument("containment_check: fine_ratio must lie in (0, 1]");
    }
    const PiecewiseField assembled = assemble_switched(subfields, rho);
    const double fine = options.delta * options.fine_ratio;
    const bool filippov = options.kind == Regularization::filippov;

    const auto estimate = [&](const PiecewiseField& f) {
        return filippov ? filippov_estimate(f, x, t, fine, options.n_samples, options.seed)
                        : krasovskii_estimate(f, x, t, fine, options.n_samples, options.seed);
    };

    // Indices attained on B(x, delta). Filippov ignores what happens on null sets.
    std::set<int> attained;
    if (!filippov || !assembled.in_null_set(x, t)) attained.insert(rho(x, t));
    for (const auto& y : sample_ball(x, options.delta, options.n_samples, options.seed)) {
        if (filippov && assembled.in_null_set(y, t)) continue;
        attained.insert(rho(y, t));
    }
    if (attained.empty()) attained.insert(rho(x, t));

    Polytope K = estimate(assembled);
    std::vector<std::pair<int, Polytope>> parts;
    std::vector<Polytope> hulls;
    for (int sigma : attained) {
        const auto it = subfields.find(sigma);
        if (it == subfields.end()) {
            throw UnknownIndex("switching signal returned unknown index " + std::to_string(sigma));
        }
        Polytope est = estimate(it->second);
        hulls.push_back(est);
        parts.emplace_back(sigma, std::move(est));
    }
    Polytope U = union_hull(hulls);

    // The smallest admissible inflation is the largest vertex-to-hull
    // distance, since an inflated convex set contains co(K) iff it contains
    // K's vertices.
    const double needed = excess(K, U);
    return ContainmentReport{needed <= options.tol,
                             needed,
                             fine,
                             std::vector<int>(attained.begin(), attained.end()),
                             std::move(K),
                             std::move(parts),
                             std::move(U)};
}

ProbeReport assumption_probe(const SwitchingSignal& rho, const Vector& x, double t,
                             const std::vector<double>& deltas, std::size_t n_samples, std::size_t cap,
                             std::uint64_t seed)
{
    ProbeReport report;
    report.cap = cap;
    report.note = "empirical: counts distinct indices among sampled points; not a proof of local finiteness";
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        const double delta = deltas[k];
        if (!(delta > 0.0)) throw std::invalid_argument("assumption_probe: deltas must be positive");
        if (k > 0 && delta >= deltas[k - 1]) throw std::invalid_argument("assumption_probe: deltas must decrease");

        std::set<int> seen{rho(x, t)};
        BallSampler sampler(x, delta, seed + k);
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL + k));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t i = 0; i < n_samples; ++i) {
            seen.insert(rho(sampler.next(), t));
            // Log-radial companion sample: direction from the ball stream,
            // radius spread evenly over binary orders of magnitude.
            Vector dir = sampler.next_unit();
            const double nrm = dir.norm();
            if (nrm > 0.0) dir /= nrm;
            const double radius = std::ldexp(delta, -static_cast<int>(std::floor(unif(rng) * 1100.0)));
            seen.insert(rho(x + radius * dir, t));
        }
        report.deltas.push_back(delta);
        report.index_counts.push_back(seen.size());
    }
    for (std::size_t k = 0; k < report.deltas.size(); ++k) {
        if (report.index_counts[k] < cap) {
            report.finite_at = report.deltas[k];
            break;
        }
    }
    return report;
}

} // namespace inclusion_lab
