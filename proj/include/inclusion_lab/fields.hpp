#pragma once

// Vector fields, switching signals, switched assembly and numerical
// Krasovskii/Filippov regularization.
//
// Regularizations are defined as an intersection over shrinking balls; here
// they are estimated from samples in one ball B(x, delta). By nestedness of
// the hulls in delta, the estimate at the smallest delta of a schedule is the
// one to trust, and krasovskii_schedule() reports how the hull diameter moves
// with delta so convergence can be judged.

#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace inclusion_lab {

/// A field continuous in x (and measurable in t).
struct SmoothField {
    Eigen::Index dim_state = 0;
    VectorFn eval;

    Vector operator()(const Vector& x, double t) const;
};

/// Finite family of smooth fields, each valid on a region, plus declared
/// measure-zero sets (switching surfaces) excluded by Filippov sampling.
class PiecewiseField {
public:
    struct Piece {
        std::string label;
        Predicate region;
        SmoothField field;
        /// Optional author-supplied "region has interior points arbitrarily
        /// close to (x, t)" test. Empty means probe with low-discrepancy points.
        Predicate essentially_active;
    };

    using Locator = std::function<std::size_t(const Vector&, double)>;
    using LocalBound = std::function<double(const Vector& center, double radius)>;

    PiecewiseField(Eigen::Index dim, std::vector<Piece> pieces, std::vector<Predicate> null_sets = {});

    /// One piece covering everything.
    static PiecewiseField from_smooth(SmoothField f, std::string label = "f");

    Eigen::Index dim() const { return dim_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const std::vector<Predicate>& null_sets() const { return null_sets_; }

    /// Index of the piece whose region holds (x, t); the first match wins
    /// unless a locator has been installed. Throws CoverageViolated.
    std::size_t locate(const Vector& x, double t) const;

    Vector eval(const Vector& x, double t) const;
    Vector eval_piece(std::size_t piece, const Vector& x, double t) const;

    bool in_null_set(const Vector& x, double t) const;

    /// Fast dispatch replacing the linear region scan.
    void set_locator(Locator locator) { locator_ = std::move(locator); }

    /// Optional bound M(K) on |f| over B(center, radius).
    void set_local_bound(LocalBound bound) { local_bound_ = std::move(bound); }
    const LocalBound& local_bound() const { return local_bound_; }

private:
    Eigen::Index dim_;
    std::vector<Piece> pieces_;
    std::vector<Predicate> null_sets_;
    Locator locator_;
    LocalBound local_bound_;
};

struct IndexUniverse {
    bool finite = true;
    /// Number of indices (finite) or of the indices materialised (countable).
    std::size_t count = 1;
    std::string description;
};

struct SwitchingSignal {
    std::function<int(const Vector&, double)> eval;
    IndexUniverse universe;
    /// Declared switching boundaries; assumed measure zero.
    std::vector<Predicate> boundaries;

    int operator()(const Vector& x, double t) const { return eval(x, t); }

    static SwitchingSignal constant(int index);
};

using SubsystemFamily = std::map<int, PiecewiseField>;

/// f(x, t) = f_{rho(x, t)}(x, t). Null sets are the union of the subsystem
/// null sets and rho's declared boundaries. Throws UnknownIndex when rho
/// produces an index missing from the family.
PiecewiseField assemble_switched(const SubsystemFamily& subfields, const SwitchingSignal& rho);

/// co({f(y,t) : y sampled uniformly in B(x, delta)} u {f(x,t)}).
Polytope krasovskii_estimate(const PiecewiseField& f, const Vector& x, double t, double delta,
                             std::size_t n_samples, std::uint64_t seed);

/// Like krasovskii_estimate, without the centre and with samples on declared
/// null sets redrawn (up to 100 times each). Throws NullSetNotNegligible when
/// more than half of all draws land on null sets.
Polytope filippov_estimate(const PiecewiseField& f, const Vector& x, double t, double delta,
                           std::size_t n_samples, std::uint64_t seed);

struct ScheduleEntry {
    double delta;
    double diameter;
};

struct ScheduledEstimate {
    Polytope estimate;  // at the smallest delta
    std::vector<ScheduleEntry> diagnostics;
};

ScheduledEstimate krasovskii_schedule(const PiecewiseField& f, const Vector& x, double t,
                                      const std::vector<double>& deltas, std::size_t n_samples,
                                      std::uint64_t seed);

/// Pieces whose region has interior points near (x, t): the author-supplied
/// test if present, else any of 64 Halton points of B(x, delta/2) off all
/// null sets lies in the region.
std::vector<std::size_t> essentially_active_pieces(const PiecewiseField& f, const Vector& x, double t,
                                                   double delta);

/// co{field_i(x, t) : piece i essentially active}. Exact for fields whose
/// pieces extend continuously to the boundary. Throws CoverageViolated.
Polytope analytic_regularization(const PiecewiseField& f, const Vector& x, double t, double delta);

enum class Regularization { krasovskii, filippov };

struct ContainmentOptions {
    /// Neighbourhood on which the switching signal is sampled.
    double delta = 1e-3;
    std::size_t n_samples = 500;
    double tol = kDefaultTol;
    std::uint64_t seed = 0;
    /// Regularizations are estimated at delta * fine_ratio, the bottom of
    /// the delta schedule.
    double fine_ratio = 1e-9;
    Regularization kind = Regularization::krasovskii;
};

struct ContainmentReport {
    bool holds = false;
    double inflation_needed = 0.0;
    double fine_delta = 0.0;
    std::vector<int> attained;
    Polytope assembled_estimate;
    std::vector<std::pair<int, Polytope>> subsystem_estimates;
    Polytope union_estimate;
};

/// Tests K(x,t) within tol of co U_{sigma attained} K_sigma(x,t), where the
/// attained indices are those rho takes on B(x, delta).
ContainmentReport containment_check(const SubsystemFamily& subfields, const SwitchingSignal& rho,
                                    const Vector& x, double t, const ContainmentOptions& options = {});

struct ProbeReport {
    std::vector<double> deltas;
    std::vector<std::size_t> index_counts;
    std::optional<double> finite_at;
    std::size_t cap = 64;
    std::string note;
};

/// Empirical local-finiteness probe for a switching signal. Each ball is
/// sampled both uniformly and log-radially (radii down to delta * 2^-1100)
/// so that accumulations of switching regions at x show up as large counts.
ProbeReport assumption_probe(const SwitchingSignal& rho, const Vector& x, double t,
                             const std::vector<double>& deltas, std::size_t n_samples,
                             std::size_t cap = 64, std::uint64_t seed = 0);

} // namespace inclusion_lab
