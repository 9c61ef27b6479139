#include "metasense/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace metasense {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x (x - beta*stroke) (x - stroke), the uncalibrated cubic.
double shape(const CellParams& c, double x)
{
    return x * (x - c.unstable_fraction * c.stroke) * (x - c.stroke);
}

// Critical points of the cubic, ascending.
std::pair<double, double> critical_points(const CellParams& c)
{
    const double b = c.unstable_fraction;
    const double r = std::sqrt(1.0 - b + b * b);
    return {c.stroke * (1.0 + b - r) / 3.0, c.stroke * (1.0 + b + r) / 3.0};
}

// Safeguarded Newton on a monotone increasing function g over [lo, hi] with
// g(lo) <= 0 <= g(hi). Falls back to bisection whenever the Newton step
// leaves the bracket or the slope is not positive.
template <class Fn, class Slope>
double bracketed_newton(Fn g, Slope dg, double lo, double hi, double tol, double gtol, int max_iter)
{
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        const double gx = g(x);
        if (std::abs(gx) <= gtol)
            return x;
        if (gx < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= tol || !(0.5 * (lo + hi) > lo && 0.5 * (lo + hi) < hi))
            return 0.5 * (lo + hi);

        const double slope = dg(x);
        double next = (slope > 0.0 && std::isfinite(slope)) ? x - gx / slope : lo - 1.0;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 0.25 * tol)
            return next;
        x = next;
    }
    return x;
}

bool is_stable(Branch b) { return b == Branch::ClosedRising || b == Branch::OpenRising; }

void check_assignment(std::span<const CellParams> cells, std::span<const Branch> branch)
{
    if (cells.size() != branch.size())
        throw std::invalid_argument("branch assignment size does not match cell count");
    if (cells.empty())
        throw std::invalid_argument("chain needs at least one cell");
    for (Branch b : branch)
        if (!is_stable(b))
            throw std::invalid_argument("chain states accept only stable branches");
}

double sum_on_branches(std::span<const CellParams> cells, std::span<const Branch> branch, double F,
                       const SolverOptions& opts)
{
    double total = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i)
        total += invert_branch(cells[i], branch[i], F, opts);
    return total;
}

}  // namespace

std::string_view to_string(Branch b)
{
    switch (b) {
    case Branch::ClosedRising: return "CLOSED_RISING";
    case Branch::Unstable: return "UNSTABLE";
    case Branch::OpenRising: return "OPEN_RISING";
    }
    return "?";
}

std::string_view to_string(Direction d)
{
    return d == Direction::Deploy ? "DEPLOY" : "COLLAPSE";
}

Direction direction_from_string(std::string_view s)
{
    if (s == "DEPLOY")
        return Direction::Deploy;
    if (s == "COLLAPSE")
        return Direction::Collapse;
    throw std::invalid_argument("unknown transition direction: " + std::string(s));
}

void CellParams::validate() const
{
    if (!(stroke > 0.0))
        throw std::invalid_argument("CellParams: stroke must be positive");
    if (!(unstable_fraction > 0.0 && unstable_fraction < 1.0))
        throw std::invalid_argument("CellParams: unstable_fraction must lie in (0, 1)");
    if (!(peak_force > 0.0))
        throw std::invalid_argument("CellParams: peak_force must be positive");
    if (!(effective_peak() > 0.0))
        throw std::invalid_argument("CellParams: effective peak force must be positive");
}

ChainState ChainState::at_rest(std::size_t n)
{
    ChainState s;
    s.x.assign(n, 0.0);
    s.branch.assign(n, Branch::ClosedRising);
    return s;
}

double force_scale(const CellParams& c)
{
    c.validate();
    return c.effective_peak() / shape(c, critical_points(c).first);
}

double cell_force(const CellParams& c, double x)
{
    return force_scale(c) * shape(c, x);
}

double cell_stiffness(const CellParams& c, double x)
{
    const double b = c.unstable_fraction;
    const double d = c.stroke;
    return force_scale(c) * (3.0 * x * x - 2.0 * (1.0 + b) * d * x + b * d * d);
}

double cell_energy(const CellParams& c, double x)
{
    const double b = c.unstable_fraction;
    const double d = c.stroke;
    const double x2 = x * x;
    return force_scale(c) * (0.25 * x2 * x2 - (1.0 + b) * d * x2 * x / 3.0 + 0.5 * b * d * d * x2);
}

BranchLimits branch_limits(const CellParams& c)
{
    const auto [xp, xv] = critical_points(c);
    return {xp, xv, cell_force(c, xp), cell_force(c, xv)};
}

double invert_branch(const CellParams& c, Branch b, double F, const SolverOptions& opts)
{
    if (b == Branch::Unstable)
        throw std::invalid_argument("invert_branch: the unstable branch has no monotone inverse");

    const BranchLimits lim = branch_limits(c);
    const double a = force_scale(c);
    const double slack = 1e-12 * std::max(1.0, std::abs(F));
    auto residual = [&](double x) { return a * shape(c, x) - F; };
    auto slope = [&](double x) { return cell_stiffness(c, x); };
    const double tol = 1e-6 * opts.tol_x;
    if (F == 0.0)
        return b == Branch::ClosedRising ? 0.0 : c.stroke;

    if (b == Branch::ClosedRising) {
        if (F > lim.F_peak + slack)
            throw std::out_of_range("invert_branch: force " + std::to_string(F)
                                    + " N exceeds the closed-branch peak " + std::to_string(lim.F_peak));
        if (F >= lim.F_peak)
            return lim.x_peak;
        double lo = -c.stroke;
        for (int i = 0; i < opts.max_iter && residual(lo) > 0.0; ++i)
            lo *= 2.0;
        return bracketed_newton(residual, slope, lo, lim.x_peak, tol, 0.0, opts.max_iter);
    }

    if (F < lim.F_valley - slack)
        throw std::out_of_range("invert_branch: force " + std::to_string(F)
                                + " N below the open-branch valley " + std::to_string(lim.F_valley));
    if (F <= lim.F_valley)
        return lim.x_valley;
    double hi = 2.0 * c.stroke;
    for (int i = 0; i < opts.max_iter && residual(hi) < 0.0; ++i)
        hi *= 2.0;
    return bracketed_newton(residual, slope, lim.x_valley, hi, tol, 0.0, opts.max_iter);
}

namespace {

void check_state(std::span<const CellParams> cells, const ChainState& state)
{
    if (cells.empty())
        throw std::invalid_argument("chain needs at least one cell");
    if (state.branch.size() != cells.size() || state.x.size() != cells.size())
        throw std::invalid_argument("chain state size does not match cell count");
    if (std::count(state.branch.begin(), state.branch.end(), Branch::Unstable) > 1)
        throw std::invalid_argument("chain state has more than one cell on an unstable branch");
}

// Cell that leaves its branch when the stable span is exceeded.
std::size_t limiting_cell(std::span<const CellParams> cells, std::span<const Branch> branch, bool loading,
                          std::size_t skip = static_cast<std::size_t>(-1))
{
    const Branch from = loading ? Branch::ClosedRising : Branch::OpenRising;
    std::size_t pick = cells.size();
    double best = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (branch[i] != from || i == skip)
            continue;
        const BranchLimits lim = branch_limits(cells[i]);
        const double f = loading ? lim.F_peak : -lim.F_valley;
        if (pick == cells.size() || f < best || (f == best && cells[i].id < cells[pick].id)) {
            pick = i;
            best = f;
        }
    }
    if (pick == cells.size())
        throw UnresolvedSnapError("step_load: no cell left to change state");
    return pick;
}

enum class EndKind { Branch, Fold, Blocked };

struct TransitEnd {
    double x_u = 0.0;
    double X = 0.0;
    EndKind kind = EndKind::Branch;
};

struct TransitSegment {
    TransitEnd lo;
    TransitEnd hi;
};

// Chain with cell u on its falling branch, parametrised by u's displacement.
// Along the branch X grows with x_u wherever the total compliance is
// negative; that stretch is the stable part of the transition.
class Transit {
public:
    Transit(std::span<const CellParams> cells, std::span<const Branch> branch, std::size_t u,
            const SolverOptions& opts)
        : cells_(cells), branch_(branch), u_(u), opts_(opts), lim_(branch_limits(cells[u]))
    {
        double f_cap = kInf;
        double f_floor = -kInf;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == u)
                continue;
            const BranchLimits l = branch_limits(cells[i]);
            if (branch[i] == Branch::ClosedRising)
                f_cap = std::min(f_cap, l.F_peak);
            else
                f_floor = std::max(f_floor, l.F_valley);
        }
        lo_ = {lim_.x_peak, 0.0, EndKind::Branch};
        hi_ = {lim_.x_valley, 0.0, EndKind::Branch};
        if (f_cap < lim_.F_peak)
            lo_ = {invert_unstable(cells[u], f_cap, opts), 0.0, EndKind::Blocked};
        if (f_floor > lim_.F_valley)
            hi_ = {invert_unstable(cells[u], f_floor, opts), 0.0, EndKind::Blocked};
        if (hi_.x_u < lo_.x_u)
            throw UnresolvedSnapError("step_load: cell " + std::to_string(cells[u].id)
                                      + " cannot leave its branch without a second cell doing so");
    }

    std::vector<double> positions(double x_u) const
    {
        const double F = cell_force(cells_[u_], x_u);
        std::vector<double> x(cells_.size());
        for (std::size_t i = 0; i < cells_.size(); ++i)
            x[i] = i == u_ ? x_u : invert_branch(cells_[i], branch_[i], F, opts_);
        return x;
    }

    double total(double x_u) const
    {
        double X = 0.0;
        for (double v : positions(x_u))
            X += v;
        return X;
    }

    double compliance(double x_u) const
    {
        const std::vector<double> x = positions(x_u);
        double c = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            c += 1.0 / cell_stiffness(cells_[i], x[i]);
        return c;
    }

    // Stable stretch around x_cur: bounded by the branch ends, a blocking
    // cell, or the nearest fold on either side.
    TransitSegment segment(double x_cur) const
    {
        TransitSegment seg{scan_to(x_cur, lo_), scan_to(x_cur, hi_)};
        seg.lo.X = total(seg.lo.x_u);
        seg.hi.X = total(seg.hi.x_u);
        return seg;
    }

    // Where the chain lands on this branch after a fold at X_fold, moving
    // away from the fold towards the upper or lower end. None if X never
    // returns to X_fold before that end.
    std::optional<double> landing(double x_fold, double X_fold, bool upper) const
    {
        const double end = upper ? hi_.x_u : lo_.x_u;
        auto past = [&](double x_u) { return upper ? total(x_u) >= X_fold : total(x_u) <= X_fold; };
        double prev = x_fold;
        for (int j = 1; j <= kScan; ++j) {
            const double probe = x_fold + (end - x_fold) * j / kScan;
            if (past(probe)) {
                double a = prev;
                double b = probe;
                for (int it = 0; it < 200 && std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
                    const double m = 0.5 * (a + b);
                    (past(m) ? b : a) = m;
                }
                return b;
            }
            prev = probe;
        }
        return std::nullopt;
    }

    ChainState solve(const TransitSegment& seg, double X, Branch origin) const
    {
        auto excess = [&](double x_u) { return total(x_u) - X; };
        auto slope = [&](double x_u) { return cell_stiffness(cells_[u_], x_u) * compliance(x_u); };
        double x_u = seg.lo.x_u;
        if (X >= seg.hi.X)
            x_u = seg.hi.x_u;
        else if (X > seg.lo.X)
            x_u = bracketed_newton(excess, slope, seg.lo.x_u, seg.hi.x_u, 1e-6 * opts_.tol_x, 1e-3 * opts_.tol_x,
                                   opts_.max_iter);
        ChainState s;
        s.X = X;
        s.x = positions(x_u);
        s.branch.assign(branch_.begin(), branch_.end());
        s.F = cell_force(cells_[u_], x_u);
        s.transit_origin = origin;
        return s;
    }

private:
    static constexpr int kScan = 256;

    TransitEnd scan_to(double x_cur, TransitEnd end) const
    {
        const double span = end.x_u - x_cur;
        double inside = x_cur;
        for (int j = 1; j < kScan; ++j) {
            const double probe = x_cur + span * j / kScan;
            if (!(compliance(probe) < 0.0)) {
                double a = inside;
                double b = probe;
                for (int it = 0; it < 200 && std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
                    const double m = 0.5 * (a + b);
                    (compliance(m) < 0.0 ? a : b) = m;
                }
                return {a, 0.0, EndKind::Fold};
            }
            inside = probe;
        }
        return end;
    }

    std::span<const CellParams> cells_;
    std::span<const Branch> branch_;
    std::size_t u_;
    SolverOptions opts_;
    BranchLimits lim_;
    TransitEnd lo_;
    TransitEnd hi_;
};

}  // namespace

double invert_unstable(const CellParams& c, double F, const SolverOptions& opts)
{
    const BranchLimits lim = branch_limits(c);
    const double slack = 1e-12 * std::max(1.0, std::abs(F));
    if (F > lim.F_peak + slack || F < lim.F_valley - slack)
        throw std::out_of_range("invert_unstable: force " + std::to_string(F) + " N outside the falling branch");
    if (F >= lim.F_peak)
        return lim.x_peak;
    if (F <= lim.F_valley)
        return lim.x_valley;
    auto residual = [&](double x) { return F - cell_force(c, x); };
    auto slope = [&](double x) { return -cell_stiffness(c, x); };
    return bracketed_newton(residual, slope, lim.x_peak, lim.x_valley, 1e-6 * opts.tol_x, 0.0, opts.max_iter);
}

ReachableSpan reachable_span(std::span<const CellParams> cells, std::span<const Branch> branch,
                             const SolverOptions& opts)
{
    check_assignment(cells, branch);
    double f_max = kInf;
    double f_min = -kInf;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const BranchLimits lim = branch_limits(cells[i]);
        if (branch[i] == Branch::ClosedRising)
            f_max = std::min(f_max, lim.F_peak);
        else
            f_min = std::max(f_min, lim.F_valley);
    }
    ReachableSpan span{-kInf, kInf, f_min, f_max};
    if (std::isfinite(f_max))
        span.X_max = sum_on_branches(cells, branch, f_max, opts);
    if (std::isfinite(f_min))
        span.X_min = sum_on_branches(cells, branch, f_min, opts);
    return span;
}

std::optional<ChainState> solve_chain(std::span<const CellParams> cells, std::span<const Branch> branch,
                                      double X, const SolverOptions& opts)
{
    const ReachableSpan span = reachable_span(cells, branch, opts);
    if (X > span.X_max || X < span.X_min)
        return std::nullopt;

    auto excess = [&](double F) { return sum_on_branches(cells, branch, F, opts) - X; };

    double f_hi = span.F_max;
    double f_lo = span.F_min;
    if (!std::isfinite(f_hi)) {
        f_hi = std::max(1.0, f_lo + 1.0);
        for (int i = 0; i < opts.max_iter && excess(f_hi) < 0.0; ++i)
            f_hi = 2.0 * f_hi;
    }
    if (!std::isfinite(f_lo)) {
        f_lo = std::min(-1.0, f_hi - 1.0);
        for (int i = 0; i < opts.max_iter && excess(f_lo) > 0.0; ++i)
            f_lo = 2.0 * f_lo;
    }

    ChainState state;
    state.X = X;
    state.branch.assign(branch.begin(), branch.end());
    state.x.resize(cells.size());

    // dX/dF of the series chain is the sum of cell compliances.
    auto compliance = [&](double F) {
        double total = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double k = cell_stiffness(cells[i], invert_branch(cells[i], branch[i], F, opts));
            if (!(k > 0.0))
                return kInf;
            total += 1.0 / k;
        }
        return total;
    };

    // Converge on the displacement residual; near limit points dX/dF is
    // unbounded so a force tolerance alone is not enough.
    const double x_tol = 1e-3 * opts.tol_x;
    double F = 0.0;
    if (f_lo <= 0.0 && f_hi >= 0.0 && excess(0.0) == 0.0)
        F = 0.0;
    else if (excess(f_hi) <= 0.0)
        F = f_hi;
    else if (excess(f_lo) >= 0.0)
        F = f_lo;
    else
        F = bracketed_newton(excess, compliance, f_lo, f_hi, 0.0, x_tol, opts.max_iter);

    state.F = F;
    for (std::size_t i = 0; i < cells.size(); ++i)
        state.x[i] = invert_branch(cells[i], branch[i], F, opts);
    return state;
}

double chain_energy(std::span<const CellParams> cells, std::span<const double> x)
{
    double e = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i)
        e += cell_energy(cells[i], x[i]);
    return e;
}

StepResult step_load(const ChainState& state, std::span<const CellParams> cells, double X_new,
                     std::size_t step_index, const SolverOptions& opts)
{
    check_state(cells, state);
    if (std::abs(X_new - state.X) > opts.max_step * (1.0 + 1e-12))
        throw std::invalid_argument("step_load: displacement increment exceeds max_step");

    StepResult result{state, {}};
    if (X_new == state.X)
        return result;

    const bool loading = X_new > state.X;
    std::vector<Branch> branch = state.branch;
    Branch origin = state.transit_origin;
    bool announced = state.transit_announced;
    double x_now = 0.0;
    if (const auto it = std::find(branch.begin(), branch.end(), Branch::Unstable); it != branch.end())
        x_now = state.x[static_cast<std::size_t>(it - branch.begin())];

    // A move towards the branch the cell left cancels an announced
    // transition; a move away from it announces one. Either emits an event.
    auto announce = [&](std::size_t u, bool upper, double X_at, double F_at, double dissipated) {
        const Branch toward = upper ? Branch::OpenRising : Branch::ClosedRising;
        if ((toward != origin) == announced)
            return;
        announced = !announced;
        TransitionEvent ev;
        ev.cell_id = cells[u].id;
        ev.direction = upper ? Direction::Deploy : Direction::Collapse;
        ev.X_at_event = X_at;
        ev.F_before = F_at;
        ev.step_index = step_index;
        ev.dissipated = dissipated;
        result.events.push_back(ev);
    };

    // Each pass either finishes, moves one cell onto or off its falling
    // branch, or jumps along it; the bound is generous.
    for (std::size_t pass = 0; pass <= 4 * cells.size() + 4; ++pass) {
        const auto unstable = std::find(branch.begin(), branch.end(), Branch::Unstable);
        if (unstable == branch.end()) {
            const ReachableSpan span = reachable_span(cells, branch, opts);
            const bool too_long = loading && X_new > span.X_max;
            const bool too_short = !loading && X_new < span.X_min;
            if (!too_long && !too_short) {
                auto solved = solve_chain(cells, branch, X_new, opts);
                if (!solved)
                    throw UnresolvedSnapError("step_load: no equilibrium at X = " + std::to_string(X_new));
                result.state = std::move(*solved);
                return result;
            }
            const std::size_t pick = limiting_cell(cells, branch, loading);
            origin = branch[pick];
            announced = false;
            const BranchLimits lim = branch_limits(cells[pick]);
            x_now = origin == Branch::ClosedRising ? lim.x_peak : lim.x_valley;
            branch[pick] = Branch::Unstable;
            continue;
        }

        const auto u = static_cast<std::size_t>(unstable - branch.begin());
        const Transit tr(cells, branch, u, opts);
        const TransitSegment seg = tr.segment(x_now);
        if (X_new >= seg.lo.X && X_new <= seg.hi.X) {
            result.state = tr.solve(seg, X_new, origin);
            result.state.transit_announced = announced;
            return result;
        }

        const bool upper = X_new > seg.hi.X;
        const TransitEnd& end = upper ? seg.hi : seg.lo;
        if (end.kind == EndKind::Blocked)
            throw UnresolvedSnapError("step_load: cell " + std::to_string(cells[u].id)
                                      + " transition blocked by a second limiting cell at X = "
                                      + std::to_string(end.X));
        const std::vector<double> x_end = tr.positions(end.x_u);
        const double F_end = cell_force(cells[u], end.x_u);
        const double E_end = chain_energy(cells, x_end);

        if (end.kind == EndKind::Fold) {
            // The jump may land further along the same falling branch.
            if (const auto x_land = tr.landing(end.x_u, end.X, upper)) {
                announce(u, upper, end.X, F_end, E_end - chain_energy(cells, tr.positions(*x_land)));
                x_now = *x_land;
                continue;
            }
        }

        const Branch target = upper ? Branch::OpenRising : Branch::ClosedRising;
        branch[u] = target;
        double dissipated = 0.0;
        if (end.kind == EndKind::Fold) {
            if (const auto landed = solve_chain(cells, branch, end.X, opts)) {
                dissipated = E_end - chain_energy(cells, landed->x);
            } else {
                // The rest of the chain cannot take up the jump on its
                // current branches: the limiting neighbour is thrown onto
                // its own falling branch in the same snap.
                const ReachableSpan span = reachable_span(cells, branch, opts);
                const bool grow = end.X > span.X_max;
                const std::size_t j = limiting_cell(cells, branch, grow, u);
                const Branch j_origin = branch[j];
                const BranchLimits lj = branch_limits(cells[j]);
                branch[j] = Branch::Unstable;
                const Transit tj(cells, branch, j, opts);
                const TransitSegment sj = tj.segment(grow ? lj.x_peak : lj.x_valley);
                if (!(end.X >= sj.lo.X && end.X <= sj.hi.X))
                    throw UnresolvedSnapError("step_load: snap of cell " + std::to_string(cells[u].id)
                                              + " has no stable landing state at X = " + std::to_string(end.X));
                const ChainState swap = tj.solve(sj, end.X, j_origin);
                announce(u, upper, end.X, F_end, E_end - chain_energy(cells, swap.x));
                origin = j_origin;
                announced = false;
                x_now = swap.x[j];
                continue;
            }
        }
        announce(u, upper, end.X, F_end, dissipated);
        announced = false;
    }
    throw UnresolvedSnapError("step_load: transitions did not settle at X = " + std::to_string(X_new));
}

std::vector<double> discretize(const LoadProgram& program)
{
    if (!(program.dX > 0.0))
        throw std::invalid_argument("LoadProgram: dX must be positive");
    std::vector<double> xs{0.0};
    double start = 0.0;
    for (double target : program.waypoints) {
        const double length = std::abs(target - start);
        // Guard against 61.2 / 0.01 = 6120.000000000001 style rounding.
        const auto steps = static_cast<std::size_t>(std::ceil(length / program.dX - 1e-9));
        const double sign = target >= start ? 1.0 : -1.0;
        for (std::size_t k = 1; k <= steps; ++k)
            xs.push_back(k == steps ? target : start + sign * static_cast<double>(k) * program.dX);
        start = target;
    }
    return xs;
}

LoadRun run_load_program(std::span<const CellParams> cells, const LoadProgram& program,
                         const SolverOptions& opts)
{
    const std::vector<double> xs = discretize(program);
    SolverOptions step_opts = opts;
    step_opts.max_step = std::max(opts.max_step, program.dX);

    LoadRun run;
    run.samples.reserve(xs.size());
    ChainState state = ChainState::at_rest(cells.size());
    run.samples.push_back({0, state.X, state.F, state.x, state.branch});
    for (std::size_t k = 1; k < xs.size(); ++k) {
        StepResult r = step_load(state, cells, xs[k], k, step_opts);
        state = std::move(r.state);
        run.events.insert(run.events.end(), r.events.begin(), r.events.end());
        run.samples.push_back({k, state.X, state.F, state.x, state.branch});
    }
    return run;
}

std::vector<Equilibrium> brute_force_equilibria(std::span<const CellParams> cells, double X, int grid_n)
{
    if (cells.empty())
        throw std::invalid_argument("brute_force_equilibria: empty chain");
    if (grid_n < 2)
        throw std::invalid_argument("brute_force_equilibria: grid_n must be at least 2");
    const std::size_t n = cells.size();
    const std::size_t free_axes = n - 1;

    std::vector<double> lower(n);
    double lower_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lower[i] = -0.2 * cells[i].stroke;
        lower_sum += lower[i];
    }
    if (X < lower_sum)
        return {};
    if (free_axes == 0)
        return {{{X}, cell_energy(cells[0], X)}};

    double total = 1.0;
    for (std::size_t a = 0; a < free_axes; ++a)
        total *= grid_n;
    if (total > 5e7)
        throw std::length_error("brute_force_equilibria: grid of " + std::to_string(total) + " points is too large");

    std::vector<double> h(free_axes);
    for (std::size_t a = 0; a < free_axes; ++a) {
        const double upper = X - (lower_sum - lower[a]);
        h[a] = (upper - lower[a]) / (grid_n - 1);
    }

    const auto count = static_cast<std::size_t>(total);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> energy(count, nan);
    std::vector<int> idx(free_axes, 0);
    std::vector<double> x(n);

    auto point = [&](std::span<const int> at) {
        double used = 0.0;
        for (std::size_t a = 0; a < free_axes; ++a) {
            x[a] = lower[a] + at[a] * h[a];
            used += x[a];
        }
        x[n - 1] = X - used;
        return x[n - 1] >= lower[n - 1] - 1e-12 * std::max(1.0, std::abs(X));
    };
    auto flat = [&](std::span<const int> at) {
        std::size_t f = 0;
        for (std::size_t a = 0; a < free_axes; ++a)
            f = f * grid_n + at[a];
        return f;
    };

    for (std::size_t f = 0; f < count; ++f) {
        std::size_t rem = f;
        for (std::size_t a = free_axes; a-- > 0;) {
            idx[a] = static_cast<int>(rem % grid_n);
            rem /= grid_n;
        }
        if (point(idx))
            energy[f] = chain_energy(cells, x);
    }

    std::size_t neighbours = 1;
    for (std::size_t a = 0; a < free_axes; ++a)
        neighbours *= 3;

    std::vector<Equilibrium> minima;
    std::vector<int> nb(free_axes);
    for (std::size_t f = 0; f < count; ++f) {
        const double e = energy[f];
        if (std::isnan(e))
            continue;
        std::size_t rem = f;
        for (std::size_t a = free_axes; a-- > 0;) {
            idx[a] = static_cast<int>(rem % grid_n);
            rem /= grid_n;
        }
        bool is_min = true;
        for (std::size_t m = 0; m < neighbours && is_min; ++m) {
            std::size_t code = m;
            bool centre = true;
            for (std::size_t a = 0; a < free_axes; ++a) {
                const int off = static_cast<int>(code % 3) - 1;
                code /= 3;
                centre = centre && off == 0;
                nb[a] = idx[a] + off;
            }
            if (centre)
                continue;
            bool inside = true;
            for (std::size_t a = 0; a < free_axes; ++a)
                inside = inside && nb[a] >= 0 && nb[a] < grid_n;
            // Minima on the domain boundary are not equilibria.
            if (!inside) {
                is_min = false;
                break;
            }
            const double en = energy[flat(nb)];
            if (std::isnan(en) || en < e)
                is_min = false;
            // Plateaus: keep only the first point in flat order.
            if (en == e && flat(nb) < f)
                is_min = false;
        }
        if (is_min) {
            point(idx);
            minima.push_back({x, e});
        }
    }
    return minima;
}

}  // namespace metasense
