#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace metasense {

// Lengths in mm, forces in N, energies in mJ (N*mm).

/// Reduced-order force law of one bistable cell:
///   F(x) = a * x * (x - beta*stroke) * (x - stroke)
/// with a > 0 chosen so the first (rising-branch) maximum equals
/// peak_force * (1 + imperfection).
struct CellParams {
    int id = 1;                        // 1-based cell index
    double stroke = 14.8;              // distance between the two stable states
    double unstable_fraction = 0.4;    // unstable root position / stroke
    double peak_force = 6.7;           // nominal peak force
    double imperfection = 0.0;         // multiplicative perturbation of peak_force

    double effective_peak() const { return peak_force * (1.0 + imperfection); }
    void validate() const;
};

enum class Branch { ClosedRising, Unstable, OpenRising };
enum class Direction { Deploy, Collapse };

std::string_view to_string(Branch b);
std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct SolverOptions {
    double tol_x = 1e-6;      // mm
    double tol_F = 1e-6;      // N
    int max_iter = 200;
    double max_step = 1.0;    // largest displacement increment accepted by step_load
};

/// At most one cell may sit on its Unstable branch. That happens while it
/// is between its two stable branches and the rest of the chain is stiff
/// enough to hold it there under displacement control.
struct ChainState {
    double X = 0.0;                 // imposed total displacement
    std::vector<double> x;          // per-cell displacement
    std::vector<Branch> branch;     // per-cell branch assignment
    double F = 0.0;                 // common series force
    Branch transit_origin = Branch::ClosedRising;   // branch the Unstable cell left, if any
    bool transit_announced = false; // its transition event has already been emitted

    /// All cells closed at X = 0.
    static ChainState at_rest(std::size_t n);
};

struct TransitionEvent {
    int cell_id = 0;
    Direction direction = Direction::Deploy;
    double X_at_event = 0.0;        // displacement where the cell reached its new branch
    double F_before = 0.0;          // chain force just before the jump
    std::size_t step_index = 0;
    double dissipated = 0.0;        // energy released by the snap (mJ)
};

struct BranchLimits {
    double x_peak;
    double x_valley;
    double F_peak;
    double F_valley;
};

/// Thrown when a transition cannot be resolved with a single transiting
/// cell, e.g. a snap with no landing state.
class UnresolvedSnapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scale a of the cubic after calibration.
double force_scale(const CellParams& c);
double cell_force(const CellParams& c, double x);
/// Slope dF/dx of the force law.
double cell_stiffness(const CellParams& c, double x);
/// Potential of cell_force with cell_energy(c, 0) = 0.
double cell_energy(const CellParams& c, double x);
BranchLimits branch_limits(const CellParams& c);

/// Displacement on branch b carrying force F. ClosedRising covers
/// (-inf, x_peak], OpenRising covers [x_valley, +inf).
double invert_branch(const CellParams& c, Branch b, double F, const SolverOptions& opts = {});
/// Displacement on the falling middle branch [x_peak, x_valley] carrying F.
double invert_unstable(const CellParams& c, double F, const SolverOptions& opts = {});

/// Range of total displacement a branch assignment can carry.
/// X_min is -inf without open cells, X_max is +inf without closed cells.
struct ReachableSpan {
    double X_min;
    double X_max;
    double F_min;   // force at X_min (max open valley), -inf if none
    double F_max;   // force at X_max (min closed peak), +inf if none
};
ReachableSpan reachable_span(std::span<const CellParams> cells, std::span<const Branch> branch,
                             const SolverOptions& opts = {});

/// Series force balance at imposed total displacement X. Returns nullopt
/// when X lies outside the span reachable with this branch assignment.
std::optional<ChainState> solve_chain(std::span<const CellParams> cells, std::span<const Branch> branch,
                                      double X, const SolverOptions& opts = {});

double chain_energy(std::span<const CellParams> cells, std::span<const double> x);

struct StepResult {
    ChainState state;
    std::vector<TransitionEvent> events;
};

/// Advance the chain to X_new. When the stable assignment can no longer
/// carry X_new, the limiting cell (weakest closed cell on loading, the open
/// cell with the highest valley on unloading; ties go to the lowest id)
/// leaves its branch. It follows its falling branch for as long as the
/// chain's total compliance stays negative and snaps at constant X when it
/// reaches zero (a fold). The snap lands either on a later stable stretch of
/// the same falling branch or on the far branch; the first snap away from
/// the origin branch carries the event. If the cell reaches the far branch
/// without a fold the transition is continuous and dissipates nothing.
StepResult step_load(const ChainState& state, std::span<const CellParams> cells, double X_new,
                     std::size_t step_index, const SolverOptions& opts = {});

/// Piecewise-linear displacement program starting at X = 0.
struct LoadProgram {
    std::vector<double> waypoints;   // successive X targets
    double dX = 0.01;
};

/// Discretize a program into per-step X values, the initial X = 0 included.
/// Each leg of length L contributes ceil(L / dX) steps; the last step of a
/// leg lands on the waypoint exactly.
std::vector<double> discretize(const LoadProgram& program);

struct MechanicsSample {
    std::size_t step = 0;
    double X = 0.0;
    double F = 0.0;
    std::vector<double> x;
    std::vector<Branch> branch;
};

struct LoadRun {
    std::vector<MechanicsSample> samples;
    std::vector<TransitionEvent> events;
};

LoadRun run_load_program(std::span<const CellParams> cells, const LoadProgram& program,
                         const SolverOptions& opts = {});

struct Equilibrium {
    std::vector<double> x;
    double energy;
};

/// Grid search over {x_i >= -0.2*stroke_i, sum x_i = X} returning every grid
/// local minimum of the total energy. Independent of solve_chain.
std::vector<Equilibrium> brute_force_equilibria(std::span<const CellParams> cells, double X, int grid_n);

}  // namespace metasense
