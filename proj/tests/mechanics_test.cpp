#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "metasense/mechanics.hpp"

using namespace metasense;

namespace {

// Frozen from a 30-digit evaluation of the closed forms for the default cell.
constexpr double kPeakX = 2.60588637570653542845951110926;
constexpr double kValleyX = 11.2074469576267979048738222241;
constexpr double kScale = 0.0636211764899653359760218873582;
constexpr double kValleyF = -13.5443323108992187027468308093;

std::vector<CellParams> chain(std::initializer_list<double> etas)
{
    std::vector<CellParams> cells;
    for (double eta : etas) {
        CellParams c;
        c.id = static_cast<int>(cells.size()) + 1;
        c.imperfection = eta;
        cells.push_back(c);
    }
    return cells;
}

std::vector<CellParams> replica() { return chain({0.01, -0.05, -0.02, 0.045}); }

std::vector<int> ids(const std::vector<TransitionEvent>& events, Direction d)
{
    std::vector<int> out;
    for (const auto& e : events)
        if (e.direction == d)
            out.push_back(e.cell_id);
    return out;
}

LoadProgram pull(double X_max, double dX = 0.01)
{
    return {{X_max}, dX};
}

}  // namespace

TEST_CASE("branch limits against the closed form")
{
    const CellParams c;
    const BranchLimits lim = branch_limits(c);
    CHECK(lim.x_peak == doctest::Approx(kPeakX).epsilon(1e-13));
    CHECK(lim.x_valley == doctest::Approx(kValleyX).epsilon(1e-13));
    CHECK(lim.F_peak == doctest::Approx(6.7).epsilon(1e-13));
    CHECK(lim.F_valley == doctest::Approx(kValleyF).epsilon(1e-12));
    CHECK(force_scale(c) == doctest::Approx(kScale).epsilon(1e-13));
    CHECK(cell_stiffness(c, lim.x_peak) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(cell_stiffness(c, lim.x_valley)) < 1e-12);
}

TEST_CASE("peak force follows the imperfection")
{
    for (double eta : {-0.2, -0.05, 0.0, 0.03, 0.4}) {
        CellParams c;
        c.imperfection = eta;
        CHECK(branch_limits(c).F_peak == doctest::Approx(6.7 * (1.0 + eta)).epsilon(1e-13));
    }
}

TEST_CASE("symmetric cubic at beta = 0.5")
{
    CellParams c;
    c.unstable_fraction = 0.5;
    const BranchLimits lim = branch_limits(c);
    CHECK(-lim.F_valley == doctest::Approx(lim.F_peak).epsilon(1e-12));
    CHECK(lim.x_peak / c.stroke == doctest::Approx(0.211324865405187117745).epsilon(1e-13));
}

TEST_CASE("force law roots and energy origin")
{
    const CellParams c;
    CHECK(cell_force(c, 0.0) == 0.0);
    CHECK(std::abs(cell_force(c, 0.4 * 14.8)) < 1e-12);
    CHECK(std::abs(cell_force(c, 14.8)) < 1e-12);
    CHECK(cell_energy(c, 0.0) == 0.0);
    // Both wells sit below the barrier.
    CHECK(cell_energy(c, c.stroke) < cell_energy(c, kPeakX));
}

TEST_CASE("invalid cell parameters")
{
    CellParams c;
    c.unstable_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.imperfection = -1.0;
    CHECK_THROWS_AS(cell_force(c, 1.0), std::invalid_argument);
    c = {};
    c.stroke = 0.0;
    CHECK_THROWS_AS(branch_limits(c), std::invalid_argument);
}

TEST_CASE("force is the derivative of energy")
{
    std::mt19937_64 rng(7);
    for (double beta : {0.3, 0.4, 0.55}) {
        CellParams c;
        c.unstable_fraction = beta;
        const double d = c.stroke;
        const double scale = branch_limits(c).F_peak;
        std::uniform_real_distribution<double> at(-0.2 * d, 1.2 * d);
        for (int i = 0; i < 500; ++i) {
            const double x = at(rng);
            const double h = 1e-4;
            const double fd = (cell_energy(c, x + h) - cell_energy(c, x - h)) / (2.0 * h);
            CHECK(std::abs(fd - cell_force(c, x)) / std::max(std::abs(cell_force(c, x)), scale) < 1e-6);
        }
    }
}

TEST_CASE("branch inversion")
{
    const CellParams c;
    const BranchLimits lim = branch_limits(c);
    CHECK(invert_branch(c, Branch::ClosedRising, 0.0) == doctest::Approx(0.0));
    CHECK(invert_branch(c, Branch::OpenRising, 0.0) == doctest::Approx(14.8));
    CHECK(invert_branch(c, Branch::ClosedRising, lim.F_peak) == doctest::Approx(lim.x_peak).epsilon(1e-12));
    CHECK(invert_branch(c, Branch::OpenRising, lim.F_valley) == doctest::Approx(lim.x_valley).epsilon(1e-12));

    CHECK_THROWS_AS(invert_branch(c, Branch::ClosedRising, lim.F_peak + 1e-6), std::out_of_range);
    CHECK_THROWS_AS(invert_branch(c, Branch::OpenRising, lim.F_valley - 1e-6), std::out_of_range);
    CHECK_THROWS_AS(invert_branch(c, Branch::Unstable, 0.0), std::invalid_argument);

    // Deep compression and large stretch still invert.
    for (double F : {-80.0, -13.0, 3.0, 6.69}) {
        const double x = invert_branch(c, Branch::ClosedRising, F);
        CHECK(x <= lim.x_peak);
        CHECK(cell_force(c, x) == doctest::Approx(F).epsilon(1e-9));
    }
    for (double F : {-13.5, 0.5, 40.0, 500.0}) {
        const double x = invert_branch(c, Branch::OpenRising, F);
        CHECK(x >= lim.x_valley);
        CHECK(cell_force(c, x) == doctest::Approx(F).epsilon(1e-9));
    }
}

TEST_CASE("falling branch inversion")
{
    const CellParams c;
    const BranchLimits lim = branch_limits(c);
    CHECK(invert_unstable(c, lim.F_peak) == doctest::Approx(lim.x_peak));
    CHECK(invert_unstable(c, lim.F_valley) == doctest::Approx(lim.x_valley));
    CHECK(invert_unstable(c, 0.0) == doctest::Approx(0.4 * 14.8));
    double prev = lim.x_peak;
    for (double F = lim.F_peak - 0.5; F > lim.F_valley; F -= 0.5) {
        const double x = invert_unstable(c, F);
        CHECK(x > prev);
        CHECK(cell_force(c, x) == doctest::Approx(F).epsilon(1e-9));
        prev = x;
    }
    CHECK_THROWS_AS(invert_unstable(c, lim.F_peak + 0.1), std::out_of_range);
}

TEST_CASE("solve_chain examples")
{
    const auto cells = chain({0.0, 0.0, 0.0, 0.0});
    const std::vector<Branch> closed(4, Branch::ClosedRising);
    const std::vector<Branch> open(4, Branch::OpenRising);

    auto rest = solve_chain(cells, closed, 0.0);
    REQUIRE(rest);
    CHECK(std::abs(rest->F) < 1e-9);
    for (double x : rest->x)
        CHECK(std::abs(x) < 1e-9);

    auto stretched = solve_chain(cells, open, 4 * 14.8);
    REQUIRE(stretched);
    CHECK(std::abs(stretched->F) < 1e-9);
    for (double x : stretched->x)
        CHECK(x == doctest::Approx(14.8));

    const auto two = chain({0.0, 0.0});
    auto small = solve_chain(two, std::vector<Branch>(2, Branch::ClosedRising), 1.3);
    REQUIRE(small);
    CHECK(small->x[0] == doctest::Approx(0.65));
    CHECK(small->x[1] == doctest::Approx(0.65));
}

TEST_CASE("solve_chain reports infeasible spans and rejects unstable branches")
{
    const auto cells = chain({0.0, 0.0});
    const std::vector<Branch> closed(2, Branch::ClosedRising);
    const ReachableSpan span = reachable_span(cells, closed);
    CHECK(span.X_max == doctest::Approx(2 * kPeakX));
    CHECK(std::isinf(span.X_min));
    CHECK_FALSE(solve_chain(cells, closed, span.X_max + 1e-6));
    CHECK(solve_chain(cells, closed, span.X_max));

    const std::vector<Branch> mixed{Branch::OpenRising, Branch::ClosedRising};
    const ReachableSpan s2 = reachable_span(cells, mixed);
    CHECK_FALSE(solve_chain(cells, mixed, s2.X_min - 1e-6));

    const std::vector<Branch> bad{Branch::Unstable, Branch::ClosedRising};
    CHECK_THROWS_AS(solve_chain(cells, bad, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_chain(cells, std::vector<Branch>(3, Branch::ClosedRising), 1.0), std::invalid_argument);
}

TEST_CASE("solve_chain residuals stay within tolerance")
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> eta(0.0, 0.05);
    const SolverOptions opts;
    for (int trial = 0; trial < 200; ++trial) {
        auto cells = chain({eta(rng), eta(rng), eta(rng), eta(rng)});
        std::vector<Branch> b(4);
        for (auto& v : b)
            v = (rng() & 1) ? Branch::OpenRising : Branch::ClosedRising;
        const ReachableSpan span = reachable_span(cells, b);
        const double lo = std::isfinite(span.X_min) ? span.X_min : span.X_max - 30.0;
        const double hi = std::isfinite(span.X_max) ? span.X_max : span.X_min + 30.0;
        const double X = std::max(0.0, lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
        if (X < lo || X > hi)
            continue;
        auto s = solve_chain(cells, b, X, opts);
        REQUIRE(s);
        double sum = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            sum += s->x[i];
            CHECK(std::abs(cell_force(cells[i], s->x[i]) - s->F) < opts.tol_F);
        }
        CHECK(std::abs(sum - X) < opts.tol_x);
    }
}

TEST_CASE("replica pull deploys cells in order of effective peak")
{
    const auto cells = replica();
    const LoadRun run = run_load_program(cells, pull(4 * 14.8 + 2.0));
    CHECK(ids(run.events, Direction::Deploy) == std::vector<int>{2, 3, 1, 4});
    CHECK(ids(run.events, Direction::Collapse).empty());
    CHECK(run.samples.size() == 6121);

    // First snap, frozen from an independent fold computation.
    const TransitionEvent& first = run.events.front();
    CHECK(first.X_at_event == doctest::Approx(8.547985133801465).epsilon(1e-7));
    CHECK(first.F_before == doctest::Approx(6.308355335632076).epsilon(1e-7));
    CHECK(first.dissipated == doctest::Approx(49.863014333844646).epsilon(1e-6));
    CHECK(first.step_index == 855);

    double peak = 0.0;
    for (const auto& s : run.samples)
        peak = std::max(peak, s.F);
    CHECK(peak == doctest::Approx(branch_limits(cells[3]).F_peak).epsilon(1e-5));
}

TEST_CASE("full pull has one force maximum per deployment")
{
    const LoadRun run = run_load_program(replica(), pull(4 * 14.8 + 2.0));
    int maxima = 0;
    for (std::size_t k = 1; k + 1 < run.samples.size(); ++k)
        if (run.samples[k].F > run.samples[k - 1].F && run.samples[k].F >= run.samples[k + 1].F)
            ++maxima;
    CHECK(maxima == 4);
    int drops = 0;
    for (std::size_t k = 1; k < run.samples.size(); ++k)
        if (run.samples[k].F < run.samples[k - 1].F - 1.0)
            ++drops;
    CHECK(drops == 4);
}

TEST_CASE("identical cells deploy by id")
{
    const auto cells = chain({0.0, 0.0, 0.0, 0.0});
    const LoadRun run = run_load_program(cells, pull(4 * 14.8 + 2.0, 0.02));
    CHECK(ids(run.events, Direction::Deploy) == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("pull and return produces a closed hysteresis loop")
{
    const double X_max = 4 * 14.8 + 2.0;
    const std::size_t legs = 6120;
    for (const auto& cells : {replica(), chain({0.0, 0.0, 0.0, 0.0})}) {
        const LoadRun run = run_load_program(cells, {{X_max, 0.0}, 0.01});
        CHECK(ids(run.events, Direction::Deploy).size() == 4);
        CHECK(ids(run.events, Direction::Collapse).size() == 4);
        double released = 0.0;
        for (const auto& e : run.events) {
            CHECK(e.dissipated > 0.0);
            released += e.dissipated;
        }
        REQUIRE(run.samples.size() == 2 * legs + 1);
        double work = 0.0;
        for (std::size_t k = 1; k < run.samples.size(); ++k)
            work += 0.5 * (run.samples[k].F + run.samples[k - 1].F) * (run.samples[k].X - run.samples[k - 1].X);
        CHECK(work == doctest::Approx(released).epsilon(0.01));

        const auto& end = run.samples.back();
        for (Branch b : end.branch)
            CHECK(b == Branch::ClosedRising);
        CHECK(std::abs(end.F) < 1e-9);
    }
}

TEST_CASE("unloading stays below loading for identical cells")
{
    // With unequal cells the open cell on the way down is a different one
    // from the way up, so the two curves may cross by a few mN.
    const LoadRun run = run_load_program(chain({0.0, 0.0, 0.0, 0.0}), {{4 * 14.8 + 2.0, 0.0}, 0.01});
    const std::size_t legs = 6120;
    for (std::size_t k = 0; k <= legs; ++k) {
        const auto& up = run.samples[k];
        const auto& down = run.samples[2 * legs - k];
        REQUIRE(up.X == doctest::Approx(down.X));
        CHECK(down.F <= up.F + 1e-9);
    }
}

TEST_CASE("small pull stays on the closed branch")
{
    const auto cells = replica();
    const double weakest = branch_limits(cells[1]).F_peak;
    const auto half = solve_chain(cells, std::vector<Branch>(4, Branch::ClosedRising), 0.0);
    REQUIRE(half);
    double X_half = 0.0;
    for (const auto& c : cells)
        X_half += invert_branch(c, Branch::ClosedRising, 0.5 * weakest);
    const LoadRun run = run_load_program(cells, pull(X_half));
    CHECK(run.events.empty());
    CHECK(run.samples.back().F == doctest::Approx(0.5 * weakest).epsilon(1e-6));
}

TEST_CASE("deployment order matches effective peaks over random draws")
{
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> eta(0.0, 0.05);
    for (int draw = 0; draw < 25; ++draw) {
        auto cells = chain({eta(rng), eta(rng), eta(rng), eta(rng)});
        std::vector<int> expected{1, 2, 3, 4};
        std::stable_sort(expected.begin(), expected.end(), [&](int a, int b) {
            return cells[a - 1].effective_peak() < cells[b - 1].effective_peak();
        });
        const LoadRun run = run_load_program(cells, pull(4 * 14.8 + 2.0, 0.05));
        CHECK(ids(run.events, Direction::Deploy) == expected);
        for (const auto& e : run.events)
            CHECK(e.dissipated >= 0.0);
    }
}

TEST_CASE("step_load contract")
{
    const auto cells = replica();
    const ChainState rest = ChainState::at_rest(4);

    const StepResult same = step_load(rest, cells, 0.0, 1);
    CHECK(same.events.empty());
    CHECK(same.state.X == 0.0);
    CHECK(same.state.x == rest.x);

    SolverOptions opts;
    opts.max_step = 0.5;
    CHECK_THROWS_AS(step_load(rest, cells, 0.6, 1, opts), std::invalid_argument);
    CHECK_THROWS_AS(step_load(ChainState::at_rest(3), cells, 0.1, 1), std::invalid_argument);

    ChainState two_unstable = rest;
    two_unstable.branch[0] = two_unstable.branch[1] = Branch::Unstable;
    CHECK_THROWS_AS(step_load(two_unstable, cells, 0.1, 1), std::invalid_argument);
}

TEST_CASE("states along a pull satisfy the chain invariants")
{
    const auto cells = replica();
    const LoadRun run = run_load_program(cells, {{4 * 14.8 + 2.0, 0.0}, 0.05});
    for (const auto& s : run.samples) {
        double sum = 0.0;
        int transiting = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            sum += s.x[i];
            CHECK(std::abs(cell_force(cells[i], s.x[i]) - s.F) < 1e-6);
            const BranchLimits lim = branch_limits(cells[i]);
            switch (s.branch[i]) {
            case Branch::ClosedRising: CHECK(s.x[i] <= lim.x_peak + 1e-9); break;
            case Branch::OpenRising: CHECK(s.x[i] >= lim.x_valley - 1e-9); break;
            case Branch::Unstable:
                ++transiting;
                CHECK(s.x[i] >= lim.x_peak - 1e-9);
                CHECK(s.x[i] <= lim.x_valley + 1e-9);
                break;
            }
        }
        CHECK(transiting <= 1);
        CHECK(std::abs(sum - s.X) < 1e-6);
    }
}

TEST_CASE("a single cell deploys without a snap")
{
    const auto cells = chain({0.0});
    const LoadRun run = run_load_program(cells, {{16.0, 0.0}, 0.01});
    REQUIRE(run.events.size() == 2);
    CHECK(run.events[0].direction == Direction::Deploy);
    CHECK(run.events[1].direction == Direction::Collapse);
    CHECK(run.events[0].dissipated == 0.0);
    CHECK(run.events[0].X_at_event == doctest::Approx(kValleyX));
    // Displacement control traces the whole force law.
    for (const auto& s : run.samples)
        CHECK(std::abs(s.F - cell_force(cells[0], s.X)) < 1e-7);
}

TEST_CASE("discretize lands on waypoints")
{
    const auto xs = discretize({{61.2}, 0.01});
    CHECK(xs.size() == 6121);
    CHECK(xs.front() == 0.0);
    CHECK(xs.back() == 61.2);
    const auto cyc = discretize({{1.0, 0.0, 1.0}, 0.3});
    const std::vector<double> want{0.0, 0.3, 0.6, 0.9, 1.0, 0.7, 0.4, 0.1, 0.0, 0.3, 0.6, 0.9, 1.0};
    REQUIRE(cyc.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k)
        CHECK(cyc[k] == doctest::Approx(want[k]).epsilon(1e-12));
    CHECK(cyc[4] == 1.0);
    CHECK(cyc[8] == 0.0);
    CHECK(discretize({{}, 0.01}) == std::vector<double>{0.0});
    CHECK_THROWS_AS(discretize({{1.0}, 0.0}), std::invalid_argument);
}

TEST_CASE("brute force: one cell scanned over X has two wells")
{
    const auto cells = chain({0.0});
    std::vector<double> e;
    std::vector<double> xs;
    for (int k = 0; k <= 2000; ++k) {
        const double X = -0.2 * 14.8 + 1.4 * 14.8 * k / 2000.0;
        const auto eq = brute_force_equilibria(cells, X, 100);
        REQUIRE(eq.size() == 1);
        CHECK(eq[0].x[0] == X);
        e.push_back(eq[0].energy);
        xs.push_back(X);
    }
    std::vector<double> wells;
    for (std::size_t k = 1; k + 1 < e.size(); ++k)
        if (e[k] < e[k - 1] && e[k] <= e[k + 1])
            wells.push_back(xs[k]);
    REQUIRE(wells.size() == 2);
    CHECK(wells[0] == doctest::Approx(0.0).epsilon(0.01));
    CHECK(wells[1] == doctest::Approx(14.8).epsilon(0.01));
}

TEST_CASE("brute force: two identical cells at X = stroke")
{
    const auto cells = chain({0.0, 0.0});
    // 399 intervals over 1.4 strokes put 0 and the stroke on grid points.
    const auto minima = brute_force_equilibria(cells, 14.8, 400);
    REQUIRE(minima.size() == 2);
    CHECK(minima[0].x[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(minima[0].x[1] == doctest::Approx(14.8));
    CHECK(minima[1].x[0] == doctest::Approx(14.8));
    CHECK(minima[1].x[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(minima[0].energy == doctest::Approx(minima[1].energy));
}

TEST_CASE("brute force agrees with the solver mid-pull")
{
    const auto cells = chain({0.03, -0.04});
    const double X = 3.5;
    const auto s = solve_chain(cells, std::vector<Branch>(2, Branch::ClosedRising), X);
    REQUIRE(s);
    const int n = 400;
    const auto minima = brute_force_equilibria(cells, X, n);
    const double h = (X + 0.4 * 14.8) / (n - 1);
    const auto near = std::find_if(minima.begin(), minima.end(),
                                   [&](const Equilibrium& m) { return std::abs(m.x[0] - s->x[0]) <= 2 * h; });
    REQUIRE(near != minima.end());
    CHECK(std::abs(near->energy - chain_energy(cells, s->x)) < 1e-2);
}

TEST_CASE("brute force guards")
{
    const auto cells = chain({0.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(brute_force_equilibria(cells, 10.0, 400), std::length_error);
    CHECK_THROWS_AS(brute_force_equilibria(cells, 10.0, 1), std::invalid_argument);
    CHECK(brute_force_equilibria(chain({0.0, 0.0}), -10.0, 100).empty());
}

TEST_CASE("a snap that throws its open neighbour back still lands")
{
    // Soft-valley pair: when cell 1 snaps open the chain is too short for
    // both to be open, so cell 2 is pushed onto its falling branch.
    std::vector<CellParams> cells = chain({0.0634, 0.0242});
    cells[0].unstable_fraction = 0.3531;
    cells[1].unstable_fraction = 0.3669;
    const LoadRun run = run_load_program(cells, {{2 * 14.8 + 2.0, 0.0}, 0.01});
    CHECK(ids(run.events, Direction::Deploy) == std::vector<int>{2, 1});
    CHECK(ids(run.events, Direction::Collapse) == std::vector<int>{2, 1});
    for (const auto& e : run.events)
        CHECK(e.dissipated >= 0.0);
    CHECK(run.events[1].dissipated > 1.0);

    bool swapped = false;
    for (const auto& s : run.samples) {
        CHECK(std::count(s.branch.begin(), s.branch.end(), Branch::Unstable) <= 1);
        swapped = swapped || (s.branch[0] == Branch::OpenRising && s.branch[1] == Branch::Unstable);
        double X = 0.0;
        for (double v : s.x)
            X += v;
        CHECK(X == doctest::Approx(s.X).epsilon(1e-9));
    }
    CHECK(swapped);
    CHECK(std::abs(run.samples.back().F) < 1e-9);
}
