#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "metasense/mechanics.hpp"
#include "metasense/sensing.hpp"

using namespace metasense;

namespace {

// 30-digit evaluation of eps0 * 3.8 mm * 7.3 mm / gap.
constexpr double kClosedC = 0.491230339854144;
constexpr double kOpenC = 0.0160532790802007843;
constexpr double kClosedChannel = 0.57070416024539264;

CapacitorModel bare(std::size_t n)
{
    CapacitorModel cm = CapacitorModel::uniform(n, 0.0);
    cm.C_parasitic = 0.0;
    return cm;
}

}  // namespace

TEST_CASE("gap from displacement")
{
    const PlateGeometry pg;
    CHECK(gap_from_displacement(pg, 0.0) == doctest::Approx(0.5));
    CHECK(gap_from_displacement(pg, 14.8) == doctest::Approx(15.3));
    CHECK(gap_from_displacement(pg, -1.0) == doctest::Approx(0.1));
    CHECK(gap_from_displacement(pg, -0.4) == doctest::Approx(0.1));
    CHECK(gap_from_displacement(pg, pg.gap_open - pg.gap_closed) == pg.gap_open);
}

TEST_CASE("plate travel ignores compression")
{
    CHECK(plate_travel(-1.3) == 0.0);
    CHECK(plate_travel(0.0) == 0.0);
    CHECK(plate_travel(2.5) == 2.5);
}

TEST_CASE("plate capacitance endpoints")
{
    const CapacitorModel cm = bare(1);
    CHECK(plate_capacitance(cm, 0.5) == doctest::Approx(kClosedC).epsilon(1e-12));
    CHECK(plate_capacitance(cm, 15.3) == doctest::Approx(kOpenC).epsilon(1e-12));
    CHECK(plate_capacitance(cm, 1.0) == doctest::Approx(0.5 * plate_capacitance(cm, 0.5)));
    CHECK_THROWS_AS(plate_capacitance(cm, 0.09), std::domain_error);
    CHECK_NOTHROW(plate_capacitance(cm, kMinGap));
}

TEST_CASE("plate capacitance scales with permittivity and falls with gap")
{
    CapacitorModel cm = bare(1);
    double prev = plate_capacitance(cm, kMinGap);
    for (double g = 0.2; g < 20.0; g += 0.1) {
        const double c = plate_capacitance(cm, g);
        CHECK(c < prev);
        prev = c;
    }
    const double air = plate_capacitance(cm, 2.0);
    cm.eps_r = 3.0;
    CHECK(plate_capacitance(cm, 2.0) == doctest::Approx(3.0 * air));
}

TEST_CASE("identity coupling without parasitics gives ideal channels")
{
    const CapacitorModel cm = bare(3);
    const std::vector<double> x{0.0, 14.8, 3.0};
    const auto c = channel_capacitances(cm, x);
    CHECK(c[0] == doctest::Approx(kClosedC));
    CHECK(c[1] == doctest::Approx(kOpenC));
    CHECK(c[2] == doctest::Approx(plate_capacitance(cm, 3.5)));
}

TEST_CASE("closed chain channel value")
{
    const CapacitorModel cm = CapacitorModel::uniform(4);
    const SensorFrame f = sensor_frame(cm, ChainState::at_rest(4), 17);
    CHECK(f.step_index == 17);
    for (double c : f.C)
        CHECK(c == doctest::Approx(kClosedChannel).epsilon(1e-12));
}

TEST_CASE("sensor frame dimension mismatch")
{
    const CapacitorModel cm = CapacitorModel::uniform(3);
    CHECK_THROWS_AS(sensor_frame(cm, ChainState::at_rest(4)), std::invalid_argument);
}

TEST_CASE("capacitor model validation")
{
    CapacitorModel cm = CapacitorModel::uniform(2);
    CHECK_NOTHROW(cm.validate());
    cm.eps_r = 0.5;
    CHECK_THROWS_AS(cm.validate(), std::invalid_argument);
    cm = CapacitorModel::uniform(2, 0.25);
    CHECK_THROWS_AS(cm.validate(), std::invalid_argument);
    cm = CapacitorModel::uniform(2);
    cm.coupling = CouplingMatrix(2, std::vector<double>{1.0, 0.1, 0.1, 0.9});
    CHECK_THROWS_AS(cm.validate(), std::invalid_argument);
    cm.C_parasitic = -0.01;
    CHECK_THROWS_AS(cm.validate(), std::invalid_argument);
    CHECK_THROWS_AS(CouplingMatrix(3, std::vector<double>(4, 0.0)), std::invalid_argument);
}

TEST_CASE("frame is affine in the ideal capacitances")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> disp(0.0, 15.0);
    CapacitorModel cm = CapacitorModel::uniform(4, 0.07);
    CapacitorModel ideal = bare(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(4);
        for (auto& v : x)
            v = disp(rng);
        const auto c = channel_capacitances(cm, x);
        const auto id = channel_capacitances(ideal, x);
        double total = 0.0;
        for (double v : id)
            total += v;
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(c[i] > 0.0);
            CHECK(c[i] == doctest::Approx(cm.C_parasitic + id[i] + 0.07 * (total - id[i])));
        }
    }
}

TEST_CASE("deployment lowers its own channel the most")
{
    // The rest of the chain is pushed shut during a snap, so neighbouring
    // channels rise; the deploying channel is the one that moves most
    // negative. Its own value only falls outright while crosstalk is small.
    std::mt19937_64 rng(99);
    std::normal_distribution<double> eta(0.0, 0.05);
    std::uniform_real_distribution<double> alpha(0.0, 0.2);
    for (int draw = 0; draw < 20; ++draw) {
        std::vector<CellParams> cells(4);
        for (std::size_t i = 0; i < 4; ++i) {
            cells[i].id = static_cast<int>(i) + 1;
            cells[i].imperfection = eta(rng);
        }
        const CapacitorModel cm = CapacitorModel::uniform(4, alpha(rng));
        const CapacitorModel weak = CapacitorModel::uniform(4, 0.02);
        const LoadRun run = run_load_program(cells, {{4 * 14.8 + 2.0}, 0.05});
        for (const auto& e : run.events) {
            const auto& before = run.samples[e.step_index - 1];
            const auto& after = run.samples[e.step_index];
            const auto c0 = channel_capacitances(cm, before.x);
            const auto c1 = channel_capacitances(cm, after.x);
            const auto j = static_cast<std::size_t>(e.cell_id - 1);
            for (std::size_t i = 0; i < 4; ++i)
                if (i != j)
                    CHECK(c1[j] - c0[j] < c1[i] - c0[i]);
            CHECK(channel_capacitances(weak, after.x)[j] < channel_capacitances(weak, before.x)[j]);
        }
    }
}
