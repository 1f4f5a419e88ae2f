#include <doctest.h>

#include "hlab/equilibria.hpp"
#include "hlab/error.hpp"

#include <cmath>
#include <sstream>

using namespace hlab;

namespace {

const Grid& default_grid() {
    static const Grid g = make_grid(20.0, 801);
    return g;
}

const BranchEvent* find_event(const Branch& b, EventKind k) {
    for (const auto& e : b.events)
        if (e.kind == k) return &e;
    return nullptr;
}

}  // namespace

TEST_CASE("zero forcing has the zero equilibrium") {
    EquilibriumOptions opt;
    opt.zero_forcing = true;
    auto s = shoot_residual({0.0, 0.0, 0.0}, default_grid(), opt);
    CHECK(s.max_miss() == 0.0);
    CHECK_FALSE(s.diverged);
    auto e = solve_equilibrium({0.0, 0.0, 0.0}, default_grid(), opt);
    CHECK(sup_norm(e.profile) == 0.0);
    CHECK(e.unstable_dim == 0);
}

TEST_CASE("the equilibrium at c = -1.2") {
    auto e = solve_equilibrium({1.0, 0.0, -1.2}, default_grid());
    CHECK(e.shoot.f0 == doctest::Approx(1.083407).epsilon(1e-6));
    CHECK(std::fabs(e.shoot.fp0) <= 1e-9);
    CHECK(shoot_residual(e.shoot, default_grid()).max_miss() <= 1e-6);
    CHECK(e.residual <= EquilibriumOptions{}.tol_eq);
    CHECK(e.unstable_dim == 0);
    CHECK(e.positive_eigenvalues.empty());
    CHECK(std::fabs(e.profile[0]) <= EquilibriumOptions{}.tol_boundary);
    CHECK(equilibrium_residual(e.profile, Forcing::gaussian(-1.2)) == doctest::Approx(e.residual));
    // Even forcing, even profile.
    for (std::size_t i = 0; i < 50; ++i) CHECK(e.profile[i] == doctest::Approx(e.profile[800 - i]).epsilon(1e-9));
}

TEST_CASE("large data escapes before the match point") {
    auto s = shoot_residual({10.0, 0.0, -1.2}, default_grid());
    CHECK(s.diverged);
}

TEST_CASE("equilibria at c = 0") {
    auto f1 = solve_equilibrium({-1.25, 0.0, 0.0}, default_grid());
    CHECK(f1.shoot.f0 == doctest::Approx(-1.254093).epsilon(1e-6));
    CHECK(f1.unstable_dim == 2);
    REQUIRE(f1.positive_eigenvalues.size() == 2);
    CHECK(f1.positive_eigenvalues[0] > f1.positive_eigenvalues[1]);
    auto st = solve_equilibrium({0.55, 0.0, 0.0}, default_grid());
    CHECK(st.unstable_dim == 0);
    CHECK(st.label != f1.label);
}

TEST_CASE("scan finds one equilibrium at c = -1.2 and deduplicates") {
    auto seeds = seed_grid(-3.0, 3.0, -1.0, 1.0, 7);
    CHECK(seeds.size() == 49);
    auto scan = scan_diagram({-1.2}, seeds, default_grid(), {}, 1e-6, 2);
    CHECK(scan.attempts == 49);
    REQUIRE(scan.equilibria.size() == 1);
    CHECK(scan.equilibria[0].unstable_dim == 0);

    // Same result with one worker.
    auto serial = scan_diagram({-1.2}, seeds, default_grid(), {}, 1e-6, 1);
    REQUIRE(serial.equilibria.size() == 1);
    CHECK(serial.equilibria[0].shoot.f0 == scan.equilibria[0].shoot.f0);

    auto empty = scan_diagram({}, seeds, default_grid());
    CHECK(empty.equilibria.empty());
    std::ostringstream os;
    write_diagram_csv(os, empty.equilibria);
    CHECK(os.str() == "c,f0,fp0,residual,unstable_dim\n");
}

TEST_CASE("continuation through the symmetry-breaking point") {
    ContinuationOptions copt;
    auto up_start = solve_equilibrium({-1.25, 0.0, 0.03}, default_grid());
    auto up = continue_branch(up_start, 0.03, 0.09, copt, default_grid(), {}, "f1");
    CHECK(up.stop_reason == "range_end");
    const auto* det_up = find_event(up, EventKind::DeterminantSign);
    REQUIRE(det_up);
    const auto* dim_up = find_event(up, EventKind::UnstableDimChange);
    REQUIRE(dim_up);
    CHECK(dim_up->detail == "2->1");

    // Walking the other way finds the same point.
    auto down_start = solve_equilibrium({-1.2, 0.0, 0.09}, default_grid());
    auto down = continue_branch(down_start, 0.03, 0.09, copt, default_grid(), {}, "f1");
    const auto* det_down = find_event(down, EventKind::DeterminantSign);
    REQUIRE(det_down);
    CHECK(std::fabs(det_down->c - det_up->c) <= 2.0 * copt.step);

    auto js = events_json({up});
    REQUIRE(js.size() == up.events.size());
    CHECK(js[0]["branch_id"] == "f1");
}

TEST_CASE("zero branch without forcing has no events") {
    EquilibriumOptions opt;
    opt.zero_forcing = true;
    auto z = solve_equilibrium({0.0, 0.0, -0.5}, default_grid(), opt);
    auto b = continue_branch(z, -0.5, 0.5, ContinuationOptions{}, default_grid(), opt, "zero");
    CHECK(b.events.empty());
    CHECK(b.stop_reason == "range_end");
    for (const auto& p : b.points) CHECK(sup_norm(p.profile) == 0.0);
}

TEST_CASE("color code") {
    CHECK(color_code(0) == "green");
    CHECK(color_code(1) == "blue");
    CHECK(color_code(2) == "red");
    CHECK(color_code(3) == "other");
}
