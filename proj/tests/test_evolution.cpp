#include <doctest.h>

#include "hlab/equilibria.hpp"
#include "hlab/error.hpp"
#include "hlab/evolution.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace hlab;

namespace {

const Grid& default_grid() {
    static const Grid g = make_grid(20.0, 801);
    return g;
}

const Equilibrium& f0_low() {
    static const Equilibrium e = solve_equilibrium({1.08, 0.0, -1.2}, default_grid());
    return e;
}

const Equilibrium& f1_zero() {
    static const Equilibrium e = solve_equilibrium({-1.25, 0.0, 0.0}, default_grid());
    return e;
}

GridFunction bump_probe(double A) {
    const auto& f = f0_low().profile;
    GridFunction u = f;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += A * std::exp(-f.grid.x(i) * f.grid.x(i) / 10.0);
    return u;
}

double sup_dist(const GridFunction& a, const GridFunction& b) { return sup_norm(a - b); }

}  // namespace

TEST_CASE("config validation") {
    StepperConfig c;
    CHECK_NOTHROW(c.validate());
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = StepperConfig{};
    c.t_max = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = StepperConfig{};
    c.snapshot_stride = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("zero is a fixed point without forcing") {
    auto u = step(GridFunction(default_grid()), 0.01, Forcing::none());
    CHECK(sup_norm(u) == 0.0);
}

TEST_CASE("solved equilibrium is a fixed point of the stepper") {
    const auto& e = f0_low();
    auto once = step(e.profile, 0.01, -1.2);
    CHECK(sup_dist(once, e.profile) <= EquilibriumOptions{}.tol_eq * 0.01);

    Stepper st(default_grid(), 0.01, Forcing::gaussian(-1.2));
    auto u = e.profile.values;
    for (int k = 0; k < 1000; ++k) st.advance(u);
    CHECK(sup_dist(GridFunction(default_grid(), u), e.profile) <= 1000 * EquilibriumOptions{}.tol_eq * 0.01);
}

TEST_CASE("constant data follows the Riccati solution to third order per step") {
    for (double u0 : {0.5, -0.5, 2.0}) {
        const double dt = 0.01;
        auto u = step(GridFunction(default_grid(), u0), dt, Forcing::none());
        const double exact = u0 / (1.0 + u0 * dt);
        CHECK(std::fabs(u[default_grid().mid()] - exact) <= 10.0 * std::pow(std::fabs(u0) * dt, 3));
        // Interior away from the Dirichlet ends stays flat.
        CHECK(std::fabs(u[100] - u[default_grid().mid()]) <= 1e-14);
    }
}

TEST_CASE("Riccati blow-up is bracketed near t = 1") {
    StepperConfig cfg;
    cfg.t_max = 5.0;
    auto r = evolve(GridFunction(default_grid(), -1.0), cfg, Forcing::none());
    REQUIRE(r.outcome.kind == Outcome::Kind::BlowUp);
    CHECK(r.outcome.t_lo < r.outcome.t_hi);
    CHECK(r.outcome.t_hi - r.outcome.t_lo <= cfg.dt);
    CHECK(r.outcome.t_hi >= 0.98);
    CHECK(r.outcome.t_lo <= 1.02);
    // The reciprocal sup-norm falls monotonically over the last frames.
    const auto& fr = r.trajectory.frames;
    REQUIRE(fr.size() >= 3);
    for (std::size_t k = fr.size() - 3; k + 1 < fr.size(); ++k) CHECK(sup_norm(fr[k + 1].u) > sup_norm(fr[k].u));
}

TEST_CASE("positive constant data decays") {
    StepperConfig cfg;
    cfg.t_max = 5.0;
    auto r = evolve(GridFunction(default_grid(), 1.0), cfg, Forcing::none(), {{"zero", GridFunction(default_grid())}});
    CHECK(r.outcome.kind != Outcome::Kind::BlowUp);
    // u = 1/(1+t) in the interior.
    CHECK(r.trajectory.frames.back().u[default_grid().mid()] == doctest::Approx(1.0 / 6.0).epsilon(1e-3));
}

TEST_CASE("stepper is second order in time") {
    const auto& g = default_grid();
    GridFunction u0(g);
    for (std::size_t i = 0; i < g.size(); ++i) u0[i] = 0.5 * std::exp(-g.x(i) * g.x(i));
    std::vector<GridFunction> out;
    for (double dt : {0.02, 0.01, 0.005}) {
        Stepper st(g, dt, Forcing::gaussian(0.0));
        auto v = u0.values;
        for (long k = 0, n = std::lround(1.0 / dt); k < n; ++k) st.advance(v);
        out.emplace_back(g, v);
    }
    double order = std::log2(sup_dist(out[0], out[1]) / sup_dist(out[1], out[2]));
    CHECK(order >= 1.8);
}

TEST_CASE("maximum principle bound by the constant Riccati solution") {
    const auto& g = default_grid();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(0.1, 0.9);
    for (int trial = 0; trial < 5; ++trial) {
        double a = ud(rng), w = 1.0 + 4.0 * ud(rng);
        GridFunction u0(g);
        for (std::size_t i = 0; i < g.size(); ++i) u0[i] = -a * std::exp(-g.x(i) * g.x(i) / w);
        StepperConfig cfg;
        cfg.t_max = 1.0;
        cfg.snapshot_stride = 1;
        auto r = evolve(u0, cfg, Forcing::none());
        for (const auto& fr : r.trajectory.frames) CHECK(sup_norm(fr.u) <= a / (1.0 - a * fr.t) + 1e-9);
    }
}

TEST_CASE("probe runs at c = -1.2 on either side of the frontier") {
    std::vector<Target> tg{{f0_low().label, f0_low().profile}};
    auto low = evolve(bump_probe(-3.0), StepperConfig{}, Forcing::gaussian(-1.2), tg);
    CHECK(low.outcome.kind == Outcome::Kind::BlowUp);
    CHECK(classify(low.trajectory, tg).kind == Outcome::Kind::BlowUp);
    auto high = evolve(bump_probe(-1.0), StepperConfig{}, Forcing::gaussian(-1.2), tg);
    REQUIRE(high.outcome.kind == Outcome::Kind::Converged);
    CHECK(high.outcome.equilibrium_label == f0_low().label);
    CHECK(classify(high.trajectory, tg).same_class(high.outcome));
}

TEST_CASE("classify") {
    const auto& f = f0_low().profile;
    std::vector<Target> tg{{"f0", f}};
    auto still = constant_trajectory(f, 10.0, Forcing::gaussian(-1.2));
    auto o = classify(still, tg);
    CHECK(o.kind == Outcome::Kind::Converged);
    CHECK(o.t_enter == 0.0);
    auto shorter = constant_trajectory(f, 4.0, Forcing::gaussian(-1.2));
    CHECK(classify(shorter, tg).kind == Outcome::Kind::Undetermined);

    GridFunction near = f;
    near[400] += 1e-5;
    std::vector<Target> twins{{"a", f}, {"b", near}};
    CHECK_THROWS_AS(classify(still, twins), AmbiguousConvergence);
}

TEST_CASE("linearized evolution grows at the top eigenvalue") {
    const auto& e = f1_zero();
    REQUIRE(e.unstable_dim == 2);
    auto sub = unstable_subspace(e.profile);
    StepperConfig cfg;
    cfg.t_max = 4.0;
    cfg.snapshot_stride = 5;
    auto base = constant_trajectory(e.profile, cfg.t_max);
    auto v = evolve_linearized(sub.basis[0], base, cfg);
    CHECK(fitted_growth_rate(v) == doctest::Approx(sub.eigenvalues[0]).epsilon(0.05));

    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    GridFunction r(e.profile.grid);
    for (std::size_t i = 1; i + 1 < r.size(); ++i) r[i] = nd(rng) * std::exp(-e.profile.grid.x(i) * e.profile.grid.x(i) / 8);
    auto vr = evolve_linearized(r, base, cfg);
    std::vector<Frame> late(vr.frames.begin() + static_cast<long>(vr.frames.size() / 2), vr.frames.end());
    Trajectory tail;
    tail.frames = late;
    CHECK(fitted_growth_rate(tail) == doctest::Approx(sub.eigenvalues[0]).epsilon(0.05));

    auto zero = evolve_linearized(GridFunction(e.profile.grid), base, cfg);
    CHECK(sup_norm(zero.frames.back().u) == 0.0);
}

TEST_CASE("linearization about the stable equilibrium decays") {
    const auto& g = default_grid();
    GridFunction v0(g);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) v0[i] = std::exp(-g.x(i) * g.x(i) / 4) * (1.0 + 0.3 * g.x(i));
    StepperConfig cfg;
    cfg.t_max = 10.0;
    auto v = evolve_linearized(v0, constant_trajectory(f0_low().profile, 10.0), cfg);
    CHECK(sup_norm(v.frames.back().u) < 0.5 * sup_norm(v0));
    CHECK(fitted_growth_rate(v) < 0.0);
}

TEST_CASE("linearized run rejects a short base") {
    StepperConfig cfg;
    cfg.t_max = 5.0;
    CHECK_THROWS_AS(evolve_linearized(GridFunction(default_grid()), constant_trajectory(f0_low().profile, 1.0), cfg),
                    DomainError);
}

TEST_CASE("trajectory directory round trip") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "hlab_traj_roundtrip";
    fs::remove_all(dir);
    StepperConfig cfg;
    cfg.t_max = 0.5;
    auto r = evolve(bump_probe(-1.0), cfg, Forcing::gaussian(-1.2));
    auto files = write_trajectory(dir.string(), r.trajectory, r.outcome, {{"note", "test"}});
    CHECK(files.back() == "trajectory.json");
    auto back = read_trajectory(dir.string());
    REQUIRE(back.frames.size() == r.trajectory.frames.size());
    for (std::size_t k = 0; k < back.frames.size(); ++k) {
        CHECK(back.frames[k].t == r.trajectory.frames[k].t);
        CHECK(back.frames[k].u.values == r.trajectory.frames[k].u.values);
    }
    CHECK(back.c() == -1.2);
    REQUIRE(back.terminal);
    CHECK(back.terminal->same_class(r.outcome));
    fs::remove_all(dir);
    CHECK_THROWS_AS(read_trajectory(dir.string()), DomainError);
}
