#include <doctest.h>

#include "hlab/equilibria.hpp"
#include "hlab/error.hpp"
#include "hlab/semigroup.hpp"

#include <cmath>
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

const FrozenPropagator& prop_f0() {
    static const FrozenPropagator p(f0_low().profile);
    return p;
}

double field_sup(const SpaceTimeField& f) {
    double m = 0.0;
    for (const auto& fr : f.frames) m = std::max(m, sup_norm(fr.u));
    return m;
}

SpaceTimeField separated(const std::vector<double>& ts, double a, const GridFunction& v) {
    SpaceTimeField w;
    for (double t : ts) w.frames.push_back({t, std::exp(a * t) * v});
    return w;
}

}  // namespace

TEST_CASE("backward time levels end at zero") {
    auto ts = backward_times(1.0, 0.25);
    REQUIRE(ts.size() == 5);
    CHECK(ts.front() == -1.0);
    CHECK(ts.back() == 0.0);
    CHECK_THROWS_AS(backward_times(0.0, 0.1), DomainError);
    CHECK_THROWS_AS(backward_times(0.1, 0.1), DomainError);
}

TEST_CASE("eigendecomposition reconstructs H") {
    const auto& p = prop_f0();
    const double n = static_cast<double>(p.modes());
    CHECK(p.reconstruction_error() <= n * SpectrumOptions{}.tol_eig);
    CHECK(p.orthonormality_error() <= 1e-12);
    // Top of the full spectrum agrees with the Sturm bisection.
    auto top = top_eigenvalues(p.matrix(), 3);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::fabs(p.eigenvalues()(static_cast<Eigen::Index>(p.modes() - 1 - k)) - top[k]) <= 1e-9);
    auto v = p.mode(p.modes() - 1);
    CHECK(inner(v, v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward flow is a semigroup") {
    const auto& p = prop_f0();
    const auto& g = default_grid();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    GridFunction v(g);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) v[i] = std::exp(-g.x(i) * g.x(i) / 3.0) * std::cos(g.x(i));
    const double tol = static_cast<double>(p.modes()) * SpectrumOptions{}.tol_eig;
    for (int trial = 0; trial < 5; ++trial) {
        double s = ud(rng), r = ud(rng);
        auto two = p.propagate(p.propagate(v, s), r);
        auto one = p.propagate(v, s + r);
        CHECK(sup_norm(two - one) <= tol);
    }
    CHECK(sup_norm(p.propagate(v, 0.0) - v) <= 1e-12);
    CHECK_THROWS_AS(p.propagate(v, -0.5), DomainError);
}

TEST_CASE("apply_L annihilates separated solutions only at eigenvalues") {
    const auto& p = prop_f0();
    auto ts = backward_times(5.0, 0.01);
    CHECK(field_sup(apply_L(separated(ts, 0.0, GridFunction(default_grid())), f0_low().profile)) == 0.0);

    const std::size_t k = p.modes() - 1;
    const double lam = p.eigenvalues()(static_cast<Eigen::Index>(k));
    auto v = p.mode(k);
    auto on = apply_L(separated(ts, lam, v), f0_low().profile);
    CHECK(field_sup(on) / field_sup(separated(ts, lam, v)) <= 0.01 * 0.01 + 1e-8);

    // Off the spectrum the residual is about |lambda - lambda_k| |v|.
    auto off = apply_L(separated(ts, lam + 0.3, v), f0_low().profile);
    const auto& last = off.frames.back().u;
    CHECK(sup_norm(last) == doctest::Approx(0.3 * sup_norm(v)).epsilon(1e-3));
}

TEST_CASE("kernel basis size equals the positive count") {
    auto ts = backward_times(20.0, 0.01);
    CHECK(kernel_basis(f0_low().profile, DecayRate(0.1), ts).empty());

    auto f1 = solve_equilibrium({-1.25, 0.0, 0.0}, default_grid());
    auto kb = kernel_basis(f1.profile, DecayRate(0.01), ts);
    REQUIRE(kb.size() == 2);
    REQUIRE(kb.size() == positive_count(assemble_h(f1.profile)));
    for (const auto& k : kb) {
        double lam = std::log(sup_norm(k.frames.back().u) / sup_norm(k.frames.front().u)) / 20.0;
        CHECK(field_sup(apply_L(k, f1.profile)) / field_sup(k) <= 1e-6 + lam * lam * lam * 1e-4 / 3.0);
        CHECK(std::isfinite(weighted_decay_norm(k.frames, DecayRate(0.01))));
    }
    CHECK_THROWS_AS(kernel_basis(f1.profile, DecayRate(1.0), ts), DomainError);
}

TEST_CASE("Gamma matches the closed-form mode integrals") {
    const auto& p = prop_f0();
    auto ts = backward_times(20.0, 0.01);
    const std::size_t k = p.modes() - 1;
    const double lam = p.eigenvalues()(static_cast<Eigen::Index>(k));
    auto v = p.mode(k);
    for (double a : {0.5, lam}) {
        auto G = apply_gamma(separated(ts, a, v), p);
        double err = 0.0, big = 0.0;
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const double t = ts[j];
            double cf = a == lam ? -t * std::exp(lam * t) : (std::exp(lam * t) - std::exp(a * t)) / (a - lam);
            err = std::max(err, sup_norm(G.frames[j].u - cf * v));
            big = std::max(big, std::fabs(cf) * sup_norm(v));
        }
        CHECK(err / big <= 1e-5);
        CHECK(sup_norm(G.frames.back().u) == 0.0);
    }
    CHECK(field_sup(apply_gamma(separated(ts, 0.0, GridFunction(default_grid())), p)) == 0.0);
}

TEST_CASE("Gamma refuses modes whose growth over the span overflows the guard") {
    const auto& p = prop_f0();
    auto ts = backward_times(20.0, 0.01);
    CHECK_THROWS_AS(apply_gamma(separated(ts, 0.0, p.mode(0)), p), ModeOverflow);
}

TEST_CASE("right inverse residual is second order in dt") {
    const auto& p = prop_f0();
    std::vector<double> res;
    for (double dt : {0.02, 0.01}) {
        auto w = random_smooth_field(p, backward_times(20.0, dt), 5.0, 8, 42);
        auto r = verify_right_inverse(w, p, DecayRate(0.01));
        CHECK(r.final_norm == 0.0);
        res.push_back(r.residual);
    }
    CHECK(res[1] <= 1e-3);
    CHECK(std::log2(res[0] / res[1]) >= 1.8);

    auto zero = verify_right_inverse(separated(backward_times(2.0, 0.01), 0.0, GridFunction(default_grid())), p,
                                     DecayRate(0.01));
    CHECK(zero.residual == 0.0);
    CHECK(zero.final_norm == 0.0);
}

TEST_CASE("Gamma is bounded in the weighted norm") {
    const auto& p = prop_f0();
    auto ts = backward_times(20.0, 0.01);
    DecayRate a(0.05);
    CHECK(bounded_image_check(separated(ts, 0.0, GridFunction(default_grid())), p, a) == 0.0);
    // A mode that decays backward faster than the weight: the ratio is capped by 1/|a - lambda|.
    auto f1 = solve_equilibrium({-1.25, 0.0, 0.0}, default_grid());
    FrozenPropagator p1(f1.profile);
    const std::size_t top = p1.modes() - 1;
    const double l1 = p1.eigenvalues()(static_cast<Eigen::Index>(top));
    REQUIRE(l1 > a.a);
    double single = bounded_image_check(separated(ts, a.a, p1.mode(top)), p1, a);
    CHECK(single <= 1.0 / std::fabs(a.a - l1) + 0.01);
    CHECK(single >= 0.9 / std::fabs(a.a - l1));

    double kmax = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        kmax = std::max(kmax, bounded_image_check(random_smooth_field(p, ts, 5.0, 8, seed), p, a));
    CHECK(std::isfinite(kmax));
    CHECK(kmax > 0.0);
}
