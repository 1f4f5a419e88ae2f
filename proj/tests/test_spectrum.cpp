#include <doctest.h>

#include "hlab/error.hpp"
#include "hlab/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

using namespace hlab;

namespace {

GridFunction sech2_well(const Grid& g, double depth) {
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 1.0 / std::cosh(g.x(i));
        f[i] = -depth * s * s;
    }
    return f;
}

std::size_t dense_count_below(const SymTridiagonal& t, double x) {
    const int n = static_cast<int>(t.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = t.diag[i];
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = t.off[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    std::size_t c = 0;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()(i) < x) ++c;
    return c;
}

}  // namespace

TEST_CASE("discrete Dirichlet Laplacian matches its closed form") {
    auto g = make_grid(M_PI / 2, 41);
    auto m = assemble_h(GridFunction(g), "zero");
    const std::size_t N = m.size();
    const double h = g.h();
    auto top = top_eigenvalues(m, N);
    for (std::size_t k = 1; k <= N; ++k) {
        double exact = -4.0 / (h * h) * std::pow(std::sin(k * M_PI / (2.0 * (N + 1))), 2);
        CHECK(top[k - 1] == doctest::Approx(exact).epsilon(1e-12));
    }
    // Lowest |lambda| mode is the half sine.
    auto v = eigenfunction(m, top[0]);
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
        CHECK(v[i] == doctest::Approx(std::sin(i * M_PI / (N + 1)) / std::sin((N + 1) / 2 * M_PI / (N + 1))).epsilon(1e-8));
}

TEST_CASE("constant potential shifts the spectrum by -2s") {
    auto g = make_grid(3.0, 61);
    auto f0 = sech2_well(g, 1.0);
    auto f1 = f0 + GridFunction(g, 1.0);
    auto a = top_eigenvalues(assemble_h(f0), 10);
    auto b = top_eigenvalues(assemble_h(f1), 10);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::fabs(b[k] - (a[k] - 2.0)) <= 2e-12);
    auto ma = assemble_h(f0), mb = assemble_h(f1);
    for (std::size_t i = 0; i < ma.size(); ++i) CHECK(mb.t.diag[i] == ma.t.diag[i] - 2.0);
}

TEST_CASE("Sturm counts agree with dense brute force") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick_n(1, 12);
    std::normal_distribution<double> nd;
    int agree = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = static_cast<std::size_t>(pick_n(rng));
        SymTridiagonal t;
        for (std::size_t i = 0; i < n; ++i) t.diag.push_back(3.0 * nd(rng));
        for (std::size_t i = 0; i + 1 < n; ++i) t.off.push_back(trial % 5 == 0 ? 0.0 : nd(rng));
        double x = 3.0 * nd(rng);
        std::size_t sturm = count_below(t, x);
        std::size_t brute = dense_count_below(t, x);
        CHECK(sturm == brute);
        CHECK(count_above(t, x) + sturm == n);
        agree += (sturm == brute);
    }
    CHECK(agree == 500);
}

TEST_CASE("Poschl-Teller bound state converges at second order") {
    std::vector<double> hs{0.1, 0.05, 0.025}, err;
    for (double h : hs) {
        std::size_t n = static_cast<std::size_t>(std::lround(40.0 / h)) + 1;
        auto g = make_grid(20.0, n);
        auto m = assemble_h(sech2_well(g, 1.0), "poschl-teller");
        auto ev = eigenvalues_above(m, 0.0);
        REQUIRE(ev.size() == 1);
        err.push_back(std::fabs(ev[0] - 1.0));
        CHECK(err.back() <= 5.0 * h * h);

        auto v = eigenfunction(m, ev[0]);
        double vv = 0, ss = 0, vs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 1.0 / std::cosh(g.x(i));
            vv += v[i] * v[i];
            ss += s * s;
            vs += v[i] * s;
        }
        CHECK(vs / std::sqrt(vv * ss) >= 0.999);
    }
    double order = std::log2(err[0] / err[1]);
    double order2 = std::log2(err[1] / err[2]);
    CHECK(order >= 1.8);
    CHECK(order2 >= 1.8);
}

TEST_CASE("eigenvalues above the Gershgorin bound are empty") {
    auto g = make_grid(5.0, 101);
    auto m = assemble_h(sech2_well(g, 2.0));
    CHECK(eigenvalues_above(m, m.t.bounds().second + 1.0).empty());
}

TEST_CASE("eigenpairs satisfy the residual bound and the sign rule") {
    auto g = make_grid(10.0, 401);
    SpectrumOptions opt;
    auto sp = compute_spectrum(assemble_h(sech2_well(g, 3.0)), 0.0, true, opt);
    REQUIRE(sp.eigenvalues.size() == 2);
    CHECK(sp.positive_count == 2);
    CHECK(sp.eigenvalues[0] > sp.eigenvalues[1]);
    auto m = assemble_h(sech2_well(g, 3.0));
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& v = sp.eigenfunctions[k];
        auto hv = apply_h(m, v);
        double res = 0.0;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) res = std::max(res, std::fabs(hv[i] - sp.eigenvalues[k] * v[i]));
        CHECK(res <= opt.tol_eig);
        CHECK(sup_norm(v) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(std::fabs(inner(sp.eigenfunctions[0], sp.eigenfunctions[1])) < 1e-8);
    // Odd mode: tie between +-x goes to the left node, which is made positive.
    const auto& odd = sp.eigenfunctions[1];
    std::size_t arg = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::fabs(odd[i]) > std::fabs(odd[arg]) * (1 + 1e-9)) arg = i;
    CHECK(g.x(arg) < 0.0);
    CHECK(odd[arg] > 0.0);
}

TEST_CASE("degenerate eigenvalues are refused") {
    auto g = make_grid(2.0, 9);
    SchroedingerMatrix m{g, {}, "split"};
    m.t.diag = {1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 0.0};
    m.t.off = {0.5, 0.5, 0.0, 0.5, 0.5, 0.0};
    CHECK_THROWS_AS(eigenfunction(m, kth_largest(m.t, 0, 1e-12)), NotIsolated);
}

TEST_CASE("unstable subspace of the zero potential is trivial") {
    auto g = make_grid(20.0, 801);
    auto u = unstable_subspace(GridFunction(g));
    CHECK(u.dimension == 0);
    CHECK(u.basis.empty());
}

TEST_CASE("pivoted shifted solve") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 2 + trial % 20;
        SymTridiagonal t;
        for (std::size_t i = 0; i < n; ++i) t.diag.push_back(nd(rng));
        for (std::size_t i = 0; i + 1 < n; ++i) t.off.push_back(nd(rng));
        std::vector<double> x(n);
        for (double& v : x) v = nd(rng);
        double shift = nd(rng);
        auto b = t.apply(x);
        for (std::size_t i = 0; i < n; ++i) b[i] -= shift * x[i];
        auto y = solve_shifted(t, shift, b);
        for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-6));
    }
}
