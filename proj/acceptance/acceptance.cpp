#include "hlab/equilibria.hpp"
#include "hlab/error.hpp"
#include "hlab/evolution.hpp"
#include "hlab/manifold.hpp"
#include "hlab/semigroup.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace hlab;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

const Grid& grid() {
    static const Grid g = make_grid(20.0, 801);
    return g;
}

std::vector<ShootState> default_seeds(std::size_t per_axis = 9) { return seed_grid(-3.0, 3.0, -1.0, 1.0, per_axis); }

const Equilibrium& pick(const std::vector<Equilibrium>& eqs, std::size_t dim) {
    for (const auto& e : eqs)
        if (e.unstable_dim == dim) return e;
    throw NoConvergence("no equilibrium of unstable dimension " + std::to_string(dim));
}

const std::vector<Equilibrium>& at_c(double c) {
    static std::vector<std::pair<double, std::vector<Equilibrium>>> cache;
    for (const auto& [cv, eqs] : cache)
        if (cv == c) return eqs;
    cache.emplace_back(c, scan_diagram({c}, default_seeds(), grid()).equilibria);
    return cache.back().second;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within(double v, double centre, double tol) { return std::fabs(v - centre) <= tol; }

Verdict unique_equilibrium() {
    auto scan = scan_diagram({-1.2}, seed_grid(-4.0, 4.0, -2.0, 2.0, 15), grid());
    const auto& e = scan.equilibria;
    bool ok = e.size() == 1 && e[0].unstable_dim == 0;
    return {ok, fmt("%zu seeds, %zu distinct equilibria, f(0) = %.6f, unstable dim %zu", scan.attempts, e.size(),
                    e.empty() ? NAN : e[0].shoot.f0, e.empty() ? 0 : e[0].unstable_dim)};
}

Verdict eigenvalue_ratio() {
    const auto& f1 = pick(at_c(0.0), 2);
    const auto& ev = f1.positive_eigenvalues;
    if (ev.size() != 2) return {false, fmt("%zu positive eigenvalues", ev.size())};
    const double ratio = ev[0] / ev[1];
    const bool simple = ev[0] - ev[1] > 1e-6;
    return {simple && ratio >= 5.0 && ratio <= 20.0,
            fmt("eigenvalues %.6f and %.6f, ratio %.2f (window [5, 20])", ev[0], ev[1], ratio)};
}

Verdict bifurcation_events() {
    const double lo = 0.03, hi = 0.09;
    auto starts = scan_diagram({lo, 0.5 * (lo + hi), hi}, default_seeds(), grid());
    std::vector<BranchEvent> events;
    ContinuationOptions copt;
    for (const auto& e : starts.equilibria)
        for (int dir : {+1, -1}) {
            if ((dir > 0 && e.shoot.c >= hi) || (dir < 0 && e.shoot.c <= lo)) continue;
            copt.direction = dir;
            auto b = continue_branch(e, lo, hi, copt, grid());
            events.insert(events.end(), b.events.begin(), b.events.end());
        }
    bool near_first = false, near_second = false;
    std::ostringstream os;
    std::vector<std::pair<std::string, double>> seen;
    for (const auto& ev : events) {
        near_first = near_first || within(ev.c, 0.0501, 0.005);
        near_second = near_second || within(ev.c, 0.0740, 0.005);
        bool dup = false;
        for (const auto& [k, c] : seen) dup = dup || (k == to_string(ev.kind) && std::fabs(c - ev.c) < 1e-3);
        if (!dup) seen.emplace_back(to_string(ev.kind), ev.c);
    }
    for (const auto& [k, c] : seen) os << ' ' << k << '@' << fmt("%.5f", c);
    return {near_first && near_second, "events:" + os.str()};
}

Verdict frontier() {
    const auto& eqs = at_c(-1.2);
    const auto& base = pick(eqs, 0);
    StepperConfig cfg;
    auto a = frontier_bisect(base, -3.0, -1.0, cfg, targets_from(eqs));
    cfg.dt /= 2.0;
    auto b = frontier_bisect(base, -3.0, -1.0, cfg, targets_from(eqs));
    const bool width = a.A_hi - a.A_lo <= 0.01;
    const bool window = a.A_hi >= -2.35 && a.A_lo <= -1.95;
    const double shift = std::max(std::fabs(a.A_lo - b.A_lo), std::fabs(a.A_hi - b.A_hi));
    return {width && window && shift <= 0.05,
            fmt("A* in [%.5f, %.5f] (window [-2.35, -1.95]: %s); at dt/2 [%.5f, %.5f], shift %.3g", a.A_lo, a.A_hi,
                window ? "hit" : "miss", b.A_lo, b.A_hi, shift)};
}

Verdict fan_boundary() {
    const auto& eqs = at_c(0.0);
    const auto& f1 = pick(eqs, 2);
    std::vector<double> thetas{1.11494, 1.11496, 1.11497, 1.11498, 1.11499, 1.115};
    for (int k = 0; k <= 16; ++k) thetas.push_back(M_PI * k / 16.0);
    FanOptions opt;
    opt.tol_theta = 1e-5;
    auto fan = fan_classify(f1, 0.1, thetas, StepperConfig{}, targets_from(eqs), opt);
    if (!fan.theta_bracket) return {false, "no outcome change over the sweep"};
    const auto [lo, hi] = *fan.theta_bracket;
    const bool sharp = hi - lo <= 1e-4;
    const bool window = hi >= 1.06 && lo <= 1.17;
    return {sharp && window, fmt("theta* in [%.8f, %.8f], width %.2g (sharp: %s; window [1.06, 1.17]: %s)", lo, hi,
                                 hi - lo, sharp ? "yes" : "no", window ? "hit" : "miss")};
}

Verdict connecting_dimension() {
    const auto& eqs = at_c(0.0);
    const auto& f1 = pick(eqs, 2);
    auto sub = unstable_subspace(f1.profile);
    auto run = evolve(fan_probe(f1.profile, sub.basis[1], sub.basis[0], 1e-3, M_PI / 2.0), StepperConfig{},
                      Forcing::gaussian(0.0), targets_from(eqs));
    auto tr = trace_orbit_spectrum(run.trajectory);
    auto rep = connection_report(run.trajectory, f1, eqs, tr, 1e-3);
    std::size_t down = 0;
    for (const auto& c : tr.crossings) down += c.downward;
    const bool ok = rep.source_dim == 2 && rep.target_dim == 0 && rep.connecting_dim == 2 && down == 2 &&
                    tr.crossings.size() == 2 && rep.simplicity_certified;
    return {ok, fmt("source %zu, target %zu, connecting %zu, %zu downward of %zu crossings, smallest gap %.3g, %s",
                    rep.source_dim, rep.target_dim, rep.connecting_dim, down, tr.crossings.size(), rep.worst_gap,
                    rep.simplicity_certified ? "certified" : "not certified")};
}

Verdict poschl_teller() {
    std::vector<double> hs{0.1, 0.05, 0.025}, err;
    bool ok = true;
    for (double h : hs) {
        auto g = make_grid(20.0, static_cast<std::size_t>(std::lround(40.0 / h)) + 1);
        GridFunction f(g);
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = -1.0 / std::pow(std::cosh(g.x(i)), 2);
        auto ev = eigenvalues_above(assemble_h(f), 0.0);
        ok = ok && ev.size() == 1;
        err.push_back(ev.empty() ? INFINITY : std::fabs(ev[0] - 1.0));
        ok = ok && err.back() <= 5.0 * h * h;
    }
    const double order = std::log2(err[1] / err[2]);
    return {ok && order >= 1.8, fmt("errors %.3g %.3g %.3g, order %.3f", err[0], err[1], err[2], order)};
}

Verdict riccati() {
    auto r = evolve(GridFunction(grid(), -1.0), StepperConfig{}, Forcing::none());
    if (r.outcome.kind != Outcome::Kind::BlowUp) return {false, "no blow-up: " + r.outcome.describe()};
    const double lo = r.outcome.t_lo, hi = r.outcome.t_hi;
    return {hi >= 0.98 && lo <= 1.02, fmt("t* in [%.7f, %.7f]", lo, hi)};
}

Verdict right_inverse() {
    FrozenPropagator prop(pick(at_c(-1.2), 0).profile);
    std::vector<double> res;
    double final_norm = 0.0;
    for (double dt : {0.01, 0.005}) {
        auto w = random_smooth_field(prop, backward_times(20.0, dt), 5.0, 8, 42);
        auto r = verify_right_inverse(w, prop, DecayRate(0.01));
        res.push_back(r.residual);
        final_norm = std::max(final_norm, r.final_norm);
    }
    const double order = std::log2(res[0] / res[1]);
    return {res[0] <= 1e-3 && order >= 1.8 && final_norm == 0.0,
            fmt("residual %.3g at dt 0.01, %.3g at dt 0.005, order %.3f, |Gamma w(0)| = %g", res[0], res[1], order,
                final_norm)};
}

Verdict kernel_agreement() {
    std::vector<Equilibrium> eqs = scan_diagram({-1.2}, seed_grid(-4.0, 4.0, -2.0, 2.0, 15), grid()).equilibria;
    for (const auto& e : scan_diagram({0.03, 0.06, 0.09}, default_seeds(), grid()).equilibria) eqs.push_back(e);
    const double dt = 0.01;
    auto ts = backward_times(20.0, dt);
    std::size_t bad = 0;
    double worst = 0.0;
    for (const auto& e : eqs) {
        const std::size_t pc = positive_count(assemble_h(e.profile));
        const double a = pc ? 0.5 * e.positive_eigenvalues.back() : 0.01;
        auto kb = kernel_basis(e.profile, DecayRate(a), ts);
        if (kb.size() != pc) ++bad;
        for (std::size_t k = 0; k < kb.size(); ++k) {
            const double lam = e.positive_eigenvalues[k];
            auto L = apply_L(kb[k], e.profile);
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < L.size(); ++j) {
                num = std::max(num, sup_norm(L.frames[j].u));
                den = std::max(den, sup_norm(kb[k].frames[j].u));
            }
            const double rel = num / den;
            worst = std::max(worst, rel);
            if (rel > 1e-6 + lam * lam * lam * dt * dt / 3.0) ++bad;
        }
    }
    return {bad == 0, fmt("%zu equilibria, %zu mismatches, worst relative residual %.3g", eqs.size(), bad, worst)};
}

Verdict property_suites() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> pick_n(1, 12);
    std::size_t sturm_bad = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = static_cast<std::size_t>(pick_n(rng));
        SymTridiagonal t;
        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            t.diag.push_back(3.0 * nd(rng));
            dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = t.diag.back();
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            t.off.push_back(trial % 5 == 0 ? 0.0 : nd(rng));
            const auto I = static_cast<Eigen::Index>(i);
            dense(I, I + 1) = dense(I + 1, I) = t.off.back();
        }
        const double x = 3.0 * nd(rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
        std::size_t brute = 0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) brute += es.eigenvalues()(k) < x;
        sturm_bad += count_below(t, x) != brute;
    }

    std::uniform_int_distribution<int> pick_half(1, 99);
    std::uniform_real_distribution<double> ud(0.05, 1.0);
    std::size_t holder_bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto g = make_grid(0.5 + 3.0 * ud(rng), 2 * static_cast<std::size_t>(pick_half(rng)) + 1);
        GridFunction u(g);
        for (double& v : u.values) v = nd(rng);
        const double alpha = ud(rng);
        double semi = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = i + 1; j < u.size(); ++j)
                semi = std::max(semi, std::fabs(u[j] - u[i]) / std::pow(static_cast<double>(j - i) * g.h(), alpha));
        holder_bad += holder_norm(u, HolderExponent(alpha)) != sup_norm(u) + semi;
    }

    std::size_t norm_bad = 0;
    auto g = make_grid(4.0, 161);
    for (int trial = 0; trial < 200; ++trial) {
        GridFunction u(g), v(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            u[i] = nd(rng);
            v[i] = nd(rng) * std::exp(-g.x(i) * g.x(i));
        }
        const double s = 5.0 * nd(rng);
        norm_bad += std::fabs(holder_norm(s * u) - std::fabs(s) * holder_norm(u)) > 1e-12 * holder_norm(s * u);
        norm_bad += std::fabs(sup_norm(s * u) - std::fabs(s) * sup_norm(u)) > 1e-14 * sup_norm(s * u);
        norm_bad += holder_norm(u + v) > holder_norm(u) + holder_norm(v) + 1e-12;
        norm_bad += sup_norm(u + v) > sup_norm(u) + sup_norm(v) + 1e-14;
    }
    return {sturm_bad == 0 && holder_bad == 0 && norm_bad == 0,
            fmt("Sturm mismatches %zu/500, Hoelder mismatches %zu/200, norm violations %zu/800", sturm_bad, holder_bad,
                norm_bad)};
}

Verdict backward_decay() {
    const auto& f1 = pick(at_c(0.0), 2);
    auto sub = unstable_subspace(f1.profile);
    StepperConfig cfg;
    cfg.snapshot_stride = 1;
    cfg.t_max = 10.0;
    const double eps = 1e-3;
    bool ok = true;
    std::ostringstream os;
    for (std::size_t k : {1u, 0u}) {
        auto run = evolve(f1.profile + eps * sub.basis[k], cfg, Forcing::gaussian(0.0));
        auto fit = estimate_mode_rate(run.trajectory, f1.profile, sub.basis[k], 0.5 * eps, 5.0 * eps);
        const double lam = sub.eigenvalues[k];
        const double rel = (fit.rate - lam) / lam;
        ok = ok && std::fabs(rel) <= 0.05;
        os << fmt("%slambda %.6f fitted %.6f (%+.2f%%, t in [%.2f, %.2f])", k == 1 ? "" : "; ", lam, fit.rate,
                  100.0 * rel, fit.t_lo, fit.t_hi);
    }
    return {ok, os.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"unique equilibrium at c=-1.2", unique_equilibrium},
        {"eigenvalue ratio of f1 at c=0", eigenvalue_ratio},
        {"bifurcation events on [0.03, 0.09]", bifurcation_events},
        {"frontier of the stable manifold", frontier},
        {"fan boundary at c=0", fan_boundary},
        {"connecting dimension by spectral flow", connecting_dimension},
        {"Poschl-Teller oracle", poschl_teller},
        {"Riccati blow-up oracle", riccati},
        {"right inverse", right_inverse},
        {"kernel and spectrum agree", kernel_agreement},
        {"property suites", property_suites},
        {"backward decay rates", backward_decay},
    };
    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !v.pass;
        std::printf("criterion %2zu %s  %s: %s (%.1f s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%zu of %zu criteria pass\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
