#include "hlab/equilibria.hpp"

#include "hlab/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <thread>

namespace hlab {

namespace {

const double kTailSlope = std::sqrt(2.0 / 3.0);
constexpr double kSentinel = 1e30;

std::size_t match_steps(const Grid& grid, const EquilibriumOptions& opt) {
    double xm = std::min(opt.x_match, grid.half_width());
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(xm / grid.h())));
}

double signed_pow32(double f) { return std::copysign(std::pow(std::fabs(f), 1.5), f); }

// RK4 for f'' = f^2 - phi from x = 0 outward; optionally records f at every node.
struct Leg {
    double f = 0.0, fp = 0.0;
    bool diverged = false;
};

Leg integrate_leg(double f0, double fp0, double dir, std::size_t steps, double h, const Forcing& phi, double guard,
                  std::vector<double>* samples) {
    double f = f0, fp = fp0, x = 0.0;
    const double s = dir * h;
    auto acc = [&](double xx, double ff) { return ff * ff - phi(xx); };
    for (std::size_t k = 0; k < steps; ++k) {
        double k1f = fp, k1p = acc(x, f);
        double k2f = fp + 0.5 * s * k1p, k2p = acc(x + 0.5 * s, f + 0.5 * s * k1f);
        double k3f = fp + 0.5 * s * k2p, k3p = acc(x + 0.5 * s, f + 0.5 * s * k2f);
        double k4f = fp + s * k3p, k4p = acc(x + s, f + s * k3f);
        f += s / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f);
        fp += s / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        x = static_cast<double>(k + 1) * s;
        if (!std::isfinite(f) || !std::isfinite(fp) || std::fabs(f) > guard) return {f, fp, true};
        if (samples) samples->push_back(f);
    }
    return {f, fp, false};
}

}  // namespace

double ShootResult::max_miss() const {
    if (diverged) return kSentinel;
    return std::max(std::fabs(miss_right), std::fabs(miss_left));
}

ShootResult shoot_residual(const ShootState& s, const Grid& grid, const EquilibriumOptions& opt) {
    const std::size_t steps = match_steps(grid, opt);
    const Forcing phi = opt.forcing(s.c);
    ShootResult r;
    Leg right = integrate_leg(s.f0, s.fp0, 1.0, steps, grid.h(), phi, opt.overflow_guard, nullptr);
    Leg left = integrate_leg(s.f0, s.fp0, -1.0, steps, grid.h(), phi, opt.overflow_guard, nullptr);
    if (right.diverged || left.diverged) {
        r.diverged = true;
        r.miss_right = r.miss_left = kSentinel;
        return r;
    }
    r.tail_right = right.f;
    r.tail_left = left.f;
    r.miss_right = right.fp + kTailSlope * signed_pow32(right.f);
    r.miss_left = left.fp - kTailSlope * signed_pow32(left.f);
    return r;
}

double equilibrium_residual(const GridFunction& f, const Forcing& phi) {
    const Grid& g = f.grid;
    const double ih2 = 1.0 / (g.h() * g.h());
    double r = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        double v = (f[i - 1] - 2.0 * f[i] + f[i + 1]) * ih2 - f[i] * f[i] + phi(g.x(i));
        r = std::max(r, std::fabs(v));
    }
    return r;
}

GridFunction polish_profile(GridFunction f, const Forcing& phi, const EquilibriumOptions& opt) {
    const Grid& g = f.grid;
    const std::size_t n = g.size();
    const double ih2 = 1.0 / (g.h() * g.h());
    f[0] = 0.0;
    f[n - 1] = 0.0;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = phi(g.x(i));

    auto residual_vec = [&](const GridFunction& u, std::vector<double>& r) {
        double m = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            r[i - 1] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ih2 - u[i] * u[i] + p[i];
            m = std::max(m, std::fabs(r[i - 1]));
        }
        return std::isfinite(m) ? m : kSentinel;
    };

    std::vector<double> r(n - 2);
    double res = residual_vec(f, r);
    int extra = 0;
    for (int it = 0; it < 4 * opt.max_newton; ++it) {
        if (res <= opt.tol_eq && ++extra > 2) return f;
        SymTridiagonal jac;
        jac.diag.resize(n - 2);
        jac.off.assign(n - 3, ih2);
        for (std::size_t i = 1; i + 1 < n; ++i) jac.diag[i - 1] = -2.0 * ih2 - 2.0 * f[i];
        std::vector<double> rhs(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
        auto delta = solve_shifted(jac, 0.0, rhs);

        double lam = 1.0;
        bool accepted = false;
        GridFunction trial = f;
        std::vector<double> rt(n - 2);
        for (int k = 0; k <= opt.max_halvings; ++k) {
            for (std::size_t i = 1; i + 1 < n; ++i) trial[i] = f[i] + lam * delta[i - 1];
            double rr = residual_vec(trial, rt);
            if (rr < res || (res <= opt.tol_eq && rr <= opt.tol_eq)) {
                f = trial;
                r = rt;
                res = rr;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted) {
            if (res <= opt.tol_eq) return f;
            break;
        }
    }
    if (res <= opt.tol_eq) return f;
    throw NoConvergence("profile Newton stalled at residual " + format_real(res));
}

ShootState newton_shoot(const ShootState& guess, const Grid& grid, const EquilibriumOptions& opt) {
    ShootState s = guess;
    ShootResult m = shoot_residual(s, grid, opt);
    if (m.diverged) throw Diverged("shooting guess diverges before the matching point");
    for (int it = 0; it < opt.max_newton; ++it) {
        double cur = m.max_miss();
        if (cur <= opt.tol_shoot) return s;
        double j[2][2];
        for (int col = 0; col < 2; ++col) {
            double base = col == 0 ? s.f0 : s.fp0;
            double e = opt.fd_eps * std::max(1.0, std::fabs(base));
            ShootState a = s, b = s;
            (col == 0 ? a.f0 : a.fp0) += e;
            (col == 0 ? b.f0 : b.fp0) -= e;
            ShootResult ra = shoot_residual(a, grid, opt), rb = shoot_residual(b, grid, opt);
            if (ra.diverged || rb.diverged) throw Diverged("shooting Jacobian probe diverges");
            j[0][col] = (ra.miss_right - rb.miss_right) / (2 * e);
            j[1][col] = (ra.miss_left - rb.miss_left) / (2 * e);
        }
        double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if (det == 0.0 || !std::isfinite(det)) throw NoConvergence("singular shooting Jacobian");
        double d0 = -(j[1][1] * m.miss_right - j[0][1] * m.miss_left) / det;
        double d1 = -(-j[1][0] * m.miss_right + j[0][0] * m.miss_left) / det;

        double lam = 1.0;
        bool accepted = false, all_diverged = true;
        for (int k = 0; k <= opt.max_halvings; ++k) {
            ShootState t{s.f0 + lam * d0, s.fp0 + lam * d1, s.c};
            ShootResult rt = shoot_residual(t, grid, opt);
            if (!rt.diverged) all_diverged = false;
            if (!rt.diverged && rt.max_miss() < cur) {
                s = t;
                m = rt;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted) {
            if (all_diverged) throw Diverged("every damped shooting step diverges");
            throw NoConvergence("shooting Newton stalled at miss " + format_real(cur));
        }
    }
    if (m.max_miss() <= opt.tol_shoot) return s;
    throw NoConvergence("shooting Newton exhausted its iterations");
}

Equilibrium assemble_equilibrium(const ShootState& root, const Grid& grid, const EquilibriumOptions& opt) {
    const std::size_t steps = match_steps(grid, opt);
    const Forcing phi = opt.forcing(root.c);
    ShootResult sr = shoot_residual(root, grid, opt);
    if (sr.diverged) throw Diverged("shooting root diverges");
    double tail_min = std::min(sr.tail_right, sr.tail_left);
    if (tail_min < -opt.tol_tail)
        throw Inadmissible("profile tail turns negative (f = " + format_real(tail_min) + " at the matching point)");

    std::vector<double> right, left;
    integrate_leg(root.f0, root.fp0, 1.0, steps, grid.h(), phi, opt.overflow_guard, &right);
    integrate_leg(root.f0, root.fp0, -1.0, steps, grid.h(), phi, opt.overflow_guard, &left);

    const std::size_t mid = grid.mid();
    const double xm = static_cast<double>(steps) * grid.h();
    GridFunction guess(grid);
    auto far = [&](double tail, double dist) {
        if (tail > 0.0) {
            double x0 = xm - std::sqrt(6.0 / tail);
            return 6.0 / ((dist - x0) * (dist - x0));
        }
        return tail * std::exp(-(dist - xm));
    };
    guess[mid] = root.f0;
    for (std::size_t k = 1; k <= mid; ++k) {
        double dist = static_cast<double>(k) * grid.h();
        guess[mid + k] = k <= steps ? right[k - 1] : far(sr.tail_right, dist);
        guess[mid - k] = k <= steps ? left[k - 1] : far(sr.tail_left, dist);
    }

    Equilibrium eq{root, polish_profile(guess, phi, opt), 0.0, 0, {}, tail_min, {}};
    eq.residual = equilibrium_residual(eq.profile, phi);
    double edge = std::max(std::fabs(eq.profile[0]), std::fabs(eq.profile[grid.size() - 1]));
    if (edge > opt.tol_boundary) throw Inadmissible("profile does not decay at the boundary");
    auto m = assemble_h(eq.profile);
    eq.positive_eigenvalues = eigenvalues_above(m, 0.0, opt.spectrum);
    eq.unstable_dim = eq.positive_eigenvalues.size();
    eq.label = "c=" + format_real(root.c) + ";f0=" + format_real(root.f0) + ";fp0=" + format_real(root.fp0);
    return eq;
}

namespace {

ShootState reroot_from_profile(const GridFunction& f, double c) {
    const std::size_t mid = f.grid.mid();
    return {f[mid], (f[mid + 1] - f[mid - 1]) / (2.0 * f.grid.h()), c};
}

}  // namespace

Equilibrium solve_equilibrium(const ShootState& guess, const Grid& grid, const EquilibriumOptions& opt) {
    try {
        return assemble_equilibrium(newton_shoot(guess, grid, opt), grid, opt);
    } catch (const Error&) {
        if (!opt.fd_fallback) throw;
    }
    // The shooting basin is narrow; the collocation Newton's is not.
    GridFunction seed(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid.x(i);
        seed[i] = (guess.f0 + guess.fp0 * x) * std::exp(-0.5 * x * x);
    }
    GridFunction prof = polish_profile(seed, opt.forcing(guess.c), opt);
    return assemble_equilibrium(newton_shoot(reroot_from_profile(prof, guess.c), grid, opt), grid, opt);
}

Equilibrium solve_equilibrium_from_profile(const GridFunction& guess, double c, const EquilibriumOptions& opt) {
    GridFunction prof = polish_profile(guess, opt.forcing(c), opt);
    ShootState root = newton_shoot(reroot_from_profile(prof, c), guess.grid, opt);
    return assemble_equilibrium(root, guess.grid, opt);
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::DeterminantSign: return "determinant_sign";
        case EventKind::Fold: return "fold";
        case EventKind::UnstableDimChange: return "unstable_dim_change";
        case EventKind::DecayLoss: return "decay_loss";
    }
    return "unknown";
}

namespace {

using Vec3 = std::array<double, 3>;

struct ContPoint {
    Vec3 y{};        // f0, fp0, c
    double jac[2][3]{};
    Vec3 tangent{};
    double det_s = 0.0;
    double tail = 0.0;
    long dim = -1;   // -1 when the profile could not be assembled
    std::optional<Equilibrium> eq;
};

class Continuer {
public:
    Continuer(const Grid& g, const EquilibriumOptions& o, const ContinuationOptions& c) : grid_(g), opt_(o), copt_(c) {}

    ShootResult shot(const Vec3& y) const { return shoot_residual({y[0], y[1], y[2]}, grid_, opt_); }

    bool evaluate(ContPoint& p, bool with_profile) const {
        ShootResult r = shot(p.y);
        if (r.diverged) return false;
        p.tail = std::min(r.tail_right, r.tail_left);
        for (int col = 0; col < 3; ++col) {
            double e = opt_.fd_eps * std::max(1.0, std::fabs(p.y[col]));
            Vec3 a = p.y, b = p.y;
            a[col] += e;
            b[col] -= e;
            ShootResult ra = shot(a), rb = shot(b);
            if (ra.diverged || rb.diverged) return false;
            p.jac[0][col] = (ra.miss_right - rb.miss_right) / (2 * e);
            p.jac[1][col] = (ra.miss_left - rb.miss_left) / (2 * e);
        }
        p.det_s = p.jac[0][0] * p.jac[1][1] - p.jac[0][1] * p.jac[1][0];
        const auto& a = p.jac[0];
        const auto& b = p.jac[1];
        Vec3 t{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
        double nt = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
        if (!(nt > 0.0)) return false;
        for (double& v : t) v /= nt;
        p.tangent = t;
        if (with_profile) attach_profile(p);
        return true;
    }

    void attach_profile(ContPoint& p) const {
        try {
            p.eq = assemble_equilibrium({p.y[0], p.y[1], p.y[2]}, grid_, opt_);
            p.dim = static_cast<long>(p.eq->unstable_dim);
        } catch (const Error&) {
            p.eq.reset();
            p.dim = -1;
        }
    }

    // Newton on G(y) = 0, t.(y - y_pred) = 0. Returns iterations used, or -1.
    int correct(Vec3& y, const Vec3& y_pred, const Vec3& t) const {
        y = y_pred;
        for (int it = 0; it < copt_.max_corrector; ++it) {
            ShootResult r = shot(y);
            if (r.diverged) return -1;
            double g0 = r.miss_right, g1 = r.miss_left;
            double g2 = t[0] * (y[0] - y_pred[0]) + t[1] * (y[1] - y_pred[1]) + t[2] * (y[2] - y_pred[2]);
            if (std::max(std::fabs(g0), std::fabs(g1)) <= opt_.tol_shoot && std::fabs(g2) <= 1e-12) return it;
            double a[3][4];
            for (int col = 0; col < 3; ++col) {
                double e = opt_.fd_eps * std::max(1.0, std::fabs(y[col]));
                Vec3 p = y, m = y;
                p[col] += e;
                m[col] -= e;
                ShootResult rp = shot(p), rm = shot(m);
                if (rp.diverged || rm.diverged) return -1;
                a[0][col] = (rp.miss_right - rm.miss_right) / (2 * e);
                a[1][col] = (rp.miss_left - rm.miss_left) / (2 * e);
                a[2][col] = t[col];
            }
            a[0][3] = -g0;
            a[1][3] = -g1;
            a[2][3] = -g2;
            Vec3 d;
            if (!solve3(a, d)) return -1;
            for (int k = 0; k < 3; ++k) y[k] += d[k];
            if (!std::isfinite(y[0] + y[1] + y[2])) return -1;
        }
        ShootResult r = shot(y);
        return (!r.diverged && r.max_miss() <= opt_.tol_shoot) ? copt_.max_corrector : -1;
    }

private:
    static bool solve3(double a[3][4], Vec3& x) {
        for (int c = 0; c < 3; ++c) {
            int piv = c;
            for (int r = c + 1; r < 3; ++r)
                if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
            if (a[piv][c] == 0.0) return false;
            if (piv != c)
                for (int k = 0; k < 4; ++k) std::swap(a[c][k], a[piv][k]);
            for (int r = c + 1; r < 3; ++r) {
                double f = a[r][c] / a[c][c];
                for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
            }
        }
        for (int r = 2; r >= 0; --r) {
            double s = a[r][3];
            for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
            x[r] = s / a[r][r];
        }
        return std::isfinite(x[0] + x[1] + x[2]);
    }

    const Grid& grid_;
    const EquilibriumOptions& opt_;
    const ContinuationOptions& copt_;
};

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

Branch continue_branch(const Equilibrium& start, double c_lo, double c_hi, const ContinuationOptions& copt,
                       const Grid& grid, const EquilibriumOptions& opt, std::string id) {
    if (!(c_lo <= c_hi)) throw DomainError("continuation range is empty");
    if (!(copt.step > 0.0)) throw DomainError("continuation step must be positive");
    Continuer cont(grid, opt, copt);
    Branch br;
    br.id = std::move(id);

    ContPoint cur;
    cur.y = {start.shoot.f0, start.shoot.fp0, start.shoot.c};
    if (!cont.evaluate(cur, false)) throw Diverged("continuation start point diverges");
    cur.eq = start;
    cur.dim = static_cast<long>(start.unstable_dim);
    int dir = copt.direction;
    if (dir == 0) dir = (c_hi - start.shoot.c >= start.shoot.c - c_lo) ? 1 : -1;
    if (cur.tangent[2] * dir < 0 || (cur.tangent[2] == 0.0 && dir < 0))
        for (double& v : cur.tangent) v = -v;
    br.points.push_back(start);

    double ds = copt.step;
    auto step_to = [&](const ContPoint& from, double h, ContPoint& out, int& iters) {
        Vec3 pred{from.y[0] + h * from.tangent[0], from.y[1] + h * from.tangent[1], from.y[2] + h * from.tangent[2]};
        Vec3 y;
        iters = cont.correct(y, pred, from.tangent);
        if (iters < 0) return false;
        Vec3 d{y[0] - from.y[0], y[1] - from.y[1], y[2] - from.y[2]};
        if (std::sqrt(dot3(d, d)) > 2.0 * h + 1e-12) return false;
        out = ContPoint{};
        out.y = y;
        if (!cont.evaluate(out, false)) return false;
        if (dot3(out.tangent, from.tangent) < 0)
            for (double& v : out.tangent) v = -v;
        return true;
    };

    // Indicators whose sign change marks each event kind.
    auto det_ind = [](const ContPoint& p) { return p.det_s; };
    auto fold_ind = [](const ContPoint& p) { return p.tangent[2]; };
    auto tail_ind = [&](const ContPoint& p) { return p.tail + opt.tol_tail; };

    auto refine = [&](const ContPoint& from, double h, auto indicator, bool needs_dim, long dim_from) {
        double lo = 0.0, hi = 1.0;
        double c_lo_s = from.y[2], c_hi_s = std::numeric_limits<double>::quiet_NaN();
        ContPoint probe;
        int it_unused = 0;
        {
            ContPoint end;
            if (step_to(from, h, end, it_unused)) c_hi_s = end.y[2];
        }
        for (int k = 0; k < 60; ++k) {
            if (std::isfinite(c_hi_s) && std::fabs(c_hi_s - c_lo_s) <= copt.event_tol_c) break;
            double mid = 0.5 * (lo + hi);
            if (!step_to(from, mid * h, probe, it_unused)) break;
            bool same;
            if (needs_dim) {
                cont.attach_profile(probe);
                same = probe.dim == dim_from;
            } else {
                same = (indicator(probe) > 0) == (indicator(from) > 0);
            }
            if (same) {
                lo = mid;
                c_lo_s = probe.y[2];
            } else {
                hi = mid;
                c_hi_s = probe.y[2];
            }
        }
        return std::isfinite(c_hi_s) ? 0.5 * (c_lo_s + c_hi_s) : c_lo_s;
    };

    while (br.points.size() < copt.max_points) {
        ContPoint next;
        int iters = 0;
        if (!step_to(cur, ds, next, iters)) {
            ds *= 0.5;
            if (ds < copt.min_step) {
                br.stop_reason = "step_collapse at c=" + format_real(cur.y[2]);
                return br;
            }
            continue;
        }
        if (next.y[2] < c_lo || next.y[2] > c_hi) {
            br.stop_reason = "range_end";
            return br;
        }
        cont.attach_profile(next);

        if ((det_ind(cur) > 0) != (det_ind(next) > 0))
            br.events.push_back({refine(cur, ds, det_ind, false, 0), EventKind::DeterminantSign, "sign of det dG/d(f0,fp0)"});
        if ((fold_ind(cur) > 0) != (fold_ind(next) > 0))
            br.events.push_back({refine(cur, ds, fold_ind, false, 0), EventKind::Fold, "dc/ds reverses"});
        if (cur.dim >= 0 && next.dim >= 0 && cur.dim != next.dim)
            br.events.push_back({refine(cur, ds, det_ind, true, cur.dim), EventKind::UnstableDimChange,
                                 std::to_string(cur.dim) + "->" + std::to_string(next.dim)});
        if ((tail_ind(cur) > 0) && !(tail_ind(next) > 0)) {
            br.events.push_back({refine(cur, ds, tail_ind, false, 0), EventKind::DecayLoss, "tail crosses zero"});
            br.stop_reason = "decay_loss";
            return br;
        }
        if (next.eq) br.points.push_back(*next.eq);
        cur = std::move(next);
        if (iters <= 3) ds = std::min(1.5 * ds, copt.max_step);
    }
    br.stop_reason = "max_points";
    return br;
}

std::vector<ShootState> seed_grid(double f0_lo, double f0_hi, double fp0_lo, double fp0_hi, std::size_t per_axis) {
    std::vector<ShootState> out;
    if (per_axis == 0) return out;
    auto at = [&](double lo, double hi, std::size_t k) {
        return per_axis == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(per_axis - 1);
    };
    for (std::size_t i = 0; i < per_axis; ++i)
        for (std::size_t j = 0; j < per_axis; ++j) out.push_back({at(f0_lo, f0_hi, i), at(fp0_lo, fp0_hi, j), 0.0});
    return out;
}

ScanResult scan_diagram(const std::vector<double>& c_values, const std::vector<ShootState>& seeds, const Grid& grid,
                        const EquilibriumOptions& opt, double dedup_tol, unsigned workers) {
    ScanResult out;
    workers = std::max(1u, workers);
    for (double c : c_values) {
        std::vector<std::optional<Equilibrium>> found(seeds.size());
        auto work = [&](unsigned w) {
            for (std::size_t i = w; i < seeds.size(); i += workers) {
                ShootState s = seeds[i];
                s.c = c;
                try {
                    found[i] = solve_equilibrium(s, grid, opt);
                } catch (const Error&) {
                }
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
            for (auto& t : pool) t.join();
        }
        std::vector<Equilibrium> distinct;
        for (auto& f : found) {
            ++out.attempts;
            if (!f) {
                ++out.failures;
                continue;
            }
            bool dup = false;
            for (auto& d : distinct) {
                if (std::max(std::fabs(d.shoot.f0 - f->shoot.f0), std::fabs(d.shoot.fp0 - f->shoot.fp0)) < dedup_tol) {
                    if (f->residual < d.residual) d = *f;
                    dup = true;
                    break;
                }
            }
            if (!dup) distinct.push_back(*f);
        }
        std::sort(distinct.begin(), distinct.end(), [](const Equilibrium& a, const Equilibrium& b) {
            if (a.shoot.f0 != b.shoot.f0) return a.shoot.f0 < b.shoot.f0;
            return a.shoot.fp0 < b.shoot.fp0;
        });
        for (auto& d : distinct) out.equilibria.push_back(std::move(d));
    }
    return out;
}

std::string color_code(std::size_t d) {
    switch (d) {
        case 0: return "green";
        case 1: return "blue";
        case 2: return "red";
        default: return "other";
    }
}

void write_diagram_csv(std::ostream& os, const std::vector<Equilibrium>& eqs) {
    os << "c,f0,fp0,residual,unstable_dim\n";
    for (const auto& e : eqs)
        os << format_real(e.shoot.c) << ',' << format_real(e.shoot.f0) << ',' << format_real(e.shoot.fp0) << ','
           << format_real(e.residual) << ',' << e.unstable_dim << '\n';
}

nlohmann::json events_json(const std::vector<Branch>& branches) {
    auto arr = nlohmann::json::array();
    for (const auto& b : branches)
        for (const auto& e : b.events)
            arr.push_back({{"branch_id", b.id}, {"c_event", e.c}, {"kind", to_string(e.kind)}, {"detail", e.detail}});
    return arr;
}

}  // namespace hlab
