#include "hlab/manifold.hpp"

#include "hlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace hlab {

std::vector<Target> targets_from(const std::vector<Equilibrium>& eqs) {
    std::vector<Target> t;
    t.reserve(eqs.size());
    for (const auto& e : eqs) t.push_back({e.label, e.profile});
    return t;
}

GridFunction frontier_probe(const GridFunction& f, double A, double width) {
    if (!(width > 0.0)) throw DomainError("bump width must be positive");
    GridFunction u = f;
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        double x = f.grid.x(i);
        u[i] += A * std::exp(-x * x / width);
    }
    return u;
}

namespace {

struct Probe {
    Outcome outcome;
    Trajectory traj;
};

Probe run_probe(const GridFunction& u0, const StepperConfig& cfg, const Forcing& phi, const std::vector<Target>& targets) {
    auto r = evolve(u0, cfg, phi, targets);
    return {r.outcome, std::move(r.trajectory)};
}

void require_determined(const Outcome& o, const std::string& what, double at) {
    if (o.kind == Outcome::Kind::Undetermined)
        throw UndeterminedDominant(what + " at " + format_real(at) + " stayed undetermined until t=" +
                                   format_real(o.t_max) + "; a longer horizon may resolve it");
}

}  // namespace

FrontierResult frontier_bisect(const Equilibrium& base, double A_lo, double A_hi, const StepperConfig& cfg,
                               const std::vector<Target>& targets, const FrontierOptions& opt) {
    if (!(A_lo < A_hi)) throw DomainError("amplitude bracket must have positive width");
    if (!(opt.tol_A > 0.0)) throw DomainError("tol_A must be positive");
    const Forcing phi = Forcing::gaussian(base.shoot.c);
    FrontierResult res;
    res.c = base.shoot.c;

    auto probe = [&](double A) {
        Probe p = run_probe(frontier_probe(base.profile, A, opt.width), cfg, phi, targets);
        res.probes.push_back({A, p.outcome});
        require_determined(p.outcome, "probe", A);
        return p;
    };

    Probe lo = probe(A_lo);
    Probe hi = probe(A_hi);
    if (lo.outcome.same_class(hi.outcome))
        throw NoBracket("both ends of [" + format_real(A_lo) + ", " + format_real(A_hi) + "] give " +
                        to_string(lo.outcome.kind));
    while (A_hi - A_lo > opt.tol_A) {
        double mid = 0.5 * (A_lo + A_hi);
        Probe m = probe(mid);
        if (m.outcome.same_class(lo.outcome)) {
            A_lo = mid;
            lo = std::move(m);
        } else {
            A_hi = mid;
            hi = std::move(m);
        }
    }
    res.A_lo = A_lo;
    res.A_hi = A_hi;
    res.outcome_lo = lo.outcome;
    res.outcome_hi = hi.outcome;
    res.witness_lo = std::move(lo.traj);
    res.witness_hi = std::move(hi.traj);
    return res;
}

GridFunction fan_probe(const GridFunction& f, const GridFunction& e1, const GridFunction& e2, double A, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    GridFunction u = f;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += A * (c * e1[i] + s * e2[i]);
    return u;
}

FanResult fan_classify(const Equilibrium& base, double A, const std::vector<double>& thetas, const StepperConfig& cfg,
                       const std::vector<Target>& targets, const FanOptions& opt) {
    auto sub = unstable_subspace(base.profile);
    if (sub.dimension != 2)
        throw DimensionMismatch("fan needs an equilibrium with two unstable directions, this one has " +
                                std::to_string(sub.dimension));
    if (!(A >= 0.0)) throw DomainError("fan amplitude must be non-negative");
    if (thetas.empty()) throw DomainError("no angles to sweep");
    if (!(opt.tol_theta > 0.0)) throw DomainError("tol_theta must be positive");

    FanResult res;
    res.c = base.shoot.c;
    res.A = A;
    res.basis = {sub.basis[1], sub.basis[0]};
    const GridFunction& e1 = res.basis[0];
    const GridFunction& e2 = res.basis[1];
    const Forcing phi = Forcing::gaussian(base.shoot.c);

    std::vector<double> th = thetas;
    std::sort(th.begin(), th.end());
    std::vector<Probe> runs(th.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(th.size())));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < th.size(); i += workers)
            runs[i] = run_probe(fan_probe(base.profile, e1, e2, A, th[i]), cfg, phi, targets);
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < th.size(); ++i) res.sweep.push_back({th[i], runs[i].outcome});

    std::size_t edge = th.size();
    for (std::size_t i = 0; i + 1 < th.size(); ++i)
        if (!runs[i].outcome.same_class(runs[i + 1].outcome)) {
            edge = i;
            break;
        }
    if (edge == th.size()) {
        res.degenerate = true;
        return res;
    }

    double lo_t = th[edge], hi_t = th[edge + 1];
    Probe lo = std::move(runs[edge]), hi = std::move(runs[edge + 1]);
    while (hi_t - lo_t > opt.tol_theta) {
        double mid = 0.5 * (lo_t + hi_t);
        Probe m = run_probe(fan_probe(base.profile, e1, e2, A, mid), cfg, phi, targets);
        res.bisection.push_back({mid, m.outcome});
        if (m.outcome.same_class(lo.outcome)) {
            lo_t = mid;
            lo = std::move(m);
        } else {
            hi_t = mid;
            hi = std::move(m);
        }
    }
    res.theta_bracket = {lo_t, hi_t};
    res.outcome_lo = lo.outcome;
    res.outcome_hi = hi.outcome;
    res.witness_lo = std::move(lo.traj);
    res.witness_hi = std::move(hi.traj);
    return res;
}

std::vector<Frame> difference_frames(const Trajectory& traj, const GridFunction& f) {
    std::vector<Frame> out;
    out.reserve(traj.frames.size());
    for (const auto& fr : traj.frames) out.push_back({fr.t, fr.u - f});
    return out;
}

int OrbitSpectrumTrace::spectral_flow() const {
    int flow = 0;
    for (const auto& c : crossings) flow += c.downward ? 1 : -1;
    return flow;
}

std::vector<double> OrbitSpectrumTrace::gap_curve() const {
    std::vector<double> g(times.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < times.size(); ++j) {
        double smallest = std::numeric_limits<double>::infinity();
        for (const auto& c : curves)
            if (c[j] > 0.0) smallest = std::min(smallest, c[j]);
        if (std::isfinite(smallest)) g[j] = 0.5 * smallest;
    }
    return g;
}

OrbitSpectrumTrace trace_orbit_spectrum(const Trajectory& traj, const TraceOptions& opt) {
    if (traj.frames.empty()) throw DomainError("cannot trace an empty trajectory");
    OrbitSpectrumTrace tr;
    std::vector<SchroedingerMatrix> hs;
    hs.reserve(traj.frames.size());
    std::size_t most = 0;
    for (const auto& fr : traj.frames) {
        if (!fr.u.all_finite()) throw DomainError("trajectory frame at t=" + format_real(fr.t) + " is not finite");
        hs.push_back(assemble_h(fr.u, "orbit"));
        tr.times.push_back(fr.t);
        tr.positive.push_back(positive_count(hs.back()));
        most = std::max(most, tr.positive.back());
    }
    const std::size_t m = std::min(std::max(opt.k, most + 1), hs.front().size());
    tr.curves.assign(m, std::vector<double>(hs.size()));
    std::vector<double> prev;
    for (std::size_t j = 0; j < hs.size(); ++j) {
        auto ev = top_eigenvalues(hs[j], m, opt.spectrum);
        if (!prev.empty()) {
            // Nearest-value matching; Sturm ordering makes rank order the unambiguous answer.
            bool ambiguous = false;
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t near = 0;
                for (std::size_t q = 1; q < m; ++q)
                    if (std::fabs(ev[q] - prev[i]) < std::fabs(ev[near] - prev[i])) near = q;
                double local = std::numeric_limits<double>::infinity();
                if (i > 0) local = std::min(local, ev[i - 1] - ev[i]);
                if (i + 1 < m) local = std::min(local, ev[i] - ev[i + 1]);
                if (near != i || std::fabs(ev[i] - prev[i]) > opt.guard * local) ambiguous = true;
            }
            if (ambiguous) tr.ambiguous_frames.push_back(j);
        }
        for (std::size_t i = 0; i < m; ++i) tr.curves[i][j] = ev[i];
        prev = std::move(ev);
    }

    tr.min_gap = tr.min_gap_all = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < hs.size(); ++j)
        for (std::size_t i = 0; i + 1 < m; ++i) {
            double g = tr.curves[i][j] - tr.curves[i + 1][j];
            tr.min_gap_all = std::min(tr.min_gap_all, g);
            if (tr.curves[i][j] > 0.0 && g < tr.min_gap) {
                tr.min_gap = g;
                tr.min_gap_t = tr.times[j];
            }
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j + 1 < hs.size(); ++j) {
            bool a = tr.curves[i][j] > 0.0, b = tr.curves[i][j + 1] > 0.0;
            if (a != b) tr.crossings.push_back({i, tr.times[j], tr.times[j + 1], a});
        }
    return tr;
}

SimplicityCertificate certify_simplicity(const OrbitSpectrumTrace& trace, double gap_tol) {
    if (trace.times.empty()) throw DomainError("empty trace");
    SimplicityCertificate c;
    c.worst_gap = trace.min_gap;
    c.worst_t = trace.min_gap_t;
    c.certified = trace.min_gap >= gap_tol;
    return c;
}

ConnectionReport connection_report(const Trajectory& traj, const Equilibrium& source,
                                   const std::vector<Equilibrium>& equilibria, const OrbitSpectrumTrace& trace,
                                   double gap_tol) {
    if (!traj.terminal || traj.terminal->kind != Outcome::Kind::Converged)
        throw NotHeteroclinic("run did not converge to an equilibrium" +
                              (traj.terminal ? std::string(": ") + traj.terminal->describe() : std::string()));
    const Equilibrium* target = nullptr;
    for (const auto& e : equilibria)
        if (e.label == traj.terminal->equilibrium_label) target = &e;
    if (!target) throw DomainError("limit " + traj.terminal->equilibrium_label + " is not among the given equilibria");

    ConnectionReport r;
    r.source_label = source.label;
    r.target_label = target->label;
    r.source_dim = positive_count(assemble_h(source.profile));
    r.target_dim = positive_count(assemble_h(target->profile));
    r.spectral_flow = trace.spectral_flow();
    r.connecting_dim = r.source_dim >= r.target_dim ? r.source_dim - r.target_dim : 0;
    auto cert = certify_simplicity(trace, gap_tol);
    r.simplicity_certified = cert.certified;
    r.worst_gap = cert.worst_gap;
    r.consistent = r.spectral_flow == static_cast<int>(r.source_dim) - static_cast<int>(r.target_dim);
    return r;
}

namespace {

/// Log-linear fit of measure(u - f) over the first run of frames whose sup distance from f lies in [lo, hi].
template <class Measure>
DecayFit fit_rate(const Trajectory& traj, const GridFunction& f, double lo, double hi, Measure measure) {
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("amplitude window must satisfy 0 < lo < hi");
    DecayFit fit;
    std::vector<double> ts, ys;
    bool inside = false;
    for (const auto& fr : traj.frames) {
        const GridFunction d = fr.u - f;
        double a = sup_norm(d);
        if (!inside && a >= lo && a <= hi) inside = true;
        if (!inside) continue;
        if (a > hi || a < lo) break;
        double m = std::fabs(measure(d));
        if (!(m > 0.0)) break;
        ts.push_back(fr.t);
        ys.push_back(std::log(m));
    }
    if (ts.size() < 3) throw WindowEmpty("fewer than three frames while the amplitude is inside [" + format_real(lo) + ", " +
                                         format_real(hi) + "]");
    const double n = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    fit.rate = (n * sty - st * sy) / (n * stt - st * st);
    double icpt = (sy - fit.rate * st) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) ss += std::pow(ys[i] - icpt - fit.rate * ts[i], 2);
    fit.residual = std::sqrt(ss / n);
    fit.points = ts.size();
    fit.t_lo = ts.front();
    fit.t_hi = ts.back();
    return fit;
}

}  // namespace

DecayFit estimate_decay_rate(const Trajectory& traj, const GridFunction& f, double lo, double hi) {
    return fit_rate(traj, f, lo, hi, [](const GridFunction& d) { return sup_norm(d); });
}

DecayFit estimate_mode_rate(const Trajectory& traj, const GridFunction& f, const GridFunction& mode, double lo,
                            double hi) {
    if (!(mode.grid == f.grid)) throw DomainError("mode and equilibrium grids differ");
    const double mm = inner(mode, mode);
    if (!(mm > 0.0)) throw DomainError("mode must be nonzero");
    return fit_rate(traj, f, lo, hi, [&](const GridFunction& d) { return inner(d, mode) / mm; });
}

void write_trace_csv(std::ostream& os, const OrbitSpectrumTrace& trace) {
    os << 't';
    for (std::size_t i = 0; i < trace.curves.size(); ++i) os << ",lambda_" << i + 1;
    os << '\n';
    for (std::size_t j = 0; j < trace.times.size(); ++j) {
        os << format_real(trace.times[j]);
        for (const auto& c : trace.curves) os << ',' << format_real(c[j]);
        os << '\n';
    }
}

void to_json(nlohmann::json& j, const ConnectionReport& r) {
    j = nlohmann::json{{"source", r.source_label},
                       {"target", r.target_label},
                       {"source_dim", r.source_dim},
                       {"target_dim", r.target_dim},
                       {"spectral_flow", r.spectral_flow},
                       {"connecting_dim", r.connecting_dim},
                       {"simplicity_certified", r.simplicity_certified},
                       {"worst_gap", r.worst_gap},
                       {"consistent", r.consistent}};
}

void to_json(nlohmann::json& j, const ProbeRun& r) { j = nlohmann::json{{"param", r.param}, {"outcome", r.outcome}}; }

}  // namespace hlab
