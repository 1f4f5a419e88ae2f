#include "hlab/evolution.hpp"

#include "hlab/error.hpp"
#include "hlab/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>

namespace hlab {

void StepperConfig::validate() const {
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
    if (!(blowup_threshold > 0.0)) throw DomainError("blow-up threshold must be positive");
    if (snapshot_stride == 0) throw DomainError("snapshot stride must be at least 1");
    if (!(t_dwell >= 0.0)) throw DomainError("dwell must be non-negative");
    if (!(tol_conv > 0.0)) throw DomainError("tol_conv must be positive");
}

Outcome Outcome::converged(std::string label, std::size_t target, double t_enter) {
    Outcome o;
    o.kind = Kind::Converged;
    o.equilibrium_label = std::move(label);
    o.target = target;
    o.t_enter = t_enter;
    return o;
}

Outcome Outcome::blowup(double lo, double hi) {
    Outcome o;
    o.kind = Kind::BlowUp;
    o.t_lo = lo;
    o.t_hi = hi;
    return o;
}

Outcome Outcome::undetermined(double t_max) {
    Outcome o;
    o.kind = Kind::Undetermined;
    o.t_max = t_max;
    return o;
}

bool Outcome::same_class(const Outcome& o) const {
    if (kind != o.kind) return false;
    return kind != Kind::Converged || equilibrium_label == o.equilibrium_label;
}

std::string to_string(Outcome::Kind k) {
    switch (k) {
        case Outcome::Kind::Converged: return "converged";
        case Outcome::Kind::BlowUp: return "blowup";
        case Outcome::Kind::Undetermined: return "undetermined";
    }
    return "unknown";
}

std::string Outcome::describe() const {
    switch (kind) {
        case Kind::Converged: return "converged to " + equilibrium_label + " from t=" + format_real(t_enter);
        case Kind::BlowUp: return "blow-up with t* in [" + format_real(t_lo) + ", " + format_real(t_hi) + "]";
        case Kind::Undetermined: return "undetermined at t=" + format_real(t_max);
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const Outcome& o) {
    j = nlohmann::json{{"kind", to_string(o.kind)}};
    switch (o.kind) {
        case Outcome::Kind::Converged:
            j["equilibrium_label"] = o.equilibrium_label;
            j["target"] = o.target;
            j["t_enter"] = o.t_enter;
            break;
        case Outcome::Kind::BlowUp: j["t_star_bracket"] = {o.t_lo, o.t_hi}; break;
        case Outcome::Kind::Undetermined: j["t_max"] = o.t_max; break;
    }
}

Outcome outcome_from_json(const nlohmann::json& j) {
    std::string k = j.at("kind").get<std::string>();
    if (k == "converged")
        return Outcome::converged(j.at("equilibrium_label").get<std::string>(), j.value("target", std::size_t{0}),
                                  j.at("t_enter").get<double>());
    if (k == "blowup") return Outcome::blowup(j.at("t_star_bracket")[0].get<double>(), j.at("t_star_bracket")[1].get<double>());
    if (k == "undetermined") return Outcome::undetermined(j.at("t_max").get<double>());
    throw DomainError("unknown outcome kind " + k);
}

Stepper::Stepper(const Grid& g, double dt, const Forcing& phi) : grid_(g), dt_(dt), phi_(g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) phi_[i] = phi(g.x(i));
    const std::size_t N = g.size() - 2;
    r_ = dt / (2.0 * g.h() * g.h());
    c_prime_.resize(N);
    inv_beta_.resize(N);
    double beta = 1.0 + 2.0 * r_;
    for (std::size_t i = 0; i < N; ++i) {
        if (i > 0) beta = 1.0 + 2.0 * r_ + r_ * c_prime_[i - 1];
        inv_beta_[i] = 1.0 / beta;
        c_prime_[i] = -r_ / beta;
    }
}

void Stepper::advance(std::vector<double>& u) const {
    const std::size_t n = u.size();
    const std::size_t N = n - 2;
    const double ih2 = 1.0 / (grid_.h() * grid_.h());
    const double half = 0.5 * dt_;
    u[0] = 0.0;
    u[n - 1] = 0.0;
    std::vector<double> y(N);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ih2;
        double pred = u[i] + half * (lap - u[i] * u[i] + phi_[i]);
        y[i - 1] = u[i] + half * lap + dt_ * (phi_[i] - pred * pred);
    }
    y[0] *= inv_beta_[0];
    for (std::size_t i = 1; i < N; ++i) y[i] = (y[i] + r_ * y[i - 1]) * inv_beta_[i];
    for (std::size_t i = N - 1; i-- > 0;) y[i] -= c_prime_[i] * y[i + 1];
    std::copy(y.begin(), y.end(), u.begin() + 1);
}

GridFunction step(const GridFunction& u, double dt, const Forcing& phi) {
    Stepper s(u.grid, dt, phi);
    GridFunction out = u;
    s.advance(out.values);
    return out;
}

GridFunction step(const GridFunction& u, double dt, double c) { return step(u, dt, Forcing::gaussian(c)); }

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double sup_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::fabs(v));
    }
    return m;
}

constexpr double kGrowthWatch = 10.0;

}  // namespace

EvolveResult evolve(const GridFunction& u0, const StepperConfig& cfg, const Forcing& phi, const std::vector<Target>& targets) {
    cfg.validate();
    if (!u0.all_finite()) throw DomainError("initial profile is not finite");
    for (const auto& t : targets)
        if (!(t.profile.grid == u0.grid)) throw DomainError("target profile lives on a different grid");

    Trajectory traj;
    traj.config = cfg;
    traj.forcing = phi;
    std::vector<double> u = u0.values;
    u.front() = 0.0;
    u.back() = 0.0;
    double t = 0.0;
    traj.frames.push_back({0.0, GridFunction(u0.grid, u)});

    std::map<int, std::unique_ptr<Stepper>> steppers;
    auto stepper_for = [&](int level) -> const Stepper& {
        auto& s = steppers[level];
        if (!s) s = std::make_unique<Stepper>(u0.grid, std::ldexp(cfg.dt, -level), phi);
        return *s;
    };

    std::vector<double> enter(targets.size(), -1.0);
    int level = 0;
    std::size_t accepted = 0;
    double prev_r = std::numeric_limits<double>::quiet_NaN(), prev_t = 0.0;
    const double t_end = cfg.t_max * (1.0 - 1e-12);
    std::vector<double> trial;

    auto finish = [&](Outcome o) {
        if (traj.frames.back().t != t) traj.frames.push_back({t, GridFunction(u0.grid, u)});
        traj.terminal = o;
        return EvolveResult{std::move(traj), o};
    };

    while (t < t_end) {
        const Stepper& st = stepper_for(level);
        double m_old = sup_abs(u);
        trial = u;
        st.advance(trial);
        double m_new = sup_abs(trial);

        bool too_fast = !std::isfinite(m_new) || (m_new > 2.0 * m_old && m_new > kGrowthWatch);
        if (cfg.adaptive && too_fast && m_new < cfg.blowup_threshold) {
            if (level >= cfg.max_halvings) return finish(Outcome::blowup(t, t + st.dt()));
            ++level;
            continue;
        }
        if (!std::isfinite(m_new)) return finish(Outcome::blowup(t, t + st.dt()));

        u.swap(trial);
        t += st.dt();
        ++accepted;

        if (m_new >= cfg.blowup_threshold) {
            // Extrapolate 1/|u| to zero from the last two states.
            double r = 1.0 / m_new;
            double width = st.dt();
            if (std::isfinite(prev_r) && prev_r > r) {
                double t_ext = t + r * (t - prev_t) / (prev_r - r);
                width = std::max(width, 2.0 * (t_ext - t));
            }
            width = std::min(width, cfg.dt);
            traj.frames.push_back({t, GridFunction(u0.grid, u)});
            return finish(Outcome::blowup(t, t + width));
        }
        prev_r = 1.0 / m_new;
        prev_t = t;
        if (level > 0 && m_new < 1.1 * m_old && m_new < kGrowthWatch) --level;

        bool snap = accepted % cfg.snapshot_stride == 0;
        std::size_t close = 0, which = 0;
        for (std::size_t k = 0; k < targets.size(); ++k) {
            if (sup_diff(u, targets[k].profile.values) <= cfg.tol_conv) {
                // Entering a target is always recorded, so classify sees the same window.
                if (enter[k] < 0.0) {
                    enter[k] = t;
                    snap = true;
                }
                ++close;
                which = k;
            } else {
                enter[k] = -1.0;
            }
        }
        if (snap) traj.frames.push_back({t, GridFunction(u0.grid, u)});
        if (close > 1) throw AmbiguousConvergence("run is within tol_conv of two targets at t=" + format_real(t));
        if (close == 1 && t - enter[which] >= cfg.t_dwell)
            return finish(Outcome::converged(targets[which].label, which, enter[which]));
    }
    return finish(Outcome::undetermined(t));
}

Outcome classify(const Trajectory& traj, const std::vector<Target>& targets) {
    if (traj.frames.empty()) throw DomainError("cannot classify an empty trajectory");
    if (traj.terminal && traj.terminal->kind == Outcome::Kind::BlowUp) return *traj.terminal;
    const double tol = traj.config.tol_conv;
    const double dwell = traj.config.t_dwell;
    std::vector<double> enter(targets.size(), -1.0);
    for (const auto& fr : traj.frames) {
        std::size_t close = 0, which = 0;
        for (std::size_t k = 0; k < targets.size(); ++k) {
            if (sup_diff(fr.u.values, targets[k].profile.values) <= tol) {
                if (enter[k] < 0.0) enter[k] = fr.t;
                ++close;
                which = k;
            } else {
                enter[k] = -1.0;
            }
        }
        if (close > 1) throw AmbiguousConvergence("frame at t=" + format_real(fr.t) + " is within tol_conv of two targets");
        if (close == 1 && fr.t - enter[which] >= dwell) return Outcome::converged(targets[which].label, which, enter[which]);
    }
    return Outcome::undetermined(traj.frames.back().t);
}

Trajectory constant_trajectory(const GridFunction& f, double t_max, const Forcing& phi) {
    Trajectory t;
    t.forcing = phi;
    t.config.t_max = t_max;
    t.frames.push_back({0.0, f});
    t.frames.push_back({t_max, f});
    return t;
}

namespace {

// u(t) by linear interpolation between base frames.
void base_at(const Trajectory& base, double t, std::vector<double>& out) {
    const auto& fr = base.frames;
    if (t <= fr.front().t) {
        out = fr.front().u.values;
        return;
    }
    if (t >= fr.back().t) {
        out = fr.back().u.values;
        return;
    }
    auto it = std::upper_bound(fr.begin(), fr.end(), t, [](double tv, const Frame& f) { return tv < f.t; });
    const Frame& b = *it;
    const Frame& a = *(it - 1);
    double w = (t - a.t) / (b.t - a.t);
    out.resize(a.u.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * a.u[i] + w * b.u[i];
}

}  // namespace

Trajectory evolve_linearized(const GridFunction& v0, const Trajectory& base, const StepperConfig& cfg) {
    cfg.validate();
    if (base.frames.empty()) throw DomainError("base trajectory is empty");
    if (!(base.frames.front().u.grid == v0.grid)) throw DomainError("base and perturbation grids differ");
    const double t0 = base.frames.front().t;
    const double t1 = t0 + cfg.t_max;
    if (base.frames.back().t < t1 - 1e-9 * std::max(1.0, std::fabs(t1)))
        throw DomainError("base trajectory ends at t=" + format_real(base.frames.back().t) + " before the requested " +
                          format_real(t1));

    const Grid& g = v0.grid;
    const std::size_t n = g.size(), N = n - 2;
    const double ih2 = 1.0 / (g.h() * g.h());
    const std::size_t steps = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
    const double dt = cfg.t_max / static_cast<double>(steps);

    Trajectory out;
    out.config = cfg;
    out.forcing = base.forcing;
    std::vector<double> v = v0.values;
    v.front() = 0.0;
    v.back() = 0.0;
    out.frames.push_back({t0, GridFunction(g, v)});

    std::vector<double> um, sub(N - 1, -0.5 * dt * ih2), sup(N - 1, -0.5 * dt * ih2), diag(N), rhs(N);
    for (std::size_t k = 0; k < steps; ++k) {
        double t = t0 + static_cast<double>(k) * dt;
        base_at(base, t + 0.5 * dt, um);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double hv = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * ih2 - 2.0 * um[i] * v[i];
            rhs[i - 1] = v[i] + 0.5 * dt * hv;
            diag[i - 1] = 1.0 + dt * ih2 + dt * um[i];
        }
        thomas_solve(sub, diag, sup, rhs);
        std::copy(rhs.begin(), rhs.end(), v.begin() + 1);
        double m = sup_abs(v);
        double tn = t0 + static_cast<double>(k + 1) * dt;
        if (!std::isfinite(m) || m > 1e300) {
            out.overflow = true;
            return out;
        }
        if ((k + 1) % cfg.snapshot_stride == 0 || k + 1 == steps) out.frames.push_back({tn, GridFunction(g, v)});
    }
    return out;
}

double fitted_growth_rate(const Trajectory& traj, double lo, double hi) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t k = 0;
    for (const auto& fr : traj.frames) {
        double a = sup_norm(fr.u);
        if (!(a > 0.0) || a < lo || a > hi) continue;
        double y = std::log(a);
        st += fr.t;
        sy += y;
        stt += fr.t * fr.t;
        sty += fr.t * y;
        ++k;
    }
    if (k < 2) throw WindowEmpty("fewer than two frames inside the amplitude window");
    double den = static_cast<double>(k) * stt - st * st;
    return (static_cast<double>(k) * sty - st * sy) / den;
}

std::vector<std::string> write_trajectory(const std::string& dir, const Trajectory& traj,
                                          const std::optional<Outcome>& outcome, const nlohmann::json& extra) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> files;
    auto times = nlohmann::json::array();
    auto names = nlohmann::json::array();
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.csv", k);
        write_csv((fs::path(dir) / name).string(), traj.frames[k].u);
        files.emplace_back(name);
        times.push_back(traj.frames[k].t);
        names.push_back(name);
    }
    nlohmann::json j = {{"c", traj.forcing.c},
                        {"zero_forcing", traj.forcing.zero},
                        {"dt", traj.config.dt},
                        {"snapshot_stride", traj.config.snapshot_stride},
                        {"tol_conv", traj.config.tol_conv},
                        {"t_dwell", traj.config.t_dwell},
                        {"times", times},
                        {"frames", names},
                        {"outcome", nullptr}};
    if (outcome) j["outcome"] = *outcome;
    if (traj.overflow) j["overflow"] = true;
    for (auto it = extra.begin(); extra.is_object() && it != extra.end(); ++it) j[it.key()] = it.value();
    std::ofstream os(fs::path(dir) / "trajectory.json");
    if (!os) throw Error("cannot write trajectory manifest in " + dir);
    os << j.dump(2) << '\n';
    files.emplace_back("trajectory.json");
    return files;
}

Trajectory read_trajectory(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path mp = fs::path(dir) / "trajectory.json";
    std::ifstream is(mp);
    if (!is) throw DomainError("no trajectory manifest at " + mp.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("malformed trajectory manifest: " + std::string(e.what()));
    }
    Trajectory t;
    t.forcing = j.value("zero_forcing", false) ? Forcing::none() : Forcing::gaussian(j.at("c").get<double>());
    t.forcing.c = j.at("c").get<double>();
    t.config.dt = j.value("dt", t.config.dt);
    t.config.tol_conv = j.value("tol_conv", t.config.tol_conv);
    t.config.t_dwell = j.value("t_dwell", t.config.t_dwell);
    const auto& times = j.at("times");
    const auto& names = j.at("frames");
    if (times.size() != names.size()) throw DomainError("trajectory manifest lists mismatched times and frames");
    for (std::size_t k = 0; k < times.size(); ++k)
        t.frames.push_back({times[k].get<double>(), read_csv((fs::path(dir) / names[k].get<std::string>()).string())});
    if (j.contains("outcome") && !j["outcome"].is_null()) t.terminal = outcome_from_json(j["outcome"]);
    return t;
}

}  // namespace hlab
