#include "hlab/cli.hpp"

#include "hlab/equilibria.hpp"
#include "hlab/error.hpp"
#include "hlab/evolution.hpp"
#include "hlab/manifold.hpp"
#include "hlab/semigroup.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace hlab {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "hlab 0.1.0";

using FieldRef = std::variant<double RunConfig::*, std::size_t RunConfig::*, bool RunConfig::*,
                              std::string RunConfig::*, std::vector<double> RunConfig::*,
                              std::optional<double> RunConfig::*>;

struct Field {
    const char* key;
    FieldRef ref;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> f{
        {"X", &RunConfig::X},
        {"n", &RunConfig::n},
        {"dt", &RunConfig::dt},
        {"t_max", &RunConfig::t_max},
        {"blowup_threshold", &RunConfig::blowup_threshold},
        {"snapshot_stride", &RunConfig::snapshot_stride},
        {"t_dwell", &RunConfig::t_dwell},
        {"adaptive", &RunConfig::adaptive},
        {"tol_eq", &RunConfig::tol_eq},
        {"tol_eig", &RunConfig::tol_eig},
        {"tol_bisect", &RunConfig::tol_bisect},
        {"tol_shoot", &RunConfig::tol_shoot},
        {"tol_conv", &RunConfig::tol_conv},
        {"tol_A", &RunConfig::tol_A},
        {"tol_theta", &RunConfig::tol_theta},
        {"gap_tol", &RunConfig::gap_tol},
        {"c", &RunConfig::c},
        {"zero_forcing", &RunConfig::zero_forcing},
        {"c_list", &RunConfig::c_list},
        {"c_min", &RunConfig::c_min},
        {"c_max", &RunConfig::c_max},
        {"c_steps", &RunConfig::c_steps},
        {"f0_min", &RunConfig::f0_min},
        {"f0_max", &RunConfig::f0_max},
        {"fp0_min", &RunConfig::fp0_min},
        {"fp0_max", &RunConfig::fp0_max},
        {"seeds_per_axis", &RunConfig::seeds_per_axis},
        {"dedup_tol", &RunConfig::dedup_tol},
        {"continuation", &RunConfig::continuation},
        {"cont_c_min", &RunConfig::cont_c_min},
        {"cont_c_max", &RunConfig::cont_c_max},
        {"cont_step", &RunConfig::cont_step},
        {"cont_max_step", &RunConfig::cont_max_step},
        {"A_lo", &RunConfig::A_lo},
        {"A_hi", &RunConfig::A_hi},
        {"bump_width", &RunConfig::bump_width},
        {"fan_A", &RunConfig::fan_A},
        {"thetas", &RunConfig::thetas},
        {"theta_sweep", &RunConfig::theta_sweep},
        {"heterocline_A", &RunConfig::heterocline_A},
        {"heterocline_theta", &RunConfig::heterocline_theta},
        {"initial", &RunConfig::initial},
        {"evolve_A", &RunConfig::evolve_A},
        {"evolve_theta", &RunConfig::evolve_theta},
        {"u0_value", &RunConfig::u0_value},
        {"u0_path", &RunConfig::u0_path},
        {"trajectory", &RunConfig::trajectory},
        {"trace_k", &RunConfig::trace_k},
        {"verify_T", &RunConfig::verify_T},
        {"verify_band", &RunConfig::verify_band},
        {"verify_modes", &RunConfig::verify_modes},
        {"verify_seed", &RunConfig::verify_seed},
        {"verify_a", &RunConfig::verify_a},
        {"verify_samples", &RunConfig::verify_samples},
    };
    return f;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d)) throw DomainError("bad number for " + key + ": '" + v + "'");
    return d;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    double d = parse_double(key, v);
    if (d < 0.0 || d != std::floor(d)) throw DomainError(key + " must be a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(d);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw DomainError("bad flag for " + key + ": '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key != f.key) continue;
        std::visit(
            [&](auto ptr) {
                using T = std::decay_t<decltype(cfg.*ptr)>;
                if constexpr (std::is_same_v<T, double>) cfg.*ptr = parse_double(key, value);
                else if constexpr (std::is_same_v<T, std::size_t>) cfg.*ptr = parse_count(key, value);
                else if constexpr (std::is_same_v<T, bool>) cfg.*ptr = parse_bool(key, value);
                else if constexpr (std::is_same_v<T, std::string>) cfg.*ptr = value;
                else if constexpr (std::is_same_v<T, std::vector<double>>) cfg.*ptr = parse_list(key, value);
                else cfg.*ptr = parse_double(key, value);
            },
            f.ref);
        if (key == "c_list") cfg.c_list_set = true;
        return;
    }
    throw DomainError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::apply_strict() {
    strict = true;
    for (double* t : {&tol_eq, &tol_eig, &tol_bisect, &tol_shoot, &tol_conv, &tol_A, &tol_theta}) *t /= 10.0;
}

void RunConfig::validate() const {
    for (double t : {tol_eq, tol_eig, tol_bisect, tol_shoot, tol_conv, tol_A, tol_theta, gap_tol, dedup_tol})
        if (!(t > 0.0)) throw DomainError("all tolerances must be positive");
    if (!(X > 0.0) || n < 3 || n % 2 == 0) throw DomainError("grid needs X > 0 and an odd n >= 3");
    if (!(dt > 0.0) || !(t_max > 0.0) || snapshot_stride == 0) throw DomainError("stepper needs dt > 0, t_max > 0, stride >= 1");
    if (seeds_per_axis == 0) throw DomainError("seeds_per_axis must be at least 1");
    if (c_steps == 0) throw DomainError("c_steps must be at least 1");
}

nlohmann::json RunConfig::echo() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : fields()) {
        std::visit(
            [&](auto ptr) {
                using T = std::decay_t<decltype(this->*ptr)>;
                if constexpr (std::is_same_v<T, std::optional<double>>) {
                    if (this->*ptr) j[f.key] = *(this->*ptr);
                    else j[f.key] = nullptr;
                } else {
                    j[f.key] = this->*ptr;
                }
            },
            f.ref);
    }
    j["strict"] = strict;
    return j;
}

RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + " has no '='");
        set_field(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open config " + path);
    return parse_config(is);
}

namespace {

/// Output directory bookkeeping: every written file is recorded for the manifest.
class OutDir {
public:
    explicit OutDir(fs::path root) : root_(std::move(root)) {
        fs::create_directories(root_);
        // Outputs listed by an earlier manifest are ours to replace.
        fs::path old = root_ / "manifest.json";
        if (fs::exists(old)) {
            std::ifstream is(old);
            nlohmann::json j;
            try {
                is >> j;
                for (const auto& f : j.at("files")) fs::remove(root_ / f.get<std::string>());
            } catch (const std::exception&) {
            }
            fs::remove(old);
        }
    }

    const fs::path& root() const { return root_; }

    std::ofstream open(const std::string& rel) {
        fs::path p = root_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream os(p);
        if (!os) throw Error("cannot write " + p.string());
        files_.insert(rel);
        return os;
    }

    void text(const std::string& rel, const std::string& body) { open(rel) << body; }
    void json(const std::string& rel, const nlohmann::json& j) { open(rel) << j.dump(2) << '\n'; }

    void trajectory(const std::string& sub, const Trajectory& t, const std::optional<Outcome>& o,
                    const nlohmann::json& extra = {}) {
        for (const auto& f : write_trajectory((root_ / sub).string(), t, o, extra)) files_.insert(sub + "/" + f);
    }

    void manifest(const std::string& cmd, const RunConfig& cfg, double wall, const nlohmann::json& summary,
                  int exit_code) {
        nlohmann::json j = {{"subcommand", cmd},
                            {"version", kVersion},
                            {"config", cfg.echo()},
                            {"wall_time_s", wall},
                            {"exit_code", exit_code},
                            {"files", std::vector<std::string>(files_.begin(), files_.end())},
                            {"summary", summary}};
        fs::path tmp = root_ / "manifest.json.tmp";
        {
            std::ofstream os(tmp);
            if (!os) throw Error("cannot write manifest in " + root_.string());
            os << j.dump(2) << '\n';
        }
        fs::rename(tmp, root_ / "manifest.json");
    }

private:
    fs::path root_;
    std::set<std::string> files_;
};

struct Context {
    RunConfig cfg;
    unsigned workers = 1;
    std::ostream& out;
    std::ostream& err;
};

Grid grid_of(const RunConfig& c) { return make_grid(c.X, c.n); }

EquilibriumOptions eq_options(const RunConfig& c) {
    EquilibriumOptions o;
    o.tol_eq = c.tol_eq;
    o.tol_shoot = c.tol_shoot;
    o.zero_forcing = c.zero_forcing;
    o.spectrum.tol_eig = c.tol_eig;
    o.spectrum.tol_bisect = c.tol_bisect;
    return o;
}

StepperConfig stepper(const RunConfig& c) {
    StepperConfig s;
    s.dt = c.dt;
    s.t_max = c.t_max;
    s.blowup_threshold = c.blowup_threshold;
    s.snapshot_stride = c.snapshot_stride;
    s.t_dwell = c.t_dwell;
    s.tol_conv = c.tol_conv;
    s.adaptive = c.adaptive;
    return s;
}

Forcing forcing_of(const RunConfig& c, double cv) { return c.zero_forcing ? Forcing::none() : Forcing::gaussian(cv); }

std::vector<Equilibrium> equilibria_at(const Context& ctx, double cv) {
    const auto& c = ctx.cfg;
    auto seeds = seed_grid(c.f0_min, c.f0_max, c.fp0_min, c.fp0_max, c.seeds_per_axis);
    return scan_diagram({cv}, seeds, grid_of(c), eq_options(c), c.dedup_tol, ctx.workers).equilibria;
}

const Equilibrium& pick_by_dim(const std::vector<Equilibrium>& eqs, std::size_t dim, double cv) {
    for (const auto& e : eqs)
        if (e.unstable_dim == dim) return e;
    throw DimensionMismatch("no equilibrium with unstable dimension " + std::to_string(dim) + " at c=" + format_real(cv));
}

nlohmann::json equilibrium_json(const Equilibrium& e) {
    return {{"label", e.label},           {"c", e.shoot.c},
            {"f0", e.shoot.f0},           {"fp0", e.shoot.fp0},
            {"unstable_dim", e.unstable_dim}, {"positive_eigenvalues", e.positive_eigenvalues},
            {"residual", e.residual}};
}

/// Gnuplot nonuniform matrix: first row is the column count then x, each later row is t then values.
void write_frame_matrix(std::ostream& os, const std::vector<Frame>& frames) {
    if (frames.empty()) return;
    const Grid& g = frames.front().u.grid;
    os << g.size();
    for (std::size_t i = 0; i < g.size(); ++i) os << ',' << format_real(g.x(i));
    os << '\n';
    for (const auto& f : frames) {
        os << format_real(f.t);
        for (double v : f.u.values) os << ',' << format_real(v);
        os << '\n';
    }
}

std::string matrix_plot(const std::string& csv, const std::string& title, std::optional<std::pair<double, double>> window) {
    std::ostringstream os;
    os << "# " << title << "\nset datafile separator ','\nset xlabel 'x'\nset ylabel 't'\nset view map\n";
    if (window) os << "set palette grey\nset cbrange [" << window->first << ':' << window->second << "]\n";
    os << "plot '" << csv << "' matrix nonuniform with image notitle\n";
    return os.str();
}

nlohmann::json cmd_equilibria(const Context& ctx, OutDir& out) {
    const auto& c = ctx.cfg;
    std::vector<double> cs;
    if (c.c_list_set) {
        cs = c.c_list;
    } else if (c.c) {
        cs = {*c.c};
    } else {
        for (std::size_t k = 0; k < c.c_steps; ++k)
            cs.push_back(c.c_steps == 1 ? c.c_min : c.c_min + (c.c_max - c.c_min) * static_cast<double>(k) / static_cast<double>(c.c_steps - 1));
    }
    const Grid g = grid_of(c);
    const auto opt = eq_options(c);
    auto seeds = seed_grid(c.f0_min, c.f0_max, c.fp0_min, c.fp0_max, c.seeds_per_axis);
    auto scan = scan_diagram(cs, seeds, g, opt, c.dedup_tol, ctx.workers);
    {
        auto os = out.open("diagram.csv");
        write_diagram_csv(os, scan.equilibria);
    }

    std::vector<Branch> branches;
    if (c.continuation && c.cont_c_max > c.cont_c_min) {
        ContinuationOptions copt;
        copt.step = c.cont_step;
        copt.max_step = c.cont_max_step;
        std::vector<double> starts{c.cont_c_min, 0.5 * (c.cont_c_min + c.cont_c_max), c.cont_c_max};
        auto seeded = scan_diagram(starts, seeds, g, opt, c.dedup_tol, ctx.workers);
        std::size_t id = 0;
        for (const auto& e : seeded.equilibria) {
            for (int dir : {+1, -1}) {
                if ((dir > 0 && e.shoot.c >= c.cont_c_max) || (dir < 0 && e.shoot.c <= c.cont_c_min)) continue;
                copt.direction = dir;
                branches.push_back(continue_branch(e, c.cont_c_min, c.cont_c_max, copt, g, opt,
                                                   "b" + std::to_string(id) + (dir > 0 ? "+" : "-")));
            }
            ++id;
        }
    }
    {
        auto os = out.open("branches.csv");
        os << "branch_id,c,f0,fp0,unstable_dim\n";
        for (const auto& b : branches)
            for (const auto& p : b.points)
                os << b.id << ',' << format_real(p.shoot.c) << ',' << format_real(p.shoot.f0) << ','
                   << format_real(p.shoot.fp0) << ',' << p.unstable_dim << '\n';
    }
    auto ev = events_json(branches);
    out.json("events.json", ev);
    out.text("diagram.gp",
             "# bifurcation diagram coded by unstable dimension (0 green, 1 blue, 2 red)\n"
             "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'c'\nset ylabel 'f(0)'\n"
             "plot 'diagram.csv' using 1:($5==0?$2:1/0) with points lc rgb 'green' title 'dim 0', \\\n"
             "     'diagram.csv' using 1:($5==1?$2:1/0) with points lc rgb 'blue' title 'dim 1', \\\n"
             "     'diagram.csv' using 1:($5==2?$2:1/0) with points lc rgb 'red' title 'dim 2'\n");

    // Events found by several branches collapse to one entry.
    std::vector<nlohmann::json> distinct;
    for (const auto& e : ev) {
        bool seen = false;
        for (const auto& d : distinct)
            if (d["kind"] == e["kind"] && std::fabs(d["c_event"].get<double>() - e["c_event"].get<double>()) < 1e-3) seen = true;
        if (!seen) distinct.push_back({{"kind", e["kind"]}, {"c_event", e["c_event"]}});
    }
    std::vector<nlohmann::json> branch_info;
    for (const auto& b : branches)
        branch_info.push_back({{"id", b.id}, {"points", b.points.size()}, {"stop_reason", b.stop_reason}});
    return {{"c_values", cs.size()},
            {"equilibria", scan.equilibria.size()},
            {"attempts", scan.attempts},
            {"failures", scan.failures},
            {"branches", branch_info},
            {"distinct_events", distinct}};
}

nlohmann::json cmd_frontier(const Context& ctx, OutDir& out) {
    const auto& c = ctx.cfg;
    const double cv = c.c.value_or(-1.2);
    auto eqs = equilibria_at(ctx, cv);
    const auto& base = pick_by_dim(eqs, 0, cv);
    FrontierOptions fo;
    fo.tol_A = c.tol_A;
    fo.width = c.bump_width;
    auto fr = frontier_bisect(base, c.A_lo, c.A_hi, stepper(c), targets_from(eqs), fo);
    nlohmann::json extra = {{"base", equilibrium_json(base)}, {"family", "frontier"}};
    extra["A"] = fr.A_lo;
    out.trajectory("witness_lo", fr.witness_lo, fr.outcome_lo, extra);
    extra["A"] = fr.A_hi;
    out.trajectory("witness_hi", fr.witness_hi, fr.outcome_hi, extra);
    {
        auto os = out.open("frontier_lo.csv");
        write_frame_matrix(os, fr.witness_lo.frames);
    }
    {
        auto os = out.open("frontier_hi.csv");
        write_frame_matrix(os, fr.witness_hi.frames);
    }
    out.text("frontier.gp", matrix_plot("frontier_lo.csv", "u(t,x) just outside the frontier", std::nullopt));
    nlohmann::json res = {{"c", cv},
                          {"base", equilibrium_json(base)},
                          {"A_bracket", {fr.A_lo, fr.A_hi}},
                          {"outcome_lo", fr.outcome_lo},
                          {"outcome_hi", fr.outcome_hi},
                          {"probes", fr.probes},
                          {"witness_runs", {"witness_lo", "witness_hi"}}};
    out.json("frontier.json", res);
    return {{"c", cv}, {"A_lo", fr.A_lo}, {"A_hi", fr.A_hi}, {"probes", fr.probes.size()}};
}

nlohmann::json cmd_fan(const Context& ctx, OutDir& out) {
    const auto& c = ctx.cfg;
    const double cv = c.c.value_or(0.0);
    auto eqs = equilibria_at(ctx, cv);
    const auto& base = pick_by_dim(eqs, 2, cv);
    auto targets = targets_from(eqs);
    std::vector<double> thetas = c.thetas;
    for (std::size_t k = 0; k < c.theta_sweep; ++k)
        thetas.push_back(c.theta_sweep == 1 ? 0.0 : M_PI * static_cast<double>(k) / static_cast<double>(c.theta_sweep - 1));
    nlohmann::json summary = {{"c", cv}, {"A", c.fan_A}};
    if (c.fan_A == 0.0) {
        ctx.err << "warning: fan amplitude is zero, every angle starts at the equilibrium itself\n";
        summary["warning"] = "zero amplitude: degenerate fan";
    }
    FanOptions fo;
    fo.tol_theta = c.tol_theta;
    fo.workers = ctx.workers;
    auto fan = fan_classify(base, c.fan_A, thetas, stepper(c), targets, fo);

    nlohmann::json res = {{"c", cv},
                          {"A", c.fan_A},
                          {"base", equilibrium_json(base)},
                          {"eigenfunction_convention", "sup-norm 1, largest entry positive, leftmost on ties"},
                          {"sweep", fan.sweep},
                          {"bisection", fan.bisection},
                          {"degenerate", fan.degenerate},
                          {"theta_bracket", nullptr}};
    const nlohmann::json base_info = {{"base", equilibrium_json(base)}, {"family", "fan"}, {"A", c.fan_A}};
    if (fan.theta_bracket) {
        res["theta_bracket"] = {fan.theta_bracket->first, fan.theta_bracket->second};
        res["outcome_lo"] = fan.outcome_lo;
        res["outcome_hi"] = fan.outcome_hi;
        res["witness_runs"] = {"fan_lo", "fan_hi"};
        auto extra = base_info;
        extra["theta"] = fan.theta_bracket->first;
        out.trajectory("fan_lo", fan.witness_lo, fan.outcome_lo, extra);
        extra["theta"] = fan.theta_bracket->second;
        out.trajectory("fan_hi", fan.witness_hi, fan.outcome_hi, extra);
        {
            auto os = out.open("fan_lo_diff.csv");
            write_frame_matrix(os, difference_frames(fan.witness_lo, base.profile));
        }
        {
            auto os = out.open("fan_hi_diff.csv");
            write_frame_matrix(os, difference_frames(fan.witness_hi, base.profile));
        }
        out.json("fan_frames.json", {{"content", "u(t,x) - f1(x), rows t, columns x"},
                                     {"files", {"fan_lo_diff.csv", "fan_hi_diff.csv"}},
                                     {"value_window", {-0.2, 0.2}},
                                     {"black", -0.2},
                                     {"white", 0.2}});
        out.text("fan.gp", matrix_plot("fan_lo_diff.csv", "u - f1 just below the fan boundary", std::pair{-0.2, 0.2}));
        summary["theta_lo"] = fan.theta_bracket->first;
        summary["theta_hi"] = fan.theta_bracket->second;
    }

    // A heteroclinic witness that leaves the base along the unstable plane.
    auto u0 = fan_probe(base.profile, fan.basis[0], fan.basis[1], c.heterocline_A, c.heterocline_theta);
    auto het = evolve(u0, stepper(c), forcing_of(c, cv), targets);
    auto extra = base_info;
    extra["A"] = c.heterocline_A;
    extra["theta"] = c.heterocline_theta;
    out.trajectory("heterocline", het.trajectory, het.outcome, extra);
    res["heterocline"] = {{"run", "heterocline"}, {"outcome", het.outcome}};
    out.json("fan.json", res);
    summary["degenerate"] = fan.degenerate;
    summary["heterocline"] = to_string(het.outcome.kind);
    return summary;
}

nlohmann::json cmd_orbit_spectrum(const Context& ctx, OutDir& out) {
    const auto& c = ctx.cfg;
    if (c.trajectory.empty()) throw DomainError("orbit-spectrum needs a trajectory directory (--trajectory or trajectory=)");
    auto traj = read_trajectory(c.trajectory);
    if (traj.frames.empty()) throw DomainError("trajectory has no frames");
    RunConfig local = c;
    local.zero_forcing = traj.forcing.zero;
    Context lctx{local, ctx.workers, ctx.out, ctx.err};
    auto eqs = equilibria_at(lctx, traj.c());

    TraceOptions to;
    to.k = c.trace_k;
    to.spectrum.tol_bisect = c.tol_bisect;
    to.spectrum.tol_eig = c.tol_eig;
    auto tr = trace_orbit_spectrum(traj, to);
    {
        auto os = out.open("trace.csv");
        write_trace_csv(os, tr);
    }
    {
        auto os = out.open("gap_curve.csv");
        os << "t,gap\n";
        auto gc = tr.gap_curve();
        for (std::size_t j = 0; j < gc.size(); ++j) os << format_real(tr.times[j]) << ',' << format_real(gc[j]) << '\n';
    }
    std::ostringstream gp;
    gp << "# spectrum of H(t) along the orbit\nset datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n"
          "plot for [i=2:"
       << tr.curves.size() + 1 << "] 'trace.csv' using 1:i with lines, 0 with lines lc rgb 'black' notitle\n";
    out.text("trace.gp", gp.str());

    auto cert = certify_simplicity(tr, c.gap_tol);
    nlohmann::json crossings = nlohmann::json::array();
    for (const auto& x : tr.crossings)
        crossings.push_back({{"curve", x.curve + 1}, {"t_bracket", {x.t_lo, x.t_hi}}, {"direction", x.downward ? "down" : "up"}});
    nlohmann::json summary = {{"c", traj.c()},
                              {"frames", tr.times.size()},
                              {"curves", tr.curves.size()},
                              {"crossings", crossings},
                              {"spectral_flow", tr.spectral_flow()},
                              {"min_gap", cert.worst_gap},
                              {"min_gap_t", cert.worst_t},
                              {"min_gap_all_pairs", tr.min_gap_all},
                              {"ambiguous_frames", tr.ambiguous_frames.size()},
                              {"simplicity_certified", cert.certified}};

    // Source: the probe's base if the manifest names it, else the equilibrium nearest the first frame.
    std::optional<Equilibrium> source;
    {
        std::ifstream is(fs::path(c.trajectory) / "trajectory.json");
        nlohmann::json j;
        is >> j;
        if (j.contains("base")) {
            const auto& b = j["base"];
            ShootState s{b.at("f0").get<double>(), b.at("fp0").get<double>(), b.at("c").get<double>()};
            source = solve_equilibrium(s, traj.frames.front().u.grid, eq_options(local));
        }
    }
    if (!source) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : eqs) {
            double d = sup_norm(e.profile - traj.frames.front().u);
            if (d < best) {
                best = d;
                source = e;
            }
        }
    }
    if (!source) throw DomainError("no equilibrium found at c=" + format_real(traj.c()));
    bool listed = false;
    for (const auto& e : eqs) listed = listed || e.label == source->label;
    if (!listed) eqs.push_back(*source);

    Trajectory classified = traj;
    if (!traj.terminal || traj.terminal->kind != Outcome::Kind::BlowUp)
        classified.terminal = classify(traj, targets_from(eqs));
    nlohmann::json report;
    try {
        report = connection_report(classified, *source, eqs, tr, c.gap_tol);
    } catch (const NotHeteroclinic& e) {
        out.json("connection.json", {{"error", e.what()}, {"trace", summary}});
        throw;
    }
    out.json("connection.json", {{"report", report}, {"trace", summary}});
    summary["connecting_dim"] = report["connecting_dim"];
    summary["source_dim"] = report["source_dim"];
    summary["target_dim"] = report["target_dim"];
    return summary;
}

nlohmann::json cmd_evolve(const Context& ctx, OutDir& out) {
    const auto& c = ctx.cfg;
    const double cv = c.c.value_or(-1.2);
    auto eqs = equilibria_at(ctx, cv);
    const Grid g = grid_of(c);
    std::optional<GridFunction> u0;
    nlohmann::json extra = {{"family", c.initial}};
    if (c.initial == "frontier") {
        const auto& base = pick_by_dim(eqs, 0, cv);
        u0 = frontier_probe(base.profile, c.evolve_A, c.bump_width);
        extra["base"] = equilibrium_json(base);
        extra["A"] = c.evolve_A;
    } else if (c.initial == "fan") {
        const auto& base = pick_by_dim(eqs, 2, cv);
        auto sub = unstable_subspace(base.profile);
        u0 = fan_probe(base.profile, sub.basis[1], sub.basis[0], c.evolve_A, c.evolve_theta);
        extra["base"] = equilibrium_json(base);
        extra["A"] = c.evolve_A;
        extra["theta"] = c.evolve_theta;
    } else if (c.initial == "constant") {
        u0 = GridFunction(g, c.u0_value);
        extra["value"] = c.u0_value;
    } else if (c.initial == "csv") {
        if (c.u0_path.empty()) throw DomainError("initial=csv needs u0_path");
        u0 = read_csv(c.u0_path);
    } else {
        throw DomainError("unknown initial family '" + c.initial + "'");
    }
    auto r = evolve(*u0, stepper(c), forcing_of(c, cv), targets_from(eqs));
    out.trajectory("trajectory", r.trajectory, r.outcome, extra);
    out.json("outcome.json", {{"c", cv}, {"outcome", r.outcome}, {"description", r.outcome.describe()}});
    return {{"c", cv}, {"outcome", r.outcome}, {"frames", r.trajectory.frames.size()}};
}

nlohmann::json cmd_verify(const Context& ctx, OutDir& out) {
    RunConfig c = ctx.cfg;
    std::size_t n = c.n;
    double dt = c.dt;
    if (c.strict) {
        n = 2 * n - 1;
        dt /= 2.0;
    }
    nlohmann::json rep;

    // Bound state of the -2 sech^2 well (eigenvalue 1).
    {
        std::vector<double> hs{0.1, 0.05, 0.025}, errs;
        for (double h : hs) {
            Grid g = make_grid(c.X, static_cast<std::size_t>(std::lround(2.0 * c.X / h)) + 1);
            GridFunction f(g);
            for (std::size_t i = 0; i < g.size(); ++i) f[i] = -1.0 / std::pow(std::cosh(g.x(i)), 2);
            SpectrumOptions so;
            so.tol_bisect = c.tol_bisect;
            auto ev = eigenvalues_above(assemble_h(f, "poschl-teller"), 0.0, so);
            errs.push_back(ev.size() == 1 ? std::fabs(ev[0] - 1.0) : std::numeric_limits<double>::infinity());
        }
        double order = std::log2(errs[1] / errs[2]);
        bool ok = order >= 1.8;
        for (std::size_t k = 0; k < hs.size(); ++k) ok = ok && errs[k] <= 5.0 * hs[k] * hs[k];
        rep["poschl_teller"] = {{"h", hs}, {"error", errs}, {"order", order}, {"pass", ok}};
    }

    const Grid g = make_grid(c.X, n);
    auto opt = eq_options(c);
    auto seeds = seed_grid(c.f0_min, c.f0_max, c.fp0_min, c.fp0_max, c.seeds_per_axis);
    auto scan = scan_diagram({-1.2, 0.0, 0.06}, seeds, g, opt, c.dedup_tol, ctx.workers);
    const Equilibrium* stable = nullptr;
    for (const auto& e : scan.equilibria)
        if (e.shoot.c == -1.2 && e.unstable_dim == 0) stable = &e;
    if (!stable) throw NoConvergence("no stable equilibrium at c=-1.2 for the verification suite");

    // Kernel of L against the positive spectrum.
    {
        auto ts = backward_times(c.verify_T, dt);
        nlohmann::json rows = nlohmann::json::array();
        bool all = true;
        for (const auto& e : scan.equilibria) {
            const std::size_t pc = positive_count(assemble_h(e.profile));
            double a = pc ? 0.5 * e.positive_eigenvalues.back() : c.verify_a;
            auto kb = kernel_basis(e.profile, DecayRate(a), ts, opt.spectrum);
            double worst = 0.0, allowed = 1e-6;
            for (std::size_t k = 0; k < kb.size(); ++k) {
                const double lam = e.positive_eigenvalues[k];
                auto L = apply_L(kb[k], e.profile);
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < L.size(); ++j) {
                    num = std::max(num, sup_norm(L.frames[j].u));
                    den = std::max(den, sup_norm(kb[k].frames[j].u));
                }
                worst = std::max(worst, num / den);
                allowed = std::max(allowed, 1e-6 + lam * lam * lam * dt * dt / 3.0);
            }
            bool ok = kb.size() == pc && worst <= allowed;
            all = all && ok;
            rows.push_back({{"label", e.label},
                            {"positive_count", pc},
                            {"kernel_size", kb.size()},
                            {"max_relative_residual", worst},
                            {"allowed", allowed},
                            {"pass", ok}});
        }
        rep["kernel"] = {{"equilibria", rows}, {"pass", all}};
    }

    FrozenPropagator prop(stable->profile, opt.spectrum);
    {
        std::vector<double> res;
        double final_norm = 0.0;
        for (double step : {dt, dt / 2.0}) {
            auto w = random_smooth_field(prop, backward_times(c.verify_T, step), c.verify_band, c.verify_modes, c.verify_seed);
            auto r = verify_right_inverse(w, prop, DecayRate(c.verify_a));
            res.push_back(r.residual);
            final_norm = std::max(final_norm, r.final_norm);
        }
        double order = std::log2(res[0] / res[1]);
        rep["right_inverse"] = {{"dt", {dt, dt / 2.0}},
                                {"residual", res},
                                {"order_estimate", order},
                                {"final_norm", final_norm},
                                {"band", c.verify_band},
                                {"pass", res[0] <= 1e-3 && order >= 1.8 && final_norm == 0.0}};
    }
    {
        GridFunction v(g);
        for (std::size_t i = 1; i + 1 < g.size(); ++i) v[i] = std::exp(-g.x(i) * g.x(i) / 3.0) * std::cos(g.x(i));
        double worst = 0.0;
        const double pairs[][2] = {{0.25, 0.5}, {0.1, 0.9}, {0.7, 0.3}};
        for (const auto& p : pairs)
            worst = std::max(worst, sup_norm(prop.propagate(prop.propagate(v, p[0]), p[1]) - prop.propagate(v, p[0] + p[1])));
        double bound = static_cast<double>(prop.modes()) * c.tol_eig;
        rep["semigroup"] = {{"error", worst},
                            {"bound", bound},
                            {"reconstruction_error", prop.reconstruction_error()},
                            {"orthonormality_error", prop.orthonormality_error()},
                            {"pass", worst <= bound && prop.reconstruction_error() <= bound}};
    }
    {
        std::vector<double> ks;
        for (double step : {dt, dt / 2.0}) {
            auto ts = backward_times(c.verify_T, step);
            double k = 0.0;
            for (std::size_t s = 1; s <= c.verify_samples; ++s)
                k = std::max(k, bounded_image_check(random_smooth_field(prop, ts, c.verify_band, c.verify_modes, s), prop,
                                                    DecayRate(c.verify_a)));
            ks.push_back(k);
        }
        rep["bounded_image"] = {{"K_empirical", ks[0]}, {"K_half_step", ks[1]}, {"samples", c.verify_samples},
                                {"pass", std::isfinite(ks[0]) && std::fabs(ks[0] - ks[1]) <= 0.05 * ks[0]}};
    }
    rep["grid"] = {{"X", c.X}, {"n", n}, {"dt", dt}};
    out.json("report.json", rep);
    nlohmann::json summary;
    for (const char* k : {"poschl_teller", "kernel", "right_inverse", "semigroup", "bounded_image"}) summary[k] = rep[k]["pass"];
    summary["residual"] = rep["right_inverse"]["residual"][0];
    summary["order_estimate"] = rep["right_inverse"]["order_estimate"];
    summary["K_empirical"] = rep["bounded_image"]["K_empirical"];
    return summary;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical laboratory for u_t = u_xx - u^2 + phi(x)", "hlab"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir = "hlab_out", traj_path;
    unsigned workers = 1;
    bool strict = false;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--out", out_dir, "output directory (HLAB_OUT overrides)");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--strict", strict, "divide tolerances by 10");
    app.set_version_flag("--version", kVersion);
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const char* name : {"equilibria", "frontier", "fan", "orbit-spectrum", "evolve", "verify"})
        subs.emplace_back(name, app.add_subcommand(name));
    subs[3].second->add_option("--trajectory", traj_path, "trajectory directory written by fan, frontier or evolve");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    std::string cmd;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) cmd = name;
    if (const char* env = std::getenv("HLAB_OUT"); env && *env) out_dir = env;

    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!traj_path.empty()) cfg.trajectory = traj_path;
        if (strict) cfg.apply_strict();
        cfg.validate();
    } catch (const Error& e) {
        err << "hlab " << cmd << ": " << e.what() << '\n';
        return 2;
    }

    std::optional<OutDir> dir;
    int code = 0;
    nlohmann::json summary;
    try {
        dir.emplace(out_dir);
        Context ctx{cfg, workers, out, err};
        if (cmd == "equilibria") summary = cmd_equilibria(ctx, *dir);
        else if (cmd == "frontier") summary = cmd_frontier(ctx, *dir);
        else if (cmd == "fan") summary = cmd_fan(ctx, *dir);
        else if (cmd == "orbit-spectrum") summary = cmd_orbit_spectrum(ctx, *dir);
        else if (cmd == "evolve") summary = cmd_evolve(ctx, *dir);
        else summary = cmd_verify(ctx, *dir);
    } catch (const DomainError& e) {
        err << "hlab " << cmd << ": " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = 2;
    } catch (const std::exception& e) {
        err << "hlab " << cmd << ": internal failure: " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = 1;
    }
    if (dir) {
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        try {
            dir->manifest(cmd, cfg, wall, summary, code);
        } catch (const std::exception& e) {
            err << "hlab " << cmd << ": cannot write manifest: " << e.what() << '\n';
            return 1;
        }
        out << summary.dump(2) << '\n';
    }
    return code;
}

}  // namespace hlab
