#pragma once

#include "hlab/grid.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hlab {

struct StepperConfig {
    double dt = 0.01;
    double t_max = 200.0;
    double blowup_threshold = 1e6;
    std::size_t snapshot_stride = 10;
    bool adaptive = true;
    double t_dwell = 5.0;
    double tol_conv = 1e-4;
    int max_halvings = 40;  ///< dt below dt / 2^max_halvings counts as underflow

    void validate() const;
};

struct Outcome {
    enum class Kind { Converged, BlowUp, Undetermined };
    Kind kind = Kind::Undetermined;
    std::string equilibrium_label;  ///< Converged
    std::size_t target = 0;         ///< index into the target list, Converged
    double t_enter = 0.0;           ///< Converged: start of the dwell window
    double t_lo = 0.0, t_hi = 0.0;  ///< BlowUp: bracket for t*
    double t_max = 0.0;             ///< Undetermined

    static Outcome converged(std::string label, std::size_t target, double t_enter);
    static Outcome blowup(double lo, double hi);
    static Outcome undetermined(double t_max);

    bool same_class(const Outcome& o) const;
    std::string describe() const;
};

std::string to_string(Outcome::Kind k);
void to_json(nlohmann::json& j, const Outcome& o);
Outcome outcome_from_json(const nlohmann::json& j);

struct Trajectory {
    std::vector<Frame> frames;
    StepperConfig config;
    Forcing forcing;
    std::optional<Outcome> terminal;  ///< set by evolve; classify passes BlowUp through
    bool overflow = false;            ///< linearized runs that left double range

    double c() const { return forcing.c; }
};

/// A profile that a run may settle on.
struct Target {
    std::string label;
    GridFunction profile;
};

/// One IMEX step: Crank-Nicolson diffusion, reaction at an explicit midpoint predictor, Dirichlet ends.
/// A discrete steady state of the centered scheme is an exact fixed point.
class Stepper {
public:
    Stepper(const Grid& g, double dt, const Forcing& phi);

    double dt() const { return dt_; }
    void advance(std::vector<double>& u) const;

private:
    Grid grid_;
    double dt_;
    std::vector<double> phi_;
    // Thomas factors of (I - dt/2 D) on the interior.
    std::vector<double> c_prime_, inv_beta_;
    double r_;
};

GridFunction step(const GridFunction& u, double dt, const Forcing& phi);
GridFunction step(const GridFunction& u, double dt, double c);

struct EvolveResult {
    Trajectory trajectory;
    Outcome outcome;
};

EvolveResult evolve(const GridFunction& u0, const StepperConfig& cfg, const Forcing& phi,
                    const std::vector<Target>& targets = {});

/// Converged when some frame starts a window of length t_dwell within tol_conv of a target.
Outcome classify(const Trajectory& traj, const std::vector<Target>& targets);

/// v_t = v_xx - 2 u(t) v with u linearly interpolated between base frames; Crank-Nicolson with u frozen at the
/// step midpoint. Runs for cfg.t_max from the first base time.
Trajectory evolve_linearized(const GridFunction& v0, const Trajectory& base, const StepperConfig& cfg);

/// Base trajectory that sits at f for all times in [0, t_max].
Trajectory constant_trajectory(const GridFunction& f, double t_max, const Forcing& phi = Forcing::none());

/// Least-squares slope of log sup|v(t)| over frames with amplitude in [lo, hi].
double fitted_growth_rate(const Trajectory& traj, double lo = 0.0, double hi = 1e300);

/// Directory of frame CSVs plus trajectory.json; returns the written file names (relative).
std::vector<std::string> write_trajectory(const std::string& dir, const Trajectory& traj,
                                          const std::optional<Outcome>& outcome, const nlohmann::json& extra = {});
Trajectory read_trajectory(const std::string& dir);

}  // namespace hlab
