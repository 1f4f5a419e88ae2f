#pragma once

#include "hlab/equilibria.hpp"
#include "hlab/evolution.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hlab {

/// Equilibria solved at one c, as classification targets.
std::vector<Target> targets_from(const std::vector<Equilibrium>& eqs);

/// f + A exp(-x^2 / width).
GridFunction frontier_probe(const GridFunction& f, double A, double width = 10.0);

struct FrontierOptions {
    double tol_A = 0.01;
    double width = 10.0;
};

struct ProbeRun {
    double param = 0.0;
    Outcome outcome;
};

struct FrontierResult {
    double c = 0.0;
    double A_lo = 0.0, A_hi = 0.0;  ///< final bracket
    Outcome outcome_lo, outcome_hi;
    Trajectory witness_lo, witness_hi;
    std::vector<ProbeRun> probes;  ///< in evaluation order
};

/// Bisect A between endpoints that classify differently.
/// Throws NoBracket, UndeterminedDominant, or DomainError for a zero-width bracket.
FrontierResult frontier_bisect(const Equilibrium& base, double A_lo, double A_hi, const StepperConfig& cfg,
                               const std::vector<Target>& targets, const FrontierOptions& opt = {});

/// f + A (e1 cos theta + e2 sin theta).
GridFunction fan_probe(const GridFunction& f, const GridFunction& e1, const GridFunction& e2, double A, double theta);

struct FanOptions {
    double tol_theta = 1e-5;
    unsigned workers = 1;
};

struct FanResult {
    double c = 0.0;
    double A = 0.0;
    std::vector<GridFunction> basis;  ///< {e1, e2}; e1 belongs to the smaller positive eigenvalue
    std::vector<ProbeRun> sweep;
    std::optional<std::pair<double, double>> theta_bracket;
    Outcome outcome_lo, outcome_hi;
    Trajectory witness_lo, witness_hi;
    std::vector<ProbeRun> bisection;
    bool degenerate = false;  ///< every sweep angle gave the same class
};

/// Throws DimensionMismatch unless base has exactly two positive eigenvalues.
FanResult fan_classify(const Equilibrium& base, double A, const std::vector<double>& thetas, const StepperConfig& cfg,
                       const std::vector<Target>& targets, const FanOptions& opt = {});

/// u(t) - f for every frame.
std::vector<Frame> difference_frames(const Trajectory& traj, const GridFunction& f);

struct Crossing {
    std::size_t curve = 0;
    double t_lo = 0.0, t_hi = 0.0;
    bool downward = true;
};

struct OrbitSpectrumTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> curves;  ///< curves[i][j]: curve i at frame j; curve 0 on top
    std::vector<std::size_t> positive;        ///< Sturm count of positive eigenvalues per frame
    double min_gap = 0.0;                      ///< over pairs with the upper member positive
    double min_gap_t = 0.0;
    double min_gap_all = 0.0;                  ///< over every tracked pair
    std::vector<Crossing> crossings;
    std::vector<std::size_t> ambiguous_frames;

    int spectral_flow() const;  ///< downward minus upward
    /// Half the smallest positive eigenvalue per frame, NaN where none is positive.
    std::vector<double> gap_curve() const;
};

struct TraceOptions {
    std::size_t k = 4;
    double guard = 0.25;
    SpectrumOptions spectrum;
};

OrbitSpectrumTrace trace_orbit_spectrum(const Trajectory& traj, const TraceOptions& opt = {});

struct SimplicityCertificate {
    bool certified = false;
    double worst_t = 0.0;
    double worst_gap = 0.0;
};

SimplicityCertificate certify_simplicity(const OrbitSpectrumTrace& trace, double gap_tol);

struct ConnectionReport {
    std::string source_label, target_label;
    std::size_t source_dim = 0, target_dim = 0;
    int spectral_flow = 0;
    std::size_t connecting_dim = 0;
    bool simplicity_certified = false;
    double worst_gap = 0.0;
    bool consistent = false;  ///< spectral_flow == source_dim - target_dim
};

/// The run must be Converged to one of the equilibria; the source is the probe's base.
ConnectionReport connection_report(const Trajectory& traj, const Equilibrium& source,
                                   const std::vector<Equilibrium>& equilibria, const OrbitSpectrumTrace& trace,
                                   double gap_tol = 1e-3);

struct DecayFit {
    double rate = 0.0;
    double residual = 0.0;  ///< rms of the log fit
    std::size_t points = 0;
    double t_lo = 0.0, t_hi = 0.0;
};

/// Slope of log sup|u(t) - f| while the amplitude first runs through [lo, hi].
DecayFit estimate_decay_rate(const Trajectory& traj, const GridFunction& f, double lo, double hi);

/// Same window, but the fitted amplitude is the coefficient of u - f along mode; other directions drop out.
DecayFit estimate_mode_rate(const Trajectory& traj, const GridFunction& f, const GridFunction& mode, double lo,
                            double hi);

void write_trace_csv(std::ostream& os, const OrbitSpectrumTrace& trace);
void to_json(nlohmann::json& j, const ConnectionReport& r);
void to_json(nlohmann::json& j, const ProbeRun& r);

}  // namespace hlab
