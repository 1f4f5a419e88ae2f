#pragma once

#include "hlab/grid.hpp"
#include "hlab/spectrum.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hlab {

/// A steady state as seen from x = 0.
struct ShootState {
    double f0 = 0.0;
    double fp0 = 0.0;
    double c = 0.0;
};

struct EquilibriumOptions {
    double x_match = 8.0;        ///< where the decaying-tail closure is imposed
    double tol_shoot = 1e-9;     ///< on both closure misses
    double tol_eq = 1e-8;        ///< on the discrete residual of the profile
    double tol_boundary = 1e-3;  ///< on |f(+-X)|
    double tol_tail = 1e-9;      ///< f(+-x_match) below -tol_tail means the tail does not decay
    double overflow_guard = 1e6;
    double fd_eps = 1e-7;
    int max_newton = 60;
    int max_halvings = 12;
    bool zero_forcing = false;  ///< replace phi by 0
    bool fd_fallback = true;
    SpectrumOptions spectrum;

    Forcing forcing(double c) const { return zero_forcing ? Forcing::none() : Forcing::gaussian(c); }
};

/// Closure misses at +-x_match for the orbit through (f0, fp0).
/// On the decaying tail f ~ 6/(x - x0)^2 one has f' = -sqrt(2/3) f^{3/2}; the misses measure the departure.
struct ShootResult {
    double miss_right = 0.0;
    double miss_left = 0.0;
    double tail_right = 0.0;  ///< f(x_match)
    double tail_left = 0.0;   ///< f(-x_match)
    bool diverged = false;

    double max_miss() const;
};

ShootResult shoot_residual(const ShootState& s, const Grid& grid, const EquilibriumOptions& opt = {});

struct Equilibrium {
    ShootState shoot;
    GridFunction profile;
    double residual = 0.0;
    std::size_t unstable_dim = 0;
    std::vector<double> positive_eigenvalues;  ///< descending
    double tail_min = 0.0;                     ///< min of f(+-x_match)
    std::string label;
};

/// sup over interior nodes of |f'' - f^2 + phi| with the centered second difference.
double equilibrium_residual(const GridFunction& f, const Forcing& phi);

/// Newton on the whole Dirichlet profile. Throws NoConvergence.
GridFunction polish_profile(GridFunction guess, const Forcing& phi, const EquilibriumOptions& opt = {});

/// Damped Newton on the shooting map only; returns the root.
ShootState newton_shoot(const ShootState& guess, const Grid& grid, const EquilibriumOptions& opt = {});

/// Full solve: shooting Newton (collocation fallback), profile polish, admissibility, spectrum.
Equilibrium solve_equilibrium(const ShootState& guess, const Grid& grid, const EquilibriumOptions& opt = {});

/// Solve starting from a whole profile, e.g. the last frame of a run.
Equilibrium solve_equilibrium_from_profile(const GridFunction& guess, double c, const EquilibriumOptions& opt = {});

/// Profile and spectrum for a shooting root.
Equilibrium assemble_equilibrium(const ShootState& root, const Grid& grid, const EquilibriumOptions& opt = {});

enum class EventKind { DeterminantSign, Fold, UnstableDimChange, DecayLoss };
std::string to_string(EventKind k);

struct BranchEvent {
    double c = 0.0;
    EventKind kind = EventKind::DeterminantSign;
    std::string detail;
};

struct Branch {
    std::string id;
    std::vector<Equilibrium> points;
    std::vector<BranchEvent> events;
    std::string stop_reason;
};

struct ContinuationOptions {
    double step = 0.002;      ///< initial arclength step in (f0, fp0, c)
    double max_step = 0.004;
    double min_step = 1e-7;
    double event_tol_c = 1e-4;
    std::size_t max_points = 5000;
    int max_corrector = 12;
    int direction = 0;  ///< +1 increasing c, -1 decreasing, 0 toward the far end of the range
};

Branch continue_branch(const Equilibrium& start, double c_lo, double c_hi, const ContinuationOptions& copt,
                       const Grid& grid, const EquilibriumOptions& opt = {}, std::string id = "branch");

struct ScanResult {
    std::vector<Equilibrium> equilibria;  ///< ordered by c, then f0, then fp0
    std::size_t attempts = 0;
    std::size_t failures = 0;
};

std::vector<ShootState> seed_grid(double f0_lo, double f0_hi, double fp0_lo, double fp0_hi, std::size_t per_axis);

ScanResult scan_diagram(const std::vector<double>& c_values, const std::vector<ShootState>& seeds, const Grid& grid,
                        const EquilibriumOptions& opt = {}, double dedup_tol = 1e-6, unsigned workers = 1);

/// green / blue / red for unstable dimension 0 / 1 / 2, "other" beyond.
std::string color_code(std::size_t unstable_dim);

void write_diagram_csv(std::ostream& os, const std::vector<Equilibrium>& eqs);
nlohmann::json events_json(const std::vector<Branch>& branches);

}  // namespace hlab
