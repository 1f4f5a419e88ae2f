#pragma once

#include "hlab/grid.hpp"
#include "hlab/spectrum.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace hlab {

/// Frames on (-T, 0]; the last time is 0.
struct SpaceTimeField {
    std::vector<Frame> frames;

    std::size_t size() const { return frames.size(); }
    const Grid& grid() const { return frames.front().u.grid; }
    std::vector<double> times() const;
};

/// t_j = -(M - j) dt for j = 0..M with M = round(T / dt).
std::vector<double> backward_times(double T, double dt);

SpaceTimeField sample_field(const Grid& g, const std::vector<double>& times,
                            const std::function<double(double t, double x)>& w);

/// Full eigendecomposition of H at a frozen profile. Modes are orthonormal in the h-weighted inner product.
class FrozenPropagator {
public:
    explicit FrozenPropagator(const GridFunction& f, const SpectrumOptions& opt = {});

    const GridFunction& profile() const { return f_; }
    const SchroedingerMatrix& matrix() const { return m_; }
    const Grid& grid() const { return m_.grid; }
    std::size_t modes() const { return static_cast<std::size_t>(lambda_.size()); }
    /// Ascending.
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }
    GridFunction mode(std::size_t k) const;

    /// Coefficients of v (interior nodes) in the mode basis, and back.
    Eigen::VectorXd project(const GridFunction& v) const;
    GridFunction synthesize(const Eigen::VectorXd& coeff) const;
    /// Batched forms; one column per frame.
    Eigen::MatrixXd project(const std::vector<Frame>& frames) const;
    std::vector<Frame> synthesize(const std::vector<double>& times, const Eigen::MatrixXd& coeff) const;

    /// exp(sH) v for s >= 0, the forward parabolic flow.
    GridFunction propagate(const GridFunction& v, double s) const;

    /// max |H - V diag(lambda) V^T| over matrix entries.
    double reconstruction_error() const;
    /// max |V^T V - I| in the h-weighted inner product.
    double orthonormality_error() const;

private:
    GridFunction f_;
    SchroedingerMatrix m_;
    Eigen::VectorXd lambda_;
    Eigen::MatrixXd vec_;  ///< Euclidean-orthonormal columns
};

/// du/dt - H u frame by frame; three-point time differences, one-sided at the ends.
SpaceTimeField apply_L(const SpaceTimeField& u, const GridFunction& f);

/// One field exp(lambda t) v per positive eigenvalue of H at f, on the given times.
std::vector<SpaceTimeField> kernel_basis(const GridFunction& f, DecayRate a, const std::vector<double>& times,
                                         const SpectrumOptions& opt = {});

struct GammaOptions {
    double exponent_guard = 500.0;
    double negligible = 1e-12;  ///< mode content below this fraction of the largest is treated as absent
};

/// v(t) = int_t^0 exp(-H(tau - t)) w(tau) dtau, mode by mode with exact exponential weights on each interval.
/// Throws ModeOverflow when a mode carrying content would need exp(|lambda| T) beyond the guard.
SpaceTimeField apply_gamma(const SpaceTimeField& w, const FrozenPropagator& prop, const GammaOptions& opt = {});

struct RightInverseReport {
    double residual = 0.0;    ///< |L Gamma w + w| / |w| in the weighted norm
    double final_norm = 0.0;  ///< sup |Gamma w(0)|
};

RightInverseReport verify_right_inverse(const SpaceTimeField& w, const FrozenPropagator& prop,
                                        DecayRate a, HolderExponent alpha = HolderExponent{});

/// weighted_decay_norm(Gamma w) / weighted_decay_norm(w); zero for w = 0.
double bounded_image_check(const SpaceTimeField& w, const FrozenPropagator& prop, DecayRate a,
                           HolderExponent alpha = HolderExponent{});

/// Sum over the modes with |lambda| T <= band of c_k cos(omega_k t + p_k) e_k with seeded random c, omega, p.
SpaceTimeField random_smooth_field(const FrozenPropagator& prop, const std::vector<double>& times, double band,
                                   std::size_t max_modes, std::uint64_t seed);

}  // namespace hlab
