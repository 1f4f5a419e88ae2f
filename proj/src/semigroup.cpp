#include "hlab/semigroup.hpp"

#include "hlab/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace hlab {

std::vector<double> SpaceTimeField::times() const {
    std::vector<double> t;
    t.reserve(frames.size());
    for (const auto& f : frames) t.push_back(f.t);
    return t;
}

std::vector<double> backward_times(double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw DomainError("backward horizon and step must be positive");
    const long M = std::lround(T / dt);
    if (M < 2) throw DomainError("need at least three time levels");
    std::vector<double> t(static_cast<std::size_t>(M) + 1);
    for (long j = 0; j <= M; ++j) t[static_cast<std::size_t>(j)] = -static_cast<double>(M - j) * dt;
    return t;
}

SpaceTimeField sample_field(const Grid& g, const std::vector<double>& times,
                            const std::function<double(double, double)>& w) {
    SpaceTimeField f;
    f.frames.reserve(times.size());
    for (double t : times) {
        GridFunction u(g);
        for (std::size_t i = 1; i + 1 < g.size(); ++i) u[i] = w(t, g.x(i));
        f.frames.push_back({t, std::move(u)});
    }
    return f;
}

FrozenPropagator::FrozenPropagator(const GridFunction& f, const SpectrumOptions&) : f_(f), m_(assemble_h(f, "frozen")) {
    const Eigen::Index N = static_cast<Eigen::Index>(m_.size());
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(m_.t.diag.data(), N);
    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(m_.t.off.data(), N - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NoConvergence("tridiagonal eigendecomposition failed");
    lambda_ = es.eigenvalues();
    vec_ = es.eigenvectors();
}

GridFunction FrozenPropagator::mode(std::size_t k) const {
    GridFunction v(grid());
    const double s = 1.0 / std::sqrt(grid().h());
    for (Eigen::Index i = 0; i < vec_.rows(); ++i) v[static_cast<std::size_t>(i) + 1] = s * vec_(i, static_cast<Eigen::Index>(k));
    return v;
}

Eigen::VectorXd FrozenPropagator::project(const GridFunction& v) const {
    if (!(v.grid == grid())) throw DomainError("field and propagator grids differ");
    Eigen::Map<const Eigen::VectorXd> in(v.values.data() + 1, vec_.rows());
    return std::sqrt(grid().h()) * (vec_.transpose() * in);
}

GridFunction FrozenPropagator::synthesize(const Eigen::VectorXd& coeff) const {
    GridFunction v(grid());
    Eigen::Map<Eigen::VectorXd> out(v.values.data() + 1, vec_.rows());
    out = (vec_ * coeff) / std::sqrt(grid().h());
    return v;
}

Eigen::MatrixXd FrozenPropagator::project(const std::vector<Frame>& frames) const {
    const Eigen::Index N = vec_.rows();
    Eigen::MatrixXd in(N, static_cast<Eigen::Index>(frames.size()));
    for (std::size_t j = 0; j < frames.size(); ++j) {
        if (!(frames[j].u.grid == grid())) throw DomainError("field and propagator grids differ");
        in.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(frames[j].u.values.data() + 1, N);
    }
    return std::sqrt(grid().h()) * (vec_.transpose() * in);
}

std::vector<Frame> FrozenPropagator::synthesize(const std::vector<double>& times, const Eigen::MatrixXd& coeff) const {
    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < coeff.rows(); ++k)
        if (!coeff.row(k).isZero(0.0)) active.push_back(k);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(vec_.rows(), coeff.cols());
    if (!active.empty()) out = vec_(Eigen::all, active) * coeff(active, Eigen::all) / std::sqrt(grid().h());
    std::vector<Frame> frames;
    frames.reserve(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        GridFunction v(grid());
        Eigen::Map<Eigen::VectorXd>(v.values.data() + 1, vec_.rows()) = out.col(static_cast<Eigen::Index>(j));
        frames.push_back({times[j], std::move(v)});
    }
    return frames;
}

GridFunction FrozenPropagator::propagate(const GridFunction& v, double s) const {
    if (s < 0.0) throw DomainError("the forward flow needs s >= 0");
    Eigen::VectorXd c = project(v);
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(s * lambda_(k));
    return synthesize(c);
}

double FrozenPropagator::reconstruction_error() const {
    Eigen::MatrixXd r = vec_ * lambda_.asDiagonal() * vec_.transpose();
    const Eigen::Index N = r.rows();
    for (Eigen::Index i = 0; i < N; ++i) {
        r(i, i) -= m_.t.diag[static_cast<std::size_t>(i)];
        if (i + 1 < N) {
            r(i, i + 1) -= m_.t.off[static_cast<std::size_t>(i)];
            r(i + 1, i) -= m_.t.off[static_cast<std::size_t>(i)];
        }
    }
    return r.cwiseAbs().maxCoeff();
}

double FrozenPropagator::orthonormality_error() const {
    Eigen::MatrixXd g = vec_.transpose() * vec_;
    g -= Eigen::MatrixXd::Identity(g.rows(), g.cols());
    return g.cwiseAbs().maxCoeff();
}

namespace {

void require_field(const SpaceTimeField& u, std::size_t min_frames) {
    if (u.frames.size() < min_frames) throw DomainError("space-time field has too few frames");
    for (std::size_t j = 1; j < u.frames.size(); ++j)
        if (!(u.frames[j].t > u.frames[j - 1].t)) throw DomainError("field times must increase");
}

/// Derivative at `at` of the quadratic through nodes p0, p1, p2, as weights on the three values.
std::array<double, 3> lagrange_slope(double p0, double p1, double p2, double at) {
    return {((at - p1) + (at - p2)) / ((p0 - p1) * (p0 - p2)), ((at - p0) + (at - p2)) / ((p1 - p0) * (p1 - p2)),
            ((at - p0) + (at - p1)) / ((p2 - p0) * (p2 - p1))};
}

/// Weights (w0, w1) so that int_0^1 exp(-z s) ((1-s) a + s b) ds = w0 a + w1 b.
std::pair<double, double> exp_linear_weights(double z) {
    if (std::fabs(z) < 1e-3) {
        // Series of int s^p exp(-z s) ds for p = 0, 1.
        double phi1 = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0 + z * z * z * z / 120.0;
        double m1 = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0 + z * z * z * z / 144.0;
        return {phi1 - m1, m1};
    }
    double em = -std::expm1(-z);  // 1 - exp(-z)
    double phi1 = em / z;
    double m1 = (em - z * std::exp(-z)) / (z * z);
    return {phi1 - m1, m1};
}

}  // namespace

SpaceTimeField apply_L(const SpaceTimeField& u, const GridFunction& f) {
    require_field(u, 3);
    auto m = assemble_h(f, "L");
    const std::size_t M = u.frames.size();
    SpaceTimeField out;
    out.frames.reserve(M);
    for (std::size_t j = 0; j < M; ++j) {
        std::size_t a = j == 0 ? 0 : (j + 1 == M ? M - 3 : j - 1);
        auto w = lagrange_slope(u.frames[a].t, u.frames[a + 1].t, u.frames[a + 2].t, u.frames[j].t);
        GridFunction d = apply_h(m, u.frames[j].u);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = w[0] * u.frames[a].u[i] + w[1] * u.frames[a + 1].u[i] + w[2] * u.frames[a + 2].u[i] - d[i];
        out.frames.push_back({u.frames[j].t, std::move(d)});
    }
    return out;
}

std::vector<SpaceTimeField> kernel_basis(const GridFunction& f, DecayRate a, const std::vector<double>& times,
                                         const SpectrumOptions& opt) {
    auto sub = unstable_subspace(f, opt);
    std::vector<SpaceTimeField> out;
    if (sub.dimension == 0) return out;
    if (!(a.a < sub.eigenvalues.back()))
        throw DomainError("decay rate must lie below the smallest positive eigenvalue " + format_real(sub.eigenvalues.back()));
    for (std::size_t k = 0; k < sub.dimension; ++k) {
        SpaceTimeField fld;
        for (double t : times) fld.frames.push_back({t, std::exp(sub.eigenvalues[k] * t) * sub.basis[k]});
        out.push_back(std::move(fld));
    }
    return out;
}

SpaceTimeField apply_gamma(const SpaceTimeField& w, const FrozenPropagator& prop, const GammaOptions& opt) {
    require_field(w, 2);
    if (w.frames.back().t != 0.0) throw DomainError("field must end at t = 0");
    const std::size_t M = w.frames.size();
    const Eigen::Index K = static_cast<Eigen::Index>(prop.modes());
    const Eigen::MatrixXd c = prop.project(w.frames);

    const double T = -w.frames.front().t;
    const double scale = c.cwiseAbs().maxCoeff();
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(K, static_cast<Eigen::Index>(M));
    for (Eigen::Index k = 0; k < K; ++k) {
        double content = c.row(k).cwiseAbs().maxCoeff();
        if (content == 0.0 || content <= opt.negligible * scale) continue;
        const double lam = prop.eigenvalues()(k);
        if (-lam * T > opt.exponent_guard)
            throw ModeOverflow("mode with eigenvalue " + format_real(lam) + " needs exp(" + format_real(-lam * T) +
                               ") over the span");
        for (std::size_t j = M - 1; j-- > 0;) {
            const Eigen::Index J = static_cast<Eigen::Index>(j);
            const double dt = w.frames[j + 1].t - w.frames[j].t;
            const double z = lam * dt;
            auto [w0, w1] = exp_linear_weights(z);
            v(k, J) = std::exp(-z) * v(k, J + 1) + dt * (w0 * c(k, J) + w1 * c(k, J + 1));
        }
    }
    SpaceTimeField out;
    out.frames = prop.synthesize(w.times(), v);
    // The quadrature over the empty interval at t = 0.
    std::fill(out.frames.back().u.values.begin(), out.frames.back().u.values.end(), 0.0);
    return out;
}

RightInverseReport verify_right_inverse(const SpaceTimeField& w, const FrozenPropagator& prop, DecayRate a,
                                        HolderExponent alpha) {
    RightInverseReport r;
    auto g = apply_gamma(w, prop);
    r.final_norm = sup_norm(g.frames.back().u);
    double wn = weighted_decay_norm(w.frames, a, alpha);
    if (wn == 0.0) return r;
    auto res = apply_L(g, prop.profile());
    for (std::size_t j = 0; j < res.frames.size(); ++j) res.frames[j].u += w.frames[j].u;
    r.residual = weighted_decay_norm(res.frames, a, alpha) / wn;
    return r;
}

double bounded_image_check(const SpaceTimeField& w, const FrozenPropagator& prop, DecayRate a, HolderExponent alpha) {
    double wn = weighted_decay_norm(w.frames, a, alpha);
    if (wn == 0.0) return 0.0;
    return weighted_decay_norm(apply_gamma(w, prop).frames, a, alpha) / wn;
}

SpaceTimeField random_smooth_field(const FrozenPropagator& prop, const std::vector<double>& times, double band,
                                   std::size_t max_modes, std::uint64_t seed) {
    if (times.size() < 2) throw DomainError("need at least two time levels");
    const double T = -times.front();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<std::size_t> picked;
    for (std::size_t k = prop.modes(); k-- > 0 && picked.size() < max_modes;)
        if (std::fabs(prop.eigenvalues()(static_cast<Eigen::Index>(k))) * T <= band) picked.push_back(k);
    if (picked.empty()) throw DomainError("no mode fits inside the band");
    struct Term {
        std::size_t k;
        double amp, omega, phase;
    };
    std::vector<Term> terms;
    for (std::size_t k : picked) terms.push_back({k, 2.0 * ud(rng) - 1.0, 2.0 * ud(rng), 2.0 * M_PI * ud(rng)});
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(prop.modes()), static_cast<Eigen::Index>(times.size()));
    for (std::size_t j = 0; j < times.size(); ++j)
        for (const auto& term : terms)
            c(static_cast<Eigen::Index>(term.k), static_cast<Eigen::Index>(j)) = term.amp * std::cos(term.omega * times[j] + term.phase);
    SpaceTimeField f;
    f.frames = prop.synthesize(times, c);
    return f;
}

}  // namespace hlab
