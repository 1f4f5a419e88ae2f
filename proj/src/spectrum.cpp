#include "hlab/spectrum.hpp"

#include "hlab/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hlab {

SchroedingerMatrix assemble_h(const GridFunction& f, std::string source) {
    const Grid& g = f.grid;
    const std::size_t n = g.size();
    const double ih2 = 1.0 / (g.h() * g.h());
    SchroedingerMatrix m{g, {}, std::move(source)};
    m.t.diag.resize(n - 2);
    m.t.off.assign(n - 3, ih2);
    for (std::size_t i = 1; i + 1 < n; ++i) m.t.diag[i - 1] = -2.0 * ih2 - 2.0 * f[i];
    return m;
}

GridFunction apply_h(const SchroedingerMatrix& m, const GridFunction& v) {
    std::vector<double> inner(v.values.begin() + 1, v.values.end() - 1);
    auto r = m.t.apply(inner);
    GridFunction out(m.grid);
    std::copy(r.begin(), r.end(), out.values.begin() + 1);
    return out;
}

std::vector<double> eigenvalues_above(const SchroedingerMatrix& m, double cutoff, const SpectrumOptions& opt) {
    std::size_t k = count_above(m.t, cutoff);
    std::vector<double> out(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = kth_largest(m.t, j, opt.tol_bisect);
    return out;
}

std::vector<double> top_eigenvalues(const SchroedingerMatrix& m, std::size_t k, const SpectrumOptions& opt) {
    k = std::min(k, m.size());
    std::vector<double> out(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = kth_largest(m.t, j, opt.tol_bisect);
    return out;
}

std::size_t positive_count(const SchroedingerMatrix& m) { return count_above(m.t, 0.0); }

void normalize_sup(GridFunction& v) {
    double m = sup_norm(v);
    if (m == 0.0) return;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::fabs(v[i]) >= m * (1.0 - 1e-9)) {
            pick = i;
            break;
        }
    }
    double s = (v[pick] > 0 ? 1.0 : -1.0) / m;
    v *= s;
}

GridFunction eigenfunction(const SchroedingerMatrix& m, double lambda, const SpectrumOptions& opt) {
    const std::size_t N = m.size();
    // Locate the eigenvalue nearest lambda and its neighbours.
    std::size_t above = count_above(m.t, lambda);
    std::size_t idx;
    double target;
    if (above == 0) {
        idx = 0;
        target = kth_largest(m.t, 0, opt.tol_bisect);
    } else if (above >= N) {
        idx = N - 1;
        target = kth_largest(m.t, N - 1, opt.tol_bisect);
    } else {
        double up = kth_largest(m.t, above - 1, opt.tol_bisect);
        double dn = kth_largest(m.t, above, opt.tol_bisect);
        if (up - lambda <= lambda - dn) {
            idx = above - 1;
            target = up;
        } else {
            idx = above;
            target = dn;
        }
    }
    double gap = std::numeric_limits<double>::infinity();
    if (idx > 0) gap = std::min(gap, kth_largest(m.t, idx - 1, opt.tol_bisect) - target);
    if (idx + 1 < N) gap = std::min(gap, target - kth_largest(m.t, idx + 1, opt.tol_bisect));
    double window = 0.5 * gap;
    if (gap <= std::max(opt.min_isolation, 10.0 * opt.tol_bisect) || std::fabs(lambda - target) > window)
        throw NotIsolated("eigenvalue near " + format_real(lambda) + " is not isolated (gap " + format_real(gap) + ")");

    // Deterministic start with components in every direction.
    std::vector<double> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    double shift = target + opt.tol_bisect;
    GridFunction out(m.grid);
    for (int it = 0; it < opt.max_inverse_iterations; ++it) {
        v = solve_shifted(m.t, shift, v);
        double s = sup_norm(std::span<const double>(v));
        if (!(s > 0.0) || !std::isfinite(s)) throw NoConvergence("inverse iteration broke down");
        for (double& x : v) x /= s;
        auto hv = m.t.apply(v);
        double res = 0.0;
        for (std::size_t i = 0; i < N; ++i) res = std::max(res, std::fabs(hv[i] - target * v[i]));
        if (res <= opt.tol_eig && it >= 1) {
            std::copy(v.begin(), v.end(), out.values.begin() + 1);
            normalize_sup(out);
            return out;
        }
    }
    throw NoConvergence("inverse iteration did not reach residual " + format_real(opt.tol_eig));
}

double Spectrum::min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < eigenvalues.size(); ++i) g = std::min(g, eigenvalues[i - 1] - eigenvalues[i]);
    return g;
}

Spectrum compute_spectrum(const SchroedingerMatrix& m, double cutoff, bool with_vectors, const SpectrumOptions& opt) {
    Spectrum s;
    s.potential_source = m.potential_source;
    s.eigenvalues = eigenvalues_above(m, cutoff, opt);
    s.positive_count = positive_count(m);
    if (with_vectors)
        for (double l : s.eigenvalues) s.eigenfunctions.push_back(eigenfunction(m, l, opt));
    return s;
}

UnstableSubspace unstable_subspace(const GridFunction& f, const SpectrumOptions& opt) {
    auto m = assemble_h(f);
    UnstableSubspace u;
    u.eigenvalues = eigenvalues_above(m, 0.0, opt);
    u.dimension = u.eigenvalues.size();
    for (double l : u.eigenvalues) u.basis.push_back(eigenfunction(m, l, opt));
    return u;
}

double inner(const GridFunction& a, const GridFunction& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * a.grid.h();
}

void to_json(nlohmann::json& j, const Spectrum& s) {
    j = nlohmann::json{{"potential_source", s.potential_source},
                       {"eigenvalues", s.eigenvalues},
                       {"positive_count", s.positive_count}};
}

}  // namespace hlab
