#include "hlab/tridiag.hpp"

#include "hlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hlab {

std::pair<double, double> SymTridiagonal::bounds() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::fabs(off[i - 1]);
        if (i + 1 < n) r += std::fabs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
}

std::vector<double> SymTridiagonal::apply(const std::vector<double>& v) const {
    const std::size_t n = size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * v[i];
        if (i > 0) s += off[i - 1] * v[i - 1];
        if (i + 1 < n) s += off[i] * v[i + 1];
        out[i] = s;
    }
    return out;
}

std::size_t count_below(const SymTridiagonal& t, double x) {
    const std::size_t n = t.size();
    if (n == 0) return 0;
    // A zero pivot is nudged off zero; the count is unaffected for x off the spectrum.
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    std::size_t neg = 0;
    double q = t.diag[0] - x;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++neg;
    for (std::size_t i = 1; i < n; ++i) {
        double e = t.off[i - 1];
        q = t.diag[i] - x - e * e / q;
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++neg;
    }
    return neg;
}

std::size_t count_above(const SymTridiagonal& t, double x) {
    // Count eigenvalues <= x via the negated matrix, so exact hits go to neither side twice.
    SymTridiagonal neg{t.diag, t.off};
    for (double& d : neg.diag) d = -d;
    return count_below(neg, -x);
}

double kth_largest(const SymTridiagonal& t, std::size_t k, double tol) {
    if (k >= t.size()) throw DomainError("eigenvalue index out of range");
    auto [lo, hi] = t.bounds();
    double span = std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)));
    lo -= 1e-12 * span;
    hi += 1e-12 * span;
    // invariant: count_above(lo) > k >= count_above(hi)
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_above(t, mid) > k)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> solve_shifted(const SymTridiagonal& t, double shift, std::vector<double> rhs) {
    const std::size_t n = t.size();
    if (n == 0) return rhs;
    // Row i of the upper factor holds u0 (diagonal), u1, u2 (fill-in from pivoting).
    std::vector<double> u0(n), u1(n, 0.0), u2(n, 0.0), l(n, 0.0);
    std::vector<char> swapped(n, 0);
    std::vector<double> d(n), du(n, 0.0), dl(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - shift;
    for (std::size_t i = 0; i + 1 < n; ++i) du[i] = dl[i] = t.off[i];

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::fabs(d[i]) >= std::fabs(dl[i])) {
            if (d[i] == 0.0) d[i] = std::numeric_limits<double>::epsilon() * (std::fabs(t.off[i]) + 1.0);
            double m = dl[i] / d[i];
            l[i] = m;
            d[i + 1] -= m * du[i];
            rhs[i + 1] -= m * rhs[i];
            u0[i] = d[i];
            u1[i] = du[i];
            u2[i] = 0.0;
        } else {
            double m = d[i] / dl[i];
            l[i] = m;
            swapped[i] = 1;
            u0[i] = dl[i];
            u1[i] = d[i + 1];
            u2[i] = (i + 2 < n) ? du[i + 1] : 0.0;
            d[i + 1] = du[i] - m * d[i + 1];
            if (i + 2 < n) du[i + 1] = -m * du[i + 1];
            std::swap(rhs[i], rhs[i + 1]);
            rhs[i + 1] -= m * rhs[i];
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = std::numeric_limits<double>::epsilon();
    u0[n - 1] = d[n - 1];

    std::vector<double>& y = rhs;
    y[n - 1] /= u0[n - 1];
    if (n >= 2) y[n - 2] = (y[n - 2] - u1[n - 2] * y[n - 1]) / u0[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) y[k] = (y[k] - u1[k] * y[k + 1] - u2[k] * y[k + 2]) / u0[k];
    return y;
}

void thomas_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                  const std::vector<double>& sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    std::vector<double> c(n);
    double beta = diag[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i - 1] * c[i - 1];
        rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace hlab
