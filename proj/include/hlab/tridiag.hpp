#pragma once

#include <cstddef>
#include <vector>

namespace hlab {

/// Symmetric tridiagonal matrix: diag[0..N), off[0..N-1).
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }
    /// Gershgorin enclosure of the spectrum.
    std::pair<double, double> bounds() const;
    std::vector<double> apply(const std::vector<double>& v) const;
};

/// Number of eigenvalues strictly below x (Sturm sequence of LDL^T pivots).
std::size_t count_below(const SymTridiagonal& t, double x);
/// Number of eigenvalues strictly above x.
std::size_t count_above(const SymTridiagonal& t, double x);

/// k-th largest eigenvalue (k = 0 is the top), bisected to absolute width tol.
double kth_largest(const SymTridiagonal& t, std::size_t k, double tol);

/// Solve (T - shift I) y = rhs by Gaussian elimination with partial pivoting.
std::vector<double> solve_shifted(const SymTridiagonal& t, double shift, std::vector<double> rhs);

/// General tridiagonal solve without pivoting (diagonally dominant systems).
/// sub[i] couples row i+1 to i, sup[i] couples row i to i+1.
void thomas_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                  const std::vector<double>& sup, std::vector<double>& rhs);

}  // namespace hlab
