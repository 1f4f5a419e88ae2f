#pragma once

#include "hlab/grid.hpp"
#include "hlab/tridiag.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hlab {

struct SpectrumOptions {
    double tol_bisect = 1e-12;  ///< absolute bisection width
    double tol_eig = 1e-8;      ///< residual bound on sup-normalized eigenvectors
    double min_isolation = 1e-10;
    int max_inverse_iterations = 30;
};

/// H = d^2/dx^2 - 2f on the interior nodes, Dirichlet at both ends.
struct SchroedingerMatrix {
    Grid grid;
    SymTridiagonal t;
    std::string potential_source;

    std::size_t size() const { return t.size(); }
};

SchroedingerMatrix assemble_h(const GridFunction& f, std::string source = {});

/// H applied to v (endpoint values are taken as zero); result has zero endpoints.
GridFunction apply_h(const SchroedingerMatrix& m, const GridFunction& v);

/// Every eigenvalue above cutoff, descending. The count comes from the Sturm sequence.
std::vector<double> eigenvalues_above(const SchroedingerMatrix& m, double cutoff,
                                      const SpectrumOptions& opt = {});

/// The k largest eigenvalues, descending.
std::vector<double> top_eigenvalues(const SchroedingerMatrix& m, std::size_t k,
                                    const SpectrumOptions& opt = {});

std::size_t positive_count(const SchroedingerMatrix& m);

/// Eigenvector for the eigenvalue nearest to lambda by inverse iteration.
/// Sup-normalized; the largest-magnitude entry is positive, ties going to the leftmost node.
GridFunction eigenfunction(const SchroedingerMatrix& m, double lambda, const SpectrumOptions& opt = {});

/// Flip and scale v to the sup-norm convention above.
void normalize_sup(GridFunction& v);

struct Spectrum {
    std::string potential_source;
    std::vector<double> eigenvalues;  ///< descending
    std::vector<GridFunction> eigenfunctions;
    std::size_t positive_count = 0;
    /// Smallest gap between consecutive stored eigenvalues (infinity if fewer than two).
    double min_gap() const;
};

/// Eigenvalues above cutoff, plus eigenvectors when asked.
Spectrum compute_spectrum(const SchroedingerMatrix& m, double cutoff, bool with_vectors,
                          const SpectrumOptions& opt = {});

struct UnstableSubspace {
    std::size_t dimension = 0;
    std::vector<double> eigenvalues;  ///< descending
    std::vector<GridFunction> basis;
};

UnstableSubspace unstable_subspace(const GridFunction& f, const SpectrumOptions& opt = {});

/// Discrete L2 inner product (weight h).
double inner(const GridFunction& a, const GridFunction& b);

void to_json(nlohmann::json& j, const Spectrum& s);

}  // namespace hlab
