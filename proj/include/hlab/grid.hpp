#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hlab {

/// Uniform grid on [-X, X] with an odd number of points, so x = 0 is a node.
class Grid {
public:
    Grid(double half_width, std::size_t n);

    double half_width() const { return X_; }
    std::size_t size() const { return n_; }
    double h() const { return h_; }
    std::size_t mid() const { return (n_ - 1) / 2; }

    /// Node i; symmetric about the midpoint, endpoints exactly -X and X.
    double x(std::size_t i) const;

    /// Index of the node nearest to xv (clamped to the grid).
    std::size_t nearest(double xv) const;

    bool operator==(const Grid& o) const { return X_ == o.X_ && n_ == o.n_; }

private:
    double X_;
    std::size_t n_;
    double h_;
};

Grid make_grid(double X, std::size_t n);

/// Samples of a real function on a Grid.
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    explicit GridFunction(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
    GridFunction(const Grid& g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    bool all_finite() const;

    GridFunction& operator+=(const GridFunction& o);
    GridFunction& operator-=(const GridFunction& o);
    GridFunction& operator*=(double s);
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

/// Forcing term phi(x) = (x^2 - c) exp(-x^2/2), or identically zero.
struct Forcing {
    double c = 0.0;
    bool zero = false;

    static Forcing gaussian(double c) { return {c, false}; }
    static Forcing none() { return {0.0, true}; }

    double operator()(double x) const;
};

struct HolderExponent {
    double alpha = 0.5;
    explicit HolderExponent(double a = 0.5);
};

struct DecayRate {
    double a;
    explicit DecayRate(double a);
    /// Also enforces a below the given reference eigenvalue.
    DecayRate(double a, double reference_eigenvalue);
};

/// Time-stamped profile; trajectories and space-time fields are lists of these.
struct Frame {
    double t;
    GridFunction u;
};

GridFunction sample_forcing(const Grid& g, const Forcing& phi);
GridFunction sample_forcing(const Grid& g, double c);

double sup_norm(const GridFunction& u);
double sup_norm(std::span<const double> v);

/// sup|u| plus the discrete Holder seminorm over node pairs.
double holder_norm(const GridFunction& u, HolderExponent alpha = HolderExponent{});

/// The Holder seminorm alone.
double holder_seminorm(const GridFunction& u, HolderExponent alpha = HolderExponent{});

/// max over frames of exp(-a t) * holder_norm(u(t)).
double weighted_decay_norm(std::span<const Frame> frames, DecayRate a,
                           HolderExponent alpha = HolderExponent{});

void write_csv(std::ostream& os, const GridFunction& u);
void write_csv(const std::string& path, const GridFunction& u);
GridFunction read_csv(std::istream& is);
GridFunction read_csv(const std::string& path);

/// Decimal with 17 significant digits; parses back to the same double.
std::string format_real(double v);

}  // namespace hlab
