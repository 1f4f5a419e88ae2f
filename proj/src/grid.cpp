#include "hlab/grid.hpp"

#include "hlab/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hlab {

Grid::Grid(double half_width, std::size_t n) : X_(half_width), n_(n), h_(0.0) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw DomainError("grid half-width must be positive, got " + format_real(half_width));
    if (n < 3) throw DomainError("grid needs at least 3 points");
    if (n % 2 == 0) throw DomainError("grid point count must be odd, got " + std::to_string(n));
    h_ = 2.0 * X_ / static_cast<double>(n - 1);
}

double Grid::x(std::size_t i) const {
    if (i == 0) return -X_;
    if (i == n_ - 1) return X_;
    return (static_cast<double>(i) - static_cast<double>(mid())) * h_;
}

std::size_t Grid::nearest(double xv) const {
    double k = std::round((xv + X_) / h_);
    if (k < 0) return 0;
    if (k > static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(k);
}

Grid make_grid(double X, std::size_t n) { return Grid(X, n); }

GridFunction::GridFunction(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
        throw DomainError("value count " + std::to_string(values.size()) + " does not match grid size " +
                          std::to_string(grid.size()));
}

bool GridFunction::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

GridFunction& GridFunction::operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

double Forcing::operator()(double x) const {
    if (zero) return 0.0;
    double x2 = x * x;
    return (x2 - c) * std::exp(-0.5 * x2);
}

HolderExponent::HolderExponent(double a) : alpha(a) {
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("Holder exponent must lie in (0, 1], got " + format_real(a));
}

DecayRate::DecayRate(double rate) : a(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("decay rate must be positive");
}

DecayRate::DecayRate(double rate, double reference_eigenvalue) : DecayRate(rate) {
    if (!(rate < reference_eigenvalue))
        throw DomainError("decay rate " + format_real(rate) + " must lie below the reference eigenvalue " +
                          format_real(reference_eigenvalue));
}

GridFunction sample_forcing(const Grid& g, const Forcing& phi) {
    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = phi(g.x(i));
    return out;
}

GridFunction sample_forcing(const Grid& g, double c) { return sample_forcing(g, Forcing::gaussian(c)); }

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double sup_norm(const GridFunction& u) { return sup_norm(std::span<const double>(u.values)); }

namespace {

// Offsets scanned by the seminorm: all of them on modest grids, powers of two beyond.
constexpr std::size_t kAllPairsLimit = 2000;

double offset_scan(const std::vector<double>& v, std::size_t k, double denom) {
    const auto m = static_cast<Eigen::Index>(v.size() - k);
    Eigen::Map<const Eigen::ArrayXd> lo(v.data(), m), hi(v.data() + k, m);
    return (hi - lo).abs().maxCoeff() / denom;
}

/// Cheap bound on the seminorm: differences at offset k are at most min(range, k * max step).
double seminorm_bound(const std::vector<double>& v, double h, double alpha) {
    if (v.size() < 2) return 0.0;
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double step = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) step = std::max(step, std::fabs(v[i + 1] - v[i]));
    const double range = *hi - *lo;
    if (step == 0.0) return 0.0;
    return std::pow(range, 1.0 - alpha) * std::pow(step / h, alpha);
}

}  // namespace

double holder_seminorm(const GridFunction& u, HolderExponent alpha) {
    const auto& v = u.values;
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double range = *hi - *lo;
    if (range == 0.0) return 0.0;

    const double h = u.grid.h();
    double best = 0.0;
    auto visit = [&](std::size_t k) {
        double denom = std::pow(static_cast<double>(k) * h, alpha.alpha);
        // No pair at this or any wider offset can beat the current best.
        if (range / denom <= best) return false;
        best = std::max(best, offset_scan(v, k, denom));
        return true;
    };
    if (n <= kAllPairsLimit) {
        for (std::size_t k = 1; k < n; ++k)
            if (!visit(k)) break;
    } else {
        for (std::size_t k = 1; k < n; k *= 2)
            if (!visit(k)) break;
    }
    return best;
}

double holder_norm(const GridFunction& u, HolderExponent alpha) {
    return sup_norm(u) + holder_seminorm(u, alpha);
}

double weighted_decay_norm(std::span<const Frame> frames, DecayRate a, HolderExponent alpha) {
    // Exact frames are visited in order of their cheap bound until no bound can win.
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(frames.size());
    for (std::size_t j = 0; j < frames.size(); ++j) {
        const auto& u = frames[j].u;
        const double bound = sup_norm(u) + seminorm_bound(u.values, u.grid.h(), alpha.alpha);
        order.push_back({std::exp(-a.a * frames[j].t) * bound, j});
    }
    std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
    double best = 0.0;
    for (const auto& [bound, j] : order) {
        if (bound <= best) break;
        best = std::max(best, std::exp(-a.a * frames[j].t) * holder_norm(frames[j].u, alpha));
    }
    return best;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& os, const GridFunction& u) {
    os << "x,value\n";
    for (std::size_t i = 0; i < u.size(); ++i) os << format_real(u.grid.x(i)) << ',' << format_real(u[i]) << '\n';
}

void write_csv(const std::string& path, const GridFunction& u) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    write_csv(os, u);
}

GridFunction read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,value", 0) != 0) throw DomainError("grid CSV must start with header x,value");
    std::vector<double> xs, vs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw DomainError("malformed grid CSV row: " + line);
        try {
            xs.push_back(std::stod(line.substr(0, comma)));
            vs.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DomainError("malformed grid CSV row: " + line);
        }
    }
    if (xs.size() < 3) throw DomainError("grid CSV needs at least 3 rows");
    Grid g(xs.back(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::fabs(xs[i] - g.x(i)) > 1e-9 * g.half_width())
            throw DomainError("grid CSV abscissae are not a symmetric uniform grid");
    return GridFunction(g, std::move(vs));
}

GridFunction read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open " + path);
    return read_csv(is);
}

}  // namespace hlab
