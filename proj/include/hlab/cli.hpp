#pragma once

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hlab {

/// Flat run configuration, read from key=value text with # comments.
struct RunConfig {
    // grid
    double X = 20.0;
    std::size_t n = 801;
    // stepper
    double dt = 0.01;
    double t_max = 200.0;
    double blowup_threshold = 1e6;
    std::size_t snapshot_stride = 10;
    double t_dwell = 5.0;
    bool adaptive = true;
    // tolerances
    double tol_eq = 1e-8;
    double tol_eig = 1e-8;
    double tol_bisect = 1e-12;
    double tol_shoot = 1e-9;
    double tol_conv = 1e-4;
    double tol_A = 0.01;
    double tol_theta = 1e-5;
    double gap_tol = 1e-3;
    // forcing parameter; each subcommand has its own default
    std::optional<double> c;
    bool zero_forcing = false;
    // equilibria scan
    std::vector<double> c_list;
    bool c_list_set = false;
    double c_min = -1.2, c_max = 0.2;
    std::size_t c_steps = 29;
    double f0_min = -3.0, f0_max = 3.0, fp0_min = -1.0, fp0_max = 1.0;
    std::size_t seeds_per_axis = 9;
    double dedup_tol = 1e-6;
    bool continuation = true;
    double cont_c_min = 0.03, cont_c_max = 0.09;
    double cont_step = 0.002, cont_max_step = 0.004;
    // frontier
    double A_lo = -3.0, A_hi = -1.0;
    double bump_width = 10.0;
    // fan
    double fan_A = 0.1;
    std::vector<double> thetas{1.11494, 1.11496, 1.11497, 1.11498, 1.11499, 1.115};
    std::size_t theta_sweep = 17;  ///< extra evenly spaced angles on [0, pi]
    double heterocline_A = 1e-3;
    double heterocline_theta = 1.5707963267948966;
    // evolve
    std::string initial = "frontier";  ///< frontier | fan | constant | csv
    double evolve_A = -1.0;
    double evolve_theta = 0.0;
    double u0_value = 0.0;
    std::string u0_path;
    // orbit-spectrum
    std::string trajectory;
    std::size_t trace_k = 4;
    // verify
    double verify_T = 20.0;
    double verify_band = 5.0;
    std::size_t verify_modes = 8;
    std::size_t verify_seed = 42;
    double verify_a = 0.01;
    std::size_t verify_samples = 20;

    bool strict = false;

    /// Tolerances divided by 10.
    void apply_strict();
    void validate() const;
    nlohmann::json echo() const;
};

RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// Entry point behind the hlab executable. Exit codes: 0 ok, 2 usage or domain error, 1 internal failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hlab
