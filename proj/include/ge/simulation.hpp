#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

#include "ge/core.hpp"

namespace ge {

enum class ReturnUnits { fraction, percent };

/**
 * Three-factor return simulator settings. Defaults are the market-calibrated
 * values: loadings ~ N(mu_b, cov_b), factor returns ~ N(mu_f, cov_f),
 * idiosyncratic levels ~ Gamma(shape, scale) conditioned on >= sigma_floor,
 * noise ~ Student-t(t_dof) rescaled to standard deviation sigma_i.
 *
 * The calibrated parameters are in daily percent. With units = fraction
 * the generated returns (and the true covariance) are divided by 100
 * (resp. 100^2).
 */
struct FactorSimConfig {
    Index p = 100;
    Index n = 252;
    std::uint64_t seed = 1;
    Eigen::Vector3d mu_b{0.7828, 0.5180, 0.4100};
    Eigen::Matrix3d cov_b;
    Eigen::Vector3d mu_f{0.02355, 0.01298, 0.02071};
    Eigen::Matrix3d cov_f;
    double gamma_shape = 3.3586;
    double gamma_scale = 0.1876;
    double sigma_floor = 0.1950;
    double t_dof = 6.0;
    ReturnUnits units = ReturnUnits::fraction;
    int periods_per_year = kDefaultPeriodsPerYear;

    FactorSimConfig();

    /// Throws DataError on out-of-range values (the PSD checks happen at draw time).
    void validate() const;
    /// Multiplier from calibrated (percent) units to output units.
    double unit_scale() const { return units == ReturnUnits::fraction ? 0.01 : 1.0; }
};

/**
 * Reads `key = value` lines ('#' starts a comment). Keys: p, n, seed,
 * mu_b, cov_b, mu_f, cov_f (comma-separated, 3 or 9 values), gamma_shape,
 * gamma_scale, sigma_floor, t_dof, units (fraction|percent),
 * periods_per_year. Unspecified keys keep their defaults.
 */
FactorSimConfig read_sim_config(std::istream& in, const std::string& source = "<config>");
FactorSimConfig read_sim_config_file(const std::string& path);
void write_sim_config(std::ostream& out, const FactorSimConfig& config);

/// Fixed part of a simulation: loadings, idiosyncratic levels and the implied covariance.
struct Universe {
    Matrix loadings;     ///< p x 3
    Vector idio_levels;  ///< p, calibrated units (percent)
    CovarianceEstimate true_sigma;  ///< output units
};

Universe draw_universe(const FactorSimConfig& config);

struct SimulatedPanel {
    ReturnPanel returns;
    ReturnPanel factors;
};

/**
 * n periods of returns on a fixed universe. Each `replicate` index gets its
 * own factor and noise streams derived from the config seed.
 */
SimulatedPanel draw_panel(const Universe& universe, const FactorSimConfig& config,
                          std::uint64_t replicate = 0);

/// Draws from Gamma(shape, scale) conditioned on being >= floor, by rejection.
template <typename Rng>
double truncated_gamma(Rng& rng, double shape, double scale, double floor);

/// Symmetric square root factor L (L L' = M) of a PSD matrix; throws if M is not PSD.
Matrix psd_factor(const Matrix& m, const char* what);

template <typename Rng>
double truncated_gamma(Rng& rng, double shape, double scale, double floor) {
    std::gamma_distribution<double> gamma(shape, scale);
    for (;;) {
        const double x = gamma(rng);
        if (x >= floor) return x;
    }
}

}  // namespace ge
