#include "ge/simulation.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ge/csv_io.hpp"

namespace ge {

FactorSimConfig::FactorSimConfig() {
    // The printed loading covariance is asymmetric in its (1,3)/(3,1) and
    // (2,3)/(3,2) entries by rounding; the average is used.
    cov_b << 0.02914, 0.02387, 0.5 * (0.010184 + 0.01018),
             0.02387, 0.05395, 0.5 * (-0.006967 - 0.00696),
             0.5 * (0.010184 + 0.01018), 0.5 * (-0.006967 - 0.00696), 0.086856;
    cov_f << 1.2507, -0.0350, -0.2042,
             -0.0350, 0.3156, -0.0023,
             -0.2042, -0.0023, 0.1930;
}

void FactorSimConfig::validate() const {
    if (p < 1) throw DataError("simulation needs p >= 1");
    if (n < 2) throw DataError("simulation needs n >= 2");
    if (!(gamma_shape > 0.0) || !(gamma_scale > 0.0)) {
        throw DataError("gamma shape and scale must be positive");
    }
    if (!(sigma_floor >= 0.0)) throw DataError("sigma_floor must be nonnegative");
    if (!(t_dof > 2.0)) {
        throw DataError("Student-t degrees of freedom must exceed 2 (finite variance)");
    }
    if (periods_per_year <= 0) throw DataError("periods_per_year must be positive");
    if (!mu_b.allFinite() || !cov_b.allFinite() || !mu_f.allFinite() || !cov_f.allFinite()) {
        throw DataError("simulation parameters must be finite");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<double> parse_list(const std::string& value, std::size_t expected,
                               const std::string& where) {
    std::vector<double> out;
    for (const auto& cell : csv::split_line(value)) out.push_back(csv::parse_double(cell, where));
    if (out.size() != expected) {
        throw DataError(where + ": expected " + std::to_string(expected) + " values, got " +
                        std::to_string(out.size()));
    }
    return out;
}

Index parse_count(const std::string& value, const std::string& where) {
    const double v = csv::parse_double(value, where);
    if (v != std::floor(v) || v < 0) throw DataError(where + ": expected a nonnegative integer");
    return static_cast<Index>(v);
}

std::string join(const double* data, int count) {
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (i) out += ", ";
        out += csv::format_double(data[i]);
    }
    return out;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose, std::uint64_t replicate = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      purpose, static_cast<std::uint32_t>(replicate),
                      static_cast<std::uint32_t>(replicate >> 32)};
    return std::mt19937_64(seq);
}

enum Stream : std::uint32_t { kLoadings = 1, kLevels = 2, kFactors = 3, kNoise = 4 };

}  // namespace

FactorSimConfig read_sim_config(std::istream& in, const std::string& source) {
    FactorSimConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "p") {
            cfg.p = parse_count(value, where);
        } else if (key == "n") {
            cfg.n = parse_count(value, where);
        } else if (key == "seed") {
            cfg.seed = std::stoull(value);
        } else if (key == "mu_b" || key == "mu_f") {
            const auto v = parse_list(value, 3, where);
            (key == "mu_b" ? cfg.mu_b : cfg.mu_f) = Eigen::Vector3d(v[0], v[1], v[2]);
        } else if (key == "cov_b" || key == "cov_f") {
            const auto v = parse_list(value, 9, where);
            Eigen::Matrix3d m;
            m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
            (key == "cov_b" ? cfg.cov_b : cfg.cov_f) = 0.5 * (m + m.transpose());
        } else if (key == "gamma_shape") {
            cfg.gamma_shape = csv::parse_double(value, where);
        } else if (key == "gamma_scale") {
            cfg.gamma_scale = csv::parse_double(value, where);
        } else if (key == "sigma_floor") {
            cfg.sigma_floor = csv::parse_double(value, where);
        } else if (key == "t_dof") {
            cfg.t_dof = csv::parse_double(value, where);
        } else if (key == "units") {
            if (value == "fraction") cfg.units = ReturnUnits::fraction;
            else if (value == "percent") cfg.units = ReturnUnits::percent;
            else throw DataError(where + ": units must be 'fraction' or 'percent'");
        } else if (key == "periods_per_year") {
            cfg.periods_per_year = static_cast<int>(parse_count(value, where));
        } else {
            throw DataError(where + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

FactorSimConfig read_sim_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    return read_sim_config(in, path);
}

void write_sim_config(std::ostream& out, const FactorSimConfig& c) {
    out << "p = " << c.p << '\n'
        << "n = " << c.n << '\n'
        << "seed = " << c.seed << '\n'
        << "mu_b = " << join(c.mu_b.data(), 3) << '\n'
        << "cov_b = " << join(Eigen::Matrix3d(c.cov_b.transpose()).data(), 9) << '\n'
        << "mu_f = " << join(c.mu_f.data(), 3) << '\n'
        << "cov_f = " << join(Eigen::Matrix3d(c.cov_f.transpose()).data(), 9) << '\n'
        << "gamma_shape = " << csv::format_double(c.gamma_shape) << '\n'
        << "gamma_scale = " << csv::format_double(c.gamma_scale) << '\n'
        << "sigma_floor = " << csv::format_double(c.sigma_floor) << '\n'
        << "t_dof = " << csv::format_double(c.t_dof) << '\n'
        << "units = " << (c.units == ReturnUnits::fraction ? "fraction" : "percent") << '\n'
        << "periods_per_year = " << c.periods_per_year << '\n';
}

Matrix psd_factor(const Matrix& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    const Vector& vals = eig.eigenvalues();
    const double hi = std::max(vals.maxCoeff(), 0.0);
    if (vals.minCoeff() < -1e-12 * std::max(hi, 1.0)) {
        throw DataError(std::string(what) + " is not positive semi-definite");
    }
    return eig.eigenvectors() * vals.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Universe draw_universe(const FactorSimConfig& config) {
    config.validate();
    const Matrix chol_b = psd_factor(config.cov_b, "loading covariance cov_b");
    psd_factor(config.cov_f, "factor covariance cov_f");

    const Index p = config.p;
    Matrix loadings(p, 3);
    {
        auto rng = stream(config.seed, kLoadings);
        std::normal_distribution<double> normal;
        for (Index i = 0; i < p; ++i) {
            const Eigen::Vector3d z(normal(rng), normal(rng), normal(rng));
            const Eigen::Vector3d shock = chol_b * z;
            loadings.row(i) = (config.mu_b + shock).transpose();
        }
    }
    Vector levels(p);
    {
        auto rng = stream(config.seed, kLevels);
        for (Index i = 0; i < p; ++i) {
            levels[i] = truncated_gamma(rng, config.gamma_shape, config.gamma_scale,
                                        config.sigma_floor);
        }
    }
    Matrix sigma = loadings * config.cov_f * loadings.transpose();
    sigma.diagonal() += levels.array().square().matrix();
    const double s = config.unit_scale();
    return Universe{std::move(loadings), std::move(levels),
                    CovarianceEstimate(sigma * (s * s), EstimatorTag::exogenous,
                                       config.periods_per_year)};
}

SimulatedPanel draw_panel(const Universe& universe, const FactorSimConfig& config,
                          std::uint64_t replicate) {
    config.validate();
    const Index p = universe.loadings.rows();
    const Index n = config.n;
    const Matrix chol_f = psd_factor(config.cov_f, "factor covariance cov_f");

    Matrix factors(n, 3);
    {
        auto rng = stream(config.seed, kFactors, replicate);
        std::normal_distribution<double> normal;
        for (Index t = 0; t < n; ++t) {
            const Eigen::Vector3d z(normal(rng), normal(rng), normal(rng));
            const Eigen::Vector3d shock = chol_f * z;
            factors.row(t) = (config.mu_f + shock).transpose();
        }
    }
    Matrix returns = factors * universe.loadings.transpose();
    {
        auto rng = stream(config.seed, kNoise, replicate);
        std::student_t_distribution<double> student(config.t_dof);
        // Unit-scale t has variance nu / (nu - 2).
        const double to_unit_sd = 1.0 / std::sqrt(config.t_dof / (config.t_dof - 2.0));
        for (Index t = 0; t < n; ++t) {
            for (Index i = 0; i < p; ++i) {
                returns(t, i) += universe.idio_levels[i] * to_unit_sd * student(rng);
            }
        }
    }
    const double s = config.unit_scale();
    std::vector<std::string> ids;
    for (Index i = 0; i < p; ++i) ids.push_back("A" + std::to_string(i + 1));
    return SimulatedPanel{
        ReturnPanel(returns * s, std::move(ids), config.periods_per_year),
        ReturnPanel(factors * s, {"MKT", "SMB", "HML"}, config.periods_per_year)};
}

}  // namespace ge
