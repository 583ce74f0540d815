#pragma once

#include <random>

#include "ge/core.hpp"

namespace testutil {

/// A A' / k + ridge I with A p x k standard normal.
inline ge::Matrix random_psd(std::mt19937_64& rng, ge::Index p, ge::Index k, double ridge = 0.0) {
    std::normal_distribution<double> z;
    ge::Matrix a(p, k);
    for (ge::Index i = 0; i < p; ++i)
        for (ge::Index j = 0; j < k; ++j) a(i, j) = z(rng);
    ge::Matrix s = a * a.transpose() / static_cast<double>(k);
    s.diagonal().array() += ridge;
    return s;
}

inline ge::Matrix random_returns(std::mt19937_64& rng, ge::Index t, ge::Index p, double scale = 0.01) {
    std::normal_distribution<double> z;
    ge::Matrix r(t, p);
    for (ge::Index i = 0; i < t; ++i)
        for (ge::Index j = 0; j < p; ++j) r(i, j) = scale * z(rng);
    return r;
}

inline std::vector<std::string> ids(ge::Index p, const std::string& prefix = "S") {
    std::vector<std::string> out;
    for (ge::Index i = 0; i < p; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

}  // namespace testutil
