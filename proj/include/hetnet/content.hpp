#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hetnet {

// Zipf popularity over ranks 1..n with exponent s: p_i = i^-s / sum_j j^-s.
// s = 0 degenerates to the uniform distribution.
inline std::vector<double> zipf_popularity(std::size_t n, double s) {
    if (n < 1)
        throw std::invalid_argument("zipf_popularity: n must be >= 1");
    if (s < 0.0)
        throw std::invalid_argument("zipf_popularity: s must be >= 0");
    std::vector<double> p(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::pow(static_cast<double>(i + 1), -s);
        norm += p[i];
    }
    for (double &v : p)
        v /= norm;
    return p;
}

// Exponential content-size model (sizes in megabits, mean s_hat).
struct SizeDistribution {
    double mean_mbits = 25.0;

    double rate_per_mbit() const { return 1.0 / mean_mbits; }
    double mean_bits() const { return mean_mbits * 1e6; }

    // P(S <= x) for a single content.
    double cdf_one(double x_mbits) const {
        if (x_mbits < 0.0)
            return 0.0;
        return 1.0 - std::exp(-rate_per_mbit() * x_mbits);
    }

    // P(S1 + S2 <= x) for two independent contents (Erlang-2 closed form).
    double cdf_sum2(double x_mbits) const {
        if (x_mbits < 0.0)
            return 0.0;
        const double lx = rate_per_mbit() * x_mbits;
        return 1.0 - std::exp(-lx) * (1.0 + lx);
    }
};

// Rank-ordered content catalog: Zipf popularities and the per-content
// Poisson request rates lambda_ci = p_ci * lambda_HU.
struct ContentCatalog {
    std::vector<double> popularity;
    std::vector<double> request_rate;
    double request_rate_total = 0.0;
    double zipf_s = 0.0;

    static ContentCatalog make(std::size_t n, double s, double lambda_hu) {
        if (lambda_hu < 0.0)
            throw std::invalid_argument("ContentCatalog: lambda_hu must be >= 0");
        ContentCatalog c;
        c.zipf_s = s;
        c.request_rate_total = lambda_hu;
        c.popularity = zipf_popularity(n, s);
        c.request_rate.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            c.request_rate[i] = c.popularity[i] * lambda_hu;
        return c;
    }

    std::size_t size() const { return popularity.size(); }
};

} // namespace hetnet
