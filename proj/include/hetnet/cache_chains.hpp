#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hetnet/content.hpp"
#include "hetnet/ctmc.hpp"

namespace hetnet {

// State indexing for the device-cache chain: empty, one cached content, or an
// unordered pair of distinct contents.
struct LocalChainLayout {
    int n = 0;

    explicit LocalChainLayout(int n_contents) : n(n_contents) {}

    int n_states() const { return 1 + n + n * (n - 1) / 2; }
    int empty_state() const { return 0; }
    int single_state(int i) const { return 1 + i; }
    int pair_state(int i, int j) const {
        if (i > j)
            std::swap(i, j);
        return 1 + n + i * (2 * n - i - 1) / 2 + (j - i - 1);
    }
};

// Device-cache CTMC: insertions at per-content request rates damped by the
// size-fit probability, TTL expiries, and popularity-weighted evictions when
// a request arrives at a full cache.
inline RateMatrix build_local_chain(const ContentCatalog &catalog, const SizeDistribution &dist,
                                    double cache_capacity_mbits, double ttl_rate) {
    if (!(cache_capacity_mbits > 0.0))
        throw std::invalid_argument("build_local_chain: capacity must be > 0");
    if (!(ttl_rate > 0.0))
        throw std::invalid_argument("build_local_chain: ttl_rate must be > 0");
    const int n = static_cast<int>(catalog.size());
    const LocalChainLayout lay(n);
    const double fit_one = dist.cdf_one(cache_capacity_mbits);
    const double fit_two = dist.cdf_sum2(cache_capacity_mbits);
    const auto &p = catalog.popularity;
    const auto &lam = catalog.request_rate;

    RateMatrix m(lay.n_states());
    for (int i = 0; i < n; ++i) {
        m.add(lay.empty_state(), lay.single_state(i), lam[i] * fit_one);
        m.add(lay.single_state(i), lay.empty_state(), ttl_rate);
        for (int j = 0; j < n; ++j) {
            if (j == i)
                continue;
            m.add(lay.single_state(i), lay.pair_state(i, j), lam[j] * fit_two);
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const int s = lay.pair_state(i, j);
            m.add(s, lay.single_state(i), ttl_rate); // j expires
            m.add(s, lay.single_state(j), ttl_rate); // i expires
            const double evict_i = p[j] / (p[i] + p[j]);
            const double evict_j = p[i] / (p[i] + p[j]);
            for (int t = 0; t < n; ++t) {
                if (t == i || t == j)
                    continue;
                m.add(s, lay.pair_state(t, j), lam[t] * evict_i * fit_two);
                m.add(s, lay.pair_state(i, t), lam[t] * evict_j * fit_two);
            }
        }
    }
    return m;
}

inline std::vector<double> local_availability(const ContentCatalog &catalog,
                                              const std::vector<double> &pi) {
    const int n = static_cast<int>(catalog.size());
    const LocalChainLayout lay(n);
    if (static_cast<int>(pi.size()) != lay.n_states())
        throw std::invalid_argument("local_availability: distribution size mismatch");
    std::vector<double> p_loc(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double v = pi[lay.single_state(i)];
        for (int j = 0; j < n; ++j)
            if (j != i)
                v += pi[lay.pair_state(i, j)];
        p_loc[i] = v;
    }
    return p_loc;
}

// Lexicographically ordered k-subsets of {0..n-1} with O(1) index lookup.
struct SubsetSpace {
    int n = 0;
    int k = 0;
    std::vector<std::vector<int>> states;
    std::unordered_map<std::uint64_t, int> index;

    SubsetSpace(int n_, int k_) : n(n_), k(k_) {
        if (k < 1 || k > 8)
            throw std::invalid_argument("SubsetSpace: slot count out of range");
        if (n <= k)
            throw std::invalid_argument("SubsetSpace: need n > k");
        std::vector<int> cur(k);
        for (int i = 0; i < k; ++i)
            cur[i] = i;
        while (true) {
            index.emplace(key(cur), static_cast<int>(states.size()));
            states.push_back(cur);
            int i = k - 1;
            while (i >= 0 && cur[i] == n - k + i)
                --i;
            if (i < 0)
                break;
            ++cur[i];
            for (int j = i + 1; j < k; ++j)
                cur[j] = cur[j - 1] + 1;
        }
    }

    static std::uint64_t key(const std::vector<int> &sorted_subset) {
        std::uint64_t h = 0;
        for (int v : sorted_subset)
            h = (h << 8) | static_cast<std::uint64_t>(v + 1);
        return h;
    }

    int lookup(std::vector<int> sorted_subset) const { return index.at(key(sorted_subset)); }
    int size() const { return static_cast<int>(states.size()); }
};

// Fixed-capacity cache CTMC over all slot_count-subsets. A request for an
// uncached content c_t replaces resident c_e at rate
// lambda_t * x_e / sum_theta x_theta, x_e being the product of the other
// residents' popularities, so the least popular resident leaves most often.
inline RateMatrix build_fixed_chain(const ContentCatalog &catalog, int slot_count) {
    const int n = static_cast<int>(catalog.size());
    if (n <= slot_count)
        throw std::invalid_argument("build_fixed_chain: need more contents than slots");
    const SubsetSpace space(n, slot_count);
    const auto &p = catalog.popularity;
    const auto &lam = catalog.request_rate;

    RateMatrix m(space.size());
    std::vector<double> weight(slot_count);
    std::vector<int> dst(slot_count);
    for (int s = 0; s < space.size(); ++s) {
        const auto &a = space.states[s];
        double wsum = 0.0;
        for (int e = 0; e < slot_count; ++e) {
            double x = 1.0;
            for (int o = 0; o < slot_count; ++o)
                if (o != e)
                    x *= p[a[o]];
            weight[e] = x;
            wsum += x;
        }
        for (int e = 0; e < slot_count; ++e)
            weight[e] /= wsum;

        std::vector<char> in_a(n, 0);
        for (int v : a)
            in_a[v] = 1;
        for (int t = 0; t < n; ++t) {
            if (in_a[t])
                continue;
            for (int e = 0; e < slot_count; ++e) {
                dst.assign(a.begin(), a.end());
                dst[e] = t;
                std::sort(dst.begin(), dst.end());
                m.add(s, space.lookup(dst), lam[t] * weight[e]);
            }
        }
    }
    return m;
}

inline std::vector<double> fixed_availability(int n_contents, int slot_count,
                                              const std::vector<double> &pi) {
    const SubsetSpace space(n_contents, slot_count);
    if (static_cast<int>(pi.size()) != space.size())
        throw std::invalid_argument("fixed_availability: distribution size mismatch");
    std::vector<double> p_avail(n_contents, 0.0);
    for (int s = 0; s < space.size(); ++s)
        for (int v : space.states[s])
            p_avail[v] += pi[s];
    return p_avail;
}

// Per-content availability at each cache tier.
struct AvailabilityProfile {
    std::vector<double> p_loc;
    std::vector<double> p_sat;
    std::vector<double> p_bs;
};

struct CacheChainDiagnostics {
    int local_states = 0;
    int sat_states = 0;
    int bs_states = 0;
    double local_residual = 0.0;
    double sat_residual = 0.0;
    double bs_residual = 0.0;
};

inline AvailabilityProfile
solve_availability(const ContentCatalog &catalog, const SizeDistribution &dist,
                   double cache_dev_mbits, double ttl_rate, int sat_slots, int bs_slots,
                   double tolerance, CacheChainDiagnostics *diag = nullptr) {
    AvailabilityProfile prof;
    const int n = static_cast<int>(catalog.size());

    const RateMatrix local = build_local_chain(catalog, dist, cache_dev_mbits, ttl_rate);
    const auto pi_loc = solve_stationary(local, tolerance);
    prof.p_loc = local_availability(catalog, pi_loc.probabilities);

    const RateMatrix sat = build_fixed_chain(catalog, sat_slots);
    const auto pi_sat = solve_stationary(sat, tolerance);
    prof.p_sat = fixed_availability(n, sat_slots, pi_sat.probabilities);

    const RateMatrix bs = build_fixed_chain(catalog, bs_slots);
    const auto pi_bs = solve_stationary(bs, tolerance);
    prof.p_bs = fixed_availability(n, bs_slots, pi_bs.probabilities);

    if (diag) {
        diag->local_states = local.n_states;
        diag->sat_states = sat.n_states;
        diag->bs_states = bs.n_states;
        diag->local_residual = pi_loc.residual;
        diag->sat_residual = pi_sat.residual;
        diag->bs_residual = pi_bs.residual;
    }
    return prof;
}

} // namespace hetnet
