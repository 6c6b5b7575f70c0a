// Shared test oracles. Everything here is written independently of the
// library code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "hetnet/cache_chains.hpp"
#include "hetnet/content.hpp"
#include "hetnet/ctmc.hpp"
#include "hetnet/ra_ctmc.hpp"

namespace testutil {

inline double exp_draw(std::mt19937_64 &rng, double rate) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return -std::log1p(-u) / rate;
}

inline int draw_popularity(std::mt19937_64 &rng, const std::vector<double> &pop) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        u -= pop[i];
        if (u <= 0.0)
            return static_cast<int>(i);
    }
    return static_cast<int>(pop.size()) - 1;
}

// Random irreducible CTMC: a directed ring guarantees strong connectivity,
// extra random edges vary the structure.
inline hetnet::RateMatrix random_irreducible_chain(std::mt19937_64 &rng, int n_states,
                                                   int extra_edges) {
    hetnet::RateMatrix m(n_states);
    std::uniform_real_distribution<double> rate(0.05, 3.0);
    std::uniform_int_distribution<int> node(0, n_states - 1);
    for (int i = 0; i < n_states; ++i)
        m.add(i, (i + 1) % n_states, rate(rng));
    for (int e = 0; e < extra_edges; ++e) {
        int a = node(rng), b = node(rng);
        if (a != b)
            m.add(a, b, rate(rng));
    }
    return m;
}

// Event-driven single-cache replica of the device-cache chain semantics:
// network-rate request stream, fresh size draws per event, popularity-weighted
// eviction, exponential TTL. Returns per-content time-averaged availability.
struct LocalCacheSimResult {
    std::vector<double> availability;
    double sim_time = 0.0;
};

inline LocalCacheSimResult simulate_local_cache(const hetnet::ContentCatalog &catalog,
                                                double mean_size_mbits, double capacity_mbits,
                                                double ttl_mean_sec, long n_events,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(catalog.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double lambda_total = catalog.request_rate_total;

    std::vector<int> cache;           // cached content ids (size <= 2)
    std::vector<double> expiry;       // matching expiry times
    std::vector<double> occupied(n, 0.0);
    double now = 0.0;

    auto draw_size = [&] { return exp_draw(rng, 1.0 / mean_size_mbits); };
    auto accumulate = [&](double until) {
        for (std::size_t k = 0; k < cache.size(); ++k)
            occupied[cache[k]] += until - now;
        now = until;
    };
    auto erase_at = [&](std::size_t k) {
        cache.erase(cache.begin() + static_cast<long>(k));
        expiry.erase(expiry.begin() + static_cast<long>(k));
    };

    for (long ev = 0; ev < n_events; ++ev) {
        const double t_req = now + exp_draw(rng, lambda_total);
        // Flush expiries that precede the next request.
        while (true) {
            std::size_t soonest = 0;
            double t_exp = t_req;
            bool found = false;
            for (std::size_t k = 0; k < cache.size(); ++k) {
                if (expiry[k] < t_exp) {
                    t_exp = expiry[k];
                    soonest = k;
                    found = true;
                }
            }
            if (!found)
                break;
            accumulate(t_exp);
            erase_at(soonest);
        }
        accumulate(t_req);

        const int c = draw_popularity(rng, catalog.popularity);
        if (std::find(cache.begin(), cache.end(), c) != cache.end())
            continue; // re-request of a cached content changes nothing
        if (cache.empty()) {
            if (draw_size() <= capacity_mbits) {
                cache.push_back(c);
                expiry.push_back(now + exp_draw(rng, 1.0 / ttl_mean_sec));
            }
        } else if (cache.size() == 1) {
            if (draw_size() + draw_size() <= capacity_mbits) {
                cache.push_back(c);
                expiry.push_back(now + exp_draw(rng, 1.0 / ttl_mean_sec));
            }
        } else {
            const double pi = catalog.popularity[cache[0]];
            const double pj = catalog.popularity[cache[1]];
            // Evict the first resident with the weight of the second.
            const std::size_t victim = unif(rng) <= pj / (pi + pj) ? 0 : 1;
            if (draw_size() + draw_size() <= capacity_mbits) {
                erase_at(victim);
                cache.push_back(c);
                expiry.push_back(now + exp_draw(rng, 1.0 / ttl_mean_sec));
            }
        }
    }
    LocalCacheSimResult res;
    res.sim_time = now;
    res.availability.resize(n);
    for (int i = 0; i < n; ++i)
        res.availability[i] = occupied[i] / now;
    return res;
}

// Closed-form stationary distribution of the fixed-capacity cache chain via
// reversibility: pi(A) proportional to (sum_e prod_{o in A, o != e} p_o) *
// prod_{o in A} p_o. Used to cross-check the numerical solve.
inline std::vector<double> fixed_chain_closed_form(const hetnet::ContentCatalog &catalog,
                                                   int slots) {
    const hetnet::SubsetSpace space(static_cast<int>(catalog.size()), slots);
    std::vector<double> pi(space.size());
    double norm = 0.0;
    for (int s = 0; s < space.size(); ++s) {
        const auto &a = space.states[s];
        double prod = 1.0;
        for (int v : a)
            prod *= catalog.popularity[v];
        double z = 0.0;
        for (int e = 0; e < slots; ++e) {
            double x = 1.0;
            for (int o = 0; o < slots; ++o)
                if (o != e)
                    x *= catalog.popularity[a[o]];
            z += x;
        }
        pi[s] = z * prod;
        norm += pi[s];
    }
    for (double &v : pi)
        v /= norm;
    return pi;
}

// Brute-force resource-allocation generator assembled row by row from the
// published transition tables, written against the table text rather than the
// library's transition builder.
inline hetnet::RateMatrix brute_force_generator(const hetnet::RaContext &c,
                                                const std::vector<hetnet::ChannelState> &states) {
    using hetnet::ChannelState;
    const int nfs = c.n_f_sat, nft = c.n_f_ter, dmax = c.d_max;
    const double lpu = c.lambda_pu;
    std::map<std::array<int, 7>, int> index;
    auto as_array = [](const ChannelState &s) {
        return std::array<int, 7>{s.hu_sat, s.hu_sat_u, s.pu_ter_nf1, s.hu_bs,
                                  s.hu_bs_u, s.pu_ter_f1, s.hu_d_f1};
    };
    for (std::size_t i = 0; i < states.size(); ++i)
        index[as_array(states[i])] = static_cast<int>(i);

    hetnet::RateMatrix m(static_cast<int>(states.size()));
    auto add = [&](const ChannelState &from, std::array<int, 7> to, double rate) {
        if (rate <= 0.0)
            return;
        m.add(index.at(as_array(from)), index.at(to), rate);
    };

    for (const ChannelState &s : states) {
        auto arr = as_array(s);
        const int idle_sat = nfs - s.hu_sat - s.hu_sat_u;
        const int idle_ter = (nft - 1) - s.pu_ter_nf1 - s.hu_bs - s.hu_bs_u;

        // PU table, row by row
        {
            auto d = arr;
            d[2] += 1;
            if (idle_ter > 0)
                add(s, d, (nft - 1) * lpu / nft);
        }
        if (idle_ter == 0 && (nft - 1) - s.pu_ter_nf1 > 0) {
            auto d = arr;
            d[2] += 1;
            d[3] -= 1;
            add(s, d,
                (nft - 1) * lpu / nft * s.hu_bs / double((nft - 1) - s.pu_ter_nf1));
            auto d2 = arr;
            d2[2] += 1;
            d2[4] -= 1;
            add(s, d2,
                (nft - 1) * lpu / nft * s.hu_bs_u / double((nft - 1) - s.pu_ter_nf1));
        }
        if (s.pu_ter_f1 == 0 && s.hu_d_f1 == 0) {
            auto d = arr;
            d[5] = 1;
            add(s, d, lpu / nft);
        }
        if (s.hu_d_f1 > 0) {
            auto d = arr;
            d[5] = 1;
            d[6] = 0;
            add(s, d, lpu / nft);
        }
        if (s.pu_ter_nf1 > 0) {
            auto d = arr;
            d[2] -= 1;
            add(s, d, s.pu_ter_nf1 * c.rates.mu_pu_ter);
        }
        if (s.pu_ter_f1 == 1) {
            auto d = arr;
            d[5] = 0;
            add(s, d, 1.0 * c.rates.mu_pu_ter);
        }

        // HU departures
        if (s.hu_sat_u > 0) {
            auto d = arr;
            d[1] -= 1;
            add(s, d, s.hu_sat_u * c.rates.mu_hu_sat_u);
        }
        if (s.hu_bs_u > 0) {
            auto d = arr;
            d[4] -= 1;
            add(s, d, s.hu_bs_u * c.rates.mu_hu_bs_u);
        }
        if (s.hu_sat > 0) {
            auto d = arr;
            d[0] -= 1;
            add(s, d, s.hu_sat * c.rates.mu_hu_sat);
        }
        if (s.hu_bs > 0) {
            auto d = arr;
            d[3] -= 1;
            add(s, d, s.hu_bs * c.rates.mu_hu_bs);
        }
        if (s.hu_d_f1 > 0) {
            auto d = arr;
            d[6] -= 1;
            add(s, d, s.hu_d_f1 * c.rates.mu_hu_d2d);
        }

        // HU arrival rows, 20 cases
        const double rsat = c.weights.r_sat, rbs = c.weights.r_bs, rdev = c.weights.r_dev;
        const double RS = rsat * idle_sat;
        const double RB = rbs * idle_ter;
        const double RD =
            rdev * (((s.hu_d_f1 > 0 && s.hu_d_f1 < dmax) ||
                     (s.hu_d_f1 == 0 && s.pu_ter_f1 == 0))
                        ? 1.0
                        : 0.0);
        for (int i = 0; i < static_cast<int>(c.catalog.size()); ++i) {
            const double lam = c.catalog.request_rate[i];
            const double pl = c.availability.p_loc[i];
            const double ps = c.availability.p_sat[i];
            const double pb = c.availability.p_bs[i];
            double pd = 0.0;
            if (s.hu_d_f1 < dmax) {
                const double rint = c.geometry.interference_radius_m;
                const double rbsm = c.geometry.cell_radius_m;
                const double rec =
                    std::max(0.0, (M_PI * rbsm * rbsm - s.hu_d_f1 * M_PI * rint * rint)) /
                    (M_PI * rbsm * rbsm);
                const double tx = std::max(0.0, (M_PI * rbsm * rbsm -
                                                 s.hu_d_f1 * M_PI * 4.0 * rint * rint)) /
                                  (M_PI * rbsm * rbsm);
                const int nb = static_cast<int>(
                    std::floor(c.geometry.hu_density_per_m2 * M_PI * rint * rint));
                pd = rec * tx * (1.0 - std::pow(1.0 - pl, nb));
            }
            const double A = lam * (1.0 - pl);

            auto h1 = arr, h2 = arr, h3 = arr, h4 = arr, h5 = arr;
            h1[1] += 1;
            h2[4] += 1;
            h3[0] += 1;
            h4[3] += 1;
            h5[6] += 1;

            if (c.universal_source) {
                if (RS + RB > 0)
                    add(s, h1, A * (1 - ps) * (1 - pb) * (1 - pd) * RS / (RS + RB));
                if ((idle_ter == 0 || rbs == 0) && idle_sat > 0 && rsat > 0)
                    add(s, h1, A * (1 - ps) * pb * (1 - pd));
                if ((rdev == 0 || s.hu_d_f1 == dmax || s.pu_ter_f1 == 1) && RS + RB > 0)
                    add(s, h1, A * (1 - ps) * (1 - pb) * pd * RS / (RS + RB));
                if (RB + RD == 0 && idle_sat > 0 && rsat > 0)
                    add(s, h1, A * (1 - ps) * pb * pd);

                if (RS + RB > 0)
                    add(s, h2, A * (1 - ps) * (1 - pb) * (1 - pd) * RB / (RS + RB));
                if ((idle_sat == 0 || rsat == 0) && idle_ter > 0 && rbs > 0)
                    add(s, h2, A * ps * (1 - pb) * (1 - pd));
                if ((rdev == 0 || s.hu_d_f1 == dmax || s.pu_ter_f1 == 1) && RS + RB > 0)
                    add(s, h2, A * (1 - ps) * (1 - pb) * pd * RB / (RS + RB));
                if (RS + RD == 0 && idle_ter > 0 && rbs > 0)
                    add(s, h2, A * ps * (1 - pb) * pd);
            }

            if (idle_sat > 0 && rsat > 0)
                add(s, h3, A * ps * (1 - pb) * (1 - pd));
            if (RS + RB > 0)
                add(s, h3, A * ps * pb * (1 - pd) * RS / (RS + RB));
            if (RS + RD > 0)
                add(s, h3, A * ps * (1 - pb) * pd * RS / (RS + RD));
            if (RS + RB + RD > 0)
                add(s, h3, A * ps * pb * pd * RS / (RS + RB + RD));

            if (idle_ter > 0 && rbs > 0)
                add(s, h4, A * (1 - ps) * pb * (1 - pd));
            if (RS + RB > 0)
                add(s, h4, A * ps * pb * (1 - pd) * RB / (RS + RB));
            if (RB + RD > 0)
                add(s, h4, A * (1 - ps) * pb * pd * RB / (RB + RD));
            if (RS + RB + RD > 0)
                add(s, h4, A * ps * pb * pd * RB / (RS + RB + RD));

            if (rdev > 0 && ((s.hu_d_f1 > 0 && s.hu_d_f1 < dmax) ||
                             (s.hu_d_f1 == 0 && s.pu_ter_f1 == 0)))
                add(s, h5, A * (1 - ps) * (1 - pb) * pd);
            if (RS + RD > 0)
                add(s, h5, A * ps * (1 - pb) * pd * RD / (RS + RD));
            if (RB + RD > 0)
                add(s, h5, A * (1 - ps) * pb * pd * RD / (RB + RD));
            if (RS + RB + RD > 0)
                add(s, h5, A * ps * pb * pd * RD / (RS + RB + RD));
        }
    }
    return m;
}

// Dense matrix view of a rate matrix including the implied diagonal.
inline std::vector<std::vector<double>> dense_view(const hetnet::RateMatrix &m) {
    std::vector<std::vector<double>> q(m.n_states, std::vector<double>(m.n_states, 0.0));
    for (const auto &t : m.transitions) {
        q[t.src][t.dst] += t.rate;
        q[t.src][t.src] -= t.rate;
    }
    return q;
}

} // namespace testutil
