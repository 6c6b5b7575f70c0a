#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hetnet/cache_chains.hpp"
#include "hetnet/content.hpp"
#include "hetnet/ctmc.hpp"
#include "hetnet/link.hpp"
#include "hetnet/params.hpp"

namespace hetnet {

// Channel state: occupancy counts per frequency pool. f1 is the terrestrial
// frequency reserved for D2D; PUs never appear on the satellite link.
struct ChannelState {
    int hu_sat = 0;     // HUs served directly from the satellite cache
    int hu_sat_u = 0;   // HUs served from the universal source across the satellite
    int pu_ter_nf1 = 0; // PUs on terrestrial frequencies other than f1
    int hu_bs = 0;      // HUs served directly from the BS cache
    int hu_bs_u = 0;    // HUs served from the universal source across the BS
    int pu_ter_f1 = 0;  // PU indicator on f1
    int hu_d_f1 = 0;    // concurrent D2D operations on f1

    bool operator==(const ChannelState &) const = default;
};

// Everything the transition generator needs, resolved once.
struct RaContext {
    int n_f_sat = 0;
    int n_f_ter = 0;
    int d_max = 0;
    double lambda_pu = 0.0;
    ModeWeights weights;
    D2DGeometry geometry;
    ContentCatalog catalog;
    AvailabilityProfile availability;
    ServiceRates rates;
    bool universal_source = true;

    static RaContext from(const SystemParams &params, const ContentCatalog &catalog,
                          const AvailabilityProfile &availability, const ServiceRates &rates) {
        RaContext c;
        c.n_f_sat = params.n_f_sat;
        c.n_f_ter = params.n_f_ter;
        c.d_max = params.effective_d_max();
        c.lambda_pu = params.lambda_pu_ter;
        c.weights = params.weights;
        c.geometry = params.geometry();
        c.catalog = catalog;
        c.availability = availability;
        c.rates = rates;
        c.universal_source = params.universal_source;
        return c;
    }
};

inline int idle_sat(const ChannelState &s, const RaContext &c) {
    return c.n_f_sat - s.hu_sat - s.hu_sat_u;
}

inline int idle_ter_nf1(const ChannelState &s, const RaContext &c) {
    return (c.n_f_ter - 1) - s.pu_ter_nf1 - s.hu_bs - s.hu_bs_u;
}

inline bool valid_state(const ChannelState &s, const RaContext &c) {
    if (s.hu_sat < 0 || s.hu_sat_u < 0 || s.pu_ter_nf1 < 0 || s.hu_bs < 0 || s.hu_bs_u < 0 ||
        s.hu_d_f1 < 0)
        return false;
    if (s.hu_sat + s.hu_sat_u > c.n_f_sat)
        return false;
    if (s.pu_ter_nf1 + s.hu_bs + s.hu_bs_u > c.n_f_ter - 1)
        return false;
    if (s.pu_ter_f1 != 0 && s.pu_ter_f1 != 1)
        return false;
    if (s.hu_d_f1 > c.d_max)
        return false;
    if (s.pu_ter_f1 == 1 && s.hu_d_f1 != 0)
        return false;
    return true;
}

// All valid states in lexicographic field order; the generator, the solver and
// the metrics all share this ordering.
inline std::vector<ChannelState> enumerate_states(const RaContext &c) {
    std::vector<ChannelState> out;
    for (int sat = 0; sat <= c.n_f_sat; ++sat)
        for (int sat_u = 0; sat + sat_u <= c.n_f_sat; ++sat_u)
            for (int pu = 0; pu <= c.n_f_ter - 1; ++pu)
                for (int bs = 0; pu + bs <= c.n_f_ter - 1; ++bs)
                    for (int bs_u = 0; pu + bs + bs_u <= c.n_f_ter - 1; ++bs_u)
                        for (int pu_f1 = 0; pu_f1 <= 1; ++pu_f1)
                            for (int d = 0; d <= (pu_f1 ? 0 : c.d_max); ++d)
                                out.push_back({sat, sat_u, pu, bs, bs_u, pu_f1, d});
    return out;
}

// Geometric clearance factors for a new D2D pair given the number of already
// active D2D operations. Both are area ratios clipped at zero, so they are
// lower bounds on the true admission probability.
inline double d2d_receiver_clearance(int active_d2d, const D2DGeometry &g) {
    const double ratio = g.interference_radius_m / g.cell_radius_m;
    return std::max(0.0, 1.0 - active_d2d * ratio * ratio);
}

inline double d2d_transmitter_clearance(int active_d2d, const D2DGeometry &g) {
    const double ratio = 2.0 * g.interference_radius_m / g.cell_radius_m;
    return std::max(0.0, 1.0 - active_d2d * ratio * ratio);
}

// Probability that at least one in-range device holds the content.
inline double d2d_content_in_range(double p_loc_i, const D2DGeometry &g) {
    return 1.0 - std::pow(1.0 - p_loc_i, g.neighbors_in_range());
}

// Probability that content `i` is D2D-retrievable at state `s`: clearance for
// the receiver and the transmitter times in-range availability, zero once the
// overlay is saturated.
inline double p_d2d(int content, const ChannelState &s, const D2DGeometry &g,
                    const std::vector<double> &p_loc) {
    if (s.hu_d_f1 >= g.d_max)
        return 0.0;
    return d2d_receiver_clearance(s.hu_d_f1, g) * d2d_transmitter_clearance(s.hu_d_f1, g) *
           d2d_content_in_range(p_loc[content], g);
}

struct AggregateWeights {
    double sat = 0.0;
    double bs = 0.0;
    double d2d = 0.0;
};

// Mode weight per idle frequency; the D2D term is gated on f1 being usable
// for one more overlay operation.
inline AggregateWeights aggregate_weights(const ChannelState &s, const RaContext &c) {
    AggregateWeights w;
    w.sat = c.weights.r_sat * idle_sat(s, c);
    w.bs = c.weights.r_bs * idle_ter_nf1(s, c);
    const bool overlay_open = (s.hu_d_f1 > 0 && s.hu_d_f1 < c.d_max) ||
                              (s.hu_d_f1 == 0 && s.pu_ter_f1 == 0);
    w.d2d = c.weights.r_dev * (overlay_open ? 1.0 : 0.0);
    return w;
}

struct StateTransition {
    ChannelState dst;
    double rate = 0.0;
};

// PU arrivals and departures originated at `s`. Arrivals pick a frequency
// pool uniformly; an arrival finding its pool fully PU-occupied is blocked.
inline std::vector<StateTransition> pu_transitions(const ChannelState &s, const RaContext &c) {
    std::vector<StateTransition> out;
    const double per_pool = c.lambda_pu / c.n_f_ter;
    const double rate_nf1 = (c.n_f_ter - 1) * per_pool;
    const int non_pu = (c.n_f_ter - 1) - s.pu_ter_nf1;

    if (rate_nf1 > 0.0) {
        if (idle_ter_nf1(s, c) > 0) {
            ChannelState d = s;
            ++d.pu_ter_nf1;
            out.push_back({d, rate_nf1});
        } else if (non_pu > 0) {
            // No idle frequency: the PU lands on an HU service and drops it.
            if (s.hu_bs > 0) {
                ChannelState d = s;
                ++d.pu_ter_nf1;
                --d.hu_bs;
                out.push_back({d, rate_nf1 * s.hu_bs / non_pu});
            }
            if (s.hu_bs_u > 0) {
                ChannelState d = s;
                ++d.pu_ter_nf1;
                --d.hu_bs_u;
                out.push_back({d, rate_nf1 * s.hu_bs_u / non_pu});
            }
        }
    }
    if (per_pool > 0.0 && s.pu_ter_f1 == 0) {
        ChannelState d = s;
        d.pu_ter_f1 = 1;
        d.hu_d_f1 = 0; // every active overlay operation is dropped
        out.push_back({d, per_pool});
    }
    if (s.pu_ter_nf1 > 0) {
        ChannelState d = s;
        --d.pu_ter_nf1;
        out.push_back({d, s.pu_ter_nf1 * c.rates.mu_pu_ter});
    }
    if (s.pu_ter_f1 == 1) {
        ChannelState d = s;
        d.pu_ter_f1 = 0;
        out.push_back({d, c.rates.mu_pu_ter});
    }
    return out;
}

enum class HuFamily { Sat, SatU, Bs, BsU, D2d };

struct HuArrival {
    ChannelState dst;
    double rate = 0.0;
    HuFamily family = HuFamily::Sat;
    int content = 0;
};

namespace detail {
inline double frac(double num, double den) { return den > 0.0 ? num / den : 0.0; }
} // namespace detail

// HU request transitions originated at `s`: for every content, the request
// stream splits over the five serving families according to availability at
// each tier and the aggregate-weight mode selection.
inline std::vector<HuArrival> hu_arrival_transitions(const ChannelState &s, const RaContext &c) {
    using detail::frac;
    std::vector<HuArrival> out;
    const int n = static_cast<int>(c.catalog.size());
    const int idle_s = idle_sat(s, c);
    const int idle_b = idle_ter_nf1(s, c);
    const AggregateWeights w = aggregate_weights(s, c);
    const double r_sat = c.weights.r_sat, r_bs = c.weights.r_bs, r_dev = c.weights.r_dev;

    const bool sat_usable = idle_s > 0 && r_sat > 0.0;
    const bool bs_usable = idle_b > 0 && r_bs > 0.0;
    const bool d2d_unusable = r_dev == 0.0 || s.hu_d_f1 == c.d_max || s.pu_ter_f1 == 1;
    const bool d2d_gate = (s.hu_d_f1 > 0 && s.hu_d_f1 < c.d_max) ||
                          (s.hu_d_f1 == 0 && s.pu_ter_f1 == 0);

    ChannelState to_sat = s, to_sat_u = s, to_bs = s, to_bs_u = s, to_d2d = s;
    ++to_sat.hu_sat;
    ++to_sat_u.hu_sat_u;
    ++to_bs.hu_bs;
    ++to_bs_u.hu_bs_u;
    ++to_d2d.hu_d_f1;

    auto emit = [&out](const ChannelState &dst, double rate, HuFamily fam, int content) {
        if (rate > 0.0)
            out.push_back({dst, rate, fam, content});
    };

    for (int i = 0; i < n; ++i) {
        const double lam = c.catalog.request_rate[i];
        if (lam <= 0.0)
            continue;
        const double miss = 1.0 - c.availability.p_loc[i];
        const double ps = c.availability.p_sat[i];
        const double pb = c.availability.p_bs[i];
        const double pd = p_d2d(i, s, c.geometry, c.availability.p_loc);
        const double base = lam * miss;

        if (c.universal_source) {
            // Universal source across the satellite
            emit(to_sat_u,
                 base * (1 - ps) * (1 - pb) * (1 - pd) * frac(w.sat, w.sat + w.bs),
                 HuFamily::SatU, i);
            emit(to_sat_u,
                 base * (1 - ps) * pb * (1 - pd) *
                     ((!bs_usable && sat_usable) ? 1.0 : 0.0),
                 HuFamily::SatU, i);
            emit(to_sat_u,
                 base * (1 - ps) * (1 - pb) * pd * frac(w.sat, w.sat + w.bs) *
                     (d2d_unusable ? 1.0 : 0.0),
                 HuFamily::SatU, i);
            emit(to_sat_u,
                 base * (1 - ps) * pb * pd *
                     ((w.bs + w.d2d == 0.0 && sat_usable) ? 1.0 : 0.0),
                 HuFamily::SatU, i);

            // Universal source across the BS
            emit(to_bs_u, base * (1 - ps) * (1 - pb) * (1 - pd) * frac(w.bs, w.sat + w.bs),
                 HuFamily::BsU, i);
            emit(to_bs_u,
                 base * ps * (1 - pb) * (1 - pd) * ((!sat_usable && bs_usable) ? 1.0 : 0.0),
                 HuFamily::BsU, i);
            emit(to_bs_u,
                 base * (1 - ps) * (1 - pb) * pd * frac(w.bs, w.sat + w.bs) *
                     (d2d_unusable ? 1.0 : 0.0),
                 HuFamily::BsU, i);
            emit(to_bs_u,
                 base * ps * (1 - pb) * pd * ((w.sat + w.d2d == 0.0 && bs_usable) ? 1.0 : 0.0),
                 HuFamily::BsU, i);
        }

        // Directly from the satellite cache
        emit(to_sat, base * ps * (1 - pb) * (1 - pd) * (sat_usable ? 1.0 : 0.0), HuFamily::Sat,
             i);
        emit(to_sat, base * ps * pb * (1 - pd) * frac(w.sat, w.sat + w.bs), HuFamily::Sat, i);
        emit(to_sat, base * ps * (1 - pb) * pd * frac(w.sat, w.sat + w.d2d), HuFamily::Sat, i);
        emit(to_sat, base * ps * pb * pd * frac(w.sat, w.sat + w.bs + w.d2d), HuFamily::Sat, i);

        // Directly from the BS cache
        emit(to_bs, base * (1 - ps) * pb * (1 - pd) * (bs_usable ? 1.0 : 0.0), HuFamily::Bs, i);
        emit(to_bs, base * ps * pb * (1 - pd) * frac(w.bs, w.sat + w.bs), HuFamily::Bs, i);
        emit(to_bs, base * (1 - ps) * pb * pd * frac(w.bs, w.bs + w.d2d), HuFamily::Bs, i);
        emit(to_bs, base * ps * pb * pd * frac(w.bs, w.sat + w.bs + w.d2d), HuFamily::Bs, i);

        // D2D on f1
        emit(to_d2d,
             base * (1 - ps) * (1 - pb) * pd * (r_dev > 0.0 && d2d_gate ? 1.0 : 0.0),
             HuFamily::D2d, i);
        emit(to_d2d, base * ps * (1 - pb) * pd * frac(w.d2d, w.sat + w.d2d), HuFamily::D2d, i);
        emit(to_d2d, base * (1 - ps) * pb * pd * frac(w.d2d, w.bs + w.d2d), HuFamily::D2d, i);
        emit(to_d2d, base * ps * pb * pd * frac(w.d2d, w.sat + w.bs + w.d2d), HuFamily::D2d, i);
    }
    return out;
}

inline std::vector<StateTransition> hu_departure_transitions(const ChannelState &s,
                                                             const RaContext &c) {
    std::vector<StateTransition> out;
    auto emit = [&out](ChannelState d, double rate) {
        if (rate > 0.0)
            out.push_back({d, rate});
    };
    if (s.hu_sat_u > 0) {
        ChannelState d = s;
        --d.hu_sat_u;
        emit(d, s.hu_sat_u * c.rates.mu_hu_sat_u);
    }
    if (s.hu_bs_u > 0) {
        ChannelState d = s;
        --d.hu_bs_u;
        emit(d, s.hu_bs_u * c.rates.mu_hu_bs_u);
    }
    if (s.hu_sat > 0) {
        ChannelState d = s;
        --d.hu_sat;
        emit(d, s.hu_sat * c.rates.mu_hu_sat);
    }
    if (s.hu_bs > 0) {
        ChannelState d = s;
        --d.hu_bs;
        emit(d, s.hu_bs * c.rates.mu_hu_bs);
    }
    if (s.hu_d_f1 > 0) {
        ChannelState d = s;
        --d.hu_d_f1;
        emit(d, s.hu_d_f1 * c.rates.mu_hu_d2d);
    }
    return out;
}

// Per-state admitted arrival rates, one per serving family; the pi-weighted
// sums of these are the effective arrival rates.
struct GammaRow {
    double sat = 0.0;
    double sat_u = 0.0;
    double bs = 0.0;
    double bs_u = 0.0;
    double d2d = 0.0;
};

struct GeneratorResult {
    std::vector<ChannelState> states;
    RateMatrix matrix;
    std::vector<GammaRow> gamma;
};

inline std::uint64_t state_key(const ChannelState &s) {
    std::uint64_t k = 0;
    for (int v : {s.hu_sat, s.hu_sat_u, s.pu_ter_nf1, s.hu_bs, s.hu_bs_u, s.pu_ter_f1, s.hu_d_f1})
        k = (k << 8) | static_cast<std::uint64_t>(v);
    return k;
}

// Zero mode weights (or zero PU traffic) make parts of the enumerated space
// unreachable; the stationary mass lives on the class reachable from the
// all-idle state, which every state can re-enter through departures. The
// solve is restricted to that class and unreachable states get exact zeros.
struct SolvedGenerator {
    std::vector<double> pi;
    double residual = 0.0;
    long iterations = 0;
    int solved_states = 0;
};

inline SolvedGenerator solve_generator(const GeneratorResult &gen, double tolerance) {
    const int n = gen.matrix.n_states;
    std::vector<std::vector<int>> adj(n);
    for (const auto &t : gen.matrix.transitions)
        adj[t.src].push_back(t.dst);
    std::vector<int> order;
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        order.push_back(u);
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
    }
    std::sort(order.begin(), order.end());
    std::vector<int> remap(n, -1);
    for (std::size_t k = 0; k < order.size(); ++k)
        remap[order[k]] = static_cast<int>(k);

    RateMatrix restricted(static_cast<int>(order.size()));
    for (const auto &t : gen.matrix.transitions)
        if (remap[t.src] >= 0 && remap[t.dst] >= 0)
            restricted.add(remap[t.src], remap[t.dst], t.rate);

    const auto solved = solve_stationary(restricted, tolerance);
    SolvedGenerator out;
    out.pi.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (remap[i] >= 0)
            out.pi[i] = solved.probabilities[remap[i]];
    out.residual = solved.residual;
    out.iterations = solved.iterations;
    out.solved_states = restricted.n_states;
    return out;
}

inline GeneratorResult build_generator(const RaContext &c) {
    GeneratorResult res;
    res.states = enumerate_states(c);
    const int n = static_cast<int>(res.states.size());
    std::unordered_map<std::uint64_t, int> index;
    index.reserve(res.states.size() * 2);
    for (int i = 0; i < n; ++i)
        index.emplace(state_key(res.states[i]), i);

    res.matrix = RateMatrix(n);
    res.gamma.resize(n);
    for (int i = 0; i < n; ++i) {
        const ChannelState &s = res.states[i];
        for (const auto &t : pu_transitions(s, c))
            res.matrix.add(i, index.at(state_key(t.dst)), t.rate);
        for (const auto &t : hu_departure_transitions(s, c))
            res.matrix.add(i, index.at(state_key(t.dst)), t.rate);
        GammaRow &g = res.gamma[i];
        for (const auto &a : hu_arrival_transitions(s, c)) {
            res.matrix.add(i, index.at(state_key(a.dst)), a.rate);
            switch (a.family) {
            case HuFamily::Sat: g.sat += a.rate; break;
            case HuFamily::SatU: g.sat_u += a.rate; break;
            case HuFamily::Bs: g.bs += a.rate; break;
            case HuFamily::BsU: g.bs_u += a.rate; break;
            case HuFamily::D2d: g.d2d += a.rate; break;
            }
        }
    }
    return res;
}

} // namespace hetnet
