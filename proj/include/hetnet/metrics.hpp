#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "hetnet/params.hpp"
#include "hetnet/ra_ctmc.hpp"

namespace hetnet {

// Closed-form performance metrics evaluated from the stationary distribution
// and the per-state admitted-rate table. Rates are requests/sec, bit
// quantities bits/sec, powers watts, epb joules/bit.
struct MetricsReport {
    double lambda_eff_sat = 0.0;
    double lambda_eff_sat_u = 0.0;
    double lambda_eff_bs = 0.0;
    double lambda_eff_bs_u = 0.0;
    double lambda_eff_d2d = 0.0;

    double p_drop_bs = 0.0;
    double p_drop_d2d = 0.0;
    double p_local = 0.0;

    double th_sat_bps = 0.0;
    double th_sat_u_bps = 0.0;
    double th_bs_bps = 0.0;
    double th_bs_u_bps = 0.0;
    double th_d2d_bps = 0.0;
    double g_local_bps = 0.0;
    double g_hu_bps = 0.0;

    double p_bs_w = 0.0;
    double p_bs_u_w = 0.0;
    double p_d2d_w = 0.0;
    double p_local_w = 0.0;
    double p_overall_w = 0.0;
    double epb_j_per_bit = 0.0;

    // Zero-denominator metrics report 0 with the matching flag set so sweep
    // output stays NaN-free.
    bool flag_zero_bs_denominator = false;
    bool flag_zero_d2d_denominator = false;
    bool flag_zero_goodput = false;
};

// pi-weighted sums of the per-state admitted rates, order
// (sat, sat_u, bs, bs_u, d2d).
inline std::array<double, 5> effective_rates(const std::vector<double> &pi,
                                             const std::vector<GammaRow> &gamma) {
    if (pi.size() != gamma.size())
        throw std::invalid_argument("effective_rates: size mismatch");
    std::array<double, 5> out{};
    for (std::size_t x = 0; x < pi.size(); ++x) {
        out[0] += gamma[x].sat * pi[x];
        out[1] += gamma[x].sat_u * pi[x];
        out[2] += gamma[x].bs * pi[x];
        out[3] += gamma[x].bs_u * pi[x];
        out[4] += gamma[x].d2d * pi[x];
    }
    return out;
}

struct DropProbabilities {
    double bs = 0.0;
    double d2d = 0.0;
    bool flag_zero_bs = false;
    bool flag_zero_d2d = false;
};

// BS-mode drops: PU arrivals on the non-f1 pool while it has no idle
// frequency and at least one HU occupant. D2D drops: a PU arrival on f1
// terminates every active overlay operation at once.
inline DropProbabilities drop_probabilities(const std::vector<double> &pi,
                                            const std::vector<ChannelState> &states,
                                            const std::array<double, 5> &lambda_eff,
                                            const RaContext &c) {
    DropProbabilities out;
    double u = 0.0;
    double d2d_mass = 0.0;
    for (std::size_t x = 0; x < states.size(); ++x) {
        const ChannelState &s = states[x];
        if (idle_ter_nf1(s, c) == 0 && s.pu_ter_nf1 != c.n_f_ter - 1)
            u += pi[x];
        if (s.pu_ter_f1 == 0)
            d2d_mass += s.hu_d_f1 * pi[x];
    }
    const double bs_denom = lambda_eff[2] + lambda_eff[3];
    if (bs_denom > 0.0) {
        const double forced = c.lambda_pu * (c.n_f_ter - 1) / c.n_f_ter * u;
        out.bs = std::clamp(forced / bs_denom, 0.0, 1.0);
    } else {
        out.flag_zero_bs = true;
    }
    if (lambda_eff[4] > 0.0) {
        const double forced = c.lambda_pu / c.n_f_ter * d2d_mass;
        out.d2d = std::clamp(forced / lambda_eff[4], 0.0, 1.0);
    } else {
        out.flag_zero_d2d = true;
    }
    return out;
}

// Popularity-weighted local-cache hit probability.
inline double local_hit_probability(const ContentCatalog &catalog,
                                    const std::vector<double> &p_loc) {
    double v = 0.0;
    for (std::size_t i = 0; i < catalog.size(); ++i)
        v += catalog.popularity[i] * p_loc[i];
    return v;
}

// Per-mode throughput plus the local-cache share; dropped services carry no
// successfully delivered bits.
inline void goodput(MetricsReport &m, const SystemParams &params) {
    const double s_bits = params.size_dist().mean_bits();
    m.th_sat_bps = m.lambda_eff_sat * s_bits;
    m.th_sat_u_bps = m.lambda_eff_sat_u * s_bits;
    m.th_bs_bps = m.lambda_eff_bs * (1.0 - m.p_drop_bs) * s_bits;
    m.th_bs_u_bps = m.lambda_eff_bs_u * (1.0 - m.p_drop_bs) * s_bits;
    m.th_d2d_bps = m.lambda_eff_d2d * (1.0 - m.p_drop_d2d) * s_bits;
    m.g_local_bps = params.lambda_hu * m.p_local * s_bits;
    m.g_hu_bps = m.g_local_bps + m.th_sat_bps + m.th_sat_u_bps + m.th_bs_bps + m.th_bs_u_bps +
                 m.th_d2d_bps;
}

// Power decomposition and energy per bit. Completed services charge their
// full transmit duration, dropped ones half of it; the satellite is solar
// powered and contributes nothing.
inline void power_and_epb(MetricsReport &m, const SystemParams &params,
                          const ServiceRates &r) {
    const double s_bits = params.size_dist().mean_bits();
    const double p_bs_ch = params.p_bs_ch_w;
    const double p_dev = params.p_dev_tx_w;

    m.p_bs_w = m.lambda_eff_bs * (1.0 - m.p_drop_bs) * p_bs_ch / r.mu_hu_bs +
               m.lambda_eff_bs * m.p_drop_bs * p_bs_ch / (2.0 * r.mu_hu_bs);

    // Universal retrievals: the BS both receives the relay leg (at the
    // reduced reception power) and transmits the access leg. A dropped
    // service charges half the aggregate duration; the transmit share of
    // that half cannot go below zero when the relay leg dominates.
    const double recv_sec = s_bits / r.cap_bs_univ_bps;
    const double recv_energy = p_bs_ch / params.theta_bs * recv_sec;
    const double tx_sec_dropped = std::max(0.0, r.delta_bs_u_sec / 2.0 - recv_sec);
    m.p_bs_u_w =
        m.lambda_eff_bs_u * (1.0 - m.p_drop_bs) * (p_bs_ch / r.mu_hu_bs + recv_energy) +
        m.lambda_eff_bs_u * m.p_drop_bs * (p_bs_ch * tx_sec_dropped + recv_energy);

    m.p_d2d_w = m.lambda_eff_d2d * (1.0 - m.p_drop_d2d) * p_dev / r.mu_hu_d2d +
                m.lambda_eff_d2d * m.p_drop_d2d * p_dev / (2.0 * r.mu_hu_d2d);

    m.p_local_w = params.lambda_hu * m.p_local * (p_dev / params.theta_loc) / r.mu_hu_d2d;

    m.p_overall_w = m.p_bs_w + m.p_bs_u_w + m.p_d2d_w + m.p_local_w;
    if (m.g_hu_bps > 0.0) {
        m.epb_j_per_bit = m.p_overall_w / m.g_hu_bps;
    } else {
        m.flag_zero_goodput = true;
    }
}

// Full metrics block for one solved model.
inline MetricsReport evaluate_metrics(const SystemParams &params, const RaContext &c,
                                      const std::vector<ChannelState> &states,
                                      const std::vector<double> &pi,
                                      const std::vector<GammaRow> &gamma) {
    MetricsReport m;
    const auto eff = effective_rates(pi, gamma);
    m.lambda_eff_sat = eff[0];
    m.lambda_eff_sat_u = eff[1];
    m.lambda_eff_bs = eff[2];
    m.lambda_eff_bs_u = eff[3];
    m.lambda_eff_d2d = eff[4];

    const auto drops = drop_probabilities(pi, states, eff, c);
    m.p_drop_bs = drops.bs;
    m.p_drop_d2d = drops.d2d;
    m.flag_zero_bs_denominator = drops.flag_zero_bs;
    m.flag_zero_d2d_denominator = drops.flag_zero_d2d;

    m.p_local = local_hit_probability(c.catalog, c.availability.p_loc);
    goodput(m, params);
    power_and_epb(m, params, c.rates);
    return m;
}

} // namespace hetnet
