#pragma once

#include <cstring>
#include <map>
#include <tuple>
#include <vector>

#include "hetnet/cache_chains.hpp"
#include "hetnet/metrics.hpp"
#include "hetnet/params.hpp"
#include "hetnet/ra_ctmc.hpp"

namespace hetnet {

// The fixed-capacity cache chains are invariant under uniform scaling of the
// request rates, so their availability depends only on (N, zipf s, slots).
// Sweeps over traffic parameters reuse the solved vectors through this memo.
class FixedAvailabilityMemo {
public:
    std::vector<double> get(const ContentCatalog &catalog, int slots, double tolerance,
                            double *residual = nullptr, int *states = nullptr) {
        const Key key{static_cast<int>(catalog.size()), bits(catalog.zipf_s), slots,
                      bits(tolerance)};
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            Entry e;
            const RateMatrix m = build_fixed_chain(catalog, slots);
            const auto pi = solve_stationary(m, tolerance);
            e.availability = fixed_availability(static_cast<int>(catalog.size()), slots,
                                                pi.probabilities);
            e.residual = pi.residual;
            e.states = m.n_states;
            it = cache_.emplace(key, std::move(e)).first;
        }
        if (residual)
            *residual = it->second.residual;
        if (states)
            *states = it->second.states;
        return it->second.availability;
    }

private:
    using Key = std::tuple<int, std::uint64_t, int, std::uint64_t>;
    struct Entry {
        std::vector<double> availability;
        double residual = 0.0;
        int states = 0;
    };
    static std::uint64_t bits(double v) {
        std::uint64_t b;
        std::memcpy(&b, &v, sizeof(b));
        return b;
    }
    std::map<Key, Entry> cache_;
};

struct AnalysisResult {
    MetricsReport report;
    AvailabilityProfile availability;
    CacheChainDiagnostics cache_diag;
    int ra_states = 0;
    double ra_residual = 0.0;
    long ra_iterations = 0;

    // Retained for downstream consumers (tests, simulator cross-checks).
    std::vector<ChannelState> states;
    std::vector<double> pi;
    std::vector<GammaRow> gamma;
};

// Full analytic pipeline: catalog -> cache chains -> availability ->
// resource-allocation generator -> stationary solve -> metrics.
inline AnalysisResult analyze(const SystemParams &params,
                              FixedAvailabilityMemo *memo = nullptr) {
    params.validate();
    AnalysisResult res;
    if (params.lambda_hu == 0.0) {
        // Degenerate load: nothing circulates, every metric is zero.
        const std::size_t n = static_cast<std::size_t>(params.n_contents);
        res.availability.p_loc.assign(n, 0.0);
        res.availability.p_sat.assign(n, 0.0);
        res.availability.p_bs.assign(n, 0.0);
        res.report.flag_zero_goodput = true;
        res.report.flag_zero_bs_denominator = true;
        res.report.flag_zero_d2d_denominator = true;
        return res;
    }
    const int sat_slots = params.sat_slots();
    const int bs_slots = params.bs_slots();
    if (params.n_contents <= sat_slots || params.n_contents <= bs_slots)
        throw ValidationError("n_contents must exceed the satellite and BS slot counts");

    const ContentCatalog catalog = params.catalog();
    const SizeDistribution dist = params.size_dist();
    const double ttl_rate = 1.0 / params.ttl_mean_sec;
    const double tol = params.solver_tolerance;

    AvailabilityProfile avail;
    {
        const RateMatrix local = build_local_chain(catalog, dist, params.cache_dev_mbits,
                                                   ttl_rate);
        const auto pi_loc = solve_stationary(local, tol);
        avail.p_loc = local_availability(catalog, pi_loc.probabilities);
        res.cache_diag.local_states = local.n_states;
        res.cache_diag.local_residual = pi_loc.residual;
    }
    if (memo) {
        avail.p_sat = memo->get(catalog, sat_slots, tol, &res.cache_diag.sat_residual,
                                &res.cache_diag.sat_states);
        avail.p_bs = memo->get(catalog, bs_slots, tol, &res.cache_diag.bs_residual,
                               &res.cache_diag.bs_states);
    } else {
        FixedAvailabilityMemo local_memo;
        avail.p_sat = local_memo.get(catalog, sat_slots, tol, &res.cache_diag.sat_residual,
                                     &res.cache_diag.sat_states);
        avail.p_bs = local_memo.get(catalog, bs_slots, tol, &res.cache_diag.bs_residual,
                                    &res.cache_diag.bs_states);
    }
    res.availability = avail;

    const RaContext ctx = RaContext::from(params, catalog, avail, params.rates());
    GeneratorResult gen = build_generator(ctx);
    const auto solved = solve_generator(gen, tol);
    res.ra_states = gen.matrix.n_states;
    res.ra_residual = solved.residual;
    res.ra_iterations = solved.iterations;

    res.report = evaluate_metrics(params, ctx, gen.states, solved.pi, gen.gamma);
    res.states = std::move(gen.states);
    res.pi = solved.pi;
    res.gamma = std::move(gen.gamma);
    return res;
}

} // namespace hetnet
