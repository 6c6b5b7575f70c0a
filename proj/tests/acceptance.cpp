// Acceptance suite: one criterion per function, one pass/fail line each.
// Run with a criterion number (1..10) or no argument for the full set.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hetnet/analysis.hpp"
#include "hetnet/cli.hpp"
#include "hetnet/sim.hpp"
#include "helpers.hpp"

using namespace hetnet;

namespace {

// Capacity overrides calibrated once against the (0.25, 0.75, 0) operating
// point; all quantitative anchors below share this single calibration.
SystemParams calibrated_params() {
    SystemParams p;
    p.cap_sat_bps = 1e6;
    p.cap_bs_bps = 2.5e6;
    p.cap_d2d_bps = 20e6;
    p.cap_pu_ter_bps = 2.5e6;
    return p;
}

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string &msg) {
        if (!cond) {
            ok = false;
            if (!detail.empty())
                detail += "; ";
            detail += msg;
        }
    }
    void note(const std::string &msg) {
        if (!detail.empty())
            detail += "; ";
        detail += msg;
    }
};

std::string fmt(double v) { return format_g9(v); }

// --- 1: solver correctness on random chains ------------------------------

Check criterion_solver() {
    Check c;
    std::mt19937_64 rng(20240811);
    double worst_residual = 0.0, worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 5 + static_cast<int>(rng() % 196);
        auto m = testutil::random_irreducible_chain(rng, n, 3 * n);
        auto dense = solve_stationary(m, 1e-10, SolveMethod::Dense);
        auto iter = solve_stationary(m, 1e-10, SolveMethod::Uniformization);
        worst_residual = std::max({worst_residual, dense.residual, iter.residual});
        for (int i = 0; i < n; ++i)
            worst_gap = std::max(worst_gap,
                                 std::fabs(dense.probabilities[i] - iter.probabilities[i]));
    }
    c.require(worst_residual <= 1e-10, "residual above 1e-10");
    c.require(worst_gap <= 1e-8, "dense/iterative disagreement above 1e-8");
    c.note("50 chains, worst residual " + fmt(worst_residual) + ", worst entry gap " +
           fmt(worst_gap));
    return c;
}

// --- 2: generator equals the brute-force table transcription -------------

Check criterion_generator_oracle() {
    Check c;
    for (bool universal : {true, false}) {
        RaContext ctx;
        ctx.n_f_sat = 1;
        ctx.n_f_ter = 2;
        ctx.d_max = 1;
        ctx.lambda_pu = 0.03;
        ctx.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        ctx.geometry = D2DGeometry{0.0018, 300.0, 60.0, 1};
        ctx.catalog = ContentCatalog::make(3, 1.2, 2.4);
        ctx.availability.p_loc = {0.35, 0.2, 0.1};
        ctx.availability.p_sat = {0.9, 0.6, 0.3};
        ctx.availability.p_bs = {0.8, 0.5, 0.2};
        ctx.universal_source = universal;
        SystemParams p = calibrated_params();
        ctx.rates = p.rates();

        auto gen = build_generator(ctx);
        auto oracle = testutil::brute_force_generator(ctx, gen.states);
        auto a = testutil::dense_view(gen.matrix);
        auto b = testutil::dense_view(oracle);
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a.size(); ++j)
                worst = std::max(worst, std::fabs(a[i][j] - b[i][j]));
        c.require(worst <= 1e-12, std::string("entrywise gap above 1e-12 (universal ") +
                                      (universal ? "on)" : "off)"));
        c.note(std::string("universal ") + (universal ? "on" : "off") + ": " +
               std::to_string(gen.states.size()) + " states, max |gap| " + fmt(worst));
    }
    return c;
}

// --- 3: local cache chain vs event-driven replica -------------------------

Check criterion_cache_oracle() {
    Check c;
    auto catalog = ContentCatalog::make(5, 1.2, 2.4);
    SizeDistribution dist{25.0};
    const double ttl = 600.0;
    auto chain = build_local_chain(catalog, dist, 50.0, 1.0 / ttl);
    auto pi = solve_stationary(chain, 1e-10);
    auto p_loc = local_availability(catalog, pi.probabilities);

    const int reps = 20;
    const long events = 50000; // 20 x 50k = 1e6 events
    std::vector<std::vector<double>> samples(5);
    for (int r = 0; r < reps; ++r) {
        auto sim = testutil::simulate_local_cache(catalog, 25.0, 50.0, ttl, events, 7000 + r);
        for (int i = 0; i < 5; ++i)
            samples[i].push_back(sim.availability[i]);
    }
    for (int i = 0; i < 5; ++i) {
        double mean = 0.0;
        for (double v : samples[i])
            mean += v;
        mean /= reps;
        double var = 0.0;
        for (double v : samples[i])
            var += (v - mean) * (v - mean);
        var /= (reps - 1);
        const double se = std::sqrt(var / reps);
        const double gap = std::fabs(mean - p_loc[i]);
        c.require(gap <= 3.0 * se,
                  "content " + std::to_string(i + 1) + " off by " + fmt(gap) + " (3se " +
                      fmt(3.0 * se) + ")");
        if (i == 0)
            c.note("content 1: chain " + fmt(p_loc[0]) + ", sim " + fmt(mean) + " +- " +
                   fmt(se));
    }
    return c;
}

// --- 4: caching policy ordering under load --------------------------------

Check criterion_policy_ordering() {
    Check c;
    SystemParams p = calibrated_params();
    p.lambda_hu = 12.0;
    const double paper_mbps[3] = {170.2, 165.5, 163.5}; // pac, lru, fifo
    double g[4];
    const CachePolicyKind order[4] = {CachePolicyKind::Pac, CachePolicyKind::Lru,
                                      CachePolicyKind::Fifo, CachePolicyKind::Random};
    for (int k = 0; k < 4; ++k) {
        std::vector<MetricsReport> reps;
        for (int r = 0; r < 10; ++r) {
            SimOptions o;
            o.policy = order[k];
            o.seed = 5000 + r;
            o.horizon_sec = 1200.0;
            reps.push_back(run_replication(p, o).report);
        }
        g[k] = aggregate_reports(reps).mean.g_hu_bps / 1e6;
    }
    c.note("g_hu Mbps: pac " + fmt(g[0]) + ", lru " + fmt(g[1]) + ", fifo " + fmt(g[2]) +
           ", random " + fmt(g[3]));
    c.require(g[0] > g[1], "pac <= lru");
    c.require(g[1] > g[2], "lru <= fifo");
    c.require(g[2] > g[3], "fifo <= random");
    for (int k = 0; k < 3; ++k)
        c.require(std::fabs(g[k] - paper_mbps[k]) <= 0.15 * paper_mbps[k],
                  std::string(to_string(order[k])) + " outside 15% of " +
                      fmt(paper_mbps[k]) + " Mbps");
    return c;
}

const std::vector<double> kLambdaHuGrid = {1.6, 2.4, 3.2, 4.8, 6.4, 9.6, 12.0};

// --- 5: overlay benefit ----------------------------------------------------

Check criterion_overlay_benefit() {
    Check c;
    FixedAvailabilityMemo memo;
    for (double lh : kLambdaHuGrid) {
        SystemParams p = calibrated_params();
        p.lambda_hu = lh;
        auto with = analyze(p, &memo).report;
        p.overlay = false;
        auto without = analyze(p, &memo).report;
        c.require(with.epb_j_per_bit < without.epb_j_per_bit,
                  "epb(D5) >= epb(D1) at lambda_hu = " + fmt(lh));
        if (lh == 2.4)
            c.note("lambda_hu 2.4: epb " + fmt(with.epb_j_per_bit * 1e6) + " vs " +
                   fmt(without.epb_j_per_bit * 1e6) + " uJ/bit");
    }
    return c;
}

// --- 6: universal source barely moves goodput ------------------------------

Check criterion_universal_neutrality() {
    Check c;
    FixedAvailabilityMemo memo;
    double worst = 0.0;
    for (double lh : kLambdaHuGrid) {
        SystemParams p = calibrated_params();
        p.lambda_hu = lh;
        auto on = analyze(p, &memo).report;
        p.universal_source = false;
        auto off = analyze(p, &memo).report;
        const double rel = std::fabs(on.g_hu_bps - off.g_hu_bps) / on.g_hu_bps;
        worst = std::max(worst, rel);
        c.require(rel <= 0.05, "goodput moved " + fmt(rel * 100) + "% at lambda_hu = " +
                                   fmt(lh));
    }
    c.note("worst relative goodput change " + fmt(worst * 100) + "%");
    return c;
}

// --- 7: PU pressure --------------------------------------------------------

Check criterion_pu_sweep() {
    Check c;
    FixedAvailabilityMemo memo;
    const double grid[] = {0.015, 0.03, 0.06, 0.09, 0.12, 0.15, 0.18};
    const ModeWeights cons[] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.0, 0.0, 1.0}, {0.0, 0.5, 0.5}};
    const char *names[] = {"(1/3,1/3,1/3)", "(0,0,1)", "(0,1/2,1/2)"};
    for (int k = 0; k < 3; ++k) {
        double prev = 1e300, epb_min = 1e300, epb_max = 0.0, epb_mean = 0.0;
        bool monotone = true;
        for (double lp : grid) {
            SystemParams p = calibrated_params();
            p.lambda_pu_ter = lp;
            p.weights = cons[k];
            auto r = analyze(p, &memo).report;
            if (r.g_hu_bps >= prev)
                monotone = false;
            prev = r.g_hu_bps;
            epb_min = std::min(epb_min, r.epb_j_per_bit);
            epb_max = std::max(epb_max, r.epb_j_per_bit);
            epb_mean += r.epb_j_per_bit / 7.0;
        }
        const double spread = (epb_max - epb_min) / epb_mean;
        c.require(monotone, std::string("goodput not strictly decreasing for ") + names[k]);
        c.require(spread <= 0.10,
                  std::string("epb spread ") + fmt(spread * 100) + "% for " + names[k]);
        c.note(std::string(names[k]) + " epb spread " + fmt(spread * 100) + "%");
    }
    return c;
}

// --- 8: mode-weight anchors under the fixed calibration --------------------

Check criterion_mode_weight_anchors() {
    Check c;
    FixedAvailabilityMemo memo;
    auto at = [&](double rs, double rb, double rd) {
        SystemParams p = calibrated_params();
        p.weights = {rs, rb, rd};
        return analyze(p, &memo).report;
    };
    auto within = [&](double value, double target, const std::string &what) {
        c.require(std::fabs(value - target) <= 0.20 * target,
                  what + " = " + fmt(value) + " outside 20% of " + fmt(target));
    };

    const auto a = at(0.25, 0.75, 0.0);
    within(a.epb_j_per_bit * 1e6, 0.35, "epb(0.25,0.75,0) uJ/bit");
    within(a.g_hu_bps / 1e6, 26.7, "g_hu(0.25,0.75,0) Mbps");
    const auto b = at(0.25, 0.0, 0.75);
    within(b.epb_j_per_bit * 1e6, 0.003, "epb(0.25,0,0.75) uJ/bit");
    within(b.g_hu_bps / 1e6, 44.2, "g_hu(0.25,0,0.75) Mbps");
    c.note("anchor A epb " + fmt(a.epb_j_per_bit * 1e6) + " uJ/bit, g " +
           fmt(a.g_hu_bps / 1e6) + " Mbps; anchor B epb " + fmt(b.epb_j_per_bit * 1e6) +
           " uJ/bit, g " + fmt(b.g_hu_bps / 1e6) + " Mbps");

    // r_sat falling 0.75 -> 0 at r_dev = 0.2: epb rises, goodput falls,
    // strictly at every step.
    const double rsat_grid[] = {0.75, 0.5, 0.25, 0.0};
    std::vector<MetricsReport> line;
    for (double rs : rsat_grid)
        line.push_back(at(rs, 0.8 - rs, 0.2));
    for (std::size_t i = 1; i < line.size(); ++i) {
        c.require(line[i].epb_j_per_bit > line[i - 1].epb_j_per_bit,
                  "epb not increasing as r_sat falls (step " + std::to_string(i) + ")");
        c.require(line[i].g_hu_bps < line[i - 1].g_hu_bps,
                  "g_hu not decreasing as r_sat falls (step " + std::to_string(i) + ")");
    }
    within(line.front().epb_j_per_bit * 1e6, 0.177, "epb(0.75,0.05,0.2) uJ/bit");
    within(line.back().epb_j_per_bit * 1e6, 0.204, "epb(0,0.8,0.2) uJ/bit");
    within(line.front().g_hu_bps / 1e6, 47.9, "g_hu(0.75,0.05,0.2) Mbps");
    within(line.back().g_hu_bps / 1e6, 46.04, "g_hu(0,0.8,0.2) Mbps");
    c.note("r_dev=0.2 line: epb " + fmt(line.front().epb_j_per_bit * 1e6) + " -> " +
           fmt(line.back().epb_j_per_bit * 1e6) + " uJ/bit, g " +
           fmt(line.front().g_hu_bps / 1e6) + " -> " + fmt(line.back().g_hu_bps / 1e6));

    // At fixed r_sat, shifting weight from the BS to D2D never hurts epb.
    for (double rs : rsat_grid) {
        double prev = 1e300;
        for (double frac : {0.0, 0.25, 0.5, 0.75}) {
            const double rd = frac * (1.0 - rs);
            const auto r = at(rs, 1.0 - rs - rd, rd);
            c.require(r.epb_j_per_bit <= prev + 1e-15,
                      "epb increased with r_dev at r_sat = " + fmt(rs));
            prev = r.epb_j_per_bit;
        }
    }
    return c;
}

// --- 9: analytics vs simulation --------------------------------------------

Check criterion_cross_validation() {
    Check c;
    SystemParams p = calibrated_params();
    FixedAvailabilityMemo memo;
    auto analytic = analyze(p, &memo).report;
    std::vector<MetricsReport> reps;
    for (int r = 0; r < 10; ++r) {
        SimOptions o;
        o.seed = 1000 + r;
        o.horizon_sec = 1200.0;
        reps.push_back(run_replication(p, o).report);
    }
    auto agg = aggregate_reports(reps);
    const double g_gap = std::fabs(agg.mean.g_hu_bps - analytic.g_hu_bps) / analytic.g_hu_bps;
    const double e_gap =
        std::fabs(agg.mean.epb_j_per_bit - analytic.epb_j_per_bit) / analytic.epb_j_per_bit;
    // Replications must be mutually consistent: every replication inside the
    // single-observation band implied by the aggregate CI.
    const double g_sd = agg.ci95.g_hu_bps / 2.262 * std::sqrt(10.0);
    int outliers = 0;
    for (const auto &r : reps)
        if (std::fabs(r.g_hu_bps - agg.mean.g_hu_bps) > 3.5 * g_sd)
            ++outliers;
    c.require(outliers == 0, "replication goodput outliers present");
    c.require(g_gap <= 0.15, "goodput gap " + fmt(g_gap * 100) + "% above 15%");
    c.require(e_gap <= 0.15, "epb gap " + fmt(e_gap * 100) + "% above 15%");
    c.note("g " + fmt(analytic.g_hu_bps / 1e6) + " vs " + fmt(agg.mean.g_hu_bps / 1e6) +
           " Mbps (" + fmt(g_gap * 100) + "%), epb " + fmt(analytic.epb_j_per_bit * 1e6) +
           " vs " + fmt(agg.mean.epb_j_per_bit * 1e6) + " uJ/bit (" + fmt(e_gap * 100) +
           "%)");
    return c;
}

// --- 10: structural invariants ---------------------------------------------

Check criterion_structural() {
    Check c;
    // Generator row sums vanish and every destination is a valid state.
    RaContext ctx;
    ctx.n_f_sat = 2;
    ctx.n_f_ter = 3;
    ctx.d_max = 5;
    ctx.lambda_pu = 0.03;
    ctx.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    ctx.geometry = D2DGeometry{0.0018, 300.0, 60.0, 5};
    ctx.catalog = ContentCatalog::make(6, 1.2, 2.4);
    ctx.availability.p_loc.assign(6, 0.2);
    ctx.availability.p_sat.assign(6, 0.5);
    ctx.availability.p_bs.assign(6, 0.4);
    ctx.universal_source = true;
    ctx.rates = calibrated_params().rates();

    auto gen = build_generator(ctx);
    auto dense = testutil::dense_view(gen.matrix);
    double worst_row = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        double row = 0.0;
        for (double v : dense[i])
            row += v;
        worst_row = std::max(worst_row, std::fabs(row));
    }
    c.require(worst_row <= 1e-12, "generator row sums above 1e-12");

    for (const auto &s : gen.states) {
        for (const auto &t : pu_transitions(s, ctx))
            c.require(valid_state(t.dst, ctx), "PU transition leaves the state space");
        for (const auto &t : hu_departure_transitions(s, ctx))
            c.require(valid_state(t.dst, ctx), "departure leaves the state space");
        for (const auto &a : hu_arrival_transitions(s, ctx))
            c.require(valid_state(a.dst, ctx), "arrival leaves the state space");
    }

    auto solved = solve_generator(gen, 1e-10);
    double mass = 0.0;
    for (double v : solved.pi)
        mass += v;
    c.require(std::fabs(mass - 1.0) <= 1e-10, "stationary mass not normalized");
    c.require(solved.residual <= 1e-10, "stationary residual above tolerance");

    // D2D clearance probabilities within [0,1], nonincreasing in the
    // concurrent count.
    const D2DGeometry g{0.0018, 300.0, 60.0, 5};
    double prev = 2.0;
    for (int d = 0; d <= 5; ++d) {
        ChannelState s{0, 0, 0, 0, 0, 0, d};
        const double v = p_d2d(0, s, g, std::vector<double>{0.3});
        c.require(v >= 0.0 && v <= 1.0, "p_d2d outside [0,1]");
        c.require(v <= prev + 1e-15, "p_d2d increased with concurrent D2D count");
        prev = v;
    }

    // Deterministic replay with runtime occupancy and geometry checks armed.
    SystemParams p = calibrated_params();
    SimOptions o;
    o.seed = 4242;
    o.horizon_sec = 300.0;
    o.check_invariants = true;
    auto r1 = run_replication(p, o);
    auto r2 = run_replication(p, o);
    c.require(r1.counters.total_requests == r2.counters.total_requests &&
                  r1.report.g_hu_bps == r2.report.g_hu_bps &&
                  r1.report.epb_j_per_bit == r2.report.epb_j_per_bit,
              "replication replay diverged");
    c.note("generator " + std::to_string(gen.states.size()) + " states, worst row sum " +
           fmt(worst_row) + ", replay ok");
    return c;
}

struct Criterion {
    int id;
    const char *title;
    std::function<Check()> run;
};

} // namespace

int main(int argc, char **argv) {
    const std::vector<Criterion> criteria = {
        {1, "stationary solver matches dense direct solve on random chains",
         criterion_solver},
        {2, "resource-allocation generator equals brute-force table transcription",
         criterion_generator_oracle},
        {3, "device-cache chain availability matches event-driven replica",
         criterion_cache_oracle},
        {4, "simulated goodput orders caching policies pac > lru > fifo > random",
         criterion_policy_ordering},
        {5, "overlay (d_max 5) beats no overlay (d_max 1) on epb for lambda_hu >= 1.6",
         criterion_overlay_benefit},
        {6, "universal source changes goodput by at most 5% per grid point",
         criterion_universal_neutrality},
        {7, "goodput falls strictly with PU pressure while epb stays within 10%",
         criterion_pu_sweep},
        {8, "mode-weight anchors and monotone directions under one calibration",
         criterion_mode_weight_anchors},
        {9, "simulation tracks the analytic goodput and epb within 15%",
         criterion_cross_validation},
        {10, "structural invariants: row sums, closure, normalization, replay",
         criterion_structural},
    };

    int only = 0;
    if (argc > 1)
        only = std::atoi(argv[1]);

    bool all_ok = true;
    for (const auto &cr : criteria) {
        if (only != 0 && cr.id != only)
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Check c = cr.run();
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", c.ok ? "PASS" : "FAIL", cr.id,
                    cr.title, sec, c.detail.empty() ? "" : " -- ", c.detail.c_str());
        all_ok = all_ok && c.ok;
    }
    return all_ok ? 0 : 1;
}
