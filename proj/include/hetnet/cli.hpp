#pragma once

#include <algorithm>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hetnet/analysis.hpp"
#include "hetnet/report.hpp"
#include "hetnet/sim.hpp"

namespace hetnet {

struct SimulateOptions {
    CachePolicyKind policy = CachePolicyKind::Pac;
    std::uint64_t seed = 1;
    int replications = 10;
    double horizon_sec = 1200.0;
};

// One analytic row plus a human-readable summary on the side channel.
inline AnalysisResult run_analyze(const SystemParams &params, std::ostream &csv,
                                  std::ostream &log, FixedAvailabilityMemo *memo = nullptr,
                                  bool with_header = true) {
    AnalysisResult res = analyze(params, memo);
    if (with_header)
        csv << csv_header() << "\n";
    CsvRowInfo info;
    info.row_kind = "analytic";
    info.analysis = &res;
    csv << csv_row(params, res.report, info) << "\n";

    log << "config " << params.config_hash() << ": " << res.ra_states
        << " channel states (residual " << format_g9(res.ra_residual) << "), cache chains "
        << res.cache_diag.local_states << "/" << res.cache_diag.sat_states << "/"
        << res.cache_diag.bs_states << " states, ttl " << format_g9(params.ttl_mean_sec)
        << " s\n";
    log << "  p_local " << format_g9(res.report.p_local) << ", g_hu "
        << format_g9(res.report.g_hu_bps / 1e6) << " Mbps, epb "
        << format_g9(res.report.epb_j_per_bit * 1e6) << " uJ/bit, p_drop_bs "
        << format_g9(res.report.p_drop_bs) << ", p_drop_d2d "
        << format_g9(res.report.p_drop_d2d) << "\n";
    return res;
}

// Per-replication rows plus one aggregate row carrying mean and CI columns.
inline Aggregate run_simulate(const SystemParams &params, const SimulateOptions &sim,
                              std::ostream &csv, std::ostream &log, bool with_header = true) {
    if (sim.replications < 1)
        throw ValidationError("replications must be >= 1");
    if (with_header)
        csv << csv_header() << "\n";
    std::vector<MetricsReport> reports;
    reports.reserve(sim.replications);
    for (int r = 0; r < sim.replications; ++r) {
        SimOptions o;
        o.policy = sim.policy;
        o.seed = sim.seed + static_cast<std::uint64_t>(r);
        o.horizon_sec = sim.horizon_sec;
        auto rep = run_replication(params, o);
        reports.push_back(rep.report);
        CsvRowInfo info;
        info.row_kind = "replication";
        info.policy = to_string(sim.policy);
        info.seed = std::to_string(o.seed);
        info.replication = std::to_string(r);
        info.device_count = std::to_string(rep.device_count);
        csv << csv_row(params, rep.report, info) << "\n";
    }
    Aggregate agg = aggregate_reports(reports);
    CsvRowInfo info;
    info.row_kind = "aggregate";
    info.policy = to_string(sim.policy);
    info.seed = std::to_string(sim.seed);
    info.ci95 = &agg.ci95;
    csv << csv_row(params, agg.mean, info) << "\n";
    log << "simulate " << sim.replications << " x " << format_g9(sim.horizon_sec)
        << " s, policy " << to_string(sim.policy) << ": g_hu "
        << format_g9(agg.mean.g_hu_bps / 1e6) << " +- " << format_g9(agg.ci95.g_hu_bps / 1e6)
        << " Mbps, epb " << format_g9(agg.mean.epb_j_per_bit * 1e6) << " +- "
        << format_g9(agg.ci95.epb_j_per_bit * 1e6) << " uJ/bit\n";
    return agg;
}

// A swept parameter is a plain config key; "r_dev" additionally rebalances
// r_bs so the weights stay a distribution at fixed r_sat.
inline SystemParams apply_sweep_value(const SystemParams &base, const std::string &param,
                                      double value) {
    nlohmann::json j = base.to_json();
    if (param == "r_dev") {
        j["r_dev"] = value;
        j["r_bs"] = 1.0 - base.weights.r_sat - value;
    } else if (param == "n_contents" || param == "d_max" || param == "n_f_sat" ||
               param == "n_f_ter" || param == "replications") {
        j[param] = static_cast<int>(value);
    } else if (param == "universal_source" || param == "overlay") {
        j[param] = value != 0.0;
    } else if (param == "seed") {
        j[param] = static_cast<std::uint64_t>(value);
    } else if (j.contains(param)) {
        j[param] = value;
    } else {
        throw ValidationError("unknown sweep parameter '" + param + "'");
    }
    return SystemParams::from_json(j);
}

inline std::vector<double> parse_value_list(const std::string &list) {
    std::vector<double> values;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception &) {
            throw ValidationError("sweep value '" + item + "' is not a number");
        }
        if (pos != item.size())
            throw ValidationError("sweep value '" + item + "' is not a number");
        values.push_back(v);
    }
    if (values.empty())
        throw ValidationError("empty sweep value list");
    return values;
}

struct SweepSpec {
    std::string param;
    std::vector<double> values;
    bool with_simulation = false;
    SimulateOptions sim;
};

inline void run_sweep(const SystemParams &base, const SweepSpec &spec, std::ostream &csv,
                      std::ostream &log) {
    csv << csv_header() << "\n";
    FixedAvailabilityMemo memo;
    for (double value : spec.values) {
        SystemParams p = apply_sweep_value(base, spec.param, value);
        AnalysisResult res = analyze(p, &memo);
        CsvRowInfo info;
        info.row_kind = "analytic";
        info.sweep_param = spec.param;
        info.sweep_value = format_g9(value);
        info.analysis = &res;
        csv << csv_row(p, res.report, info) << "\n";
        log << spec.param << " = " << format_g9(value) << ": g_hu "
            << format_g9(res.report.g_hu_bps / 1e6) << " Mbps, epb "
            << format_g9(res.report.epb_j_per_bit * 1e6) << " uJ/bit\n";
        if (!spec.with_simulation)
            continue;
        std::vector<MetricsReport> reports;
        for (int r = 0; r < spec.sim.replications; ++r) {
            SimOptions o;
            o.policy = spec.sim.policy;
            o.seed = spec.sim.seed + static_cast<std::uint64_t>(r);
            o.horizon_sec = spec.sim.horizon_sec;
            auto rep = run_replication(p, o);
            reports.push_back(rep.report);
            CsvRowInfo rinfo;
            rinfo.row_kind = "replication";
            rinfo.sweep_param = spec.param;
            rinfo.sweep_value = format_g9(value);
            rinfo.policy = to_string(spec.sim.policy);
            rinfo.seed = std::to_string(o.seed);
            rinfo.replication = std::to_string(r);
            rinfo.device_count = std::to_string(rep.device_count);
            csv << csv_row(p, rep.report, rinfo) << "\n";
        }
        Aggregate agg = aggregate_reports(reports);
        CsvRowInfo ainfo;
        ainfo.row_kind = "aggregate";
        ainfo.sweep_param = spec.param;
        ainfo.sweep_value = format_g9(value);
        ainfo.policy = to_string(spec.sim.policy);
        ainfo.seed = std::to_string(spec.sim.seed);
        ainfo.ci95 = &agg.ci95;
        csv << csv_row(p, agg.mean, ainfo) << "\n";
    }
}

} // namespace hetnet
