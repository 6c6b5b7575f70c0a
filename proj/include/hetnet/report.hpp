#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hetnet/analysis.hpp"
#include "hetnet/metrics.hpp"
#include "hetnet/params.hpp"

namespace hetnet {

// Fixed numeric formatting: 9 significant digits keeps rows byte-stable for
// identical inputs across runs.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
}

inline const std::vector<std::string> &csv_metric_fields() {
    static const std::vector<std::string> fields = {
        "lambda_eff_sat", "lambda_eff_sat_u", "lambda_eff_bs", "lambda_eff_bs_u",
        "lambda_eff_d2d", "p_drop_bs",        "p_drop_d2d",    "p_local",
        "th_sat_bps",     "th_sat_u_bps",     "th_bs_bps",     "th_bs_u_bps",
        "th_d2d_bps",     "g_local_bps",      "g_hu_bps",      "p_bs_w",
        "p_bs_u_w",       "p_d2d_w",          "p_local_w",     "p_overall_w",
        "epb_j_per_bit"};
    return fields;
}

inline std::vector<double> metric_values(const MetricsReport &r) {
    return {r.lambda_eff_sat, r.lambda_eff_sat_u, r.lambda_eff_bs, r.lambda_eff_bs_u,
            r.lambda_eff_d2d, r.p_drop_bs,        r.p_drop_d2d,    r.p_local,
            r.th_sat_bps,     r.th_sat_u_bps,     r.th_bs_bps,     r.th_bs_u_bps,
            r.th_d2d_bps,     r.g_local_bps,      r.g_hu_bps,      r.p_bs_w,
            r.p_bs_u_w,       r.p_d2d_w,          r.p_local_w,     r.p_overall_w,
            r.epb_j_per_bit};
}

inline std::string metric_flags(const MetricsReport &r) {
    std::string f;
    auto append = [&f](const char *token) {
        if (!f.empty())
            f += ';';
        f += token;
    };
    if (r.flag_zero_bs_denominator)
        append("zero_bs_denominator");
    if (r.flag_zero_d2d_denominator)
        append("zero_d2d_denominator");
    if (r.flag_zero_goodput)
        append("zero_goodput");
    return f;
}

inline std::string csv_header() {
    std::string h = "row_kind,config_hash,sweep_param,sweep_value,policy,seed,replication";
    h += ",lambda_hu,lambda_pu_ter,r_sat,r_bs,r_dev,d_max,universal_source,ttl_mean_sec";
    for (const auto &f : csv_metric_fields())
        h += "," + f;
    for (const auto &f : csv_metric_fields())
        h += "," + f + "_ci95";
    h += ",flags,ra_states,ra_residual,local_residual,sat_residual,bs_residual,device_count";
    return h;
}

struct CsvRowInfo {
    std::string row_kind;
    std::string sweep_param;
    std::string sweep_value;
    std::string policy;
    std::string seed;
    std::string replication;
    const MetricsReport *ci95 = nullptr; // aggregate rows only
    const AnalysisResult *analysis = nullptr;
    std::string device_count;
};

inline std::string csv_row(const SystemParams &p, const MetricsReport &m,
                           const CsvRowInfo &info) {
    std::string row = info.row_kind;
    row += "," + p.config_hash();
    row += "," + info.sweep_param;
    row += "," + info.sweep_value;
    row += "," + info.policy;
    row += "," + info.seed;
    row += "," + info.replication;
    row += "," + format_g9(p.lambda_hu);
    row += "," + format_g9(p.lambda_pu_ter);
    row += "," + format_g9(p.weights.r_sat);
    row += "," + format_g9(p.weights.r_bs);
    row += "," + format_g9(p.weights.r_dev);
    row += "," + std::to_string(p.effective_d_max());
    row += std::string(",") + (p.universal_source ? "1" : "0");
    row += "," + format_g9(p.ttl_mean_sec);
    for (double v : metric_values(m))
        row += "," + format_g9(v);
    if (info.ci95) {
        for (double v : metric_values(*info.ci95))
            row += "," + format_g9(v);
    } else {
        for (std::size_t i = 0; i < csv_metric_fields().size(); ++i)
            row += ",";
    }
    row += "," + metric_flags(m);
    if (info.analysis) {
        row += "," + std::to_string(info.analysis->ra_states);
        row += "," + format_g9(info.analysis->ra_residual);
        row += "," + format_g9(info.analysis->cache_diag.local_residual);
        row += "," + format_g9(info.analysis->cache_diag.sat_residual);
        row += "," + format_g9(info.analysis->cache_diag.bs_residual);
    } else {
        row += ",,,,,";
    }
    row += "," + info.device_count;
    return row;
}

} // namespace hetnet
