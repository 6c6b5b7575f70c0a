#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hetnet/content.hpp"
#include "hetnet/link.hpp"

namespace hetnet {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModeWeights {
    double r_sat = 1.0 / 3.0;
    double r_bs = 1.0 / 3.0;
    double r_dev = 1.0 / 3.0;
};

struct D2DGeometry {
    double hu_density_per_m2 = 0.0018; // lambda_N_HU
    double cell_radius_m = 300.0;      // R_BS
    double interference_radius_m = 60.0; // R_Int
    int d_max = 5;

    double cell_area_m2() const { return M_PI * cell_radius_m * cell_radius_m; }
    double mean_devices() const { return hu_density_per_m2 * cell_area_m2(); }
    // Neighbours inside the reception range of a requester.
    int neighbors_in_range() const {
        return static_cast<int>(std::floor(hu_density_per_m2 * M_PI * interference_radius_m *
                                           interference_radius_m));
    }
    int d_max_bound(int n_f_sat, int n_f_ter) const {
        return static_cast<int>(
            std::floor((mean_devices() - n_f_sat - (n_f_ter - 1)) / 2.0));
    }
};

// The single configuration root: the reference operating point plus solver
// and simulation settings. Defaults reproduce the base parameter set.
struct SystemParams {
    // Content and caches
    int n_contents = 20;           // N
    int n_hu_loc = 2;              // max contents in a device cache
    double mean_content_mbits = 25.0; // s_hat
    double zipf_s = 1.2;
    double cache_sat_mbits = 125.0;
    double cache_bs_mbits = 100.0;
    double cache_dev_mbits = 50.0;
    double ttl_mean_sec = 600.0; // device-cache expiry (not part of the published set)

    // Channel pools
    int n_f_sat = 2;
    int n_f_ter = 3;

    // Traffic
    double lambda_pu_ter = 0.03; // PU arrivals/sec on the terrestrial link
    double lambda_hu = 2.4;      // HU content requests/sec

    // Power
    double p_sat_ch_w = 48.0;
    double p_bs_ch_w = 6.0;
    double p_dev_tx_w = 0.08;
    double theta_bs = 5.0;
    double theta_loc = 2.0;

    // Radio geometry and spectra
    double d_sat_m = 300e3;
    double d_bs_m = 150.0;
    double d_d2d_m = 30.0;
    double w_ter_hz = 2e6;
    double w_sat_hz = 36e6;
    double f_sat_hz = 20e9;
    double f_ter_hz = 700e6;
    double noise_temp_k = 290.0;

    // Universal-source backhaul capacities
    double cap_sat_univ_bps = 1e6;
    double cap_bs_univ_bps = 10e6;

    // D2D overlay
    double lambda_n_hu_per_m2 = 0.0018;
    int d_max = 5;
    double r_bs_m = 300.0;
    double r_int_m = 60.0;
    bool overlay = true; // false forces a single concurrent D2D operation

    // Mode selection
    ModeWeights weights;
    bool universal_source = true;

    // Optional per-link capacity overrides (bits/sec)
    std::optional<double> cap_sat_bps;
    std::optional<double> cap_bs_bps;
    std::optional<double> cap_d2d_bps;
    std::optional<double> cap_pu_ter_bps;

    // Solver / simulation
    double solver_tolerance = 1e-10;
    std::uint64_t seed = 1;
    double horizon_sec = 1200.0;
    int replications = 10;

    int effective_d_max() const { return overlay ? d_max : 1; }
    int sat_slots() const {
        return static_cast<int>(std::floor(cache_sat_mbits / mean_content_mbits));
    }
    int bs_slots() const {
        return static_cast<int>(std::floor(cache_bs_mbits / mean_content_mbits));
    }

    ContentCatalog catalog() const {
        return ContentCatalog::make(static_cast<std::size_t>(n_contents), zipf_s, lambda_hu);
    }
    SizeDistribution size_dist() const { return SizeDistribution{mean_content_mbits}; }

    D2DGeometry geometry() const {
        D2DGeometry g;
        g.hu_density_per_m2 = lambda_n_hu_per_m2;
        g.cell_radius_m = r_bs_m;
        g.interference_radius_m = r_int_m;
        g.d_max = effective_d_max();
        return g;
    }

    LinkBudget link_budget() const {
        LinkBudget b;
        b.noise_temp_k = noise_temp_k;
        b.sat = {w_sat_hz, p_sat_ch_w, d_sat_m, f_sat_hz};
        b.bs = {w_ter_hz, p_bs_ch_w, d_bs_m, f_ter_hz};
        b.d2d = {w_ter_hz, p_dev_tx_w, d_d2d_m, f_ter_hz};
        b.pu_ter = {w_ter_hz, p_bs_ch_w, d_bs_m, f_ter_hz};
        b.override_sat_bps = cap_sat_bps;
        b.override_bs_bps = cap_bs_bps;
        b.override_d2d_bps = cap_d2d_bps;
        b.override_pu_ter_bps = cap_pu_ter_bps;
        return b;
    }

    ServiceRates rates() const {
        return service_rates(link_budget(), cap_sat_univ_bps, cap_bs_univ_bps, size_dist());
    }

    void validate() const;
    nlohmann::json to_json() const;
    static SystemParams from_json(const nlohmann::json &j);
    static SystemParams load_file(const std::string &path);
    std::string config_hash() const;
};

inline void SystemParams::validate() const {
    auto fail = [](const std::string &msg) { throw ValidationError(msg); };
    auto positive = [&](double v, const char *name) {
        if (!(v > 0.0) || !std::isfinite(v))
            fail(std::string(name) + " must be > 0");
    };
    if (n_contents < 1)
        fail("n_contents must be >= 1");
    if (n_hu_loc != 2)
        fail("n_hu_loc: only two-slot device caches are modelled");
    positive(mean_content_mbits, "mean_content_mbits");
    if (zipf_s < 0.0)
        fail("zipf_s must be >= 0");
    positive(cache_sat_mbits, "cache_sat_mbits");
    positive(cache_bs_mbits, "cache_bs_mbits");
    positive(cache_dev_mbits, "cache_dev_mbits");
    positive(ttl_mean_sec, "ttl_mean_sec");
    if (n_f_sat < 1)
        fail("n_f_sat must be >= 1");
    if (n_f_ter < 2)
        fail("n_f_ter must be >= 2 (one D2D frequency plus at least one BS frequency)");
    if (lambda_pu_ter < 0.0)
        fail("lambda_pu_ter must be >= 0");
    if (lambda_hu < 0.0)
        fail("lambda_hu must be >= 0");
    positive(p_sat_ch_w, "p_sat_ch_w");
    positive(p_bs_ch_w, "p_bs_ch_w");
    positive(p_dev_tx_w, "p_dev_tx_w");
    positive(theta_bs, "theta_bs");
    positive(theta_loc, "theta_loc");
    positive(d_sat_m, "d_sat_m");
    positive(d_bs_m, "d_bs_m");
    positive(d_d2d_m, "d_d2d_m");
    positive(w_ter_hz, "w_ter_hz");
    positive(w_sat_hz, "w_sat_hz");
    positive(f_sat_hz, "f_sat_hz");
    positive(f_ter_hz, "f_ter_hz");
    positive(noise_temp_k, "noise_temp_k");
    positive(cap_sat_univ_bps, "cap_sat_univ_bps");
    positive(cap_bs_univ_bps, "cap_bs_univ_bps");
    positive(lambda_n_hu_per_m2, "lambda_n_hu_per_m2");
    positive(r_bs_m, "r_bs_m");
    positive(r_int_m, "r_int_m");
    if (d_max < 1)
        fail("d_max must be >= 1");
    const int bound = geometry().d_max_bound(n_f_sat, n_f_ter);
    if (d_max > bound) {
        std::ostringstream os;
        os << "d_max = " << d_max << " exceeds the cell-population bound " << bound;
        fail(os.str());
    }
    const double wsum = weights.r_sat + weights.r_bs + weights.r_dev;
    if (weights.r_sat < 0.0 || weights.r_bs < 0.0 || weights.r_dev < 0.0)
        fail("mode weights must be >= 0");
    if (std::fabs(wsum - 1.0) > 1e-9)
        fail("mode weights must sum to 1");
    for (const auto &[ovr, name] :
         {std::pair{cap_sat_bps, "cap_sat_bps"}, std::pair{cap_bs_bps, "cap_bs_bps"},
          std::pair{cap_d2d_bps, "cap_d2d_bps"}, std::pair{cap_pu_ter_bps, "cap_pu_ter_bps"}}) {
        if (ovr && !(*ovr > 0.0))
            fail(std::string(name) + " override must be > 0");
    }
    positive(solver_tolerance, "solver_tolerance");
    positive(horizon_sec, "horizon_sec");
    if (replications < 1)
        fail("replications must be >= 1");
}

inline nlohmann::json SystemParams::to_json() const {
    nlohmann::json j;
    j["n_contents"] = n_contents;
    j["n_hu_loc"] = n_hu_loc;
    j["mean_content_mbits"] = mean_content_mbits;
    j["zipf_s"] = zipf_s;
    j["cache_sat_mbits"] = cache_sat_mbits;
    j["cache_bs_mbits"] = cache_bs_mbits;
    j["cache_dev_mbits"] = cache_dev_mbits;
    j["ttl_mean_sec"] = ttl_mean_sec;
    j["n_f_sat"] = n_f_sat;
    j["n_f_ter"] = n_f_ter;
    j["lambda_pu_ter"] = lambda_pu_ter;
    j["lambda_hu"] = lambda_hu;
    j["p_sat_ch_w"] = p_sat_ch_w;
    j["p_bs_ch_w"] = p_bs_ch_w;
    j["p_dev_tx_w"] = p_dev_tx_w;
    j["theta_bs"] = theta_bs;
    j["theta_loc"] = theta_loc;
    j["d_sat_m"] = d_sat_m;
    j["d_bs_m"] = d_bs_m;
    j["d_d2d_m"] = d_d2d_m;
    j["w_ter_hz"] = w_ter_hz;
    j["w_sat_hz"] = w_sat_hz;
    j["f_sat_hz"] = f_sat_hz;
    j["f_ter_hz"] = f_ter_hz;
    j["noise_temp_k"] = noise_temp_k;
    j["cap_sat_univ_bps"] = cap_sat_univ_bps;
    j["cap_bs_univ_bps"] = cap_bs_univ_bps;
    j["lambda_n_hu_per_m2"] = lambda_n_hu_per_m2;
    j["d_max"] = d_max;
    j["r_bs_m"] = r_bs_m;
    j["r_int_m"] = r_int_m;
    j["overlay"] = overlay;
    j["r_sat"] = weights.r_sat;
    j["r_bs"] = weights.r_bs;
    j["r_dev"] = weights.r_dev;
    j["universal_source"] = universal_source;
    if (cap_sat_bps)
        j["cap_sat_bps"] = *cap_sat_bps;
    if (cap_bs_bps)
        j["cap_bs_bps"] = *cap_bs_bps;
    if (cap_d2d_bps)
        j["cap_d2d_bps"] = *cap_d2d_bps;
    if (cap_pu_ter_bps)
        j["cap_pu_ter_bps"] = *cap_pu_ter_bps;
    j["solver_tolerance"] = solver_tolerance;
    j["seed"] = seed;
    j["horizon_sec"] = horizon_sec;
    j["replications"] = replications;
    return j;
}

inline SystemParams SystemParams::from_json(const nlohmann::json &j) {
    SystemParams p;
    auto get = [&](const char *key, auto &field) {
        if (j.contains(key)) {
            try {
                field = j.at(key).get<std::decay_t<decltype(field)>>();
            } catch (const nlohmann::json::exception &e) {
                throw ParseError(std::string("config key '") + key + "': " + e.what());
            }
        }
    };
    get("n_contents", p.n_contents);
    get("n_hu_loc", p.n_hu_loc);
    get("mean_content_mbits", p.mean_content_mbits);
    get("zipf_s", p.zipf_s);
    get("cache_sat_mbits", p.cache_sat_mbits);
    get("cache_bs_mbits", p.cache_bs_mbits);
    get("cache_dev_mbits", p.cache_dev_mbits);
    get("ttl_mean_sec", p.ttl_mean_sec);
    get("n_f_sat", p.n_f_sat);
    get("n_f_ter", p.n_f_ter);
    get("lambda_pu_ter", p.lambda_pu_ter);
    get("lambda_hu", p.lambda_hu);
    get("p_sat_ch_w", p.p_sat_ch_w);
    get("p_bs_ch_w", p.p_bs_ch_w);
    get("p_dev_tx_w", p.p_dev_tx_w);
    get("theta_bs", p.theta_bs);
    get("theta_loc", p.theta_loc);
    get("d_sat_m", p.d_sat_m);
    get("d_bs_m", p.d_bs_m);
    get("d_d2d_m", p.d_d2d_m);
    get("w_ter_hz", p.w_ter_hz);
    get("w_sat_hz", p.w_sat_hz);
    get("f_sat_hz", p.f_sat_hz);
    get("f_ter_hz", p.f_ter_hz);
    get("noise_temp_k", p.noise_temp_k);
    get("cap_sat_univ_bps", p.cap_sat_univ_bps);
    get("cap_bs_univ_bps", p.cap_bs_univ_bps);
    get("lambda_n_hu_per_m2", p.lambda_n_hu_per_m2);
    get("d_max", p.d_max);
    get("r_bs_m", p.r_bs_m);
    get("r_int_m", p.r_int_m);
    get("overlay", p.overlay);
    get("r_sat", p.weights.r_sat);
    get("r_bs", p.weights.r_bs);
    get("r_dev", p.weights.r_dev);
    get("universal_source", p.universal_source);
    double cap = 0.0;
    if (j.contains("cap_sat_bps")) {
        get("cap_sat_bps", cap);
        p.cap_sat_bps = cap;
    }
    if (j.contains("cap_bs_bps")) {
        get("cap_bs_bps", cap);
        p.cap_bs_bps = cap;
    }
    if (j.contains("cap_d2d_bps")) {
        get("cap_d2d_bps", cap);
        p.cap_d2d_bps = cap;
    }
    if (j.contains("cap_pu_ter_bps")) {
        get("cap_pu_ter_bps", cap);
        p.cap_pu_ter_bps = cap;
    }
    get("solver_tolerance", p.solver_tolerance);
    get("seed", p.seed);
    get("horizon_sec", p.horizon_sec);
    get("replications", p.replications);

    static const char *known[] = {
        "n_contents", "n_hu_loc", "mean_content_mbits", "zipf_s", "cache_sat_mbits",
        "cache_bs_mbits", "cache_dev_mbits", "ttl_mean_sec", "n_f_sat", "n_f_ter",
        "lambda_pu_ter", "lambda_hu", "p_sat_ch_w", "p_bs_ch_w", "p_dev_tx_w", "theta_bs",
        "theta_loc", "d_sat_m", "d_bs_m", "d_d2d_m", "w_ter_hz", "w_sat_hz", "f_sat_hz",
        "f_ter_hz", "noise_temp_k", "cap_sat_univ_bps", "cap_bs_univ_bps",
        "lambda_n_hu_per_m2", "d_max", "r_bs_m", "r_int_m", "overlay", "r_sat", "r_bs",
        "r_dev", "universal_source", "cap_sat_bps", "cap_bs_bps", "cap_d2d_bps",
        "cap_pu_ter_bps", "solver_tolerance", "seed", "horizon_sec", "replications"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ValidationError("unknown config key '" + it.key() + "'");
    }
    p.validate();
    return p;
}

inline SystemParams SystemParams::load_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object())
        throw ParseError("config root must be a JSON object");
    return from_json(j);
}

// FNV-1a over the canonical serialized form; embedded in every report row so
// outputs remain traceable to their configuration.
inline std::string SystemParams::config_hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace hetnet
