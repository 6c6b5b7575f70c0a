#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "hetnet/content.hpp"

namespace hetnet {

inline constexpr double kBoltzmann = 1.380649e-23; // J/K
inline constexpr double kLightSpeed = 299792458.0; // m/s

// Shannon AWGN capacity with free-space path loss and thermal noise kTB.
// Antenna gains are unity.
inline double shannon_capacity_bps(double bandwidth_hz, double tx_power_w, double distance_m,
                                   double carrier_hz, double noise_temp_k) {
    if (bandwidth_hz <= 0 || tx_power_w <= 0 || distance_m <= 0 || carrier_hz <= 0 ||
        noise_temp_k <= 0)
        throw std::invalid_argument("shannon_capacity_bps: all inputs must be > 0");
    const double fspl_amp = 4.0 * M_PI * distance_m * carrier_hz / kLightSpeed;
    const double fspl = fspl_amp * fspl_amp;
    const double rx_power_w = tx_power_w / fspl;
    const double noise_w = kBoltzmann * noise_temp_k * bandwidth_hz;
    return bandwidth_hz * std::log2(1.0 + rx_power_w / noise_w);
}

// Per-link radio parameters plus optional explicit capacity overrides.
// Overrides exist because the reference operating point never fixes the
// absolute capacities; sweeps calibrated against published throughput numbers
// pin them here.
struct LinkBudget {
    struct Radio {
        double bandwidth_hz = 0.0;
        double tx_power_w = 0.0;
        double distance_m = 0.0;
        double carrier_hz = 0.0;
    };

    Radio sat;    // satellite -> HU
    Radio bs;     // BS -> HU
    Radio d2d;    // HU -> HU
    Radio pu_ter; // BS -> PU
    double noise_temp_k = 290.0;

    std::optional<double> override_sat_bps;
    std::optional<double> override_bs_bps;
    std::optional<double> override_d2d_bps;
    std::optional<double> override_pu_ter_bps;

    double capacity_sat_bps() const { return resolve(override_sat_bps, sat); }
    double capacity_bs_bps() const { return resolve(override_bs_bps, bs); }
    double capacity_d2d_bps() const { return resolve(override_d2d_bps, d2d); }
    double capacity_pu_ter_bps() const { return resolve(override_pu_ter_bps, pu_ter); }

private:
    double resolve(const std::optional<double> &ovr, const Radio &r) const {
        if (ovr)
            return *ovr;
        return shannon_capacity_bps(r.bandwidth_hz, r.tx_power_w, r.distance_m, r.carrier_hz,
                                    noise_temp_k);
    }
};

// Service rates for every mode. Universal-source retrievals serve two legs
// back to back: universal -> relay at the relay's backhaul capacity, then
// relay -> device at the relay's access capacity.
struct ServiceRates {
    double cap_sat_bps = 0.0;
    double cap_bs_bps = 0.0;
    double cap_d2d_bps = 0.0;
    double cap_pu_ter_bps = 0.0;
    double cap_sat_univ_bps = 0.0;
    double cap_bs_univ_bps = 0.0;

    double mu_pu_ter = 0.0;
    double mu_hu_sat = 0.0;
    double mu_hu_bs = 0.0;
    double mu_hu_d2d = 0.0;
    double delta_sat_u_sec = 0.0;
    double delta_bs_u_sec = 0.0;
    double mu_hu_sat_u = 0.0;
    double mu_hu_bs_u = 0.0;
};

inline ServiceRates service_rates(const LinkBudget &budget, double cap_sat_univ_bps,
                                  double cap_bs_univ_bps, const SizeDistribution &size) {
    if (cap_sat_univ_bps <= 0 || cap_bs_univ_bps <= 0)
        throw std::invalid_argument("service_rates: universal-source capacities must be > 0");
    ServiceRates r;
    r.cap_sat_bps = budget.capacity_sat_bps();
    r.cap_bs_bps = budget.capacity_bs_bps();
    r.cap_d2d_bps = budget.capacity_d2d_bps();
    r.cap_pu_ter_bps = budget.capacity_pu_ter_bps();
    r.cap_sat_univ_bps = cap_sat_univ_bps;
    r.cap_bs_univ_bps = cap_bs_univ_bps;

    const double s_bits = size.mean_bits();
    r.mu_pu_ter = r.cap_pu_ter_bps / s_bits;
    r.mu_hu_sat = r.cap_sat_bps / s_bits;
    r.mu_hu_bs = r.cap_bs_bps / s_bits;
    r.mu_hu_d2d = r.cap_d2d_bps / s_bits;
    r.delta_sat_u_sec = s_bits / cap_sat_univ_bps + s_bits / r.cap_sat_bps;
    r.delta_bs_u_sec = s_bits / cap_bs_univ_bps + s_bits / r.cap_bs_bps;
    r.mu_hu_sat_u = 1.0 / r.delta_sat_u_sec;
    r.mu_hu_bs_u = 1.0 / r.delta_bs_u_sec;
    return r;
}

} // namespace hetnet
