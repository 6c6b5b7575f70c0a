#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetnet/cache_chains.hpp"
#include "hetnet/content.hpp"
#include "hetnet/metrics.hpp"
#include "hetnet/params.hpp"

namespace hetnet {

enum class CachePolicyKind { Pac, Lru, Fifo, Random };

inline CachePolicyKind cache_policy_from_string(const std::string &s) {
    if (s == "pac")
        return CachePolicyKind::Pac;
    if (s == "lru")
        return CachePolicyKind::Lru;
    if (s == "fifo")
        return CachePolicyKind::Fifo;
    if (s == "random")
        return CachePolicyKind::Random;
    throw ValidationError("unknown cache policy '" + s + "'");
}

inline const char *to_string(CachePolicyKind k) {
    switch (k) {
    case CachePolicyKind::Pac: return "pac";
    case CachePolicyKind::Lru: return "lru";
    case CachePolicyKind::Fifo: return "fifo";
    case CachePolicyKind::Random: return "random";
    }
    return "?";
}

namespace simdetail {

// Deterministic transforms over the engine output; the std distributions are
// implementation-defined and would break replay stability.
inline double uniform01(std::mt19937_64 &rng) {
    return (rng() >> 11) * 0x1.0p-53;
}

inline double exponential(std::mt19937_64 &rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

inline int poisson(std::mt19937_64 &rng, double mean) {
    // Knuth's product method; the cell population (~500) keeps this cheap
    // and it runs once per replication.
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform01(rng);
    } while (p > limit);
    return k - 1;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace simdetail

// Mode indices shared by counters and reports.
enum SimMode { kSat = 0, kSatU = 1, kBs = 2, kBsU = 3, kD2d = 4, kModeCount = 5 };

struct SimCounters {
    long total_requests = 0;
    long local_hits = 0;
    long admitted[kModeCount] = {0, 0, 0, 0, 0};
    long served[kModeCount] = {0, 0, 0, 0, 0};
    long dropped[kModeCount] = {0, 0, 0, 0, 0};
    long blocked_no_mode = 0;     // available somewhere, no usable mode
    long blocked_unavailable = 0; // nowhere to fetch from
    long in_flight_at_end = 0;
    long pu_arrivals = 0;
    long pu_blocked = 0;

    double served_bits[kModeCount] = {0, 0, 0, 0, 0};
    double local_bits = 0.0;
    double energy_bs_j = 0.0;
    double energy_bs_u_j = 0.0;
    double energy_d2d_j = 0.0;
    double energy_local_j = 0.0;
    double window_sec = 0.0;

    // Unbiased clearance probes per concurrent-D2D level: on every request a
    // uniformly random device is tested against the active D2D geometry. The
    // analytic area ratios are lower bounds for these frequencies.
    std::vector<long> probe_trials;
    std::vector<long> probe_rx_clear;
    std::vector<long> probe_tx_clear;
};

struct SimOptions {
    CachePolicyKind policy = CachePolicyKind::Pac;
    std::uint64_t seed = 1;
    double horizon_sec = 1200.0;
    double warmup_frac = 0.1;
    bool check_invariants = false;
};

// A bounded device cache entry; sizes are per-copy, fixed at fetch time.
struct CacheEntry {
    int content = -1;
    double size_mbits = 0.0;
    long insert_seq = 0;
    long use_seq = 0;
    long generation = 0; // matches pending expiry events
};

// Two-slot device cache under the configured replacement policy plus TTL.
class DeviceCache {
public:
    std::vector<CacheEntry> entries;

    bool contains(int content) const { return find(content) >= 0; }

    int find(int content) const {
        for (std::size_t k = 0; k < entries.size(); ++k)
            if (entries[k].content == content)
                return static_cast<int>(k);
        return -1;
    }

    void touch(int content, long seq) {
        const int k = find(content);
        if (k >= 0)
            entries[k].use_seq = seq;
    }

    void erase_generation(int content, long generation) {
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (entries[k].content == content && entries[k].generation == generation) {
                entries.erase(entries.begin() + static_cast<long>(k));
                return;
            }
        }
    }
};

// Replacement decision for a bounded cache. Returns true and fills `entry`
// when the content was inserted; the caller owns expiry scheduling.
inline bool apply_cache_policy(CachePolicyKind policy, DeviceCache &cache, int content,
                               double size_mbits, double capacity_mbits, int max_contents,
                               const std::vector<double> &popularity, long seq,
                               std::mt19937_64 &rng, CacheEntry *inserted = nullptr) {
    if (size_mbits > capacity_mbits)
        return false;
    auto total = [&] {
        double s = size_mbits;
        for (const auto &e : cache.entries)
            s += e.size_mbits;
        return s;
    };
    auto fits = [&] {
        return static_cast<int>(cache.entries.size()) < max_contents &&
               total() <= capacity_mbits;
    };

    if (policy == CachePolicyKind::Pac) {
        // Popularity-weighted eviction only between two residents; with one
        // resident the pair either fits or the insertion is skipped.
        if (cache.entries.empty()) {
            // fits by the size guard above
        } else if (static_cast<int>(cache.entries.size()) < max_contents) {
            if (total() > capacity_mbits)
                return false;
        } else {
            const double pi = popularity[cache.entries[0].content];
            const double pj = popularity[cache.entries[1].content];
            const double alpha = simdetail::uniform01(rng);
            const std::size_t victim = alpha <= pj / (pi + pj) ? 0 : 1;
            const std::size_t survivor = 1 - victim;
            if (cache.entries[survivor].size_mbits + size_mbits > capacity_mbits)
                return false;
            cache.entries.erase(cache.entries.begin() + static_cast<long>(victim));
        }
    } else {
        while (!cache.entries.empty() && !fits()) {
            std::size_t victim = 0;
            switch (policy) {
            case CachePolicyKind::Lru:
                for (std::size_t k = 1; k < cache.entries.size(); ++k)
                    if (cache.entries[k].use_seq < cache.entries[victim].use_seq)
                        victim = k;
                break;
            case CachePolicyKind::Fifo:
                for (std::size_t k = 1; k < cache.entries.size(); ++k)
                    if (cache.entries[k].insert_seq < cache.entries[victim].insert_seq)
                        victim = k;
                break;
            case CachePolicyKind::Random:
                victim = static_cast<std::size_t>(simdetail::uniform01(rng) *
                                                  cache.entries.size());
                victim = std::min(victim, cache.entries.size() - 1);
                break;
            case CachePolicyKind::Pac:
                break;
            }
            cache.entries.erase(cache.entries.begin() + static_cast<long>(victim));
        }
        if (!fits())
            return false;
    }

    CacheEntry e;
    e.content = content;
    e.size_mbits = size_mbits;
    e.insert_seq = seq;
    e.use_seq = seq;
    cache.entries.push_back(e);
    if (inserted)
        *inserted = e;
    return true;
}

// Fixed-slot cache (satellite or BS): always full, eviction per policy.
class SlotCache {
public:
    std::vector<int> contents;
    std::vector<long> insert_seq;
    std::vector<long> use_seq;

    void fill_top(int slots) {
        contents.resize(slots);
        insert_seq.resize(slots);
        use_seq.resize(slots);
        for (int k = 0; k < slots; ++k) {
            contents[k] = k;
            // Stationary tendency: the more popular a resident, the more
            // recently it was requested and (re)cached.
            insert_seq[k] = slots - k;
            use_seq[k] = slots - k;
        }
    }

    bool contains(int content) const {
        return std::find(contents.begin(), contents.end(), content) != contents.end();
    }

    void touch(int content, long seq) {
        for (std::size_t k = 0; k < contents.size(); ++k)
            if (contents[k] == content)
                use_seq[k] = seq;
    }

    void insert(CachePolicyKind policy, int content, const std::vector<double> &popularity,
                long seq, std::mt19937_64 &rng) {
        if (contains(content)) {
            touch(content, seq);
            return;
        }
        std::size_t victim = 0;
        switch (policy) {
        case CachePolicyKind::Pac: {
            // Evict resident e with weight prod_{o != e} p_o.
            std::vector<double> w(contents.size());
            double sum = 0.0;
            for (std::size_t e = 0; e < contents.size(); ++e) {
                double x = 1.0;
                for (std::size_t o = 0; o < contents.size(); ++o)
                    if (o != e)
                        x *= popularity[contents[o]];
                w[e] = x;
                sum += x;
            }
            double u = simdetail::uniform01(rng) * sum;
            for (std::size_t e = 0; e < contents.size(); ++e) {
                u -= w[e];
                victim = e;
                if (u <= 0.0)
                    break;
            }
            break;
        }
        case CachePolicyKind::Lru:
            for (std::size_t k = 1; k < contents.size(); ++k)
                if (use_seq[k] < use_seq[victim])
                    victim = k;
            break;
        case CachePolicyKind::Fifo:
            for (std::size_t k = 1; k < contents.size(); ++k)
                if (insert_seq[k] < insert_seq[victim])
                    victim = k;
            break;
        case CachePolicyKind::Random:
            victim = std::min(static_cast<std::size_t>(simdetail::uniform01(rng) *
                                                       contents.size()),
                              contents.size() - 1);
            break;
        }
        contents[victim] = content;
        insert_seq[victim] = seq;
        use_seq[victim] = seq;
    }
};

struct ReplicationResult {
    SimCounters counters;
    MetricsReport report;
    std::uint64_t seed = 0;
    int device_count = 0;
};

MetricsReport empirical_metrics(const SimCounters &c, const SystemParams &p);

namespace simdetail {

struct Device {
    double x = 0.0;
    double y = 0.0;
    DeviceCache cache;
    bool d2d_busy = false;
    std::vector<std::pair<double, int>> neighbors; // (distance, device) within R_Int
};

struct Service {
    int mode = 0;
    int content = 0;
    double size_mbits = 0.0;
    double start = 0.0;
    double leg_boundary = 0.0; // universal modes: relay leg ends here
    double end = 0.0;
    int requester = -1;
    int tx_device = -1; // D2D transmitter
    bool alive = false;
};

enum class EventKind { HuRequest, PuArrival, ServiceEnd, PuEndNf1, PuEndF1, Expiry };

struct Event {
    double time = 0.0;
    long seq = 0;
    EventKind kind = EventKind::HuRequest;
    int a = 0;  // service id / device id
    int b = 0;  // content
    long c = 0; // cache-entry generation

    bool operator>(const Event &o) const {
        if (time != o.time)
            return time > o.time;
        return seq > o.seq;
    }
};

} // namespace simdetail

// One full discrete-event replication. Deterministic for a fixed
// (params, options) pair.
class Simulation {
public:
    // Separate streams keep the topology and the arrival processes common
    // across cache policies for one seed, so policy comparisons pair up.
    Simulation(const SystemParams &params, const SimOptions &options)
        : p_(params), opt_(options), catalog_(params.catalog()),
          rates_(params.rates()), geom_(params.geometry()),
          topo_rng_(simdetail::mix_seed(options.seed, 1)),
          arrival_rng_(simdetail::mix_seed(options.seed, 2)),
          policy_rng_(simdetail::mix_seed(options.seed, 3)) {
        p_.validate();
    }

    ReplicationResult run() {
        setup_topology();
        warm_start_device_caches();
        sat_cache_.fill_top(p_.sat_slots());
        bs_cache_.fill_top(p_.bs_slots());
        warmup_ = opt_.warmup_frac * opt_.horizon_sec;
        counters_.probe_trials.assign(geom_.d_max + 1, 0);
        counters_.probe_rx_clear.assign(geom_.d_max + 1, 0);
        counters_.probe_tx_clear.assign(geom_.d_max + 1, 0);

        schedule_next_request(0.0);
        if (p_.lambda_pu_ter > 0.0)
            push(simdetail::EventKind::PuArrival,
                 simdetail::exponential(arrival_rng_, p_.lambda_pu_ter), -1, 0, 0);

        while (!queue_.empty()) {
            const auto ev = queue_.top();
            if (ev.time > opt_.horizon_sec)
                break;
            queue_.pop();
            now_ = ev.time;
            dispatch(ev);
            if (opt_.check_invariants)
                verify_invariants();
        }
        now_ = opt_.horizon_sec;

        ReplicationResult res;
        res.seed = opt_.seed;
        res.device_count = static_cast<int>(devices_.size());
        counters_.window_sec = opt_.horizon_sec - warmup_;
        for (const auto &s : services_)
            if (s.alive)
                ++counters_.in_flight_at_end;
        res.counters = counters_;
        res.report = empirical_metrics(counters_, p_);
        return res;
    }

private:
    SystemParams p_;
    SimOptions opt_;
    ContentCatalog catalog_;
    ServiceRates rates_;
    D2DGeometry geom_;
    std::mt19937_64 topo_rng_;    // device placement
    std::mt19937_64 arrival_rng_; // request and PU arrival marks
    std::mt19937_64 policy_rng_;  // cache, mode-selection and service draws

    std::vector<simdetail::Device> devices_;
    SlotCache sat_cache_;
    SlotCache bs_cache_;
    std::vector<simdetail::Service> services_;
    std::vector<int> nf1_services_; // alive BS-mode service ids
    std::vector<int> d2d_services_; // alive D2D service ids
    int sat_busy_ = 0;
    int nf1_pu_ = 0;
    bool f1_pu_ = false;
    double now_ = 0.0;
    double warmup_ = 0.0;
    long seq_ = 0;
    SimCounters counters_;
    std::priority_queue<simdetail::Event, std::vector<simdetail::Event>, std::greater<>>
        queue_;

    bool in_window() const { return now_ >= warmup_; }

    double next_exp_policy(double rate) {
        return now_ + simdetail::exponential(policy_rng_, rate);
    }

    void push(simdetail::EventKind kind, double time, int a, int b, long c) {
        queue_.push({time, seq_++, kind, a, b, c});
    }

    void setup_topology() {
        const int n = std::max(2, simdetail::poisson(topo_rng_, geom_.mean_devices()));
        devices_.resize(n);
        for (auto &d : devices_) {
            // Uniform draw on the disc of radius R_BS.
            const double r = geom_.cell_radius_m * std::sqrt(simdetail::uniform01(topo_rng_));
            const double phi = 2.0 * M_PI * simdetail::uniform01(topo_rng_);
            d.x = r * std::cos(phi);
            d.y = r * std::sin(phi);
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j)
                    continue;
                const double dx = devices_[i].x - devices_[j].x;
                const double dy = devices_[i].y - devices_[j].y;
                const double dist = std::hypot(dx, dy);
                if (dist <= geom_.interference_radius_m)
                    devices_[i].neighbors.emplace_back(dist, j);
            }
            std::sort(devices_[i].neighbors.begin(), devices_[i].neighbors.end());
        }
    }

    double distance(int a, int b) const {
        return std::hypot(devices_[a].x - devices_[b].x, devices_[a].y - devices_[b].y);
    }

    // Device caches start at the stationary occupancy of the device-cache
    // chain instead of empty; exponential TTLs are memoryless, so fresh
    // expiry draws are exact residual lifetimes.
    void warm_start_device_caches() {
        if (p_.lambda_hu <= 0.0)
            return;
        const RateMatrix chain = build_local_chain(catalog_, p_.size_dist(),
                                                   p_.cache_dev_mbits, 1.0 / p_.ttl_mean_sec);
        const auto pi = solve_stationary(chain, p_.solver_tolerance);
        const LocalChainLayout lay(p_.n_contents);
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < p_.n_contents; ++i)
            for (int j = i + 1; j < p_.n_contents; ++j)
                pairs.emplace_back(i, j);

        const double mbit_rate = 1.0 / p_.mean_content_mbits;
        for (std::size_t d = 0; d < devices_.size(); ++d) {
            double u = simdetail::uniform01(policy_rng_);
            int state = lay.n_states() - 1;
            for (int s = 0; s < lay.n_states(); ++s) {
                u -= pi.probabilities[s];
                if (u <= 0.0) {
                    state = s;
                    break;
                }
            }
            std::vector<int> contents;
            std::vector<double> sizes;
            if (state > lay.empty_state() && state <= p_.n_contents) {
                contents = {state - 1};
                double s0;
                do {
                    s0 = simdetail::exponential(policy_rng_, mbit_rate);
                } while (s0 > p_.cache_dev_mbits);
                sizes = {s0};
            } else if (state > p_.n_contents) {
                // Less popular resident first: the popular one is the more
                // recent arrival in the long run.
                const auto &[i, j] = pairs[state - 1 - p_.n_contents];
                contents = {j, i};
                double s0 = 0.0, s1 = 0.0;
                do {
                    s0 = simdetail::exponential(policy_rng_, mbit_rate);
                    s1 = simdetail::exponential(policy_rng_, mbit_rate);
                } while (s0 + s1 > p_.cache_dev_mbits);
                sizes = {s0, s1};
            }
            for (std::size_t k = 0; k < contents.size(); ++k) {
                CacheEntry e;
                e.content = contents[k];
                e.size_mbits = sizes[k];
                e.insert_seq = seq_;
                e.use_seq = seq_;
                e.generation = seq_++;
                devices_[d].cache.entries.push_back(e);
                push(simdetail::EventKind::Expiry,
                     simdetail::exponential(policy_rng_, 1.0 / p_.ttl_mean_sec),
                     static_cast<int>(d), e.content, e.generation);
            }
        }
    }

    void schedule_next_request(double from) {
        if (p_.lambda_hu > 0.0)
            push(simdetail::EventKind::HuRequest,
                 from + simdetail::exponential(arrival_rng_, p_.lambda_hu), -1, 0, 0);
    }

    void dispatch(const simdetail::Event &ev) {
        using simdetail::EventKind;
        switch (ev.kind) {
        case EventKind::HuRequest:
            schedule_next_request(now_);
            handle_request();
            break;
        case EventKind::PuArrival:
            push(EventKind::PuArrival,
                 now_ + simdetail::exponential(arrival_rng_, p_.lambda_pu_ter), -1, 0, 0);
            handle_pu_arrival();
            break;
        case EventKind::ServiceEnd:
            handle_service_end(ev.a);
            break;
        case EventKind::PuEndNf1:
            --nf1_pu_;
            break;
        case EventKind::PuEndF1:
            f1_pu_ = false;
            break;
        case EventKind::Expiry:
            devices_[ev.a].cache.erase_generation(ev.b, ev.c);
            break;
        }
    }

    int idle_sat() const { return p_.n_f_sat - sat_busy_; }
    int idle_nf1() const {
        return (p_.n_f_ter - 1) - nf1_pu_ - static_cast<int>(nf1_services_.size());
    }

    void verify_invariants() const {
        auto require = [](bool ok, const char *what) {
            if (!ok)
                throw std::logic_error(std::string("simulation invariant violated: ") + what);
        };
        require(sat_busy_ >= 0 && sat_busy_ <= p_.n_f_sat, "satellite pool occupancy");
        require(nf1_pu_ >= 0 &&
                    nf1_pu_ + static_cast<int>(nf1_services_.size()) <= p_.n_f_ter - 1,
                "terrestrial pool occupancy");
        require(static_cast<int>(d2d_services_.size()) <= geom_.d_max, "overlay cap");
        require(!(f1_pu_ && !d2d_services_.empty()), "PU on f1 excludes D2D");
        for (int a : d2d_services_) {
            for (int b : d2d_services_) {
                if (a == b)
                    continue;
                require(distance(services_[a].requester, services_[b].tx_device) >
                            geom_.interference_radius_m,
                        "receiver inside a foreign transmitter range");
            }
        }
    }

    // --- HU requests -----------------------------------------------------

    void handle_request() {
        if (in_window())
            ++counters_.total_requests;
        const int content = draw_content();
        const int requester =
            std::min(static_cast<int>(simdetail::uniform01(arrival_rng_) * devices_.size()),
                     static_cast<int>(devices_.size()) - 1);
        probe_clearance();
        auto &dev = devices_[requester];

        // Every request carries its own workload draw; the serving tier only
        // decides where those bits come from.
        const double size_mbits =
            simdetail::exponential(arrival_rng_, 1.0 / p_.mean_content_mbits);

        const int hit = dev.cache.find(content);
        if (hit >= 0) {
            dev.cache.touch(content, seq_++);
            if (in_window()) {
                ++counters_.local_hits;
                const double bits = size_mbits * 1e6;
                counters_.local_bits += bits;
                counters_.energy_local_j +=
                    (p_.p_dev_tx_w / p_.theta_loc) * (bits / rates_.cap_d2d_bps);
            }
            return;
        }
        const bool in_sat = sat_cache_.contains(content);
        const bool in_bs = bs_cache_.contains(content);
        const int holder = find_d2d_transmitter(requester, content);
        const bool holder_in_range = any_holder_in_range(requester, content);

        const bool sat_usable = idle_sat() > 0 && p_.weights.r_sat > 0.0;
        const bool bs_usable = idle_nf1() > 0 && p_.weights.r_bs > 0.0;
        const bool d2d_open =
            !f1_pu_ && static_cast<int>(d2d_services_.size()) < geom_.d_max &&
            p_.weights.r_dev > 0.0 && !dev.d2d_busy;
        const bool d2d_feasible = d2d_open && holder >= 0 && receiver_clear(requester);

        // Aggregate weights of the feasible direct modes.
        double w_sat = (in_sat && sat_usable) ? p_.weights.r_sat * idle_sat() : 0.0;
        double w_bs = (in_bs && bs_usable) ? p_.weights.r_bs * idle_nf1() : 0.0;
        double w_d2d = d2d_feasible ? p_.weights.r_dev : 0.0;
        const double w_total = w_sat + w_bs + w_d2d;

        if (w_total > 0.0) {
            const double u = simdetail::uniform01(policy_rng_) * w_total;
            if (u < w_sat)
                start_service(kSat, content, size_mbits, requester, -1);
            else if (u < w_sat + w_bs)
                start_service(kBs, content, size_mbits, requester, -1);
            else
                start_service(kD2d, content, size_mbits, requester, holder);
            return;
        }

        // No direct mode: universal source through a relay that lacks the
        // content, when enabled and reachable.
        if (p_.universal_source) {
            const double u_sat = (!in_sat && sat_usable) ? p_.weights.r_sat * idle_sat() : 0.0;
            const double u_bs = (!in_bs && bs_usable) ? p_.weights.r_bs * idle_nf1() : 0.0;
            if (u_sat + u_bs > 0.0) {
                const double u = simdetail::uniform01(policy_rng_) * (u_sat + u_bs);
                if (u < u_sat)
                    start_service(kSatU, content, size_mbits, requester, -1);
                else
                    start_service(kBsU, content, size_mbits, requester, -1);
                return;
            }
        }
        if (in_window()) {
            if (in_sat || in_bs || holder_in_range)
                ++counters_.blocked_no_mode;
            else
                ++counters_.blocked_unavailable;
        }
    }

    int draw_content() {
        double u = simdetail::uniform01(arrival_rng_);
        for (std::size_t i = 0; i < catalog_.popularity.size(); ++i) {
            u -= catalog_.popularity[i];
            if (u <= 0.0)
                return static_cast<int>(i);
        }
        return static_cast<int>(catalog_.popularity.size()) - 1;
    }

    void probe_clearance() {
        const int level = static_cast<int>(d2d_services_.size());
        const int probe =
            std::min(static_cast<int>(simdetail::uniform01(arrival_rng_) * devices_.size()),
                     static_cast<int>(devices_.size()) - 1);
        ++counters_.probe_trials[level];
        if (receiver_clear(probe))
            ++counters_.probe_rx_clear[level];
        bool tx_clear = true;
        for (int sid : d2d_services_) {
            if (distance(probe, services_[sid].requester) <= geom_.interference_radius_m) {
                tx_clear = false;
                break;
            }
        }
        if (tx_clear)
            ++counters_.probe_tx_clear[level];
    }

    bool any_holder_in_range(int requester, int content) const {
        for (const auto &[dist, j] : devices_[requester].neighbors)
            if (devices_[j].cache.contains(content))
                return true;
        return false;
    }

    // The requester must not sit inside the interference range of any active
    // D2D transmitter.
    bool receiver_clear(int requester) const {
        for (int sid : d2d_services_) {
            if (distance(requester, services_[sid].tx_device) <= geom_.interference_radius_m)
                return false;
        }
        return true;
    }

    // Nearest in-range holder that is free, and whose transmission would not
    // interfere with any active D2D receiver.
    int find_d2d_transmitter(int requester, int content) const {
        for (const auto &[dist, j] : devices_[requester].neighbors) {
            if (devices_[j].d2d_busy || !devices_[j].cache.contains(content))
                continue;
            bool clear = true;
            for (int sid : d2d_services_) {
                if (distance(j, services_[sid].requester) <= geom_.interference_radius_m) {
                    clear = false;
                    break;
                }
            }
            if (clear)
                return j;
        }
        return -1;
    }

    void start_service(int mode, int content, double size_mbits, int requester, int tx) {
        simdetail::Service s;
        s.mode = mode;
        s.content = content;
        s.size_mbits = size_mbits;
        s.start = now_;
        s.requester = requester;
        s.tx_device = tx;
        s.alive = true;
        const double bits = size_mbits * 1e6;
        switch (mode) {
        case kSat:
            s.end = now_ + bits / rates_.cap_sat_bps;
            s.leg_boundary = now_;
            ++sat_busy_;
            sat_cache_.touch(content, seq_++);
            break;
        case kSatU:
            s.leg_boundary = now_ + bits / rates_.cap_sat_univ_bps;
            s.end = s.leg_boundary + bits / rates_.cap_sat_bps;
            ++sat_busy_;
            break;
        case kBs:
            s.end = now_ + bits / rates_.cap_bs_bps;
            s.leg_boundary = now_;
            bs_cache_.touch(content, seq_++);
            break;
        case kBsU:
            s.leg_boundary = now_ + bits / rates_.cap_bs_univ_bps;
            s.end = s.leg_boundary + bits / rates_.cap_bs_bps;
            break;
        case kD2d:
            s.end = now_ + bits / rates_.cap_d2d_bps;
            s.leg_boundary = now_;
            devices_[requester].d2d_busy = true;
            devices_[tx].d2d_busy = true;
            break;
        }
        const int id = static_cast<int>(services_.size());
        services_.push_back(s);
        if (mode == kBs || mode == kBsU)
            nf1_services_.push_back(id);
        if (mode == kD2d)
            d2d_services_.push_back(id);
        if (in_window())
            ++counters_.admitted[mode];
        push(simdetail::EventKind::ServiceEnd, s.end, id, 0, 0);
    }

    void handle_service_end(int id) {
        simdetail::Service &s = services_[id];
        if (!s.alive)
            return;
        finish_service(id, /*dropped=*/false);
    }

    // Completion and drop share the teardown; energy is charged for the
    // elapsed span, split at the relay leg boundary for universal modes.
    void finish_service(int id, bool dropped) {
        simdetail::Service &s = services_[id];
        s.alive = false;
        const double bits = s.size_mbits * 1e6;
        switch (s.mode) {
        case kSat:
        case kSatU:
            --sat_busy_;
            break;
        case kBs:
        case kBsU:
            nf1_services_.erase(
                std::find(nf1_services_.begin(), nf1_services_.end(), id));
            break;
        case kD2d:
            d2d_services_.erase(
                std::find(d2d_services_.begin(), d2d_services_.end(), id));
            devices_[s.requester].d2d_busy = false;
            devices_[s.tx_device].d2d_busy = false;
            break;
        }

        if (in_window()) {
            const double elapsed_end = dropped ? now_ : s.end;
            switch (s.mode) {
            case kBs:
                counters_.energy_bs_j += p_.p_bs_ch_w * (elapsed_end - s.start);
                break;
            case kBsU: {
                const double recv = std::min(elapsed_end, s.leg_boundary) - s.start;
                const double tx = std::max(0.0, elapsed_end - s.leg_boundary);
                counters_.energy_bs_u_j +=
                    (p_.p_bs_ch_w / p_.theta_bs) * recv + p_.p_bs_ch_w * tx;
                break;
            }
            case kD2d:
                counters_.energy_d2d_j += p_.p_dev_tx_w * (elapsed_end - s.start);
                break;
            default:
                break; // satellite power is not part of the budget
            }
            if (dropped) {
                ++counters_.dropped[s.mode];
            } else {
                ++counters_.served[s.mode];
                counters_.served_bits[s.mode] += bits;
            }
        }
        if (dropped)
            return;

        // Delivery: universal retrievals refresh the relay cache, every
        // delivery lands in the requester's device cache.
        if (s.mode == kSatU)
            sat_cache_.insert(opt_.policy, s.content, catalog_.popularity, seq_++, policy_rng_);
        if (s.mode == kBsU)
            bs_cache_.insert(opt_.policy, s.content, catalog_.popularity, seq_++, policy_rng_);
        auto &dev = devices_[s.requester];
        if (!dev.cache.contains(s.content)) {
            CacheEntry inserted;
            if (apply_cache_policy(opt_.policy, dev.cache, s.content, s.size_mbits,
                                   p_.cache_dev_mbits, p_.n_hu_loc, catalog_.popularity,
                                   seq_++, policy_rng_, &inserted)) {
                const long gen = seq_++;
                dev.cache.entries.back().generation = gen;
                push(simdetail::EventKind::Expiry,
                     now_ + simdetail::exponential(policy_rng_, 1.0 / p_.ttl_mean_sec),
                     s.requester, s.content, gen);
            }
        }
    }

    // --- PU side ----------------------------------------------------------

    void handle_pu_arrival() {
        if (in_window())
            ++counters_.pu_arrivals;
        // Uniform frequency pick: f1 with probability 1/N_f_ter.
        const bool to_f1 = simdetail::uniform01(arrival_rng_) < 1.0 / p_.n_f_ter;
        if (to_f1) {
            if (f1_pu_) {
                if (in_window())
                    ++counters_.pu_blocked;
                return;
            }
            f1_pu_ = true;
            push(simdetail::EventKind::PuEndF1, next_exp_policy(rates_.mu_pu_ter), -1, 0, 0);
            // Every active overlay operation dies with the PU appearance.
            const std::vector<int> victims = d2d_services_;
            for (int sid : victims)
                finish_service(sid, /*dropped=*/true);
            return;
        }
        if (idle_nf1() > 0) {
            // An HU on the picked frequency relocates within the pool; the
            // pool-level state change is a plain PU admission.
            ++nf1_pu_;
            push(simdetail::EventKind::PuEndNf1, next_exp_policy(rates_.mu_pu_ter), -1, 0, 0);
            return;
        }
        if (nf1_services_.empty()) {
            if (in_window())
                ++counters_.pu_blocked;
            return; // pool fully PU-occupied
        }
        const std::size_t pick = std::min(
            static_cast<std::size_t>(simdetail::uniform01(policy_rng_) * nf1_services_.size()),
            nf1_services_.size() - 1);
        finish_service(nf1_services_[pick], /*dropped=*/true);
        ++nf1_pu_;
        push(simdetail::EventKind::PuEndNf1, next_exp_policy(rates_.mu_pu_ter), -1, 0, 0);
    }
};

inline MetricsReport empirical_metrics(const SimCounters &c,
                                       [[maybe_unused]] const SystemParams &p) {
    if (c.window_sec <= 0.0)
        throw std::invalid_argument("empirical_metrics: empty observation window");
    MetricsReport m;
    const double w = c.window_sec;
    m.lambda_eff_sat = c.admitted[kSat] / w;
    m.lambda_eff_sat_u = c.admitted[kSatU] / w;
    m.lambda_eff_bs = c.admitted[kBs] / w;
    m.lambda_eff_bs_u = c.admitted[kBsU] / w;
    m.lambda_eff_d2d = c.admitted[kD2d] / w;

    const long bs_adm = c.admitted[kBs] + c.admitted[kBsU];
    const long bs_drop = c.dropped[kBs] + c.dropped[kBsU];
    if (bs_adm > 0)
        m.p_drop_bs = static_cast<double>(bs_drop) / bs_adm;
    else
        m.flag_zero_bs_denominator = true;
    if (c.admitted[kD2d] > 0)
        m.p_drop_d2d = static_cast<double>(c.dropped[kD2d]) / c.admitted[kD2d];
    else
        m.flag_zero_d2d_denominator = true;
    if (c.total_requests > 0)
        m.p_local = static_cast<double>(c.local_hits) / c.total_requests;

    m.th_sat_bps = c.served_bits[kSat] / w;
    m.th_sat_u_bps = c.served_bits[kSatU] / w;
    m.th_bs_bps = c.served_bits[kBs] / w;
    m.th_bs_u_bps = c.served_bits[kBsU] / w;
    m.th_d2d_bps = c.served_bits[kD2d] / w;
    m.g_local_bps = c.local_bits / w;
    m.g_hu_bps = m.g_local_bps + m.th_sat_bps + m.th_sat_u_bps + m.th_bs_bps +
                 m.th_bs_u_bps + m.th_d2d_bps;

    m.p_bs_w = c.energy_bs_j / w;
    m.p_bs_u_w = c.energy_bs_u_j / w;
    m.p_d2d_w = c.energy_d2d_j / w;
    m.p_local_w = c.energy_local_j / w;
    m.p_overall_w = m.p_bs_w + m.p_bs_u_w + m.p_d2d_w + m.p_local_w;
    if (m.g_hu_bps > 0.0)
        m.epb_j_per_bit = m.p_overall_w / m.g_hu_bps;
    else
        m.flag_zero_goodput = true;
    return m;
}

inline ReplicationResult run_replication(const SystemParams &params, const SimOptions &options) {
    Simulation sim(params, options);
    return sim.run();
}

// Mean and 95% confidence half-width per metric over replications.
struct Aggregate {
    MetricsReport mean;
    MetricsReport ci95;
};

namespace simdetail {
inline double student_t_975(int df) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                   2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                   2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                   2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                                   2.045,  2.042};
    if (df <= 0)
        return 0.0;
    if (df <= 30)
        return table[df - 1];
    return 1.96;
}
} // namespace simdetail

inline Aggregate aggregate_reports(const std::vector<MetricsReport> &reports) {
    Aggregate agg;
    const int n = static_cast<int>(reports.size());
    if (n == 0)
        throw std::invalid_argument("aggregate_reports: no replications");
    auto fields = [](const MetricsReport &r) {
        return std::vector<double>{
            r.lambda_eff_sat, r.lambda_eff_sat_u, r.lambda_eff_bs, r.lambda_eff_bs_u,
            r.lambda_eff_d2d, r.p_drop_bs,        r.p_drop_d2d,    r.p_local,
            r.th_sat_bps,     r.th_sat_u_bps,     r.th_bs_bps,     r.th_bs_u_bps,
            r.th_d2d_bps,     r.g_local_bps,      r.g_hu_bps,      r.p_bs_w,
            r.p_bs_u_w,       r.p_d2d_w,          r.p_local_w,     r.p_overall_w,
            r.epb_j_per_bit};
    };
    auto assign = [](MetricsReport &r, const std::vector<double> &v) {
        r.lambda_eff_sat = v[0];
        r.lambda_eff_sat_u = v[1];
        r.lambda_eff_bs = v[2];
        r.lambda_eff_bs_u = v[3];
        r.lambda_eff_d2d = v[4];
        r.p_drop_bs = v[5];
        r.p_drop_d2d = v[6];
        r.p_local = v[7];
        r.th_sat_bps = v[8];
        r.th_sat_u_bps = v[9];
        r.th_bs_bps = v[10];
        r.th_bs_u_bps = v[11];
        r.th_d2d_bps = v[12];
        r.g_local_bps = v[13];
        r.g_hu_bps = v[14];
        r.p_bs_w = v[15];
        r.p_bs_u_w = v[16];
        r.p_d2d_w = v[17];
        r.p_local_w = v[18];
        r.p_overall_w = v[19];
        r.epb_j_per_bit = v[20];
    };
    const std::size_t k = fields(reports[0]).size();
    std::vector<double> mean(k, 0.0), half(k, 0.0);
    for (const auto &r : reports) {
        auto v = fields(r);
        for (std::size_t i = 0; i < k; ++i)
            mean[i] += v[i];
    }
    for (double &v : mean)
        v /= n;
    if (n > 1) {
        std::vector<double> var(k, 0.0);
        for (const auto &r : reports) {
            auto v = fields(r);
            for (std::size_t i = 0; i < k; ++i)
                var[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
        }
        const double t = simdetail::student_t_975(n - 1);
        for (std::size_t i = 0; i < k; ++i)
            half[i] = t * std::sqrt(var[i] / (n - 1) / n);
    }
    assign(agg.mean, mean);
    assign(agg.ci95, half);
    return agg;
}

} // namespace hetnet
