#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetnet {

struct NotIrreducibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverDivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sparse CTMC generator: labeled off-diagonal transitions, the diagonal is
// implied as the negated row sum. Duplicate (src,dst) entries accumulate.
struct RateMatrix {
    struct Transition {
        int src;
        int dst;
        double rate;
    };

    int n_states = 0;
    std::vector<Transition> transitions;

    explicit RateMatrix(int n = 0) : n_states(n) {}

    void add(int src, int dst, double rate) {
        if (src < 0 || src >= n_states || dst < 0 || dst >= n_states)
            throw std::invalid_argument("RateMatrix::add: state index out of range");
        if (src == dst)
            throw std::invalid_argument("RateMatrix::add: self-loops are not stored");
        if (rate < 0.0 || !std::isfinite(rate))
            throw std::invalid_argument("RateMatrix::add: rate must be finite and >= 0");
        if (rate == 0.0)
            return;
        transitions.push_back({src, dst, rate});
    }

    // Coalesced copy with duplicate (src,dst) pairs summed, sorted by (src,dst).
    std::vector<Transition> coalesced() const {
        std::vector<Transition> t = transitions;
        std::sort(t.begin(), t.end(), [](const Transition &a, const Transition &b) {
            return a.src != b.src ? a.src < b.src : a.dst < b.dst;
        });
        std::vector<Transition> out;
        out.reserve(t.size());
        for (const Transition &tr : t) {
            if (!out.empty() && out.back().src == tr.src && out.back().dst == tr.dst)
                out.back().rate += tr.rate;
            else
                out.push_back(tr);
        }
        return out;
    }
};

// True iff the directed transition graph is strongly connected.
inline bool check_irreducible(const RateMatrix &m) {
    const int n = m.n_states;
    if (n == 0)
        return false;
    if (n == 1)
        return true;
    std::vector<std::vector<int>> fwd(n), bwd(n);
    for (const auto &t : m.transitions) {
        fwd[t.src].push_back(t.dst);
        bwd[t.dst].push_back(t.src);
    }
    auto reaches_all = [n](const std::vector<std::vector<int>> &adj) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reaches_all(fwd) && reaches_all(bwd);
}

struct StationaryDistribution {
    std::vector<double> probabilities;
    double residual = 0.0; // ||pi Q||_inf at return
    long iterations = 0;   // 0 for the direct path
    bool used_dense = false;
};

enum class SolveMethod { Auto, Dense, Uniformization };

namespace detail {

// max_j |(pi Q)_j| over the coalesced transition list.
inline double residual_inf(const std::vector<double> &pi,
                           const std::vector<RateMatrix::Transition> &trans,
                           const std::vector<double> &diag) {
    std::vector<double> r(pi.size(), 0.0);
    for (std::size_t i = 0; i < pi.size(); ++i)
        r[i] = pi[i] * diag[i];
    for (const auto &t : trans)
        r[t.dst] += pi[t.src] * t.rate;
    double m = 0.0;
    for (double v : r)
        m = std::max(m, std::fabs(v));
    return m;
}

inline void clamp_and_normalize(std::vector<double> &pi) {
    double sum = 0.0;
    for (double &v : pi) {
        if (v < 0.0)
            v = 0.0;
        sum += v;
    }
    if (sum <= 0.0)
        throw SolverDivergedError("stationary solve produced a zero vector");
    for (double &v : pi)
        v /= sum;
}

// Direct solve of pi Q = 0, sum(pi) = 1: Gaussian elimination with partial
// pivoting on Q^T with one balance row replaced by the normalization row.
inline std::vector<double> solve_dense(int n,
                                       const std::vector<RateMatrix::Transition> &trans,
                                       const std::vector<double> &diag) {
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    auto at = [&](int r, int c) -> double & { return a[static_cast<std::size_t>(r) * n + c]; };
    for (int i = 0; i < n; ++i)
        at(i, i) = diag[i];
    for (const auto &t : trans)
        at(t.dst, t.src) += t.rate; // row = equation for state dst, col = pi index
    std::vector<double> b(n, 0.0);
    for (int c = 0; c < n; ++c)
        at(n - 1, c) = 1.0;
    b[n - 1] = 1.0;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(at(col, col));
        for (int r = col + 1; r < n; ++r) {
            double v = std::fabs(at(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0)
            throw SolverDivergedError("dense stationary solve hit a singular pivot");
        if (pivot != col) {
            for (int c = col; c < n; ++c)
                std::swap(at(pivot, c), at(col, c));
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / at(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = at(r, col) * inv;
            if (f == 0.0)
                continue;
            at(r, col) = 0.0;
            for (int c = col + 1; c < n; ++c)
                at(r, c) -= f * at(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c)
            s -= at(r, c) * x[c];
        x[r] = s / at(r, r);
    }
    return x;
}

} // namespace detail

// Solves pi Q = 0 with sum(pi) = 1. Direct dense elimination up to
// `dense_threshold` states, power iteration on the uniformized chain above
// (uniformization constant 1.05 * max |diagonal|). Deterministic.
inline StationaryDistribution solve_stationary(const RateMatrix &m, double tolerance = 1e-10,
                                               SolveMethod method = SolveMethod::Auto,
                                               long max_iterations = 1000000,
                                               int dense_threshold = 2000) {
    if (m.n_states < 1)
        throw std::invalid_argument("solve_stationary: empty chain");
    if (tolerance <= 0.0)
        throw std::invalid_argument("solve_stationary: tolerance must be > 0");
    if (!check_irreducible(m))
        throw NotIrreducibleError("solve_stationary: transition graph is not strongly connected");

    const int n = m.n_states;
    const auto trans = m.coalesced();
    std::vector<double> diag(n, 0.0);
    for (const auto &t : trans)
        diag[t.src] -= t.rate;

    StationaryDistribution out;
    if (n == 1) {
        out.probabilities = {1.0};
        out.used_dense = true;
        return out;
    }

    const bool dense = method == SolveMethod::Dense ||
                       (method == SolveMethod::Auto && n <= dense_threshold);
    if (dense) {
        out.probabilities = detail::solve_dense(n, trans, diag);
        out.used_dense = true;
        detail::clamp_and_normalize(out.probabilities);
        out.residual = detail::residual_inf(out.probabilities, trans, diag);
        if (out.residual > tolerance)
            throw SolverDivergedError("dense stationary solve residual " +
                                      std::to_string(out.residual) + " above tolerance");
        return out;
    }

    double max_diag = 0.0;
    for (double d : diag)
        max_diag = std::max(max_diag, std::fabs(d));
    if (max_diag == 0.0)
        throw SolverDivergedError("uniformization: zero generator");
    const double uni = 1.05 * max_diag;

    std::vector<double> pi(n, 1.0 / n), next(n, 0.0);
    long iter = 0;
    double res = 0.0;
    for (; iter < max_iterations; ++iter) {
        // next = pi + (pi Q) / uni; the residual of the current iterate falls
        // out of the same pass.
        for (int i = 0; i < n; ++i)
            next[i] = pi[i] * diag[i];
        for (const auto &t : trans)
            next[t.dst] += pi[t.src] * t.rate;
        res = 0.0;
        for (int i = 0; i < n; ++i) {
            res = std::max(res, std::fabs(next[i]));
            next[i] = pi[i] + next[i] / uni;
        }
        if (res <= tolerance)
            break;
        if ((iter & 63) == 0) {
            double sum = 0.0;
            for (double v : next)
                sum += v;
            for (double &v : next)
                v /= sum;
        }
        pi.swap(next);
    }
    out.probabilities = std::move(pi);
    out.iterations = iter;
    detail::clamp_and_normalize(out.probabilities);
    out.residual = detail::residual_inf(out.probabilities, trans, diag);
    if (out.residual > tolerance)
        throw SolverDivergedError("uniformization hit the iteration cap at residual " +
                                  std::to_string(out.residual));
    return out;
}

} // namespace hetnet
