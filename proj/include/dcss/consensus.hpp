#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dcss/channel.hpp"
#include "dcss/errors.hpp"
#include "dcss/rng.hpp"

namespace dcss {

// Undirected SU communication graph with its Metropolis-Hastings weight
// matrix (row-major n_sus x n_sus). Immutable after construction and safe to
// share read-only between trials.
struct SensorNetwork {
    int n_sus = 0;
    std::vector<std::pair<int, int>> edges;  // i < j, 0-based
    std::vector<int> degrees;
    std::vector<double> weights;  // W, row-major

    double w(int i, int j) const { return weights[static_cast<std::size_t>(i) * n_sus + j]; }

    // Debug/visualization export: one "i j" pair per line, 0-based.
    std::string edge_list() const {
        std::ostringstream os;
        for (const auto& [i, j] : edges) os << i << ' ' << j << '\n';
        return os.str();
    }
};

// W_ij = 1 / max(d_i, d_j) on edges, W_ii = 1 - sum of the row, zero
// elsewhere. Doubly stochastic and symmetric by construction.
inline std::vector<double> metropolis_weights(int n,
                                              const std::vector<std::pair<int, int>>& edges,
                                              const std::vector<int>& degrees) {
    std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
    for (const auto& [i, j] : edges) {
        const double wij = 1.0 / std::max(degrees[i], degrees[j]);
        w[static_cast<std::size_t>(i) * n + j] = wij;
        w[static_cast<std::size_t>(j) * n + i] = wij;
    }
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) off += w[static_cast<std::size_t>(i) * n + j];
        w[static_cast<std::size_t>(i) * n + i] = 1.0 - off;
    }
    return w;
}

namespace detail {

inline bool connected(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n <= 1) return true;
    std::vector<std::vector<int>> adj(n);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
    }
    return count == n;
}

}  // namespace detail

// Uniformly random connected graph with round(c * N(N-1)/2) edges; rejection
// sampled until connected (bounded).
inline SensorNetwork generate_network(int n, double connectivity, RngStream& rng) {
    if (n < 1) throw config_error("generate_network: need at least one SU");
    if (!(connectivity > 0.0 && connectivity <= 1.0))
        throw config_error("generate_network: connectivity must be in (0,1]");
    const long n_pairs = static_cast<long>(n) * (n - 1) / 2;
    const long n_edges = std::lround(connectivity * static_cast<double>(n_pairs));
    if (n_edges < n - 1)
        throw config_error("generate_network: connectivity too small for a connected graph");

    std::vector<std::pair<int, int>> all_pairs;
    all_pairs.reserve(n_pairs);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) all_pairs.emplace_back(i, j);

    constexpr int max_attempts = 10000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        rng.shuffle(all_pairs.begin(), all_pairs.end());
        std::vector<std::pair<int, int>> edges(all_pairs.begin(), all_pairs.begin() + n_edges);
        if (!detail::connected(n, edges)) continue;
        SensorNetwork net;
        net.n_sus = n;
        std::sort(edges.begin(), edges.end());
        net.edges = std::move(edges);
        net.degrees.assign(n, 0);
        for (const auto& [i, j] : net.edges) {
            ++net.degrees[i];
            ++net.degrees[j];
        }
        net.weights = metropolis_weights(n, net.edges, net.degrees);
        return net;
    }
    throw config_error("generate_network: no connected graph found after bounded rejections");
}

// One consensus run over a shared scalar per SU.
struct ConsensusRun {
    std::vector<std::vector<double>> trace;  // trace[k] = values after k iterations
    int iterations = 0;
    double consensus_value = 0.0;  // mean of the final iterate
    bool converged = true;
};

// Iterates y(k) = W y(k-1) until every SU is within tol * max(|mean|, 1e-12)
// of the initial mean, or until max_iter (flagged, not fatal). The trace is
// recorded only when keep_trace is set; Monte Carlo callers skip it.
inline ConsensusRun run_consensus(const std::vector<double>& initial,
                                  const std::vector<double>& w, double tol, int max_iter,
                                  bool keep_trace = false) {
    if (!(tol > 0.0)) throw config_error("run_consensus: tol must be positive");
    const int n = static_cast<int>(initial.size());
    const double mean = std::accumulate(initial.begin(), initial.end(), 0.0) / n;
    const double threshold = tol * std::max(std::abs(mean), 1e-12);

    ConsensusRun run;
    std::vector<double> y = initial;
    std::vector<double> next(n);
    if (keep_trace) run.trace.push_back(y);

    auto max_dev = [&](const std::vector<double>& v) {
        double d = 0.0;
        for (double x : v) d = std::max(d, std::abs(x - mean));
        return d;
    };

    int k = 0;
    while (max_dev(y) > threshold) {
        if (k >= max_iter) {
            run.converged = false;
            break;
        }
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = &w[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) acc += row[j] * y[j];
            next[i] = acc;
        }
        y.swap(next);
        ++k;
        if (keep_trace) run.trace.push_back(y);
    }
    run.iterations = k;
    run.consensus_value = std::accumulate(y.begin(), y.end(), 0.0) / n;
    return run;
}

// Column-wise consensus over an N x D matrix of per-SU windows.
struct ConsensusWindowResult {
    ObservationWindow window;        // the value all SUs hold per interval
    std::vector<int> iterations;     // per window index
    std::vector<char> converged;     // per window index
    bool all_converged = true;
};

// Runs run_consensus independently on each window index. Returns the
// per-interval consensus values (the mean of the final iterate, which double
// stochasticity pins to the initial per-column mean).
inline ConsensusWindowResult consensus_window(const std::vector<std::vector<double>>& su_windows,
                                              const SensorNetwork& net, double tol,
                                              int max_iter) {
    const std::size_t n = su_windows.size();
    if (n == 0) throw config_error("consensus_window: no SU windows");
    const std::size_t d = su_windows[0].size();
    for (const auto& w : su_windows)
        if (w.size() != d) throw config_error("consensus_window: ragged SU windows");

    ConsensusWindowResult res;
    res.window.samples.resize(d);
    res.iterations.resize(d);
    res.converged.resize(d);
    std::vector<double> column(n);
    for (std::size_t idx = 0; idx < d; ++idx) {
        for (std::size_t i = 0; i < n; ++i) column[i] = su_windows[i][idx];
        const ConsensusRun run = run_consensus(column, net.weights, tol, max_iter);
        res.window.samples[idx] = run.consensus_value;
        res.iterations[idx] = run.iterations;
        res.converged[idx] = run.converged ? 1 : 0;
        if (!run.converged) res.all_converged = false;
    }
    return res;
}

}  // namespace dcss
