#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dcss/channel.hpp"
#include "dcss/consensus.hpp"
#include "dcss/detectors.hpp"
#include "dcss/hmm.hpp"
#include "dcss/io.hpp"
#include "dcss/rng.hpp"
#include "dcss/scenario.hpp"

namespace dcss {

// One output row of any experiment; unset fields stay empty in the files.
struct MetricRecord {
    std::string scenario;
    std::string detector;
    std::optional<double> snr_db;
    std::optional<long long> l;
    std::optional<double> pf_target;
    std::optional<double> pf_emp;
    std::optional<double> pd_emp;
    std::optional<double> auc;
    std::optional<double> estimation_error;
    std::optional<double> mse_theta;
    std::optional<double> consensus_iterations;
    std::optional<double> em_iterations;
    std::optional<long long> trials;
    std::optional<long long> excluded;
    std::string warning;
};

inline Table records_table(const std::vector<MetricRecord>& records) {
    Table t;
    t.columns = {"scenario",  "detector",         "snr_db",
                 "L",         "pf_target",        "pf_emp",
                 "pd_emp",    "auc",              "estimation_error",
                 "mse_theta", "consensus_iterations", "em_iterations",
                 "trials",    "excluded",         "warning"};
    auto opt_d = [](const std::optional<double>& v) -> Cell {
        if (v) return *v;
        return std::monostate{};
    };
    auto opt_i = [](const std::optional<long long>& v) -> Cell {
        if (v) return *v;
        return std::monostate{};
    };
    for (const auto& r : records)
        t.add_row({r.scenario, r.detector, opt_d(r.snr_db), opt_i(r.l), opt_d(r.pf_target),
                   opt_d(r.pf_emp), opt_d(r.pd_emp), opt_d(r.auc), opt_d(r.estimation_error),
                   opt_d(r.mse_theta), opt_d(r.consensus_iterations), opt_d(r.em_iterations),
                   opt_i(r.trials), opt_i(r.excluded), r.warning});
    return t;
}

inline void emit_results(const std::vector<MetricRecord>& records, const std::string& path,
                         OutputFormat format) {
    write_table(records_table(records), path, format);
}

namespace detail {

// Trial indices are handed out through an atomic counter so the schedule is
// work-stealing, while every result lands in its own slot; outputs do not
// depend on the worker count.
template <typename Fn>
inline void parallel_for(long long n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (long long t = 0; t < n; ++t) fn(t);
        return;
    }
    std::atomic<long long> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto work = [&] {
        while (true) {
            const long long t = next.fetch_add(1);
            if (t >= n) break;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<long long>(workers, n));
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Type-7 quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& v, double p) {
    if (v.empty()) throw config_error("quantile of an empty sample");
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double f = h - static_cast<double>(lo);
    return v[lo] + (v[lo + 1] - v[lo]) * f;
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Stream roles within one trial.
constexpr std::uint64_t role_states = 0;
constexpr std::uint64_t role_network = 1;
constexpr std::uint64_t role_su_base = 16;

inline std::uint64_t calibration_seed(std::uint64_t master) {
    return mix(splitmix64(master), 0xCA11Bu);
}

inline std::uint64_t point_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return mix(mix(splitmix64(master), a), b);
}

}  // namespace detail

// The per-interval simulation + consensus front end shared by all
// experiments. With a single SU the consensus step is the identity.
struct TrialWindow {
    ObservationWindow window;  // truth carries the PU state sequence
    double consensus_iterations = 0.0;  // mean over window indices
    bool consensus_converged = true;
};

inline TrialWindow make_trial_window(const ScenarioConfig& cfg, std::uint64_t seed,
                                     long long trial) {
    const auto t = static_cast<std::uint64_t>(trial);
    RngStream rng_states = RngStream::derive(seed, {t, detail::role_states});
    StateVector states = simulate_pu_states(cfg.channel, cfg.window_length, rng_states);

    TrialWindow tw;
    if (cfg.n_sus == 1) {
        RngStream rng = RngStream::derive(seed, {t, detail::role_su_base});
        tw.window = generate_window(cfg.channel, states, rng);
    } else {
        RngStream rng_net = RngStream::derive(seed, {t, detail::role_network});
        const SensorNetwork net = generate_network(cfg.n_sus, cfg.connectivity, rng_net);
        std::vector<std::vector<double>> su_windows(cfg.n_sus);
        for (int i = 0; i < cfg.n_sus; ++i) {
            RngStream rng = RngStream::derive(seed, {t, detail::role_su_base + i});
            su_windows[i] = generate_window(cfg.channel, states, rng).samples;
        }
        ConsensusWindowResult cw =
            consensus_window(su_windows, net, cfg.consensus_tol, cfg.consensus_max_iter);
        tw.window = std::move(cw.window);
        double sum = 0.0;
        for (int it : cw.iterations) sum += it;
        tw.consensus_iterations = sum / static_cast<double>(cw.iterations.size());
        tw.consensus_converged = cw.all_converged;
    }
    tw.window.truth = std::move(states);
    return tw;
}

struct DetectorOutcome {
    bool present = false;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    bool excluded = false;
    double sum_w_sq = std::numeric_limits<double>::quiet_NaN();  // matched-weight detectors
    int em_iterations = 0;
    bool em_fallback = false;
    double estimation_error = std::numeric_limits<double>::quiet_NaN();
    ModelParams theta;
    bool has_theta = false;
};

struct TrialResult {
    int present_state = 0;
    double consensus_iterations = 0.0;
    bool consensus_converged = true;
    std::array<DetectorOutcome, detector_kind_count> outcomes{};

    const DetectorOutcome& outcome(DetectorKind k) const {
        return outcomes[static_cast<int>(k)];
    }
};

// One full Monte Carlo cycle: PU states, per-SU windows, consensus, then
// every configured statistic on the shared window. Oracle matched-sample
// detection uses the ground-truth states; the estimation-based detector runs
// the full fit. Consensus or EM failures mark the affected outcomes excluded.
inline TrialResult run_trial(const ScenarioConfig& cfg, std::uint64_t seed, long long trial) {
    TrialWindow tw = make_trial_window(cfg, seed, trial);
    const StateVector& truth = *tw.window.truth;

    TrialResult res;
    res.present_state = truth.back();
    res.consensus_iterations = tw.consensus_iterations;
    res.consensus_converged = tw.consensus_converged;

    for (const DetectorSpec& spec : cfg.detectors) {
        DetectorOutcome& out = res.outcomes[static_cast<int>(spec.kind)];
        out.present = true;
        switch (spec.kind) {
            case DetectorKind::ed:
                out.statistic = tw.window.samples.back();
                break;
            case DetectorKind::wsed:
                out.statistic = wsed_statistic(
                    tw.window, static_cast<std::size_t>(spec.wsed_past_samples) + 1);
                break;
            case DetectorKind::ied:
                out.statistic = ied_statistic(tw.window);
                break;
            case DetectorKind::msed:
                out.statistic =
                    msed_statistic(tw.window, static_cast<std::size_t>(spec.msed_slots));
                break;
            case DetectorKind::mwsed_oracle: {
                const std::vector<std::size_t> sel = matched_indices(truth);
                const std::vector<double> w = selection_weights(spec.mwsed_scheme, sel);
                double t_stat = 0.0, wsq = 0.0;
                for (std::size_t k = 0; k < sel.size(); ++k) {
                    t_stat += w[k] * tw.window.samples[sel[k]];
                    wsq += w[k] * w[k];
                }
                out.statistic = t_stat;
                out.sum_w_sq = wsq;
                break;
            }
            case DetectorKind::em_mwsed: {
                const EmMwsedResult r =
                    em_mwsed_detect(tw.window, cfg.em, spec.em_scheme,
                                    std::numeric_limits<double>::infinity());
                out.statistic = r.statistic;
                out.em_iterations = r.em_iterations;
                out.em_fallback = r.fallback;
                if (r.fallback) {
                    out.excluded = true;
                } else {
                    out.theta = r.params;
                    out.has_theta = true;
                    std::size_t wrong = 0;
                    for (std::size_t k = 0; k < truth.size(); ++k)
                        if (r.states[k] != truth[k]) ++wrong;
                    out.estimation_error =
                        static_cast<double>(wrong) / static_cast<double>(truth.size());
                }
                break;
            }
        }
        if (!tw.consensus_converged) out.excluded = true;
    }
    return res;
}

// Trapezoid area under the sorted (pf, pd) points with (0,0) and (1,1)
// appended.
inline double roc_auc(std::vector<std::pair<double, double>> points) {
    points.emplace_back(0.0, 0.0);
    points.emplace_back(1.0, 1.0);
    std::sort(points.begin(), points.end());
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k)
        area += (points[k].first - points[k - 1].first) *
                (points[k].second + points[k - 1].second) * 0.5;
    return area;
}

struct RocPoint {
    double pf_target = 0.0;
    double pf_emp = 0.0;
    double pd_emp = 0.0;
};

struct RocCurve {
    DetectorKind kind = DetectorKind::ed;
    std::vector<RocPoint> points;
    double auc = 0.0;
    long long h0_trials = 0;
    long long h1_trials = 0;
    long long excluded = 0;
    std::string warning;
    double em_iterations_mean = std::numeric_limits<double>::quiet_NaN();
};

struct RocSweepResult {
    std::vector<RocCurve> curves;
    double consensus_iterations_mean = 0.0;
    std::vector<MetricRecord> records;

    const RocCurve& curve(DetectorKind k) const {
        for (const auto& c : curves)
            if (c.kind == k) return c;
        throw config_error("roc curve not present for detector " + detector_name(k));
    }
};

namespace detail {

inline bool quantile_calibrated(DetectorKind k) {
    return k == DetectorKind::wsed || k == DetectorKind::ied || k == DetectorKind::msed ||
           k == DetectorKind::em_mwsed;
}

}  // namespace detail

// ROC sweep over the configured false-alarm grid. Thresholds are analytic
// where closed-form idle moments exist (plain energy detection and the
// oracle matched-sample statistic) and come from idle-conditioned empirical
// quantiles of an independently seeded calibration run everywhere else.
inline RocSweepResult roc_sweep(const ScenarioConfig& cfg_in) {
    ScenarioConfig cfg = cfg_in;
    if (cfg.pf_grid.empty()) cfg.pf_grid = default_pf_grid();
    cfg.validate();

    std::vector<TrialResult> trials(cfg.trials);
    detail::parallel_for(cfg.trials, cfg.workers,
                         [&](long long t) { trials[t] = run_trial(cfg, cfg.master_seed, t); });

    bool needs_calibration = false;
    for (const auto& spec : cfg.detectors)
        if (detail::quantile_calibrated(spec.kind)) needs_calibration = true;

    std::array<std::vector<double>, detector_kind_count> cal_h0;
    if (needs_calibration) {
        const long long n_cal = cfg.effective_calibration_trials();
        std::vector<TrialResult> cal(n_cal);
        const std::uint64_t cal_seed = detail::calibration_seed(cfg.master_seed);
        detail::parallel_for(n_cal, cfg.workers,
                             [&](long long t) { cal[t] = run_trial(cfg, cal_seed, t); });
        for (const TrialResult& tr : cal) {
            if (tr.present_state != 0) continue;
            for (const auto& spec : cfg.detectors) {
                if (!detail::quantile_calibrated(spec.kind)) continue;
                const DetectorOutcome& out = tr.outcome(spec.kind);
                if (!out.excluded) cal_h0[static_cast<int>(spec.kind)].push_back(out.statistic);
            }
        }
        for (auto& v : cal_h0) std::sort(v.begin(), v.end());
    }

    const EdMoments m = ed_moments(cfg.channel);
    RocSweepResult result;
    {
        double s = 0.0;
        for (const auto& tr : trials) s += tr.consensus_iterations;
        result.consensus_iterations_mean = s / static_cast<double>(trials.size());
    }

    for (const DetectorSpec& spec : cfg.detectors) {
        RocCurve curve;
        curve.kind = spec.kind;
        const int ki = static_cast<int>(spec.kind);

        if (detail::quantile_calibrated(spec.kind) && cal_h0[ki].empty())
            throw config_error("roc_sweep: no idle-hypothesis calibration samples for " +
                               detector_name(spec.kind));

        for (const TrialResult& tr : trials) {
            const DetectorOutcome& out = tr.outcome(spec.kind);
            if (out.excluded) {
                ++curve.excluded;
                continue;
            }
            if (tr.present_state == 0)
                ++curve.h0_trials;
            else
                ++curve.h1_trials;
        }

        for (double pf : cfg.pf_grid) {
            long long fa = 0, det = 0;
            const double z = q_inverse(pf);
            double fixed_lambda = std::numeric_limits<double>::quiet_NaN();
            if (spec.kind == DetectorKind::ed)
                fixed_lambda = m.mu0 + std::sqrt(m.var0) * z;
            else if (detail::quantile_calibrated(spec.kind))
                fixed_lambda = detail::quantile_sorted(cal_h0[ki], 1.0 - pf);

            for (const TrialResult& tr : trials) {
                const DetectorOutcome& out = tr.outcome(spec.kind);
                if (out.excluded) continue;
                double lambda = fixed_lambda;
                if (spec.kind == DetectorKind::mwsed_oracle)
                    lambda = m.mu0 + std::sqrt(m.var0 * out.sum_w_sq) * z;
                const bool active = decide(out.statistic, lambda) == Hypothesis::active;
                if (tr.present_state == 0)
                    fa += active;
                else
                    det += active;
            }
            RocPoint point;
            point.pf_target = pf;
            point.pf_emp = curve.h0_trials ? static_cast<double>(fa) / curve.h0_trials : 0.0;
            point.pd_emp = curve.h1_trials ? static_cast<double>(det) / curve.h1_trials : 0.0;
            curve.points.push_back(point);
        }

        std::vector<std::pair<double, double>> pts;
        for (const RocPoint& p : curve.points) pts.emplace_back(p.pf_emp, p.pd_emp);
        curve.auc = roc_auc(std::move(pts));
        if (curve.h0_trials < 100 || curve.h1_trials < 100) curve.warning = "low-trial-count";

        if (spec.kind == DetectorKind::em_mwsed) {
            double s = 0.0;
            long long n = 0;
            for (const TrialResult& tr : trials) {
                const DetectorOutcome& out = tr.outcome(spec.kind);
                if (out.present && !out.excluded) {
                    s += out.em_iterations;
                    ++n;
                }
            }
            if (n) curve.em_iterations_mean = s / static_cast<double>(n);
        }
        result.curves.push_back(std::move(curve));
    }

    for (const RocCurve& curve : result.curves) {
        for (const RocPoint& p : curve.points) {
            MetricRecord r;
            r.scenario = cfg.id;
            r.detector = detector_name(curve.kind);
            r.snr_db = cfg.channel.snr_db;
            r.l = cfg.channel.samples_per_interval;
            r.pf_target = p.pf_target;
            r.pf_emp = p.pf_emp;
            r.pd_emp = p.pd_emp;
            r.auc = curve.auc;
            r.consensus_iterations = result.consensus_iterations_mean;
            if (curve.kind == DetectorKind::em_mwsed && std::isfinite(curve.em_iterations_mean))
                r.em_iterations = curve.em_iterations_mean;
            r.trials = cfg.trials;
            r.excluded = curve.excluded;
            r.warning = curve.warning;
            result.records.push_back(std::move(r));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// State-estimation error over an (SNR, L) grid.

struct SurfacePoint {
    double snr_db = 0.0;
    long long l = 0;
    double mean_error = 0.0;
    double median_error = 0.0;
    long long excluded = 0;
    std::vector<double> per_trial_error;
};

struct SurfaceResult {
    std::vector<SurfacePoint> points;
    std::vector<MetricRecord> records;
};

inline SurfaceResult estimation_error_surface(const ScenarioConfig& cfg_in) {
    ScenarioConfig base = cfg_in;
    if (base.snr_list.empty()) base.snr_list = {base.channel.snr_db};
    if (base.l_list.empty()) base.l_list = {base.channel.samples_per_interval};
    DetectorSpec em_spec;
    em_spec.kind = DetectorKind::em_mwsed;
    if (const DetectorSpec* s = base.find(DetectorKind::em_mwsed)) em_spec = *s;
    base.detectors = {em_spec};

    SurfaceResult result;
    for (std::size_t is = 0; is < base.snr_list.size(); ++is) {
        for (std::size_t il = 0; il < base.l_list.size(); ++il) {
            ScenarioConfig cfg = base;
            cfg.channel.snr_db = base.snr_list[is];
            cfg.channel.samples_per_interval = static_cast<int>(base.l_list[il]);
            cfg.validate();
            const std::uint64_t seed = detail::point_seed(base.master_seed, is, il);

            std::vector<TrialResult> trials(cfg.trials);
            detail::parallel_for(cfg.trials, cfg.workers,
                                 [&](long long t) { trials[t] = run_trial(cfg, seed, t); });

            SurfacePoint point;
            point.snr_db = cfg.channel.snr_db;
            point.l = cfg.channel.samples_per_interval;
            for (const TrialResult& tr : trials) {
                const DetectorOutcome& out = tr.outcome(DetectorKind::em_mwsed);
                if (out.excluded)
                    ++point.excluded;
                else
                    point.per_trial_error.push_back(out.estimation_error);
            }
            point.mean_error = detail::mean_of(point.per_trial_error);
            point.median_error = detail::median_of(point.per_trial_error);

            MetricRecord r;
            r.scenario = cfg.id;
            r.detector = "em-mwsed";
            r.snr_db = point.snr_db;
            r.l = point.l;
            r.estimation_error = point.mean_error;
            r.trials = cfg.trials;
            r.excluded = point.excluded;
            result.records.push_back(std::move(r));
            result.points.push_back(std::move(point));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parameter-estimation convergence trace at one channel point.

struct MseTraceResult {
    std::vector<double> average_trace;       // per EM iteration, trials padded by
                                             // their terminal value
    std::vector<double> final_mse;           // per non-excluded trial
    std::vector<double> iterations;          // per non-excluded trial
    long long excluded = 0;
    std::vector<MetricRecord> records;
};

inline MseTraceResult mse_trace(const ScenarioConfig& cfg_in) {
    ScenarioConfig cfg = cfg_in;
    cfg.validate();
    const EdMoments m = ed_moments(cfg.channel);
    const std::array<double, 6> truth = {m.mu0,          m.var0,         m.mu1,
                                         m.var1,         cfg.channel.alpha, cfg.channel.beta};

    std::vector<std::vector<double>> traces(cfg.trials);
    std::vector<char> ok(cfg.trials, 0);
    detail::parallel_for(cfg.trials, cfg.workers, [&](long long t) {
        TrialWindow tw = make_trial_window(cfg, cfg.master_seed, t);
        if (!tw.consensus_converged) return;
        try {
            ModelParams init = kmeans_init(tw.window);
            const auto [a, b] = grid_init_transitions(tw.window, init);
            init.alpha = a;
            init.beta = b;
            std::vector<double>& trace = traces[t];
            run_em(tw.window, init, cfg.em.tol, cfg.em.max_iter,
                   [&](int, const ModelParams& p, double) {
                       const std::array<double, 6> est = {p.mu0, p.var0, p.mu1,
                                                          p.var1, p.alpha, p.beta};
                       double sq = 0.0;
                       for (int i = 0; i < 6; ++i)
                           sq += (est[i] - truth[i]) * (est[i] - truth[i]);
                       trace.push_back(std::sqrt(sq));
                   });
            ok[t] = 1;
        } catch (const degenerate_input_error&) {
        } catch (const degenerate_component_error&) {
        } catch (const numerical_error&) {
        }
    });

    MseTraceResult result;
    std::size_t max_len = 0;
    for (long long t = 0; t < cfg.trials; ++t) {
        if (!ok[t] || traces[t].empty()) {
            ++result.excluded;
            continue;
        }
        max_len = std::max(max_len, traces[t].size());
        result.final_mse.push_back(traces[t].back());
        result.iterations.push_back(static_cast<double>(traces[t].size()));
    }
    result.average_trace.assign(max_len, 0.0);
    long long used = cfg.trials - result.excluded;
    if (used > 0) {
        for (long long t = 0; t < cfg.trials; ++t) {
            if (!ok[t] || traces[t].empty()) continue;
            for (std::size_t k = 0; k < max_len; ++k)
                result.average_trace[k] +=
                    k < traces[t].size() ? traces[t][k] : traces[t].back();
        }
        for (double& v : result.average_trace) v /= static_cast<double>(used);
    }

    for (std::size_t k = 0; k < result.average_trace.size(); ++k) {
        MetricRecord r;
        r.scenario = cfg.id;
        r.detector = "em-mwsed";
        r.snr_db = cfg.channel.snr_db;
        r.l = cfg.channel.samples_per_interval;
        r.mse_theta = result.average_trace[k];
        r.em_iterations = static_cast<double>(k + 1);
        r.trials = cfg.trials;
        r.excluded = result.excluded;
        result.records.push_back(std::move(r));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Consensus iteration study (one random network + one sensing interval per
// seed).

struct ConsensusStudyResult {
    std::vector<int> iterations;                            // per seed
    std::vector<char> converged;                            // per seed
    std::vector<std::vector<std::vector<double>>> traces;   // per seed: [k][su]
    double median_iterations = 0.0;
    double mean_iterations = 0.0;
    std::vector<MetricRecord> records;
};

inline ConsensusStudyResult consensus_study(const ScenarioConfig& cfg_in, bool keep_traces) {
    ScenarioConfig cfg = cfg_in;
    cfg.validate();
    ConsensusStudyResult result;
    result.iterations.resize(cfg.trials);
    result.converged.resize(cfg.trials);
    if (keep_traces) result.traces.resize(cfg.trials);

    detail::parallel_for(cfg.trials, cfg.workers, [&](long long t) {
        const auto tu = static_cast<std::uint64_t>(t);
        RngStream rng_net = RngStream::derive(cfg.master_seed, {tu, detail::role_network});
        const SensorNetwork net = generate_network(cfg.n_sus, cfg.connectivity, rng_net);
        RngStream rng_states = RngStream::derive(cfg.master_seed, {tu, detail::role_states});
        const StateVector s = simulate_pu_states(cfg.channel, 1, rng_states);
        std::vector<double> initial(cfg.n_sus);
        for (int i = 0; i < cfg.n_sus; ++i) {
            RngStream rng = RngStream::derive(cfg.master_seed, {tu, detail::role_su_base + i});
            initial[i] = generate_energy_sample(s[0], cfg.channel, rng);
        }
        const ConsensusRun run = run_consensus(initial, net.weights, cfg.consensus_tol,
                                               cfg.consensus_max_iter, keep_traces);
        result.iterations[t] = run.iterations;
        result.converged[t] = run.converged ? 1 : 0;
        if (keep_traces) result.traces[t] = run.trace;
    });

    std::vector<double> iters(result.iterations.begin(), result.iterations.end());
    result.median_iterations = detail::median_of(iters);
    result.mean_iterations = detail::mean_of(iters);

    MetricRecord r;
    r.scenario = cfg.id;
    r.detector = "consensus";
    r.snr_db = cfg.channel.snr_db;
    r.l = cfg.channel.samples_per_interval;
    r.consensus_iterations = result.median_iterations;
    r.trials = cfg.trials;
    long long failed = 0;
    for (char c : result.converged)
        if (!c) ++failed;
    r.excluded = failed;
    if (failed) r.warning = "non-converged-seeds";
    result.records.push_back(std::move(r));
    return result;
}

// ---------------------------------------------------------------------------
// Detection probability at a fixed matched false-alarm rate, across SNR.
// Thresholds for every detector come from idle-conditioned quantiles of a
// calibration run, so the comparison happens at matched empirical rates.

struct PdVsSnrPoint {
    DetectorKind kind = DetectorKind::ed;
    double snr_db = 0.0;
    double threshold = 0.0;
    double pf_emp = 0.0;
    double pd_emp = 0.0;
    long long excluded = 0;
};

struct PdVsSnrResult {
    std::vector<PdVsSnrPoint> points;
    std::vector<MetricRecord> records;

    const PdVsSnrPoint& point(DetectorKind k, double snr) const {
        for (const auto& p : points)
            if (p.kind == k && p.snr_db == snr) return p;
        throw config_error("pd_vs_snr: point not found");
    }
};

inline PdVsSnrResult pd_vs_snr(const ScenarioConfig& cfg_in) {
    ScenarioConfig base = cfg_in;
    if (base.snr_list.empty()) base.snr_list = {base.channel.snr_db};
    PdVsSnrResult result;

    for (std::size_t is = 0; is < base.snr_list.size(); ++is) {
        ScenarioConfig cfg = base;
        cfg.channel.snr_db = base.snr_list[is];
        cfg.validate();
        const std::uint64_t seed = detail::point_seed(base.master_seed, 0x9d, is);
        const std::uint64_t cal_seed = detail::calibration_seed(seed);

        const long long n_cal = cfg.effective_calibration_trials();
        std::vector<TrialResult> cal(n_cal);
        detail::parallel_for(n_cal, cfg.workers,
                             [&](long long t) { cal[t] = run_trial(cfg, cal_seed, t); });
        std::array<std::vector<double>, detector_kind_count> cal_h0;
        for (const TrialResult& tr : cal) {
            if (tr.present_state != 0) continue;
            for (const auto& spec : cfg.detectors) {
                const DetectorOutcome& out = tr.outcome(spec.kind);
                if (!out.excluded) cal_h0[static_cast<int>(spec.kind)].push_back(out.statistic);
            }
        }
        for (auto& v : cal_h0) std::sort(v.begin(), v.end());

        std::vector<TrialResult> trials(cfg.trials);
        detail::parallel_for(cfg.trials, cfg.workers,
                             [&](long long t) { trials[t] = run_trial(cfg, seed, t); });

        for (const auto& spec : cfg.detectors) {
            const int ki = static_cast<int>(spec.kind);
            if (cal_h0[ki].empty())
                throw config_error("pd_vs_snr: no idle calibration samples for " +
                                   detector_name(spec.kind));
            const double lambda =
                detail::quantile_sorted(cal_h0[ki], 1.0 - cfg.pd_target_pf);
            long long h0 = 0, h1 = 0, fa = 0, det = 0, excl = 0;
            for (const TrialResult& tr : trials) {
                const DetectorOutcome& out = tr.outcome(spec.kind);
                if (out.excluded) {
                    ++excl;
                    continue;
                }
                const bool active = decide(out.statistic, lambda) == Hypothesis::active;
                if (tr.present_state == 0) {
                    ++h0;
                    fa += active;
                } else {
                    ++h1;
                    det += active;
                }
            }
            PdVsSnrPoint point;
            point.kind = spec.kind;
            point.snr_db = cfg.channel.snr_db;
            point.threshold = lambda;
            point.pf_emp = h0 ? static_cast<double>(fa) / h0 : 0.0;
            point.pd_emp = h1 ? static_cast<double>(det) / h1 : 0.0;
            point.excluded = excl;

            MetricRecord r;
            r.scenario = cfg.id;
            r.detector = detector_name(spec.kind);
            r.snr_db = cfg.channel.snr_db;
            r.l = cfg.channel.samples_per_interval;
            r.pf_target = cfg.pd_target_pf;
            r.pf_emp = point.pf_emp;
            r.pd_emp = point.pd_emp;
            r.trials = cfg.trials;
            r.excluded = excl;
            if (h0 < 100 || h1 < 100) r.warning = "low-trial-count";
            result.records.push_back(std::move(r));
            result.points.push_back(point);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Distribution of the matched-sample statistic for controlled selection
// sizes, idle and active. States are a two-block pattern so exactly C window
// samples share the present state; no network averaging is involved.

struct DistPoint {
    long long c = 0;
    int hypothesis = 0;
    double mean = 0.0;
    double variance = 0.0;
    double analytic_mean = 0.0;
    double analytic_variance = 0.0;
    std::vector<double> values;
};

struct DistResult {
    std::vector<DistPoint> points;
    Table summary;
    Table histogram;
};

inline DistResult dist_study(const ScenarioConfig& cfg_in) {
    ScenarioConfig cfg = cfg_in;
    cfg.validate();
    WeightKind scheme = WeightKind::uniform;
    if (const DetectorSpec* s = cfg.find(DetectorKind::mwsed_oracle)) scheme = s->mwsed_scheme;

    DistResult result;
    result.summary.columns = {"scenario", "C",    "hypothesis",    "mean",
                              "variance", "analytic_mean", "analytic_variance", "trials"};
    result.histogram.columns = {"scenario", "C",     "hypothesis", "bin_lo",
                                "bin_hi",   "count", "density"};

    for (std::size_t ic = 0; ic < cfg.dist_c_list.size(); ++ic) {
        const long long c = cfg.dist_c_list[ic];
        if (c < 1 || c > cfg.window_length)
            throw config_error("dist_study: C out of range for the window");
        for (int h = 0; h < 2; ++h) {
            StateVector states(cfg.window_length, static_cast<std::uint8_t>(1 - h));
            for (long long k = 0; k < c; ++k)
                states[cfg.window_length - 1 - k] = static_cast<std::uint8_t>(h);

            std::vector<double> values(cfg.trials);
            detail::parallel_for(cfg.trials, cfg.workers, [&](long long t) {
                RngStream rng = RngStream::derive(
                    cfg.master_seed,
                    {0xD157u, ic, static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(t)});
                const ObservationWindow w = generate_window(cfg.channel, states, rng);
                values[t] = mwsed_statistic(w, states, scheme);
            });

            const std::vector<std::size_t> sel = matched_indices(states);
            const std::vector<double> weights = selection_weights(scheme, sel);
            const MwsedMoments mm = mwsed_moments(weights, cfg.channel);

            DistPoint point;
            point.c = c;
            point.hypothesis = h;
            point.mean = detail::mean_of(values);
            double var = 0.0;
            for (double v : values) var += (v - point.mean) * (v - point.mean);
            point.variance = var / static_cast<double>(values.size() - 1);
            point.analytic_mean = h ? mm.m1 : mm.m0;
            point.analytic_variance = h ? mm.v1sq : mm.v0sq;

            result.summary.add_row({cfg.id, c, static_cast<long long>(h), point.mean,
                                    point.variance, point.analytic_mean,
                                    point.analytic_variance, cfg.trials});

            const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
            const double lo = *mn_it, hi = *mx_it;
            constexpr int n_bins = 60;
            const double width = (hi - lo) / n_bins;
            std::vector<long long> counts(n_bins, 0);
            for (double v : values) {
                int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
                b = std::clamp(b, 0, n_bins - 1);
                ++counts[b];
            }
            for (int b = 0; b < n_bins; ++b)
                result.histogram.add_row(
                    {cfg.id, c, static_cast<long long>(h), lo + b * width, lo + (b + 1) * width,
                     counts[b],
                     width > 0.0
                         ? static_cast<double>(counts[b]) / (cfg.trials * width)
                         : 0.0});

            point.values = std::move(values);
            result.points.push_back(std::move(point));
        }
    }
    return result;
}

}  // namespace dcss
