#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fracreg/fbm.hpp"
#include "fracreg/kernels.hpp"
#include "fracreg/localtime.hpp"
#include "fracreg/rng.hpp"
#include "fracreg/statistics.hpp"

namespace fracreg {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

/// Raised when a plan's parameters fall outside the admissible bandwidth
/// region and no override was requested.
class RegionError : public std::runtime_error {
public:
    explicit RegionError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string region_violation_message(HurstParam h1, HurstParam h2, double alpha) {
    const AdmissibleRegion region = admissible_region(h1, h2);
    std::string msg;
    if (alpha >= region.upper) {
        msg = "alpha = " + std::to_string(alpha) + " violates the upper bound: alpha < 1 - h1 = " +
              std::to_string(region.upper);
    } else {
        msg = "alpha = " + std::to_string(alpha) +
              " violates the lower bound: alpha > max(0, 4*h2 - h1 - 2) = " +
              std::to_string(region.lower);
    }
    if (!region.nonempty())
        msg += "; the admissible region for (h1=" + std::to_string(h1.value) +
               ", h2=" + std::to_string(h2.value) + ") is empty";
    return msg + " (pass --force-region to run anyway)";
}

/// Runs body(0..count-1) on `threads` workers. Each index owns its output
/// slot, so scheduling order never changes results.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
    threads = std::min<std::size_t>(std::max<std::size_t>(threads, 1), std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline double mean_of(std::span<const double> xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

inline double std_error_of(std::span<const double> xs, double mean) {
    if (xs.size() < 2) return kAbsent;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    const double var = acc / static_cast<double>(xs.size() - 1);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

inline double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n == 0) return kAbsent;
    return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

} // namespace detail

/// Default pass thresholds. The limit theorems come without rates, so these
/// are desk-scale calibrations, frozen here rather than tuned per run.
inline std::map<std::string, double> default_tolerances() {
    return {
        {"variance_rel_error", 0.15},
        {"bracket_ratio_dev", 0.15},
        {"bracket_mean_rel_error", 0.10},
        {"limit_ks", 0.08},
        {"conditional_extra", 0.0},
    };
}

/// A full experiment description: model parameters, grid sizes, replicate
/// count, seeding, and pass tolerances. JSON-serializable (see io.hpp).
struct ExperimentPlan {
    ModelConfig config;
    std::vector<std::size_t> n_list;
    std::size_t replicates = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> lambda_grid;
    std::map<std::string, double> tolerances = default_tolerances();
    bool force_region = false;
    std::size_t threads = 0;        // 0: FRACREG_THREADS env var, then hardware
    double bandwidth = 0.05;        // occupation band half-width h
    double eps = 0.0;               // heat smoothing variance; 0 means h^2
    std::size_t refinement = 16;    // fine-grid factor for the Riemann check

    double tolerance(const std::string& name) const {
        const auto it = tolerances.find(name);
        if (it != tolerances.end()) return it->second;
        const auto defaults = default_tolerances();
        const auto dit = defaults.find(name);
        return dit != defaults.end() ? dit->second : 0.0;
    }

    double heat_eps() const { return eps > 0.0 ? eps : bandwidth * bandwidth; }

    bool region_ok() const {
        const AdmissibleRegion region = admissible_region(config.h1, config.h2);
        return region.nonempty() && region.contains(config.alpha);
    }

    void validate() const {
        config.validate();
        if (n_list.empty()) throw std::invalid_argument("plan needs a nonempty n_list");
        for (std::size_t k = 1; k < n_list.size(); ++k)
            if (n_list[k] <= n_list[k - 1])
                throw std::invalid_argument("n_list must be strictly increasing");
        if (replicates == 0) throw std::invalid_argument("plan needs at least one replicate");
        if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
        if (refinement < 2) throw std::invalid_argument("refinement factor must be at least 2");
        if (!region_ok() && !force_region)
            throw RegionError(detail::region_violation_message(config.h1, config.h2, config.alpha));
    }

    std::size_t resolved_threads() const {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("FRACREG_THREADS")) {
            const long parsed = std::strtol(env, nullptr, 10);
            if (parsed > 0) return static_cast<std::size_t>(parsed);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? hw : 1;
    }
};

/// One aggregated result line; lambda and ks_distance are NaN when the
/// experiment has no use for them. `extras` carries experiment-specific
/// columns (exact moments, sine parts, diagnostics).
struct McRow {
    std::size_t n = 0;
    double lambda = kAbsent;
    double estimate = kAbsent;
    double std_error = kAbsent;
    double target = kAbsent;
    double rel_error = kAbsent;
    double ks_distance = kAbsent;
    bool pass = false;
    std::map<std::string, double> extras;
};

/// Per-replicate detail emitted by the bracket experiment.
struct BracketReplicateRow {
    std::size_t n = 0;
    std::size_t replicate = 0;
    double bracket_implied = 0.0;
    double occupation_band = 0.0;
    double heat_smoothed = 0.0;
    double ratio = 0.0;
};

struct McReport {
    ExperimentPlan plan;
    std::vector<McRow> rows;
    std::vector<BracketReplicateRow> bracket_detail;
    double wall_time_seconds = 0.0;
    bool region_override_used = false;

    bool all_pass() const {
        for (const McRow& row : rows)
            if (!row.pass) return false;
        return !rows.empty();
    }
};

/// Two-sample Kolmogorov-Smirnov distance: sup_x |F_a(x) - F_b(x)| by a
/// tie-aware merge scan over the sorted samples.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample requires nonempty samples");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double dist = 0.0;
    while (i < sa.size() || j < sb.size()) {
        double v;
        if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) v = sa[i];
        else v = sb[j];
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        dist = std::max(dist, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return dist;
}

namespace detail {

struct RunGuard {
    explicit RunGuard(const ExperimentPlan& plan) : start(std::chrono::steady_clock::now()) {
        plan.validate();
    }
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    std::chrono::steady_clock::time_point start;
};

/// Statistical power rules shared by all runners: a single replicate carries
/// no standard error, and fewer than 100 replicates never count as evidence.
inline bool inference_allowed(std::size_t replicates) { return replicates >= 100; }

} // namespace detail

/// Checks the variance scaling law: the Monte Carlo mean of
/// n^{alpha+h1-1} S_n^2 against C1, with the error required to shrink along
/// n_list. Also evaluates the exact moment sums for the report.
inline McReport run_variance_experiment(const ExperimentPlan& plan) {
    detail::RunGuard guard(plan);
    McReport report{plan, {}, {}, 0.0, !plan.region_ok()};
    const std::size_t reps = plan.replicates;
    const std::size_t threads = plan.resolved_threads();
    const double target = c1_constant(plan.config.h1);
    double prev_abs_rel = std::numeric_limits<double>::infinity();

    for (const std::size_t n : plan.n_list) {
        ModelConfig config = plan.config;
        config.n = n;
        const CirculantSampler sampler1(n, config.h1);
        const CirculantSampler sampler2(n, config.h2);
        const std::uint64_t seed_n = mix_seed(plan.master_seed, n);

        std::vector<double> values(reps);
        detail::parallel_for(reps, threads, [&](std::size_t r) {
            GaussianStream g1 = seeded_substream(seed_n, r, StreamRole::path1);
            GaussianStream g2 = seeded_substream(seed_n, r, StreamRole::path2);
            const double s = config.statistic_scale() *
                             statistic_value(sampler1.sample(g1), sampler2.sample(g2), config);
            values[r] = s * s;
        });

        McRow row;
        row.n = n;
        row.estimate = detail::mean_of(values);
        row.std_error = detail::std_error_of(values, row.estimate);
        row.target = target;
        row.rel_error = (row.estimate - target) / target;
        row.extras["exact_diag_scaled"] = config.bracket_scale() * exact_diagonal(config);
        row.extras["exact_offdiag_scaled"] =
            (n <= (std::size_t{1} << 14)) ? config.bracket_scale() * exact_offdiagonal(config)
                                          : kAbsent;
        const bool within = std::abs(row.rel_error) <= plan.tolerance("variance_rel_error");
        const bool shrinking = std::abs(row.rel_error) <= prev_abs_rel;
        row.pass = within && shrinking && detail::inference_allowed(reps);
        prev_abs_rel = std::abs(row.rel_error);
        report.rows.push_back(std::move(row));
    }
    report.wall_time_seconds = guard.elapsed();
    return report;
}

/// Checks the bracket-to-local-time law on shared paths: the per-replicate
/// ratio of the bracket-implied estimate to the occupation-band estimate,
/// and the mean normalized bracket against d1 E L = C1.
inline McReport run_bracket_experiment(const ExperimentPlan& plan) {
    detail::RunGuard guard(plan);
    McReport report{plan, {}, {}, 0.0, !plan.region_ok()};
    const std::size_t reps = plan.replicates;
    const std::size_t threads = plan.resolved_threads();
    const double h = plan.bandwidth;
    const double eps = plan.heat_eps();
    const double target_mean = c1_constant(plan.config.h1);

    for (const std::size_t n : plan.n_list) {
        ModelConfig config = plan.config;
        config.n = n;
        const CirculantSampler sampler(n, config.h1);
        const std::uint64_t seed_n = mix_seed(plan.master_seed, n);
        const double occupation_floor = 1.0 / (2.0 * h * static_cast<double>(n));

        std::vector<BracketReplicateRow> detail_rows(reps);
        detail::parallel_for(reps, threads, [&](std::size_t r) {
            GaussianStream g = seeded_substream(seed_n, r, StreamRole::path1);
            const FbmPath path = sampler.sample(g);
            const double implied = bracket_implied_estimate(path, config).value;
            const double occupied = occupation_band_estimate(path, h).value;
            const double smoothed = heat_smoothed_estimate(path, eps).value;
            const double denom = std::max(occupied, occupation_floor);
            detail_rows[r] = {n, r, implied, occupied, smoothed, implied / denom};
        });

        std::vector<double> ratios(reps), implied(reps), occupied(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            ratios[r] = detail_rows[r].ratio;
            implied[r] = detail_rows[r].bracket_implied;
            occupied[r] = detail_rows[r].occupation_band;
        }
        McRow row;
        row.n = n;
        row.estimate = detail::mean_of(ratios);
        row.std_error = detail::std_error_of(ratios, row.estimate);
        row.target = 1.0;
        row.rel_error = row.estimate - 1.0;

        const double implied_mean = detail::mean_of(implied);
        const double bracket_norm_mean = implied_mean * kernel_l2_norm();
        row.extras["bracket_norm_mean"] = bracket_norm_mean;
        row.extras["bracket_norm_rel_error"] = (bracket_norm_mean - target_mean) / target_mean;
        row.extras["ratio_of_means"] = implied_mean / detail::mean_of(occupied);

        const bool degenerate = (n <= 1);
        if (degenerate) row.extras["degenerate"] = 1.0;
        row.pass = !degenerate && detail::inference_allowed(reps) &&
                   std::abs(row.rel_error) <= plan.tolerance("bracket_ratio_dev") &&
                   std::abs(row.extras["bracket_norm_rel_error"]) <=
                       plan.tolerance("bracket_mean_rel_error");
        report.rows.push_back(std::move(row));
        report.bracket_detail.insert(report.bracket_detail.end(), detail_rows.begin(),
                                     detail_rows.end());
    }
    report.wall_time_seconds = guard.elapsed();
    return report;
}

/// Checks the mixed-normal limit law: the normalized statistic against
/// sqrt(d1 L) Z with L estimated from independent paths, compared by the
/// two-sample KS distance, plus characteristic-function gaps on the lambda
/// grid.
inline McReport run_limit_experiment(const ExperimentPlan& plan) {
    detail::RunGuard guard(plan);
    McReport report{plan, {}, {}, 0.0, !plan.region_ok()};
    const std::size_t reps = plan.replicates;
    const std::size_t threads = plan.resolved_threads();
    const double d1 = kernel_l2_norm();
    const double h = plan.bandwidth;
    double prev_ks = std::numeric_limits<double>::infinity();

    for (std::size_t idx = 0; idx < plan.n_list.size(); ++idx) {
        const std::size_t n = plan.n_list[idx];
        ModelConfig config = plan.config;
        config.n = n;
        const CirculantSampler sampler1(n, config.h1);
        const CirculantSampler sampler2(n, config.h2);
        const std::uint64_t seed_n = mix_seed(plan.master_seed, n);

        std::vector<double> statistic(reps), mixed(reps), local(reps);
        detail::parallel_for(reps, threads, [&](std::size_t r) {
            GaussianStream g1 = seeded_substream(seed_n, r, StreamRole::path1);
            GaussianStream g2 = seeded_substream(seed_n, r, StreamRole::path2);
            statistic[r] = config.statistic_scale() *
                           statistic_value(sampler1.sample(g1), sampler2.sample(g2), config);
            GaussianStream latent = seeded_substream(seed_n, r, StreamRole::latent);
            const FbmPath fresh = sampler1.sample(latent);
            local[r] = occupation_band_estimate(fresh, h).value;
            mixed[r] = std::sqrt(d1 * local[r]) * latent.next();
        });

        McRow row;
        row.n = n;
        row.ks_distance = ks_two_sample(statistic, mixed);
        row.estimate = row.ks_distance;
        row.target = 0.0;
        const bool last = (idx + 1 == plan.n_list.size());
        const bool nonincreasing = row.ks_distance <= prev_ks;
        const bool small_enough = !last || row.ks_distance <= plan.tolerance("limit_ks");
        row.pass = nonincreasing && small_enough && detail::inference_allowed(reps);
        prev_ks = row.ks_distance;
        report.rows.push_back(row);

        for (const double lambda : plan.lambda_grid) {
            double emp = 0.0, model = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                emp += std::cos(lambda * statistic[r]);
                model += std::exp(-0.5 * lambda * lambda * d1 * local[r]);
            }
            emp /= static_cast<double>(reps);
            model /= static_cast<double>(reps);
            McRow cf;
            cf.n = n;
            cf.lambda = lambda;
            cf.estimate = std::abs(emp - model);
            cf.target = 0.0;
            cf.extras["cf_empirical"] = emp;
            cf.extras["cf_model"] = model;
            cf.pass = true;   // reported, not gated: the KS row carries the decision
            report.rows.push_back(std::move(cf));
        }
    }
    report.wall_time_seconds = guard.elapsed();
    return report;
}

/// Checks the exact conditional identity: with one frozen regressor path,
/// E cos(lambda_n S_n) against exp(-lambda_n^2 a_n / 2) and E sin against 0,
/// for every lambda on the grid. Holds at every finite n.
inline McReport run_conditional_experiment(const ExperimentPlan& plan) {
    detail::RunGuard guard(plan);
    McReport report{plan, {}, {}, 0.0, !plan.region_ok()};
    const std::size_t reps = plan.replicates;
    const std::size_t threads = plan.resolved_threads();
    const double band = 3.0 / std::sqrt(static_cast<double>(reps));
    const double extra = plan.tolerance("conditional_extra");

    for (const std::size_t n : plan.n_list) {
        ModelConfig config = plan.config;
        config.n = n;
        const CirculantSampler sampler1(n, config.h1);
        const CirculantSampler sampler2(n, config.h2);
        const std::uint64_t seed_n = mix_seed(plan.master_seed, n);

        GaussianStream frozen = seeded_substream(seed_n, 0, StreamRole::path1);
        const FbmPath path1 = sampler1.sample(frozen);
        const double a_n = conditional_variance(path1, config);
        const std::vector<double> weights = kernel_weights(path1, config);

        std::vector<double> statistic(reps);
        detail::parallel_for(reps, threads, [&](std::size_t r) {
            GaussianStream g2 = seeded_substream(seed_n, r, StreamRole::path2);
            const FbmPath path2 = sampler2.sample(g2);
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += weights[i] * (path2.values[i + 1] - path2.values[i]);
            statistic[r] = s;
        });

        for (const double lambda : plan.lambda_grid) {
            const double lambda_n = lambda * config.statistic_scale();
            std::vector<double> cosines(reps);
            double sum_sin = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                cosines[r] = std::cos(lambda_n * statistic[r]);
                sum_sin += std::sin(lambda_n * statistic[r]);
            }
            const double e_cos = detail::mean_of(cosines);
            const double e_sin = sum_sin / static_cast<double>(reps);
            const double target = std::exp(-0.5 * lambda_n * lambda_n * a_n);

            McRow row;
            row.n = n;
            row.lambda = lambda;
            row.estimate = e_cos;
            row.std_error = detail::std_error_of(cosines, e_cos);
            row.target = target;
            row.rel_error = target != 0.0 ? (e_cos - target) / target : kAbsent;
            row.extras["dev_cos"] = std::abs(e_cos - target);
            row.extras["e_sin"] = e_sin;
            row.extras["lambda_n"] = lambda_n;
            row.extras["a_n"] = a_n;
            row.pass = detail::inference_allowed(reps) &&
                       row.extras["dev_cos"] <= band + extra && std::abs(e_sin) <= band;
            report.rows.push_back(std::move(row));
        }
    }
    report.wall_time_seconds = guard.elapsed();
    return report;
}

/// Checks the Riemann-sum-versus-integral gap: the Monte Carlo median of the
/// scaled discrepancy must not increase along n_list.
inline McReport run_riemann_experiment(const ExperimentPlan& plan) {
    detail::RunGuard guard(plan);
    McReport report{plan, {}, {}, 0.0, !plan.region_ok()};
    const std::size_t reps = plan.replicates;
    const std::size_t threads = plan.resolved_threads();
    double prev_median = std::numeric_limits<double>::infinity();

    for (const std::size_t n : plan.n_list) {
        ModelConfig config = plan.config;
        config.n = n;
        const std::size_t fine_n = n * plan.refinement;
        const CirculantSampler sampler(fine_n, config.h1);
        const std::uint64_t seed_n = mix_seed(plan.master_seed, n);

        std::vector<double> discrepancies(reps);
        detail::parallel_for(reps, threads, [&](std::size_t r) {
            GaussianStream g = seeded_substream(seed_n, r, StreamRole::path1);
            const FbmPath fine = sampler.sample(g);
            discrepancies[r] = riemann_discrepancy(fine, config);
        });

        McRow row;
        row.n = n;
        row.estimate = detail::median_of(discrepancies);
        row.target = 0.0;
        row.extras["refinement"] = static_cast<double>(plan.refinement);
        row.pass = row.estimate <= prev_median && detail::inference_allowed(reps);
        prev_median = row.estimate;
        report.rows.push_back(std::move(row));
    }
    report.wall_time_seconds = guard.elapsed();
    return report;
}

} // namespace fracreg
