#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracreg/montecarlo.hpp"

namespace fracreg {

using ordered_json = nlohmann::ordered_json;

/// Flat JSON schema mirroring the ExperimentPlan fields, so a plan file can
/// be written by hand or round-tripped from a report.
inline ordered_json plan_to_json(const ExperimentPlan& plan) {
    ordered_json j;
    j["h1"] = plan.config.h1.value;
    j["h2"] = plan.config.h2.value;
    j["alpha"] = plan.config.alpha;
    j["x0"] = plan.config.x0;
    j["n_list"] = plan.n_list;
    j["replicates"] = plan.replicates;
    j["master_seed"] = plan.master_seed;
    j["lambda_grid"] = plan.lambda_grid;
    j["tolerances"] = plan.tolerances;
    j["force_region"] = plan.force_region;
    j["threads"] = plan.threads;
    j["bandwidth"] = plan.bandwidth;
    j["eps"] = plan.eps;
    j["refinement"] = plan.refinement;
    return j;
}

inline ExperimentPlan plan_from_json(const ordered_json& j) {
    ExperimentPlan plan{
        ModelConfig{HurstParam(j.at("h1").get<double>()), HurstParam(j.at("h2").get<double>()),
                    j.at("alpha").get<double>(), 1, j.value("x0", 0.0)},
        j.at("n_list").get<std::vector<std::size_t>>(),
        j.at("replicates").get<std::size_t>(),
        j.at("master_seed").get<std::uint64_t>(),
        j.value("lambda_grid", std::vector<double>{}),
        default_tolerances(),
        j.value("force_region", false),
        j.value("threads", std::size_t{0}),
        j.value("bandwidth", 0.05),
        j.value("eps", 0.0),
        j.value("refinement", std::size_t{16}),
    };
    if (j.contains("tolerances"))
        for (const auto& [key, value] : j.at("tolerances").items())
            plan.tolerances[key] = value.get<double>();
    if (!plan.n_list.empty()) plan.config.n = plan.n_list.back();
    return plan;
}

namespace detail {

inline ordered_json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

} // namespace detail

inline ordered_json row_to_json(const McRow& row) {
    ordered_json j;
    j["n"] = row.n;
    j["lambda"] = detail::number_or_null(row.lambda);
    j["estimate"] = detail::number_or_null(row.estimate);
    j["std_error"] = detail::number_or_null(row.std_error);
    j["target"] = detail::number_or_null(row.target);
    j["rel_error"] = detail::number_or_null(row.rel_error);
    j["ks_distance"] = detail::number_or_null(row.ks_distance);
    j["pass"] = row.pass;
    if (!row.extras.empty()) {
        ordered_json extras;
        for (const auto& [key, value] : row.extras) extras[key] = detail::number_or_null(value);
        j["extras"] = extras;
    }
    return j;
}

inline ordered_json report_to_json(const McReport& report) {
    ordered_json j;
    j["plan"] = plan_to_json(report.plan);
    ordered_json rows = ordered_json::array();
    for (const McRow& row : report.rows) rows.push_back(row_to_json(row));
    j["rows"] = rows;
    if (!report.bracket_detail.empty()) {
        ordered_json detail_rows = ordered_json::array();
        for (const BracketReplicateRow& row : report.bracket_detail) {
            ordered_json r;
            r["n"] = row.n;
            r["replicate"] = row.replicate;
            r["bracket_implied"] = row.bracket_implied;
            r["occupation_band"] = row.occupation_band;
            r["heat_smoothed"] = row.heat_smoothed;
            r["ratio"] = row.ratio;
            detail_rows.push_back(std::move(r));
        }
        j["bracket_detail"] = detail_rows;
    }
    j["wall_time_seconds"] = report.wall_time_seconds;
    j["region_override_used"] = report.region_override_used;
    j["all_pass"] = report.all_pass();
    return j;
}

/// Generic per-row CSV: one line per aggregated row, 17 significant digits.
inline void write_rows_csv(std::ostream& out, const McReport& report) {
    out << "n,lambda,estimate,std_error,target,rel_error,ks_distance,pass\n";
    for (const McRow& row : report.rows) {
        out << row.n << ',' << detail::format_g17(row.lambda) << ','
            << detail::format_g17(row.estimate) << ',' << detail::format_g17(row.std_error) << ','
            << detail::format_g17(row.target) << ',' << detail::format_g17(row.rel_error) << ','
            << detail::format_g17(row.ks_distance) << ',' << (row.pass ? 1 : 0) << '\n';
    }
}

/// Variance-experiment CSV with the declared schema.
inline void write_variance_csv(std::ostream& out, const McReport& report) {
    out << "n,scaled_second_moment,exact_diag_scaled,exact_offdiag_scaled,c1,rel_error\n";
    for (const McRow& row : report.rows) {
        const auto extra = [&](const char* key) {
            const auto it = row.extras.find(key);
            return it != row.extras.end() ? it->second : kAbsent;
        };
        out << row.n << ',' << detail::format_g17(row.estimate) << ','
            << detail::format_g17(extra("exact_diag_scaled")) << ','
            << detail::format_g17(extra("exact_offdiag_scaled")) << ','
            << detail::format_g17(row.target) << ',' << detail::format_g17(row.rel_error) << '\n';
    }
}

/// Bracket-experiment per-replicate CSV with the declared schema (one grid
/// size per file; filter by n).
inline void write_bracket_csv(std::ostream& out, const McReport& report, std::size_t n) {
    out << "replicate,bracket_implied,occupation_band,heat_smoothed,ratio\n";
    for (const BracketReplicateRow& row : report.bracket_detail) {
        if (row.n != n) continue;
        out << row.replicate << ',' << detail::format_g17(row.bracket_implied) << ','
            << detail::format_g17(row.occupation_band) << ','
            << detail::format_g17(row.heat_smoothed) << ',' << detail::format_g17(row.ratio)
            << '\n';
    }
}

/// Chaos verification CSV: running partial sums against the heat kernel.
inline void write_chaos_csv(std::ostream& out, double z, const ChaosSeries& series) {
    const double target = heat_kernel(z, series.epsilon);
    out << "order,partial_sum,target,abs_error\n";
    for (int m = 0; m <= series.max_order; ++m) {
        ChaosSeries truncated = series;
        truncated.max_order = m;
        const double partial = chaos_eval(z, truncated);
        out << m << ',' << detail::format_g17(partial) << ',' << detail::format_g17(target) << ','
            << detail::format_g17(std::abs(partial - target)) << '\n';
    }
}

} // namespace fracreg
