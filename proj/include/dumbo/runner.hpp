#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dumbo/bo.hpp"
#include "dumbo/config.hpp"

namespace dumbo {

inline const std::vector<std::string> kTraceHeader = {
    "seed",          "iteration",          "query", "output", "immediate_regret", "minimal_regret",
    "regret_bound",  "admm_iterations",    "primal_residual", "a", "beta_t", "decomposition"};
inline const std::vector<std::string> kAggregateHeader = {"iteration", "median", "standard_error", "seeds",
                                                          "variant", "benchmark"};
inline const std::vector<std::string> kPlotHeader = {"iteration", "median", "median_minus_se",
                                                     "median_plus_se", "variant", "benchmark"};

struct RunReport {
  std::vector<CampaignResult> results;
  std::vector<AggregateRow> aggregate;
  std::vector<std::string> failures;  // one message per failed seed
  bool ok() const { return failures.empty(); }
};

/// Runs every seed of `config`, writing trace_seed<S>.csv per seed,
/// aggregate.csv and summary.txt into config.out_dir. A failing seed keeps its
/// partial trace and is reported in `failures`.
RunReport run(const RunConfig& config, const ObjectiveRegistry& registry);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows,
                         const std::string& variant, const std::string& benchmark);

/// Collects every aggregate.csv below `in_dir` into one long-format CSV.
void export_plot_data(const std::filesystem::path& in_dir, const std::filesystem::path& out_file);

}  // namespace dumbo
