#include "dumbo/runner.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <mutex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dumbo/csv.hpp"
#include "dumbo/error.hpp"

namespace dumbo {

namespace fs = std::filesystem;

namespace {

std::string join_point(const Vector& x) {
  std::string out;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (j) out += ';';
    out += csv::format_double(x[j]);
  }
  return out;
}

Vector split_point(const std::string& text) {
  std::vector<double> vals;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(';', start);
    const auto item = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) vals.push_back(csv::parse_double(item));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

void write_trace_csv(const fs::path& path, const std::vector<TraceRecord>& trace) {
  auto out = open_out(path);
  csv::write_row(out, kTraceHeader);
  for (const auto& r : trace) {
    csv::write_row(out, {std::to_string(r.seed), std::to_string(r.iteration), join_point(r.query),
                         csv::format_double(r.output), csv::format_double(r.immediate_regret),
                         csv::format_double(r.minimal_regret), csv::format_double(r.regret_bound),
                         std::to_string(r.admm_iterations), csv::format_double(r.primal_residual),
                         csv::format_double(r.a), csv::format_double(r.beta_t), r.decomposition});
  }
}

std::vector<TraceRecord> read_trace_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot read '{}'", path.string()));
  const auto rows = csv::read(in);
  if (rows.empty() || rows.front() != kTraceHeader)
    throw Error(ErrorCode::ParseError, fmt::format("'{}' is not a trace file", path.string()));
  std::vector<TraceRecord> out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& f = rows[k];
    if (f.size() != kTraceHeader.size())
      throw Error(ErrorCode::ParseError, fmt::format("line {} of '{}' has {} fields", k + 1, path.string(), f.size()));
    TraceRecord r;
    r.seed = std::stoull(f[0]);
    r.iteration = std::stoull(f[1]);
    r.query = split_point(f[2]);
    r.output = csv::parse_double(f[3]);
    r.immediate_regret = csv::parse_double(f[4]);
    r.minimal_regret = csv::parse_double(f[5]);
    r.regret_bound = csv::parse_double(f[6]);
    r.admm_iterations = std::stoull(f[7]);
    r.primal_residual = csv::parse_double(f[8]);
    r.a = csv::parse_double(f[9]);
    r.beta_t = csv::parse_double(f[10]);
    r.decomposition = f[11];
    out.push_back(std::move(r));
  }
  return out;
}

void write_aggregate_csv(const fs::path& path, const std::vector<AggregateRow>& rows, const std::string& variant,
                         const std::string& benchmark) {
  auto out = open_out(path);
  csv::write_row(out, kAggregateHeader);
  for (const auto& r : rows) {
    csv::write_row(out, {std::to_string(r.iteration), csv::format_double(r.median),
                         csv::format_double(r.standard_error), std::to_string(r.count), variant, benchmark});
  }
}

RunReport run(const RunConfig& config, const ObjectiveRegistry& registry) {
  validate_config(config, registry);
  const ObjectiveSpec& spec = registry.get(config.benchmark);
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);

  RunReport report;
  report.results.resize(config.seeds.size());
  std::vector<std::string> errors(config.seeds.size());

  auto run_seed = [&](std::size_t s) {
    const auto seed = config.seeds[s];
    Campaign campaign(spec, config.variant, config.bo, seed);
    try {
      campaign.initialize();
      for (std::size_t k = 0; k < config.bo.budget; ++k) campaign.step();
    } catch (const std::exception& e) {
      errors[s] = fmt::format("seed {}: {}", seed, e.what());
      spdlog::error("{}", errors[s]);
    }
    report.results[s] = CampaignResult{seed, campaign.trace(), campaign.clamp_events()};
    write_trace_csv(dir / fmt::format("trace_seed{}.csv", seed), campaign.trace());
    spdlog::info("{} {} seed {} done: {} rows", spec.name, config.variant_name, seed, campaign.trace().size());
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, config.seeds.size()));
  if (jobs == 1) {
    for (std::size_t s = 0; s < config.seeds.size(); ++s) run_seed(s);
  } else {
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t s = w; s < config.seeds.size(); s += jobs) run_seed(s);
      }));
    }
    for (auto& f : workers) f.get();
  }
  for (const auto& e : errors)
    if (!e.empty()) report.failures.push_back(e);

  report.aggregate = aggregate(report.results);
  write_aggregate_csv(dir / "aggregate.csv", report.aggregate, config.variant_name, spec.name);

  auto out = open_out(dir / "summary.txt");
  const bool known = spec.optimum.has_value();
  out << fmt::format("benchmark: {}\nvariant: {}\nbudget: {}\ninit_points: {}\nseeds: {}\n", spec.name,
                     config.variant_name, config.bo.budget, config.bo.init_points, config.seeds.size());
  if (!report.aggregate.empty()) {
    const auto& last = report.aggregate.back();
    out << fmt::format("final {}: median {} standard_error {}\n", known ? "minimal_regret" : "best_value",
                       csv::format_double(last.median), csv::format_double(last.standard_error));
  }
  for (const auto& r : report.results) {
    if (r.trace.empty()) continue;
    out << fmt::format("seed {}: {} {} clamp_events {}\n", r.seed, known ? "minimal_regret" : "best_value",
                       csv::format_double(r.trace.back().minimal_regret), r.clamp_events);
  }
  for (const auto& f : report.failures) out << "failed " << f << '\n';
  return report;
}

void export_plot_data(const fs::path& in_dir, const fs::path& out_file) {
  if (!fs::is_directory(in_dir))
    throw Error(ErrorCode::Io, fmt::format("'{}' is not a directory", in_dir.string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir))
    if (entry.is_regular_file() && entry.path().filename() == "aggregate.csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::Io, fmt::format("no aggregate.csv below '{}'", in_dir.string()));

  auto out = open_out(out_file);
  csv::write_row(out, kPlotHeader);
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    const auto rows = csv::read(in);
    if (rows.empty() || rows.front() != kAggregateHeader)
      throw Error(ErrorCode::ParseError, fmt::format("'{}' is not an aggregate file", path.string()));
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const auto& f = rows[k];
      if (f.size() != kAggregateHeader.size())
        throw Error(ErrorCode::ParseError, fmt::format("line {} of '{}' is malformed", k + 1, path.string()));
      const double m = csv::parse_double(f[1]);
      const double se = csv::parse_double(f[2]);
      csv::write_row(out, {f[0], csv::format_double(m), csv::format_double(m - se), csv::format_double(m + se), f[4],
                           f[5]});
    }
  }
}

}  // namespace dumbo
