#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cgnc/recourse.hpp"

namespace cgnc {

/// Batch protocol settings: dataset, classifier structure, and the robust
/// recourse parameters swept over a list of uncertainty budgets.
struct ExperimentConfig {
    std::string data_path;
    std::string label_column;
    std::string structure = "nb";  // "nb" | "tan" | "ban:<edge file>"
    std::optional<int> max_in_degree;
    std::vector<double> gammas{0.01};
    double epsilon = 0.001;
    double tau = 0.5;
    NormOrder p = NormOrder::Linf;
    Backend backend = Backend::Local;
    int m_init = 20;
    double nu = 0.5;
    int runs = 25;
    std::uint64_t seed = 0;
    double gap = 0.01;
    double time_limit = 3600.0;
    long node_limit = 1000000;
    int starts = 16;
    int tan_bins = 5;
};

/// Everything fitted once per experiment: model, whitened metric on the
/// class-0 covariance, and 5th/95th-percentile feature bounds.
struct FittedProblem {
    CgncModel model;
    WhitenedMetric metric;
    FeatureBounds bounds;
};

/// Builds the structure named by `spec` ("nb", "tan", "ban:<file>"), fits the
/// model, whitens with the class-0 covariance, and takes percentile bounds.
FittedProblem prepare_problem(const Dataset& ds, const ExperimentConfig& cfg);
DagStructure build_structure(const Dataset& ds, const std::string& spec,
                             std::optional<int> max_in_degree, int tan_bins);

/// Seeded uniform sample (with replacement) of row indices whose label is 0
/// and which the fitted model also classifies as 0.
std::vector<int> sample_factuals(const CgncModel& model, const Dataset& ds,
                                 double tau, int count, std::uint64_t seed);

struct RunRecord {
    int run = 0;
    int row = -1;
    double gamma = 0.0;
    Vec factual;
    RecourseResult robust;
    RecourseResult baseline;
    double wall_seconds = 0.0;
    std::string error;  // non-empty when the run raised instead of finishing
};

/// Tables 1/2 column set for one gamma: means with standard errors over the
/// non-timeout runs, early-stop coverage, and failure tallies.
struct SummaryBlock {
    double gamma = 0.0;
    int runs = 0;
    int robust = 0;
    int early_stops = 0;
    int infeasible = 0;
    int timeouts = 0;
    int errors = 0;
    double mean_runtime = 0.0;
    double se_runtime = 0.0;
    double mean_iterations = 0.0;
    double se_iterations = 0.0;
    double mean_distance = 0.0;
    double se_distance = 0.0;
    double mean_coverage = 1.0;  // over early-stop runs only
};

struct ExperimentResult {
    std::vector<RunRecord> records;    // ordered by (gamma, run)
    std::vector<SummaryBlock> summary;  // one block per gamma
};

/// Runs the full protocol: `runs` seeded factuals per gamma, robust search
/// plus the non-robust baseline for each. Per-run exceptions are recorded,
/// counted, and never abort the batch. Deterministic for a fixed seed.
ExperimentResult run_experiment(const Dataset& ds, const FittedProblem& fp,
                                const ExperimentConfig& cfg);

SummaryBlock summarize(const std::vector<RunRecord>& records, double gamma);

/// Serializations: one JSON object per record (JSONL line), a JSON summary,
/// an aligned text table, and a per-run distance/runtime scatter CSV.
std::string record_to_json(const RunRecord& rec);
std::string result_to_json(const RecourseResult& res);
std::string summary_to_json(const ExperimentConfig& cfg,
                            const std::vector<SummaryBlock>& blocks);
std::string summary_table(const std::vector<SummaryBlock>& blocks);
std::string scatter_csv(const std::vector<RunRecord>& records);

}  // namespace cgnc
