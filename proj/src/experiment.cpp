#include "cgnc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

namespace cgnc {

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (int j = 0; j < v.size(); ++j) arr.push_back(v[j]);
    return arr;
}

std::pair<double, double> mean_se(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double var = ss / static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

DagStructure build_structure(const Dataset& ds, const std::string& spec,
                             std::optional<int> max_in_degree, int tan_bins) {
    if (spec == "nb") return structure_nb(ds.n_features());
    if (spec == "tan") return structure_tan(ds, tan_bins);
    if (spec.rfind("ban:", 0) == 0)
        return structure_ban_from_file(spec.substr(4), ds.n_features(), max_in_degree);
    throw InputError("unknown structure '" + spec + "' (expected nb, tan, or ban:<file>)");
}

FittedProblem prepare_problem(const Dataset& ds, const ExperimentConfig& cfg) {
    auto structure = build_structure(ds, cfg.structure, cfg.max_in_degree, cfg.tan_bins);
    CgncModel model = fit(ds, structure);
    auto geometry = model.class_geometry(0);
    return {std::move(model), build_metric(geometry.covariance, cfg.p),
            percentile_bounds(ds, 0.05, 0.95)};
}

std::vector<int> sample_factuals(const CgncModel& model, const Dataset& ds,
                                 double tau, int count, std::uint64_t seed) {
    std::vector<int> pool;
    for (int r = 0; r < ds.n_rows(); ++r) {
        if (ds.labels[r] != 0) continue;
        if (model.classify(ds.features.row(r).transpose(), tau) == 0) pool.push_back(r);
    }
    if (pool.empty())
        throw PreconditionError("no correctly classified class-0 rows to sample from");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<int> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(pool[pick(rng)]);
    return out;
}

ExperimentResult run_experiment(const Dataset& ds, const FittedProblem& fp,
                                const ExperimentConfig& cfg) {
    if (cfg.runs < 1) throw InputError("runs must be at least 1");
    for (double g : cfg.gammas)
        if (!(g > 0.0)) throw InputError("gamma values must be positive");

    auto rows = sample_factuals(fp.model, ds, cfg.tau, cfg.runs, cfg.seed);
    ExperimentResult out;
    for (double gamma : cfg.gammas) {
        for (int run = 0; run < cfg.runs; ++run) {
            RunRecord rec;
            rec.run = run;
            rec.row = rows[run];
            rec.gamma = gamma;
            rec.factual = ds.features.row(rows[run]).transpose();

            RecourseConfig rc;
            rc.bounds = fp.bounds;
            rc.epsilon = cfg.epsilon;
            rc.time_budget = cfg.time_limit;
            rc.m_init = cfg.m_init;
            rc.nu = cfg.nu;
            rc.gap = cfg.gap;
            rc.node_limit = cfg.node_limit;
            rc.starts = cfg.starts;
            // one deterministic stream per run index
            rc.seed = cfg.seed + 7919 * static_cast<std::uint64_t>(run + 1);

            const auto t0 = std::chrono::steady_clock::now();
            try {
                rec.robust = find_counterfactual(fp.model, fp.metric, rec.factual,
                                                 gamma, cfg.epsilon, cfg.tau,
                                                 cfg.backend, rc);
                rec.baseline = baseline_counterfactual(fp.model, fp.metric, rec.factual,
                                                       cfg.tau, cfg.backend, rc);
                // the robust counterfactual satisfies the baseline program
                // (the zero scenario sits in every master), so a baseline
                // answer that comes out farther only means its own search
                // missed a basin the robust loop found: descend from the
                // robust point and keep the better of the two
                if ((rec.robust.outcome == Outcome::Robust ||
                     rec.robust.outcome == Outcome::EarlyStop) &&
                    rec.baseline.outcome == Outcome::Robust &&
                    rec.baseline.distance > rec.robust.distance) {
                    const double tau_prime = log_threshold(cfg.tau);
                    auto pol = solve_local_mp(fp.model, fp.metric, rec.factual,
                                              {Vec::Zero(fp.model.n())}, rc.bounds,
                                              tau_prime, 1, rc.seed,
                                              &rec.robust.counterfactual);
                    if (pol.status == SolveStatus::Feasible &&
                        pol.objective < rec.baseline.distance) {
                        rec.baseline.counterfactual = pol.assignment;
                        rec.baseline.distance = pol.objective;
                    }
                    if (rec.baseline.distance > rec.robust.distance) {
                        rec.baseline.counterfactual = rec.robust.counterfactual;
                        rec.baseline.distance = rec.robust.distance;
                    }
                    rec.baseline.violation_final =
                        tau_prime - fp.model.decision_h(rec.baseline.counterfactual);
                }
                if (rec.robust.outcome == Outcome::Robust &&
                    rec.baseline.outcome == Outcome::Robust &&
                    rec.baseline.distance > rec.robust.distance + 1e-6)
                    throw SolverError("baseline distance exceeds robust distance");
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
            rec.wall_seconds = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
            out.records.push_back(std::move(rec));
        }
        out.summary.push_back(summarize(out.records, gamma));
    }
    return out;
}

SummaryBlock summarize(const std::vector<RunRecord>& records, double gamma) {
    SummaryBlock block;
    block.gamma = gamma;
    std::vector<double> runtimes, iterations, distances, coverages;
    for (const auto& rec : records) {
        if (rec.gamma != gamma) continue;
        ++block.runs;
        if (!rec.error.empty()) {
            ++block.errors;
            continue;
        }
        switch (rec.robust.outcome) {
            case Outcome::Robust: ++block.robust; break;
            case Outcome::EarlyStop:
                ++block.early_stops;
                coverages.push_back(rec.robust.coverage);
                break;
            case Outcome::Infeasible: ++block.infeasible; break;
            case Outcome::Timeout: ++block.timeouts; break;
        }
        // timeout runs are excluded from the aggregate statistics
        if (rec.robust.outcome == Outcome::Timeout) continue;
        runtimes.push_back(rec.wall_seconds);
        iterations.push_back(static_cast<double>(rec.robust.iterations));
        if (rec.robust.outcome != Outcome::Infeasible)
            distances.push_back(rec.robust.distance);
    }
    std::tie(block.mean_runtime, block.se_runtime) = mean_se(runtimes);
    std::tie(block.mean_iterations, block.se_iterations) = mean_se(iterations);
    std::tie(block.mean_distance, block.se_distance) = mean_se(distances);
    if (!coverages.empty()) block.mean_coverage = mean_se(coverages).first;
    return block;
}

std::string result_to_json(const RecourseResult& res) {
    json o;
    o["outcome"] = outcome_name(res.outcome);
    o["iterations"] = res.iterations;
    o["distance"] = res.distance;
    o["coverage"] = res.coverage;
    o["violation_final"] = res.violation_final;
    o["counterfactual"] = vec_to_json(res.counterfactual);
    json log = json::array();
    for (const auto& it : res.log) {
        log.push_back({{"t", it.t},
                       {"objective", it.objective},
                       {"violation", it.violation},
                       {"mp_nodes", it.mp_stats.nodes},
                       {"mp_simplex_iterations", it.mp_stats.simplex_iterations},
                       {"mp_wall_seconds", it.mp_stats.wall_seconds},
                       {"ap_nodes", it.ap_stats.nodes},
                       {"ap_simplex_iterations", it.ap_stats.simplex_iterations},
                       {"ap_wall_seconds", it.ap_stats.wall_seconds}});
    }
    o["log"] = std::move(log);
    return o.dump();
}

std::string record_to_json(const RunRecord& rec) {
    json o;
    o["run"] = rec.run;
    o["row"] = rec.row;
    o["gamma"] = rec.gamma;
    o["factual"] = vec_to_json(rec.factual);
    o["wall_seconds"] = rec.wall_seconds;
    if (!rec.error.empty()) {
        o["error"] = rec.error;
    } else {
        o["robust"] = json::parse(result_to_json(rec.robust));
        o["baseline"] = json::parse(result_to_json(rec.baseline));
    }
    return o.dump();
}

std::string summary_to_json(const ExperimentConfig& cfg,
                            const std::vector<SummaryBlock>& blocks) {
    json o;
    o["config"] = {{"data", cfg.data_path},
                   {"structure", cfg.structure},
                   {"backend", cfg.backend == Backend::Milp ? "milp" : "local"},
                   {"p_norm", norm_order_name(cfg.p)},
                   {"epsilon", cfg.epsilon},
                   {"tau", cfg.tau},
                   {"m_init", cfg.m_init},
                   {"nu", cfg.nu},
                   {"runs", cfg.runs},
                   {"seed", cfg.seed}};
    json arr = json::array();
    for (const auto& b : blocks) {
        arr.push_back({{"gamma", b.gamma},
                       {"runs", b.runs},
                       {"robust", b.robust},
                       {"early_stops", b.early_stops},
                       {"infeasible", b.infeasible},
                       {"timeouts", b.timeouts},
                       {"errors", b.errors},
                       {"mean_runtime", b.mean_runtime},
                       {"se_runtime", b.se_runtime},
                       {"mean_iterations", b.mean_iterations},
                       {"se_iterations", b.se_iterations},
                       {"mean_distance", b.mean_distance},
                       {"se_distance", b.se_distance},
                       {"mean_coverage", b.mean_coverage}});
    }
    o["summary"] = std::move(arr);
    return o.dump(2);
}

std::string summary_table(const std::vector<SummaryBlock>& blocks) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %-5s %-18s %-18s %-18s %-10s %-9s %-8s\n",
                  "gamma", "runs", "runtime (se)", "iterations (se)", "distance (se)",
                  "early", "timeout", "error");
    os << line;
    for (const auto& b : blocks) {
        std::snprintf(line, sizeof line,
                      "%-8.3g %-5d %8.3f (%6.3f)  %8.2f (%6.2f)  %8.4f (%6.4f)  "
                      "%3d@%.3f  %-9d %-8d\n",
                      b.gamma, b.runs, b.mean_runtime, b.se_runtime, b.mean_iterations,
                      b.se_iterations, b.mean_distance, b.se_distance, b.early_stops,
                      b.mean_coverage, b.timeouts, b.errors);
        os << line;
    }
    return os.str();
}

std::string scatter_csv(const std::vector<RunRecord>& records) {
    std::ostringstream os;
    os << "run,gamma,outcome,distance,baseline_distance,runtime_seconds,iterations\n";
    for (const auto& rec : records) {
        if (!rec.error.empty()) continue;
        char line[256];
        std::snprintf(line, sizeof line, "%d,%g,%s,%.12g,%.12g,%.6f,%d\n", rec.run,
                      rec.gamma, outcome_name(rec.robust.outcome), rec.robust.distance,
                      rec.baseline.distance, rec.wall_seconds, rec.robust.iterations);
        os << line;
    }
    return os.str();
}

}  // namespace cgnc
