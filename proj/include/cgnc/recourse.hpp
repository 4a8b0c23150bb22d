#pragma once

#include "cgnc/milp_build.hpp"
#include "cgnc/solve.hpp"

namespace cgnc {

enum class Backend { Milp, Local };
Backend parse_backend(const std::string& s);  // "milp" | "local"

enum class Outcome { Robust, EarlyStop, Infeasible, Timeout };
const char* outcome_name(Outcome o);

struct RecourseConfig {
    FeatureBounds bounds;  // search box for the counterfactual
    double epsilon = 0.001;
    double time_budget = 3600.0;
    int max_iterations = 50;  // cap-hit reports as timeout
    // MILP path
    int m_init = 20;
    double nu = 0.5;
    double gap = 0.01;
    long node_limit = 1000000;
    bool double_partition = false;
    // local path
    int starts = 16;
    std::uint64_t seed = 0;
    // when non-empty, every MP/AP MILP built is also written there in LP
    // file format (mp_t<k>.lp / ap_t<k>.lp)
    std::string dump_lp_dir;
};

struct IterationRecord {
    int t = 0;
    double violation = 0.0;  // phi after the AP solve
    double objective = 0.0;  // MP objective (distance)
    SolveStats mp_stats;
    SolveStats ap_stats;
};

/// Mutable state of the cutting-set loop (Algorithm-style scenario growth).
struct CuttingSetState {
    std::vector<Vec> scenarios;  // starts as {0}, grows by one per iteration
    Vec iterate;
    double violation = 0.0;
    int t = 0;
    TighteningState tightening;
    std::vector<IterationRecord> log;
};

struct RecourseResult {
    Vec counterfactual;
    double distance = std::numeric_limits<double>::infinity();
    int iterations = 0;
    Outcome outcome = Outcome::Infeasible;
    double coverage = 1.0;  // gamma_tilde / gamma, meaningful for early stops
    double violation_final = 0.0;
    std::vector<IterationRecord> log;
};

/// Cutting-set search for a robust counterfactual: alternate master solves
/// over the collected scenario set with adversarial solves over the gamma
/// ball until the worst violation drops to epsilon. On the MILP path the
/// master bounds tighten between iterations and the final iterate is
/// re-polished by a local descent before the outcome is classified from a
/// fresh adversarial solve.
RecourseResult find_counterfactual(const CgncModel& model, const WhitenedMetric& metric,
                                   const Vec& x_fac, double gamma, double eps,
                                   double tau, Backend backend,
                                   const RecourseConfig& config);

/// Single master solve with the zero scenario only (non-robust program).
RecourseResult baseline_counterfactual(const CgncModel& model,
                                       const WhitenedMetric& metric, const Vec& x_fac,
                                       double tau, Backend backend,
                                       const RecourseConfig& config);

/// Largest fraction of the gamma budget at which x_star stays robust,
/// located by bisection on the ball radius (interval resolved to tol*gamma).
double coverage_ratio(const CgncModel& model, const WhitenedMetric& metric,
                      const Vec& x_star, double gamma, double tau_prime,
                      Backend backend, const RecourseConfig& config, double tol = 1e-3);

/// Monte-Carlo robustness probe: max of tau' - H(x + delta) over `samples`
/// perturbations drawn uniformly from the set in whitened coordinates.
double mc_max_violation(const CgncModel& model, const UncertaintySet& uset,
                        const Vec& x, double tau_prime, int samples,
                        std::uint64_t seed);

}  // namespace cgnc
