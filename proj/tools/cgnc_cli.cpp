#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgnc/experiment.hpp"
#include "cgnc/expansion.hpp"

using namespace cgnc;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << text;
}

struct CommonArgs {
    std::string data_path;
    std::string label_column = "class";
    std::string structure = "nb";
    std::string ban_file;
    std::optional<int> max_in_degree;

    std::string structure_spec() const {
        if (structure == "ban") {
            if (ban_file.empty()) throw InputError("--structure ban requires --ban-file");
            return "ban:" + ban_file;
        }
        return structure;
    }
};

void add_data_flags(CLI::App* cmd, CommonArgs& args, bool required = true) {
    auto* opt = cmd->add_option("--data", args.data_path, "CSV dataset path");
    if (required) opt->required();
    cmd->add_option("--label", args.label_column, "label column name");
    cmd->add_option("--structure", args.structure, "nb | tan | ban")
        ->check(CLI::IsMember({"nb", "tan", "ban"}));
    cmd->add_option("--ban-file", args.ban_file, "weighted edge list for ban");
    cmd->add_option("--max-in-degree", [&args](const CLI::results_t& r) {
        args.max_in_degree = std::stoi(r[0]);
        return true;
    }, "cap on incoming edges for ban structures");
}

int cmd_fit(const CommonArgs& args, const std::string& out_path, int tan_bins) {
    Dataset ds = load_csv(args.data_path, args.label_column);
    auto structure = build_structure(ds, args.structure_spec(), args.max_in_degree,
                                     tan_bins);
    CgncModel model = fit(ds, structure);
    std::cout << model.n() << " nodes, " << structure.n_edges() << " edges\n";
    if (out_path.empty())
        std::cout << model.to_json() << "\n";
    else
        spill(out_path, model.to_json());
    return 0;
}

Vec parse_inline_vector(const std::string& text, int n) {
    Vec v(n);
    std::istringstream is(text);
    std::string cell;
    for (int j = 0; j < n; ++j) {
        if (!std::getline(is, cell, ','))
            throw InputError("--factual needs " + std::to_string(n) + " comma-separated values");
        v[j] = std::stod(cell);
    }
    if (std::getline(is, cell, ','))
        throw InputError("--factual has more than " + std::to_string(n) + " values");
    return v;
}

int cmd_explain(const std::string& model_path, const CommonArgs& args, int row,
                const std::string& inline_factual, double gamma, double epsilon,
                double tau, const std::string& p_norm, const std::string& backend_name,
                RecourseConfig rc, const std::string& out_path) {
    CgncModel model = CgncModel::from_json(slurp(model_path));
    Dataset ds = load_csv(args.data_path, args.label_column);
    if (ds.n_features() != model.n())
        throw InputError("dataset and model disagree on the feature count");
    auto metric = build_metric(model.class_geometry(0).covariance,
                               parse_norm_order(p_norm));
    rc.bounds = percentile_bounds(ds, 0.05, 0.95);

    Vec factual;
    if (!inline_factual.empty())
        factual = parse_inline_vector(inline_factual, model.n());
    else if (row >= 0 && row < ds.n_rows())
        factual = ds.features.row(row).transpose();
    else
        throw InputError("give --row within the dataset or an inline --factual");

    if (!rc.dump_lp_dir.empty())
        std::filesystem::create_directories(rc.dump_lp_dir);
    auto res = find_counterfactual(model, metric, factual, gamma, epsilon, tau,
                                   parse_backend(backend_name), rc);
    nlohmann::json o = nlohmann::json::parse(result_to_json(res));
    nlohmann::json fac = nlohmann::json::array();
    for (int j = 0; j < factual.size(); ++j) fac.push_back(factual[j]);
    o["factual"] = std::move(fac);
    if (out_path.empty())
        std::cout << o.dump(2) << "\n";
    else
        spill(out_path, o.dump(2));
    return 0;
}

int cmd_experiment(ExperimentConfig cfg, const CommonArgs& args,
                   const std::string& out_dir) {
    cfg.data_path = args.data_path;
    cfg.label_column = args.label_column;
    cfg.structure = args.structure_spec();
    cfg.max_in_degree = args.max_in_degree;
    Dataset ds = load_csv(cfg.data_path, cfg.label_column);
    auto fp = prepare_problem(ds, cfg);
    auto result = run_experiment(ds, fp, cfg);

    std::cout << summary_table(result.summary);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ostringstream jsonl;
        for (const auto& rec : result.records) jsonl << record_to_json(rec) << "\n";
        spill(out_dir + "/runs.jsonl", jsonl.str());
        spill(out_dir + "/summary.json", summary_to_json(cfg, result.summary));
        spill(out_dir + "/scatter.csv", scatter_csv(result.records));
    }
    return 0;
}

int cmd_check(const std::string& model_path, double radius, std::uint64_t seed,
              const std::string& out_path) {
    CgncModel model = CgncModel::from_json(slurp(model_path));
    auto exp = build_expansion(model);
    const int n = model.n();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;

    double fd_err = 0.0, dual_err = 0.0;
    const double h = 1e-5;
    for (int s = 0; s < 200; ++s) {
        Vec x(n);
        for (int j = 0; j < n; ++j) x[j] = radius * gauss(rng) / std::sqrt(3.0);
        Vec g = grad_h(model, exp, x);
        for (int j = 0; j < n; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            double fd = (model.decision_h(xp) - model.decision_h(xm)) / (2.0 * h);
            fd_err = std::max(fd_err,
                              std::abs(fd - g[j]) / std::max(1.0, std::abs(g[j])));
        }
        double direct = -model.decision_h(x);
        double expanded = violation_expanded(model, exp, x, Vec::Zero(n), 0.0);
        dual_err = std::max(dual_err, std::abs(direct - expanded));
    }

    auto [q0, q1] = dc_split(model, exp);
    Eigen::SelfAdjointEigenSolver<Mat> e0(q0), e1(q1);
    double g_const = lipschitz_constant(model, exp, radius, NormOrder::L2);
    double t_log = iteration_bound_log(radius, g_const, 0.001, n);

    nlohmann::json o;
    o["lipschitz_constant"] = g_const;
    o["iteration_bound"] = iteration_bound(radius, g_const, 0.001, n);
    o["iteration_bound_log"] = t_log;
    o["gradient_fd_max_error"] = fd_err;
    o["dual_form_max_discrepancy"] = dual_err;
    auto spectrum = [](const Eigen::SelfAdjointEigenSolver<Mat>& e) {
        nlohmann::json arr = nlohmann::json::array();
        for (int i = 0; i < e.eigenvalues().size(); ++i)
            arr.push_back(e.eigenvalues()[i]);
        return arr;
    };
    o["dc_spectrum_q0"] = spectrum(e0);
    o["dc_spectrum_q1"] = spectrum(e1);
    if (out_path.empty())
        std::cout << o.dump(2) << "\n";
    else
        spill(out_path, o.dump(2));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust counterfactual explanations for conditional Gaussian "
                 "network classifiers"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string out_path;
    std::string model_path;
    int tan_bins = 5;

    auto* fit_cmd = app.add_subcommand("fit", "fit a classifier and write model JSON");
    add_data_flags(fit_cmd, common);
    fit_cmd->add_option("--tan-bins", tan_bins, "discretization bins for TAN");
    fit_cmd->add_option("--out", out_path, "model JSON output path");

    double gamma = 0.01, epsilon = 0.001, tau = 0.5;
    std::string p_norm = "inf", backend_name = "milp";
    int row = -1;
    std::string inline_factual;
    RecourseConfig rc;
    bool dump_lp = false;

    auto* explain_cmd =
        app.add_subcommand("explain", "robust counterfactual for one instance");
    explain_cmd->add_option("--model", model_path, "model JSON path")->required();
    add_data_flags(explain_cmd, common);
    explain_cmd->add_option("--row", row, "factual row index in the dataset");
    explain_cmd->add_option("--factual", inline_factual, "inline comma-separated factual");
    explain_cmd->add_option("--gamma", gamma, "uncertainty budget");
    explain_cmd->add_option("--epsilon", epsilon, "violation tolerance");
    explain_cmd->add_option("--tau", tau, "classification threshold");
    explain_cmd->add_option("--p-norm", p_norm, "1 | 2 | inf");
    explain_cmd->add_option("--backend", backend_name, "milp | local");
    explain_cmd->add_option("--m-init", rc.m_init, "initial partition count");
    explain_cmd->add_option("--nu", rc.nu, "bound contraction factor");
    explain_cmd->add_option("--gap", rc.gap, "branch-and-bound relative gap");
    explain_cmd->add_option("--time-limit", rc.time_budget, "seconds per instance");
    explain_cmd->add_option("--node-limit", rc.node_limit, "branch-and-bound node cap");
    explain_cmd->add_option("--starts", rc.starts, "local solver multi-starts");
    explain_cmd->add_option("--seed", rc.seed, "random seed");
    explain_cmd->add_flag("--dump-lp", dump_lp, "write every MP/AP as an LP file");
    explain_cmd->add_option("--out", out_path, "report JSON output path");

    ExperimentConfig cfg;
    std::string out_dir;
    auto* exp_cmd = app.add_subcommand("experiment", "batch protocol with summary");
    add_data_flags(exp_cmd, common);
    exp_cmd->add_option("--gamma", cfg.gammas, "uncertainty budgets (repeatable)");
    exp_cmd->add_option("--epsilon", cfg.epsilon, "violation tolerance");
    exp_cmd->add_option("--tau", cfg.tau, "classification threshold");
    std::string exp_p_norm = "inf", exp_backend = "milp";
    exp_cmd->add_option("--p-norm", exp_p_norm, "1 | 2 | inf");
    exp_cmd->add_option("--backend", exp_backend, "milp | local");
    exp_cmd->add_option("--m-init", cfg.m_init, "initial partition count");
    exp_cmd->add_option("--nu", cfg.nu, "bound contraction factor");
    exp_cmd->add_option("--runs", cfg.runs, "factual instances per gamma");
    exp_cmd->add_option("--seed", cfg.seed, "master seed");
    exp_cmd->add_option("--gap", cfg.gap, "branch-and-bound relative gap");
    exp_cmd->add_option("--time-limit", cfg.time_limit, "seconds per instance");
    exp_cmd->add_option("--node-limit", cfg.node_limit, "branch-and-bound node cap");
    exp_cmd->add_option("--starts", cfg.starts, "local solver multi-starts");
    exp_cmd->add_option("--tan-bins", cfg.tan_bins, "discretization bins for TAN");
    exp_cmd->add_option("--out", out_dir, "output directory for JSONL/CSV");

    double radius = 3.0;
    std::uint64_t check_seed = 0;
    auto* check_cmd = app.add_subcommand("check", "model diagnostics JSON");
    check_cmd->add_option("--model", model_path, "model JSON path")->required();
    check_cmd->add_option("--radius", radius, "ball radius for the Lipschitz bound");
    check_cmd->add_option("--seed", check_seed, "random seed");
    check_cmd->add_option("--out", out_path, "diagnostics output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed()) return cmd_fit(common, out_path, tan_bins);
        if (explain_cmd->parsed()) {
            if (dump_lp) rc.dump_lp_dir = "lp_dumps";
            return cmd_explain(model_path, common, row, inline_factual, gamma, epsilon,
                               tau, p_norm, backend_name, rc, out_path);
        }
        if (exp_cmd->parsed()) {
            cfg.p = parse_norm_order(exp_p_norm);
            cfg.backend = parse_backend(exp_backend);
            return cmd_experiment(cfg, common, out_dir);
        }
        if (check_cmd->parsed()) return cmd_check(model_path, radius, check_seed, out_path);
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
