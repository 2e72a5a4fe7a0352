#include "metamob/cli_config.hpp"
#include "metamob/dataset.hpp"
#include "metamob/glmmtree.hpp"
#include "metamob/metrics.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

using nlohmann::json;
using namespace metamob;

namespace {

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file " + path);
    return file;
}

json fit_to_json(const GlmmTreeFit& fit,
                 const std::vector<std::string>& covariate_names) {
    json doc;
    doc["method"] = fit.spec.name();
    doc["tree"] = tree_to_json(fit.tree, covariate_names);
    json terminals = json::array();
    for (const auto& nd : fit.tree.nodes) {
        if (!nd.is_terminal) continue;
        json t;
        t["node"] = nd.node_id;
        t["gamma"] = nd.effects.gamma;
        t["theta"] = nd.effects.theta;
        t["n"] = nd.n_obs;
        if (!nd.effects.gamma_by_trial.empty())
            t["gamma_by_trial"] = nd.effects.gamma_by_trial;
        terminals.push_back(t);
    }
    doc["terminals"] = terminals;
    doc["variance_components"] = {{"tau0_sq", fit.lmm.vc.tau0_sq},
                                  {"tau1_sq", fit.lmm.vc.tau1_sq},
                                  {"sigma_sq", fit.lmm.vc.sigma_sq}};
    doc["loglik"] = fit.lmm.loglik;
    doc["reml_loglik"] = fit.lmm.reml_loglik;
    doc["n_iter"] = fit.n_iter;
    doc["converged"] = fit.converged;
    doc["warnings"] = fit.warnings;
    return doc;
}

int cmd_fit(const std::string& data_path, const std::string& method,
            const GlmmTreeControls& controls, const std::string& out_path) {
    const IpdDataset data = read_csv_file(data_path);
    const ModelSpec spec = parse_method(method);
    const GlmmTreeFit fit = fit_glmm_tree(data, spec, controls);
    std::ofstream file;
    std::ostream& out = open_out(file, out_path);
    out << fit_to_json(fit, data.covariate_names).dump(2) << '\n';
    return 0;
}

json rep_to_json(const ReplicationScore& s) {
    json j;
    j["discovered"] = s.discovered;
    j["n_subgroups"] = s.n_subgroups;
    j["accurate"] = s.accurate;
    if (s.effect_corr) j["effect_corr"] = *s.effect_corr;
    j["excluded"] = s.excluded;
    if (s.excluded) j["exclusion_reason"] = s.exclusion_reason;
    j["corr_excluded"] = s.corr_excluded;
    if (s.corr_excluded) j["corr_exclusion_reason"] = s.corr_exclusion_reason;
    j["n_iter"] = s.n_iter;
    j["converged"] = s.converged;
    j["warned"] = s.warned;
    return j;
}

int cmd_simulate(const std::string& config_path,
                 const std::vector<std::string>& methods, int reps,
                 std::uint64_t seed, int workers, bool allow_custom,
                 const GlmmTreeControls& controls, const std::string& out_path,
                 const std::string& json_path) {
    ScenarioGrid grid = parse_scenario_grid_file(config_path, allow_custom);
    std::ofstream file;
    std::ostream& out = open_out(file, out_path);
    out << kResultsCsvHeader << '\n';
    json per_rep_doc = json::array();
    for (size_t ci = 0; ci < grid.cells.size(); ++ci) {
        ScenarioConfig cfg = grid.cells[ci];
        std::uint64_t cell_hash = 14695981039346656037ULL;
        for (char ch : grid.cell_labels[ci])
            cell_hash = (cell_hash ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
        cfg.seed = derive_seed(seed, cell_hash, 0);
        for (const auto& method : methods) {
            RunOptions opts;
            opts.workers = workers;
            const ScenarioAggregate agg =
                run_scenario(cfg, parse_method(method), controls, reps, opts);
            out << results_csv_row(grid.cell_labels[ci], agg) << '\n';
            std::cerr << "[simulate] " << grid.cell_labels[ci] << " " << method
                      << ": discovery=" << agg.discovery_rate
                      << " accuracy=" << agg.accuracy_rate << " ("
                      << agg.wall_seconds << "s)\n";
            if (!json_path.empty()) {
                json cell;
                cell["cell"] = grid.cell_labels[ci];
                cell["method"] = method;
                json reps_json = json::array();
                for (const auto& s : agg.per_rep) reps_json.push_back(rep_to_json(s));
                cell["per_rep"] = reps_json;
                per_rep_doc.push_back(cell);
            }
        }
    }
    if (!json_path.empty()) {
        std::ofstream jf(json_path);
        if (!jf) throw std::runtime_error("cannot open " + json_path);
        jf << per_rep_doc.dump(2) << '\n';
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_prefix) {
    std::vector<ResultRow> rows;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        for (auto& r : read_results_csv(in)) rows.push_back(std::move(r));
    }
    // drop duplicate (cell, method) keys, keeping the first occurrence
    std::set<std::string> seen;
    std::vector<ResultRow> unique;
    for (auto& r : rows) {
        const std::string key = r.cell_label + "|" + r.method;
        if (seen.insert(key).second) unique.push_back(std::move(r));
        else std::cerr << "[report] dropping duplicate key " << key << '\n';
    }
    if (unique.empty())
        std::cerr << "[report] warning: no input rows\n";

    static const std::vector<std::string> metrics = {
        "discovery_rate", "accuracy_rate", "mean_effect_corr"};

    // long-form series document: x = tau0, facets (tau1, NxK), series = method
    json series = json::array();
    for (const auto& r : unique) {
        for (const auto& m : metrics) {
            json rec;
            rec["scenario"] = r.scenario;
            rec["metric"] = m;
            rec["method"] = r.method;
            rec["x"] = r.tau0;
            rec["facet_row"] = r.tau1;
            std::ostringstream col;
            col << "N" << r.N << "_K" << r.K;
            rec["facet_col"] = col.str();
            rec["corr"] = r.corr;
            rec["tau_gamma"] = r.tau_gamma;
            rec["y"] = r.metrics.count(m) ? r.metrics.at(m) : 0.0;
            series.push_back(rec);
        }
    }
    {
        std::ofstream jf(out_prefix + "series.json");
        if (!jf) throw std::runtime_error("cannot open " + out_prefix + "series.json");
        jf << series.dump(2) << '\n';
    }

    // pivoted tables: rows = (tau0, tau1, corr), columns = N x K x method
    for (const auto& m : metrics) {
        std::set<std::string> col_keys;
        std::map<std::string, std::map<std::string, double>> table;
        for (const auto& r : unique) {
            std::ostringstream rk, ck;
            rk << std::setprecision(10) << r.scenario << ',' << r.tau0 << ','
               << r.tau1 << ',' << r.corr << ',' << r.tau_gamma;
            ck << "N" << r.N << "_K" << r.K << "_" << r.method;
            col_keys.insert(ck.str());
            table[rk.str()][ck.str()] =
                r.metrics.count(m) ? r.metrics.at(m) : 0.0;
        }
        std::ofstream cf(out_prefix + m + ".csv");
        if (!cf) throw std::runtime_error("cannot open pivot output");
        cf << std::setprecision(10) << "scenario,tau0,tau1,corr,tau_gamma";
        for (const auto& ck : col_keys) cf << ',' << ck;
        cf << '\n';
        for (const auto& [rk, vals] : table) {
            cf << rk;
            for (const auto& ck : col_keys) {
                cf << ',';
                const auto it = vals.find(ck);
                if (it != vals.end()) cf << it->second;
            }
            cf << '\n';
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subgroup identification trees for IPD meta-analysis"};
    app.require_subcommand(1);

    GlmmTreeControls controls;
    std::string data_path, method = "mob", out_path, json_path, config_path;
    std::vector<std::string> methods = {"mob", "mob-ri", "metamob-ri",
                                        "metamob-si"};
    std::vector<std::string> inputs;
    std::string out_prefix;
    int reps = 100;
    std::uint64_t seed = 1;
    int workers = 0;
    bool allow_custom = false;
    if (const char* env = std::getenv("METAMOB_WORKERS")) workers = std::atoi(env);

    auto add_controls = [&](CLI::App* cmd) {
        cmd->add_option("--alpha", controls.tree.alpha, "significance level")
            ->check(CLI::Range(1e-12, 0.999999));
        cmd->add_option("--minsize", controls.tree.minsize,
                        "minimum terminal node size")
            ->check(CLI::Range(2, 1000000));
        cmd->add_option("--abstol", controls.abstol,
                        "log-likelihood convergence tolerance");
        cmd->add_option("--max-iter", controls.max_iter, "iteration cap");
    };

    CLI::App* fit = app.add_subcommand("fit", "fit a tree on CSV data");
    fit->add_option("--data", data_path, "input CSV (y, trt, trial, covariates)")
        ->required();
    fit->add_option("--method", method, "mob | mob-ri | metamob-ri | metamob-si");
    fit->add_option("--out", out_path, "output path (default stdout)");
    fit->add_option("--seed", seed, "seed (recorded, fit is deterministic)");
    add_controls(fit);

    CLI::App* sim = app.add_subcommand("simulate", "run a scenario grid");
    sim->add_option("--config", config_path, "grid config file")->required();
    sim->add_option("--methods", methods, "methods to run")->delimiter(',');
    sim->add_option("--reps", reps, "replications per cell");
    sim->add_option("--seed", seed, "base seed");
    sim->add_option("--workers", workers, "worker threads (0 = all)");
    sim->add_option("--out", out_path, "results CSV path")->required();
    sim->add_option("--json", json_path, "per-replication JSON path");
    sim->add_flag("--allow-custom", allow_custom,
                  "accept grid values outside the default domains");
    add_controls(sim);

    CLI::App* rep = app.add_subcommand("report", "pivot result files");
    rep->add_option("--inputs", inputs, "results CSV files")->delimiter(',');
    rep->add_option("--out-prefix", out_prefix, "output path prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit(data_path, method, controls, out_path);
        if (sim->parsed())
            return cmd_simulate(config_path, methods, reps, seed, workers,
                                allow_custom, controls, out_path, json_path);
        if (rep->parsed()) return cmd_report(inputs, out_prefix);
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
