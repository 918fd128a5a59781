// refl: robust elicitable functionals on empirical data.
//
// Subcommands:
//   ref          robust functional of a loss sample over a tolerance grid
//   murphy       sweep of the functional against the homogeneity degree b
//   reinsurance  replicated joint (VaR, ES) of simulated layered losses
//   regress      robust regression on generated or supplied data
//   check        tilt solver cross-checked against the simplex oracle
//
// Exit codes: 0 success, 2 validation error, 1 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "refl/csv.hpp"
#include "refl/harness.hpp"

namespace {

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(part, &pos));
            if (pos != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw refl::BadSpec(std::string("bad ") + what + " list entry '" +
                                part + "'");
        }
    }
    if (out.empty())
        throw refl::BadSpec(std::string("empty ") + what + " list");
    return out;
}

void emit(const std::string& csv, const std::string& output) {
    if (output.empty()) {
        std::cout << csv;
        return;
    }
    refl::write_text_file(output, csv);
}

std::string describe(const std::string& cmd,
                     const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string s = "refl " + cmd;
    for (const auto& [k, v] : kv) s += " " + k + "=" + v;
    return s;
}

struct ScoreFlags {
    std::string score = "mean";
    double b = 2.0;
    double alpha = 0.95;
    double tau = 0.5;
    double d = 1.0, d1 = 1.0, d2 = 1.0, c0 = 0.0, c1 = 1.0;

    void attach(CLI::App* app, bool with_b = true) {
        app->add_option("--score", score,
                        "score family: mean, var, expectile, vares");
        if (with_b) app->add_option("--b", b, "homogeneity degree");
        app->add_option("--alpha", alpha, "VaR/ES level");
        app->add_option("--tau", tau, "expectile level");
        app->add_option("--d", d, "quantile score constant d");
        app->add_option("--d1", d1, "score constant d1");
        app->add_option("--d2", d2, "score constant d2");
        app->add_option("--c0", c0, "(VaR, ES) score constant c0");
        app->add_option("--c1", c1, "(VaR, ES) score constant c1");
    }

    refl::ScoreParams params() const {
        refl::ScoreParams p;
        p.kind = score;
        p.b = b;
        p.alpha = alpha;
        p.tau = tau;
        p.constants = {d, d1, d2, c0, c1};
        return p;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust elicitable functionals over KL neighbourhoods"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config");

    // ref ---------------------------------------------------------------
    auto* ref_cmd = app.add_subcommand(
        "ref", "robust functional of a loss sample over a tolerance grid");
    ScoreFlags ref_score;
    ref_score.attach(ref_cmd);
    std::string ref_eps = "0";
    std::string ref_input;
    std::string ref_output;
    ref_cmd->add_option("--eps", ref_eps, "comma list of KL tolerances");
    ref_cmd->add_option("--input", ref_input, "loss CSV (single column)")
        ->required();
    ref_cmd->add_option("--output", ref_output, "output CSV path");

    // murphy --------------------------------------------------------------
    auto* murphy_cmd = app.add_subcommand(
        "murphy", "functional against the homogeneity degree b");
    ScoreFlags murphy_score;
    murphy_score.attach(murphy_cmd, /*with_b=*/false);
    std::string murphy_b = "0.5,1,1.5,2";
    std::string murphy_eps = "0";
    std::string murphy_dist;
    std::string murphy_input;
    std::string murphy_output;
    std::size_t murphy_n = 10000;
    std::uint64_t murphy_seed = 1;
    murphy_cmd->add_option("--b", murphy_b, "comma list of degrees b");
    murphy_cmd->add_option("--eps", murphy_eps, "comma list of KL tolerances");
    murphy_cmd->add_option(
        "--dist", murphy_dist,
        "texp:rate[:q] | beta:a:b | lognormal:mu:sigma | pareto:mean:std");
    murphy_cmd->add_option("--input", murphy_input, "loss CSV instead of --dist");
    murphy_cmd->add_option("--n", murphy_n, "sample size for --dist");
    murphy_cmd->add_option("--seed", murphy_seed, "sampling seed");
    murphy_cmd->add_option("--output", murphy_output, "output CSV path");

    // reinsurance ---------------------------------------------------------
    auto* re_cmd = app.add_subcommand(
        "reinsurance", "replicated joint (VaR, ES) of layered losses");
    std::string re_eps = "0.6,0.7,0.8,0.9";
    std::string re_alpha = "0.9,0.975";
    double re_b = 0.5;
    std::size_t re_n = 10000;
    int re_replicates = 100;
    std::uint64_t re_seed = 1;
    std::string re_output;
    re_cmd->add_option("--eps", re_eps, "comma list of KL tolerances");
    re_cmd->add_option("--alpha", re_alpha, "comma list of levels");
    re_cmd->add_option("--b", re_b, "homogeneity degree of the joint score");
    re_cmd->add_option("--n", re_n, "losses per replicate");
    re_cmd->add_option("--replicates", re_replicates, "number of replicates");
    re_cmd->add_option("--seed", re_seed, "base seed; replicate k uses seed+k");
    re_cmd->add_option("--output", re_output, "output CSV path");

    // regress ---------------------------------------------------------------
    auto* rg_cmd = app.add_subcommand(
        "regress", "robust regression on generated or supplied data");
    ScoreFlags rg_score;
    rg_score.attach(rg_cmd);
    std::string rg_eps = "0,1,5,10";
    std::string rg_model;
    std::string rg_input;
    std::string rg_output;
    std::size_t rg_n = 40;
    std::uint64_t rg_seed = 1;
    rg_cmd->add_option("--eps", rg_eps, "comma list of KL tolerances");
    rg_cmd->add_option("--model", rg_model,
                       "built-in contamination model: A, B or C");
    rg_cmd->add_option("--input", rg_input,
                       "design CSV with columns x_1..x_m,y");
    rg_cmd->add_option("--n", rg_n, "base sample size for --model");
    rg_cmd->add_option("--seed", rg_seed, "sampling seed");
    rg_cmd->add_option("--output", rg_output, "output CSV path");

    // check -----------------------------------------------------------------
    auto* ck_cmd = app.add_subcommand(
        "check", "tilt solver cross-checked against the simplex oracle");
    std::string ck_eps = "0.01,0.05,0.1,0.3";
    int ck_instances = 20;
    int ck_atoms = 6;
    std::uint64_t ck_seed = 1;
    std::string ck_output;
    ck_cmd->add_option("--eps", ck_eps, "comma list of KL tolerances");
    ck_cmd->add_option("--replicates", ck_instances, "random instances");
    ck_cmd->add_option("--atoms", ck_atoms, "max atoms per instance (<= 8)");
    ck_cmd->add_option("--seed", ck_seed, "instance seed");
    ck_cmd->add_option("--output", ck_output, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (ref_cmd->parsed()) {
            refl::RefRunConfig cfg;
            cfg.score = ref_score.params();
            cfg.eps = parse_list(ref_eps, "eps");
            const auto table = refl::read_csv_file(ref_input);
            cfg.losses = table.column(0);
            cfg.invocation = describe(
                "ref", {{"score", ref_score.score},
                        {"b", refl::format_double(ref_score.b)},
                        {"alpha", refl::format_double(ref_score.alpha)},
                        {"tau", refl::format_double(ref_score.tau)},
                        {"eps", ref_eps},
                        {"input", ref_input}});
            emit(refl::run_ref(cfg), ref_output);
        } else if (murphy_cmd->parsed()) {
            refl::MurphyConfig cfg;
            cfg.score = murphy_score.params();
            cfg.b_grid = parse_list(murphy_b, "b");
            cfg.eps = parse_list(murphy_eps, "eps");
            cfg.n = murphy_n;
            cfg.seed = murphy_seed;
            if (!murphy_dist.empty())
                cfg.dist = refl::parse_distribution(murphy_dist);
            else if (!murphy_input.empty())
                cfg.losses = refl::read_csv_file(murphy_input).column(0);
            else
                throw refl::BadSpec("murphy needs --dist or --input");
            cfg.invocation = describe(
                "murphy", {{"score", murphy_score.score},
                           {"b", murphy_b},
                           {"alpha", refl::format_double(murphy_score.alpha)},
                           {"tau", refl::format_double(murphy_score.tau)},
                           {"eps", murphy_eps},
                           {"dist", murphy_dist.empty() ? murphy_input
                                                        : murphy_dist},
                           {"n", std::to_string(murphy_n)},
                           {"seed", std::to_string(murphy_seed)}});
            emit(refl::run_murphy(cfg), murphy_output);
        } else if (re_cmd->parsed()) {
            refl::ReinsuranceConfig cfg;
            cfg.eps = parse_list(re_eps, "eps");
            cfg.alphas = parse_list(re_alpha, "alpha");
            cfg.b = re_b;
            cfg.n = re_n;
            cfg.replicates = re_replicates;
            cfg.seed = re_seed;
            cfg.invocation = describe(
                "reinsurance", {{"eps", re_eps},
                                {"alpha", re_alpha},
                                {"b", refl::format_double(re_b)},
                                {"n", std::to_string(re_n)},
                                {"replicates", std::to_string(re_replicates)},
                                {"seed", std::to_string(re_seed)}});
            emit(refl::run_reinsurance(cfg), re_output);
        } else if (rg_cmd->parsed()) {
            refl::RegressConfig cfg;
            cfg.score = rg_score.params();
            cfg.eps = parse_list(rg_eps, "eps");
            cfg.n = rg_n;
            cfg.seed = rg_seed;
            if (!rg_input.empty()) {
                const auto table = refl::read_csv_file(rg_input);
                if (table.header.size() < 2)
                    throw refl::BadSpec("regress input needs x and y columns");
                refl::RegressionData data;
                const std::size_t m = table.header.size() - 1;
                data.X = refl::Matrix(table.rows.size(), m + 1);
                data.y.resize(table.rows.size());
                for (std::size_t i = 0; i < table.rows.size(); ++i) {
                    data.X(i, 0) = 1.0;
                    for (std::size_t j = 0; j < m; ++j)
                        data.X(i, j + 1) = table.rows[i][j];
                    data.y[i] = table.rows[i][m];
                }
                cfg.data = std::move(data);
            } else if (!rg_model.empty()) {
                cfg.model = rg_model[0];
            } else {
                throw refl::BadSpec("regress needs --input or --model");
            }
            cfg.invocation = describe(
                "regress", {{"score", rg_score.score},
                            {"b", refl::format_double(rg_score.b)},
                            {"eps", rg_eps},
                            {"model", rg_model.empty() ? rg_input : rg_model},
                            {"n", std::to_string(rg_n)},
                            {"seed", std::to_string(rg_seed)}});
            emit(refl::run_regress(cfg), rg_output);
        } else if (ck_cmd->parsed()) {
            refl::CheckConfig cfg;
            cfg.eps = parse_list(ck_eps, "eps");
            cfg.instances = ck_instances;
            cfg.atoms = ck_atoms;
            cfg.seed = ck_seed;
            cfg.invocation = describe(
                "check", {{"eps", ck_eps},
                          {"replicates", std::to_string(ck_instances)},
                          {"atoms", std::to_string(ck_atoms)},
                          {"seed", std::to_string(ck_seed)}});
            emit(refl::run_check(cfg), ck_output);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
