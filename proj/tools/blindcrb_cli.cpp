#include <iostream>

#include <CLI11.hpp>

#include "blindcrb/cli/commands.hpp"
#include "blindcrb/cli/manifest.hpp"

namespace {

void add_model_options(CLI::App& app, blindcrb::cli::ModelOptions& opt) {
    app.add_option("channel", opt.channel_path, "channel JSON file")->required()->check(CLI::ExistingFile);
    app.add_option("--model", opt.model, "deterministic | gaussian")
        ->check(CLI::IsMember({"deterministic", "gaussian"}));
    app.add_option("--field", opt.field, "promote a real channel to complex")->check(CLI::IsMember({"real", "complex"}));
    app.add_option("--M", opt.burst, "burst length M");
    app.add_option("--sigma-a2", opt.sigma_a2, "symbol variance");
    auto* sv = app.add_option("--sigma-v2", opt.sigma_v2, "noise variance");
    app.add_option("--snr-db", opt.snr_db, "SNR = sigma_a2 |h|^2 / (m sigma_v2), in dB")->excludes(sv);
    app.add_option("--seed", opt.seed, "seed for symbols and noise (default $BLINDCRB_SEED or 1)");
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = blindcrb::cli;
    CLI::App app{"Cramer-Rao bounds for blind multichannel FIR identification"};
    app.set_version_flag("--version", std::string("blindcrb ") + cli::kToolVersion);
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    try {
        seed = cli::default_seed();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    cli::ModelOptions analyze;
    analyze.seed = seed;
    auto* a = app.add_subcommand("analyze", "zeros, reducibility, identifiability verdict and FIM rank");
    add_model_options(*a, analyze);

    cli::CrbOptions crb;
    crb.model.seed = seed;
    auto* c = app.add_subcommand("crb", "constrained CRB per constraint spec (CSV)");
    add_model_options(*c, crb.model);
    c->add_option("--constraint", crb.constraints,
                  "norm | phase | norm+phase | known:i | linear:<file> | reducible-ti | reducible-proj | minimal")
        ->take_all();

    cli::ModelOptions sweep;
    sweep.seed = seed;
    auto* s = app.add_subcommand("sweep-known", "CRB trace with each coefficient known, plus the minimal CRB (CSV)");
    add_model_options(*s, sweep);

    cli::FimCheckOptions check;
    check.model.seed = seed;
    check.model.burst = 6;
    auto* f = app.add_subcommand("fim-check", "analytic FIM against the Monte Carlo score covariance");
    add_model_options(*f, check.model);
    f->add_option("--trials", check.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    f->add_option("--analytic-sigma-v2", check.analytic_sigma_v2, "evaluate the analytic FIM at this noise variance");
    f->add_flag("--entries", check.entries, "emit every FIM entry with its z-score");

    cli::MseOptions mse;
    auto* m = app.add_subcommand("mse", "MSE of the blind estimator against tr(CRB) (CSV)");
    m->add_option("experiment", mse.experiment_path, "experiment JSON file")->required()->check(CLI::ExistingFile);
    m->add_option("--seed", mse.seed, "override the experiment seed");
    m->add_option("--trials", mse.trials, "override the number of trials")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    if (!m->count("--seed") && std::getenv(cli::kSeedEnv)) mse.seed = seed;

    try {
        if (*a) return cli::cmd_analyze(analyze, std::cout);
        if (*c) return cli::cmd_crb(crb, std::cout);
        if (*s) return cli::cmd_sweep_known(sweep, std::cout);
        if (*f) return cli::cmd_fim_check(check, std::cout);
        if (*m) return cli::cmd_mse(mse, std::cout);
    } catch (const blindcrb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
