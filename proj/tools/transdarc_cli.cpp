#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "transdarc/transdarc.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::string data_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

transdarc::PipelineConfig make_config(const Overrides& o) {
    transdarc::PipelineConfig cfg;
    if (!o.config.empty()) cfg = transdarc::load_config(o.config);
    if (!o.out.empty()) cfg.out = o.out;
    if (!o.data_dir.empty()) cfg.data.dir = o.data_dir;
    if (o.seed) cfg.calibration.seed = cfg.train.seed = cfg.synth.seed = *o.seed;
    transdarc::validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space feature calibration and attention-head training on embedding datasets"};
    app.require_subcommand(1);

    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--data", o.data_dir, "directory holding train/train_aug/val/test .darc1 files");
        sub->add_option("--seed", o.seed, "overrides every seed in the config");
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores); results do not depend on it");
    };
    auto* synth = app.add_subcommand("synth", "write a synthetic imbalanced mixture as DARC1 files");
    auto* stats = app.add_subcommand("stats", "per-class statistics and common/rare partition");
    auto* calibrate = app.add_subcommand("calibrate", "build the calibrated training set");
    auto* train = app.add_subcommand("train", "train the attention head on the calibrated set");
    auto* eval = app.add_subcommand("eval", "evaluate a trained head on val/test/cross-modality sets");
    auto* pipeline = app.add_subcommand("pipeline", "stats, calibrate, train and eval in sequence");
    for (auto* sub : {synth, stats, calibrate, train, eval, pipeline}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        transdarc::set_num_threads(o.threads);
        const auto cfg = make_config(o);
        namespace p = transdarc::pipeline;
        if (*synth)
            p::run_synth(cfg);
        else if (*stats)
            p::run_stats(cfg);
        else if (*calibrate)
            p::run_calibrate(cfg);
        else if (*train)
            p::run_train(cfg);
        else if (*eval)
            p::run_eval(cfg);
        else if (*pipeline)
            p::run_pipeline(cfg);
    } catch (const transdarc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const transdarc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
