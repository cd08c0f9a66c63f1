#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "melseq/data/synth_corpus.hpp"
#include "melseq/dsp/mspc.hpp"
#include "melseq/dsp/wav.hpp"
#include "melseq/eval/gradcheck_suite.hpp"
#include "melseq/eval/mos.hpp"
#include "melseq/eval/pgm.hpp"
#include "melseq/infer/synthesize.hpp"
#include "melseq/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace melseq;

namespace {

data::LoadOptions cache_options(int max_utts, bool verbose) {
    data::LoadOptions opt;
    opt.max_utts = max_utts;
    opt.verbose = verbose;
    if (const char* env = std::getenv("MELSEQ_CACHE")) opt.cache_dir = env;
    return opt;
}

std::vector<data::Utterance> load_corpus_checked(const std::string& corpus_dir, int max_utts) {
    if (!fs::exists(fs::path(corpus_dir) / "metadata.csv")) {
        std::cerr << "error: corpus not found at " << corpus_dir << " (no metadata.csv)\n";
        std::exit(2);
    }
    dsp::DspConfig dsp;
    data::CharVocab vocab;
    return data::load_corpus(corpus_dir, dsp, vocab, cache_options(max_utts, true));
}

train::TrainConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return train::TrainConfig{};
    return train::load_train_config(path);
}

// steps until the smoothed diagonal mass crosses the threshold; -1 if never
int steps_to_diagonal(const std::vector<train::LogRecord>& log, double threshold) {
    for (const auto& rec : log)
        if (rec.diag >= threshold) return static_cast<int>(rec.step);
    return -1;
}

int cmd_train(const std::string& corpus_dir, const std::string& config_path,
              const std::string& out_dir, bool no_guided, int max_utts, std::uint64_t seed,
              bool seed_set, int steps_override) {
    train::TrainConfig cfg = load_config_or_default(config_path);
    if (no_guided) cfg.guided_weight = 0.0;
    if (seed_set) cfg.seed = seed;

    auto corpus = load_corpus_checked(corpus_dir, max_utts);
    std::cout << "loaded " << corpus.size() << " utterances\n";
    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "train.log");

    train::Trainer trainer(cfg, corpus);
    std::cout << "model parameters: " << trainer.params().total_count() << "\n";
    int total = steps_override > 0 ? steps_override
                                   : cfg.epochs * trainer.steps_per_epoch();
    int written = 0;
    while (trainer.step() < static_cast<std::uint64_t>(total)) {
        int chunk = cfg.checkpoint_interval > 0 ? cfg.checkpoint_interval : total;
        chunk = std::min<int>(chunk, total - static_cast<int>(trainer.step()));
        auto recs = trainer.run_steps(chunk, &log);
        for (const auto& r : recs)
            if (r.step % 50 == 0 || r.step == static_cast<std::uint64_t>(total))
                std::cout << train::format_log_line(r) << "\n";
        std::string name = "ckpt-" + std::to_string(trainer.step()) + ".msqk";
        train::save_checkpoint((fs::path(out_dir) / name).string(), trainer.snapshot());
        ++written;
    }
    train::save_checkpoint((fs::path(out_dir) / "ckpt-final.msqk").string(), trainer.snapshot());
    std::cout << "wrote " << written + 1 << " checkpoints to " << out_dir << "\n";
    return 0;
}

int cmd_synth(const std::string& ckpt_path, const std::string& text, const std::string& out_dir,
              bool no_forced_attn, std::uint64_t seed, int max_steps, int gl_iters) {
    if (text.empty()) {
        std::cerr << "error: --text is empty\n";
        return 2;
    }
    train::Checkpoint ckpt;
    try {
        ckpt = train::load_checkpoint(ckpt_path);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot load checkpoint: " << e.what() << "\n";
        return 3;
    }
    try {
        infer::Synthesizer synth(ckpt);
        infer::SynthOptions opt;
        opt.forced_incremental = !no_forced_attn;
        opt.seed = seed;
        opt.max_steps = max_steps;
        opt.griffin_lim_iters = gl_iters;
        infer::SynthesisResult res = synth.synthesize(text, opt);

        fs::create_directories(out_dir);
        dsp::Waveform w;
        w.samples = res.waveform;
        dsp::wav_write((fs::path(out_dir) / "out.wav").string(), w);
        dsp::mspc_write((fs::path(out_dir) / "mel.mspc").string(), res.mel);
        dsp::mspc_write((fs::path(out_dir) / "linear.mspc").string(), res.linear);
        dsp::mspc_write((fs::path(out_dir) / "alignment.mspc").string(), res.alignment);
        eval::write_pgm((fs::path(out_dir) / "alignment.pgm").string(), res.alignment);
        std::cout << "decode steps: " << res.alignment.cols
                  << (res.hit_max ? " (hit max-steps cap)" : "") << "\n"
                  << "wrote out.wav, mel.mspc, linear.mspc, alignment.mspc, alignment.pgm to "
                  << out_dir << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_plot_attention(const std::string& input, const std::string& out_path) {
    ad::Mat a;
    try {
        a = dsp::mspc_read(input);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot read alignment: " << e.what() << "\n";
        return 3;
    }
    eval::write_pgm(out_path, a);
    std::cout << "wrote " << out_path << " (" << a.rows << " chars x " << a.cols << " steps)\n";
    return 0;
}

int cmd_mos_stats(const std::string& path) {
    std::vector<eval::Rating> ratings;
    try {
        ratings = eval::load_ratings(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (ratings.empty()) {
        std::cerr << "error: no ratings in " << path << "\n";
        return 2;
    }
    eval::MosStats all = eval::mos_stats(ratings);
    std::cout << "MOS " << eval::format_mos(all) << " over " << all.n << " ratings\n";
    // per-sample breakdown
    std::vector<std::string> samples;
    for (const auto& r : ratings)
        if (std::find(samples.begin(), samples.end(), r.sample_id) == samples.end())
            samples.push_back(r.sample_id);
    for (const auto& id : samples) {
        std::vector<eval::Rating> sub;
        for (const auto& r : ratings)
            if (r.sample_id == id) sub.push_back(r);
        std::cout << "  " << id << ": " << eval::format_mos(eval::mos_stats(sub)) << " (n="
                  << sub.size() << ")\n";
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    auto report = eval::gradcheck_report(seed);
    bool ok = true;
    std::string worst_name;
    double worst = 0.0;
    for (const auto& [name, err] : report) {
        std::cout << name << ": max rel error " << err << "\n";
        if (err >= eval::kGradTolerance) ok = false;
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    }
    if (!ok) {
        std::cerr << "gradient check FAILED, worst component: " << worst_name << " (" << worst
                  << ")\n";
        return 1;
    }
    std::cout << "all components below " << eval::kGradTolerance << "\n";
    return 0;
}

int cmd_align_experiment(const std::string& corpus_dir, int steps, std::uint64_t seed,
                         const std::string& config_path, const std::string& out_dir,
                         int max_utts) {
    auto corpus = load_corpus_checked(corpus_dir, max_utts);
    fs::create_directories(out_dir);

    auto run_arm = [&](bool guided) {
        train::TrainConfig cfg = load_config_or_default(config_path);
        cfg.seed = seed;
        cfg.guided_weight = guided ? cfg.guided_weight : 0.0;
        train::Trainer trainer(cfg, corpus);
        std::string arm = guided ? "guided" : "unguided";
        std::ofstream log(fs::path(out_dir) / (arm + ".log"));
        auto recs = trainer.run_steps(steps, &log);

        // render the final batch's first alignment via a synthesis pass
        infer::Synthesizer synth(trainer.snapshot());
        infer::SynthOptions opt;
        opt.render_audio = false;
        opt.forced_incremental = false;
        opt.seed = seed;
        infer::SynthesisResult res = synth.synthesize(corpus.front().text, opt);
        eval::write_pgm((fs::path(out_dir) / (arm + ".pgm")).string(), res.alignment);
        return recs;
    };

    auto guided_log = run_arm(true);
    auto unguided_log = run_arm(false);
    int s_guided = steps_to_diagonal(guided_log, 0.5);
    int s_unguided = steps_to_diagonal(unguided_log, 0.5);
    auto show = [](int s) { return s < 0 ? std::string("never") : std::to_string(s); };
    std::cout << "steps to diagonal_mass >= 0.5: guided=" << show(s_guided)
              << " unguided=" << show(s_unguided) << "\n";
    if (s_guided > 0 && s_unguided > 0)
        std::cout << "ratio (unguided/guided): "
                  << static_cast<double>(s_unguided) / s_guided << "\n";
    else if (s_guided > 0)
        std::cout << "ratio (unguided/guided): >= " << static_cast<double>(steps) / s_guided
                  << " (unguided arm never crossed)\n";
    return 0;
}

int cmd_make_corpus(const std::string& dir, int count, std::uint64_t seed) {
    data::generate_synthetic_corpus(dir, count, seed);
    std::cout << "wrote " << count << " synthetic utterances to " << dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"melseq: recurrent seq2seq text-to-speech"};
    app.require_subcommand(1);

    std::string corpus_dir, config_path, out_dir = "run", ckpt_path, text, input_path;
    std::uint64_t seed = 0;
    bool no_guided = false, no_forced = false;
    int max_utts = 0, steps = 0, max_steps = 200, gl_iters = 60, count = 200;

    auto* tr = app.add_subcommand("train", "train a model on an LJSpeech-layout corpus");
    tr->add_option("corpus", corpus_dir, "corpus directory")->required();
    tr->add_option("--config", config_path, "`key = value` training config file");
    tr->add_option("--out", out_dir, "output directory for logs and checkpoints");
    tr->add_flag("--no-guided", no_guided, "disable the guided attention loss (lambda = 0)");
    tr->add_option("--max-utts", max_utts, "use only the K shortest utterances");
    auto* tr_seed = tr->add_option("--seed", seed, "override the config seed");
    tr->add_option("--steps", steps, "stop after this many optimizer steps");

    auto* sy = app.add_subcommand("synth", "synthesize speech from text");
    sy->add_option("checkpoint", ckpt_path, "model checkpoint (.msqk)")->required();
    sy->add_option("--text", text, "input text")->required();
    sy->add_option("--out", out_dir, "output directory");
    sy->add_flag("--no-forced-attn", no_forced, "disable forced incremental attention");
    sy->add_option("--seed", seed, "RNG seed");
    sy->add_option("--max-steps", max_steps, "decode step cap");
    sy->add_option("--griffin-lim-iters", gl_iters, "phase reconstruction iterations");

    auto* pl = app.add_subcommand("plot-attention", "render an alignment matrix as PGM");
    pl->add_option("alignment", input_path, "alignment matrix (.mspc)")->required();
    pl->add_option("--out", out_dir, "output image path")->default_val("alignment.pgm");

    auto* mo = app.add_subcommand("mos-stats", "mean opinion score statistics from a ratings CSV");
    mo->add_option("ratings", input_path, "CSV of sample_id,rater_id,rating")->required();

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every layer");
    gc->add_option("--seed", seed, "RNG seed");

    auto* ae = app.add_subcommand("align-experiment",
                                  "guided vs unguided attention comparison at equal seeds");
    ae->add_option("corpus", corpus_dir, "corpus directory")->required();
    ae->add_option("--steps", steps, "training steps per arm")->default_val(2000);
    ae->add_option("--seed", seed, "RNG seed for both arms");
    ae->add_option("--config", config_path, "training config file");
    ae->add_option("--out", out_dir, "output directory");
    ae->add_option("--max-utts", max_utts, "use only the K shortest utterances");

    auto* mk = app.add_subcommand("make-corpus", "generate a synthetic desk-scale corpus");
    mk->add_option("dir", corpus_dir, "output directory")->required();
    mk->add_option("--count", count, "number of utterances");
    mk->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tr->parsed())
            return cmd_train(corpus_dir, config_path, out_dir, no_guided, max_utts, seed,
                             tr_seed->count() > 0, steps);
        if (sy->parsed())
            return cmd_synth(ckpt_path, text, out_dir, no_forced, seed, max_steps, gl_iters);
        if (pl->parsed()) return cmd_plot_attention(input_path, out_dir);
        if (mo->parsed()) return cmd_mos_stats(input_path);
        if (gc->parsed()) return cmd_gradcheck(seed);
        if (ae->parsed())
            return cmd_align_experiment(corpus_dir, steps, seed, config_path, out_dir, max_utts);
        if (mk->parsed()) return cmd_make_corpus(corpus_dir, count, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
