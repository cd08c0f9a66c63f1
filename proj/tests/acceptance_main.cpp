// End-to-end acceptance checks, one pass/fail line each. Exit code is the
// number of failures. Slow sections (alignment comparison, overfit) run on a
// synthetic corpus generated into a scratch directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "melseq/data/synth_corpus.hpp"
#include "melseq/dsp/audio.hpp"
#include "melseq/eval/gradcheck_suite.hpp"
#include "melseq/eval/mos.hpp"
#include "melseq/infer/synthesize.hpp"
#include "melseq/model/attention.hpp"
#include "melseq/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace melseq;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_dir() {
    fs::path dir = fs::temp_directory_path() / "melseq-acceptance";
    fs::create_directories(dir);
    return dir;
}

std::vector<data::Utterance> load_synthetic(const fs::path& dir, int count, int max_utts) {
    if (!fs::exists(dir / "metadata.csv")) data::generate_synthetic_corpus(dir.string(), count, 5);
    dsp::DspConfig dsp;
    data::CharVocab vocab;
    data::LoadOptions opt;
    opt.max_utts = max_utts;
    return data::load_corpus(dir.string(), dsp, vocab, opt);
}

train::TrainConfig desk_config() {
    train::TrainConfig cfg;
    cfg.d = 64;
    cfg.r = 5;
    cfg.lr = 1e-3;
    cfg.tf_start = 1.0;
    cfg.tf_end = 1.0;
    cfg.seed = 11;
    return cfg;
}

int steps_to_diagonal(const std::vector<train::LogRecord>& log, double threshold) {
    for (const auto& rec : log)
        if (rec.diag >= threshold) return static_cast<int>(rec.step);
    return -1;
}

char fmt_buf[256];
std::string fmt(const char* f, auto... args) {
    std::snprintf(fmt_buf, sizeof fmt_buf, f, args...);
    return fmt_buf;
}

// ---- criteria ----

void check_gradients() {
    auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_at;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        for (const auto& [name, err] : eval::gradcheck_report(seed))
            if (err > worst) {
                worst = err;
                worst_at = name + " @seed " + std::to_string(seed);
            }
    double dt = seconds_since(t0);
    report("gradient-integrity", worst < eval::kGradTolerance && dt < 120.0,
           fmt("worst rel error %.3g (%s), 10 seeds in %.1fs", worst, worst_at.c_str(), dt));
}

void check_guided_mask() {
    const int N = 10, T = 25;
    const double g = 0.2;
    ad::Mat w = model::guided_mask(N, T, g);
    double worst = 0.0;
    Rng rng(42);
    for (int k = 0; k < 20; ++k) {
        int n = static_cast<int>(rng.below(N));
        int t = static_cast<int>(rng.below(T));
        double d = static_cast<double>(n) / N - static_cast<double>(t) / T;
        double expect = 1.0 - std::exp(-d * d / (2.0 * g * g));
        worst = std::max(worst, std::fabs(w.at(n, t) - expect));
    }
    // square mask: cells on the exact diagonal are exactly zero
    ad::Mat sq = model::guided_mask(10, 10, g);
    bool diag_zero = true;
    for (int i = 0; i < 10; ++i) diag_zero = diag_zero && sq.at(i, i) == 0.0;
    // offset 0.2 at g = 0.2: 1 - e^{-0.5}
    double off = sq.at(4, 2);
    double off_err = std::fabs(off - (1.0 - std::exp(-0.5)));
    report("guided-mask", worst < 1e-12 && diag_zero && off_err < 1e-12,
           fmt("20-cell err %.2g, diag zero %s, offset-0.2 err %.2g", worst,
               diag_zero ? "yes" : "no", off_err));
}

void check_alignment_speedup() {
    auto t0 = Clock::now();
    auto corpus = load_synthetic(scratch_dir() / "corpus200", 200, 0);
    const int budget = 600;
    auto run_arm = [&](double guided_weight) {
        train::TrainConfig cfg = desk_config();
        cfg.batch_size = 8;
        cfg.guided_weight = guided_weight;
        cfg.guided_g = 0.2;
        train::Trainer trainer(cfg, corpus);
        return trainer.run_steps(budget);
    };
    int s_guided = steps_to_diagonal(run_arm(5.0), 0.5);
    int s_unguided = steps_to_diagonal(run_arm(0.0), 0.5);
    double dt = seconds_since(t0);
    int effective_unguided = s_unguided < 0 ? budget : s_unguided;
    bool ok = s_guided > 0 && 2 * s_guided <= effective_unguided && dt < 1800.0;
    report("alignment-speedup", ok,
           fmt("guided %d steps, unguided %s, ratio %.2f%s, %.0fs",
               s_guided, s_unguided < 0 ? "never (budget 600)" : std::to_string(s_unguided).c_str(),
               s_guided > 0 ? static_cast<double>(effective_unguided) / s_guided : 0.0,
               s_unguided < 0 ? "+" : "", dt));
}

void check_overfit() {
    auto corpus = load_synthetic(scratch_dir() / "corpus200", 200, 1);
    train::TrainConfig cfg = desk_config();
    cfg.batch_size = 1;
    cfg.seed = 4;
    train::Trainer trainer(cfg, corpus);
    auto log = trainer.run_steps(500);
    double first = log.front().mel, last = log.back().mel;

    // teacher-forced reconstruction under the trained weights
    model::ParamSet ps;
    model::EncoderParams enc_p = model::EncoderParams::create(ps, trainer.model_config());
    model::DecoderParams dec_p = model::DecoderParams::create(ps, trainer.model_config());
    for (std::size_t i = 0; i < ps.items().size(); ++i)
        ps.items()[i].second->v = trainer.params().items()[i].second->v;
    std::vector<const data::Utterance*> one{&corpus[0]};
    data::Batch batch = data::make_batch(one, cfg.r);
    ad::Tape t;
    Rng rng(7);
    model::EncoderOutput enc =
        model::encode_batch(t, batch.char_ids, batch.char_lengths, enc_p, trainer.model_config());
    model::SequenceOut out = model::decode_sequence_teacher_forced(
        t, batch, enc, dec_p, trainer.model_config(), 1.0, rng);
    double se = 0.0, cnt = 0.0;
    for (int s = 0; s < batch.steps; ++s)
        for (std::size_t i = 0; i < out.mel[s]->v.size(); ++i) {
            double m = batch.mel_group_mask[s].v[i];
            double d = out.mel[s]->v[i] - batch.mel_groups[s].v[i];
            se += m * d * d;
            cnt += m;
        }
    double recon = se / cnt;
    report("overfit-smoke", last < 0.1 * first && recon < 0.01,
           fmt("mel MSE %.4g -> %.4g (%.1f%%), reconstruction MSE %.4g", first, last,
               100.0 * last / first, recon));
}

void check_forced_band() {
    auto corpus = load_synthetic(scratch_dir() / "corpus200", 200, 4);
    train::TrainConfig cfg = desk_config();
    cfg.batch_size = 2;
    train::Trainer trainer(cfg, corpus);
    trainer.run_steps(5);
    infer::Synthesizer synth(trainer.snapshot());
    infer::SynthOptions opt;
    opt.render_audio = false;
    opt.max_steps = 30;
    const char* texts[] = {"calm wind",      "sun pond bird",  "star",
                           "hill calm sun",  "wind wind wind", "pond star calm",
                           "bird hill",      "sun",            "calm pond wind star",
                           "hill bird calm"};
    bool ok = true;
    int checked = 0;
    for (const char* text : texts) {
        infer::SynthesisResult res = synth.synthesize(text, opt);
        int n_prev = 0;
        for (int s = 0; s < res.alignment.cols; ++s) {
            int arg = 0;
            for (int k = 1; k < res.alignment.rows; ++k)
                if (res.alignment.at(k, s) > res.alignment.at(arg, s)) arg = k;
            if (s > 0) ok = ok && arg - n_prev >= 0 && arg - n_prev <= 3;
            n_prev = arg;
            ++checked;
        }
    }
    report("forced-incremental-band", ok, fmt("0 <= dn <= 3 held at %d steps over 10 texts",
                                              checked));
}

void check_griffin_lim() {
    auto t0 = Clock::now();
    dsp::FrameParams p;
    dsp::Waveform sine;
    sine.sample_rate = 22050;
    sine.samples.resize(22050);
    for (std::size_t i = 0; i < sine.samples.size(); ++i)
        sine.samples[i] = 0.8 * std::sin(2.0 * M_PI * 440.0 * i / 22050.0);
    dsp::LinearSpectrogram mags = dsp::stft(sine, p);
    std::vector<double> conv;
    dsp::Waveform rec = dsp::griffin_lim(mags, 60, sine.sample_rate, &conv);
    double sc = dsp::spectral_convergence(mags, rec);
    double snr_db = -20.0 * std::log10(sc);
    bool non_increasing = true;
    for (std::size_t i = 1; i < conv.size(); ++i)
        non_increasing = non_increasing && conv[i] <= conv[i - 1] + 1e-12;
    double dt = seconds_since(t0);
    report("griffin-lim", snr_db >= 10.0 && non_increasing && dt < 10.0,
           fmt("spectral SNR %.1f dB, convergence non-increasing %s, %.1fs", snr_db,
               non_increasing ? "yes" : "no", dt));
}

void check_param_count() {
    model::ParamSet ps;
    model::ModelConfig cfg;  // defaults
    model::EncoderParams::create(ps, cfg);
    model::DecoderParams::create(ps, cfg);
    std::size_t total = 0;
    for (const auto& [name, p] : ps.items()) {
        std::printf("      %-26s %4d x %-4d = %8zu\n", name.c_str(), p->rows, p->cols, p->size());
        total += p->size();
    }
    report("parameter-count", total >= 3'400'000 && total <= 5'600'000,
           fmt("%zu trainable parameters", total));
}

void check_tf_schedule() {
    double a = train::teacher_forcing_ratio(0, 1.0, 0.2, 300);
    double b = train::teacher_forcing_ratio(300, 1.0, 0.2, 300);
    double c = train::teacher_forcing_ratio(150, 1.0, 0.2, 300);
    report("teacher-forcing-schedule", a == 1.0 && b == 0.2 && c == 0.6,
           fmt("tf(0)=%g tf(300)=%g tf(150)=%g", a, b, c));
}

void check_mos() {
    fs::path dir = scratch_dir();
    auto write_fixture = [&](const char* name, const char* body) {
        std::ofstream(dir / name) << body;
        return (dir / name).string();
    };
    std::string f1 = write_fixture("mos1.csv", "s1,r1,4\ns1,r2,4\ns2,r1,4\n");
    std::string f2 = write_fixture("mos2.csv",
                                   "a,r1,3\na,r2,4\na,r3,5\nb,r1,4\nb,r2,3\nb,r3,5\nc,r1,2\nc,r2,4\n");
    std::string got1 = eval::format_mos(eval::mos_stats(eval::load_ratings(f1)));
    std::string got2 = eval::format_mos(eval::mos_stats(eval::load_ratings(f2)));
    // independent oracle for the second fixture
    std::vector<double> xs{3, 4, 5, 4, 3, 5, 2, 4};
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double sigma = std::sqrt(ss / (xs.size() - 1));
    double hw = 1.96 * sigma / std::sqrt(static_cast<double>(xs.size()));
    std::string want2 = fmt("%.3f ± %.3f", mean, hw);
    bool ok = got1 == "4.000 ± 0.000" && got2 == want2;
    report("mos-stats", ok, fmt("[4,4,4] -> %s; 8-rating fixture -> %s (want %s)", got1.c_str(),
                                got2.c_str(), want2.c_str()));
}

void check_determinism() {
    auto corpus = load_synthetic(scratch_dir() / "corpus200", 200, 8);
    auto run = [&]() {
        train::TrainConfig cfg = desk_config();
        cfg.batch_size = 4;
        train::Trainer trainer(cfg, corpus);
        std::ostringstream log;
        trainer.run_steps(100, &log);
        infer::Synthesizer synth(trainer.snapshot());
        infer::SynthOptions opt;
        opt.max_steps = 20;
        opt.griffin_lim_iters = 5;
        infer::SynthesisResult res = synth.synthesize("calm wind sun", opt);
        return std::make_pair(log.str(), res.waveform);
    };
    auto [log_a, wave_a] = run();
    auto [log_b, wave_b] = run();
    bool ok = log_a == log_b && wave_a == wave_b && !wave_a.empty();
    report("determinism", ok,
           fmt("100-step logs %s, waveforms %s (%zu samples)",
               log_a == log_b ? "identical" : "DIFFER",
               wave_a == wave_b ? "bit-identical" : "DIFFER", wave_a.size()));
}

}  // namespace

int main() {
    check_gradients();
    check_guided_mask();
    check_alignment_speedup();
    check_overfit();
    check_forced_band();
    check_griffin_lim();
    check_param_count();
    check_tf_schedule();
    check_mos();
    check_determinism();
    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
