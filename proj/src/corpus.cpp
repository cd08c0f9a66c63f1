#include "melseq/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "melseq/dsp/mspc.hpp"
#include "melseq/dsp/wav.hpp"

namespace fs = std::filesystem;

namespace melseq::data {

namespace {

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 15];
    while (f) {
        f.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> load_metadata(const std::string& corpus_dir) {
    const std::string path = corpus_dir + "/metadata.csv";
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_metadata: cannot open " + path);
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    int skipped = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::size_t p1 = line.find('|');
        if (p1 == std::string::npos || p1 == 0) {
            ++skipped;
            continue;
        }
        std::size_t p2 = line.find('|', p1 + 1);
        std::string id = line.substr(0, p1);
        // prefer the normalized column; a 2-field row falls back to field 2
        std::string text = p2 == std::string::npos ? line.substr(p1 + 1)
                                                   : line.substr(p2 + 1);
        if (text.empty()) {
            ++skipped;
            continue;
        }
        rows.emplace_back(std::move(id), std::move(text));
    }
    if (skipped > 0)
        std::cerr << "load_metadata: skipped " << skipped << " malformed line(s) in " << path
                  << "\n";
    if (rows.empty()) throw std::runtime_error("load_metadata: no valid rows in " + path);
    return rows;
}

Batch make_batch(const std::vector<const Utterance*>& utts, int r) {
    if (utts.empty()) throw std::invalid_argument("make_batch: empty utterance list");
    Batch b;
    b.size = static_cast<int>(utts.size());
    b.r = r;
    const int n_mels = utts[0]->mel.rows;
    const int n_bins = utts[0]->linear.rows;
    for (const Utterance* u : utts) {
        if (u->frames() == 0)
            throw std::invalid_argument("make_batch: utterance " + u->id + " has zero frames");
        b.n_max = std::max(b.n_max, static_cast<int>(u->char_ids.size()));
        b.t_max = std::max(b.t_max, u->frames());
    }
    b.t_max = (b.t_max + r - 1) / r * r;  // pad to a multiple of r
    b.steps = b.t_max / r;

    for (const Utterance* u : utts) {
        std::vector<int> ids(u->char_ids);
        ids.resize(b.n_max, 0);
        b.char_ids.push_back(std::move(ids));
        b.char_lengths.push_back(static_cast<int>(u->char_ids.size()));
        b.frame_lengths.push_back(u->frames());
        b.step_counts.push_back((u->frames() + r - 1) / r);

        ad::Mat mel(n_mels, b.t_max), lin(n_bins, b.t_max);
        for (int t = 0; t < u->frames(); ++t) {
            for (int k = 0; k < n_mels; ++k) mel.at(k, t) = u->mel.at(k, t);
            for (int k = 0; k < n_bins; ++k) lin.at(k, t) = u->linear.at(k, t);
        }
        b.mel_targets.push_back(std::move(mel));
        b.linear_targets.push_back(std::move(lin));
    }

    for (int s = 0; s < b.steps; ++s) {
        ad::Mat mg(n_mels * r, b.size), mm(n_mels * r, b.size);
        ad::Mat lg(n_bins * r, b.size), lm(n_bins * r, b.size);
        ad::Mat st(1, b.size), sm(1, b.size);
        for (int i = 0; i < b.size; ++i) {
            for (int j = 0; j < r; ++j) {
                int t = s * r + j;
                bool real = t < b.frame_lengths[i];
                for (int k = 0; k < n_mels; ++k) {
                    mg.at(j * n_mels + k, i) = b.mel_targets[i].at(k, t);
                    mm.at(j * n_mels + k, i) = real ? 1.0 : 0.0;
                }
                for (int k = 0; k < n_bins; ++k) {
                    lg.at(j * n_bins + k, i) = b.linear_targets[i].at(k, t);
                    lm.at(j * n_bins + k, i) = real ? 1.0 : 0.0;
                }
            }
            st.at(0, i) = s >= b.step_counts[i] - 1 ? 1.0 : 0.0;
            sm.at(0, i) = s < b.step_counts[i] ? 1.0 : 0.0;
        }
        b.mel_groups.push_back(std::move(mg));
        b.mel_group_mask.push_back(std::move(mm));
        b.lin_groups.push_back(std::move(lg));
        b.lin_group_mask.push_back(std::move(lm));
        b.stop_targets.push_back(std::move(st));
        b.stop_mask.push_back(std::move(sm));
    }
    return b;
}

std::vector<Utterance> load_corpus(const std::string& corpus_dir, const dsp::DspConfig& cfg,
                                   const CharVocab& vocab, const LoadOptions& opt) {
    auto rows = load_metadata(corpus_dir);

    struct Entry {
        std::string id, text, wav_path;
        std::uintmax_t wav_bytes;
    };
    std::vector<Entry> entries;
    for (auto& [id, text] : rows) {
        std::string wav = corpus_dir + "/wavs/" + id + ".wav";
        std::error_code ec;
        auto sz = fs::file_size(wav, ec);
        if (ec) {
            std::cerr << "load_corpus: missing " << wav << ", skipping\n";
            continue;
        }
        entries.push_back({id, text, wav, sz});
    }
    if (entries.empty()) throw std::runtime_error("load_corpus: no usable utterances in " + corpus_dir);

    if (opt.max_utts > 0 && static_cast<int>(entries.size()) > opt.max_utts) {
        // shortest K by audio length; ties broken by id so selection is stable
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            return a.wav_bytes != b.wav_bytes ? a.wav_bytes < b.wav_bytes : a.id < b.id;
        });
        entries.resize(opt.max_utts);
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.id < b.id; });
    }

    std::string cache = opt.cache_dir.empty() ? corpus_dir + "/cache" : opt.cache_dir;
    fs::create_directories(cache);

    auto fb = dsp::mel_filterbank(cfg.sample_rate, cfg.frames.n_fft, cfg.n_mels, cfg.fmin_hz,
                                  cfg.fmax_hz);

    std::vector<Utterance> out;
    out.reserve(entries.size());
    for (const Entry& e : entries) {
        Utterance u;
        u.id = e.id;
        u.text = normalize_text(e.text, vocab);
        u.char_ids = vocab.encode(u.text);

        const std::string mel_path = cache + "/" + e.id + ".mel.mspc";
        const std::string lin_path = cache + "/" + e.id + ".lin.mspc";
        const std::string key_path = cache + "/" + e.id + ".key";
        const std::string key = hex64(fnv1a_file(e.wav_path) ^ cfg.hash());

        bool cached = false;
        if (fs::exists(mel_path) && fs::exists(lin_path) && fs::exists(key_path)) {
            std::ifstream kf(key_path);
            std::string have;
            kf >> have;
            cached = have == key;
        }
        if (cached) {
            u.mel = dsp::mspc_read(mel_path);
            u.linear = dsp::mspc_read(lin_path);
        } else {
            dsp::Waveform w = dsp::wav_read(e.wav_path);
            auto lin = dsp::stft(w, cfg.frames);
            dsp::mspc_write(mel_path, dsp::to_mel(lin, fb, cfg).mags);
            dsp::mspc_write(lin_path, dsp::normalize_linear(lin.mags, cfg));
            std::ofstream kf(key_path);
            kf << key << "\n";
            // read back so warm and cold loads see identical (float32) features
            u.mel = dsp::mspc_read(mel_path);
            u.linear = dsp::mspc_read(lin_path);
        }
        if (opt.verbose)
            std::cerr << "load_corpus: " << e.id << " chars=" << u.char_ids.size()
                      << " frames=" << u.frames() << (cached ? " (cached)" : "") << "\n";
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace melseq::data
