#include "melseq/dsp/audio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "melseq/dsp/fft.hpp"

namespace melseq::dsp {

namespace {

std::vector<double> hann_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    return w;
}

// reflect pad by n_fft/2 on each side
std::vector<double> center_pad(const std::vector<double>& x, int pad) {
    std::vector<double> out;
    out.reserve(x.size() + 2 * pad);
    const int n = static_cast<int>(x.size());
    for (int i = pad; i > 0; --i) out.push_back(x[std::min(i, n - 1)]);
    out.insert(out.end(), x.begin(), x.end());
    for (int i = 2; i <= pad + 1; ++i) out.push_back(x[std::max(n - i, 0)]);
    return out;
}

}  // namespace

std::uint64_t DspConfig::hash() const {
    // FNV-1a over the fields that change the produced features
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(sample_rate));
    mix(static_cast<std::uint64_t>(frames.n_fft));
    mix(static_cast<std::uint64_t>(frames.hop));
    mix(static_cast<std::uint64_t>(frames.win));
    mix(static_cast<std::uint64_t>(n_mels));
    auto bits = [](double d) {
        std::uint64_t u;
        static_assert(sizeof(u) == sizeof(d));
        __builtin_memcpy(&u, &d, 8);
        return u;
    };
    mix(bits(fmin_hz));
    mix(bits(fmax_hz));
    mix(bits(log_floor));
    mix(bits(min_db));
    mix(bits(ref_db));
    return h;
}

double DspConfig::db_to_unit(double db) const {
    return std::clamp((db - min_db) / (ref_db - min_db), 0.0, 1.0);
}

double DspConfig::unit_to_db(double u) const { return u * (ref_db - min_db) + min_db; }

std::vector<std::vector<std::complex<double>>> stft_complex(const std::vector<double>& samples,
                                                            const FrameParams& p) {
    const int pad = p.n_fft / 2;
    std::vector<double> x = center_pad(samples, pad);
    const int T = 1 + static_cast<int>(samples.size()) / p.hop;
    std::vector<double> win = hann_window(p.win);
    std::vector<std::vector<std::complex<double>>> frames(T);
    for (int f = 0; f < T; ++f) {
        std::vector<std::complex<double>> buf(p.n_fft, 0.0);
        const int start = f * p.hop;
        for (int i = 0; i < p.win; ++i) {
            std::size_t idx = static_cast<std::size_t>(start + i);
            double s = idx < x.size() ? x[idx] : 0.0;
            buf[i] = s * win[i];
        }
        fft(buf, false);
        buf.resize(p.n_bins());
        frames[f] = std::move(buf);
    }
    return frames;
}

LinearSpectrogram stft(const Waveform& w, const FrameParams& p) {
    if (static_cast<int>(w.samples.size()) < p.win)
        throw std::invalid_argument("stft: waveform shorter than one window (" +
                                    std::to_string(w.samples.size()) + " < " +
                                    std::to_string(p.win) + " samples)");
    auto frames = stft_complex(w.samples, p);
    LinearSpectrogram out;
    out.frame_params = p;
    out.mags = ad::Mat(p.n_bins(), static_cast<int>(frames.size()));
    for (int f = 0; f < out.mags.cols; ++f)
        for (int b = 0; b < out.mags.rows; ++b) out.mags.at(b, f) = std::abs(frames[f][b]);
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels, double fmin_hz,
                             double fmax_hz) {
    if (!(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= sample_rate / 2.0))
        throw std::invalid_argument("mel_filterbank: invalid frequency range [" +
                                    std::to_string(fmin_hz) + ", " + std::to_string(fmax_hz) +
                                    "] for sr " + std::to_string(sample_rate));
    const int n_bins = n_fft / 2 + 1;
    // n_mels + 2 equally spaced points on the mel scale
    std::vector<double> hz(n_mels + 2);
    const double m_lo = hz_to_mel(fmin_hz), m_hi = hz_to_mel(fmax_hz);
    for (int i = 0; i < n_mels + 2; ++i)
        hz[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));

    MelFilterbank fb;
    fb.weights = ad::Mat(n_mels, n_bins);
    for (int k = 0; k < n_mels; ++k) {
        double lo = hz[k], mid = hz[k + 1], hi = hz[k + 2];
        for (int b = 0; b < n_bins; ++b) {
            double f = static_cast<double>(b) * sample_rate / n_fft;
            double up = (f - lo) / (mid - lo);
            double down = (hi - f) / (hi - mid);
            fb.weights.at(k, b) = std::max(0.0, std::min(up, down));
        }
    }
    return fb;
}

MelSpectrogram to_mel(const LinearSpectrogram& lin, const MelFilterbank& fb,
                      const DspConfig& cfg) {
    if (fb.weights.cols != lin.mags.rows)
        throw std::invalid_argument("to_mel: bin count mismatch (" + fb.weights.shape_str() +
                                    " vs " + lin.mags.shape_str() + ")");
    MelSpectrogram out;
    out.mags = ad::Mat(fb.weights.rows, lin.mags.cols);
    for (int k = 0; k < fb.weights.rows; ++k)
        for (int t = 0; t < lin.mags.cols; ++t) {
            double acc = 0.0;
            for (int b = 0; b < fb.weights.cols; ++b)
                acc += fb.weights.at(k, b) * lin.mags.at(b, t);
            double db = 20.0 * std::log10(std::max(acc, cfg.log_floor));
            out.mags.at(k, t) = cfg.db_to_unit(db);
        }
    return out;
}

ad::Mat normalize_linear(const ad::Mat& mags, const DspConfig& cfg) {
    ad::Mat out(mags.rows, mags.cols);
    for (std::size_t i = 0; i < mags.size(); ++i)
        out.v[i] = cfg.db_to_unit(20.0 * std::log10(std::max(mags.v[i], cfg.log_floor)));
    return out;
}

ad::Mat denormalize_linear(const ad::Mat& unit, const DspConfig& cfg) {
    ad::Mat out(unit.rows, unit.cols);
    for (std::size_t i = 0; i < unit.size(); ++i)
        out.v[i] = std::pow(10.0, cfg.unit_to_db(std::clamp(unit.v[i], 0.0, 1.0)) / 20.0);
    return out;
}

namespace {

std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames,
                          const FrameParams& p, int out_len) {
    const int pad = p.n_fft / 2;
    const int padded_len = (static_cast<int>(frames.size()) - 1) * p.hop + p.n_fft;
    std::vector<double> acc(padded_len, 0.0), norm(padded_len, 0.0);
    std::vector<double> win = hann_window(p.win);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::vector<std::complex<double>> buf(p.n_fft);
        for (int b = 0; b < p.n_bins(); ++b) buf[b] = frames[f][b];
        for (int b = p.n_bins(); b < p.n_fft; ++b) buf[b] = std::conj(frames[f][p.n_fft - b]);
        fft(buf, true);
        const int start = static_cast<int>(f) * p.hop;
        for (int i = 0; i < p.win; ++i) {
            acc[start + i] += buf[i].real() * win[i];
            norm[start + i] += win[i] * win[i];
        }
    }
    std::vector<double> out(out_len, 0.0);
    for (int i = 0; i < out_len; ++i) {
        double d = norm[pad + i];
        out[i] = d > 1e-9 ? acc[pad + i] / d : 0.0;
    }
    return out;
}

}  // namespace

Waveform griffin_lim(const LinearSpectrogram& mags, int iters, int sample_rate,
                     std::vector<double>* conv_errors, int checkpoint_every) {
    if (iters < 1) throw std::invalid_argument("griffin_lim: iters must be >= 1");
    const FrameParams& p = mags.frame_params;
    if (mags.mags.rows != p.n_bins())
        throw std::invalid_argument("griffin_lim: " + std::to_string(mags.mags.rows) +
                                    " bins do not match n_fft " + std::to_string(p.n_fft));
    const int T = mags.mags.cols;
    const int out_len = (T - 1) * p.hop;
    Waveform w;
    w.sample_rate = sample_rate;
    if (out_len <= 0) return w;

    double mag_norm = 0.0;
    for (double m : mags.mags.v) mag_norm += m * m;
    mag_norm = std::sqrt(mag_norm);
    if (mag_norm == 0.0) {  // silence in, silence out
        w.samples.assign(out_len, 0.0);
        return w;
    }

    // zero initial phase
    std::vector<std::vector<std::complex<double>>> spec(T);
    for (int f = 0; f < T; ++f) {
        spec[f].resize(p.n_bins());
        for (int b = 0; b < p.n_bins(); ++b) spec[f][b] = mags.mags.at(b, f);
    }

    std::vector<double> x;
    for (int it = 0; it < iters; ++it) {
        x = istft(spec, p, out_len);
        auto est = stft_complex(x, p);
        if (conv_errors && (it % checkpoint_every == 0 || it == iters - 1)) {
            double err = 0.0;
            for (int f = 0; f < T && f < static_cast<int>(est.size()); ++f)
                for (int b = 0; b < p.n_bins(); ++b) {
                    double d = std::abs(est[f][b]) - mags.mags.at(b, f);
                    err += d * d;
                }
            conv_errors->push_back(std::sqrt(err) / mag_norm);
        }
        // keep estimated phase, snap magnitude back to the target
        for (int f = 0; f < T; ++f)
            for (int b = 0; b < p.n_bins(); ++b) {
                double a = std::abs(est[f][b]);
                spec[f][b] = a > 1e-12 ? est[f][b] / a * mags.mags.at(b, f)
                                       : std::complex<double>(mags.mags.at(b, f), 0.0);
            }
    }
    w.samples = istft(spec, p, out_len);
    return w;
}

double spectral_convergence(const LinearSpectrogram& mags, const Waveform& w) {
    LinearSpectrogram est = stft(w, mags.frame_params);
    double num = 0.0, den = 0.0;
    const int T = std::min(mags.mags.cols, est.mags.cols);
    for (int b = 0; b < mags.mags.rows; ++b)
        for (int t = 0; t < T; ++t) {
            double d = est.mags.at(b, t) - mags.mags.at(b, t);
            num += d * d;
            den += mags.mags.at(b, t) * mags.mags.at(b, t);
        }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace melseq::dsp
