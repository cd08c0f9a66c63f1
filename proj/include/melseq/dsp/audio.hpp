#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "melseq/ad/tensor.hpp"

namespace melseq::dsp {

struct Waveform {
    std::vector<double> samples;  // in [-1, 1]
    int sample_rate = 22050;
    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

struct FrameParams {
    int n_fft = 1024;
    int hop = 256;
    int win = 1024;
    int n_bins() const { return n_fft / 2 + 1; }
};

// All STFT / mel-frontend settings in one place, pinned so runs are
// reproducible.
struct DspConfig {
    int sample_rate = 22050;
    FrameParams frames;
    int n_mels = 80;
    double fmin_hz = 0.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-5;   // magnitude floor before dB
    double min_db = -100.0;    // maps to 0 after normalization
    double ref_db = 20.0;      // maps to 1
    int griffin_lim_iters = 60;

    std::uint64_t hash() const;
    double db_to_unit(double db) const;
    double unit_to_db(double u) const;
};

struct LinearSpectrogram {
    ad::Mat mags;  // n_bins x T, non-negative
    FrameParams frame_params;
};

struct MelSpectrogram {
    ad::Mat mags;  // n_mels x T, in [0, 1]
};

struct MelFilterbank {
    ad::Mat weights;  // n_mels x n_bins
};

// Magnitude STFT with Hann window and reflect center padding.
// T = 1 + floor(len / hop). Throws if the waveform is shorter than one window.
LinearSpectrogram stft(const Waveform& w, const FrameParams& p);

// Complex STFT over an already padded-or-not raw signal domain used by
// Griffin-Lim; same framing as stft().
std::vector<std::vector<std::complex<double>>> stft_complex(const std::vector<double>& samples,
                                                            const FrameParams& p);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels, double fmin_hz,
                             double fmax_hz);

// fb x mags -> 20*log10(max(x, log_floor)) -> affine [min_db, ref_db] -> [0,1], clipped.
MelSpectrogram to_mel(const LinearSpectrogram& lin, const MelFilterbank& fb,
                      const DspConfig& cfg);

// Same log compression/normalization applied to the 513-bin magnitudes
// (training target for the linear head).
ad::Mat normalize_linear(const ad::Mat& mags, const DspConfig& cfg);
ad::Mat denormalize_linear(const ad::Mat& unit, const DspConfig& cfg);

// Iterative phase reconstruction from zero phase. conv_errors, when given,
// receives the spectral-convergence error every `checkpoint_every` iterations.
Waveform griffin_lim(const LinearSpectrogram& mags, int iters, int sample_rate = 22050,
                     std::vector<double>* conv_errors = nullptr, int checkpoint_every = 10);

// ||STFT(w)| - mags||_F / ||mags||_F
double spectral_convergence(const LinearSpectrogram& mags, const Waveform& w);

}  // namespace melseq::dsp
