#pragma once

#include <string>

#include "melseq/dsp/audio.hpp"

namespace melseq::dsp {

// 16-bit PCM mono RIFF/WAVE only; anything else is rejected with a message
// naming the offending field.
Waveform wav_read(const std::string& path);
void wav_write(const std::string& path, const Waveform& w);

}  // namespace melseq::dsp
