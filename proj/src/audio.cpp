#include "a2a/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>

#include "a2a/common.hpp"

namespace a2a {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const unsigned char* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void wr_u32(std::string& s, uint32_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 24) & 0xff));
}
void wr_u16(std::string& s, uint16_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::string raw = read_text_file(path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());
  size_t n = raw.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) || std::memcmp(p + 8, "WAVE", 4))
    fail("format error: not a RIFF/WAVE file: " + path);

  int channels = -1, bits = -1, rate = -1;
  size_t data_off = 0, data_len = 0;
  size_t off = 12;
  while (off + 8 <= n) {
    uint32_t len = rd_u32(p + off + 4);
    if (!std::memcmp(p + off, "fmt ", 4)) {
      if (len < 16) fail("format error: truncated fmt chunk: " + path);
      uint16_t fmt_tag = rd_u16(p + off + 8);
      if (fmt_tag != 1) fail("format error: audio_format must be PCM, got " + std::to_string(fmt_tag));
      channels = rd_u16(p + off + 10);
      rate = int(rd_u32(p + off + 12));
      bits = rd_u16(p + off + 22);
    } else if (!std::memcmp(p + off, "data", 4)) {
      data_off = off + 8;
      data_len = len;
    }
    off += 8 + len + (len & 1);
  }
  if (channels < 0) fail("format error: missing fmt chunk: " + path);
  if (channels != 1) fail("format error: channels must be 1, got " + std::to_string(channels));
  if (bits != 16) fail("format error: bits_per_sample must be 16, got " + std::to_string(bits));
  if (!data_off) fail("format error: missing data chunk: " + path);
  if (data_off + data_len > n) fail("format error: data chunk exceeds file size: " + path);

  AudioClip clip;
  clip.sample_rate = rate;
  size_t count = data_len / 2;
  clip.samples.resize(count);
  for (size_t i = 0; i < count; i++) {
    int16_t v = int16_t(rd_u16(p + data_off + 2 * i));
    clip.samples[i] = double(v) / 32768.0;
  }
  return clip;
}

void write_wav(const AudioClip& clip, const std::string& path) {
  size_t count = clip.samples.size();
  std::string out;
  out.reserve(44 + count * 2);
  out += "RIFF";
  wr_u32(out, uint32_t(36 + count * 2));
  out += "WAVEfmt ";
  wr_u32(out, 16);
  wr_u16(out, 1);  // PCM
  wr_u16(out, 1);  // mono
  wr_u32(out, uint32_t(clip.sample_rate));
  wr_u32(out, uint32_t(clip.sample_rate * 2));
  wr_u16(out, 2);
  wr_u16(out, 16);
  out += "data";
  wr_u32(out, uint32_t(count * 2));
  for (size_t i = 0; i < count; i++) {
    double x = clip.samples[i] * 32768.0;
    double r = std::floor(x + 0.5);
    if (r > 32767.0) r = 32767.0;
    if (r < -32768.0) r = -32768.0;
    wr_u16(out, uint16_t(int16_t(r)));
  }
  write_text_file(path, out);
}

}  // namespace a2a
