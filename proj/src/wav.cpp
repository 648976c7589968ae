// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "apollo/common.hpp"

namespace apollo::wav {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const uint8_t* p) { return uint16_t(p[0] | p[1] << 8); }

void wr_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(uint8_t(x));
  v.push_back(uint8_t(x >> 8));
  v.push_back(uint8_t(x >> 16));
  v.push_back(uint8_t(x >> 24));
}
void wr_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(uint8_t(x));
  v.push_back(uint8_t(x >> 8));
}

}  // namespace

std::vector<double> WavData::mono_mix() const {
  check(!channels.empty(), "no audio channels");
  std::vector<double> out(channels[0].size(), 0.0);
  for (const auto& ch : channels)
    for (size_t i = 0; i < out.size(); i++) out[i] += ch[i];
  double inv = 1.0 / double(channels.size());
  for (double& v : out) v *= inv;
  return out;
}

WavData read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("cannot open wav file: " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  uint16_t fmt_tag = 0, n_ch = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const uint8_t* hdr = raw.data() + pos;
    uint32_t chunk_len = rd_u32(hdr + 4);
    const uint8_t* body = hdr + 8;
    if (pos + 8 + chunk_len > raw.size())
      chunk_len = uint32_t(raw.size() - pos - 8);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
      fmt_tag = rd_u16(body);
      n_ch = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
      if (fmt_tag == 0xFFFE && chunk_len >= 40)
        fmt_tag = rd_u16(body + 24);  // extensible: subformat GUID head
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (!data_ptr || n_ch == 0 || rate == 0)
    throw std::runtime_error("malformed wav file: " + path);

  WavData out;
  out.sample_rate = rate;
  int64_t bytes_per = bits / 8;
  if (bytes_per == 0) throw std::runtime_error("bad bit depth in " + path);
  int64_t frames = data_len / (bytes_per * n_ch);
  out.channels.assign(n_ch, std::vector<double>(size_t(frames)));

  if (fmt_tag == 1 && bits == 16) {
    out.format = SampleFormat::pcm16;
    for (int64_t i = 0; i < frames; i++)
      for (int64_t c = 0; c < n_ch; c++) {
        const uint8_t* p = data_ptr + (i * n_ch + c) * 2;
        int16_t v = int16_t(rd_u16(p));
        out.channels[size_t(c)][size_t(i)] = double(v) / 32768.0;
      }
  } else if (fmt_tag == 1 && bits == 24) {
    out.format = SampleFormat::pcm24;
    for (int64_t i = 0; i < frames; i++)
      for (int64_t c = 0; c < n_ch; c++) {
        const uint8_t* p = data_ptr + (i * n_ch + c) * 3;
        int32_t v = int32_t(uint32_t(p[0]) << 8 | uint32_t(p[1]) << 16 |
                            uint32_t(p[2]) << 24) >>
                    8;
        out.channels[size_t(c)][size_t(i)] = double(v) / 8388608.0;
      }
  } else if (fmt_tag == 3 && bits == 32) {
    out.format = SampleFormat::float32;
    for (int64_t i = 0; i < frames; i++)
      for (int64_t c = 0; c < n_ch; c++) {
        const uint8_t* p = data_ptr + (i * n_ch + c) * 4;
        float v;
        uint32_t u = rd_u32(p);
        std::memcpy(&v, &u, 4);
        out.channels[size_t(c)][size_t(i)] = double(v);
      }
  } else {
    throw std::runtime_error("unsupported wav encoding (fmt " +
                             std::to_string(fmt_tag) + ", " +
                             std::to_string(bits) + " bit) in " + path);
  }
  return out;
}

void write(const std::string& path, const WavData& data) {
  check(!data.channels.empty(), "wav write: no channels");
  int64_t n_ch = data.n_channels();
  int64_t frames = data.n_samples();
  for (const auto& ch : data.channels)
    check(int64_t(ch.size()) == frames, "wav write: ragged channels");

  int64_t bytes_per;
  uint16_t fmt_tag;
  switch (data.format) {
    case SampleFormat::pcm16:
      bytes_per = 2;
      fmt_tag = 1;
      break;
    case SampleFormat::pcm24:
      bytes_per = 3;
      fmt_tag = 1;
      break;
    case SampleFormat::float32:
      bytes_per = 4;
      fmt_tag = 3;
      break;
    default:
      throw std::invalid_argument("wav write: bad format");
  }
  uint32_t data_len = uint32_t(frames * n_ch * bytes_per);

  std::vector<uint8_t> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wr_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  wr_u32(out, 16);
  wr_u16(out, fmt_tag);
  wr_u16(out, uint16_t(n_ch));
  wr_u32(out, uint32_t(data.sample_rate));
  wr_u32(out, uint32_t(data.sample_rate * n_ch * bytes_per));
  wr_u16(out, uint16_t(n_ch * bytes_per));
  wr_u16(out, uint16_t(bytes_per * 8));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wr_u32(out, data_len);

  for (int64_t i = 0; i < frames; i++) {
    for (int64_t c = 0; c < n_ch; c++) {
      double v = data.channels[size_t(c)][size_t(i)];
      switch (data.format) {
        case SampleFormat::pcm16: {
          double s = std::clamp(v, -1.0, 1.0) * 32767.0;
          int16_t q = int16_t(std::lrint(s));
          wr_u16(out, uint16_t(q));
          break;
        }
        case SampleFormat::pcm24: {
          double s = std::clamp(v, -1.0, 1.0) * 8388607.0;
          int32_t q = int32_t(std::lrint(s));
          out.push_back(uint8_t(q));
          out.push_back(uint8_t(q >> 8));
          out.push_back(uint8_t(q >> 16));
          break;
        }
        case SampleFormat::float32: {
          float s = float(v);
          uint32_t u;
          std::memcpy(&u, &s, 4);
          wr_u32(out, u);
          break;
        }
      }
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("cannot write wav file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          std::streamsize(out.size()));
  if (!f.good()) throw std::runtime_error("wav write failed: " + path);
}

}  // namespace apollo::wav
