#include "sepipe/audio/wav.hpp"

#include <cstring>
#include <fstream>

namespace sepipe::audio {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<unsigned char>& v, uint32_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 24) & 0xff);
}
void wr_u16(std::vector<unsigned char>& v, uint16_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xfffe;

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "unreadable file: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  require(buf.size() >= 44 && std::memcmp(buf.data(), "RIFF", 4) == 0 &&
              std::memcmp(buf.data() + 8, "WAVE", 4) == 0,
          "unreadable file (not a RIFF/WAVE): " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    uint32_t chunk_len = rd_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + chunk_len > buf.size()) chunk_len = static_cast<uint32_t>(buf.size() - pos - 8);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
      if (format == kFormatExtensible && chunk_len >= 40) format = rd_u16(body + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  require(have_fmt && data != nullptr, "unreadable file (missing fmt/data chunk): " + path);
  require(channels == 1, "multi-channel unsupported: " + path + " has " +
                             std::to_string(channels) + " channels");
  require((format == kFormatPcm && bits == 16) || (format == kFormatFloat && bits == 32),
          "unsupported encoding in " + path + ": format " + std::to_string(format) + ", " +
              std::to_string(bits) + " bits (want 16-bit PCM or 32-bit float)");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  if (format == kFormatPcm) {
    std::size_t n = data_len / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      int16_t s = static_cast<int16_t>(rd_u16(data + 2 * i));
      w.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else {
    std::size_t n = data_len / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      uint32_t u = rd_u32(data + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      w.samples[i] = static_cast<double>(v);
    }
  }
  w.validate();
  return w;
}

void save_wav(const std::string& path, const Waveform& w, WavEncoding enc) {
  w.validate();
  std::vector<unsigned char> out;
  uint16_t bits = enc == WavEncoding::pcm16 ? 16 : 32;
  uint16_t fmt = enc == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat;
  uint32_t bytes_per_sample = bits / 8;
  uint32_t data_len = static_cast<uint32_t>(w.samples.size() * bytes_per_sample);

  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wr_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  wr_u32(out, 16);
  wr_u16(out, fmt);
  wr_u16(out, 1);  // mono
  wr_u32(out, static_cast<uint32_t>(w.sample_rate_hz));
  wr_u32(out, static_cast<uint32_t>(w.sample_rate_hz) * bytes_per_sample);
  wr_u16(out, static_cast<uint16_t>(bytes_per_sample));
  wr_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wr_u32(out, data_len);

  if (enc == WavEncoding::pcm16) {
    for (double s : w.samples) {
      double v = std::max(-1.0, std::min(1.0, s)) * 32767.0;
      int16_t q = static_cast<int16_t>(std::lrint(v));
      wr_u16(out, static_cast<uint16_t>(q));
    }
  } else {
    for (double s : w.samples) {
      float v = static_cast<float>(s);
      uint32_t u;
      std::memcpy(&u, &v, 4);
      wr_u32(out, u);
    }
  }

  std::ofstream f(path, std::ios::binary);
  require_runtime(static_cast<bool>(f), "cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  require_runtime(static_cast<bool>(f), "short write: " + path);
}

}  // namespace sepipe::audio
