#include "doctest.h"

#include <fstream>
#include <random>

#include "sepipe/audio/dataset.hpp"
#include "test_util.hpp"

using namespace sepipe;
using namespace sepipe::audio;

namespace {

struct DataFixture {
  testutil::TempDir dir{"dataset"};
  std::string manifest_path;

  DataFixture(int utterances = 2, std::size_t clean_len = 8000, std::size_t noise_len = 20000) {
    std::mt19937_64 rng(141);
    std::string lines;
    for (int i = 0; i < utterances; ++i) {
      Waveform clean;
      clean.sample_rate_hz = 16000;
      clean.samples = testutil::rand_signal(clean_len, rng, 0.4);
      Waveform noise;
      noise.sample_rate_hz = 16000;
      noise.samples = testutil::rand_signal(noise_len, rng, 0.4);
      std::string c = dir.file("clean" + std::to_string(i) + ".wav");
      std::string n = dir.file("noise" + std::to_string(i) + ".wav");
      save_wav(c, clean);
      save_wav(n, noise);
      lines += c + " " + n + " " + std::to_string(2.5 * i) + " " + std::to_string(100 + i) + "\n";
    }
    manifest_path = dir.file("manifest.txt");
    std::ofstream f(manifest_path);
    f << "# clean noise snr_db seed\n" << lines;
  }
};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("manifest parses records, resolves paths, rejects duplicates") {
  DataFixture fx;
  Manifest m = load_manifest(fx.manifest_path);
  CHECK(m.entries.size() == 2);
  CHECK(m.entries[0].snr_db == 0.0);
  CHECK(m.entries[1].snr_db == 2.5);
  CHECK(m.entries[1].seed == 101);

  // duplicate record
  std::string dup = fx.dir.file("dup.txt");
  {
    std::ofstream f(dup);
    f << fx.manifest_path << "\n";  // malformed too few fields
  }
  CHECK_THROWS_AS(load_manifest(dup), Error);

  std::string dup2 = fx.dir.file("dup2.txt");
  {
    std::ifstream in(fx.manifest_path);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream f(dup2);
    f << all;
    // repeat the first record
    std::istringstream ss(all);
    std::string line;
    std::getline(ss, line);  // comment
    std::getline(ss, line);
    f << line << "\n";
  }
  CHECK_THROWS_WITH_AS(load_manifest(dup2), doctest::Contains("duplicate"), Error);

  std::string missing = fx.dir.file("missing.txt");
  {
    std::ofstream f(missing);
    f << fx.dir.file("nope.wav") << " " << fx.dir.file("nope2.wav") << " 0 1\n";
  }
  CHECK_THROWS_WITH_AS(load_manifest(missing), doctest::Contains("missing"), Error);

  std::string empty = fx.dir.file("empty.txt");
  {
    std::ofstream f(empty);
    f << "# nothing here\n";
  }
  CHECK_THROWS_WITH_AS(load_manifest(empty), doctest::Contains("no entries"), Error);
}

TEST_CASE("build_batch crops noisy and clean with the same frame window") {
  DataFixture fx;
  Manifest m = load_manifest(fx.manifest_path);
  dsp::StftParams p;
  SpectrogramBatch b = build_batch(m, {0, 1}, 16, 7, p, 16000);
  CHECK(b.noisy_re.shape() == nn::Shape{2, 1, 16, 161});
  CHECK(b.valid_frames == std::vector<int>{16, 16});

  // The clean crop equals the stft of the clean signal at the same window:
  // verify via the mixture relation noisy - clean = scaled noise, which holds
  // cellwise in the spectrogram domain by linearity of the STFT.
  RenderedPair pair = render_entry(m.entries[0], 16000);
  dsp::ComplexSpectrogram noisy = dsp::stft(pair.noisy, p);
  dsp::ComplexSpectrogram clean = dsp::stft(pair.clean, p);
  // locate the crop by matching the first frame
  int T = noisy.frames;
  int found = -1;
  for (int start = 0; start + 16 <= T; ++start) {
    bool match = true;
    for (int k = 0; k < 161 && match; ++k)
      if (std::abs(noisy.at(start, k).real() - b.noisy_re.at(0, 0, 0, k)) > 1e-12) match = false;
    if (match) {
      found = start;
      break;
    }
  }
  REQUIRE(found >= 0);
  for (int t = 0; t < 16; ++t)
    for (int k = 0; k < 161; ++k) {
      CHECK(b.clean_re.at(0, 0, t, k) ==
            doctest::Approx(clean.at(found + t, k).real()).epsilon(1e-12));
      CHECK(b.noisy_im.at(0, 0, t, k) ==
            doctest::Approx(noisy.at(found + t, k).imag()).epsilon(1e-12));
    }
}

TEST_CASE("same seed gives an identical batch; crop of full length is the identity") {
  DataFixture fx;
  Manifest m = load_manifest(fx.manifest_path);
  dsp::StftParams p;
  SpectrogramBatch a = build_batch(m, {0, 1}, 12, 55, p, 16000);
  SpectrogramBatch b = build_batch(m, {0, 1}, 12, 55, p, 16000);
  for (std::size_t i = 0; i < a.noisy_re.size(); ++i) {
    CHECK(a.noisy_re[i] == b.noisy_re[i]);
    CHECK(a.clean_im[i] == b.clean_im[i]);
  }

  RenderedPair pair = render_entry(m.entries[0], 16000);
  dsp::ComplexSpectrogram noisy = dsp::stft(pair.noisy, p);
  SpectrogramBatch full = build_batch(m, {0}, noisy.frames, 55, p, 16000);
  CHECK(full.valid_frames[0] == noisy.frames);
  for (int t = 0; t < noisy.frames; ++t)
    for (int k = 0; k < 161; ++k)
      CHECK(full.noisy_re.at(0, 0, t, k) == doctest::Approx(noisy.at(t, k).real()).epsilon(1e-12));
}

TEST_CASE("short utterances are zero-padded and flagged") {
  DataFixture fx(1, 3000, 8000);  // ~20 frames
  Manifest m = load_manifest(fx.manifest_path);
  dsp::StftParams p;
  RenderedPair pair = render_entry(m.entries[0], 16000);
  int frames = dsp::stft(pair.noisy, p).frames;
  SpectrogramBatch b = build_batch(m, {0}, frames + 10, 3, p, 16000);
  CHECK(b.valid_frames[0] == frames);
  for (int t = frames; t < frames + 10; ++t)
    for (int k = 0; k < 161; ++k) {
      CHECK(b.noisy_re.at(0, 0, t, k) == 0.0);
      CHECK(b.clean_re.at(0, 0, t, k) == 0.0);
    }
}

TEST_CASE("empty indices are rejected") {
  DataFixture fx;
  Manifest m = load_manifest(fx.manifest_path);
  CHECK_THROWS_AS(build_batch(m, {}, 8, 1, dsp::StftParams{}, 16000), Error);
}

}  // TEST_SUITE
