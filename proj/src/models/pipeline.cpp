#include "sepipe/models/pipeline.hpp"

#include <set>

namespace sepipe::models {

using namespace sepipe::nn;

TwoStageModel::TwoStageModel(const ModelSpec& s)
    : spec(s),
      g_xy("g_xy", s.generator, seed_stream(s.init_seed, 1)),
      f_yx("f_yx", s.generator, seed_stream(s.init_seed, 2)),
      d_x("d_x", s.discriminator, seed_stream(s.init_seed, 3)),
      d_y("d_y", s.discriminator, seed_stream(s.init_seed, 4)),
      dcd("dcd", s.dcd, seed_stream(s.init_seed, 5)) {
  spec.stft.validate();
  auto all = params();
  std::set<std::string> names;
  for (Parameter* p : all)
    require(names.insert(p->name).second, "duplicate parameter name: " + p->name);
}

std::vector<Parameter*> TwoStageModel::params() {
  std::vector<Parameter*> out;
  g_xy.collect(out);
  f_yx.collect(out);
  d_x.collect(out);
  d_y.collect(out);
  dcd.collect(out);
  return out;
}

std::vector<Parameter*> TwoStageModel::generator_params() {
  std::vector<Parameter*> out;
  g_xy.collect(out);
  f_yx.collect(out);
  return out;
}

std::vector<Parameter*> TwoStageModel::discriminator_params() {
  std::vector<Parameter*> out;
  d_x.collect(out);
  d_y.collect(out);
  return out;
}

std::vector<Parameter*> TwoStageModel::dcd_params() {
  std::vector<Parameter*> out;
  dcd.collect(out);
  return out;
}

void TwoStageModel::sn_update() {
  d_x.sn_update();
  d_y.sn_update();
}

void TwoStageModel::save_tensors(TensorStore& store) const {
  auto& self = const_cast<TwoStageModel&>(*this);
  for (Parameter* p : self.params()) store.put("param." + p->name, p->value);
  auto dump_sn = [&store](const char* name, Discriminator& d) {
    auto& sn = d.sn_state();
    for (std::size_t i = 0; i < sn.size(); ++i) {
      store.put("sn." + std::string(name) + "." + std::to_string(i) + ".u", sn[i].u);
      store.put("sn." + std::string(name) + "." + std::to_string(i) + ".v", sn[i].v);
    }
  };
  dump_sn("d_x", self.d_x);
  dump_sn("d_y", self.d_y);
}

void TwoStageModel::load_tensors(const TensorStore& store) {
  for (Parameter* p : params()) {
    const Tensor& t = store.get("param." + p->name);
    require(t.shape() == p->value.shape(),
            "checkpoint shape mismatch for " + p->name + ": " + t.shape().str() + " vs " +
                p->value.shape().str());
    p->value = t;
    p->zero_grad();
  }
  auto load_sn = [&store](const char* name, Discriminator& d) {
    auto& sn = d.sn_state();
    for (std::size_t i = 0; i < sn.size(); ++i) {
      sn[i].u = store.get("sn." + std::string(name) + "." + std::to_string(i) + ".u");
      sn[i].v = store.get("sn." + std::string(name) + "." + std::to_string(i) + ".v");
    }
  };
  load_sn("d_x", d_x);
  load_sn("d_y", d_y);
}

Tensor spec_real(const dsp::ComplexSpectrogram& s) {
  Tensor t(Shape{1, 1, s.frames, s.bins});
  for (std::size_t i = 0; i < s.data.size(); ++i) t[i] = s.data[i].real();
  return t;
}

Tensor spec_imag(const dsp::ComplexSpectrogram& s) {
  Tensor t(Shape{1, 1, s.frames, s.bins});
  for (std::size_t i = 0; i < s.data.size(); ++i) t[i] = s.data[i].imag();
  return t;
}

Tensor spec_magnitude(const dsp::ComplexSpectrogram& s) {
  Tensor t(Shape{1, 1, s.frames, s.bins});
  for (std::size_t i = 0; i < s.data.size(); ++i) t[i] = std::abs(s.data[i]);
  return t;
}

dsp::ComplexSpectrogram tensors_to_spec(const Tensor& re, const Tensor& im, int batch,
                                        const dsp::StftParams& p) {
  require(re.shape() == im.shape(), "tensors_to_spec: shape mismatch");
  const Shape& s = re.shape();
  require(batch >= 0 && batch < s.b && s.c == 1, "tensors_to_spec: bad batch index or channels");
  dsp::ComplexSpectrogram out;
  out.frames = s.t;
  out.bins = s.f;
  out.params = p;
  out.data.resize(static_cast<std::size_t>(s.t) * s.f);
  std::size_t off = static_cast<std::size_t>(batch) * out.data.size();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = {re[off + i], im[off + i]};
  return out;
}

EnhanceTrace two_stage_enhance_trace(const audio::Waveform& noisy, TwoStageModel& model) {
  noisy.validate();
  EnhanceTrace tr;
  tr.noisy_spec = dsp::stft(noisy, model.spec.stft);

  GradTape t;
  Var mag = t.constant(spec_magnitude(tr.noisy_spec));
  Var est_mag = model.g_xy.forward(t, mag);

  // Couple the estimated magnitude with the original noisy phase.
  const Tensor& m = t.value(est_mag);
  std::vector<double> ph = dsp::phase(tr.noisy_spec);
  Tensor re(m.shape()), im(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) {
    re[i] = m[i] * std::cos(ph[i]);
    im[i] = m[i] * std::sin(ph[i]);
  }
  tr.stage1_spec = tensors_to_spec(re, im, 0, model.spec.stft);

  CVar coarse{t.constant(std::move(re)), t.constant(std::move(im))};
  Denoiser::Output out = model.dcd.forward(t, coarse);
  tr.enhanced_spec = tensors_to_spec(t.value(out.enhanced.re), t.value(out.enhanced.im), 0,
                                     model.spec.stft);

  tr.enhanced = dsp::istft(tr.enhanced_spec, model.spec.stft, noisy.samples.size());
  tr.enhanced.sample_rate_hz = noisy.sample_rate_hz;
  return tr;
}

audio::Waveform two_stage_enhance(const audio::Waveform& noisy, TwoStageModel& model) {
  return two_stage_enhance_trace(noisy, model).enhanced;
}

}  // namespace sepipe::models
