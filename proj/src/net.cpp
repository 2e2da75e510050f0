#include "dhp/net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "dhp/error.hpp"
#include "dhp/simd/kernels.hpp"
#include "json.hpp"

namespace dhp::net {

const std::vector<TensorInfo>& tensor_layout() {
  static const std::vector<TensorInfo> layout = [] {
    std::vector<TensorInfo> t;
    auto add = [&t](std::string name, std::vector<int> shape) {
      std::size_t count = 1;
      for (int d : shape) count *= std::size_t(d);
      const std::size_t offset = t.empty() ? 0 : t.back().offset + t.back().count;
      t.push_back({std::move(name), std::move(shape), offset, count});
    };
    for (int l = 0; l < kConvLayers; ++l) {
      add("conv" + std::to_string(l + 1) + ".weight", {kChannels, kConvInChannels[l], 3, 3});
      add("conv" + std::to_string(l + 1) + ".bias", {kChannels});
    }
    add("lstm.weight_input", {kGates, kFlat});
    add("lstm.weight_recurrent", {kGates, kHidden});
    add("lstm.bias", {kGates});
    add("policy.weight", {kDirections, kHidden});
    add("policy.bias", {kDirections});
    add("value.weight", {1, kHidden});
    add("value.bias", {1});
    add("magnitude.weight", {1, kHidden});
    add("magnitude.bias", {1});
    return t;
  }();
  return layout;
}

std::size_t param_count() {
  const auto& t = tensor_layout();
  return t.back().offset + t.back().count;
}

template <class Real>
Params<Real> zero_params(double nu_max) {
  if (!(nu_max > 0.0)) throw InputError("nu_max must be positive");
  Params<Real> p;
  p.nu_max = nu_max;
  p.data.assign(param_count(), Real(0));
  return p;
}

template <class Real>
Params<Real> init_params(std::uint64_t seed, double nu_max) {
  Params<Real> p = zero_params<Real>(nu_max);
  std::mt19937_64 rng(seed);
  auto fill = [&](Tensor t, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Real& v : p.tensor(t)) v = Real(u(rng));
  };
  for (int l = 0; l < kConvLayers; ++l) fill(conv_weight(l), std::sqrt(6.0 / (kConvInChannels[l] * 9)));
  const double lstm_bound = 1.0 / std::sqrt(double(kHidden));
  fill(Tensor::LstmWx, lstm_bound);
  fill(Tensor::LstmWh, lstm_bound);
  auto fb = p.tensor(Tensor::LstmB);
  std::fill(fb.begin() + kHidden, fb.begin() + 2 * kHidden, Real(1));  // forget gate
  fill(Tensor::PolicyW, 0.01 * lstm_bound);
  fill(Tensor::ValueW, lstm_bound);
  // Magnitude head starts at zero: nu = nu_max / 2 everywhere.
  return p;
}

namespace {

template <class Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

std::size_t side_cells(int l) { return std::size_t(kConvSide[l]) * kConvSide[l]; }
std::size_t act_size(int l) {
  return l == 0 ? side_cells(0) : std::size_t(kChannels) * side_cells(l);
}

// Patch matrix for conv layer l: row per output pixel, column per (ci, ky, kx).
template <class Real>
void im2col(int l, std::span<const Real> in, std::vector<Real>& col) {
  const int s_in = kConvSide[l], s_out = kConvSide[l + 1], cin = kConvInChannels[l];
  const std::size_t k = std::size_t(cin) * 9;
  col.assign(std::size_t(s_out) * s_out * k, Real(0));
  for (int oy = 0; oy < s_out; ++oy)
    for (int ox = 0; ox < s_out; ++ox) {
      Real* row = col.data() + (std::size_t(oy) * s_out + ox) * k;
      for (int ci = 0; ci < cin; ++ci)
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= s_in) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= s_in) continue;
            row[ci * 9 + ky * 3 + kx] = in[(std::size_t(ci) * s_in + iy) * s_in + ix];
          }
        }
    }
}

template <class Real>
void col2im_add(int l, std::span<const Real> dcol, std::span<Real> din) {
  const int s_in = kConvSide[l], s_out = kConvSide[l + 1], cin = kConvInChannels[l];
  const std::size_t k = std::size_t(cin) * 9;
  for (int oy = 0; oy < s_out; ++oy)
    for (int ox = 0; ox < s_out; ++ox) {
      const Real* row = dcol.data() + (std::size_t(oy) * s_out + ox) * k;
      for (int ci = 0; ci < cin; ++ci)
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= s_in) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= s_in) continue;
            din[(std::size_t(ci) * s_in + iy) * s_in + ix] += row[ci * 9 + ky * 3 + kx];
          }
        }
    }
}

template <class Real>
void conv_forward(const Params<Real>& p, int l, std::span<const Real> in, std::vector<Real>& out,
                  std::vector<Real>& col) {
  im2col<Real>(l, in, col);
  const std::size_t k = std::size_t(kConvInChannels[l]) * 9;
  const std::size_t npix = side_cells(l + 1);
  const auto w = p.tensor(conv_weight(l));
  const auto b = p.tensor(conv_bias(l));
  out.resize(std::size_t(kChannels) * npix);
  for (int co = 0; co < kChannels; ++co) {
    const auto wrow = w.subspan(std::size_t(co) * k, k);
    for (std::size_t px = 0; px < npix; ++px) {
      const Real z = b[co] + simd::dot(wrow, std::span<const Real>(col).subspan(px * k, k));
      out[co * npix + px] = z > Real(0) ? z : Real(0);
    }
  }
}

template <class Real>
struct Scratch {
  std::vector<Real> col;
  std::vector<Real> dcol;
  std::array<std::vector<Real>, kConvLayers + 1> act;
};

template <class Real>
Scratch<Real>& scratch() {
  thread_local Scratch<Real> s;
  return s;
}

// Log-softmax and softmax of the policy logits.
template <class Real>
void softmax(const std::array<Real, kDirections>& z, std::array<Real, kDirections>& probs,
             std::array<Real, kDirections>& logp) {
  const Real zmax = *std::max_element(z.begin(), z.end());
  Real sum = 0;
  for (int k = 0; k < kDirections; ++k) sum += std::exp(z[k] - zmax);
  const Real lse = zmax + std::log(sum);
  for (int k = 0; k < kDirections; ++k) {
    logp[k] = z[k] - lse;
    probs[k] = std::exp(logp[k]);
  }
}

}  // namespace

template <class Real>
NetOutput<Real> forward(const Params<Real>& p, const Observation& obs, const LstmState<Real>& state,
                        StepCache<Real>* cache) {
  Scratch<Real>& s = scratch<Real>();
  auto& act = cache ? cache->act : s.act;
  act[0].assign(obs.values.begin(), obs.values.end());
  for (int l = 0; l < kConvLayers; ++l) conv_forward(p, l, std::span<const Real>(act[l]), act[l + 1], s.col);

  const std::span<const Real> x(act[kConvLayers]);
  const auto wx = p.tensor(Tensor::LstmWx);
  const auto wh = p.tensor(Tensor::LstmWh);
  const auto lb = p.tensor(Tensor::LstmB);
  std::array<Real, kGates> gates;
  for (int r = 0; r < kGates; ++r) {
    const Real z = lb[r] + simd::dot(wx.subspan(std::size_t(r) * kFlat, kFlat), x) +
                   simd::dot(wh.subspan(std::size_t(r) * kHidden, kHidden),
                             std::span<const Real>(state.h));
    gates[r] = (r >= 2 * kHidden && r < 3 * kHidden) ? std::tanh(z) : sigmoid(z);
  }
  NetOutput<Real> out;
  std::array<Real, kHidden> tanh_c;
  for (int j = 0; j < kHidden; ++j) {
    const Real i = gates[j], f = gates[kHidden + j], g = gates[2 * kHidden + j],
               o = gates[3 * kHidden + j];
    out.next.c[j] = f * state.c[j] + i * g;
    tanh_c[j] = std::tanh(out.next.c[j]);
    out.next.h[j] = o * tanh_c[j];
  }

  const std::span<const Real> h(out.next.h);
  const auto pw = p.tensor(Tensor::PolicyW);
  const auto pb = p.tensor(Tensor::PolicyB);
  std::array<Real, kDirections> logits, logp;
  for (int k = 0; k < kDirections; ++k)
    logits[k] = pb[k] + simd::dot(pw.subspan(std::size_t(k) * kHidden, kHidden), h);
  softmax(logits, out.policy, logp);
  out.value = p.tensor(Tensor::ValueB)[0] + simd::dot(p.tensor(Tensor::ValueW), h);
  const Real mag_sig =
      sigmoid(p.tensor(Tensor::MagnitudeB)[0] + simd::dot(p.tensor(Tensor::MagnitudeW), h));
  out.magnitude = Real(p.nu_max) * mag_sig;

  if (cache) {
    cache->prev = state;
    cache->gates = gates;
    cache->tanh_c = tanh_c;
    cache->next = out.next;
    cache->logits = logits;
    cache->policy = out.policy;
    cache->value = out.value;
    cache->mag_sigmoid = mag_sig;
    cache->magnitude = out.magnitude;
  }
  return out;
}

template <class Real>
Params<Real> backward(const Params<Real>& p, std::span<const StepCache<Real>> tape,
                      std::span<const StepTarget> targets) {
  if (tape.size() != targets.size()) throw InputError("backward: tape and targets differ in length");
  Params<Real> g = zero_params<Real>(p.nu_max);
  if (tape.empty()) return g;
  Scratch<Real>& s = scratch<Real>();

  const std::size_t T = tape.size();
  std::vector<Real> dz_all(T * kGates);
  std::array<Real, kHidden> dh_next{}, dc_next{};

  const auto pw = p.tensor(Tensor::PolicyW);
  const auto vw = p.tensor(Tensor::ValueW);
  const auto mw = p.tensor(Tensor::MagnitudeW);
  const auto wx = p.tensor(Tensor::LstmWx);
  const auto wh = p.tensor(Tensor::LstmWh);
  auto gpw = g.tensor(Tensor::PolicyW);
  auto gpb = g.tensor(Tensor::PolicyB);
  auto gvw = g.tensor(Tensor::ValueW);
  auto gmw = g.tensor(Tensor::MagnitudeW);
  auto glb = g.tensor(Tensor::LstmB);

  std::array<std::vector<Real>, kConvLayers + 1> dact;

  for (std::size_t t = T; t-- > 0;) {
    const StepCache<Real>& c = tape[t];
    const StepTarget& tg = targets[t];
    const std::span<const Real> h(c.next.h);

    // Heads.
    std::array<Real, kDirections> probs, logp, dlogits{};
    softmax(c.logits, probs, logp);
    if (tg.action >= 0) {
      if (tg.action >= kDirections) throw InputError("backward: action out of range");
      for (int k = 0; k < kDirections; ++k)
        dlogits[k] += Real(tg.advantage) * (probs[k] - (k == tg.action ? Real(1) : Real(0)));
    }
    if (tg.entropy_coef != 0.0) {
      Real ent = 0;
      for (int k = 0; k < kDirections; ++k) ent -= probs[k] * logp[k];
      for (int k = 0; k < kDirections; ++k)
        dlogits[k] += Real(tg.entropy_coef) * probs[k] * (logp[k] + ent);
    }
    const Real dvalue = Real(tg.value_coef) * (c.value - Real(tg.value_target));
    Real dmag = 0;
    if (tg.magnitude_coef != 0.0 && tg.magnitude_objective) {
      const ScalarObjective m = tg.magnitude_objective(double(c.magnitude));
      dmag = -Real(tg.magnitude_coef * m.slope * p.nu_max) * c.mag_sigmoid * (Real(1) - c.mag_sigmoid);
    }

    std::array<Real, kHidden> dh = dh_next;
    for (int k = 0; k < kDirections; ++k) {
      simd::axpy(dlogits[k], h, gpw.subspan(std::size_t(k) * kHidden, kHidden));
      gpb[k] += dlogits[k];
      simd::axpy(dlogits[k], pw.subspan(std::size_t(k) * kHidden, kHidden), std::span<Real>(dh));
    }
    simd::axpy(dvalue, h, gvw);
    g.tensor(Tensor::ValueB)[0] += dvalue;
    simd::axpy(dvalue, vw, std::span<Real>(dh));
    simd::axpy(dmag, h, gmw);
    g.tensor(Tensor::MagnitudeB)[0] += dmag;
    simd::axpy(dmag, mw, std::span<Real>(dh));

    // LSTM cell.
    Real* dz = dz_all.data() + t * kGates;
    std::array<Real, kHidden> dc_prev;
    for (int j = 0; j < kHidden; ++j) {
      const Real i = c.gates[j], f = c.gates[kHidden + j], gg = c.gates[2 * kHidden + j],
                 o = c.gates[3 * kHidden + j];
      const Real tc = c.tanh_c[j];
      const Real dc = dh[j] * o * (Real(1) - tc * tc) + dc_next[j];
      dz[j] = dc * gg * i * (Real(1) - i);
      dz[kHidden + j] = dc * c.prev.c[j] * f * (Real(1) - f);
      dz[2 * kHidden + j] = dc * i * (Real(1) - gg * gg);
      dz[3 * kHidden + j] = dh[j] * tc * o * (Real(1) - o);
      dc_prev[j] = dc * f;
    }
    for (int r = 0; r < kGates; ++r) glb[r] += dz[r];

    std::array<Real, kHidden> dh_prev{};
    dact[kConvLayers].assign(kFlat, Real(0));
    for (int r = 0; r < kGates; ++r) {
      if (dz[r] == Real(0)) continue;
      simd::axpy(dz[r], wx.subspan(std::size_t(r) * kFlat, kFlat), std::span<Real>(dact[kConvLayers]));
      simd::axpy(dz[r], wh.subspan(std::size_t(r) * kHidden, kHidden), std::span<Real>(dh_prev));
    }

    // Convolutions, top down.
    for (int l = kConvLayers - 1; l >= 0; --l) {
      std::vector<Real>& dout = dact[l + 1];
      const std::vector<Real>& out = c.act[l + 1];
      for (std::size_t k = 0; k < dout.size(); ++k)
        if (!(out[k] > Real(0))) dout[k] = Real(0);
      im2col(l, std::span<const Real>(c.act[l]), s.col);
      const std::size_t kk = std::size_t(kConvInChannels[l]) * 9;
      const std::size_t npix = side_cells(l + 1);
      auto gw = g.tensor(conv_weight(l));
      auto gb = g.tensor(conv_bias(l));
      const auto w = p.tensor(conv_weight(l));
      const bool need_input = l > 0;
      if (need_input) s.dcol.assign(npix * kk, Real(0));
      for (int co = 0; co < kChannels; ++co) {
        auto gwrow = gw.subspan(std::size_t(co) * kk, kk);
        const auto wrow = w.subspan(std::size_t(co) * kk, kk);
        Real bsum = 0;
        for (std::size_t px = 0; px < npix; ++px) {
          const Real d = dout[co * npix + px];
          if (d == Real(0)) continue;
          bsum += d;
          simd::axpy(d, std::span<const Real>(s.col).subspan(px * kk, kk), gwrow);
          if (need_input) simd::axpy(d, wrow, std::span<Real>(s.dcol).subspan(px * kk, kk));
        }
        gb[co] += bsum;
      }
      if (need_input) {
        dact[l].assign(act_size(l), Real(0));
        col2im_add(l, std::span<const Real>(s.dcol), std::span<Real>(dact[l]));
      }
    }

    dh_next = dh_prev;
    dc_next = dc_prev;
  }

  // LSTM weight gradients, accumulated row by row over the whole episode.
  auto gwx = g.tensor(Tensor::LstmWx);
  auto gwh = g.tensor(Tensor::LstmWh);
  for (int r = 0; r < kGates; ++r) {
    auto rx = gwx.subspan(std::size_t(r) * kFlat, kFlat);
    auto rh = gwh.subspan(std::size_t(r) * kHidden, kHidden);
    for (std::size_t t = 0; t < T; ++t) {
      const Real d = dz_all[t * kGates + r];
      if (d == Real(0)) continue;
      simd::axpy(d, std::span<const Real>(tape[t].act[kConvLayers]), rx);
      simd::axpy(d, std::span<const Real>(tape[t].prev.h), rh);
    }
  }
  return g;
}

template <class Real>
double objective(const Params<Real>& p, std::span<const Observation> observations,
                 const LstmState<Real>& init, std::span<const StepTarget> targets,
                 std::vector<char>* relu_pattern) {
  if (observations.size() != targets.size())
    throw InputError("objective: observations and targets differ in length");
  if (relu_pattern) relu_pattern->clear();
  LstmState<Real> state = init;
  StepCache<Real> cache;
  double loss = 0.0;
  for (std::size_t t = 0; t < observations.size(); ++t) {
    forward(p, observations[t], state, &cache);
    state = cache.next;
    const StepTarget& tg = targets[t];
    std::array<Real, kDirections> probs, logp;
    softmax(cache.logits, probs, logp);
    if (tg.action >= 0) loss -= tg.advantage * double(logp[tg.action]);
    if (tg.entropy_coef != 0.0) {
      double ent = 0.0;
      for (int k = 0; k < kDirections; ++k) ent -= double(probs[k]) * double(logp[k]);
      loss -= tg.entropy_coef * ent;
    }
    const double dv = tg.value_target - double(cache.value);
    loss += 0.5 * tg.value_coef * dv * dv;
    if (tg.magnitude_coef != 0.0 && tg.magnitude_objective)
      loss -= tg.magnitude_coef * tg.magnitude_objective(double(cache.magnitude)).value;
    if (relu_pattern)
      for (int l = 1; l <= kConvLayers; ++l)
        for (Real v : cache.act[l]) relu_pattern->push_back(v > Real(0));
  }
  return loss;
}

template <class Real>
void RmsProp<Real>::apply(Params<Real>& params, const Params<Real>& grads) {
  if (grads.data.size() != params.data.size()) throw InputError("rmsprop: shape mismatch");
  for (Real v : grads.data)
    if (!std::isfinite(v)) throw NumericError("rmsprop: non-finite gradient");
  if (sq.empty()) sq.assign(params.data.size(), Real(0));
  simd::rmsprop(std::span<Real>(params.data), std::span<Real>(sq), std::span<const Real>(grads.data),
                Real(lr), Real(decay), Real(eps));
}

template <class Real>
double grad_norm(const Params<Real>& grads) {
  double ss = 0.0;
  for (Real v : grads.data) ss += double(v) * double(v);
  return std::sqrt(ss);
}

void save_checkpoint(const Params<float>& params, const std::filesystem::path& path) {
  if (params.data.size() != param_count()) throw InputError("save_checkpoint: wrong parameter count");
  for (float v : params.data)
    if (!std::isfinite(v)) throw NumericError("save_checkpoint: non-finite parameter");
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["dtype"] = "float32";
  header["nu_max"] = params.nu_max;
  header["count"] = param_count();
  for (const TensorInfo& t : tensor_layout())
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"count", t.count}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 8);
  out << header.dump() << '\n';
  std::vector<std::uint32_t> raw(params.data.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(params.data[k]);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    raw[k] = u;
  }
  out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * 4));
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Params<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw InputError(path.string() + ": not a network checkpoint (bad magic)");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": bad header: " + e.what());
  }
  if (header.value("format_version", -1) != kCheckpointVersion)
    throw InputError(path.string() + ": unsupported checkpoint version " +
                     header.value("format_version", nlohmann::json(-1)).dump());
  if (header.value("dtype", std::string()) != "float32")
    throw InputError(path.string() + ": unsupported dtype");
  const auto& tensors = header.at("tensors");
  const auto& layout = tensor_layout();
  if (!tensors.is_array() || tensors.size() != layout.size())
    throw InputError(path.string() + ": tensor table does not match this network");
  for (std::size_t k = 0; k < layout.size(); ++k)
    if (tensors[k].at("name").get<std::string>() != layout[k].name ||
        tensors[k].at("shape").get<std::vector<int>>() != layout[k].shape)
      throw InputError(path.string() + ": tensor " + layout[k].name + " does not match");
  Params<float> p = zero_params<float>(header.at("nu_max").get<double>());
  std::vector<std::uint32_t> raw(p.data.size());
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * 4));
  if (in.gcount() != std::streamsize(raw.size() * 4)) throw InputError(path.string() + ": truncated tensor data");
  for (std::size_t k = 0; k < raw.size(); ++k) {
    std::uint32_t u = raw[k];
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    p.data[k] = std::bit_cast<float>(u);
  }
  return p;
}

#define DHP_NET_INSTANTIATE(Real)                                                              \
  template Params<Real> zero_params<Real>(double);                                             \
  template Params<Real> init_params<Real>(std::uint64_t, double);                              \
  template NetOutput<Real> forward<Real>(const Params<Real>&, const Observation&,              \
                                         const LstmState<Real>&, StepCache<Real>*);            \
  template Params<Real> backward<Real>(const Params<Real>&, std::span<const StepCache<Real>>,  \
                                       std::span<const StepTarget>);                           \
  template double objective<Real>(const Params<Real>&, std::span<const Observation>,           \
                                  const LstmState<Real>&, std::span<const StepTarget>,         \
                                  std::vector<char>*);                                         \
  template struct RmsProp<Real>;                                                               \
  template double grad_norm<Real>(const Params<Real>&);

DHP_NET_INSTANTIATE(float)
DHP_NET_INSTANTIATE(double)

}  // namespace dhp::net
