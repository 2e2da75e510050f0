#pragma once
// The conv-LSTM scanpath network: four stride-2 3x3 convolutions with 32
// filters (42 -> 21 -> 11 -> 6 -> 3), a 288-wide flatten, an LSTM with 256
// cells, and three heads sharing that trunk:
//   policy    softmax over the 8 compass directions
//   value     linear state value
//   magnitude nu_max * sigmoid, degrees per step
//
// Everything is templated on the scalar type: float for training, double for
// gradient checks. Forward and backward are pure functions of their inputs.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dhp/pandata.hpp"

namespace dhp::net {

inline constexpr int kDirections = 8;
inline constexpr int kChannels = 32;
inline constexpr int kConvLayers = 4;
inline constexpr int kFlat = 288;
inline constexpr int kHidden = 256;
inline constexpr int kGates = 4 * kHidden;  // i, f, g, o blocks in that order

// Spatial side of the input to conv layer l (l = 4 is the final output).
inline constexpr std::array<int, kConvLayers + 1> kConvSide{42, 21, 11, 6, 3};
inline constexpr std::array<int, kConvLayers> kConvInChannels{1, 32, 32, 32};

enum class Tensor : int {
  Conv1W, Conv1B, Conv2W, Conv2B, Conv3W, Conv3B, Conv4W, Conv4B,
  LstmWx, LstmWh, LstmB,
  PolicyW, PolicyB, ValueW, ValueB, MagnitudeW, MagnitudeB,
  Count
};
inline constexpr int kTensorCount = static_cast<int>(Tensor::Count);

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

const std::vector<TensorInfo>& tensor_layout();
std::size_t param_count();

inline Tensor conv_weight(int layer) { return static_cast<Tensor>(2 * layer); }
inline Tensor conv_bias(int layer) { return static_cast<Tensor>(2 * layer + 1); }

template <class Real>
struct Params {
  std::vector<Real> data;  // all tensors, contiguous, in tensor_layout() order
  double nu_max = 10.0;    // magnitude head bound, degrees per step

  std::span<Real> tensor(Tensor t) {
    const auto& info = tensor_layout()[static_cast<int>(t)];
    return std::span<Real>(data).subspan(info.offset, info.count);
  }
  std::span<const Real> tensor(Tensor t) const {
    const auto& info = tensor_layout()[static_cast<int>(t)];
    return std::span<const Real>(data).subspan(info.offset, info.count);
  }
};

template <class Real>
Params<Real> zero_params(double nu_max);

template <class Real>
Params<Real> init_params(std::uint64_t seed, double nu_max);

template <class To, class From>
Params<To> cast_params(const Params<From>& p) {
  Params<To> out;
  out.nu_max = p.nu_max;
  out.data.assign(p.data.begin(), p.data.end());
  return out;
}

template <class Real>
struct LstmState {
  std::array<Real, kHidden> h{};
  std::array<Real, kHidden> c{};
};

template <class Real>
struct NetOutput {
  std::array<Real, kDirections> policy{};
  Real value = 0;
  Real magnitude = 0;
  LstmState<Real> next;
};

// Activations of one forward step, enough to backpropagate through it.
template <class Real>
struct StepCache {
  std::array<std::vector<Real>, kConvLayers + 1> act;  // act[0] input, act[l+1] post-ReLU conv l
  LstmState<Real> prev;
  std::array<Real, kGates> gates{};  // post-nonlinearity
  std::array<Real, kHidden> tanh_c{};
  LstmState<Real> next;
  std::array<Real, kDirections> logits{};
  std::array<Real, kDirections> policy{};
  Real value = 0;
  Real mag_sigmoid = 0;
  Real magnitude = 0;
};

template <class Real>
NetOutput<Real> forward(const Params<Real>& params, const Observation& obs,
                        const LstmState<Real>& state, StepCache<Real>* cache = nullptr);

struct ScalarObjective {
  double value = 0.0;
  double slope = 0.0;  // derivative with respect to the magnitude
};

// What one step contributes to the loss that backward differentiates:
//   value_coef/2 (value_target - V)^2
//   - advantage * log pi(action)          (advantage is a constant)
//   - entropy_coef * H(pi)
//   - magnitude_coef * magnitude_objective(nu)
struct StepTarget {
  int action = -1;  // -1: no policy term
  double advantage = 0.0;
  double value_target = 0.0;
  double value_coef = 0.0;
  double entropy_coef = 0.0;
  double magnitude_coef = 0.0;
  std::function<ScalarObjective(double)> magnitude_objective;
};

// Exact gradient of the summed step losses, backpropagated through time over
// the whole tape. Throws InputError on tape/target length mismatch.
template <class Real>
Params<Real> backward(const Params<Real>& params, std::span<const StepCache<Real>> tape,
                      std::span<const StepTarget> targets);

// Loss value for the same objective, re-running the forward pass from `init`.
// When `relu_pattern` is given it receives the on/off state of every ReLU.
template <class Real>
double objective(const Params<Real>& params, std::span<const Observation> observations,
                 const LstmState<Real>& init, std::span<const StepTarget> targets,
                 std::vector<char>* relu_pattern = nullptr);

template <class Real>
struct RmsProp {
  double lr = 1e-4;
  double decay = 0.99;
  double eps = 0.1;
  std::vector<Real> sq;  // running mean of squared gradients

  // Throws NumericError if any gradient is non-finite; params are untouched then.
  void apply(Params<Real>& params, const Params<Real>& grads);
};

template <class Real>
double grad_norm(const Params<Real>& grads);

inline constexpr char kCheckpointMagic[9] = "PGAZNET1";
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Params<float>& params, const std::filesystem::path& path);
Params<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace dhp::net
