#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "sketchout/blocks.hpp"
#include "sketchout/edges.hpp"
#include "sketchout/scale.hpp"

namespace sketchout {

/// One recorded intermediate activation, for shape walks.
struct LayerShape {
  std::string layer;
  std::vector<int64_t> shape;  // NCHW or [N,D]
};

/// Sketch or position encoder: stride-2 4x4 convolutions down to
/// the bottleneck height, then (1,2)-strided convolutions that collapse the
/// width to one column, flattened to a hidden_size() vector.
class GuidanceEncoderImpl : public torch::nn::Module {
 public:
  struct Output {
    torch::Tensor state;              // [N, hidden_size]
    std::vector<torch::Tensor> taps;  // outputs of every downsampling conv
  };

  GuidanceEncoderImpl(int64_t in_channels, const ArchitectureScale& scale);
  Output forward(const torch::Tensor& x);

  torch::nn::ModuleList down;
  torch::nn::ModuleList squeeze;

 private:
  int64_t in_channels_;
};
TORCH_MODULE(GuidanceEncoder);

/// Guidance features at each decoder scale that receives a conditional skip,
/// ordered coarse to fine.
struct GuidancePyramid {
  std::vector<torch::Tensor> sketch_levels;
  std::vector<torch::Tensor> position_levels;
};

struct GuidanceEncoding {
  torch::Tensor sketch_state;    // [N, hidden]
  torch::Tensor position_state;  // [N, hidden]
  GuidancePyramid pyramid;
};

/// Conditional skip connection: concat(d, s, p) -> 1x1 -> 3x3 -> 1x1, added
/// back onto d. The last convolution starts at zero, so a fresh module is
/// the identity on d.
class ConditionalSkipImpl : public torch::nn::Module {
 public:
  ConditionalSkipImpl(int64_t decoder_channels, int64_t sketch_channels,
                      int64_t position_channels);
  torch::Tensor forward(const torch::Tensor& d_right, const torch::Tensor& s,
                        const torch::Tensor& p);
  void zero_output();

  SameConv2d fuse{nullptr};
  SameConv2d mix{nullptr};
  SameConv2d out{nullptr};

 private:
  int64_t decoder_channels_;
};
TORCH_MODULE(ConditionalSkip);

/// Image + sketch + position encoder down to the left bottleneck.
class ContextEncoderImpl : public torch::nn::Module {
 public:
  explicit ContextEncoderImpl(const ArchitectureScale& scale);
  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& sketch,
                        const torch::Tensor& positions, std::vector<LayerShape>* trace = nullptr);

  GatedConv2d image_conv{nullptr};
  SameConv2d position_conv{nullptr};
  GatedConv2d down1{nullptr}, down2{nullptr}, down3{nullptr}, down4{nullptr};
  torch::nn::Sequential res1{nullptr}, res2{nullptr}, res3{nullptr};
  SameConv2d out{nullptr};
};
TORCH_MODULE(ContextEncoder);

/// LSTM encoder over bottleneck columns, fused with the guidance states,
/// then an LSTM decoder that emits the right bottleneck column by column.
class SequencePredictorImpl : public torch::nn::Module {
 public:
  explicit SequencePredictorImpl(const ArchitectureScale& scale);

  struct EncoderState {
    torch::Tensor hidden;
    torch::Tensor cell;
  };
  EncoderState encode(const torch::Tensor& left_bottleneck);
  torch::Tensor decode(const torch::Tensor& fused_hidden, const torch::Tensor& cell,
                       int64_t columns);
  torch::Tensor forward(const torch::Tensor& left_bottleneck, const torch::Tensor& sketch_state,
                        const torch::Tensor& position_state);

  torch::nn::LSTMCell encoder{nullptr};
  torch::nn::LSTMCell decoder{nullptr};

 private:
  int64_t height_;
  int64_t channels_;
};
TORCH_MODULE(SequencePredictor);

/// Three-way element-wise sum of the LSTM encoder state and guidance states.
torch::Tensor fuse_states(const torch::Tensor& encoder_hidden, const torch::Tensor& sketch_state,
                          const torch::Tensor& position_state);

/// [N,C,H,W] bottleneck -> W steps of [N, H*C] (height-major within a step).
std::vector<torch::Tensor> bottleneck_columns(const torch::Tensor& bottleneck);
/// Inverse of bottleneck_columns.
torch::Tensor columns_to_bottleneck(const std::vector<torch::Tensor>& columns, int64_t height,
                                    int64_t channels);

/// Residual/upsampling decoder with conditional skips on the right half.
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const ArchitectureScale& scale);
  torch::Tensor forward(const torch::Tensor& bottleneck, const GuidancePyramid& pyramid,
                        std::vector<LayerShape>* trace = nullptr);

  torch::nn::Sequential res1{nullptr}, res2{nullptr}, res3{nullptr};
  GatedDeconv2d up1{nullptr}, up2{nullptr}, up3{nullptr}, up4{nullptr}, up_out{nullptr};
  ConditionalSkip skip1{nullptr}, skip2{nullptr}, skip3{nullptr};
};
TORCH_MODULE(Decoder);

/// Replaces the right half of `features` with skip(right, s, p).
torch::Tensor apply_skip_right(ConditionalSkip& skip, const torch::Tensor& features,
                               const torch::Tensor& s, const torch::Tensor& p);

/// Full generator. Inputs are batched [N,C,H,W_half]; output is
/// [N,3,H,2*W_half] in [-1,1] (tanh).
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const ArchitectureScale& scale);

  torch::Tensor encode_context(const torch::Tensor& image_left, const torch::Tensor& sketch_left,
                               const torch::Tensor& pos_left);
  GuidanceEncoding encode_guidance(const torch::Tensor& sketch_right,
                                   const torch::Tensor& pos_right);
  torch::Tensor predict_hidden_sequence(const torch::Tensor& left_bottleneck,
                                        const torch::Tensor& sketch_state,
                                        const torch::Tensor& position_state);
  torch::Tensor decode_full(const torch::Tensor& left_bottleneck,
                            const torch::Tensor& right_bottleneck,
                            const GuidancePyramid& pyramid);

  /// Composition of the four stages using the model's own position channels.
  torch::Tensor forward(const torch::Tensor& image_left, const torch::Tensor& sketch_left,
                        const torch::Tensor& sketch_right);

  /// Left and right halves of the position channels, batched to `batch`.
  std::pair<torch::Tensor, torch::Tensor> position_halves(int64_t batch) const;

  /// Zeroes the output convolution of every conditional skip.
  void zero_skip_outputs();

  /// Records (layer, shape) for every stage of subsequent forward calls.
  void set_trace(std::vector<LayerShape>* trace) { trace_ = trace; }

  const ArchitectureScale& scale() const { return scale_; }
  int64_t parameter_count() const;

  ContextEncoder context{nullptr};
  GuidanceEncoder sketch_encoder{nullptr};
  GuidanceEncoder position_encoder{nullptr};
  SequencePredictor sequence{nullptr};
  Decoder decoder{nullptr};

 private:
  void check_half(const torch::Tensor& x, int64_t channels, const char* what) const;

  ArchitectureScale scale_;
  torch::Tensor positions_;  // [1,2,H,2*W_half]
  std::vector<LayerShape>* trace_ = nullptr;
};
TORCH_MODULE(Generator);

/// Constructs, initialises (truncated normal, zeroed skip outputs) and
/// returns a generator seeded by `seed`.
Generator make_generator(const ArchitectureScale& scale, uint64_t seed);

/// Multi-step extension: each step feeds the rightmost W_half window and its
/// detected sketch together with the next guiding sketch to the generator and
/// appends the new right half. The first block is the generator's own
/// reconstruction of `image`. Output width is W_half * (k + 1).
torch::Tensor outpaint_steps(Generator& generator, const EdgeDetector& detector,
                             const torch::Tensor& image, const std::vector<torch::Tensor>& sketches);

}  // namespace sketchout
