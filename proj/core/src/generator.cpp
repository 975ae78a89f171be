#include "sketchout/generator.hpp"

#include <stdexcept>
#include <string>

#include "sketchout/raster.hpp"

namespace sketchout {
namespace {

void record(std::vector<LayerShape>* trace, const char* layer, const torch::Tensor& x) {
  if (trace != nullptr) trace->push_back({layer, x.sizes().vec()});
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

int64_t log2_exact(int64_t v) {
  int64_t n = 0;
  while ((int64_t{1} << n) < v) ++n;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// GuidanceEncoder

GuidanceEncoderImpl::GuidanceEncoderImpl(int64_t in_channels, const ArchitectureScale& scale)
    : in_channels_(in_channels) {
  const int64_t widths[] = {64, 128, 256, 512, 512};
  int64_t in = in_channels;
  for (int64_t ref : widths) {
    const int64_t out = scale.channels(ref);
    down->push_back(SameConv2d(ConvSpec(in, out, 4, 2)));
    in = out;
  }
  for (int64_t i = 0; i < log2_exact(scale.bottleneck_width()); ++i) {
    squeeze->push_back(SameConv2d(ConvSpec(in, in, {4, 4}, {1, 2}, Activation::kElu)));
  }
  register_module("down", down);
  register_module("squeeze", squeeze);
}

GuidanceEncoderImpl::Output GuidanceEncoderImpl::forward(const torch::Tensor& x) {
  check_channels(x, in_channels_, "guidance_encoder");
  Output out;
  auto h = x;
  for (const auto& layer : *down) {
    h = layer->as<SameConv2dImpl>()->forward(h);
    out.taps.push_back(h);
  }
  for (const auto& layer : *squeeze) h = layer->as<SameConv2dImpl>()->forward(h);
  // [N,C,H,1] -> [N, H*C], height-major like bottleneck_columns
  out.state = h.select(3, 0).permute({0, 2, 1}).reshape({h.size(0), -1});
  return out;
}

// ---------------------------------------------------------------------------
// ConditionalSkip

ConditionalSkipImpl::ConditionalSkipImpl(int64_t decoder_channels, int64_t sketch_channels,
                                         int64_t position_channels)
    : decoder_channels_(decoder_channels) {
  const int64_t in = decoder_channels + sketch_channels + position_channels;
  fuse = register_module("fuse", SameConv2d(ConvSpec(in, decoder_channels, 1)));
  mix = register_module("mix", SameConv2d(ConvSpec(decoder_channels, decoder_channels, 3)));
  out = register_module(
      "out", SameConv2d(ConvSpec(decoder_channels, decoder_channels, 1, 1, Activation::kIdentity)));
  zero_output();
}

torch::Tensor ConditionalSkipImpl::forward(const torch::Tensor& d_right, const torch::Tensor& s,
                                           const torch::Tensor& p) {
  check_channels(d_right, decoder_channels_, "conditional_skip");
  require(s.dim() == 4 && p.dim() == 4, "conditional_skip: guidance features must be 4-d");
  require(s.size(2) == d_right.size(2) && s.size(3) == d_right.size(3) &&
              p.size(2) == d_right.size(2) && p.size(3) == d_right.size(3),
          "conditional_skip: spatial mismatch between decoder " + c10::str(d_right.sizes()) +
              ", sketch " + c10::str(s.sizes()) + " and position " + c10::str(p.sizes()));
  auto joined = torch::cat({d_right, s, p}, 1);
  return d_right + out->forward(mix->forward(fuse->forward(joined)));
}

void ConditionalSkipImpl::zero_output() {
  torch::NoGradGuard no_grad;
  out->conv->weight.zero_();
  out->conv->bias.zero_();
}

// ---------------------------------------------------------------------------
// ContextEncoder

ContextEncoderImpl::ContextEncoderImpl(const ArchitectureScale& scale) {
  const auto c = [&](int64_t ref) { return scale.channels(ref); };
  image_conv = register_module("image_conv", GatedConv2d(ConvSpec(4, c(64), 4, 2)));
  position_conv = register_module("position_conv", SameConv2d(ConvSpec(2, c(64), 4, 2)));
  down1 = register_module("down1", GatedConv2d(ConvSpec(2 * c(64), c(128), 3, 2)));
  down2 = register_module("down2", GatedConv2d(ConvSpec(c(128), c(256), 1, 2)));
  res1 = register_module("res1", make_resblocks(3, c(256)));
  down3 = register_module("down3", GatedConv2d(ConvSpec(c(256), c(512), 3, 2)));
  res2 = register_module("res2", make_resblocks(4, c(512)));
  down4 = register_module("down4", GatedConv2d(ConvSpec(c(512), c(1024), 3, 2)));
  res3 = register_module("res3", make_resblocks(5, c(1024)));
  out = register_module("out",
                        SameConv2d(ConvSpec(c(1024), c(512), 3, 1, Activation::kIdentity)));
}

torch::Tensor ContextEncoderImpl::forward(const torch::Tensor& image, const torch::Tensor& sketch,
                                          const torch::Tensor& positions,
                                          std::vector<LayerShape>* trace) {
  auto x = image_conv->forward(torch::cat({image, sketch}, 1));
  record(trace, "G-Conv", x);
  auto p = position_conv->forward(positions);
  record(trace, "Conv", p);
  x = down1->forward(torch::cat({x, p}, 1));
  record(trace, "G-Conv", x);
  x = down2->forward(x);
  record(trace, "G-Conv", x);
  x = res1->forward(x);
  record(trace, "G-Resblockx3", x);
  x = down3->forward(x);
  record(trace, "G-Conv", x);
  x = res2->forward(x);
  record(trace, "G-Resblockx4", x);
  x = down4->forward(x);
  record(trace, "G-Conv", x);
  x = res3->forward(x);
  record(trace, "G-Resblockx5", x);
  x = out->forward(x);
  record(trace, "Conv", x);
  return x;
}

// ---------------------------------------------------------------------------
// SequencePredictor

std::vector<torch::Tensor> bottleneck_columns(const torch::Tensor& bottleneck) {
  std::vector<torch::Tensor> columns;
  columns.reserve(static_cast<size_t>(bottleneck.size(3)));
  for (int64_t j = 0; j < bottleneck.size(3); ++j) {
    columns.push_back(
        bottleneck.select(3, j).permute({0, 2, 1}).reshape({bottleneck.size(0), -1}));
  }
  return columns;
}

torch::Tensor columns_to_bottleneck(const std::vector<torch::Tensor>& columns, int64_t height,
                                    int64_t channels) {
  std::vector<torch::Tensor> slices;
  slices.reserve(columns.size());
  for (const auto& col : columns) {
    slices.push_back(col.view({col.size(0), height, channels}).permute({0, 2, 1}));
  }
  return torch::stack(slices, 3);
}

torch::Tensor fuse_states(const torch::Tensor& encoder_hidden, const torch::Tensor& sketch_state,
                          const torch::Tensor& position_state) {
  require(encoder_hidden.sizes() == sketch_state.sizes() &&
              encoder_hidden.sizes() == position_state.sizes(),
          "fuse_states: state shapes differ");
  return encoder_hidden + sketch_state + position_state;
}

SequencePredictorImpl::SequencePredictorImpl(const ArchitectureScale& scale)
    : height_(scale.bottleneck_height()), channels_(scale.bottleneck_channels()) {
  const int64_t hidden = scale.hidden_size();
  encoder = register_module("encoder", torch::nn::LSTMCell(torch::nn::LSTMCellOptions(hidden, hidden)));
  decoder = register_module("decoder", torch::nn::LSTMCell(torch::nn::LSTMCellOptions(hidden, hidden)));
}

SequencePredictorImpl::EncoderState SequencePredictorImpl::encode(
    const torch::Tensor& left_bottleneck) {
  std::optional<std::tuple<torch::Tensor, torch::Tensor>> state;
  for (const auto& column : bottleneck_columns(left_bottleneck)) {
    state = encoder->forward(column, state);
  }
  return {std::get<0>(*state), std::get<1>(*state)};
}

torch::Tensor SequencePredictorImpl::decode(const torch::Tensor& fused_hidden,
                                            const torch::Tensor& cell, int64_t columns) {
  std::vector<torch::Tensor> outputs;
  auto input = fused_hidden;
  std::tuple<torch::Tensor, torch::Tensor> state{fused_hidden, cell};
  for (int64_t t = 0; t < columns; ++t) {
    state = decoder->forward(input, state);
    input = std::get<0>(state);
    outputs.push_back(input);
  }
  return columns_to_bottleneck(outputs, height_, channels_);
}

torch::Tensor SequencePredictorImpl::forward(const torch::Tensor& left_bottleneck,
                                             const torch::Tensor& sketch_state,
                                             const torch::Tensor& position_state) {
  auto enc = encode(left_bottleneck);
  return decode(fuse_states(enc.hidden, sketch_state, position_state), enc.cell,
                left_bottleneck.size(3));
}

// ---------------------------------------------------------------------------
// Decoder

torch::Tensor apply_skip_right(ConditionalSkip& skip, const torch::Tensor& features,
                               const torch::Tensor& s, const torch::Tensor& p) {
  auto [left, right] = split_halves(features);
  return concat_halves(left, skip->forward(right, s, p));
}

DecoderImpl::DecoderImpl(const ArchitectureScale& scale) {
  const auto c = [&](int64_t ref) { return scale.channels(ref); };
  res1 = register_module("res1", make_resblocks(2, c(512)));
  up1 = register_module("up1", GatedDeconv2d(c(512), c(512)));
  skip1 = register_module("skip1", ConditionalSkip(c(512), c(512), c(512)));
  res2 = register_module("res2", make_resblocks(3, c(512)));
  up2 = register_module("up2", GatedDeconv2d(c(512), c(256)));
  skip2 = register_module("skip2", ConditionalSkip(c(256), c(256), c(256)));
  res3 = register_module("res3", make_resblocks(4, c(256)));
  up3 = register_module("up3", GatedDeconv2d(c(256), c(128)));
  skip3 = register_module("skip3", ConditionalSkip(c(128), c(128), c(128)));
  up4 = register_module("up4", GatedDeconv2d(c(128), c(64)));
  up_out = register_module("up_out", GatedDeconv2d(c(64), 3, Activation::kIdentity));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& bottleneck, const GuidancePyramid& pyramid,
                                   std::vector<LayerShape>* trace) {
  require(pyramid.sketch_levels.size() == 3 && pyramid.position_levels.size() == 3,
          "decoder: guidance pyramid must have three levels");
  const auto& s = pyramid.sketch_levels;
  const auto& p = pyramid.position_levels;
  auto x = res1->forward(bottleneck);
  record(trace, "G-Resblockx2", x);
  x = apply_skip_right(skip1, up1->forward(x), s[0], p[0]);
  record(trace, "CSC+G-DeConv", x);
  x = res2->forward(x);
  record(trace, "G-Resblockx3", x);
  x = apply_skip_right(skip2, up2->forward(x), s[1], p[1]);
  record(trace, "CSC+G-DeConv", x);
  x = res3->forward(x);
  record(trace, "G-Resblockx4", x);
  x = apply_skip_right(skip3, up3->forward(x), s[2], p[2]);
  record(trace, "CSC+G-DeConv", x);
  x = up4->forward(x);
  record(trace, "G-DeConv", x);
  x = torch::tanh(up_out->forward(x));
  record(trace, "G-DeConv", x);
  return x;
}

// ---------------------------------------------------------------------------
// Generator

GeneratorImpl::GeneratorImpl(const ArchitectureScale& scale) : scale_(scale) {
  scale_.validate();
  context = register_module("context", ContextEncoder(scale));
  sketch_encoder = register_module("sketch_encoder", GuidanceEncoder(1, scale));
  position_encoder = register_module("position_encoder", GuidanceEncoder(2, scale));
  sequence = register_module("sequence", SequencePredictor(scale));
  decoder = register_module("decoder", Decoder(scale));
  positions_ = register_buffer(
      "positions", make_position_channels(scale.half_height, scale.full_width()).unsqueeze(0));
}

void GeneratorImpl::check_half(const torch::Tensor& x, int64_t channels, const char* what) const {
  require(x.dim() == 4 && x.size(1) == channels && x.size(2) == scale_.half_height &&
              x.size(3) == scale_.half_width,
          std::string("generator: ") + what + " must be [N," + std::to_string(channels) + "," +
              std::to_string(scale_.half_height) + "," + std::to_string(scale_.half_width) +
              "], got " + c10::str(x.sizes()));
}

std::pair<torch::Tensor, torch::Tensor> GeneratorImpl::position_halves(int64_t batch) const {
  auto [left, right] = split_halves(positions_);
  return {left.expand({batch, -1, -1, -1}), right.expand({batch, -1, -1, -1})};
}

torch::Tensor GeneratorImpl::encode_context(const torch::Tensor& image_left,
                                            const torch::Tensor& sketch_left,
                                            const torch::Tensor& pos_left) {
  check_half(image_left, 3, "image_left");
  check_half(sketch_left, 1, "sketch_left");
  check_half(pos_left, 2, "pos_left");
  require(sketch_left.size(0) == image_left.size(0) && pos_left.size(0) == image_left.size(0),
          "generator: batch sizes differ");
  return context->forward(image_left, sketch_left, pos_left, trace_);
}

GuidanceEncoding GeneratorImpl::encode_guidance(const torch::Tensor& sketch_right,
                                                const torch::Tensor& pos_right) {
  check_half(sketch_right, 1, "sketch_right");
  check_half(pos_right, 2, "pos_right");
  auto s = sketch_encoder->forward(sketch_right);
  auto p = position_encoder->forward(pos_right);
  record(trace_, "Sketch Encoder", s.state);
  record(trace_, "Position Encoder", p.state);
  GuidanceEncoding g{s.state, p.state, {}};
  for (int level : {3, 2, 1}) {
    g.pyramid.sketch_levels.push_back(s.taps[level]);
    g.pyramid.position_levels.push_back(p.taps[level]);
  }
  return g;
}

torch::Tensor GeneratorImpl::predict_hidden_sequence(const torch::Tensor& left_bottleneck,
                                                     const torch::Tensor& sketch_state,
                                                     const torch::Tensor& position_state) {
  const int64_t hb = scale_.bottleneck_height();
  const int64_t wb = scale_.bottleneck_width();
  const int64_t cb = scale_.bottleneck_channels();
  require(left_bottleneck.dim() == 4 && left_bottleneck.size(1) == cb &&
              left_bottleneck.size(2) == hb && left_bottleneck.size(3) == wb,
          "predict_hidden_sequence: bottleneck must be [N," + std::to_string(cb) + "," +
              std::to_string(hb) + "," + std::to_string(wb) + "], got " +
              c10::str(left_bottleneck.sizes()));
  const std::vector<int64_t> state_shape{left_bottleneck.size(0), scale_.hidden_size()};
  require(sketch_state.sizes() == state_shape && position_state.sizes() == state_shape,
          "predict_hidden_sequence: guidance states must be [N," +
              std::to_string(scale_.hidden_size()) + "]");
  auto enc = sequence->encode(left_bottleneck);
  record(trace_, "LSTM Encoder", enc.hidden);
  auto fused = fuse_states(enc.hidden, sketch_state, position_state);
  record(trace_, "Sum", fused);
  auto right = sequence->decode(fused, enc.cell, wb);
  record(trace_, "LSTM Decoder", right);
  return right;
}

torch::Tensor GeneratorImpl::decode_full(const torch::Tensor& left_bottleneck,
                                         const torch::Tensor& right_bottleneck,
                                         const GuidancePyramid& pyramid) {
  require(left_bottleneck.sizes() == right_bottleneck.sizes(),
          "decode_full: bottleneck shapes differ: " + c10::str(left_bottleneck.sizes()) + " vs " +
              c10::str(right_bottleneck.sizes()));
  auto joined = concat_halves(left_bottleneck, right_bottleneck);
  record(trace_, "Concat", joined);
  return decoder->forward(joined, pyramid, trace_);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& image_left,
                                     const torch::Tensor& sketch_left,
                                     const torch::Tensor& sketch_right) {
  auto [pos_left, pos_right] = position_halves(image_left.size(0));
  auto left = encode_context(image_left, sketch_left, pos_left);
  auto guidance = encode_guidance(sketch_right, pos_right);
  auto right = predict_hidden_sequence(left, guidance.sketch_state, guidance.position_state);
  return decode_full(left, right, guidance.pyramid);
}

void GeneratorImpl::zero_skip_outputs() {
  decoder->skip1->zero_output();
  decoder->skip2->zero_output();
  decoder->skip3->zero_output();
}

int64_t GeneratorImpl::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

Generator make_generator(const ArchitectureScale& scale, uint64_t seed) {
  Generator generator(scale);
  init_parameters(*generator, seed);
  generator->zero_skip_outputs();
  return generator;
}

torch::Tensor outpaint_steps(Generator& generator, const EdgeDetector& detector,
                             const torch::Tensor& image, const std::vector<torch::Tensor>& sketches) {
  if (sketches.empty()) throw std::invalid_argument("outpaint_steps: sketch list is empty");
  const bool single = image.dim() == 3;
  auto window = as_batch(image);
  std::vector<torch::Tensor> blocks;
  for (size_t step = 0; step < sketches.size(); ++step) {
    auto sketch_left = extract_sketch(window, detector).to(window.scalar_type());
    auto guide = as_batch(sketches[step]).to(window.scalar_type());
    if (guide.size(0) != window.size(0)) guide = guide.expand({window.size(0), -1, -1, -1});
    auto [left, right] = split_halves(generator->forward(window, sketch_left, guide));
    if (step == 0) blocks.push_back(left);
    blocks.push_back(right);
    window = right;
  }
  auto out = torch::cat(blocks, 3);
  return single ? out.squeeze(0) : out;
}

}  // namespace sketchout
