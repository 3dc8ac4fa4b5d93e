#include "s3d/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "s3d/ops.hpp"

namespace s3d {

const char* to_string(InputMode mode) {
  switch (mode) {
    case InputMode::kRgbVolume:
      return "s3d";
    case InputMode::kOccupancyVolume:
      return "s3d-depth-only";
    case InputMode::kStacked2d:
      return "s2d";
  }
  return "?";
}

InputMode parse_input_mode(const std::string& name) {
  if (name == "s3d") return InputMode::kRgbVolume;
  if (name == "s3d-depth-only") return InputMode::kOccupancyVolume;
  if (name == "s2d") return InputMode::kStacked2d;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (expected s3d, s3d-depth-only or s2d)");
}

std::size_t ResTdmConfig::in_channels() const {
  switch (mode) {
    case InputMode::kRgbVolume:
      return 3;
    case InputMode::kOccupancyVolume:
      return 1;
    case InputMode::kStacked2d:
      return 4;
  }
  return 0;
}

std::size_t ResTdmConfig::depth_extent() const {
  return volumetric() ? levels + 1 : 1;
}

Extents3 ResTdmConfig::kernel_extents() const {
  return volumetric() ? Extents3{3, 3, 3} : Extents3{3, 3, 1};
}

Shape ResTdmConfig::input_shape() const {
  return {in_channels(), height, width, depth_extent()};
}

Shape ResTdmConfig::output_shape() const {
  return {num_classes, height, width, depth_extent()};
}

void ResTdmConfig::validate() const {
  if (num_scales == 0 || features == 0 || num_classes == 0 || height == 0 ||
      width == 0 || levels == 0) {
    throw std::invalid_argument(
        "network config requires positive num_scales, features, num_classes, "
        "H, W and D");
  }
  if (num_scales >= 16) {
    throw std::invalid_argument("num_scales too large");
  }
  const std::size_t factor = std::size_t{1} << num_scales;
  auto divisible = [&](std::size_t n, const char* name) {
    if (n % factor != 0) {
      throw std::invalid_argument(std::string(name) + " = " +
                                  std::to_string(n) + " is not divisible by 2^" +
                                  std::to_string(num_scales));
    }
  };
  divisible(height, "H");
  divisible(width, "W");
  if (volumetric()) divisible(levels + 1, "D + 1");
  if (zero_disparity_channel && volumetric()) {
    throw std::invalid_argument(
        "zero_disparity_channel only applies to the s2d mode");
  }
}

namespace {

Padding3 same_padding(const Extents3& k) {
  return {(k[0] - 1) / 2, (k[1] - 1) / 2, (k[2] - 1) / 2};
}

ConvKernel random_kernel(std::size_t a, std::size_t b, const Extents3& k,
                         std::size_t bias_len, bool transposed,
                         std::mt19937_64& rng) {
  ConvKernel kernel = ConvKernel::zeros(a, b, k[0], k[1], k[2], bias_len);
  const double bound =
      std::sqrt(6.0 / static_cast<double>(fan_in(kernel, transposed)));
  for (double& w : kernel.weights.data()) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    w = bound * (2.0 * unit - 1.0);
  }
  return kernel;
}

void append(std::vector<Tensor*>& out, ConvKernel& k) {
  out.push_back(&k.weights);
  out.push_back(&k.bias);
}

void append_names(std::vector<std::string>& out, const std::string& prefix) {
  out.push_back(prefix + ".weight");
  out.push_back(prefix + ".bias");
}

// Activations kept for the reverse pass.
struct ResidualTrace {
  Tensor pre1, act1, pre2, out;
};

struct Trace {
  std::vector<Tensor> x;      // x[0] = input, x[i] = relu(x_pre[i])
  std::vector<Tensor> x_pre;  // x_pre[0] unused
  std::vector<ResidualTrace> r;
  std::vector<Tensor> dc_pre;  // dc_pre[i]: DC_{i+1} output before ReLU
  std::vector<Tensor> y;
  Tensor logits;
};

ResidualTrace residual_forward(const ResidualModule& m, const Tensor& x,
                               const Padding3& pad) {
  ResidualTrace t;
  t.pre1 = conv3d_forward(x, m.first, 1, pad);
  t.act1 = relu(t.pre1);
  t.pre2 = conv3d_forward(t.act1, m.second, 1, pad);
  t.out = relu(t.pre2);
  return t;
}

Tensor lateral_add(const Tensor& residual, const Tensor& top_down,
                   std::size_t scale) {
  if (residual.shape() != top_down.shape()) {
    throw ShapeError("lateral junction at scale " + std::to_string(scale) +
                     ": residual " + to_string(residual.shape()) +
                     " vs top-down " + to_string(top_down.shape()));
  }
  return add(residual, top_down);
}

Extents3 spatial_of(const Tensor& t) {
  return {t.extent(1), t.extent(2), t.extent(3)};
}

Trace run_forward(const ResTdmModel& model, const Tensor& input) {
  const ResTdmConfig& cfg = model.config;
  if (input.shape() != cfg.input_shape()) {
    throw ShapeError("network input " + to_string(input.shape()) +
                     " does not match configured " +
                     to_string(cfg.input_shape()));
  }
  const std::size_t S = cfg.num_scales;
  const Padding3 pad = same_padding(cfg.kernel_extents());
  Trace t;
  t.x.resize(S + 1);
  t.x_pre.resize(S + 1);
  t.r.resize(S + 1);
  t.dc_pre.resize(S);
  t.y.resize(S + 1);

  t.x[0] = input;
  for (std::size_t i = 1; i <= S; ++i) {
    t.x_pre[i] = conv3d_forward(t.x[i - 1], model.bottom_up[i - 1], 2, pad);
    t.x[i] = relu(t.x_pre[i]);
  }
  for (std::size_t i = 0; i <= S; ++i) {
    t.r[i] = residual_forward(model.residual[i], t.x[i], pad);
  }
  t.y[S] = lateral_add(t.r[S].out, t.x[S], S);
  for (std::size_t i = S; i-- > 0;) {
    t.dc_pre[i] = deconv3d_forward(t.y[i + 1], model.top_down[i], 2, pad,
                                   spatial_of(t.x[i]));
    t.y[i] = lateral_add(t.r[i].out, relu(t.dc_pre[i]), i);
  }
  t.logits = conv3d_forward(t.y[0], model.head, 1, Padding3{});
  return t;
}

// Propagates dL/d(out) of a residual module; returns dL/dx and writes the
// parameter gradients into `g`.
Tensor residual_backward(const ResidualModule& m, const ResidualTrace& t,
                         const Tensor& x, const Tensor& grad_out,
                         const Padding3& pad, ResidualModule& g) {
  const Tensor g_pre2 = relu_backward(grad_out, t.pre2);
  ConvGradients c2 = conv3d_backward(g_pre2, t.act1, m.second, 1, pad);
  g.second.weights = std::move(c2.weights);
  g.second.bias = std::move(c2.bias);
  const Tensor g_pre1 = relu_backward(c2.input, t.pre1);
  ConvGradients c1 = conv3d_backward(g_pre1, x, m.first, 1, pad);
  g.first.weights = std::move(c1.weights);
  g.first.bias = std::move(c1.bias);
  return std::move(c1.input);
}

}  // namespace

std::size_t fan_in(const ConvKernel& kernel, bool transposed) {
  const auto [m, n, l] = kernel.extents();
  return (transposed ? kernel.axis0() : kernel.axis1()) * m * n * l;
}

std::vector<Tensor*> ResTdmModel::parameters() {
  std::vector<Tensor*> out;
  for (auto& k : bottom_up) append(out, k);
  for (auto& r : residual) {
    append(out, r.first);
    append(out, r.second);
  }
  for (auto& k : top_down) append(out, k);
  append(out, head);
  return out;
}

std::vector<const Tensor*> ResTdmModel::parameters() const {
  auto mutable_params = const_cast<ResTdmModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> ResTdmModel::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < bottom_up.size(); ++i) {
    append_names(out, "bottom_up." + std::to_string(i));
  }
  for (std::size_t i = 0; i < residual.size(); ++i) {
    append_names(out, "residual." + std::to_string(i) + ".first");
    append_names(out, "residual." + std::to_string(i) + ".second");
  }
  for (std::size_t i = 0; i < top_down.size(); ++i) {
    append_names(out, "top_down." + std::to_string(i));
  }
  append_names(out, "head");
  return out;
}

std::size_t ResTdmModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

ResTdmModel ResTdmModel::zeros_like() const {
  ResTdmModel z = *this;
  for (Tensor* p : z.parameters()) p->fill(0.0);
  return z;
}

ResTdmModel build_model(const ResTdmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const Extents3 k = cfg.kernel_extents();
  const std::size_t F = cfg.features;
  const std::size_t S = cfg.num_scales;
  ResTdmModel m;
  m.config = cfg;
  for (std::size_t i = 0; i < S; ++i) {
    const std::size_t cin = i == 0 ? cfg.in_channels() : F;
    m.bottom_up.push_back(random_kernel(F, cin, k, F, false, rng));
  }
  for (std::size_t i = 0; i <= S; ++i) {
    const std::size_t cin = i == 0 ? cfg.in_channels() : F;
    ResidualModule r;
    r.first = random_kernel(F, cin, k, F, false, rng);
    r.second = random_kernel(F, F, k, F, false, rng);
    m.residual.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < S; ++i) {
    m.top_down.push_back(random_kernel(F, F, k, F, true, rng));
  }
  m.head = random_kernel(cfg.num_classes, F, {1, 1, 1}, cfg.num_classes, false,
                         rng);
  return m;
}

Tensor encode_input(const RgbdFrame& frame, const ResTdmConfig& cfg) {
  if (frame.height() != cfg.height || frame.width() != cfg.width) {
    throw ShapeError("frame " + std::to_string(frame.width()) + "x" +
                     std::to_string(frame.height()) +
                     " does not match configured " + std::to_string(cfg.width) +
                     "x" + std::to_string(cfg.height));
  }
  switch (cfg.mode) {
    case InputMode::kRgbVolume:
      return voxelize(frame, cfg.levels).data;
    case InputMode::kOccupancyVolume:
      return voxelize_occupancy(frame, cfg.levels).data;
    case InputMode::kStacked2d:
      break;
  }
  frame.validate(cfg.levels);
  const std::size_t H = cfg.height, W = cfg.width;
  Tensor out(Shape{4, H, W, 1});
  for (std::size_t v = 0; v < H; ++v) {
    for (std::size_t u = 0; u < W; ++u) {
      for (std::size_t c = 0; c < 3; ++c) {
        out[(c * H + v) * W + u] = frame.rgb(v, u, c);
      }
      out[(3 * H + v) * W + u] =
          cfg.zero_disparity_channel
              ? 0.0
              : 2.0 * static_cast<double>(frame.disparity(v, u)) /
                        static_cast<double>(cfg.levels) -
                    1.0;
    }
  }
  return out;
}

Tensor encode_target(const RgbdFrame& frame, const ResTdmConfig& cfg) {
  if (!frame.labels) {
    throw std::invalid_argument("encode_target: frame has no labels");
  }
  if (cfg.volumetric()) {
    return voxelize_labels(*frame.labels, frame.disparity, cfg.num_classes,
                           cfg.levels);
  }
  const LabelMap flat(frame.width(), frame.height());
  return voxelize_labels(*frame.labels, flat, cfg.num_classes, 0);
}

Tensor forward(const ResTdmModel& model, const Tensor& input) {
  return run_forward(model, input).logits;
}

Tensor forward(const ResTdmModel& model, const VoxelVolume& volume) {
  return forward(model, volume.data);
}

LossAndGradients loss_and_gradients(const ResTdmModel& model,
                                    const Tensor& input, const Tensor& target) {
  if (target.shape() != model.config.output_shape()) {
    throw ShapeError("target " + to_string(target.shape()) +
                     " does not match network output " +
                     to_string(model.config.output_shape()));
  }
  const Trace t = run_forward(model, input);
  const LossResult lr = sigmoid_bce_loss(t.logits, target);
  const std::size_t S = model.config.num_scales;
  const Padding3 pad = same_padding(model.config.kernel_extents());

  LossAndGradients out{lr.loss, model.zeros_like()};
  ResTdmModel& g = out.grads;

  ConvGradients head = conv3d_backward(lr.grad_logits, t.y[0], model.head, 1,
                                       Padding3{});
  g.head.weights = std::move(head.weights);
  g.head.bias = std::move(head.bias);

  std::vector<Tensor> g_x(S + 1);
  for (std::size_t i = 0; i <= S; ++i) g_x[i] = Tensor(t.x[i].shape());

  Tensor g_y = std::move(head.input);
  for (std::size_t i = 0; i < S; ++i) {
    accumulate(g_x[i], residual_backward(model.residual[i], t.r[i], t.x[i],
                                         g_y, pad, g.residual[i]));
    const Tensor g_dc = relu_backward(g_y, t.dc_pre[i]);
    ConvGradients dc =
        deconv3d_backward(g_dc, t.y[i + 1], model.top_down[i], 2, pad);
    g.top_down[i].weights = std::move(dc.weights);
    g.top_down[i].bias = std::move(dc.bias);
    g_y = std::move(dc.input);
  }
  accumulate(g_x[S], residual_backward(model.residual[S], t.r[S], t.x[S], g_y,
                                       pad, g.residual[S]));
  accumulate(g_x[S], g_y);

  for (std::size_t i = S; i >= 1; --i) {
    const Tensor g_pre = relu_backward(g_x[i], t.x_pre[i]);
    ConvGradients c =
        conv3d_backward(g_pre, t.x[i - 1], model.bottom_up[i - 1], 2, pad);
    g.bottom_up[i - 1].weights = std::move(c.weights);
    g.bottom_up[i - 1].bias = std::move(c.bias);
    if (i > 1) accumulate(g_x[i - 1], c.input);
  }
  return out;
}

double loss_value(const ResTdmModel& model, const Tensor& input,
                  const Tensor& target) {
  return sigmoid_bce_loss(forward(model, input), target).loss;
}

LabelMap predict(const ResTdmModel& model, const RgbdFrame& frame) {
  return project_volume(forward(model, encode_input(frame, model.config)));
}

}  // namespace s3d
