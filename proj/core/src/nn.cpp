#include "pq/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace pq::nn {

namespace {

[[noreturn]] void fail_shape(const std::string& what) { throw std::runtime_error(what); }

void check_input(const ConvLayer& layer, const Tensor1D& x) {
  if (x.channels != layer.in_channels) {
    std::ostringstream os;
    os << "conv1d: input has " << x.channels << " channels, layer expects "
       << layer.in_channels;
    fail_shape(os.str());
  }
  if (layer.output_length(x.length) < 1) {
    std::ostringstream os;
    os << "conv1d: input length " << x.length << " too short for kernel "
       << layer.kernel_len << " at stride " << layer.stride;
    fail_shape(os.str());
  }
}

}  // namespace

Tensor1D ConvLayer::forward(const Tensor1D& x) const {
  check_input(*this, x);
  const int out_len = output_length(x.length);
  Tensor1D y = Tensor1D::zeros(out_channels, out_len);
  for (int o = 0; o < out_channels; ++o) {
    double* yo = &y.data[static_cast<std::size_t>(o) * out_len];
    const double b = bias[o];
    for (int j = 0; j < out_len; ++j) yo[j] = b;
    for (int c = 0; c < in_channels; ++c) {
      const double* xc = &x.data[static_cast<std::size_t>(c) * x.length];
      const double* ko = &kernels[(static_cast<std::size_t>(o) * in_channels + c) * kernel_len];
      // j-inner keeps the accumulators independent (pipelines well) while the
      // per-element addition order stays (c, m)-lexicographic.
      for (int m = 0; m < kernel_len; ++m) {
        const double km = ko[m];
        const double* xm = xc + m;
        for (int j = 0; j < out_len; ++j) {
          yo[j] += km * xm[static_cast<std::size_t>(j) * stride];
        }
      }
    }
  }
  return y;
}

Tensor1D ConvLayer::backward(const Tensor1D& x, const Tensor1D& grad_out) {
  check_input(*this, x);
  const int out_len = output_length(x.length);
  if (grad_out.channels != out_channels || grad_out.length != out_len) {
    std::ostringstream os;
    os << "conv1d backward: grad_out is " << grad_out.channels << "x" << grad_out.length
       << ", expected " << out_channels << "x" << out_len;
    fail_shape(os.str());
  }
  Tensor1D grad_x = Tensor1D::zeros(x.channels, x.length);
  for (int o = 0; o < out_channels; ++o) {
    const double* go = &grad_out.data[static_cast<std::size_t>(o) * out_len];
    double gb = 0.0;
    for (int j = 0; j < out_len; ++j) gb += go[j];
    grad_bias[o] += gb;
    for (int c = 0; c < in_channels; ++c) {
      const double* xc = &x.data[static_cast<std::size_t>(c) * x.length];
      double* gxc = &grad_x.data[static_cast<std::size_t>(c) * x.length];
      const std::size_t base = (static_cast<std::size_t>(o) * in_channels + c) * kernel_len;
      const double* ko = &kernels[base];
      double* gk = &grad_kernels[base];
      for (int j = 0; j < out_len; ++j) {
        const double g = go[j];
        const double* xw = xc + static_cast<std::size_t>(j) * stride;
        double* gxw = gxc + static_cast<std::size_t>(j) * stride;
        for (int m = 0; m < kernel_len; ++m) {
          gk[m] += g * xw[m];
          gxw[m] += g * ko[m];
        }
      }
    }
  }
  return grad_x;
}

void ConvLayer::zero_grads() {
  std::fill(grad_kernels.begin(), grad_kernels.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

Tensor1D leaky_relu_forward(const Tensor1D& x, double alpha) {
  Tensor1D y = x;
  for (double& v : y.data) v = v < 0.0 ? alpha * v : v;
  return y;
}

Tensor1D leaky_relu_backward(const Tensor1D& x, const Tensor1D& grad_out, double alpha) {
  if (x.channels != grad_out.channels || x.length != grad_out.length) {
    fail_shape("leaky_relu backward: shape mismatch");
  }
  Tensor1D grad_x = grad_out;
  for (std::size_t i = 0; i < grad_x.data.size(); ++i) {
    if (x.data[i] < 0.0) grad_x.data[i] *= alpha;
  }
  return grad_x;
}

std::vector<double> DenseLayer::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim) {
    std::ostringstream os;
    os << "dense: input size " << x.size() << ", layer expects " << in_dim;
    fail_shape(os.str());
  }
  std::vector<double> out(static_cast<std::size_t>(out_dim));
  for (int o = 0; o < out_dim; ++o) {
    const double* wo = &weights[static_cast<std::size_t>(o) * in_dim];
    double acc = bias[o];
    for (int i = 0; i < in_dim; ++i) acc += wo[i] * x[i];
    out[o] = acc;
  }
  return out;
}

std::vector<double> DenseLayer::backward(std::span<const double> x,
                                         std::span<const double> grad_out) {
  if (static_cast<int>(x.size()) != in_dim ||
      static_cast<int>(grad_out.size()) != out_dim) {
    fail_shape("dense backward: shape mismatch");
  }
  std::vector<double> grad_x(static_cast<std::size_t>(in_dim), 0.0);
  for (int o = 0; o < out_dim; ++o) {
    const double g = grad_out[o];
    const double* wo = &weights[static_cast<std::size_t>(o) * in_dim];
    double* gwo = &grad_weights[static_cast<std::size_t>(o) * in_dim];
    grad_bias[o] += g;
    for (int i = 0; i < in_dim; ++i) {
      gwo[i] += g * x[i];
      grad_x[i] += g * wo[i];
    }
  }
  return grad_x;
}

void DenseLayer::zero_grads() {
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

std::vector<double> softmax(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

LossAndGrad cross_entropy_with_grad(std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    std::ostringstream os;
    os << "cross_entropy: label " << label << " outside [0, " << logits.size() << ")";
    throw std::invalid_argument(os.str());
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  const double log_sum = zmax + std::log(sum);

  LossAndGrad r;
  r.loss = log_sum - logits[label];
  r.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    r.grad[i] = std::exp(logits[i] - log_sum);
  }
  r.grad[static_cast<std::size_t>(label)] -= 1.0;
  return r;
}

double cross_entropy_loss(std::span<const double> logits, int label) {
  return cross_entropy_with_grad(logits, label).loss;
}

int Network::flattened_size() const {
  int channels = 1;
  int length = input_length;
  for (const ConvLayer& layer : convs) {
    if (layer.output_length(length) < 1) {
      std::ostringstream os;
      os << "network: feature length " << length << " too short for conv kernel "
         << layer.kernel_len << " at stride " << layer.stride;
      fail_shape(os.str());
    }
    length = layer.output_length(length);
    channels = layer.out_channels;
  }
  return channels * length;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const ConvLayer& layer : convs) n += layer.kernels.size() + layer.bias.size();
  return n + dense.weights.size() + dense.bias.size();
}

void Network::zero_gradients() {
  for (ConvLayer& layer : convs) layer.zero_grads();
  dense.zero_grads();
}

std::vector<double> Network::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  auto& self = const_cast<Network&>(*this);
  self.for_each_param([&](double& p, double&) { out.push_back(p); });
  return out;
}

void Network::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    fail_shape("set_parameters: size mismatch");
  }
  std::size_t i = 0;
  for_each_param([&](double& p, double&) { p = params[i++]; });
}

std::vector<double> Network::gradients() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  auto& self = const_cast<Network&>(*this);
  self.for_each_param([&](double&, double& g) { out.push_back(g); });
  return out;
}

ForwardTrace network_forward_trace(const Network& net, const Tensor1D& x) {
  if (x.channels != 1 || x.length != net.input_length) {
    std::ostringstream os;
    os << "network: input is " << x.channels << "x" << x.length << ", expected 1x"
       << net.input_length;
    fail_shape(os.str());
  }
  ForwardTrace trace;
  trace.conv_in.reserve(net.convs.size());
  trace.preact.reserve(net.convs.size());
  Tensor1D current = x;
  for (const ConvLayer& layer : net.convs) {
    trace.conv_in.push_back(current);
    Tensor1D pre = layer.forward(trace.conv_in.back());
    current = leaky_relu_forward(pre, net.lrelu_alpha);
    trace.preact.push_back(std::move(pre));
  }
  trace.features = std::move(current);
  trace.logits = net.dense.forward(trace.features.data);
  trace.probs = softmax(trace.logits);
  return trace;
}

std::vector<double> network_forward(const Network& net, const Tensor1D& x) {
  return network_forward_trace(net, x).probs;
}

double network_backward(Network& net, const ForwardTrace& trace, int label) {
  LossAndGrad lg = cross_entropy_with_grad(trace.logits, label);
  std::vector<double> grad_flat = net.dense.backward(trace.features.data, lg.grad);

  Tensor1D grad = Tensor1D::zeros(trace.features.channels, trace.features.length);
  grad.data = std::move(grad_flat);  // flatten is the identity on storage

  for (std::size_t i = net.convs.size(); i-- > 0;) {
    grad = leaky_relu_backward(trace.preact[i], grad, net.lrelu_alpha);
    grad = net.convs[i].backward(trace.conv_in[i], grad);
  }
  return lg.loss;
}

namespace {

void glorot_init(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
  for (double& v : w) v = rng.uniform(-limit, limit);
}

}  // namespace

Network make_network(int input_len, std::span<const ConvSpecEntry> convs, int class_count,
                     std::uint64_t seed, double lrelu_alpha) {
  if (input_len < 1) throw std::invalid_argument("make_network: input_len must be >= 1");
  if (class_count < 2) throw std::invalid_argument("make_network: class_count must be >= 2");
  Network net;
  net.input_length = input_len;
  net.class_count = class_count;
  net.lrelu_alpha = lrelu_alpha;

  int channels = 1;
  std::uint64_t layer_ordinal = 0;
  for (const ConvSpecEntry& e : convs) {
    ConvLayer layer;
    layer.in_channels = channels;
    layer.out_channels = e.filters;
    layer.kernel_len = e.kernel_len;
    layer.stride = e.stride;
    layer.kernels.resize(static_cast<std::size_t>(e.filters) * channels * e.kernel_len);
    layer.bias.assign(static_cast<std::size_t>(e.filters), 0.0);
    layer.grad_kernels.assign(layer.kernels.size(), 0.0);
    layer.grad_bias.assign(layer.bias.size(), 0.0);
    Rng rng = Rng::derived(seed, layer_ordinal++);
    glorot_init(layer.kernels, channels * e.kernel_len, e.filters * e.kernel_len, rng);
    net.convs.push_back(std::move(layer));
    channels = e.filters;
  }

  const int flat = net.flattened_size();  // validates the conv chain
  net.dense.in_dim = flat;
  net.dense.out_dim = class_count;
  net.dense.weights.resize(static_cast<std::size_t>(class_count) * flat);
  net.dense.bias.assign(static_cast<std::size_t>(class_count), 0.0);
  net.dense.grad_weights.assign(net.dense.weights.size(), 0.0);
  net.dense.grad_bias.assign(net.dense.bias.size(), 0.0);
  Rng rng = Rng::derived(seed, layer_ordinal);
  glorot_init(net.dense.weights, flat, class_count, rng);
  return net;
}

namespace {

constexpr int kFilters = 8;
constexpr int kFirstStride = 4;
constexpr int kDeepStride = 1;

struct NamedArch {
  const char* name;
  const char* structure;
  std::vector<int> kernel_lens;
};

const std::vector<NamedArch>& named_archs() {
  static const std::vector<NamedArch> archs = {
      {"cnn-1a", "3 layers, 200x1, 100x1, 50x1", {200, 100, 50}},
      {"cnn-1b", "2 layers, 200x1, 100x1", {200, 100}},
      {"cnn-1c", "1 layer, 200x1", {200}},
      {"cnn-1d", "1 layer, 400x1", {400}},
  };
  return archs;
}

}  // namespace

std::vector<std::string> architecture_names() {
  std::vector<std::string> names;
  for (const NamedArch& a : named_archs()) names.emplace_back(a.name);
  return names;
}

Network build_architecture(const std::string& name, int input_len, std::uint64_t seed) {
  for (const NamedArch& a : named_archs()) {
    if (name == a.name) {
      std::vector<ConvSpecEntry> convs;
      for (std::size_t i = 0; i < a.kernel_lens.size(); ++i) {
        convs.push_back({a.kernel_lens[i], kFilters, i == 0 ? kFirstStride : kDeepStride});
      }
      Network net = make_network(input_len, convs, kClassCount, seed);
      net.arch_name = a.name;
      net.structure = a.structure;
      return net;
    }
  }
  std::ostringstream os;
  os << "unknown architecture '" << name << "'; valid names:";
  for (const NamedArch& a : named_archs()) os << " " << a.name;
  throw std::invalid_argument(os.str());
}

namespace {

constexpr char kModelMagic[4] = {'P', 'Q', 'N', 'N'};
constexpr std::uint16_t kModelVersion = 1;

void write_string(std::ostream& out, const std::string& s) {
  io::write_scalar<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(io::Reader& r, const char* field) {
  const auto len = r.read_scalar<std::uint16_t>(field);
  std::string s(len, '\0');
  if (len > 0) r.read_bytes(s.data(), len, field);
  return s;
}

}  // namespace

void save_model(const Network& net, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("save_model: cannot open " + tmp.string() + " for writing");
    }
    out.write(kModelMagic, sizeof(kModelMagic));
    io::write_scalar<std::uint16_t>(out, kModelVersion);
    write_string(out, net.arch_name);
    write_string(out, net.structure);
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_length));
    io::write_scalar<std::uint16_t>(out, static_cast<std::uint16_t>(net.class_count));
    io::write_scalar<double>(out, net.lrelu_alpha);
    io::write_scalar<std::uint16_t>(out, static_cast<std::uint16_t>(net.convs.size()));
    for (const ConvLayer& layer : net.convs) {
      io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(layer.in_channels));
      io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(layer.out_channels));
      io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(layer.kernel_len));
      io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(layer.stride));
      io::write_f64_array(out, layer.kernels.data(), layer.kernels.size());
      io::write_f64_array(out, layer.bias.data(), layer.bias.size());
    }
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(net.dense.in_dim));
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(net.dense.out_dim));
    io::write_f64_array(out, net.dense.weights.data(), net.dense.weights.size());
    io::write_f64_array(out, net.dense.bias.data(), net.dense.bias.size());
    if (!out) {
      throw std::runtime_error("save_model: write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_model: cannot open " + path.string());
  }
  io::Reader r(in, path.string());

  char magic[4];
  r.read_bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kModelMagic, sizeof(kModelMagic)) != 0) {
    r.fail("bad magic, not a PQNN model file");
  }
  const auto version = r.read_scalar<std::uint16_t>("format version");
  if (version != kModelVersion) {
    r.fail("unsupported PQNN format version " + std::to_string(version) +
           " (expected " + std::to_string(kModelVersion) + ")");
  }

  Network net;
  net.arch_name = read_string(r, "arch name");
  net.structure = read_string(r, "structure");
  net.input_length = static_cast<int>(r.read_scalar<std::uint32_t>("input_length"));
  net.class_count = r.read_scalar<std::uint16_t>("class_count");
  net.lrelu_alpha = r.read_scalar<double>("lrelu_alpha");
  const auto conv_count = r.read_scalar<std::uint16_t>("conv layer count");
  for (int i = 0; i < conv_count; ++i) {
    ConvLayer layer;
    layer.in_channels = static_cast<int>(r.read_scalar<std::uint32_t>("conv in_channels"));
    layer.out_channels = static_cast<int>(r.read_scalar<std::uint32_t>("conv out_channels"));
    layer.kernel_len = static_cast<int>(r.read_scalar<std::uint32_t>("conv kernel_len"));
    layer.stride = static_cast<int>(r.read_scalar<std::uint32_t>("conv stride"));
    if (layer.in_channels < 1 || layer.out_channels < 1 || layer.kernel_len < 1 ||
        layer.stride < 1) {
      r.fail("conv layer with non-positive shape field");
    }
    layer.kernels.resize(static_cast<std::size_t>(layer.out_channels) * layer.in_channels *
                         layer.kernel_len);
    layer.bias.resize(static_cast<std::size_t>(layer.out_channels));
    r.read_f64_array(layer.kernels.data(), layer.kernels.size(), "conv kernels");
    r.read_f64_array(layer.bias.data(), layer.bias.size(), "conv bias");
    layer.grad_kernels.assign(layer.kernels.size(), 0.0);
    layer.grad_bias.assign(layer.bias.size(), 0.0);
    net.convs.push_back(std::move(layer));
  }
  net.dense.in_dim = static_cast<int>(r.read_scalar<std::uint32_t>("dense in_dim"));
  net.dense.out_dim = static_cast<int>(r.read_scalar<std::uint32_t>("dense out_dim"));
  if (net.dense.in_dim < 1 || net.dense.out_dim < 1) {
    r.fail("dense layer with non-positive dimension");
  }
  net.dense.weights.resize(static_cast<std::size_t>(net.dense.out_dim) * net.dense.in_dim);
  net.dense.bias.resize(static_cast<std::size_t>(net.dense.out_dim));
  r.read_f64_array(net.dense.weights.data(), net.dense.weights.size(), "dense weights");
  r.read_f64_array(net.dense.bias.data(), net.dense.bias.size(), "dense bias");
  net.dense.grad_weights.assign(net.dense.weights.size(), 0.0);
  net.dense.grad_bias.assign(net.dense.bias.size(), 0.0);
  r.expect_eof();

  if (net.flattened_size() != net.dense.in_dim) {
    r.fail("conv chain output does not match dense input dimension");
  }
  return net;
}

}  // namespace pq::nn
