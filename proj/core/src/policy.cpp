#include "pipelayout/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "pipelayout/errors.hpp"
#include "pipelayout/io.hpp"

namespace pipelayout {

PolicyNet::PolicyNet(int input_width, int hidden_width, int trunk_layers) {
  std::vector<LayerSpec> layers;
  int in = input_width;
  for (int i = 0; i < trunk_layers; ++i) {
    layers.push_back({in, hidden_width, Activation::Tanh});
    in = hidden_width;
  }
  layers.push_back({in, kNumActions, Activation::Linear});  // actor
  layers.push_back({in, 1, Activation::Linear});            // critic
  *this = PolicyNet(std::move(layers));
}

PolicyNet::PolicyNet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.size() < 3) throw FormatError("policy needs trunk, actor and critic layers");
  const int trunk_out = layers_[layers_.size() - 3].out;
  const LayerSpec& actor = layers_[layers_.size() - 2];
  const LayerSpec& critic = layers_.back();
  if (actor.in != trunk_out || critic.in != trunk_out ||
      actor.out != kNumActions || critic.out != 1) {
    throw FormatError("policy head shapes do not fit the trunk");
  }
  for (std::size_t i = 0; i + 3 < layers_.size(); ++i) {
    if (layers_[i].out != layers_[i + 1].in) {
      throw FormatError("trunk layer widths do not chain");
    }
  }
  std::size_t offset = 0;
  for (const LayerSpec& l : layers_) {
    if (l.in <= 0 || l.out <= 0) throw FormatError("non-positive layer width");
    weight_off_.push_back(offset);
    offset += static_cast<std::size_t>(l.in) * l.out;
    bias_off_.push_back(offset);
    offset += l.out;
  }
  params_.assign(offset, 0.0);
}

namespace {

// Orthogonal rows (out <= in) or columns (out > in) via modified
// Gram-Schmidt on a gaussian draw, then scaled by gain.
void orthogonal_init(double* w, int out, int in, double gain, RngStream& rng) {
  for (int i = 0; i < out * in; ++i) w[i] = rng.gaussian();
  const bool by_rows = out <= in;
  const int vecs = by_rows ? out : in;
  const int dim = by_rows ? in : out;
  auto at = [&](int v, int k) -> double& {
    return by_rows ? w[v * in + k] : w[k * in + v];
  };
  for (int v = 0; v < vecs; ++v) {
    for (int u = 0; u < v; ++u) {
      double dot = 0.0;
      for (int k = 0; k < dim; ++k) dot += at(v, k) * at(u, k);
      for (int k = 0; k < dim; ++k) at(v, k) -= dot * at(u, k);
    }
    double norm = 0.0;
    for (int k = 0; k < dim; ++k) norm += at(v, k) * at(v, k);
    norm = std::sqrt(norm);
    for (int k = 0; k < dim; ++k) at(v, k) /= norm;
  }
  for (int i = 0; i < out * in; ++i) w[i] *= gain;
}

}  // namespace

void PolicyNet::init_params(std::uint64_t seed) {
  const std::size_t n_trunk = layers_.size() - 2;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    double gain = l < n_trunk ? std::sqrt(2.0)
                : l == n_trunk ? 0.01
                               : 1.0;
    RngStream rng(mix_seed(seed, 0x706F6C69 /* layer stream tag */, l));
    orthogonal_init(params_.data() + weight_off_[l], layers_[l].out,
                    layers_[l].in, gain, rng);
    std::fill_n(params_.data() + bias_off_[l], layers_[l].out, 0.0);
  }
}

PolicyOutput PolicyNet::forward(std::span<const double> obs) const {
  Cache scratch;
  return forward_cached(obs, scratch);
}

PolicyOutput PolicyNet::forward_cached(std::span<const double> obs,
                                       Cache& cache) const {
  if (static_cast<int>(obs.size()) != input_width()) {
    throw ShapeMismatch("observation width " + std::to_string(obs.size()) +
                        ", network expects " + std::to_string(input_width()));
  }
  const std::size_t n_trunk = layers_.size() - 2;
  std::size_t acts_size = obs.size();
  for (std::size_t l = 0; l < n_trunk; ++l) acts_size += layers_[l].out;
  cache.acts.resize(acts_size);
  std::copy(obs.begin(), obs.end(), cache.acts.begin());

  const double* x = cache.acts.data();
  std::size_t pos = obs.size();
  for (std::size_t l = 0; l < n_trunk; ++l) {
    const LayerSpec& spec = layers_[l];
    const double* w = params_.data() + weight_off_[l];
    const double* b = params_.data() + bias_off_[l];
    double* y = cache.acts.data() + pos;
    for (int o = 0; o < spec.out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * spec.in;
      for (int i = 0; i < spec.in; ++i) acc += row[i] * x[i];
      y[o] = spec.act == Activation::Tanh ? std::tanh(acc) : acc;
    }
    x = y;
    pos += spec.out;
  }

  PolicyOutput out;
  const LayerSpec& actor = layers_[n_trunk];
  const double* wa = params_.data() + weight_off_[n_trunk];
  const double* ba = params_.data() + bias_off_[n_trunk];
  for (int o = 0; o < actor.out; ++o) {
    double acc = ba[o];
    const double* row = wa + static_cast<std::size_t>(o) * actor.in;
    for (int i = 0; i < actor.in; ++i) acc += row[i] * x[i];
    out.logits[o] = acc;
  }
  const LayerSpec& critic = layers_[n_trunk + 1];
  const double* wc = params_.data() + weight_off_[n_trunk + 1];
  double acc = params_[bias_off_[n_trunk + 1]];
  for (int i = 0; i < critic.in; ++i) acc += wc[i] * x[i];
  out.value = acc;
  return out;
}

void PolicyNet::backward(const Cache& cache,
                         const std::array<double, kNumActions>& dlogits,
                         double dvalue, std::span<double> grad) const {
  const std::size_t n_trunk = layers_.size() - 2;
  const int h_width = layers_[n_trunk].in;

  // Activation offsets inside the cache.
  std::vector<std::size_t> act_off(n_trunk + 1);
  act_off[0] = 0;
  std::size_t pos = layers_[0].in;
  for (std::size_t l = 0; l < n_trunk; ++l) {
    act_off[l + 1] = pos;
    pos += layers_[l].out;
  }
  const double* h = cache.acts.data() + act_off[n_trunk];

  std::vector<double> dh(h_width, 0.0);

  const LayerSpec& actor = layers_[n_trunk];
  const double* wa = params_.data() + weight_off_[n_trunk];
  double* gwa = grad.data() + weight_off_[n_trunk];
  double* gba = grad.data() + bias_off_[n_trunk];
  for (int o = 0; o < actor.out; ++o) {
    const double g = dlogits[o];
    if (g != 0.0) {
      const double* row = wa + static_cast<std::size_t>(o) * actor.in;
      double* grow = gwa + static_cast<std::size_t>(o) * actor.in;
      for (int i = 0; i < actor.in; ++i) {
        grow[i] += g * h[i];
        dh[i] += g * row[i];
      }
    }
    gba[o] += g;
  }

  const LayerSpec& critic = layers_[n_trunk + 1];
  const double* wc = params_.data() + weight_off_[n_trunk + 1];
  double* gwc = grad.data() + weight_off_[n_trunk + 1];
  if (dvalue != 0.0) {
    for (int i = 0; i < critic.in; ++i) {
      gwc[i] += dvalue * h[i];
      dh[i] += dvalue * wc[i];
    }
  }
  grad[bias_off_[n_trunk + 1]] += dvalue;

  std::vector<double> dprev;
  for (std::size_t l = n_trunk; l-- > 0;) {
    const LayerSpec& spec = layers_[l];
    const double* a = cache.acts.data() + act_off[l + 1];
    const double* x = cache.acts.data() + act_off[l];
    // d(pre-activation) reuses dh in place.
    if (spec.act == Activation::Tanh) {
      for (int o = 0; o < spec.out; ++o) dh[o] *= 1.0 - a[o] * a[o];
    }
    const double* w = params_.data() + weight_off_[l];
    double* gw = grad.data() + weight_off_[l];
    double* gb = grad.data() + bias_off_[l];
    dprev.assign(spec.in, 0.0);
    for (int o = 0; o < spec.out; ++o) {
      const double g = dh[o];
      gb[o] += g;
      const double* row = w + static_cast<std::size_t>(o) * spec.in;
      double* grow = gw + static_cast<std::size_t>(o) * spec.in;
      for (int i = 0; i < spec.in; ++i) {
        grow[i] += g * x[i];
        dprev[i] += g * row[i];
      }
    }
    dh.swap(dprev);
  }
}

MaskedDistribution masked_distribution(
    const std::array<double, kNumActions>& logits,
    const std::array<bool, kNumActions>& mask) {
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int a = 0; a < kNumActions; ++a) {
    if (mask[a]) {
      any = true;
      max_logit = std::max(max_logit, logits[a]);
    }
  }
  if (!any) throw AllMasked("no unmasked action");
  MaskedDistribution dist;
  double z = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    dist.probs[a] = mask[a] ? std::exp(logits[a] - max_logit) : 0.0;
    z += dist.probs[a];
  }
  double entropy = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    dist.probs[a] /= z;
    if (dist.probs[a] > 0.0) entropy -= dist.probs[a] * std::log(dist.probs[a]);
  }
  dist.entropy = entropy;
  return dist;
}

ActResult act(const PolicyNet& net, std::span<const double> obs,
              const std::array<bool, kNumActions>& mask, ActMode mode,
              RngStream& rng) {
  PolicyOutput out = net.forward(obs);
  MaskedDistribution dist = masked_distribution(out.logits, mask);
  ActResult result;
  result.value = out.value;
  if (mode == ActMode::Greedy) {
    int best = -1;
    for (int a = 0; a < kNumActions; ++a) {
      if (mask[a] && (best < 0 || dist.probs[a] > dist.probs[best])) best = a;
    }
    result.action = best;
  } else {
    double u = rng.unit();
    double cum = 0.0;
    int chosen = -1;
    for (int a = 0; a < kNumActions; ++a) {
      if (!mask[a]) continue;
      cum += dist.probs[a];
      chosen = a;
      if (u < cum) break;
    }
    result.action = chosen;
  }
  result.log_prob = std::log(dist.probs[result.action]);
  return result;
}

std::uint32_t crc32(const void* data, std::size_t size) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xFF));
}

struct Reader {
  const unsigned char* p;
  std::size_t left;

  void need(std::size_t n) {
    if (left < n) throw FormatError("checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    --left;
    return *p++;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(*p++) << (8 * i);
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
    left -= 8;
    return v;
  }
};

constexpr char kMagic[4] = {'P', 'P', 'L', 'C'};

}  // namespace

void save_checkpoint(const PolicyNet& net, const std::string& path) {
  std::string payload;
  payload.reserve(net.param_count() * 4);
  for (double d : net.params()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d));
    put_u32(payload, bits);
  }

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, 1);
  put_u64(out, net.obs_layout_hash);
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const LayerSpec& l : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.in));
    put_u32(out, static_cast<std::uint32_t>(l.out));
    out.push_back(static_cast<char>(l.act));
  }
  put_u64(out, net.trained_timesteps);
  put_u64(out, net.train_seed);
  out += payload;
  put_u32(out, crc32(payload.data(), payload.size()));
  write_file_atomic(path, out);
}

PolicyNet load_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
  r.need(4);
  if (std::memcmp(r.p, kMagic, 4) != 0) throw FormatError("bad checkpoint magic");
  r.p += 4;
  r.left -= 4;
  const std::uint32_t version = r.u32();
  if (version != 1) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t layout_hash = r.u64();
  const std::uint32_t n_layers = r.u32();
  if (n_layers < 3 || n_layers > 64) {
    throw FormatError("implausible layer count " + std::to_string(n_layers));
  }
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    l.in = static_cast<int>(r.u32());
    l.out = static_cast<int>(r.u32());
    const std::uint8_t act = r.u8();
    if (act > 1) throw FormatError("unknown activation code " + std::to_string(act));
    l.act = static_cast<Activation>(act);
    layers.push_back(l);
  }
  const std::uint64_t timesteps = r.u64();
  const std::uint64_t seed = r.u64();

  PolicyNet net(std::move(layers));
  net.obs_layout_hash = layout_hash;
  net.trained_timesteps = timesteps;
  net.train_seed = seed;

  const std::size_t payload_size = net.param_count() * 4;
  r.need(payload_size + 4);
  const unsigned char* payload = r.p;
  for (std::size_t i = 0; i < net.param_count(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) {
      bits |= static_cast<std::uint32_t>(payload[4 * i + k]) << (8 * k);
    }
    net.params()[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  r.p += payload_size;
  r.left -= payload_size;
  const std::uint32_t stored_crc = r.u32();
  if (stored_crc != crc32(payload, payload_size)) {
    throw FormatError("checkpoint CRC mismatch");
  }
  if (r.left != 0) throw FormatError("trailing bytes after checkpoint");
  return net;
}

PolicyNet load_checkpoint(const std::string& path,
                          std::uint64_t expected_layout_hash) {
  PolicyNet net = load_checkpoint(path);
  if (net.obs_layout_hash != expected_layout_hash) {
    throw LayoutMismatch("checkpoint was trained on a different observation layout");
  }
  return net;
}

}  // namespace pipelayout
