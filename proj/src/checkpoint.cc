#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jumper/neural.h"

namespace jumper {
namespace {

constexpr char kMagic[4] = {'J', 'M', 'P', 'R'};
constexpr std::uint32_t kNoOptimizer = 0;
constexpr std::uint32_t kAdamSection = 1;

class Writer {
 public:
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void F32(double v) { U32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++]))
           << (8 * i);
    }
    return v;
  }
  std::uint64_t U64() {
    const std::uint64_t lo = U32();
    const std::uint64_t hi = U32();
    return lo | (hi << 32);
  }
  double F32() { return std::bit_cast<float>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }
  void Expect(const char* p, std::size_t n) {
    Need(n);
    if (std::memcmp(in_.data() + pos_, p, n) != 0) {
      throw std::runtime_error("checkpoint: bad magic");
    }
    pos_ += n;
  }
  bool Done() const { return pos_ == in_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw std::runtime_error("checkpoint: truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

void WriteLayers(Writer& w, const PolicyParams& p,
                 const std::vector<LayerSlot>& layers) {
  w.U32(static_cast<std::uint32_t>(layers.size()));
  for (const LayerSlot& l : layers) {
    w.U32(static_cast<std::uint32_t>(l.out));
    w.U32(static_cast<std::uint32_t>(l.in));
    for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) {
      w.F32(p.data()[l.weight + i]);
    }
    for (int i = 0; i < l.out; ++i) w.F32(p.data()[l.bias + i]);
  }
}

struct RawLayer {
  int out = 0;
  int in = 0;
  std::vector<double> values;  // weights then biases
};

std::vector<RawLayer> ReadLayers(Reader& r) {
  const std::uint32_t count = r.U32();
  if (count == 0 || count > 64) throw std::runtime_error("checkpoint: layer count");
  std::vector<RawLayer> layers(count);
  for (RawLayer& l : layers) {
    l.out = static_cast<int>(r.U32());
    l.in = static_cast<int>(r.U32());
    if (l.out <= 0 || l.in <= 0 || l.out > (1 << 16) || l.in > (1 << 16)) {
      throw std::runtime_error("checkpoint: layer shape");
    }
    l.values.resize(static_cast<std::size_t>(l.out) * (l.in + 1));
    for (double& v : l.values) v = r.F32();
  }
  return layers;
}

void StoreLayers(PolicyParams& p, const std::vector<LayerSlot>& slots,
                 const std::vector<RawLayer>& raw) {
  if (slots.size() != raw.size()) throw std::runtime_error("checkpoint: layers");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const LayerSlot& s = slots[k];
    if (s.in != raw[k].in || s.out != raw[k].out) {
      throw std::runtime_error("checkpoint: inconsistent layer shapes");
    }
    const std::size_t nw = static_cast<std::size_t>(s.in) * s.out;
    std::copy_n(raw[k].values.begin(), nw, p.data().begin() + s.weight);
    std::copy_n(raw[k].values.begin() + nw, s.out, p.data().begin() + s.bias);
  }
}

void WriteOffsets(Writer& w, const std::vector<double>& offsets) {
  w.U32(static_cast<std::uint32_t>(offsets.size()));
  for (const double o : offsets) w.F64(o);
}

std::vector<double> ReadOffsets(Reader& r) {
  const std::uint32_t n = r.U32();
  if (n > 4096) throw std::runtime_error("checkpoint: offset count");
  std::vector<double> out(n);
  for (double& o : out) o = r.F64();
  return out;
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  const PolicyParams& p = ckpt.params;
  Writer w;
  w.Bytes(kMagic, 4);
  w.U32(kCheckpointVersion);
  w.U32(ckpt.stage);
  w.U32(ckpt.spec.mode == ObsMode::kProprio ? 0 : 1);
  w.U32(static_cast<std::uint32_t>(ckpt.spec.proprio_dim));
  WriteOffsets(w, ckpt.spec.body_offsets);
  WriteOffsets(w, ckpt.spec.foot_offsets);
  w.U32(static_cast<std::uint32_t>(ckpt.spec.total_dim));
  w.U32(static_cast<std::uint32_t>(p.act_dim()));
  WriteLayers(w, p, p.actor());
  for (int i = 0; i < p.act_dim(); ++i) w.F32(p.LogStd()[i]);
  WriteLayers(w, p, p.critic());
  if (ckpt.opt) {
    const OptState& o = *ckpt.opt;
    w.U32(kAdamSection);
    w.U64(static_cast<std::uint64_t>(o.step));
    w.F64(o.lr);
    w.F64(o.beta1);
    w.F64(o.beta2);
    w.F64(o.eps);
    w.U64(o.m.size());
    for (const double x : o.m) w.F32(x);
    for (const double x : o.v) w.F32(x);
  } else {
    w.U32(kNoOptimizer);
  }
  return w.Take();
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
  Reader r(bytes);
  r.Expect(kMagic, 4);
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint c;
  c.stage = r.U32();
  const std::uint32_t mode = r.U32();
  if (mode > 1) throw std::runtime_error("checkpoint: observation mode");
  c.spec.mode = mode == 0 ? ObsMode::kProprio : ObsMode::kTerrainAware;
  c.spec.proprio_dim = static_cast<int>(r.U32());
  c.spec.body_offsets = ReadOffsets(r);
  c.spec.foot_offsets = ReadOffsets(r);
  c.spec.total_dim = static_cast<int>(r.U32());
  if (!c.spec.Consistent()) throw std::runtime_error("checkpoint: ObsSpec");
  const int act_dim = static_cast<int>(r.U32());
  const std::vector<RawLayer> actor = ReadLayers(r);
  std::vector<double> log_std(act_dim);
  for (double& s : log_std) s = r.F32();
  const std::vector<RawLayer> critic = ReadLayers(r);

  std::vector<int> hidden;
  for (std::size_t k = 0; k + 1 < actor.size(); ++k) hidden.push_back(actor[k].out);
  if (actor.front().in != c.spec.total_dim || actor.back().out != act_dim) {
    throw std::runtime_error("checkpoint: actor shape");
  }
  c.params = PolicyParams(c.spec.total_dim, act_dim, hidden);
  StoreLayers(c.params, c.params.actor(), actor);
  StoreLayers(c.params, c.params.critic(), critic);
  for (int i = 0; i < act_dim; ++i) c.params.LogStd()[i] = log_std[i];

  const std::uint32_t tag = r.U32();
  if (tag == kAdamSection) {
    OptState o;
    o.step = static_cast<std::int64_t>(r.U64());
    o.lr = r.F64();
    o.beta1 = r.F64();
    o.beta2 = r.F64();
    o.eps = r.F64();
    const std::uint64_t n = r.U64();
    if (n != c.params.size()) throw std::runtime_error("checkpoint: moments");
    o.m.resize(n);
    o.v.resize(n);
    for (double& x : o.m) x = r.F32();
    for (double& x : o.v) x = r.F32();
    c.opt = std::move(o);
  } else if (tag != kNoOptimizer) {
    throw std::runtime_error("checkpoint: unknown section tag");
  }
  if (!r.Done()) throw std::runtime_error("checkpoint: trailing bytes");
  return c;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = SerializeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

}  // namespace jumper
