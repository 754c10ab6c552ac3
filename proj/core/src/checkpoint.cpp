#include "demnet/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <utility>

namespace demnet {

namespace {

constexpr char kMagic[4] = {'D', 'E', 'M', 'N'};
constexpr std::uint8_t kDtypeF64 = 1;
constexpr std::uint8_t kDtypeU64 = 2;
// LayerDef encoding: kind, kernel_h, kernel_w, in_channels, out_channels,
// stride_h, stride_w, padding, output_padding, pool, activation.
constexpr std::size_t kDefFields = 11;

[[noreturn]] void corrupt(const std::string& path, const std::string& what) {
  throw std::runtime_error("checkpoint: " + what + " in " + path);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Section {
  std::uint8_t dtype = 0;
  std::vector<int> shape;  // empty = scalar
  std::vector<double> f64;
  std::vector<std::uint64_t> u64;

  std::size_t count() const {
    std::size_t n = 1;
    for (int e : shape) n *= static_cast<std::size_t>(e);
    return n;
  }
};

void append_section(std::string& out, const std::string& name,
                    const Section& s) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  out.push_back(static_cast<char>(s.dtype));
  out.push_back(static_cast<char>(s.shape.size()));
  for (int e : s.shape) put_u32(out, static_cast<std::uint32_t>(e));
  if (s.dtype == kDtypeF64) {
    for (double v : s.f64) put_f64(out, v);
  } else {
    for (std::uint64_t v : s.u64) put_u64(out, v);
  }
}

Section tensor_section(const Tensor& t) {
  Section s;
  s.dtype = kDtypeF64;
  s.shape = t.shape();
  s.f64 = t.values();
  return s;
}

Section scalar_f64(double v) {
  Section s;
  s.dtype = kDtypeF64;
  s.f64 = {v};
  return s;
}

Section scalar_u64(std::uint64_t v) {
  Section s;
  s.dtype = kDtypeU64;
  s.u64 = {v};
  return s;
}

// Ordered section list for one checkpoint.
std::vector<std::pair<std::string, Section>> build_sections(
    const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, Section>> sections;
  const ModelParams& p = ckpt.params;
  sections.emplace_back("meta/init_seed", scalar_u64(p.init_seed));
  sections.emplace_back("meta/input_h",
                        scalar_u64(static_cast<std::uint64_t>(p.input_h)));
  sections.emplace_back("meta/input_w",
                        scalar_u64(static_cast<std::uint64_t>(p.input_w)));
  for (std::size_t i = 0; i < p.defs.size(); ++i) {
    const LayerDef& d = p.defs[i];
    Section s;
    s.dtype = kDtypeU64;
    s.shape = {static_cast<int>(kDefFields)};
    s.u64 = {static_cast<std::uint64_t>(d.kind),
             static_cast<std::uint64_t>(d.spec.kernel_h),
             static_cast<std::uint64_t>(d.spec.kernel_w),
             static_cast<std::uint64_t>(d.spec.in_channels),
             static_cast<std::uint64_t>(d.spec.out_channels),
             static_cast<std::uint64_t>(d.spec.stride_h),
             static_cast<std::uint64_t>(d.spec.stride_w),
             static_cast<std::uint64_t>(d.spec.padding),
             static_cast<std::uint64_t>(d.spec.output_padding),
             static_cast<std::uint64_t>(d.pool),
             static_cast<std::uint64_t>(d.activation)};
    sections.emplace_back("def/" + std::to_string(i) + "/" + d.name,
                          std::move(s));
  }
  std::vector<std::string> names = trainable_names(p);
  std::vector<const Tensor*> tensors =
      trainable_tensors(std::as_const(p));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    sections.emplace_back("param/" + names[i], tensor_section(*tensors[i]));
  }
  sections.emplace_back("adam/t", scalar_u64(ckpt.adam.t));
  sections.emplace_back("adam/alpha", scalar_f64(ckpt.adam.config.alpha));
  sections.emplace_back("adam/beta1", scalar_f64(ckpt.adam.config.beta1));
  sections.emplace_back("adam/beta2", scalar_f64(ckpt.adam.config.beta2));
  sections.emplace_back("adam/epsilon", scalar_f64(ckpt.adam.config.epsilon));
  if (ckpt.adam.m.size() != tensors.size() ||
      ckpt.adam.v.size() != tensors.size()) {
    throw std::invalid_argument(
        "checkpoint: optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    sections.emplace_back("adam/m/" + names[i],
                          tensor_section(ckpt.adam.m[i]));
    sections.emplace_back("adam/v/" + names[i],
                          tensor_section(ckpt.adam.v[i]));
  }
  sections.emplace_back("stats/amp_mean", scalar_f64(ckpt.stats.amp_mean));
  sections.emplace_back("stats/amp_std", scalar_f64(ckpt.stats.amp_std));
  sections.emplace_back("stats/phase_scale",
                        scalar_f64(ckpt.stats.phase_scale));
  return sections;
}

class Reader {
 public:
  Reader(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<std::uint8_t>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<std::uint8_t>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) corrupt(path_, "truncated file");
  }

 private:
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

const Section& find(const std::map<std::string, Section>& sections,
                    const std::string& name, const std::string& path) {
  auto it = sections.find(name);
  if (it == sections.end()) corrupt(path, "missing section " + name);
  return it->second;
}

double scalar(const std::map<std::string, Section>& sections,
              const std::string& name, const std::string& path) {
  const Section& s = find(sections, name, path);
  if (s.dtype != kDtypeF64 || !s.shape.empty()) {
    corrupt(path, "section " + name + " is not a scalar");
  }
  return s.f64[0];
}

std::uint64_t scalar_u(const std::map<std::string, Section>& sections,
                       const std::string& name, const std::string& path) {
  const Section& s = find(sections, name, path);
  if (s.dtype != kDtypeU64 || !s.shape.empty()) {
    corrupt(path, "section " + name + " is not a scalar");
  }
  return s.u64[0];
}

Tensor tensor_of(const std::map<std::string, Section>& sections,
                 const std::string& name, const std::string& path) {
  const Section& s = find(sections, name, path);
  if (s.dtype != kDtypeF64 || s.shape.empty()) {
    corrupt(path, "section " + name + " is not a tensor");
  }
  return Tensor(s.shape, s.f64);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  auto sections = build_sections(ckpt);
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, ckpt.format_version);
  out.append(reinterpret_cast<const char*>(ckpt.config_digest.data()),
             ckpt.config_digest.size());
  put_u32(out, ckpt.epoch);
  put_u32(out, static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, section] : sections) {
    append_section(out, name, section);
  }

  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("checkpoint: cannot move " + tmp + " to " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    bytes.assign(std::istreambuf_iterator<char>(f),
                 std::istreambuf_iterator<char>());
  }
  Reader r(std::move(bytes), path);
  if (r.str(4) != std::string(kMagic, sizeof(kMagic))) {
    corrupt(path, "bad magic (expected \"DEMN\")");
  }
  Checkpoint ckpt;
  ckpt.format_version = r.u32();
  if (ckpt.format_version > kCheckpointVersion) {
    corrupt(path, "format version " + std::to_string(ckpt.format_version) +
                      " unsupported (this build reads up to " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  for (std::size_t i = 0; i < ckpt.config_digest.size(); ++i) {
    ckpt.config_digest[i] = r.u8();
  }
  ckpt.epoch = r.u32();
  std::uint32_t n_sections = r.u32();

  std::map<std::string, Section> sections;
  std::vector<std::pair<std::size_t, std::string>> def_names;
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    Section s;
    s.dtype = r.u8();
    if (s.dtype != kDtypeF64 && s.dtype != kDtypeU64) {
      corrupt(path, "unknown dtype tag in section " + name);
    }
    std::uint8_t rank = r.u8();
    if (rank > 4) corrupt(path, "rank " + std::to_string(rank) + " in " + name);
    for (int d = 0; d < rank; ++d) {
      std::uint32_t e = r.u32();
      if (e < 1) corrupt(path, "zero extent in section " + name);
      s.shape.push_back(static_cast<int>(e));
    }
    std::size_t count = s.count();
    if (s.dtype == kDtypeF64) {
      s.f64.reserve(count);
      for (std::size_t j = 0; j < count; ++j) s.f64.push_back(r.f64());
    } else {
      s.u64.reserve(count);
      for (std::size_t j = 0; j < count; ++j) s.u64.push_back(r.u64());
    }
    if (name.rfind("def/", 0) == 0) {
      std::size_t sep = name.find('/', 4);
      if (sep == std::string::npos) corrupt(path, "malformed name " + name);
      def_names.emplace_back(std::stoul(name.substr(4, sep - 4)),
                             name.substr(sep + 1));
    }
    if (!sections.emplace(std::move(name), std::move(s)).second) {
      corrupt(path, "duplicate section");
    }
  }
  if (!r.done()) corrupt(path, "trailing bytes");

  ModelParams& p = ckpt.params;
  p.init_seed = scalar_u(sections, "meta/init_seed", path);
  p.input_h = static_cast<int>(scalar_u(sections, "meta/input_h", path));
  p.input_w = static_cast<int>(scalar_u(sections, "meta/input_w", path));

  p.defs.resize(def_names.size());
  for (const auto& [idx, name] : def_names) {
    if (idx >= p.defs.size()) corrupt(path, "def index out of order");
    const Section& s =
        find(sections, "def/" + std::to_string(idx) + "/" + name, path);
    if (s.dtype != kDtypeU64 || s.u64.size() != kDefFields) {
      corrupt(path, "malformed layer definition " + name);
    }
    LayerDef& d = p.defs[idx];
    d.name = name;
    d.kind = static_cast<LayerKind>(s.u64[0]);
    d.spec.kernel_h = static_cast<int>(s.u64[1]);
    d.spec.kernel_w = static_cast<int>(s.u64[2]);
    d.spec.in_channels = static_cast<int>(s.u64[3]);
    d.spec.out_channels = static_cast<int>(s.u64[4]);
    d.spec.stride_h = static_cast<int>(s.u64[5]);
    d.spec.stride_w = static_cast<int>(s.u64[6]);
    d.spec.padding = static_cast<Padding>(s.u64[7]);
    d.spec.output_padding = static_cast<int>(s.u64[8]);
    d.pool = static_cast<int>(s.u64[9]);
    d.activation = static_cast<Activation>(s.u64[10]);
  }

  p.layers.resize(p.defs.size());
  for (std::size_t i = 0; i < p.defs.size(); ++i) {
    if (p.defs[i].kind == LayerKind::MAXPOOL) continue;
    const std::string& base = p.defs[i].name;
    p.layers[i].weights = tensor_of(sections, "param/" + base + "/weights",
                                    path);
    p.layers[i].bias = tensor_of(sections, "param/" + base + "/bias", path);
    if (p.defs[i].activation == Activation::PRELU) {
      p.layers[i].slopes =
          tensor_of(sections, "param/" + base + "/slopes", path);
    }
  }

  ckpt.adam.t = scalar_u(sections, "adam/t", path);
  ckpt.adam.config.alpha = scalar(sections, "adam/alpha", path);
  ckpt.adam.config.beta1 = scalar(sections, "adam/beta1", path);
  ckpt.adam.config.beta2 = scalar(sections, "adam/beta2", path);
  ckpt.adam.config.epsilon = scalar(sections, "adam/epsilon", path);
  std::vector<std::string> names = trainable_names(p);
  std::vector<const Tensor*> tensors =
      trainable_tensors(std::as_const(p));
  for (std::size_t i = 0; i < names.size(); ++i) {
    Tensor m = tensor_of(sections, "adam/m/" + names[i], path);
    Tensor v = tensor_of(sections, "adam/v/" + names[i], path);
    if (!m.same_shape(*tensors[i]) || !v.same_shape(*tensors[i])) {
      corrupt(path, "optimizer state shape mismatch for " + names[i]);
    }
    ckpt.adam.m.push_back(std::move(m));
    ckpt.adam.v.push_back(std::move(v));
  }

  ckpt.stats.amp_mean = scalar(sections, "stats/amp_mean", path);
  ckpt.stats.amp_std = scalar(sections, "stats/amp_std", path);
  ckpt.stats.phase_scale = scalar(sections, "stats/phase_scale", path);
  return ckpt;
}

}  // namespace demnet
