#include <bit>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>

#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/error.hpp"
#include "depthlayers/toynet/train.hpp"

namespace depthlayers::nn {

namespace {

constexpr char kMagic[4] = {'D', 'L', 'Y', 'R'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const Tensor& t) {
    str(name);
    u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) u32(static_cast<std::uint32_t>(d));
    for (double v : t.data) f64(v);
  }
  const std::string& data() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string data) : in_(std::move(data)) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw DataError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor(std::string& name) {
    name = str();
    const std::uint32_t rank = u32();
    if (rank > 8) throw DataError("checkpoint tensor rank is implausible");
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(u32()));
    const std::size_t n = shape_numel(shape);
    need(n * 8);
    Tensor t(shape);
    for (double& v : t.data) v = f64();
    return t;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string in_;
  std::size_t pos_ = 0;
};

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

using Meta = std::map<std::string, std::string>;

const std::string& field(const Meta& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint metadata lacks '" + key + "'");
  return it->second;
}

double as_double(const Meta& m, const std::string& k) { return std::strtod(field(m, k).c_str(), nullptr); }
long long as_int(const Meta& m, const std::string& k) { return std::stoll(field(m, k)); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& s) {
  const TrainConfig& c = s.config;
  std::ostringstream meta;
  meta << "mode=" << to_string(s.mode) << '\n'
       << "iteration=" << s.iteration << '\n'
       << "widths=" << c.net.widths[0] << ',' << c.net.widths[1] << ',' << c.net.widths[2] << '\n'
       << "residual=" << (c.net.residual ? 1 : 0) << '\n'
       << "slope=" << hex(c.net.slope) << '\n'
       << "bottleneck_blocks=" << c.net.bottleneck_blocks << '\n'
       << "learning_rate=" << hex(c.learning_rate) << '\n'
       << "first_decay=" << hex(c.first_decay) << '\n'
       << "second_decay=" << hex(c.second_decay) << '\n'
       << "decay_factor=" << hex(c.decay_factor) << '\n'
       << "iterations=" << c.iterations << '\n'
       << "batch=" << c.batch << '\n'
       << "seed=" << c.seed << '\n'
       << "beta1=" << hex(c.adam.beta1) << '\n'
       << "beta2=" << hex(c.adam.beta2) << '\n'
       << "eps=" << hex(c.adam.eps) << '\n'
       << "weight_decay=" << hex(c.adam.weight_decay) << '\n'
       << "opt_step=" << s.optimizer.step << '\n'
       << "opt_skipped=" << s.optimizer.skipped << '\n'
       << "sample_width=" << s.sample_size.width << '\n'
       << "sample_height=" << s.sample_size.height << '\n';

  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str(meta.str());

  const auto& named = s.params.tensors();
  const bool has_moments = !s.optimizer.m.empty();
  w.u32(static_cast<std::uint32_t>(named.size() * (has_moments ? 3 : 1) + 1));
  for (const auto& nt : named) w.tensor("param/" + nt.name, nt.value);
  if (has_moments) {
    for (std::size_t k = 0; k < named.size(); ++k) w.tensor("adam_m/" + named[k].name, s.optimizer.m[k]);
    for (std::size_t k = 0; k < named.size(); ++k) w.tensor("adam_v/" + named[k].name, s.optimizer.v[k]);
  }
  Tensor log({static_cast<int>(s.log.size()), 5});
  for (std::size_t i = 0; i < s.log.size(); ++i) {
    const auto& r = s.log[i];
    const double row[5] = {static_cast<double>(r.iteration), r.l1, r.l2, r.grad, r.total};
    std::memcpy(&log.data[i * 5], row, sizeof row);
  }
  w.tensor("loss_log", log);
  write_file_atomic(path, w.data());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file(path));
  if (r.raw(4) != std::string(kMagic, 4)) throw DataError(path.string() + " is not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));

  Meta meta;
  std::istringstream lines(r.str());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
  }

  TrainState s;
  TrainConfig& c = s.config;
  {
    std::istringstream ws(field(meta, "widths"));
    char comma = 0;
    ws >> c.net.widths[0] >> comma >> c.net.widths[1] >> comma >> c.net.widths[2];
    if (!ws) throw DataError("checkpoint widths are malformed");
  }
  c.net.residual = as_int(meta, "residual") != 0;
  c.net.slope = as_double(meta, "slope");
  c.net.bottleneck_blocks = static_cast<int>(as_int(meta, "bottleneck_blocks"));
  c.learning_rate = as_double(meta, "learning_rate");
  c.first_decay = as_double(meta, "first_decay");
  c.second_decay = as_double(meta, "second_decay");
  c.decay_factor = as_double(meta, "decay_factor");
  c.iterations = static_cast<int>(as_int(meta, "iterations"));
  c.batch = static_cast<int>(as_int(meta, "batch"));
  c.seed = std::stoull(field(meta, "seed"));
  c.adam.beta1 = as_double(meta, "beta1");
  c.adam.beta2 = as_double(meta, "beta2");
  c.adam.eps = as_double(meta, "eps");
  c.adam.weight_decay = as_double(meta, "weight_decay");
  c.validate();
  s.mode = parse_train_mode(field(meta, "mode"));
  s.iteration = static_cast<int>(as_int(meta, "iteration"));
  s.optimizer.step = as_int(meta, "opt_step");
  s.optimizer.skipped = as_int(meta, "opt_skipped");
  s.sample_size = {static_cast<int>(as_int(meta, "sample_width")), static_cast<int>(as_int(meta, "sample_height"))};

  s.params = ModelParams(c.net);
  std::map<std::string, Tensor> found;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    Tensor t = r.tensor(name);
    found[name] = std::move(t);
  }
  if (!r.done()) throw DataError("checkpoint has trailing bytes");

  auto take = [&](const std::string& key, const std::vector<int>& shape) {
    auto it = found.find(key);
    if (it == found.end()) throw DataError("checkpoint lacks tensor " + key);
    if (it->second.shape != shape)
      throw DataError("checkpoint tensor " + key + " has shape " + shape_string(it->second.shape) + ", expected " +
                      shape_string(shape));
    return it->second;
  };
  for (auto& nt : s.params.tensors()) nt.value = take("param/" + nt.name, nt.value.shape);
  if (found.count("adam_m/" + s.params.tensors().front().name)) {
    for (const auto& nt : s.params.tensors()) {
      s.optimizer.m.push_back(take("adam_m/" + nt.name, nt.value.shape));
      s.optimizer.v.push_back(take("adam_v/" + nt.name, nt.value.shape));
    }
  }
  const auto log_it = found.find("loss_log");
  if (log_it != found.end()) {
    const Tensor& log = log_it->second;
    if (log.shape.size() != 2 || log.dim(1) != 5) throw DataError("checkpoint loss log is malformed");
    for (int i = 0; i < log.dim(0); ++i) {
      const double* row = &log.data[static_cast<std::size_t>(i) * 5];
      s.log.push_back({static_cast<int>(row[0]), row[1], row[2], row[3], row[4]});
    }
  }
  return s;
}

}  // namespace depthlayers::nn
