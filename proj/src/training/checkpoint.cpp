#include "lexigan/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <type_traits>

#include "lexigan/errors.hpp"

namespace lexigan::training {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'W', 'G', 'N'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out.insert(out.end(), b, b + n);
  }

  template <typename T>
  void tensor(const std::string& name, const std::vector<std::size_t>& shape, std::span<const T> data) {
    if (name.size() > 0xffff) throw CheckpointError("tensor name too long: " + name);
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    put<std::uint8_t>(std::is_same_v<T, float> ? 0 : 1);
    put<std::uint8_t>(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) put<std::uint32_t>(static_cast<std::uint32_t>(d));
    bytes(data.data(), data.size_bytes());
    ++count;
  }

  std::vector<unsigned char> out;
  std::uint32_t count = 0;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : buf(b) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  void need(std::size_t n, const char* what) const {
    if (buf.size() - pos < n) throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
  }

  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;
};

struct RawTensor {
  std::vector<std::size_t> shape;
  std::uint8_t dtype = 0;
  std::vector<float> f32;
  std::vector<double> f64;
};

template <typename T>
void write_net(Writer& w, const std::string& prefix, const models::NetworkParams<T>& net) {
  for (const auto& nt : net.named()) w.tensor<T>(prefix + nt.name, nt.value.shape(), nt.value.data());
}

void write_opt(Writer& w, const std::string& prefix, const models::NetworkParams<float>& net,
               const ad::OptimizerState<float>& opt) {
  const auto& named = net.named();
  auto write_slots = [&](const char* slot, const std::vector<std::vector<float>>& v) {
    if (v.empty()) return;
    for (std::size_t i = 0; i < named.size(); ++i)
      w.tensor<float>(prefix + slot + named[i].name, named[i].value.shape(), v[i]);
  };
  write_slots("first/", opt.first);
  write_slots("second/", opt.second);
  const double step = static_cast<double>(opt.step);
  w.tensor<double>(prefix + "step", {}, std::span<const double>(&step, 1));
}

const RawTensor& take(const std::map<std::string, RawTensor>& table, const std::string& name) {
  auto it = table.find(name);
  if (it == table.end()) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

std::vector<float> f32_of(const RawTensor& t, const std::string& name, const std::vector<std::size_t>& shape) {
  if (t.dtype != 0) throw CheckpointError("tensor '" + name + "' should be f32");
  if (t.shape != shape) {
    throw CheckpointError("tensor '" + name + "' has shape " + ad::shape_string(t.shape) + ", expected " +
                          ad::shape_string(shape));
  }
  return t.f32;
}

double scalar_of(const RawTensor& t, const std::string& name) {
  if (t.dtype != 1 || !t.shape.empty()) throw CheckpointError("tensor '" + name + "' should be an f64 scalar");
  return t.f64[0];
}

models::NetworkParams<float> read_net(const std::map<std::string, RawTensor>& table, const std::string& prefix,
                                      const models::NetworkSpec& spec) {
  std::vector<models::NamedTensor<float>> tensors;
  for (const auto& [name, shape] : models::expected_shapes(spec)) {
    tensors.push_back({name, ad::Tensor<float>(shape, f32_of(take(table, prefix + name), prefix + name, shape), true)});
  }
  return models::NetworkParams<float>::from_tensors(spec, std::move(tensors));
}

void read_opt(const std::map<std::string, RawTensor>& table, const std::string& prefix,
              const models::NetworkParams<float>& net, ad::OptimizerState<float>& opt) {
  const auto& named = net.named();
  auto read_slots = [&](const char* slot, std::vector<std::vector<float>>& v) {
    if (v.empty()) return;
    for (std::size_t i = 0; i < named.size(); ++i) {
      const std::string key = prefix + slot + named[i].name;
      v[i] = f32_of(take(table, key), key, named[i].value.shape());
    }
  };
  read_slots("first/", opt.first);
  read_slots("second/", opt.second);
  opt.step = static_cast<std::uint64_t>(scalar_of(take(table, prefix + "step"), prefix + "step"));
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const TrainState& state) {
  Writer body;
  write_net(body, "generator/", state.generator);
  write_net(body, "discriminator/", state.discriminator);
  write_net(body, "qnet/", state.qnet);
  write_opt(body, "opt/generator/", state.generator, state.opt_generator);
  write_opt(body, "opt/discriminator/", state.discriminator, state.opt_discriminator);
  write_opt(body, "opt/qnet/", state.qnet, state.opt_qnet);
  std::vector<double> order(state.order.begin(), state.order.end());
  body.tensor<double>("data/order", {order.size()}, order);
  const double cursor = static_cast<double>(state.cursor);
  body.tensor<double>("data/cursor", {}, std::span<const double>(&cursor, 1));

  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(state.step);
  const std::string blob = state.config.to_blob();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(blob.size()));
  w.bytes(blob.data(), blob.size());
  w.put<std::uint32_t>(body.count);
  w.bytes(body.out.data(), body.out.size());
  for (auto s : state.rng.state()) w.put<std::uint64_t>(s);
  return std::move(w.out);
}

TrainState decode_checkpoint(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("bad magic: not a checkpoint file");
  r.pos = 4;
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto step = r.get<std::uint64_t>("step");
  const auto blob_len = r.get<std::uint32_t>("config length");
  r.need(blob_len, "config");
  const std::string blob(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + blob_len));
  r.pos += blob_len;

  TrainConfig config;
  try {
    config = TrainConfig::from_blob(blob);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad config in checkpoint: ") + e.what());
  }

  std::map<std::string, RawTensor> table;
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>("tensor name length");
    r.need(name_len, "tensor name");
    std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                     bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + name_len));
    r.pos += name_len;
    RawTensor t;
    t.dtype = r.get<std::uint8_t>("dtype");
    if (t.dtype > 1) throw CheckpointError("tensor '" + name + "' has unknown dtype " + std::to_string(t.dtype));
    const auto rank = r.get<std::uint8_t>("rank");
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.shape.push_back(r.get<std::uint32_t>("dims"));
      n *= t.shape.back();
    }
    const std::size_t width = t.dtype == 0 ? 4 : 8;
    if (n > (bytes.size() - r.pos) / width) throw CheckpointError("truncated checkpoint in tensor '" + name + "'");
    if (t.dtype == 0) {
      t.f32.resize(n);
      std::memcpy(t.f32.data(), bytes.data() + r.pos, n * 4);
    } else {
      t.f64.resize(n);
      std::memcpy(t.f64.data(), bytes.data() + r.pos, n * 8);
    }
    r.pos += n * width;
    if (!table.emplace(name, std::move(t)).second) throw CheckpointError("duplicate tensor '" + name + "'");
  }
  Rng::State rs;
  for (auto& s : rs) s = r.get<std::uint64_t>("rng state");
  if (r.pos != bytes.size()) throw CheckpointError("trailing bytes after checkpoint");

  TrainState s = TrainState::initialize(config);
  s.step = step;
  s.generator = read_net(table, "generator/", s.spec(models::NetKind::generator));
  s.discriminator = read_net(table, "discriminator/", s.spec(models::NetKind::discriminator));
  s.qnet = read_net(table, "qnet/", s.spec(models::NetKind::qnet));
  read_opt(table, "opt/generator/", s.generator, s.opt_generator);
  read_opt(table, "opt/discriminator/", s.discriminator, s.opt_discriminator);
  read_opt(table, "opt/qnet/", s.qnet, s.opt_qnet);
  const auto& order = take(table, "data/order");
  if (order.dtype != 1 || order.shape.size() != 1) throw CheckpointError("tensor 'data/order' should be an f64 vector");
  s.order.assign(order.f64.begin(), order.f64.end());
  s.cursor = static_cast<std::uint64_t>(scalar_of(take(table, "data/cursor"), "data/cursor"));
  s.rng = Rng::from_state(rs);
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(state);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace lexigan::training
