#include "p2c/checkpoint.hpp"

#include <fstream>

namespace p2c {

namespace {

constexpr uint32_t kVersion = 1;

struct Writer {
  std::ofstream os;
  explicit Writer(const std::filesystem::path& p) : os(p, std::ios::binary) {
    check(bool(os), "io", "cannot write checkpoint " + p.string());
  }
  void bytes(const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), std::streamsize(n));
  }
  void u32(uint32_t v) { bytes(&v, sizeof v); }
  void u64(uint64_t v) { bytes(&v, sizeof v); }
  void i64(int64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u32(uint32_t(s.size()));
    bytes(s.data(), s.size());
  }
  void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
};

struct Reader {
  std::ifstream is;
  std::filesystem::path path;
  explicit Reader(const std::filesystem::path& p) : is(p, std::ios::binary), path(p) {
    check(bool(is), "checkpoint", "cannot open checkpoint " + p.string());
  }
  void bytes(void* p, std::size_t n) {
    is.read(static_cast<char*>(p), std::streamsize(n));
    check(bool(is), "checkpoint", "corrupt checkpoint (truncated): " + path.string());
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  int64_t i64() {
    int64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str(uint32_t max_len = 1u << 20) {
    uint32_t n = u32();
    check(n <= max_len, "checkpoint", "corrupt checkpoint (oversized string): " + path.string());
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  std::vector<double> f64s(uint64_t n) {
    check(n <= (1ull << 32), "checkpoint", "corrupt checkpoint (oversized blob): " + path.string());
    std::vector<double> v(n);
    if (n) bytes(v.data(), n * sizeof(double));
    return v;
  }
};

}  // namespace

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file) {
  Writer w(path);
  w.bytes("DPTC", 4);
  w.u32(kVersion);
  w.u64(file.config_hash);
  w.str(file.config_text);
  w.i64(file.step);
  w.u64(file.seed);
  w.u32(uint32_t(file.nets.size()));
  for (const NetBlob& net : file.nets) {
    w.str(net.name);
    w.u32(uint32_t(net.params.size()));
    for (const ParamBlob& p : net.params) {
      w.str(p.name);
      w.u32(uint32_t(p.shape.n));
      w.u32(uint32_t(p.shape.c));
      w.u32(uint32_t(p.shape.h));
      w.u32(uint32_t(p.shape.w));
      w.f64s(p.data);
    }
    w.u32(net.has_adam ? 1 : 0);
    if (net.has_adam) {
      w.i64(net.adam_t);
      for (std::size_t i = 0; i < net.params.size(); ++i) {
        w.f64s(net.adam_m[i]);
        w.f64s(net.adam_v[i]);
      }
    }
  }
  w.os.flush();
  check(bool(w.os), "io", "write failed for checkpoint " + path.string());
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4] = {};
  r.bytes(magic, 4);
  check(std::string(magic, 4) == "DPTC", "checkpoint",
        path.string() + " is not a checkpoint file (bad magic)");
  uint32_t version = r.u32();
  check(version == kVersion, "checkpoint",
        "unsupported checkpoint version " + std::to_string(version));
  CheckpointFile f;
  f.config_hash = r.u64();
  f.config_text = r.str();
  f.step = long(r.i64());
  f.seed = r.u64();
  uint32_t net_count = r.u32();
  check(net_count <= 64, "checkpoint", "corrupt checkpoint (net count): " + path.string());
  for (uint32_t i = 0; i < net_count; ++i) {
    NetBlob net;
    net.name = r.str(256);
    uint32_t param_count = r.u32();
    check(param_count <= 4096, "checkpoint", "corrupt checkpoint (param count): " + path.string());
    for (uint32_t j = 0; j < param_count; ++j) {
      ParamBlob p;
      p.name = r.str(256);
      p.shape.n = int(r.u32());
      p.shape.c = int(r.u32());
      p.shape.h = int(r.u32());
      p.shape.w = int(r.u32());
      check(p.shape.n >= 1 && p.shape.c >= 1 && p.shape.h >= 1 && p.shape.w >= 1 &&
                p.shape.numel() <= (1ull << 32),
            "checkpoint", "corrupt checkpoint (param shape): " + path.string());
      p.data = r.f64s(p.shape.numel());
      net.params.push_back(std::move(p));
    }
    net.has_adam = r.u32() != 0;
    if (net.has_adam) {
      net.adam_t = long(r.i64());
      for (const ParamBlob& p : net.params) {
        net.adam_m.push_back(r.f64s(p.shape.numel()));
        net.adam_v.push_back(r.f64s(p.shape.numel()));
      }
    }
    f.nets.push_back(std::move(net));
  }
  // trailing garbage means the file is not what we wrote
  r.is.peek();
  check(r.is.eof(), "checkpoint", "corrupt checkpoint (trailing bytes): " + path.string());
  return f;
}

}  // namespace p2c
