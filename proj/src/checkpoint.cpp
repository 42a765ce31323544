#include "a2a/checkpoint.hpp"

#include <cstring>

#include "a2a/common.hpp"

namespace a2a {

namespace {

void put_u32(std::string& out, uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  put_u32(out, uint32_t(v & 0xffffffffu));
  put_u32(out, uint32_t(v >> 32));
}

struct Reader {
  const unsigned char* p;
  size_t n, off = 0;
  std::string path;

  uint32_t u32() {
    if (off + 4 > n) fail("format error: truncated checkpoint: " + path);
    uint32_t v = uint32_t(p[off]) | uint32_t(p[off + 1]) << 8 | uint32_t(p[off + 2]) << 16 |
                 uint32_t(p[off + 3]) << 24;
    off += 4;
    return v;
  }

  uint64_t u64() {
    uint64_t lo = u32();
    return lo | uint64_t(u32()) << 32;
  }

  std::string str(size_t len) {
    if (off + len > n) fail("format error: truncated checkpoint: " + path);
    std::string s(reinterpret_cast<const char*>(p + off), len);
    off += len;
    return s;
  }
};

}  // namespace

void ParamArchive::add(std::string name, Tensor t) {
  if (find(name)) fail("parameter error: duplicate checkpoint entry '" + name + "'");
  entries.emplace_back(std::move(name), std::move(t));
}

const Tensor* ParamArchive::find(const std::string& name) const {
  for (const auto& [n, t] : entries)
    if (n == name) return &t;
  return nullptr;
}

void write_params(const ParamArchive& a, const std::string& path) {
  std::string out = "A2AP";
  put_u32(out, 1);
  put_u64(out, a.config_hash);
  put_u32(out, uint32_t(a.entries.size()));
  for (const auto& [name, t] : a.entries) {
    put_u32(out, uint32_t(name.size()));
    out += name;
    put_u32(out, uint32_t(t.shape.size()));
    for (int d : t.shape) put_u32(out, uint32_t(d));
    for (double d : t.v) {
      float f = float(d);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  write_text_file(path, out);
}

ParamArchive read_params(const std::string& path) {
  std::string raw = read_text_file(path);
  if (raw.size() < 20 || raw.compare(0, 4, "A2AP") != 0)
    fail("format error: bad checkpoint magic: " + path);
  Reader r{reinterpret_cast<const unsigned char*>(raw.data()), raw.size(), 4, path};
  uint32_t version = r.u32();
  if (version != 1)
    fail("format error: unsupported checkpoint version " + std::to_string(version));
  ParamArchive a;
  a.config_hash = r.u64();
  uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; i++) {
    std::string name = r.str(r.u32());
    uint32_t rank = r.u32();
    if (rank > 4) fail("format error: checkpoint rank out of range: " + path);
    std::vector<int> shape;
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; d++) {
      shape.push_back(int(r.u32()));
      numel *= shape.back();
    }
    if (numel < 0 || numel > (int64_t(1) << 30))
      fail("format error: checkpoint tensor too large: " + path);
    Tensor t(shape);
    for (int64_t j = 0; j < numel; j++) {
      uint32_t bits = r.u32();
      float f;
      std::memcpy(&f, &bits, 4);
      t.v[size_t(j)] = double(f);
    }
    a.add(std::move(name), std::move(t));
  }
  if (r.off != raw.size()) fail("format error: trailing bytes in checkpoint: " + path);
  return a;
}

ParamArchive snapshot(const std::vector<net::Param*>& params, uint64_t config_hash) {
  ParamArchive a;
  a.config_hash = config_hash;
  for (net::Param* p : params) a.add(p->name, p->value);
  return a;
}

void load_into(const ParamArchive& a, const std::vector<net::Param*>& params) {
  if (a.entries.size() != params.size())
    fail("format error: checkpoint has " + std::to_string(a.entries.size()) +
         " parameters, model expects " + std::to_string(params.size()));
  for (net::Param* p : params) {
    const Tensor* t = a.find(p->name);
    if (!t) fail("format error: checkpoint missing parameter '" + p->name + "'");
    if (t->shape != p->value.shape)
      fail("shape error: checkpoint parameter '" + p->name + "' has the wrong shape");
    p->value = *t;
  }
}

}  // namespace a2a
