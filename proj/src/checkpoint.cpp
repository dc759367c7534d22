#include "drtune/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace drtune {
namespace {

constexpr char kMagic[4] = {'D', 'R', 'T', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  // Build byte-by-byte so the file is little-endian on any host.
  unsigned char buf[sizeof(T)];
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace

void save_blocks(const std::string& path,
                 const std::vector<ParamBlock>& blocks) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kMagic, 4);
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(blocks.size()));
  for (const ParamBlock& b : blocks) {
    write_le<std::uint16_t>(os, static_cast<std::uint16_t>(b.name.size()));
    os.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    os.put(static_cast<char>(b.shape.size()));
    for (int d : b.shape) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (Eigen::Index i = 0; i < b.value.size(); ++i)
      write_le<double>(os, b.value[i]);
  }
  if (!os) throw IoError("write failed: " + path);
}

std::vector<ParamBlock> load_blocks(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad checkpoint magic: " + path);
  const auto version = read_le<std::uint32_t>(is);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = read_le<std::uint32_t>(is);
  std::vector<ParamBlock> blocks;
  blocks.reserve(count);
  for (std::uint32_t bi = 0; bi < count; ++bi) {
    const auto nlen = read_le<std::uint16_t>(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    const int rank = is.get();
    Shape shape(rank);
    Eigen::Index n = 1;
    for (int i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(read_le<std::uint32_t>(is));
      n *= shape[i];
    }
    Array value(n);
    for (Eigen::Index i = 0; i < n; ++i) value[i] = read_le<double>(is);
    if (!is) throw IoError("truncated checkpoint: " + path);
    blocks.push_back(ParamBlock{std::move(name), std::move(shape), std::move(value)});
  }
  return blocks;
}

namespace {

ParamBlock meta_block(std::vector<double> vals) {
  Array a(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) a[i] = vals[i];
  return ParamBlock{"__meta__", {static_cast<int>(vals.size())}, std::move(a)};
}

const ParamBlock& find_block(const std::vector<ParamBlock>& blocks,
                             const std::string& name) {
  for (const ParamBlock& b : blocks)
    if (b.name == name) return b;
  throw IoError("checkpoint missing block: " + name);
}

}  // namespace

void save_denoiser(const std::string& path, const Denoiser& model) {
  std::vector<ParamBlock> blocks;
  blocks.push_back(meta_block({static_cast<double>(model.height),
                               static_cast<double>(model.width),
                               static_cast<double>(model.temb_dim),
                               static_cast<double>(model.hidden)}));
  for (const ParamBlock& p : model.mlp.params) blocks.push_back(p);
  save_blocks(path, blocks);
}

Denoiser load_denoiser(const std::string& path) {
  const auto blocks = load_blocks(path);
  const ParamBlock& meta = find_block(blocks, "__meta__");
  if (meta.value.size() != 4) throw IoError("bad denoiser meta block");
  Denoiser d;
  d.height = static_cast<int>(meta.value[0]);
  d.width = static_cast<int>(meta.value[1]);
  d.temb_dim = static_cast<int>(meta.value[2]);
  d.hidden = static_cast<int>(meta.value[3]);
  const int npix = d.npix();
  d.mlp.dims = {npix + d.temb_dim, d.hidden, d.hidden, d.hidden, npix};
  for (int l = 0; l < 4; ++l) {
    d.mlp.params.push_back(find_block(blocks, "w" + std::to_string(l)));
    d.mlp.params.push_back(find_block(blocks, "b" + std::to_string(l)));
  }
  return d;
}

void save_adapter(const std::string& path, const LoRAAdapter& adapter) {
  std::vector<ParamBlock> blocks;
  blocks.push_back(meta_block({static_cast<double>(adapter.rank), adapter.scale,
                               static_cast<double>(adapter.a.size())}));
  for (std::size_t l = 0; l < adapter.a.size(); ++l) {
    blocks.push_back(adapter.a[l]);
    blocks.push_back(adapter.b[l]);
  }
  save_blocks(path, blocks);
}

LoRAAdapter load_adapter(const std::string& path) {
  const auto blocks = load_blocks(path);
  const ParamBlock& meta = find_block(blocks, "__meta__");
  if (meta.value.size() != 3) throw IoError("bad adapter meta block");
  LoRAAdapter ad;
  ad.rank = static_cast<int>(meta.value[0]);
  ad.scale = meta.value[1];
  const int layers = static_cast<int>(meta.value[2]);
  for (int l = 0; l < layers; ++l) {
    ad.a.push_back(find_block(blocks, "lora_a" + std::to_string(l)));
    ad.b.push_back(find_block(blocks, "lora_b" + std::to_string(l)));
  }
  return ad;
}

}  // namespace drtune
