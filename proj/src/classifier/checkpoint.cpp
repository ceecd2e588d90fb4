#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "taptype/classifier.hpp"

namespace taptype::classifier {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
double get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

void put_tensor(std::ostream& out, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_f32(out, m(i));
}

void get_tensor(std::istream& in, Matrix& m) {
  const auto rows = get_u32(in), cols = get_u32(in);
  if (rows != m.rows() || cols != m.cols())
    throw ParseError("checkpoint tensor is " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = get_f32(in);
}

}  // namespace

void write_checkpoint(const Model& model, std::ostream& out) {
  Model copy = model;
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  const std::string cfg = to_json(copy.net.config());
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put_u32(out, static_cast<std::uint32_t>(copy.net.in_channels()));
  put_u32(out, static_cast<std::uint32_t>(copy.net.in_len()));
  for (std::size_t ch = 0; ch < signal::kChannels; ++ch) {
    put_f32(out, copy.stats.mean[ch]);
    put_f32(out, copy.stats.std[ch]);
  }
  for (Param* p : copy.net.params()) put_tensor(out, p->value);
  for (Matrix* b : copy.net.buffers()) put_tensor(out, *b);
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

Model read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("not a classifier checkpoint");
  const auto version = get_u32(in);
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get_u32(in);
  std::string cfg(len, '\0');
  if (!in.read(cfg.data(), len)) throw ParseError("checkpoint truncated");
  const ClassifierConfig config = config_from_json(cfg);
  const auto in_ch = get_u32(in), in_len = get_u32(in);
  Model m{Network(config, in_ch, in_len, 0), {}};
  for (std::size_t ch = 0; ch < signal::kChannels; ++ch) {
    m.stats.mean[ch] = get_f32(in);
    m.stats.std[ch] = get_f32(in);
  }
  for (Param* p : m.net.params()) get_tensor(in, p->value);
  for (Matrix* b : m.net.buffers()) get_tensor(in, *b);
  return m;
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_checkpoint(model, out);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace taptype::classifier
