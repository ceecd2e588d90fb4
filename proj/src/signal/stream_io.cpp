#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "taptype/signal.hpp"

namespace taptype::signal {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'I', 'M'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("stream file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_stream(const ImuStream& stream, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, stream.sample_rate);
  out.put(static_cast<char>(kChannels));
  for (const Sample& x : stream.samples)
    for (double v : x) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw std::runtime_error("failed writing stream");
}

ImuStream read_stream(std::istream& in, Hand hand) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("not a TapType stream file (bad magic)");
  ImuStream s;
  s.hand = hand;
  s.sample_rate = get_u32(in);
  if (s.sample_rate == 0) throw ParseError("stream sample rate is zero");
  const int channels = in.get();
  if (channels != static_cast<int>(kChannels))
    throw ParseError("stream has " + std::to_string(channels) + " channels, expected 6");
  while (in.peek() != std::char_traits<char>::eof()) {
    Sample x{};
    for (double& v : x) v = std::bit_cast<float>(get_u32(in));
    s.samples.push_back(x);
  }
  return s;
}

void save_stream(const ImuStream& stream, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_stream(stream, out);
}

ImuStream load_stream(const std::string& path, Hand hand) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open stream file " + path);
  return read_stream(in, hand);
}

void write_labels(const LabeledStream& labeled, std::ostream& out) {
  out << "t,class,hand\n";
  for (const auto& l : labeled.labels)
    out << l.t << ',' << to_string(l.finger) << ',' << to_string(l.hand) << '\n';
  for (const auto& o : labeled.ood)
    out << o.begin << ",ood," << to_string(labeled.stream.hand) << '\n';
}

}  // namespace taptype::signal
