#include "trl/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "trl/error.hpp"

namespace trl::nn {

namespace {

template <class U>
void put_le(std::ostream& out, U v) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw Error("truncated checkpoint");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

void put_doubles(std::ostream& out, std::span<const double> values) {
  for (double d : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
}

void get_doubles(std::istream& in, std::span<double> values) {
  for (double& d : values) d = std::bit_cast<double>(get_le<std::uint64_t>(in));
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore& store, bool with_moments) {
  out.write(kCheckpointMagic, 8);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t k = 0; k < store.size(); ++k) {
    const auto& p = store.at(k);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) put_le<std::uint64_t>(out, d);
    put_doubles(out, p.value.data());
  }
  put_le<std::uint8_t>(out, with_moments ? 1 : 0);
  if (with_moments) {
    put_le<std::uint64_t>(out, store.step());
    for (std::size_t k = 0; k < store.size(); ++k) {
      put_doubles(out, store.at(k).m.data());
      put_doubles(out, store.at(k).v.data());
    }
  }
  if (!out) throw Error("failed writing checkpoint");
}

ParameterStore read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw Error("not a checkpoint");
  ParameterStore store;
  const auto count = get_le<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get_le<std::uint32_t>(in);
    if (name_len > (1u << 20)) throw Error("corrupt checkpoint: name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw Error("truncated checkpoint");
    const auto rank = get_le<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw Error("corrupt checkpoint: rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(in));
    auto& p = store.add(name, shape);
    get_doubles(in, p.value.data());
  }
  const auto flag = get_le<std::uint8_t>(in);
  if (flag > 1) throw Error("corrupt checkpoint: moment flag");
  if (flag == 1) {
    store.set_step(get_le<std::uint64_t>(in));
    for (std::size_t k = 0; k < store.size(); ++k) {
      get_doubles(in, store.at(k).m.data());
      get_doubles(in, store.at(k).v.data());
    }
  }
  return store;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path, bool with_moments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(out, store, with_moments);
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void restore_into(const ParameterStore& from, ParameterStore& to) {
  to.assign_values(from);
  for (std::size_t k = 0; k < to.size(); ++k) {
    to.at(k).m = from.at(k).m;
    to.at(k).v = from.at(k).v;
  }
  to.set_step(from.step());
}

}  // namespace trl::nn
