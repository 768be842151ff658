#include "bed/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "bed/errors.hpp"

namespace bed {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("checkpoint truncated while reading " + what);
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

std::string get_bytes(std::istream& in, uint32_t n, const std::string& what) {
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) {
    throw DataError("checkpoint truncated while reading " + what);
  }
  return s;
}

static_assert(sizeof(float) == 4);

}  // namespace

void write_checkpoint(const std::string& path, const RawCheckpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kCheckpointMagic, 8);

  const std::string config = ckpt.config.dump();
  put_u32(out, static_cast<uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  const std::string vocab = ckpt.vocab.dump();
  put_u32(out, static_cast<uint32_t>(vocab.size()));
  out.write(vocab.data(), static_cast<std::streamsize>(vocab.size()));

  put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& t : ckpt.tensors) {
    put_u32(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, 2);
    put_u32(out, static_cast<uint32_t>(t.data.rows()));
    put_u32(out, static_cast<uint32_t>(t.data.cols()));
    // Row-major on disk.
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
        t.data;
    out.write(reinterpret_cast<const char*>(rm.data()),
              static_cast<std::streamsize>(sizeof(float) * rm.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

RawCheckpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError("bad checkpoint magic in " + path);
  }
  RawCheckpoint ckpt;
  uint32_t config_len = get_u32(in, "config length");
  std::string config = get_bytes(in, config_len, "config");
  uint32_t vocab_len = get_u32(in, "vocab length");
  std::string vocab = get_bytes(in, vocab_len, "vocab");
  try {
    ckpt.config = nlohmann::json::parse(config);
    ckpt.vocab = nlohmann::json::parse(vocab);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint header JSON: ") + e.what());
  }

  uint32_t n_tensors = get_u32(in, "tensor count");
  for (uint32_t k = 0; k < n_tensors; ++k) {
    uint32_t name_len = get_u32(in, "tensor name length");
    std::string name = get_bytes(in, name_len, "tensor name");
    uint32_t rank = get_u32(in, "rank of tensor " + name);
    if (rank != 2) {
      throw DataError("checkpoint: unsupported rank for tensor " + name);
    }
    uint32_t rows = get_u32(in, "dims of tensor " + name);
    uint32_t cols = get_u32(in, "dims of tensor " + name);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        rows, cols);
    if (!in.read(reinterpret_cast<char*>(rm.data()),
                 static_cast<std::streamsize>(sizeof(float) * rm.size()))) {
      throw DataError("checkpoint truncated while reading tensor " + name);
    }
    ckpt.tensors.push_back({std::move(name), MatF(rm)});
  }
  return ckpt;
}

}  // namespace bed
