#include "gner/serialize.hpp"

#include <fstream>

namespace gner::io {

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  Fnv1a hash;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    hash.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return hash.digest();
}

}  // namespace gner::io
