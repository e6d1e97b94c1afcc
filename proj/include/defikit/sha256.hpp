#pragma once

#include <openssl/evp.h>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string_view>

#include "defikit/hex.hpp"

namespace defikit {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view data) {
    if (EVP_DigestUpdate(ctx_, data.data(), data.size()) != 1)
      throw std::runtime_error("sha256: update failed");
  }

  Hash256 finish() {
    Hash256 out;
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, out.bytes.data(), &len) != 1 || len != 32)
      throw std::runtime_error("sha256: final failed");
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline Hash256 sha256(std::string_view data) {
  Sha256 h;
  h.update(data);
  return h.finish();
}

inline Hash256 sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256_file: cannot open " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  return h.finish();
}

}  // namespace defikit
