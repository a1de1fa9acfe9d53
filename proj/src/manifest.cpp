#include "pabs/manifest.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "pabs/error.hpp"

#ifndef PABS_VERSION
#define PABS_VERSION "0.0.0"
#endif

namespace pabs {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return sha256_hex(os.str());
}

std::string_view tool_version() { return PABS_VERSION; }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs_json = nlohmann::json::array();
  for (const auto& [role, path] : inputs)
    inputs_json.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  nlohmann::json timings_json = nlohmann::json::object();
  for (const auto& [phase, secs] : timings) timings_json[phase] = secs;
  return {{"command", command},
          {"version", tool_version()},
          {"inputs", inputs_json},
          {"seeds", seeds},
          {"timings_s", timings_json}};
}

void RunManifest::write_sidecar(const std::filesystem::path& output) const {
  const auto path = output.string() + ".manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace pabs
