#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "adablur/degnet.hpp"
#include "adablur/errors.hpp"

namespace adablur {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'A', 'B', 'L', 'C', 'K', 'P', 'T', '\n'};
constexpr const char* kMagicName = "adablur-checkpoint";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64_le(std::string& out, double d) { put_u64_le(out, std::bit_cast<std::uint64_t>(d)); }

double get_f64_le(const unsigned char* p) { return std::bit_cast<double>(get_u64_le(p)); }

json config_to_json(const NetConfig& c) {
  return json{{"channels", c.channels},
              {"num_resblocks", c.num_resblocks},
              {"scale", c.scale},
              {"bank",
               {{"angles_rad", c.bank.angles},
                {"aspect", c.bank.aspect},
                {"factors", c.bank.factors},
                {"roi_half_width", c.bank.roi_half_width},
                {"kernel_size", c.bank.kernel_size}}}};
}

NetConfig config_from_json(const json& j) {
  NetConfig c;
  c.channels = j.at("channels").get<int>();
  c.num_resblocks = j.at("num_resblocks").get<int>();
  c.scale = j.at("scale").get<int>();
  const json& b = j.at("bank");
  c.bank.angles = b.at("angles_rad").get<std::vector<double>>();
  c.bank.aspect = b.at("aspect").get<double>();
  c.bank.factors = b.at("factors").get<std::vector<double>>();
  c.bank.roi_half_width = b.at("roi_half_width").get<double>();
  c.bank.kernel_size = b.at("kernel_size").get<int>();
  return c;
}

}  // namespace

void save_model(const DegradationModel& model, const fs::path& path) {
  json manifest = json::array();
  std::string payload;
  for (const auto& [name, t] : model.named_parameters()) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", payload.size()}, {"count", t.numel()}});
    for (double v : t.data()) put_f64_le(payload, v);
  }
  json header{{"magic", kMagicName},
              {"version", kCheckpointVersion},
              {"config", config_to_json(model.config())},
              {"tensors", manifest},
              {"payload_bytes", payload.size()}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_u64_le(out, text.size());
  out += text;
  out += payload;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

DegradationModel load_model(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string name = path.string();

  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw VersionError(name + ": not an adablur checkpoint (bad magic bytes)");
  if (bytes.size() < 16) throw FormatError(name + ": truncated checkpoint header");
  const std::uint64_t header_len = get_u64_le(raw + 8);
  if (header_len > bytes.size() - 16) throw FormatError(name + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw FormatError(name + ": malformed checkpoint header: " + e.what());
  }

  NetConfig config;
  json manifest;
  std::uint64_t payload_bytes = 0;
  try {
    if (header.at("magic").get<std::string>() != kMagicName) throw VersionError(name + ": checkpoint magic mismatch");
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw VersionError(name + ": checkpoint version " + std::to_string(version) + ", this build reads version " +
                         std::to_string(kCheckpointVersion));
    config = config_from_json(header.at("config"));
    manifest = header.at("tensors");
    payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(name + ": incomplete checkpoint header: " + e.what());
  }
  const std::size_t payload_start = 16 + header_len;
  if (bytes.size() - payload_start < payload_bytes) throw FormatError(name + ": truncated checkpoint payload");

  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(name + ": invalid model config: " + e.what());
  }
  DegradationModel model = DegradationModel::create(config, 0);
  auto params = model.named_parameters();
  if (manifest.size() != params.size()) throw FormatError(name + ": tensor count does not match the config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [pname, tensor] = params[i];
    const json& entry = manifest[i];
    const auto shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    if (entry.at("name").get<std::string>() != pname || shape != tensor.shape())
      throw FormatError(name + ": tensor '" + pname + "' missing or misshapen");
    if (offset % 8 != 0 || offset + 8 * tensor.numel() > payload_bytes)
      throw FormatError(name + ": tensor '" + pname + "' lies outside the payload");
    auto data = tensor.data();
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = get_f64_le(raw + payload_start + offset + 8 * k);
  }
  return model;
}

}  // namespace adablur
