#include "civ/clengine/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "civ/clengine/serialize.hpp"
#include "civ/error.hpp"

namespace civ {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'I', 'V', 'C'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

struct TensorRef {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

const std::pair<const char*, MlpParams ModelPair::*> kModels[] = {
    {"full", &ModelPair::full},
    {"semi", &ModelPair::semi},
    {"momentum_full", &ModelPair::momentum_full},
    {"momentum_semi", &ModelPair::momentum_semi},
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  Json header;
  header["format"] = "civc";
  header["version"] = kCheckpointVersion;
  header["config"] = to_json(cp.config);
  header["final_metrics"] = cp.final_metrics ? to_json(*cp.final_metrics) : Json(nullptr);
  header["pretrained"] = cp.pair.pretrained;
  Json specs;
  Json tensors = Json::array();
  for (const auto& [name, member] : kModels) {
    const MlpParams& p = cp.pair.*member;
    specs[name] = to_json(p.spec);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const std::string base = std::string(name) + "." + std::to_string(l);
      tensors.push_back({{"name", base + ".weight"}, {"shape", Json::array({p.layers[l].weight.rows(), p.layers[l].weight.cols()})}});
      tensors.push_back({{"name", base + ".bias"}, {"shape", Json::array({p.layers[l].bias.size()})}});
    }
  }
  header["models"] = specs;
  header["sampling"] = {{"positive", to_json(cp.sampling.mapping)}, {"negatives", to_json(cp.sampling.negatives)}};
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& [name, member] : kModels) {
    for (const LayerParams& layer : (cp.pair.*member).layers) {
      for (double v : layer.weight.storage()) put<double>(out, v);
      for (double v : layer.bias) put<double>(out, v);
    }
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a CIVC checkpoint");
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto length = take<std::uint64_t>(bytes, pos);
  if (pos + length > bytes.size()) throw FormatError("checkpoint header truncated");
  Json header;
  try {
    header = Json::parse(bytes.substr(pos, length));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  pos += length;

  Checkpoint cp;
  try {
    cp.config = train_config_from_json(header.at("config"));
    if (!header.at("final_metrics").is_null()) cp.final_metrics = epoch_metrics_from_json(header.at("final_metrics"));
    cp.pair.pretrained = header.at("pretrained").get<bool>();
    cp.sampling.mapping = positive_mapping_from_json(header.at("sampling").at("positive"));
    cp.sampling.negatives = negative_collection_from_json(header.at("sampling").at("negatives"));
    std::size_t t = 0;
    const Json& tensors = header.at("tensors");
    for (const auto& [name, member] : kModels) {
      MlpParams p = MlpParams::zeros(mlp_spec_from_json(header.at("models").at(name)));
      for (std::size_t l = 0; l < p.layers.size(); ++l) {
        LayerParams& layer = p.layers[l];
        const Json& w = tensors.at(t++);
        const Json& b = tensors.at(t++);
        if (w.at("shape") != Json::array({layer.weight.rows(), layer.weight.cols()}) ||
            b.at("shape") != Json::array({layer.bias.size()})) {
          throw FormatError("tensor shape does not match the declared spec: " + w.at("name").get<std::string>());
        }
        for (double& v : layer.weight.data()) v = take<double>(bytes, pos);
        for (double& v : layer.bias) v = take<double>(bytes, pos);
      }
      cp.pair.*member = std::move(p);
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after checkpoint tensors");
  return cp;
}

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path + " for writing");
  const std::string bytes = serialize_checkpoint(cp);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

std::uint64_t CheckpointLog::save(Checkpoint cp, std::int64_t timestamp) {
  const std::uint64_t id = next_id_++;
  entries_.push_back({id, timestamp, std::move(cp)});
  return id;
}

const LogEntry& CheckpointLog::get(std::uint64_t id) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const LogEntry& e) { return e.id == id; });
  if (it == entries_.end()) throw NotFoundError("no log entry with id " + std::to_string(id));
  return *it;
}

void CheckpointLog::remove(std::uint64_t id) {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const LogEntry& e) { return e.id == id; });
  if (it == entries_.end()) throw NotFoundError("no log entry with id " + std::to_string(id));
  entries_.erase(it);
}

}  // namespace civ
