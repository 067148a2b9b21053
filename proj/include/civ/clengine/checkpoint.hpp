#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "civ/clengine/config.hpp"
#include "civ/clengine/metrics.hpp"
#include "civ/clengine/model_pair.hpp"
#include "civ/clengine/trainer.hpp"

namespace civ {

struct Checkpoint {
  TrainConfig config;
  std::optional<EpochMetrics> final_metrics;
  ModelPair pair;
  SamplingState sampling;
};

// Container layout:
//   "CIVC" | u32 version | u64 header length | JSON header | f64 tensors
// All integers and floats little-endian. Tensor order is declared in the header.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& cp);
Checkpoint deserialize_checkpoint(const std::string& bytes);  // FormatError on malformed input

void write_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& path);

struct LogEntry {
  std::uint64_t id = 0;
  std::int64_t timestamp = 0;  // unix seconds; not part of the serialized container
  Checkpoint checkpoint;
};

// Saved training runs. Ids start at 1 and never repeat, even after deletion.
class CheckpointLog {
 public:
  std::uint64_t save(Checkpoint cp, std::int64_t timestamp);
  const LogEntry& get(std::uint64_t id) const;  // NotFoundError
  const Checkpoint& switch_to(std::uint64_t id) const { return get(id).checkpoint; }
  void remove(std::uint64_t id);
  const std::vector<LogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<LogEntry> entries_;
  std::uint64_t next_id_ = 1;
};

}  // namespace civ
