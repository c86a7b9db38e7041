#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hypertune/monitor.hpp"
#include "hypertune/speed_model.hpp"

namespace hypertune {

// Framed TCP protocol between coordinator and workers. On the wire every
// frame is:
//   u32 length (big-endian, payload bytes)
//   u8  msg_type
//   payload
// Integers are big-endian; reals are IEEE-754 binary64 sent as u64 bits;
// strings are u16 length + UTF-8 bytes.
inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrameLength = 1u << 24;

enum class MsgType : std::uint8_t {
  Hello = 1,
  BenchRequest = 2,
  BenchResult = 3,
  Plan = 4,
  StepBegin = 5,
  StepReport = 6,
  RetuneNotice = 7,
  EpochEnd = 8,
  Shutdown = 9,
};

struct HelloMsg {
  std::uint16_t version = kProtocolVersion;
  std::string node_id;
  std::uint32_t core_count = 1;
  std::string node_class;

  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct BenchRequestMsg {
  std::vector<std::uint32_t> batch_sizes;
  std::uint32_t steps_per_probe = 3;

  friend bool operator==(const BenchRequestMsg&, const BenchRequestMsg&) = default;
};

struct BenchResultMsg {
  std::string node_id;
  std::vector<SpeedPoint> points;
  double normal_cpu = 0.0;  // cores used by the kernel when uncontended

  friend bool operator==(const BenchResultMsg&, const BenchResultMsg&) = default;
};

struct PlanEntry {
  std::string node_id;
  std::uint32_t batch_size = 0;
  std::uint64_t share_offset = 0;
  std::uint64_t share_length = 0;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

struct PlanMsg {
  std::uint32_t generation = 0;
  std::vector<PlanEntry> entries;
  std::uint64_t steps_per_epoch = 0;

  friend bool operator==(const PlanMsg&, const PlanMsg&) = default;
};

struct StepBeginMsg {
  std::uint32_t generation = 0;
  std::uint64_t step = 0;

  friend bool operator==(const StepBeginMsg&, const StepBeginMsg&) = default;
};

struct StepReportMsg {
  StepReport report;

  friend bool operator==(const StepReportMsg&, const StepReportMsg&) = default;
};

struct RetuneNoticeMsg {
  std::uint32_t generation = 0;

  friend bool operator==(const RetuneNoticeMsg&, const RetuneNoticeMsg&) = default;
};

struct EpochEndMsg {
  std::uint32_t epoch = 0;

  friend bool operator==(const EpochEndMsg&, const EpochEndMsg&) = default;
};

struct ShutdownMsg {
  friend bool operator==(const ShutdownMsg&, const ShutdownMsg&) = default;
};

using Message = std::variant<HelloMsg, BenchRequestMsg, BenchResultMsg, PlanMsg, StepBeginMsg,
                             StepReportMsg, RetuneNoticeMsg, EpochEndMsg, ShutdownMsg>;

MsgType message_type(const Message& msg);

// Full frame bytes including the length prefix and type byte.
std::vector<std::uint8_t> encode_frame(const Message& msg);
// Inverse of encode_frame over the payload alone.
Message decode_payload(MsgType type, const std::uint8_t* data, std::size_t size);

}  // namespace hypertune
