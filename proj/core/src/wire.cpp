#include "hypertune/wire.hpp"

#include <bit>
#include <cstring>

#include "hypertune/errors.hpp"

namespace hypertune {
namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    if (s.size() > 0xffff) fail(Errc::ProtocolError, "string too long for wire");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const std::uint8_t* p = take(2);
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
  }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
  }
  std::uint64_t u64() {
    std::uint64_t hi = u32();
    return (hi << 32) | u32();
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint16_t n = u16();
    const std::uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  void expect_end() const {
    if (pos_ != size_) fail(Errc::ProtocolError, "trailing bytes in frame payload");
  }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > size_) fail(Errc::ProtocolError, "truncated frame payload");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

MsgType message_type(const Message& msg) {
  return std::visit(
      [](const auto& m) -> MsgType {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) return MsgType::Hello;
        if constexpr (std::is_same_v<T, BenchRequestMsg>) return MsgType::BenchRequest;
        if constexpr (std::is_same_v<T, BenchResultMsg>) return MsgType::BenchResult;
        if constexpr (std::is_same_v<T, PlanMsg>) return MsgType::Plan;
        if constexpr (std::is_same_v<T, StepBeginMsg>) return MsgType::StepBegin;
        if constexpr (std::is_same_v<T, StepReportMsg>) return MsgType::StepReport;
        if constexpr (std::is_same_v<T, RetuneNoticeMsg>) return MsgType::RetuneNotice;
        if constexpr (std::is_same_v<T, EpochEndMsg>) return MsgType::EpochEnd;
        if constexpr (std::is_same_v<T, ShutdownMsg>) return MsgType::Shutdown;
      },
      msg);
}

std::vector<std::uint8_t> encode_frame(const Message& msg) {
  ByteWriter payload;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          payload.u16(m.version);
          payload.str(m.node_id);
          payload.u32(m.core_count);
          payload.str(m.node_class);
        } else if constexpr (std::is_same_v<T, BenchRequestMsg>) {
          payload.u32(static_cast<std::uint32_t>(m.batch_sizes.size()));
          for (std::uint32_t b : m.batch_sizes) payload.u32(b);
          payload.u32(m.steps_per_probe);
        } else if constexpr (std::is_same_v<T, BenchResultMsg>) {
          payload.str(m.node_id);
          payload.u32(static_cast<std::uint32_t>(m.points.size()));
          for (const SpeedPoint& p : m.points) {
            payload.u32(static_cast<std::uint32_t>(p.batch_size));
            payload.f64(p.throughput);
          }
          payload.f64(m.normal_cpu);
        } else if constexpr (std::is_same_v<T, PlanMsg>) {
          payload.u32(m.generation);
          payload.u32(static_cast<std::uint32_t>(m.entries.size()));
          for (const PlanEntry& e : m.entries) {
            payload.str(e.node_id);
            payload.u32(e.batch_size);
            payload.u64(e.share_offset);
            payload.u64(e.share_length);
          }
          payload.u64(m.steps_per_epoch);
        } else if constexpr (std::is_same_v<T, StepBeginMsg>) {
          payload.u32(m.generation);
          payload.u64(m.step);
        } else if constexpr (std::is_same_v<T, StepReportMsg>) {
          payload.str(m.report.node_id);
          payload.u32(static_cast<std::uint32_t>(m.report.generation));
          payload.u64(static_cast<std::uint64_t>(m.report.step_index));
          payload.f64(m.report.measured_throughput);
          payload.f64(m.report.cpu_utilization);
          payload.f64(m.report.wall_time);
        } else if constexpr (std::is_same_v<T, RetuneNoticeMsg>) {
          payload.u32(m.generation);
        } else if constexpr (std::is_same_v<T, EpochEndMsg>) {
          payload.u32(m.epoch);
        } else if constexpr (std::is_same_v<T, ShutdownMsg>) {
          // no payload
        }
      },
      msg);

  std::vector<std::uint8_t> body = payload.take();
  ByteWriter frame;
  frame.u32(static_cast<std::uint32_t>(body.size()));
  frame.u8(static_cast<std::uint8_t>(message_type(msg)));
  std::vector<std::uint8_t> out = frame.take();
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Message decode_payload(MsgType type, const std::uint8_t* data, std::size_t size) {
  ByteReader r(data, size);
  Message msg;
  switch (type) {
    case MsgType::Hello: {
      HelloMsg m;
      m.version = r.u16();
      m.node_id = r.str();
      m.core_count = r.u32();
      m.node_class = r.str();
      msg = std::move(m);
      break;
    }
    case MsgType::BenchRequest: {
      BenchRequestMsg m;
      const std::uint32_t n = r.u32();
      m.batch_sizes.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) m.batch_sizes.push_back(r.u32());
      m.steps_per_probe = r.u32();
      msg = std::move(m);
      break;
    }
    case MsgType::BenchResult: {
      BenchResultMsg m;
      m.node_id = r.str();
      const std::uint32_t n = r.u32();
      m.points.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        SpeedPoint p;
        p.batch_size = static_cast<int>(r.u32());
        p.throughput = r.f64();
        m.points.push_back(p);
      }
      m.normal_cpu = r.f64();
      msg = std::move(m);
      break;
    }
    case MsgType::Plan: {
      PlanMsg m;
      m.generation = r.u32();
      const std::uint32_t n = r.u32();
      m.entries.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        PlanEntry e;
        e.node_id = r.str();
        e.batch_size = r.u32();
        e.share_offset = r.u64();
        e.share_length = r.u64();
        m.entries.push_back(std::move(e));
      }
      m.steps_per_epoch = r.u64();
      msg = std::move(m);
      break;
    }
    case MsgType::StepBegin: {
      StepBeginMsg m;
      m.generation = r.u32();
      m.step = r.u64();
      msg = m;
      break;
    }
    case MsgType::StepReport: {
      StepReportMsg m;
      m.report.node_id = r.str();
      m.report.generation = static_cast<int>(r.u32());
      m.report.step_index = static_cast<std::int64_t>(r.u64());
      m.report.measured_throughput = r.f64();
      m.report.cpu_utilization = r.f64();
      m.report.wall_time = r.f64();
      msg = std::move(m);
      break;
    }
    case MsgType::RetuneNotice: {
      RetuneNoticeMsg m;
      m.generation = r.u32();
      msg = m;
      break;
    }
    case MsgType::EpochEnd: {
      EpochEndMsg m;
      m.epoch = r.u32();
      msg = m;
      break;
    }
    case MsgType::Shutdown: {
      msg = ShutdownMsg{};
      break;
    }
    default:
      fail(Errc::ProtocolError,
           "unknown message type " + std::to_string(static_cast<int>(type)));
  }
  r.expect_end();
  return msg;
}

}  // namespace hypertune
