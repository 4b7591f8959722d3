#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "botsim/packet.hpp"
#include "botsim/time.hpp"

namespace botsim {

enum class TraceEvent : std::uint8_t { Send, Deliver, Drop };

const char* trace_event_name(TraceEvent e);

/// One line of the run trace. Records are append-only and strictly ordered
/// by (t, emission order).
struct TraceRecord {
    SimTime t = 0;
    Address src;
    std::uint16_t src_port = 0;
    Address dst;
    std::uint16_t dst_port = 0;
    Transport transport = Transport::Tcp;
    std::uint8_t tcp_flags = 0;
    std::uint32_t size_bytes = 0;
    PacketTag tag = PacketTag::Scan;
    TraceEvent event = TraceEvent::Send;
    std::uint64_t session_id = 0;
};

std::string trace_jsonl_line(const TraceRecord& r);
TraceRecord trace_parse_jsonl_line(const std::string& line);
std::string trace_csv_header();
std::string trace_csv_line(const TraceRecord& r);
TraceRecord trace_parse_csv_line(const std::string& line);

/// Event-ordered trace sink. Keeps records in memory for analysis and can
/// stream them to a JSONL file as they are emitted; the file is flushed on
/// completion and on abort.
class TraceLog {
public:
    TraceLog() = default;
    ~TraceLog();
    TraceLog(const TraceLog&) = delete;
    TraceLog& operator=(const TraceLog&) = delete;

    void open_file(const std::string& path);
    void add(const TraceRecord& r);
    void flush();
    void close();

    const std::vector<TraceRecord>& records() const { return records_; }

private:
    std::vector<TraceRecord> records_;
    std::FILE* file_ = nullptr;
};

std::vector<TraceRecord> load_trace_jsonl(const std::string& path);

} // namespace botsim
