#include "botsim/trace.hpp"

#include <cinttypes>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "botsim/errors.hpp"

namespace botsim {

const char* trace_event_name(TraceEvent e) {
    switch (e) {
    case TraceEvent::Send: return "send";
    case TraceEvent::Deliver: return "deliver";
    case TraceEvent::Drop: return "drop";
    }
    return "?";
}

namespace {

std::optional<TraceEvent> trace_event_from_name(const std::string& s) {
    if (s == "send") return TraceEvent::Send;
    if (s == "deliver") return TraceEvent::Deliver;
    if (s == "drop") return TraceEvent::Drop;
    return {};
}

} // namespace

std::string trace_jsonl_line(const TraceRecord& r) {
    // hand-formatted: field order and byte layout must be stable across
    // runs and fast enough for million-record traces
    char buf[256];
    const int n = std::snprintf(
        buf, sizeof buf,
        "{\"t\":%" PRId64 ",\"src\":\"%s\",\"sport\":%u,\"dst\":\"%s\",\"dport\":%u,"
        "\"proto\":\"%s\",\"flags\":\"%s\",\"size\":%u,\"tag\":\"%s\",\"event\":\"%s\","
        "\"sid\":%" PRIu64 "}",
        r.t, r.src.str().c_str(), r.src_port, r.dst.str().c_str(), r.dst_port,
        transport_name(r.transport), flags_str(r.tcp_flags).c_str(), r.size_bytes,
        tag_name(r.tag), trace_event_name(r.event), r.session_id);
    if (n < 0 || n >= static_cast<int>(sizeof buf)) throw IoError("trace record too long");
    return std::string(buf, static_cast<std::size_t>(n));
}

TraceRecord trace_parse_jsonl_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad trace line: ") + e.what());
    }
    TraceRecord r;
    try {
        r.t = j.at("t").get<std::int64_t>();
        const auto src = Address::parse(j.at("src").get<std::string>());
        const auto dst = Address::parse(j.at("dst").get<std::string>());
        const auto proto = transport_from_name(j.at("proto").get<std::string>());
        const auto flags = flags_parse(j.at("flags").get<std::string>());
        const auto tag = tag_from_name(j.at("tag").get<std::string>());
        const auto event = trace_event_from_name(j.at("event").get<std::string>());
        if (!src || !dst || !proto || !flags || !tag || !event)
            throw ParseError("bad trace field value: " + line);
        r.src = *src;
        r.dst = *dst;
        r.transport = *proto;
        r.tcp_flags = *flags;
        r.tag = *tag;
        r.event = *event;
        r.src_port = j.at("sport").get<std::uint16_t>();
        r.dst_port = j.at("dport").get<std::uint16_t>();
        r.size_bytes = j.at("size").get<std::uint32_t>();
        r.session_id = j.at("sid").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad trace line: ") + e.what());
    }
    return r;
}

std::string trace_csv_header() {
    return "t,src,sport,dst,dport,proto,flags,size,tag,event,sid";
}

std::string trace_csv_line(const TraceRecord& r) {
    char buf[256];
    const int n = std::snprintf(buf, sizeof buf,
                                "%" PRId64 ",%s,%u,%s,%u,%s,%s,%u,%s,%s,%" PRIu64, r.t,
                                r.src.str().c_str(), r.src_port, r.dst.str().c_str(), r.dst_port,
                                transport_name(r.transport), flags_str(r.tcp_flags).c_str(),
                                r.size_bytes, tag_name(r.tag), trace_event_name(r.event),
                                r.session_id);
    if (n < 0 || n >= static_cast<int>(sizeof buf)) throw IoError("trace record too long");
    return std::string(buf, static_cast<std::size_t>(n));
}

TraceRecord trace_parse_csv_line(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        auto comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        cols.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (cols.size() != 11) throw ParseError("bad trace csv line: " + line);
    TraceRecord r;
    try {
        r.t = std::stoll(cols[0]);
        r.src_port = static_cast<std::uint16_t>(std::stoul(cols[2]));
        r.dst_port = static_cast<std::uint16_t>(std::stoul(cols[4]));
        r.size_bytes = static_cast<std::uint32_t>(std::stoul(cols[7]));
        r.session_id = std::stoull(cols[10]);
    } catch (...) {
        throw ParseError("bad trace csv number: " + line);
    }
    const auto src = Address::parse(cols[1]);
    const auto dst = Address::parse(cols[3]);
    const auto proto = transport_from_name(cols[5]);
    const auto flags = flags_parse(cols[6]);
    const auto tag = tag_from_name(cols[8]);
    const auto event = trace_event_from_name(cols[9]);
    if (!src || !dst || !proto || !flags || !tag || !event)
        throw ParseError("bad trace csv field: " + line);
    r.src = *src;
    r.dst = *dst;
    r.transport = *proto;
    r.tcp_flags = *flags;
    r.tag = *tag;
    r.event = *event;
    return r;
}

TraceLog::~TraceLog() {
    close();
}

void TraceLog::open_file(const std::string& path) {
    close();
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) throw IoError("cannot open trace file for writing: " + path);
}

void TraceLog::add(const TraceRecord& r) {
    records_.push_back(r);
    if (file_) {
        const std::string line = trace_jsonl_line(r);
        std::fwrite(line.data(), 1, line.size(), file_);
        std::fputc('\n', file_);
    }
}

void TraceLog::flush() {
    if (file_) std::fflush(file_);
}

void TraceLog::close() {
    if (file_) {
        std::fclose(file_);
        file_ = nullptr;
    }
}

std::vector<TraceRecord> load_trace_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    std::vector<TraceRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(trace_parse_jsonl_line(line));
    }
    return out;
}

} // namespace botsim
