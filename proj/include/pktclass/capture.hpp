#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pktclass {

struct CapturedPacket {
    uint32_t ts_sec = 0;
    uint32_t ts_usec = 0;
    uint32_t src_ip = 0;  // host byte order
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    std::vector<uint8_t> tcp_payload;
    uint32_t link_type = 1;  // as recorded in the capture
};

struct PcapReadResult {
    std::vector<CapturedPacket> packets;
    uint64_t skipped_non_tcp = 0;  // non-IPv4-TCP records (UDP, ARP, fragments, ...)
    uint64_t skipped_ipv6 = 0;
};

// Classic pcap only (magic 0xA1B2C3D4, either endianness); Ethernet or
// raw-IP link types. Payload bytes are taken after the TCP data offset.
PcapReadResult read_pcap(const std::filesystem::path& path);

// Emits classic pcap with microsecond timestamps and synthesized Ethernet +
// IPv4 + TCP headers (valid checksums). read_pcap(write_pcap(p)) preserves
// payloads, ports and order.
void write_pcap(const std::vector<CapturedPacket>& packets, const std::filesystem::path& path);

constexpr size_t kMaxPcapPayload = 65495;  // 65535 IPv4 total minus 40 header bytes

// TLS record header test: content type 20-23, version 3.1-3.4, sane length.
bool detect_tls(std::span<const uint8_t> payload);

enum class TriageVerdict { Cleartext, Tls, Opaque };

std::string to_string(TriageVerdict v);

struct TriageResult {
    TriageVerdict verdict = TriageVerdict::Opaque;
    double chi_square = 0.0;
    std::string note;
};

// Chi-square cleartext test against the df=255 upper quantile at the given
// significance (default 0.001, critical value ~330.5). Payloads shorter
// than 256 bytes come back opaque with a note.
TriageResult cleartext_filter(std::span<const uint8_t> payload, double significance = 0.001);

// Full triage: TLS header check first, then the cleartext filter.
TriageResult triage(std::span<const uint8_t> payload, double significance = 0.001);

// Triage report CSV: packet index, verdict, chi-square, payload length.
void write_triage_csv(const std::vector<CapturedPacket>& packets,
                      const std::vector<TriageResult>& results,
                      const std::filesystem::path& path);

}  // namespace pktclass
