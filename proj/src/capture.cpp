#include "pktclass/capture.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pktclass/features.hpp"

namespace pktclass {

namespace {

constexpr uint32_t kPcapMagic = 0xa1b2c3d4u;
constexpr uint32_t kPcapMagicSwapped = 0xd4c3b2a1u;
constexpr uint32_t kLinkEthernet = 1;
constexpr uint32_t kLinkRawIp = 101;
constexpr uint16_t kEthertypeIpv4 = 0x0800;
constexpr uint16_t kEthertypeIpv6 = 0x86dd;

uint32_t bswap32(uint32_t v) { return __builtin_bswap32(v); }

struct Cursor {
    const uint8_t* p;
    size_t remaining;

    bool take(void* out, size_t n) {
        if (remaining < n) return false;
        std::memcpy(out, p, n);
        p += n;
        remaining -= n;
        return true;
    }
};

uint16_t read_be16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] << 8 | p[1]);
}

uint32_t read_be32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
           static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}

void put_be16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_le32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

// RFC 1071 ones-complement sum.
uint16_t inet_checksum(std::span<const uint8_t> data, uint32_t initial = 0) {
    uint32_t sum = initial;
    size_t i = 0;
    for (; i + 1 < data.size(); i += 2) sum += static_cast<uint32_t>(read_be16(&data[i]));
    if (i < data.size()) sum += static_cast<uint32_t>(data[i]) << 8;
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<uint16_t>(~sum & 0xffff);
}

}  // namespace

PcapReadResult read_pcap(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pcap: cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());

    if (bytes.size() < 24) throw std::runtime_error("read_pcap: not a pcap (file too short)");
    uint32_t magic;
    std::memcpy(&magic, bytes.data(), 4);
    bool swap;
    if (magic == kPcapMagic)
        swap = false;
    else if (magic == kPcapMagicSwapped)
        swap = true;
    else
        throw std::runtime_error("read_pcap: not a pcap (bad magic)");

    auto u32_at = [&](size_t off) {
        uint32_t v;
        std::memcpy(&v, bytes.data() + off, 4);
        return swap ? bswap32(v) : v;
    };

    const uint32_t link_type = u32_at(20);
    if (link_type != kLinkEthernet && link_type != kLinkRawIp)
        throw std::runtime_error("read_pcap: unsupported link type " +
                                 std::to_string(link_type));

    PcapReadResult result;
    size_t offset = 24;
    size_t record_index = 0;
    while (offset < bytes.size()) {
        if (bytes.size() - offset < 16)
            throw std::runtime_error("read_pcap: truncated record header at record " +
                                     std::to_string(record_index));
        const uint32_t ts_sec = u32_at(offset);
        const uint32_t ts_usec = u32_at(offset + 4);
        const uint32_t incl_len = u32_at(offset + 8);
        offset += 16;
        if (bytes.size() - offset < incl_len)
            throw std::runtime_error("read_pcap: truncated record data at record " +
                                     std::to_string(record_index));

        Cursor cur{bytes.data() + offset, incl_len};
        offset += incl_len;
        ++record_index;

        // Link layer.
        uint16_t ethertype = kEthertypeIpv4;
        if (link_type == kLinkEthernet) {
            uint8_t eth[14];
            if (!cur.take(eth, sizeof(eth)))
                throw std::runtime_error("read_pcap: truncated ethernet header at record " +
                                         std::to_string(record_index - 1));
            ethertype = read_be16(eth + 12);
        }
        if (ethertype == kEthertypeIpv6) {
            ++result.skipped_ipv6;
            continue;
        }
        if (ethertype != kEthertypeIpv4) {
            ++result.skipped_non_tcp;
            continue;
        }

        // IPv4.
        uint8_t ip[20];
        if (!cur.take(ip, sizeof(ip)))
            throw std::runtime_error("read_pcap: truncated IPv4 header at record " +
                                     std::to_string(record_index - 1));
        const uint8_t version = ip[0] >> 4;
        const size_t ihl = static_cast<size_t>(ip[0] & 0x0f) * 4;
        if (version == 6) {
            ++result.skipped_ipv6;
            continue;
        }
        if (version != 4 || ihl < 20) {
            ++result.skipped_non_tcp;
            continue;
        }
        const uint16_t total_len = read_be16(ip + 2);
        const uint16_t frag = read_be16(ip + 6);
        const uint8_t proto = ip[9];
        if (ihl > 20) {
            uint8_t opts[40];
            if (!cur.take(opts, ihl - 20))
                throw std::runtime_error("read_pcap: truncated IPv4 options at record " +
                                         std::to_string(record_index - 1));
        }
        if (proto != 6 || (frag & 0x3fff) != 0) {  // not TCP, or a fragment
            ++result.skipped_non_tcp;
            continue;
        }

        // TCP.
        uint8_t tcp[20];
        if (!cur.take(tcp, sizeof(tcp)))
            throw std::runtime_error("read_pcap: truncated TCP header at record " +
                                     std::to_string(record_index - 1));
        const size_t data_offset = static_cast<size_t>(tcp[12] >> 4) * 4;
        if (data_offset < 20)
            throw std::runtime_error("read_pcap: bad TCP data offset at record " +
                                     std::to_string(record_index - 1));
        if (data_offset > 20) {
            uint8_t opts[40];
            if (!cur.take(opts, data_offset - 20))
                throw std::runtime_error("read_pcap: truncated TCP options at record " +
                                         std::to_string(record_index - 1));
        }
        if (total_len < ihl + data_offset)
            throw std::runtime_error("read_pcap: inconsistent IPv4 length at record " +
                                     std::to_string(record_index - 1));
        const size_t payload_len = total_len - ihl - data_offset;
        if (cur.remaining < payload_len)
            throw std::runtime_error("read_pcap: truncated TCP payload at record " +
                                     std::to_string(record_index - 1));

        CapturedPacket pkt;
        pkt.ts_sec = ts_sec;
        pkt.ts_usec = ts_usec;
        pkt.src_ip = read_be32(ip + 12);
        pkt.dst_ip = read_be32(ip + 16);
        pkt.src_port = read_be16(tcp + 0);
        pkt.dst_port = read_be16(tcp + 2);
        pkt.link_type = link_type;
        pkt.tcp_payload.assign(cur.p, cur.p + payload_len);
        result.packets.push_back(std::move(pkt));
    }
    return result;
}

void write_pcap(const std::vector<CapturedPacket>& packets, const std::filesystem::path& path) {
    std::vector<uint8_t> out;
    // Global header: magic, version 2.4, zone 0, sigfigs 0, snaplen, Ethernet.
    put_le32(out, kPcapMagic);
    out.push_back(2);
    out.push_back(0);
    out.push_back(4);
    out.push_back(0);
    put_le32(out, 0);
    put_le32(out, 0);
    put_le32(out, 65535);
    put_le32(out, kLinkEthernet);

    uint32_t seq = 1000;
    for (size_t i = 0; i < packets.size(); ++i) {
        const CapturedPacket& pkt = packets[i];
        if (pkt.tcp_payload.size() > kMaxPcapPayload)
            throw std::invalid_argument("write_pcap: payload of packet " + std::to_string(i) +
                                        " exceeds " + std::to_string(kMaxPcapPayload) +
                                        " bytes");

        const size_t frame_len = 14 + 20 + 20 + pkt.tcp_payload.size();
        put_le32(out, pkt.ts_sec);
        put_le32(out, pkt.ts_usec);
        put_le32(out, static_cast<uint32_t>(frame_len));
        put_le32(out, static_cast<uint32_t>(frame_len));

        // Ethernet: locally administered MACs, IPv4.
        static const uint8_t dst_mac[6] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x02};
        static const uint8_t src_mac[6] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
        out.insert(out.end(), dst_mac, dst_mac + 6);
        out.insert(out.end(), src_mac, src_mac + 6);
        put_be16(out, kEthertypeIpv4);

        // IPv4 header.
        std::vector<uint8_t> ip;
        ip.push_back(0x45);  // v4, ihl 5
        ip.push_back(0);
        put_be16(ip, static_cast<uint16_t>(40 + pkt.tcp_payload.size()));
        put_be16(ip, static_cast<uint16_t>(i & 0xffff));  // identification
        put_be16(ip, 0x4000);                             // DF
        ip.push_back(64);                                 // TTL
        ip.push_back(6);                                  // TCP
        put_be16(ip, 0);                                  // checksum placeholder
        put_be32(ip, pkt.src_ip);
        put_be32(ip, pkt.dst_ip);
        const uint16_t ip_csum = inet_checksum(ip);
        ip[10] = static_cast<uint8_t>(ip_csum >> 8);
        ip[11] = static_cast<uint8_t>(ip_csum);

        // TCP header (PSH|ACK data segment).
        std::vector<uint8_t> tcp;
        put_be16(tcp, pkt.src_port);
        put_be16(tcp, pkt.dst_port);
        put_be32(tcp, seq);
        put_be32(tcp, 0);
        tcp.push_back(5 << 4);  // data offset 5 words
        tcp.push_back(0x18);    // PSH|ACK
        put_be16(tcp, 65535);
        put_be16(tcp, 0);  // checksum placeholder
        put_be16(tcp, 0);  // urgent
        seq += static_cast<uint32_t>(pkt.tcp_payload.size());

        // TCP checksum over pseudo-header + header + payload.
        std::vector<uint8_t> pseudo;
        put_be32(pseudo, pkt.src_ip);
        put_be32(pseudo, pkt.dst_ip);
        pseudo.push_back(0);
        pseudo.push_back(6);
        put_be16(pseudo, static_cast<uint16_t>(20 + pkt.tcp_payload.size()));
        pseudo.insert(pseudo.end(), tcp.begin(), tcp.end());
        pseudo.insert(pseudo.end(), pkt.tcp_payload.begin(), pkt.tcp_payload.end());
        const uint16_t tcp_csum = inet_checksum(pseudo);
        tcp[16] = static_cast<uint8_t>(tcp_csum >> 8);
        tcp[17] = static_cast<uint8_t>(tcp_csum);

        out.insert(out.end(), ip.begin(), ip.end());
        out.insert(out.end(), tcp.begin(), tcp.end());
        out.insert(out.end(), pkt.tcp_payload.begin(), pkt.tcp_payload.end());
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pcap: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_pcap: write failed for " + path.string());
}

bool detect_tls(std::span<const uint8_t> payload) {
    if (payload.size() < 5) return false;
    const uint8_t content_type = payload[0];
    if (content_type < 0x14 || content_type > 0x17) return false;
    if (payload[1] != 0x03) return false;
    if (payload[2] < 0x01 || payload[2] > 0x04) return false;
    const uint16_t record_len = read_be16(&payload[3]);
    return record_len <= 16384 + 2048;
}

std::string to_string(TriageVerdict v) {
    switch (v) {
        case TriageVerdict::Cleartext: return "cleartext";
        case TriageVerdict::Tls: return "tls";
        case TriageVerdict::Opaque: return "opaque";
    }
    return "opaque";
}

TriageResult cleartext_filter(std::span<const uint8_t> payload, double significance) {
    TriageResult r;
    if (payload.size() < 256) {
        r.verdict = TriageVerdict::Opaque;
        r.chi_square = payload.empty() ? 0.0 : chi_square(payload);
        r.note = "too short";
        return r;
    }
    r.chi_square = chi_square(payload);
    const double critical = chi_square_critical_value(255, significance);
    r.verdict = r.chi_square > critical ? TriageVerdict::Cleartext : TriageVerdict::Opaque;
    return r;
}

TriageResult triage(std::span<const uint8_t> payload, double significance) {
    if (detect_tls(payload)) {
        TriageResult r;
        r.verdict = TriageVerdict::Tls;
        r.chi_square = payload.empty() ? 0.0 : chi_square(payload);
        return r;
    }
    return cleartext_filter(payload, significance);
}

void write_triage_csv(const std::vector<CapturedPacket>& packets,
                      const std::vector<TriageResult>& results,
                      const std::filesystem::path& path) {
    if (packets.size() != results.size())
        throw std::invalid_argument("write_triage_csv: packet/result count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_triage_csv: cannot open " + path.string());
    out << "packet,verdict,chi_square,length\n";
    char buf[64];
    for (size_t i = 0; i < packets.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f", results[i].chi_square);
        out << i << ',' << to_string(results[i].verdict) << ',' << buf << ','
            << packets[i].tcp_payload.size() << '\n';
    }
}

}  // namespace pktclass
