#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pktclass/capture.hpp"
#include "pktclass/rng.hpp"

using namespace pktclass;
namespace fs = std::filesystem;

namespace {

void put8(std::vector<uint8_t>& v, uint8_t x) { v.push_back(x); }
void put16be(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}
void put32be(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}
void put32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}

// Hand-assembled classic pcap fixture, built byte-by-byte and independent of
// write_pcap: a UDP datagram followed by a TCP segment carrying `payload`.
std::vector<uint8_t> build_udp_tcp_fixture(const std::string& payload) {
    std::vector<uint8_t> f;
    put32le(f, 0xa1b2c3d4);  // magic
    put32le(f, 0x00040002);  // version 2.4 (minor, major LE halves)
    put32le(f, 0);
    put32le(f, 0);
    put32le(f, 65535);
    put32le(f, 1);  // Ethernet

    auto ethernet = [&](std::vector<uint8_t>& frame) {
        for (int i = 0; i < 12; ++i) frame.push_back(0xaa);
        put16be(frame, 0x0800);
    };

    {  // record 1: UDP
        std::vector<uint8_t> frame;
        ethernet(frame);
        const uint16_t udp_len = 8 + 4;
        put8(frame, 0x45);
        put8(frame, 0);
        put16be(frame, static_cast<uint16_t>(20 + udp_len));
        put16be(frame, 1);
        put16be(frame, 0);
        put8(frame, 64);
        put8(frame, 17);  // UDP
        put16be(frame, 0);
        put32be(frame, 0x0a000001);
        put32be(frame, 0x0a000002);
        put16be(frame, 5353);
        put16be(frame, 5353);
        put16be(frame, udp_len);
        put16be(frame, 0);
        for (char c : std::string("ping")) frame.push_back(static_cast<uint8_t>(c));

        put32le(f, 100);  // ts_sec
        put32le(f, 7);    // ts_usec
        put32le(f, static_cast<uint32_t>(frame.size()));
        put32le(f, static_cast<uint32_t>(frame.size()));
        f.insert(f.end(), frame.begin(), frame.end());
    }

    {  // record 2: TCP with the payload
        std::vector<uint8_t> frame;
        ethernet(frame);
        put8(frame, 0x45);
        put8(frame, 0);
        put16be(frame, static_cast<uint16_t>(20 + 20 + payload.size()));
        put16be(frame, 2);
        put16be(frame, 0x4000);
        put8(frame, 64);
        put8(frame, 6);  // TCP
        put16be(frame, 0);
        put32be(frame, 0x0a000001);
        put32be(frame, 0x0a000002);
        put16be(frame, 40000);
        put16be(frame, 8080);
        put32be(frame, 1);
        put32be(frame, 0);
        put8(frame, 5 << 4);
        put8(frame, 0x18);
        put16be(frame, 65535);
        put16be(frame, 0);
        put16be(frame, 0);
        for (char c : payload) frame.push_back(static_cast<uint8_t>(c));

        put32le(f, 101);
        put32le(f, 8);
        put32le(f, static_cast<uint32_t>(frame.size()));
        put32le(f, static_cast<uint32_t>(frame.size()));
        f.insert(f.end(), frame.begin(), frame.end());
    }
    return f;
}

fs::path write_bytes(const std::string& name, const std::vector<uint8_t>& bytes) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    return path;
}

}  // namespace

TEST_SUITE("capture") {

TEST_CASE("hand-assembled UDP+TCP fixture yields one payload and one skip") {
    const auto path = write_bytes("pktclass_fixture.pcap", build_udp_tcp_fixture("ABCD"));
    const PcapReadResult r = read_pcap(path);
    REQUIRE(r.packets.size() == 1);
    CHECK(r.skipped_non_tcp == 1);
    CHECK(r.packets[0].tcp_payload == std::vector<uint8_t>{'A', 'B', 'C', 'D'});
    CHECK(r.packets[0].src_port == 40000);
    CHECK(r.packets[0].dst_port == 8080);
    CHECK(r.packets[0].src_ip == 0x0a000001);
    CHECK(r.packets[0].ts_sec == 101);
    fs::remove(path);
}

TEST_CASE("wrong magic is rejected as not a pcap") {
    std::vector<uint8_t> junk(64, 0x5a);
    const auto path = write_bytes("pktclass_badmagic.pcap", junk);
    CHECK_THROWS_WITH_AS(read_pcap(path), doctest::Contains("not a pcap"), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("truncated record errors with the record index") {
    auto bytes = build_udp_tcp_fixture("ABCD");
    bytes.resize(bytes.size() - 3);  // chop the second record's tail
    const auto path = write_bytes("pktclass_trunc.pcap", bytes);
    CHECK_THROWS_WITH_AS(read_pcap(path), doctest::Contains("record 1"), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("byte-swapped magic parses") {
    auto bytes = build_udp_tcp_fixture("XY");
    // Rewrite global header in big-endian order.
    std::vector<uint8_t> swapped;
    put32be(swapped, 0xa1b2c3d4);
    put16be(swapped, 2);
    put16be(swapped, 4);
    put32be(swapped, 0);
    put32be(swapped, 0);
    put32be(swapped, 65535);
    put32be(swapped, 1);
    // Records too: lengths/timestamps swap with the magic.
    size_t off = 24;
    while (off < bytes.size()) {
        for (int field = 0; field < 4; ++field) {
            uint32_t v = static_cast<uint32_t>(bytes[off]) |
                         static_cast<uint32_t>(bytes[off + 1]) << 8 |
                         static_cast<uint32_t>(bytes[off + 2]) << 16 |
                         static_cast<uint32_t>(bytes[off + 3]) << 24;
            put32be(swapped, v);
            off += 4;
        }
        const size_t incl = static_cast<size_t>(swapped[swapped.size() - 6]) << 8 |
                            swapped[swapped.size() - 5];
        (void)incl;
        // incl_len was field 3; recover it from the original little-endian bytes.
        uint32_t incl_len = static_cast<uint32_t>(bytes[off - 8]) |
                            static_cast<uint32_t>(bytes[off - 7]) << 8 |
                            static_cast<uint32_t>(bytes[off - 6]) << 16 |
                            static_cast<uint32_t>(bytes[off - 5]) << 24;
        swapped.insert(swapped.end(), bytes.begin() + static_cast<ptrdiff_t>(off),
                       bytes.begin() + static_cast<ptrdiff_t>(off + incl_len));
        off += incl_len;
    }
    const auto path = write_bytes("pktclass_be.pcap", swapped);
    const PcapReadResult r = read_pcap(path);
    REQUIRE(r.packets.size() == 1);
    CHECK(r.packets[0].tcp_payload == std::vector<uint8_t>{'X', 'Y'});
    fs::remove(path);
}

TEST_CASE("write/read round trip preserves payloads, ports and order") {
    Rng rng(321);
    const auto path = fs::temp_directory_path() / "pktclass_rt.pcap";
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<CapturedPacket> packets(1 + rng.below(12));
        for (size_t i = 0; i < packets.size(); ++i) {
            CapturedPacket& p = packets[i];
            p.ts_sec = static_cast<uint32_t>(rng.below(1u << 30));
            p.ts_usec = static_cast<uint32_t>(rng.below(1000000));
            p.src_ip = static_cast<uint32_t>(rng.next_u64());
            p.dst_ip = static_cast<uint32_t>(rng.next_u64());
            p.src_port = static_cast<uint16_t>(rng.below(65536));
            p.dst_port = static_cast<uint16_t>(rng.below(65536));
            p.tcp_payload.resize(rng.below(1501));  // includes 1500-byte and empty payloads
            rng.fill_bytes(p.tcp_payload);
        }
        write_pcap(packets, path);
        const PcapReadResult r = read_pcap(path);
        REQUIRE(r.packets.size() == packets.size());
        CHECK(r.skipped_non_tcp == 0);
        for (size_t i = 0; i < packets.size(); ++i) {
            CHECK(r.packets[i].tcp_payload == packets[i].tcp_payload);
            CHECK(r.packets[i].src_port == packets[i].src_port);
            CHECK(r.packets[i].dst_port == packets[i].dst_port);
            CHECK(r.packets[i].ts_sec == packets[i].ts_sec);
            CHECK(r.packets[i].ts_usec == packets[i].ts_usec);
        }
    }
    fs::remove(path);
}

TEST_CASE("empty packet list is a valid 24-byte file") {
    const auto path = fs::temp_directory_path() / "pktclass_empty.pcap";
    write_pcap({}, path);
    CHECK(fs::file_size(path) == 24);
    const PcapReadResult r = read_pcap(path);
    CHECK(r.packets.empty());
    fs::remove(path);
}

TEST_CASE("oversized payload is rejected") {
    CapturedPacket p;
    p.tcp_payload.resize(kMaxPcapPayload + 1);
    const auto path = fs::temp_directory_path() / "pktclass_big.pcap";
    CHECK_THROWS_AS(write_pcap({p}, path), std::invalid_argument);
}

TEST_CASE("detect_tls accepts record headers and rejects other traffic") {
    // TLS 1.2 application data record: 17 03 03 00 10 + 16 bytes.
    std::vector<uint8_t> tls = {0x17, 0x03, 0x03, 0x00, 0x10};
    tls.resize(5 + 16, 0xcc);
    CHECK(detect_tls(tls));

    const std::string http = "GET / HTTP/1.1";
    std::vector<uint8_t> httpb(http.begin(), http.end());
    CHECK_FALSE(detect_tls(httpb));

    CHECK_FALSE(detect_tls({}));

    std::vector<uint8_t> handshake = {0x16, 0x03, 0x01, 0x01, 0x00, 0x01};
    CHECK(detect_tls(handshake));

    std::vector<uint8_t> bad_version = {0x17, 0x02, 0x03, 0x00, 0x10, 0x00};
    CHECK_FALSE(detect_tls(bad_version));

    std::vector<uint8_t> absurd_length = {0x17, 0x03, 0x03, 0xff, 0xff, 0x00};
    CHECK_FALSE(detect_tls(absurd_length));
}

TEST_CASE("detect_tls never throws on random payloads") {
    Rng rng(606);
    for (int i = 0; i < 2000; ++i) {
        std::vector<uint8_t> data(rng.below(2049));
        rng.fill_bytes(data);
        (void)detect_tls(data);  // total function
    }
}

TEST_CASE("cleartext_filter flags text and passes uniform data") {
    // ASCII English text: statistic far above the 330.5 critical value.
    std::string text;
    while (text.size() < 1024)
        text += "the quick brown fox jumps over the lazy dog and keeps going. ";
    text.resize(1024);
    std::vector<uint8_t> textb(text.begin(), text.end());
    const TriageResult t = cleartext_filter(textb);
    CHECK(t.verdict == TriageVerdict::Cleartext);
    CHECK(t.chi_square > 330.5);

    // 1024 identical bytes: statistic is exactly 261120.
    const TriageResult c = cleartext_filter(std::vector<uint8_t>(1024, 9));
    CHECK(c.verdict == TriageVerdict::Cleartext);
    CHECK(c.chi_square == doctest::Approx(261120.0));

    // Seeded uniform payloads: opaque in >= 99% of 1000 trials.
    int opaque = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(derive_seed(seed, "cleartext-mc"));
        std::vector<uint8_t> data(1024);
        rng.fill_bytes(data);
        if (cleartext_filter(data).verdict == TriageVerdict::Opaque) ++opaque;
    }
    CHECK(opaque >= 990);
}

TEST_CASE("payloads under 256 bytes are opaque with a note") {
    std::vector<uint8_t> tiny(100, 'a');
    const TriageResult r = cleartext_filter(tiny);
    CHECK(r.verdict == TriageVerdict::Opaque);
    CHECK(r.note == "too short");
}

TEST_CASE("cleartext verdict is invariant under payload permutation") {
    Rng rng(11);
    std::vector<uint8_t> data(1024);
    for (auto& b : data) b = static_cast<uint8_t>(rng.below(64));
    const TriageResult before = cleartext_filter(data);
    std::sort(data.begin(), data.end());
    const TriageResult after = cleartext_filter(data);
    CHECK(before.verdict == after.verdict);
    CHECK(before.chi_square == after.chi_square);
}

TEST_CASE("triage routes TLS ahead of the chi-square test") {
    std::vector<uint8_t> tls(1024, 0x41);  // looks like cleartext...
    tls[0] = 0x17;
    tls[1] = 0x03;
    tls[2] = 0x03;
    tls[3] = 0x00;
    tls[4] = 0x20;
    CHECK(triage(tls).verdict == TriageVerdict::Tls);
}

}  // TEST_SUITE
