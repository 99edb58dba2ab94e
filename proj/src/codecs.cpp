#include <openssl/evp.h>
#include <unistd.h>
#include <zlib.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

#include "pktclass/corpus.hpp"

namespace pktclass {

namespace {

[[noreturn]] void zlib_fail(const char* what, int rc) {
    throw std::runtime_error(std::string("deflate codec: ") + what + " failed (zlib rc " +
                             std::to_string(rc) + ")");
}

}  // namespace

std::vector<uint8_t> deflate_compress(std::span<const uint8_t> data) {
    if (data.empty()) throw std::invalid_argument("deflate_compress: empty input");

    z_stream zs{};
    // windowBits -15: raw RFC 1951 stream, no zlib/gzip wrapper.
    int rc = deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY);
    if (rc != Z_OK) zlib_fail("deflateInit2", rc);

    std::vector<uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())));
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    rc = deflate(&zs, Z_FINISH);
    if (rc != Z_STREAM_END) {
        deflateEnd(&zs);
        zlib_fail("deflate", rc);
    }
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

std::vector<uint8_t> deflate_decompress(std::span<const uint8_t> data) {
    if (data.empty()) throw std::invalid_argument("deflate_decompress: empty input");

    z_stream zs{};
    int rc = inflateInit2(&zs, -15);
    if (rc != Z_OK) zlib_fail("inflateInit2", rc);

    std::vector<uint8_t> out;
    out.reserve(data.size() * 3);
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    uint8_t buf[1 << 16];
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
            inflateEnd(&zs);
            throw std::runtime_error("deflate codec: corrupt stream (zlib rc " +
                                     std::to_string(rc) + ")");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
        if (rc == Z_BUF_ERROR && zs.avail_in == 0) {
            inflateEnd(&zs);
            throw std::runtime_error("deflate codec: truncated stream");
        }
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::vector<uint8_t> aes256ctr_apply(std::span<const uint8_t> key, std::span<const uint8_t> iv,
                                     std::span<const uint8_t> data) {
    if (key.size() != 32) throw std::invalid_argument("aes256ctr: key must be 32 bytes");
    if (iv.size() != 16) throw std::invalid_argument("aes256ctr: iv must be 16 bytes");
    if (data.empty()) throw std::invalid_argument("aes256ctr: empty input");

    struct CtxDeleter {
        void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
    };
    std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, key.data(),
                                   iv.data()) != 1)
        throw std::runtime_error("aes256ctr: cipher init failed");

    std::vector<uint8_t> out(data.size() + 16);
    int len = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, data.data(),
                          static_cast<int>(data.size())) != 1)
        throw std::runtime_error("aes256ctr: encrypt failed");
    int total = len;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1)
        throw std::runtime_error("aes256ctr: finalize failed");
    total += len;
    out.resize(static_cast<size_t>(total));
    return out;
}

namespace {

class TempFile {
public:
    explicit TempFile(const char* tag) {
        std::string tmpl = (std::filesystem::temp_directory_path() /
                            (std::string("pktclass-") + tag + "-XXXXXX"))
                               .string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        int fd = mkstemp(buf.data());
        if (fd < 0) throw std::runtime_error("external codec: mkstemp failed");
        close(fd);
        path_ = buf.data();
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string substitute(const std::string& tmpl, const std::string& placeholder,
                       const std::string& value) {
    std::string out = tmpl;
    size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
        out.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return out;
}

}  // namespace

std::vector<uint8_t> run_external_codec(const std::string& codec_name,
                                        const std::string& command_template,
                                        std::span<const uint8_t> input) {
    if (input.empty())
        throw std::invalid_argument("external codec '" + codec_name + "': empty input");
    if (command_template.find("{in}") == std::string::npos ||
        command_template.find("{out}") == std::string::npos)
        throw std::invalid_argument("external codec '" + codec_name +
                                    "': template must contain {in} and {out}");

    TempFile in_file("in");
    TempFile out_file("out");
    {
        std::ofstream out(in_file.path(), std::ios::binary);
        out.write(reinterpret_cast<const char*>(input.data()),
                  static_cast<std::streamsize>(input.size()));
        if (!out)
            throw std::runtime_error("external codec '" + codec_name +
                                     "': cannot stage input file");
    }
    // The external tool is expected to create/overwrite {out}; remove the
    // placeholder so tools that refuse to overwrite still work.
    std::filesystem::remove(out_file.path());

    std::string cmd = substitute(command_template, "{in}", in_file.path().string());
    cmd = substitute(cmd, "{out}", out_file.path().string());
    const int rc = std::system(cmd.c_str());
    if (rc != 0)
        throw std::runtime_error("external codec '" + codec_name + "' failed (exit status " +
                                 std::to_string(rc) + "): " + cmd);

    std::ifstream in(out_file.path(), std::ios::binary);
    if (!in)
        throw std::runtime_error("external codec '" + codec_name +
                                 "' produced no output file");
    std::vector<uint8_t> out((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    if (out.empty())
        throw std::runtime_error("external codec '" + codec_name + "' produced empty output");
    return out;
}

}  // namespace pktclass
