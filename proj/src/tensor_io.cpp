#include "flora/tensor_io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

namespace flora {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'T', '1'};

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& out, double v) {
    append_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    Reader(std::string_view bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    std::uint64_t u64() { return take(8); }
    double f64() { return std::bit_cast<double>(take(8)); }

    void expect_magic() {
        if (bytes_.size() < 4 || std::memcmp(bytes_.data(), kMagic, 4) != 0)
            throw std::runtime_error(origin_ + ": not an FLT1 tensor file (bad magic)");
        pos_ = 4;
    }

    void expect_end() {
        if (pos_ != bytes_.size())
            throw std::runtime_error(origin_ + ": trailing bytes after FLT1 payload");
    }

private:
    std::uint64_t take(std::size_t n) {
        if (pos_ + n > bytes_.size())
            throw std::runtime_error(origin_ + ": truncated FLT1 file");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += n;
        return v;
    }

    std::string_view bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string flt1_to_bytes(const Tensor& t) {
    std::string out;
    out.reserve(4 + 4 + 8 * t.ndim() + 8 * t.size());
    out.append(kMagic, 4);
    append_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t e : t.shape()) append_u64(out, e);
    for (double v : t.values()) append_f64(out, v);
    return out;
}

Tensor flt1_from_bytes(std::string_view bytes, const std::string& origin) {
    Reader r(bytes, origin);
    r.expect_magic();
    const std::uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 64)
        throw std::runtime_error(origin + ": FLT1 ndim " + std::to_string(ndim) +
                                 " out of range");
    std::vector<std::size_t> shape(ndim);
    std::size_t total = 1;
    for (auto& e : shape) {
        const std::uint64_t v = r.u64();
        if (v == 0) throw std::runtime_error(origin + ": FLT1 extent must be positive");
        e = static_cast<std::size_t>(v);
        total *= e;
    }
    std::vector<double> data(total);
    for (auto& v : data) {
        v = r.f64();
        if (!std::isfinite(v))
            throw std::runtime_error(origin + ": FLT1 payload contains a non-finite value");
    }
    r.expect_end();
    return Tensor(std::move(shape), std::move(data));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    static std::atomic<unsigned> counter{0};
#ifdef _WIN32
    const int pid = _getpid();
#else
    const int pid = getpid();
#endif
    const fs::path tmp = dir / (path.filename().string() + ".tmp." + std::to_string(pid) + "." +
                                std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("read failed for " + path.string());
    return bytes;
}

void write_flt1(const std::filesystem::path& path, const Tensor& t) {
    write_file_atomic(path, flt1_to_bytes(t));
}

Tensor read_flt1(const std::filesystem::path& path) {
    return flt1_from_bytes(read_file(path), path.string());
}

}  // namespace flora
