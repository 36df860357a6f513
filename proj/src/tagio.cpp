#include "swapsim/tagio.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace swapsim::tagio {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'T', 'G'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kTickPs = 156;
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kRecordSize = 12;
constexpr std::size_t kTruthSize = 12;
constexpr std::uint32_t kMaxTruth = 65535;

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void export_tags(const tagstream::TagStream& stream, const std::string& path) {
    stream.validate();
    if (stream.events.size() > 0xffffffffull)
        throw std::runtime_error("export_tags: stream too large for the format");

    std::uint32_t truth_count = 0;
    for (const auto& ev : stream.events) {
        if (ev.truth && truth_count < kMaxTruth) ++truth_count;
    }

    std::vector<unsigned char> buf;
    buf.reserve(kHeaderSize + stream.events.size() * kRecordSize + truth_count * kTruthSize);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u16(buf, kVersion);
    put_u16(buf, kTickPs);
    put_u32(buf, static_cast<std::uint32_t>(stream.events.size()));
    put_u32(buf, truth_count);

    std::vector<link::Truth> table;
    table.reserve(truth_count);
    for (const auto& ev : stream.events) {
        put_u64(buf, static_cast<std::uint64_t>(ev.tag));
        buf.push_back(static_cast<unsigned char>(ev.channel));
        const bool annotate = ev.truth && table.size() < kMaxTruth;
        buf.push_back(annotate ? 1 : 0);
        put_u16(buf, annotate ? static_cast<std::uint16_t>(table.size()) : 0);
        if (annotate) table.push_back(*ev.truth);
    }
    for (const auto& t : table) {
        put_u64(buf, static_cast<std::uint64_t>(t.pulse));
        buf.push_back(static_cast<unsigned char>(static_cast<signed char>(t.photon)));
        buf.push_back(0);
        buf.push_back(0);
        buf.push_back(0);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("export_tags: cannot open '" + path + "'");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("export_tags: write failed for '" + path + "'");
}

tagstream::TagStream import_tags(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("import_tags: cannot open '" + path + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderSize) throw std::runtime_error("import_tags: truncated header");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("import_tags: bad magic");
    if (get_u16(buf.data() + 4) != kVersion)
        throw std::runtime_error("import_tags: unsupported version");
    if (get_u16(buf.data() + 6) != kTickPs)
        throw std::runtime_error("import_tags: unexpected tick resolution");
    const std::uint32_t n_records = get_u32(buf.data() + 8);
    const std::uint32_t n_truth = get_u32(buf.data() + 12);
    const std::size_t expect = kHeaderSize + static_cast<std::size_t>(n_records) * kRecordSize +
                               static_cast<std::size_t>(n_truth) * kTruthSize;
    if (buf.size() != expect) throw std::runtime_error("import_tags: size mismatch");

    const unsigned char* truth_base = buf.data() + kHeaderSize + n_records * kRecordSize;
    tagstream::TagStream stream;
    stream.events.reserve(n_records);
    for (std::uint32_t i = 0; i < n_records; ++i) {
        const unsigned char* p = buf.data() + kHeaderSize + i * kRecordSize;
        link::DetectionEvent ev;
        ev.tag = static_cast<std::int64_t>(get_u64(p));
        const unsigned channel = p[8];
        if (channel > static_cast<unsigned>(link::Channel::Dark))
            throw std::runtime_error("import_tags: bad channel code");
        ev.channel = static_cast<link::Channel>(channel);
        if (p[9] & 1) {
            const std::uint16_t ref = get_u16(p + 10);
            if (ref >= n_truth) throw std::runtime_error("import_tags: truth index out of range");
            const unsigned char* t = truth_base + ref * kTruthSize;
            link::Truth truth;
            truth.pulse = static_cast<std::int64_t>(get_u64(t));
            truth.photon = static_cast<std::int8_t>(static_cast<signed char>(t[8]));
            ev.truth = truth;
        }
        stream.events.push_back(ev);
    }
    stream.validate();
    return stream;
}

}  // namespace swapsim::tagio
