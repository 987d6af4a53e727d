#include "rare/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace rare::io {

namespace {

void write_bytes(const std::string& path, const void* data, std::size_t bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(static_cast<const char*>(data), std::streamsize(bytes));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<char> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path);
    const std::streamsize n = f.tellg();
    f.seekg(0);
    std::vector<char> buf(std::size_t(n));
    f.read(buf.data(), n);
    if (!f) throw std::runtime_error("read failed: " + path);
    return buf;
}

// Header = sequence of "key value..." lines; first line "rare-raw 1".
struct Header {
    std::vector<std::pair<std::string, std::string>> fields;

    const std::string& get(const std::string& key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return v;
        throw std::runtime_error("header field missing: " + key);
    }
    bool has(const std::string& key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return true;
        return false;
    }
};

Header read_header(const std::string& path, const std::string& expect_kind) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != "rare-raw 1")
        throw std::runtime_error("not a rare-raw v1 header: " + path);
    Header h;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto sp = line.find(' ');
        if (sp == std::string::npos)
            h.fields.emplace_back(line, "");
        else
            h.fields.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    if (h.get("kind") != expect_kind)
        throw std::runtime_error("expected kind '" + expect_kind + "' in " + path);
    if (h.get("endianness") != "little")
        throw std::runtime_error("unsupported endianness in " + path);
    return h;
}

std::vector<long> parse_longs(const std::string& s) {
    std::istringstream in(s);
    std::vector<long> out;
    long v;
    while (in >> v) out.push_back(v);
    return out;
}

} // namespace

void write_image(const std::string& base, const ComplexImage& img, bool as_complex64,
                 const std::string& axes) {
    std::ostringstream h;
    h << "rare-raw 1\n"
      << "kind image\n"
      << "dtype " << (as_complex64 ? "complex64" : "complex128") << "\n"
      << "endianness little\n"
      << "axes " << axes << "\n"
      << "dims " << img.dims.phases << " " << img.dims.nx << " " << img.dims.ny << "\n";
    write_text(base + ".hdr", h.str());
    if (as_complex64) {
        std::vector<float> buf(2 * img.data.size());
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            buf[2 * i] = float(img.data[i].real());
            buf[2 * i + 1] = float(img.data[i].imag());
        }
        write_bytes(base + ".raw", buf.data(), buf.size() * sizeof(float));
    } else {
        write_bytes(base + ".raw", img.data.data(), img.data.size() * sizeof(cplx));
    }
}

ComplexImage read_image(const std::string& base) {
    const Header h = read_header(base + ".hdr", "image");
    const auto dims = parse_longs(h.get("dims"));
    if (dims.size() != 3) throw std::runtime_error("image header needs 3 dims: " + base);
    ComplexImage img({int(dims[0]), int(dims[1]), int(dims[2])});
    const auto raw = read_bytes(base + ".raw");
    const std::string dtype = h.get("dtype");
    if (dtype == "complex128") {
        if (raw.size() != img.data.size() * sizeof(cplx))
            throw std::runtime_error("payload size mismatch: " + base);
        std::memcpy(img.data.data(), raw.data(), raw.size());
    } else if (dtype == "complex64") {
        if (raw.size() != img.data.size() * 2 * sizeof(float))
            throw std::runtime_error("payload size mismatch: " + base);
        const float* f = reinterpret_cast<const float*>(raw.data());
        for (std::size_t i = 0; i < img.data.size(); ++i)
            img.data[i] = cplx(f[2 * i], f[2 * i + 1]);
    } else {
        throw std::runtime_error("unsupported image dtype: " + dtype);
    }
    return img;
}

void write_kspace(const std::string& base, const KSpaceData& y) {
    std::ostringstream h;
    h << "rare-raw 1\n"
      << "kind kspace\n"
      << "dtype complex128\n"
      << "endianness little\n"
      << "phases " << y.n_phases << "\n"
      << "coils " << y.n_coils << "\n"
      << "counts";
    for (int t = 0; t < y.n_phases; ++t) h << " " << y.at(t, 0).size();
    h << "\n";
    if (y.noise_db) h << "noise_db " << fmt(*y.noise_db) << "\n";
    write_text(base + ".hdr", h.str());
    std::vector<cplx> buf;
    for (const auto& v : y.samples) buf.insert(buf.end(), v.begin(), v.end());
    write_bytes(base + ".raw", buf.data(), buf.size() * sizeof(cplx));
}

KSpaceData read_kspace(const std::string& base) {
    const Header h = read_header(base + ".hdr", "kspace");
    KSpaceData y;
    y.n_phases = int(parse_longs(h.get("phases"))[0]);
    y.n_coils = int(parse_longs(h.get("coils"))[0]);
    const auto counts = parse_longs(h.get("counts"));
    if (int(counts.size()) != y.n_phases)
        throw std::runtime_error("counts do not match phases: " + base);
    if (h.has("noise_db")) y.noise_db = std::stod(h.get("noise_db"));
    const auto raw = read_bytes(base + ".raw");
    const cplx* p = reinterpret_cast<const cplx*>(raw.data());
    std::size_t total = 0;
    for (long c : counts) total += std::size_t(c) * y.n_coils;
    if (raw.size() != total * sizeof(cplx))
        throw std::runtime_error("payload size mismatch: " + base);
    y.samples.resize(std::size_t(y.n_phases) * y.n_coils);
    for (int t = 0; t < y.n_phases; ++t)
        for (int i = 0; i < y.n_coils; ++i) {
            y.at(t, i).assign(p, p + counts[t]);
            p += counts[t];
        }
    return y;
}

void write_pattern(const std::string& base, const SamplingPattern& p) {
    std::ostringstream h;
    h << "rare-raw 1\n"
      << "kind pattern\n"
      << "dtype float64\n"
      << "endianness little\n"
      << "scheme " << (p.scheme == SamplingScheme::radial ? "radial" : "cartesian-mask") << "\n"
      << "phases " << p.n_phases() << "\n"
      << "counts";
    for (int t = 0; t < p.n_phases(); ++t) h << " " << p.samples_in_phase(t);
    h << "\n";
    write_text(base + ".hdr", h.str());
    std::vector<double> buf;
    buf.reserve(p.total_samples() * 3);
    for (const auto& ph : p.phase_samples)
        for (const auto& s : ph) {
            buf.push_back(s.kx);
            buf.push_back(s.ky);
            buf.push_back(s.weight);
        }
    write_bytes(base + ".raw", buf.data(), buf.size() * sizeof(double));
}

SamplingPattern read_pattern(const std::string& base) {
    const Header h = read_header(base + ".hdr", "pattern");
    SamplingPattern p;
    p.scheme = h.get("scheme") == "radial" ? SamplingScheme::radial
                                           : SamplingScheme::cartesian_mask;
    const int phases = int(parse_longs(h.get("phases"))[0]);
    const auto counts = parse_longs(h.get("counts"));
    if (int(counts.size()) != phases)
        throw std::runtime_error("counts do not match phases: " + base);
    const auto raw = read_bytes(base + ".raw");
    const double* d = reinterpret_cast<const double*>(raw.data());
    std::size_t total = 0;
    for (long c : counts) total += std::size_t(c);
    if (raw.size() != total * 3 * sizeof(double))
        throw std::runtime_error("payload size mismatch: " + base);
    p.phase_samples.resize(phases);
    for (int t = 0; t < phases; ++t) {
        p.phase_samples[t].resize(counts[t]);
        for (long s = 0; s < counts[t]; ++s) {
            p.phase_samples[t][s] = {d[0], d[1], d[2]};
            d += 3;
        }
    }
    return p;
}

void write_weights(const std::string& base, const NetWeights& w) {
    w.validate();
    std::ostringstream h;
    h << "rare-raw 1\n"
      << "kind weights\n"
      << "dtype float32\n"
      << "endianness little\n"
      << "layers " << w.layers.size() << "\n";
    for (const auto& l : w.layers)
        h << "layer " << l.shape.out_ch << " " << l.shape.in_ch << " " << l.shape.kp << " "
          << l.shape.kx << " " << l.shape.ky << " "
          << (l.act == Activation::relu ? "relu" : "none") << "\n";
    write_text(base + ".hdr", h.str());
    std::vector<float> buf;
    for (const auto& l : w.layers) {
        for (double v : l.weights) buf.push_back(float(v));
        for (double v : l.bias) buf.push_back(float(v));
    }
    write_bytes(base + ".raw", buf.data(), buf.size() * sizeof(float));
}

NetWeights read_weights(const std::string& base) {
    const Header h = read_header(base + ".hdr", "weights");
    const int n_layers = int(parse_longs(h.get("layers"))[0]);
    NetWeights w;
    for (const auto& [k, v] : h.fields) {
        if (k != "layer") continue;
        std::istringstream in(v);
        ConvLayer l;
        std::string act;
        in >> l.shape.out_ch >> l.shape.in_ch >> l.shape.kp >> l.shape.kx >> l.shape.ky >> act;
        if (!in) throw std::runtime_error("bad layer line in " + base);
        l.act = act == "relu" ? Activation::relu : Activation::none;
        w.layers.push_back(std::move(l));
    }
    if (int(w.layers.size()) != n_layers)
        throw std::runtime_error("layer count mismatch in " + base);
    const auto raw = read_bytes(base + ".raw");
    const float* f = reinterpret_cast<const float*>(raw.data());
    std::size_t need = 0;
    for (const auto& l : w.layers) need += l.shape.weight_count() + std::size_t(l.shape.out_ch);
    if (raw.size() != need * sizeof(float))
        throw std::runtime_error("payload size mismatch: " + base);
    for (auto& l : w.layers) {
        l.weights.resize(l.shape.weight_count());
        for (double& v : l.weights) v = double(*f++);
        l.bias.resize(l.shape.out_ch);
        for (double& v : l.bias) v = double(*f++);
    }
    w.validate();
    return w;
}

std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
    const auto b = read_bytes(path);
    return std::string(b.begin(), b.end());
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 == header.size() ? "\n" : "\t");
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("tsv row width mismatch: " + path);
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 == row.size() ? "\n" : "\t");
    }
    write_text(path, out.str());
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string digest_string(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
    return std::string(buf);
}

std::string digest_file(const std::string& path) {
    std::string all;
    if (file_exists(path + ".hdr")) {
        all += read_text(path + ".hdr");
        all += read_text(path + ".raw");
    } else {
        all = read_text(path);
    }
    return digest_string(all);
}

} // namespace rare::io
