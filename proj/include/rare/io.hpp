#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rare/image.hpp"
#include "rare/operators.hpp"
#include "rare/priors.hpp"

// On-disk formats. Every array ships as a pair of files: "<base>.hdr", a
// short text header (format version, kind, dtype, layout), and "<base>.raw",
// the little-endian binary payload in declaration order. Images default to
// complex128 (complex64 supported), network weights are float32, sampling
// patterns float64 (kx, ky, weight) triplets.
namespace rare::io {

void write_image(const std::string& base, const ComplexImage& img, bool as_complex64 = false,
                 const std::string& axes = "phase,x,y");
ComplexImage read_image(const std::string& base);

void write_kspace(const std::string& base, const KSpaceData& y);
KSpaceData read_kspace(const std::string& base);

void write_pattern(const std::string& base, const SamplingPattern& p);
SamplingPattern read_pattern(const std::string& base);

void write_weights(const std::string& base, const NetWeights& w);
NetWeights read_weights(const std::string& base);

// Shortest decimal form that round-trips the double exactly.
std::string fmt(double v);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
bool file_exists(const std::string& path);

void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::uint64_t fnv1a(const void* data, std::size_t n);
std::string digest_string(const std::string& s);
// Digest over the concatenated bytes of <base>.hdr and <base>.raw, or of a
// single file when only that path exists.
std::string digest_file(const std::string& path);

} // namespace rare::io
