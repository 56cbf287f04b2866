#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "distlasso/core.hpp"
#include "distlasso/synth.hpp"

namespace distlasso::io {

/// Binary dataset container, all little-endian:
///   bytes 0-3   magic "DLDS"
///   bytes 4-7   version (u32) = 1
///   bytes 8-15  n (u64)
///   bytes 16-23 p (u64)
///   then n*p float64 design entries row-major, then n float64 responses.
inline constexpr char kMagic[4] = {'D', 'L', 'D', 'S'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 24;

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

/// CSV with header row y,x1,...,xp.
Dataset read_csv_dataset(const std::filesystem::path& path);
void write_csv_dataset(const std::filesystem::path& path, const Dataset& data);

/// Reads either format, chosen by the .csv extension.
Dataset load_dataset(const std::filesystem::path& path);

/// Flat key=value text; '#' starts a comment; blank lines ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

/// Sidecar written next to a synthetic dataset: the generator config and
/// the true coefficients.
KeyValues synth_metadata(const SynthConfig& cfg, const GroundTruth& truth);

/// Columns j,beta.
void write_coefficients(const std::filesystem::path& path, std::span<const double> beta);

std::string format_double(double v);

}  // namespace distlasso::io
