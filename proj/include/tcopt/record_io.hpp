#pragma once

#include "tcopt/signal_engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace tcopt::signal {

/// CSV layout:
///   # sample_rate=<Hz>,lockin_offset=<rad/s>,t0=<s>
///   # <key>=<value>            (optional metadata lines, e.g. config_hash)
///   t,re,im
///   <t>,<re>,<im>
/// Numbers are written with 17 significant digits so that a read returns bit-identical samples.
void write_record_csv(std::ostream& os, const SignalRecord& rec,
                      const std::map<std::string, std::string>& metadata = {});
void write_record_csv(const std::filesystem::path& path, const SignalRecord& rec,
                      const std::map<std::string, std::string>& metadata = {});

/// Throws IoError on malformed content.
[[nodiscard]] SignalRecord read_record_csv(std::istream& is);
[[nodiscard]] SignalRecord read_record_csv(const std::filesystem::path& path);

/// Two-column geophone CSV (`t,v`).
void write_series_csv(const std::filesystem::path& path, const std::vector<double>& values, double sample_rate,
                      const std::map<std::string, std::string>& metadata = {});
[[nodiscard]] std::vector<double> read_series_csv(const std::filesystem::path& path, double* sample_rate = nullptr);

} // namespace tcopt::signal
