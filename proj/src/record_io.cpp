#include "tcopt/record_io.hpp"

#include "tcopt/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

namespace tcopt::signal {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view text, std::size_t line) {
    // Leading '+' and whitespace are not accepted by from_chars.
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) text.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw IoError("line " + std::to_string(line) + ": cannot parse number '" + std::string(text) + "'");
    }
    return v;
}

std::map<std::string, std::string> parse_header(std::string_view body) {
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const auto comma = body.find(',', pos);
        auto item = body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        const auto eq = item.find('=');
        if (eq != std::string_view::npos) {
            auto key = item.substr(0, eq);
            while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
            kv.emplace(std::string(key), std::string(item.substr(eq + 1)));
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return kv;
}

void write_metadata(std::ostream& os, const std::map<std::string, std::string>& metadata) {
    for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
}

} // namespace

void write_record_csv(std::ostream& os, const SignalRecord& rec, const std::map<std::string, std::string>& metadata) {
    os << "# sample_rate=" << fmt17(rec.sample_rate) << ",lockin_offset=" << fmt17(rec.lockin_offset)
       << ",t0=" << fmt17(rec.t0) << '\n';
    write_metadata(os, metadata);
    os << "t,re,im\n";
    std::string line;
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        line.clear();
        line += fmt17(rec.time(i));
        line += ',';
        line += fmt17(rec.samples[i].real());
        line += ',';
        line += fmt17(rec.samples[i].imag());
        line += '\n';
        os << line;
    }
}

void write_record_csv(const std::filesystem::path& path, const SignalRecord& rec,
                      const std::map<std::string, std::string>& metadata) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_record_csv(os, rec, metadata);
    if (!os) throw IoError("write failed for " + path.string());
}

SignalRecord read_record_csv(std::istream& is) {
    SignalRecord rec;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    bool have_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto kv = parse_header(std::string_view(line).substr(1));
            if (kv.contains("sample_rate")) {
                for (const char* key : {"sample_rate", "lockin_offset", "t0"}) {
                    if (!kv.contains(key)) throw IoError(std::string("record header lacks ") + key);
                }
                rec.sample_rate = parse_double(kv.at("sample_rate"), lineno);
                rec.lockin_offset = parse_double(kv.at("lockin_offset"), lineno);
                rec.t0 = parse_double(kv.at("t0"), lineno);
                have_header = true;
            }
            continue;
        }
        if (!have_columns) {
            if (line != "t,re,im") throw IoError("line " + std::to_string(lineno) + ": expected column header t,re,im");
            have_columns = true;
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw IoError("line " + std::to_string(lineno) + ": expected three columns");
        const std::string_view sv(line);
        const double re = parse_double(sv.substr(c1 + 1, c2 - c1 - 1), lineno);
        const double im = parse_double(sv.substr(c2 + 1), lineno);
        rec.samples.emplace_back(re, im);
    }
    if (!have_header) throw IoError("record header (# sample_rate=...) missing");
    if (!have_columns) throw IoError("record column header missing");
    try {
        rec.validate();
    } catch (const DomainError& e) {
        throw IoError(e.what());
    }
    return rec;
}

SignalRecord read_record_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    return read_record_csv(is);
}

void write_series_csv(const std::filesystem::path& path, const std::vector<double>& values, double sample_rate,
                      const std::map<std::string, std::string>& metadata) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << "# sample_rate=" << fmt17(sample_rate) << '\n';
    write_metadata(os, metadata);
    os << "t,v\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << fmt17(static_cast<double>(i) / sample_rate) << ',' << fmt17(values[i]) << '\n';
    }
    if (!os) throw IoError("write failed for " + path.string());
}

std::vector<double> read_series_csv(const std::filesystem::path& path, double* sample_rate) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    bool have_rate = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto kv = parse_header(std::string_view(line).substr(1));
            if (kv.contains("sample_rate")) {
                if (sample_rate != nullptr) *sample_rate = parse_double(kv.at("sample_rate"), lineno);
                have_rate = true;
            }
            continue;
        }
        if (line == "t,v") continue;
        const auto c = line.find(',');
        if (c == std::string::npos) throw IoError("line " + std::to_string(lineno) + ": expected two columns");
        out.push_back(parse_double(std::string_view(line).substr(c + 1), lineno));
    }
    if (!have_rate) throw IoError("series header (# sample_rate=...) missing");
    return out;
}

} // namespace tcopt::signal
