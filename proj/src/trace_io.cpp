/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mlpa/trace_io.hpp"

#include "mlpa/errors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mlpa {
namespace {

template <typename T> void put_le(std::string &out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <typename T> T get_le(const std::string &in, std::size_t &pos) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
}

std::string encode_header(const CampaignFileHeader &h) {
    std::string out(h.magic.begin(), h.magic.end());
    put_le(out, h.version);
    put_le(out, h.n_traces);
    put_le(out, h.samples_per_trace);
    put_le(out, h.sample_type);
    put_le(out, h.cipher_id);
    put_le(out, h.leakage_id);
    put_le(out, h.flags);
    put_le(out, h.key_present);
    return out;
}

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("read failed: " + path);
    return data;
}

CampaignFileHeader decode_header(const std::string &data, const std::string &path) {
    if (data.size() < kHeaderSize)
        throw FormatError(path + ": shorter than the MLPATRC1 header");
    CampaignFileHeader h;
    if (std::memcmp(data.data(), h.magic.data(), h.magic.size()) != 0)
        throw FormatError(path + ": bad magic");
    std::size_t pos = 8;
    h.version = get_le<std::uint16_t>(data, pos);
    h.n_traces = get_le<std::uint32_t>(data, pos);
    h.samples_per_trace = get_le<std::uint32_t>(data, pos);
    h.sample_type = get_le<std::uint8_t>(data, pos);
    h.cipher_id = get_le<std::uint8_t>(data, pos);
    h.leakage_id = get_le<std::uint8_t>(data, pos);
    h.flags = get_le<std::uint16_t>(data, pos);
    h.key_present = get_le<std::uint8_t>(data, pos);
    if (h.version != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(h.version));
    if (h.sample_type != 0)
        throw FormatError(path + ": unknown sample type");
    if (h.cipher_id > 1 || h.leakage_id > 1 || h.key_present > 1)
        throw FormatError(path + ": bad cipher, leakage or key field");
    const std::uint64_t record = 16 + 4ULL * h.samples_per_trace;
    const std::uint64_t expected =
        kHeaderSize + record * h.n_traces + (h.key_present ? 8 : 0);
    if (data.size() != expected)
        throw FormatError(path + ": payload length " + std::to_string(data.size()) +
                          " disagrees with header (expected " +
                          std::to_string(expected) + ")");
    return h;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string &line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return cells;
}

std::uint64_t parse_hex_cell(const std::string &cell, std::size_t row,
                             std::size_t column) {
    std::string_view s = cell;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'))
        s.remove_prefix(2);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (s.empty() || s.size() > 16 || ec != std::errc() || end != s.data() + s.size())
        throw ParseError("row " + std::to_string(row) + ": bad hex value '" + cell + "'",
                         row, column);
    return v;
}

float parse_sample_cell(const std::string &cell, std::size_t row, std::size_t column) {
    float v = 0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size())
        throw ParseError("row " + std::to_string(row) + ": bad sample '" + cell + "'",
                         row, column);
    return v;
}

std::size_t column_of(const std::vector<std::string> &header, const std::string &name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw ConfigError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t argmax(const std::vector<double> &v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

void write_campaign(const Campaign &campaign, const std::string &path,
                    bool include_key) {
    CampaignFileHeader h;
    h.n_traces = static_cast<std::uint32_t>(campaign.size());
    h.samples_per_trace = static_cast<std::uint32_t>(campaign.samples_per_trace());
    h.cipher_id = static_cast<std::uint8_t>(campaign.config.cipher);
    h.leakage_id = static_cast<std::uint8_t>(campaign.config.leakage);
    const bool any_ct = std::any_of(campaign.traces.begin(), campaign.traces.end(),
                                    [](const Trace &t) { return t.ciphertext.has_value(); });
    h.flags = any_ct ? kFlagCiphertext : 0;
    const bool with_key = include_key && campaign.key.has_value();
    h.key_present = with_key ? 1 : 0;

    std::string out = encode_header(h);
    out.reserve(kHeaderSize + campaign.size() * (16 + 4 * h.samples_per_trace) + 8);
    for (const auto &t : campaign.traces) {
        if (t.samples.size() != h.samples_per_trace)
            throw DataError("traces of unequal length cannot be written");
        put_le(out, t.plaintext.value());
        put_le(out, t.ciphertext ? t.ciphertext->value() : std::uint64_t{0});
        for (float s : t.samples)
            put_le(out, std::bit_cast<std::uint32_t>(s));
    }
    if (with_key)
        put_le(out, campaign.key->value());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot create " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw IoError("write failed: " + path);
}

CampaignFileHeader read_campaign_header(const std::string &path) {
    return decode_header(slurp(path), path);
}

Campaign read_campaign(const std::string &path) {
    const std::string data = slurp(path);
    const CampaignFileHeader h = decode_header(data, path);
    Campaign c;
    c.config.cipher = static_cast<CipherKind>(h.cipher_id);
    c.config.leakage = static_cast<LeakageModel>(h.leakage_id);
    c.traces.resize(h.n_traces);
    std::size_t pos = kHeaderSize;
    for (auto &t : c.traces) {
        t.plaintext = BitVector(get_le<std::uint64_t>(data, pos), 64);
        const auto ct = get_le<std::uint64_t>(data, pos);
        if (h.flags & kFlagCiphertext)
            t.ciphertext = BitVector(ct, 64);
        t.samples.resize(h.samples_per_trace);
        for (auto &s : t.samples)
            s = std::bit_cast<float>(get_le<std::uint32_t>(data, pos));
    }
    if (h.key_present)
        c.key = BitVector(get_le<std::uint64_t>(data, pos), 64);
    return c;
}

Campaign import_csv(const std::string &path, const CsvColumnSpec &spec) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    Campaign c;
    c.config.cipher = spec.cipher;
    std::string line;
    if (!std::getline(in, line))
        return c;
    const auto header = split_row(line);
    const std::size_t pcol = column_of(header, spec.plaintext_column);
    std::optional<std::size_t> ccol;
    if (spec.ciphertext_column)
        ccol = column_of(header, *spec.ciphertext_column);
    std::vector<std::size_t> scols;
    if (spec.sample_columns.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (j != pcol && (!ccol || j != *ccol))
                scols.push_back(j);
    } else {
        for (const auto &name : spec.sample_columns)
            scols.push_back(column_of(header, name));
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        ++row;
        const auto cells = split_row(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": " +
                                 std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(header.size()),
                             row, 0);
        Trace t;
        t.plaintext = BitVector(parse_hex_cell(cells[pcol], row, pcol + 1), 64);
        if (ccol)
            t.ciphertext = BitVector(parse_hex_cell(cells[*ccol], row, *ccol + 1), 64);
        for (std::size_t j : scols)
            t.samples.push_back(parse_sample_cell(cells[j], row, j + 1));
        c.traces.push_back(std::move(t));
    }
    return c;
}

std::size_t locate_register_sample(const Campaign &campaign,
                                   std::optional<std::uint64_t> known_subkey,
                                   const LocateStrategy &strategy) {
    if (campaign.traces.empty())
        throw DataError("empty campaign");
    const std::size_t ns = campaign.samples_per_trace();
    switch (strategy.kind) {
    case LocateStrategy::Kind::Given:
        if (strategy.given >= ns)
            throw IndexError("sample " + std::to_string(strategy.given) +
                             " is past the end of the traces");
        return strategy.given;
    case LocateStrategy::Kind::MaxVariance: {
        std::vector<double> var(ns, 0.0);
        for (std::size_t j = 0; j < ns; ++j) {
            const double m = campaign.sample_mean(j);
            double acc = 0.0;
            for (const auto &t : campaign.traces)
                acc += (t.samples[j] - m) * (t.samples[j] - m);
            var[j] = acc;
        }
        return argmax(var);
    }
    case LocateStrategy::Kind::DpaScan: {
        if (!strategy.selection)
            throw ConfigError("dpa_scan needs a selection function");
        std::vector<double> peak(ns, 0.0);
        const auto consider = [&](std::uint64_t g) {
            const auto d = differential_trace(campaign, *strategy.selection, g);
            for (std::size_t j = 0; j < ns; ++j)
                peak[j] = std::max(peak[j], std::fabs(d.values[j]));
        };
        if (known_subkey) {
            consider(*known_subkey);
        } else {
            for (std::uint64_t g = 0; g < strategy.selection->subkey_space; ++g)
                consider(g);
        }
        return argmax(peak);
    }
    }
    throw ConfigError("unknown locate strategy");
}

} // namespace mlpa
