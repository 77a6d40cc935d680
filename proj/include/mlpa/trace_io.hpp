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

#pragma once

#include "mlpa/dpa.hpp"
#include "mlpa/leakage.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mlpa {

/// MLPATRC1 header, 24 bytes little-endian on disk in this field order.
struct CampaignFileHeader {
    std::array<char, 8> magic{'M', 'L', 'P', 'A', 'T', 'R', 'C', '1'};
    std::uint16_t version = 1;
    std::uint32_t n_traces = 0;
    std::uint32_t samples_per_trace = 0;
    /// 0 = f32, the only sample type.
    std::uint8_t sample_type = 0;
    std::uint8_t cipher_id = 0;
    std::uint8_t leakage_id = 0;
    /// Bit 0: ciphertexts present.
    std::uint16_t flags = 0;
    std::uint8_t key_present = 0;
};

inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::uint16_t kFlagCiphertext = 1;

/// Header, then per trace: plaintext u64, ciphertext u64 (0 when absent),
/// samples as f32; then the key as u64 when include_key is set and the
/// campaign has one. Throws IoError naming the path.
void write_campaign(const Campaign &campaign, const std::string &path,
                    bool include_key);

/// Throws FormatError on a bad header or when the file length disagrees
/// with the header counts, IoError when the file cannot be read. The
/// returned config only carries the cipher and leakage model.
Campaign read_campaign(const std::string &path);
CampaignFileHeader read_campaign_header(const std::string &path);

/// Which columns of a CSV export hold what. Columns are named by their
/// header text. Empty sample_columns means every column other than the
/// plaintext and ciphertext columns, in file order.
struct CsvColumnSpec {
    std::string plaintext_column = "plaintext";
    std::optional<std::string> ciphertext_column;
    std::vector<std::string> sample_columns;
    CipherKind cipher = CipherKind::Des;
};

/// Comma-separated file with a header row; plaintexts are hex with an
/// optional 0x prefix. Throws ParseError with the data row number (the
/// first row after the header is row 1), ConfigError for unknown column
/// names and IoError when the file cannot be opened.
Campaign import_csv(const std::string &path, const CsvColumnSpec &spec);

struct LocateStrategy {
    enum class Kind { Given, MaxVariance, DpaScan };
    Kind kind = Kind::MaxVariance;
    std::size_t given = 0;
    /// DpaScan: the selection to replay.
    std::optional<SelectionFunction> selection;

    static LocateStrategy at(std::size_t j) { return {Kind::Given, j, {}}; }
    static LocateStrategy max_variance() { return {Kind::MaxVariance, 0, {}}; }
    static LocateStrategy dpa_scan(SelectionFunction sel) {
        return {Kind::DpaScan, 0, std::move(sel)};
    }
};

/// Sample index where the register load shows. DpaScan maximises |Delta|
/// for the known subkey, or the largest |Delta| over all guesses when
/// known_subkey is empty. Ties go to the lowest index. Throws DataError on
/// an empty campaign, IndexError for a given index past the trace end and
/// ConfigError for DpaScan without a selection.
std::size_t locate_register_sample(const Campaign &campaign,
                                   std::optional<std::uint64_t> known_subkey,
                                   const LocateStrategy &strategy);

} // namespace mlpa
