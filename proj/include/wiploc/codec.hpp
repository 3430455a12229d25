#pragma once

// Orthogonal spreading + equidistant FEC for anchor-ID payloads.
//
// An anchor ID n is first mapped to FEC codeword n (L bits), then every FEC
// bit is spread with orthogonal code n: the code itself for a 1 bit and its
// complement for a 0 bit. With the default order (k = 4) this gives
// L = 15 blocks of 16 chips, i.e. a 240-chip / 30-byte payload.

#include "wiploc/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wiploc {

/// One chip per element, value 0 or 1.
using ChipSequence = std::vector<std::uint8_t>;

inline int hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size())
        throw InvalidParameter("hamming_distance: length mismatch");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += (a[i] != b[i]) ? 1 : 0;
    return d;
}

namespace detail {

// Row `row` of the binary Sylvester-Hadamard matrix of size n = 2^k:
// entry (i, j) is +1 (chip 1) when popcount(i & j) is even, -1 (chip 0) otherwise.
// This is the closed form of the Kronecker recursion H_{2n} = H_2 (x) H_n.
inline ChipSequence hadamard_row(std::size_t row, std::size_t n)
{
    ChipSequence out(n);
    for (std::size_t col = 0; col < n; ++col)
        out[col] = (std::popcount(row & col) % 2 == 0) ? 1 : 0;
    return out;
}

} // namespace detail

class OrthogonalCodebook {
  public:
    static constexpr int kMinOrder = 1;
    static constexpr int kMaxOrder = 8;

    explicit OrthogonalCodebook(int order_exponent)
        : order_(order_exponent)
    {
        if (order_exponent < kMinOrder || order_exponent > kMaxOrder)
            throw InvalidParameter("orthogonal codebook order must be in [1, 8], got "
                                   + std::to_string(order_exponent));
        const std::size_t n = std::size_t{1} << order_exponent;
        codes_.reserve(n);
        for (std::size_t r = 0; r < n; ++r)
            codes_.push_back(detail::hadamard_row(r, n));
    }

    int order() const noexcept { return order_; }
    std::size_t size() const noexcept { return codes_.size(); }
    std::size_t code_length() const noexcept { return codes_.size(); }
    const ChipSequence& code(std::size_t index) const { return codes_.at(index); }
    const std::vector<ChipSequence>& codes() const noexcept { return codes_; }

  private:
    int order_;
    std::vector<ChipSequence> codes_;
};

/// Equidistant codebook: Hadamard rows of order 2^k with the constant first
/// column removed. N = 2^k words of length 2^k - 1, pairwise distance 2^(k-1).
class FecCodebook {
  public:
    static constexpr int kMinOrder = 2;
    static constexpr int kMaxOrder = 8;

    explicit FecCodebook(int order_exponent)
    {
        if (order_exponent < kMinOrder || order_exponent > kMaxOrder)
            throw InvalidParameter("FEC codebook order must be in [2, 8], got "
                                   + std::to_string(order_exponent));
        const std::size_t n = std::size_t{1} << order_exponent;
        distance_ = static_cast<int>(n / 2);
        words_.reserve(n);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = detail::hadamard_row(r, n);
            words_.emplace_back(row.begin() + 1, row.end());
        }
    }

    std::size_t size() const noexcept { return words_.size(); }
    std::size_t word_length() const noexcept { return words_.front().size(); }
    int distance() const noexcept { return distance_; }
    const ChipSequence& codeword(std::size_t index) const { return words_.at(index); }
    const std::vector<ChipSequence>& codewords() const noexcept { return words_; }

  private:
    std::vector<ChipSequence> words_;
    int distance_ = 0;
};

inline OrthogonalCodebook build_orthogonal_codebook(int order_exponent)
{
    return OrthogonalCodebook(order_exponent);
}

inline FecCodebook build_fec_codebook(int order_exponent)
{
    return FecCodebook(order_exponent);
}

/// Spread payload. Chips are packed MSB-first into bytes for the wire form.
class Payload {
  public:
    Payload() = default;
    explicit Payload(ChipSequence chips)
        : chips_(std::move(chips))
    {
    }

    const ChipSequence& chips() const noexcept { return chips_; }
    ChipSequence& chips() noexcept { return chips_; }
    std::size_t size() const noexcept { return chips_.size(); }

    std::vector<std::uint8_t> to_bytes() const
    {
        std::vector<std::uint8_t> out((chips_.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < chips_.size(); ++i)
            if (chips_[i])
                out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        return out;
    }

    static Payload from_bytes(std::span<const std::uint8_t> bytes)
    {
        ChipSequence chips(bytes.size() * 8);
        for (std::size_t i = 0; i < chips.size(); ++i)
            chips[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
        return Payload(std::move(chips));
    }

    /// Lowercase hex, no separators.
    std::string to_hex() const
    {
        static constexpr std::string_view digits = "0123456789abcdef";
        std::string out;
        for (auto b : to_bytes()) {
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0x0f]);
        }
        return out;
    }

    static Payload from_hex(std::string_view hex)
    {
        if (hex.size() % 2 != 0)
            throw MalformedPayload("hex payload must have an even number of digits");
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9')
                return c - '0';
            if (c >= 'a' && c <= 'f')
                return c - 'a' + 10;
            if (c >= 'A' && c <= 'F')
                return c - 'A' + 10;
            throw MalformedPayload(std::string("invalid hex digit '") + c + "'");
        };
        std::vector<std::uint8_t> bytes;
        bytes.reserve(hex.size() / 2);
        for (std::size_t i = 0; i < hex.size(); i += 2)
            bytes.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
        return from_bytes(bytes);
    }

    friend bool operator==(const Payload&, const Payload&) = default;

  private:
    ChipSequence chips_;
};

struct DecodeResult {
    int anchor_id = 0;
    int distance = 0; ///< d_c: Hamming distance of the despread word to codeword[anchor_id]

    friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

struct DespreadResult {
    ChipSequence word;                ///< one bit per block
    std::vector<int> block_distances; ///< chip distance of each block to the code
};

inline std::size_t payload_length(const OrthogonalCodebook& orth, const FecCodebook& fec)
{
    return orth.code_length() * fec.word_length();
}

inline Payload encode(int anchor_id, const OrthogonalCodebook& orth, const FecCodebook& fec)
{
    const auto ids = static_cast<int>(std::min(orth.size(), fec.size()));
    if (anchor_id < 0 || anchor_id >= ids)
        throw InvalidParameter("anchor id " + std::to_string(anchor_id) + " outside [0, "
                               + std::to_string(ids) + ")");
    const auto& code = orth.code(static_cast<std::size_t>(anchor_id));
    const auto& word = fec.codeword(static_cast<std::size_t>(anchor_id));
    ChipSequence chips;
    chips.reserve(payload_length(orth, fec));
    for (auto bit : word)
        for (auto c : code)
            chips.push_back(bit ? c : static_cast<std::uint8_t>(c ^ 1u));
    return Payload(std::move(chips));
}

/// Block-wise correlation against one code. A block exactly half-way between
/// the code and its complement despreads to 0.
inline DespreadResult despread(const Payload& payload, std::size_t code_index,
                               const OrthogonalCodebook& orth, std::size_t blocks)
{
    const std::size_t len = orth.code_length();
    if (payload.size() != len * blocks)
        throw MalformedPayload("payload has " + std::to_string(payload.size()) + " chips, expected "
                               + std::to_string(len * blocks));
    const auto& code = orth.code(code_index);
    const int half = static_cast<int>(len / 2);
    DespreadResult out;
    out.word.resize(blocks);
    out.block_distances.resize(blocks);
    std::span<const std::uint8_t> chips(payload.chips());
    for (std::size_t b = 0; b < blocks; ++b) {
        const int d = hamming_distance(chips.subspan(b * len, len), code);
        out.block_distances[b] = d;
        out.word[b] = (d < half) ? 1 : 0;
    }
    return out;
}

inline DespreadResult despread(const Payload& payload, std::size_t code_index,
                               const OrthogonalCodebook& orth, const FecCodebook& fec)
{
    return despread(payload, code_index, orth, fec.word_length());
}

/// Tries every code; emits each candidate whose despread word is within
/// d/2 (exclusive) of its own FEC codeword. Empty result means no ID.
inline std::vector<DecodeResult> decode(const Payload& payload, const OrthogonalCodebook& orth,
                                        const FecCodebook& fec)
{
    const std::size_t ids = std::min(orth.size(), fec.size());
    if (payload.size() != payload_length(orth, fec))
        throw MalformedPayload("payload has " + std::to_string(payload.size()) + " chips, expected "
                               + std::to_string(payload_length(orth, fec)));
    std::vector<DecodeResult> out;
    for (std::size_t i = 0; i < ids; ++i) {
        const auto d = despread(payload, i, orth, fec);
        const int dc = hamming_distance(d.word, fec.codeword(i));
        if (2 * dc < fec.distance())
            out.push_back({static_cast<int>(i), dc});
    }
    return out;
}

/// Both codebooks for one order; k = 4 is the 30-byte payload layout.
struct Codec {
    explicit Codec(int order_exponent = 4)
        : orth(order_exponent), fec(order_exponent)
    {
    }

    std::size_t id_count() const noexcept { return std::min(orth.size(), fec.size()); }
    std::size_t payload_chips() const noexcept { return payload_length(orth, fec); }

    Payload encode(int anchor_id) const { return wiploc::encode(anchor_id, orth, fec); }
    std::vector<DecodeResult> decode(const Payload& p) const { return wiploc::decode(p, orth, fec); }

    OrthogonalCodebook orth;
    FecCodebook fec;
};

/// Unspread payload used when the orthogonal layer is switched off: the ID
/// byte repeated over the payload length. Only a clean CRC identifies it.
inline Payload raw_id_payload(int id, std::size_t chips)
{
    ChipSequence out(chips);
    const auto byte = static_cast<std::uint8_t>(id);
    for (std::size_t i = 0; i < chips; ++i)
        out[i] = (byte >> (7 - i % 8)) & 1u;
    return Payload(std::move(out));
}

} // namespace wiploc
