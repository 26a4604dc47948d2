#pragma once

// Residue-class acceleration of T. For a window n, the first n parities of
// m depend only on m mod 2^n, so every m = r (mod 2^n) satisfies
//
//   T^n(m) = (3^c * m + d) / 2^n
//
// with c the number of odd steps and d = 3^c 2^n r_n(m), an integer in
// [0, 3^c 2^n). The table stores (c, d) per residue.

#include "collatz_lab/closed_form.hpp"
#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/parallel.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace collatz_lab {

inline constexpr unsigned kDefaultMaxWindow = 24;
inline constexpr unsigned kHardMaxWindow = 32;

class TableSizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline void check_window(unsigned n, unsigned cap) {
  if (cap > kHardMaxWindow) throw TableSizeError("window cap exceeds " + std::to_string(kHardMaxWindow));
  if (n < 1 || n > cap) {
    throw TableSizeError("window n=" + std::to_string(n) + " outside [1, " + std::to_string(cap) + "]");
  }
}

struct AffineStep {
  unsigned odd_steps = 0;  // c
  BigInt offset;           // d
  unsigned window = 0;     // n

  /// (3^c m + d) / 2^n; exact for every m in the residue class served.
  BigInt apply(const BigInt& m) const { return (pow3(odd_steps) * m + offset) >> window; }
  friend bool operator==(const AffineStep&, const AffineStep&) = default;
};

namespace detail {

// One step of the offset recurrence: after an odd step at index i,
// d <- 3d + 2^i. Returns false when the 128-bit slot would overflow.
inline bool offset_step(u128& d, unsigned i) noexcept {
  u128 t;
  if (__builtin_mul_overflow(d, static_cast<u128>(3), &t)) return false;
  if (i >= 128) return false;
  return !__builtin_add_overflow(t, static_cast<u128>(1) << i, &d);
}

struct RawEntry {
  unsigned odd = 0;
  std::uint32_t parity = 0;
  u128 offset = 0;
  std::optional<BigInt> wide;  // set when offset does not fit 128 bits
};

inline RawEntry compute_entry(std::uint64_t residue, unsigned n) {
  RawEntry e;
  OrbitValue x(residue == 0 ? (std::uint64_t{1} << n) : residue);
  for (unsigned i = 0; i < n; ++i) {
    if (x.odd()) {
      e.parity |= std::uint32_t{1} << i;
      ++e.odd;
      if (e.wide) {
        *e.wide = 3 * *e.wide + pow2(i);
      } else if (!offset_step(e.offset, i)) {
        e.wide = 3 * to_big(e.offset) + pow2(i);
      }
    }
    x.t_step();
  }
  return e;
}

}  // namespace detail

class StepTable {
 public:
  unsigned window() const noexcept { return n_; }
  std::size_t size() const noexcept { return odd_.size(); }

  unsigned odd_steps(std::uint64_t residue) const { return odd_.at(residue) & 0x7fu; }
  bool offset_overflowed(std::uint64_t residue) const { return (odd_.at(residue) & 0x80u) != 0; }
  std::uint32_t parity_mask(std::uint64_t residue) const { return parity_.at(residue); }
  ParityVector parity(std::uint64_t residue) const { return ParityVector::from_mask(parity_mask(residue), n_); }

  BigInt offset(std::uint64_t residue) const {
    if (offset_overflowed(residue)) return wide_.at(static_cast<std::uint32_t>(residue));
    return to_big(offset_.at(residue));
  }
  /// The 128-bit slot; zero for overflowed entries.
  u128 offset_slot(std::uint64_t residue) const { return offset_.at(residue); }

  AffineStep entry(std::uint64_t residue) const { return {odd_steps(residue), offset(residue), n_}; }

  /// T^n(m) in place: one residue lookup, one multiply-add, one shift.
  void advance_in_place(BigInt& m) const {
    const std::uint64_t r = low_bits(m, n_);
    const std::uint8_t tag = odd_[r];
    mpz_ptr z = detail::raw(m);
    mpz_mul_ui(z, z, static_cast<unsigned long>(pow3_[tag & 0x7fu]));
    if (tag & 0x80u) {
      m += wide_.at(static_cast<std::uint32_t>(r));
    } else {
      const u128 d = offset_[r];
      if ((d >> 64) == 0) {
        mpz_add_ui(z, z, static_cast<unsigned long>(d));
      } else {
        m += to_big(d);
      }
    }
    mpz_fdiv_q_2exp(z, z, n_);
  }

  BigInt advance(const BigInt& m) const {
    if (sign(m) <= 0) throw PreconditionError("batch_advance: m must be >= 1");
    BigInt r = m;
    advance_in_place(r);
    return r;
  }

  /// Word-sized variant; nullopt if the result (or an intermediate) needs
  /// more than 64 bits.
  std::optional<std::uint64_t> advance(std::uint64_t m) const {
    const std::uint64_t r = m & mask_;
    const std::uint8_t tag = odd_[r];
    if (tag & 0x80u) return std::nullopt;
    u128 v;
    if (__builtin_mul_overflow(static_cast<u128>(m), static_cast<u128>(pow3_[tag]), &v) ||
        __builtin_add_overflow(v, offset_[r], &v)) {
      return std::nullopt;
    }
    v >>= n_;
    if ((v >> 64) != 0) return std::nullopt;
    return static_cast<std::uint64_t>(v);
  }

 private:
  friend StepTable build_table(unsigned, unsigned, unsigned);
  friend std::optional<StepTable> read_table_cache(const std::filesystem::path&, unsigned);

  explicit StepTable(unsigned n)
      : n_(n),
        mask_((std::uint64_t{1} << n) - 1),
        odd_(std::size_t{1} << n),
        offset_(std::size_t{1} << n),
        parity_(std::size_t{1} << n) {
    std::uint64_t p = 1;
    for (unsigned c = 0; c <= n; ++c, p *= 3) pow3_[c] = p;
  }

  void store(std::uint64_t r, const detail::RawEntry& e) {
    odd_[r] = static_cast<std::uint8_t>(e.odd | (e.wide ? 0x80u : 0u));
    offset_[r] = e.wide ? 0 : e.offset;
    parity_[r] = e.parity;
  }

  unsigned n_;
  std::uint64_t mask_;
  std::vector<std::uint8_t> odd_;  // low 7 bits: c; bit 7: offset kept in wide_
  std::vector<u128> offset_;
  std::vector<std::uint32_t> parity_;
  std::map<std::uint32_t, BigInt> wide_;
  std::array<std::uint64_t, kHardMaxWindow + 1> pow3_{};
};

/// Builds the table for window n by running n exact steps on each residue's
/// representative (2^n stands in for residue 0). Contents do not depend on
/// the number of threads.
inline StepTable build_table(unsigned n, unsigned max_window = kDefaultMaxWindow, unsigned threads = 0) {
  check_window(n, max_window);
  StepTable t(n);
  const auto chunks = make_chunks(0, std::uint64_t{1} << n, 1u << 14);
  std::vector<std::map<std::uint32_t, BigInt>> wide(chunks.size());
  for_each_chunk(chunks, threads, [&](const Chunk& c) {
    for (std::uint64_t r = c.begin; r < c.end; ++r) {
      auto e = detail::compute_entry(r, n);
      if (e.wide) wide[c.index].emplace(static_cast<std::uint32_t>(r), *e.wide);
      t.store(r, e);
    }
  });
  for (auto& w : wide) t.wide_.merge(w);
  return t;
}

inline BigInt batch_advance(const BigInt& m, const StepTable& table) { return table.advance(m); }

namespace detail {
// Word-sized decode for in-slot offsets; nullopt if (c, d) is inconsistent.
inline std::optional<std::uint32_t> decode_parity_mask(unsigned odd_steps, u128 d, unsigned window) {
  if (window > 32 || odd_steps > window) return std::nullopt;
  std::uint32_t mask = 0;
  for (unsigned left = odd_steps; left > 0; --left) {
    if (d == 0) return std::nullopt;
    const auto lo = static_cast<std::uint64_t>(d);
    const unsigned i = lo != 0 ? static_cast<unsigned>(__builtin_ctzll(lo))
                               : 64 + static_cast<unsigned>(__builtin_ctzll(static_cast<std::uint64_t>(d >> 64)));
    if (i >= window) return std::nullopt;
    mask |= std::uint32_t{1} << i;
    u128 term = 1;
    for (unsigned j = 1; j < left; ++j) term *= 3;
    term <<= i;
    if (term > d) return std::nullopt;
    d -= term;
  }
  if (d != 0) return std::nullopt;
  return mask;
}
}  // namespace detail

/// Recovers the parity vector of a residue from (c, d) alone: the odd-step
/// indices i_1 < ... < i_c satisfy d = sum_j 3^(c-j) 2^(i_j).
inline ParityVector decode_parity(unsigned odd_steps, const BigInt& offset, unsigned window) {
  std::vector<std::uint8_t> bits(window);
  BigInt d = offset;
  for (unsigned left = odd_steps; left > 0; --left) {
    if (sign(d) <= 0) throw std::logic_error("decode_parity: inconsistent offset");
    const unsigned i = nu2(d);
    if (i >= window) throw std::logic_error("decode_parity: inconsistent offset");
    bits[i] = 1;
    d -= pow3(left - 1) * pow2(i);
  }
  if (sign(d) != 0) throw std::logic_error("decode_parity: inconsistent offset");
  return ParityVector(std::move(bits));
}

// ---------------------------------------------------------------------------
// On-disk cache. Little-endian layout:
//   "CLTZ" | version u32 | n u32 | 2^n x (c u32, d_lo u64, d_hi u64, overflow u8)
// Entries flagged as overflowed carry no offset and are recomputed on load.

inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::size_t kCacheHeaderBytes = 12;
inline constexpr std::size_t kCacheRecordBytes = 21;

namespace detail {
template <class UInt>
void put_le(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
template <class UInt>
UInt get_le(const char* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}
}  // namespace detail

inline void write_table_cache(const std::filesystem::path& path, const StepTable& t) {
  std::string buf;
  buf.reserve(kCacheHeaderBytes + kCacheRecordBytes * t.size());
  buf.append("CLTZ");
  detail::put_le<std::uint32_t>(buf, kCacheVersion);
  detail::put_le<std::uint32_t>(buf, t.window());
  for (std::uint64_t r = 0; r < t.size(); ++r) {
    const u128 d = t.offset_slot(r);
    detail::put_le<std::uint32_t>(buf, t.odd_steps(r));
    detail::put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(d));
    detail::put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(d >> 64));
    buf.push_back(t.offset_overflowed(r) ? 1 : 0);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("cannot write table cache " + path.string());
}

/// Loads a cached table for window n; nullopt when the file is missing,
/// truncated, or for a different window/version.
inline std::optional<StepTable> read_table_cache(const std::filesystem::path& path, unsigned n) {
  std::error_code ec;
  if (n < 1 || n > kHardMaxWindow || !std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  const std::size_t entries = std::size_t{1} << n;
  if (std::filesystem::file_size(path, ec) != kCacheHeaderBytes + kCacheRecordBytes * entries) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  std::string buf(kCacheHeaderBytes + kCacheRecordBytes * entries, '\0');
  if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) return std::nullopt;
  if (buf.compare(0, 4, "CLTZ") != 0 || detail::get_le<std::uint32_t>(&buf[4]) != kCacheVersion ||
      detail::get_le<std::uint32_t>(&buf[8]) != n) {
    return std::nullopt;
  }
  StepTable t(n);
  for (std::uint64_t r = 0; r < entries; ++r) {
    const char* p = buf.data() + kCacheHeaderBytes + kCacheRecordBytes * r;
    const auto c = detail::get_le<std::uint32_t>(p);
    if (c > n) return std::nullopt;
    if (p[20] != 0) {
      auto e = detail::compute_entry(r, n);
      if (e.wide) t.wide_.emplace(static_cast<std::uint32_t>(r), *e.wide);
      t.store(r, e);
      continue;
    }
    detail::RawEntry e;
    e.odd = c;
    e.offset = (static_cast<u128>(detail::get_le<std::uint64_t>(p + 12)) << 64) | detail::get_le<std::uint64_t>(p + 4);
    const auto mask = detail::decode_parity_mask(c, e.offset, n);
    if (!mask) return std::nullopt;
    // 3^c m + d must be divisible by 2^n for the class representative m
    const u128 rep = r == 0 ? (u128{1} << n) : u128{r};
    if (((t.pow3_[c] * rep + e.offset) & ((u128{1} << n) - 1)) != 0) return std::nullopt;
    e.parity = *mask;
    t.store(r, e);
  }
  return t;
}

/// Default cache location: $COLLATZ_LAB_CACHE_DIR/step_table_n<N>.bin.
inline std::optional<std::filesystem::path> default_cache_path(unsigned n) {
  const char* dir = std::getenv("COLLATZ_LAB_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return std::filesystem::path(dir) / ("step_table_n" + std::to_string(n) + ".bin");
}

/// Cache-aware construction: reuse a valid cache file, else build and write it.
inline StepTable load_or_build_table(unsigned n, std::optional<std::filesystem::path> cache,
                                     unsigned max_window = kDefaultMaxWindow, unsigned threads = 0) {
  check_window(n, max_window);
  if (!cache) cache = default_cache_path(n);
  if (cache) {
    if (auto t = read_table_cache(*cache, n)) return std::move(*t);
  }
  StepTable t = build_table(n, max_window, threads);
  if (cache) write_table_cache(*cache, t);
  return t;
}

}  // namespace collatz_lab
