#pragma once

// Bulk checks of the closed form over ranges of starting values.

#include "collatz_lab/closed_form.hpp"
#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/parallel.hpp"
#include "collatz_lab/rational.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace collatz_lab {

struct VerifyReport {
  std::string name;
  std::uint64_t checked = 0;
  std::uint64_t failures = 0;
  std::optional<std::string> first_failure;  // lowest failing case in scan order

  bool ok() const noexcept { return failures == 0; }

  void merge(const VerifyReport& o) {
    checked += o.checked;
    failures += o.failures;
    if (!first_failure && o.first_failure) first_failure = o.first_failure;
  }
};

namespace detail {
inline void note_failure(VerifyReport& r, std::string what) {
  ++r.failures;
  if (!r.first_failure) r.first_failure = std::move(what);
}

template <class PerM>
VerifyReport verify_over(const char* name, std::uint64_t m_max, unsigned threads, PerM&& per_m) {
  if (m_max < 1) throw PreconditionError(std::string(name) + ": m_max must be >= 1");
  const auto chunks = make_chunks(1, m_max + 1, 64);
  VerifyReport init;
  init.name = name;
  return map_reduce_chunks(
      chunks, threads, init,
      [&](const Chunk& c) {
        VerifyReport r;
        for (std::uint64_t m = c.begin; m < c.end; ++m) per_m(m, r);
        return r;
      },
      [](VerifyReport& acc, const VerifyReport& part) { acc.merge(part); });
}
}  // namespace detail

/// closed_form(m, k) == T^k(m) for all 1 <= m <= m_max, 0 <= k <= k_max.
inline VerifyReport verify_closed_form_range(std::uint64_t m_max, std::size_t k_max, unsigned threads = 0) {
  return detail::verify_over("closed-form", m_max, threads, [k_max](std::uint64_t m, VerifyReport& r) {
    const BigInt mb(m);
    const ClosedFormSeries series(mb, k_max);
    OrbitValue x(m);
    for (std::size_t k = 0; k <= k_max; ++k) {
      ++r.checked;
      if (series.iterate(k) != x.value()) {
        detail::note_failure(r, "m=" + std::to_string(m) + " k=" + std::to_string(k));
      }
      x.t_step();
    }
  });
}

/// 0 <= r_k(m) < 1 for all 1 <= m <= m_max, 0 <= k <= k_max.
inline VerifyReport verify_remainder_bounds(std::uint64_t m_max, std::size_t k_max, unsigned threads = 0) {
  return detail::verify_over("remainder-bounds", m_max, threads, [k_max](std::uint64_t m, VerifyReport& r) {
    const ClosedFormSeries series(BigInt(m), k_max);
    const ExactRational zero, one(1);
    for (std::size_t k = 0; k <= k_max; ++k) {
      ++r.checked;
      const ExactRational rk = series.remainder(k);
      if (rk < zero || !(rk < one)) {
        detail::note_failure(r, "m=" + std::to_string(m) + " k=" + std::to_string(k) + " r=" + rk.str());
      }
    }
  });
}

/// r_{k+k0}(m) == 2^{-k} r_{k0}(m) + 3^{-S_{k0}} r_k(T^{k0} m) for all
/// 1 <= m <= m_max and 0 <= k, k0 <= k_max. Checked in the equivalent form
/// s_{k+k0}(m) == s_{k0}(m) + 2^{k0} 3^{-S_{k0}} s_k(T^{k0} m), s_k = 2^k r_k.
inline VerifyReport verify_split_range(std::uint64_t m_max, std::size_t k_max, unsigned threads = 0) {
  return detail::verify_over("split", m_max, threads, [k_max](std::uint64_t m, VerifyReport& r) {
    const BigInt mb(m);
    const ClosedFormSeries whole(mb, 2 * k_max);
    OrbitValue x(m);
    for (std::size_t k0 = 0; k0 <= k_max; ++k0) {
      const ClosedFormSeries tail(x.value(), k_max);
      const ExactRational scale(pow2(k0), pow3(whole.ones(k0)));
      for (std::size_t k = 0; k <= k_max; ++k) {
        ++r.checked;
        if (whole.prefix(k + k0) != whole.prefix(k0) + tail.prefix(k) * scale) {
          detail::note_failure(r, "m=" + std::to_string(m) + " k=" + std::to_string(k) + " k0=" + std::to_string(k0));
        }
      }
      x.t_step();
    }
  });
}

}  // namespace collatz_lab
