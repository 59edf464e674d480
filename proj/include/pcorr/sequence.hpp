#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pcorr/error.hpp"

namespace pcorr {

using Natural = boost::multiprecision::cpp_int;
using u128 = unsigned __int128;

namespace detail {

inline std::vector<std::uint64_t> to_limbs(const Natural& x) {
  std::vector<std::uint64_t> out;
  boost::multiprecision::export_bits(x, std::back_inserter(out), 64, false);
  if (out.empty()) out.push_back(0);
  return out;
}

inline Natural from_limbs(std::span<const std::uint64_t> limbs) {
  Natural x;
  boost::multiprecision::import_bits(x, limbs.begin(), limbs.end(), 64, false);
  return x;
}

// Three-way comparison of equal-width little-endian limb arrays.
inline int compare_limbs(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  for (std::size_t k = a.size(); k-- > 0;) {
    if (a[k] != b[k]) return a[k] < b[k] ? -1 : 1;
  }
  return 0;
}

}  // namespace detail

inline std::string to_string(u128 x) {
  if (x == 0) return "0";
  std::string s;
  while (x > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(x % 10)));
    x /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

/// Strictly increasing sequence of positive integers of any magnitude.
///
/// Elements are stored as fixed-width little-endian 64-bit limb arrays; the
/// width is the widest element. Width 1 covers everything below 2^64 and is
/// the fast path for every algorithm.
class IntegerSequence {
 public:
  IntegerSequence() = default;

  explicit IntegerSequence(std::span<const std::uint64_t> elements)
      : size_(elements.size()), width_(1), limbs_(elements.begin(), elements.end()) {
    validate();
  }

  explicit IntegerSequence(const std::vector<std::uint64_t>& elements)
      : IntegerSequence(std::span<const std::uint64_t>(elements)) {}

  explicit IntegerSequence(std::span<const Natural> elements) : size_(elements.size()) {
    std::vector<std::vector<std::uint64_t>> parts;
    parts.reserve(elements.size());
    for (const auto& e : elements) {
      if (e < 1) throw Error("sequence elements must be positive");
      parts.push_back(detail::to_limbs(e));
      width_ = std::max(width_, parts.back().size());
    }
    limbs_.assign(size_ * width_, 0);
    for (std::size_t i = 0; i < size_; ++i)
      std::copy(parts[i].begin(), parts[i].end(), limbs_.begin() + i * width_);
    validate();
  }

  explicit IntegerSequence(const std::vector<Natural>& elements)
      : IntegerSequence(std::span<const Natural>(elements)) {}

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::size_t width() const noexcept { return width_; }
  bool fits_u64() const noexcept { return width_ == 1; }

  std::span<const std::uint64_t> limbs(std::size_t i) const noexcept {
    return {limbs_.data() + i * width_, width_};
  }
  std::uint64_t u64(std::size_t i) const {
    if (!fits_u64()) throw Error("sequence element does not fit in 64 bits");
    return limbs_[i];
  }
  Natural at(std::size_t i) const { return detail::from_limbs(limbs(i)); }

  /// Throws "prefix too short" unless at least n elements exist.
  void require(std::size_t n) const {
    if (n > size_) throw Error("prefix too short");
  }

  IntegerSequence prefix(std::size_t n) const {
    require(n);
    IntegerSequence out;
    out.size_ = n;
    out.width_ = width_;
    out.limbs_.assign(limbs_.begin(), limbs_.begin() + static_cast<std::ptrdiff_t>(n * width_));
    out.shrink_width();
    return out;
  }

  /// Bits needed by the largest element.
  std::size_t bit_length() const {
    if (empty()) return 0;
    const auto top = limbs(size_ - 1);
    for (std::size_t k = width_; k-- > 0;) {
      if (top[k] != 0) return 64 * k + static_cast<std::size_t>(64 - __builtin_clzll(top[k]));
    }
    return 0;
  }

  std::vector<Natural> to_naturals() const {
    std::vector<Natural> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back(at(i));
    return out;
  }

  friend bool operator==(const IntegerSequence& a, const IntegerSequence& b) {
    return a.size_ == b.size_ && a.width_ == b.width_ && a.limbs_ == b.limbs_;
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < size_; ++i) {
      const auto cur = limbs(i);
      if (i == 0) {
        if (std::all_of(cur.begin(), cur.end(), [](std::uint64_t w) { return w == 0; }))
          throw Error("sequence elements must be positive");
      } else if (detail::compare_limbs(limbs(i - 1), cur) >= 0) {
        throw Error("sequence must be strictly increasing (index " + std::to_string(i) + ")");
      }
    }
  }

  void shrink_width() {
    std::size_t need = 1;
    if (size_ > 0) {
      const auto top = limbs(size_ - 1);
      for (std::size_t k = width_; k-- > 1;) {
        if (top[k] != 0) {
          need = k + 1;
          break;
        }
      }
    }
    if (need == width_) return;
    std::vector<std::uint64_t> packed(size_ * need);
    for (std::size_t i = 0; i < size_; ++i)
      std::copy_n(limbs_.begin() + static_cast<std::ptrdiff_t>(i * width_), need,
                  packed.begin() + static_cast<std::ptrdiff_t>(i * need));
    limbs_ = std::move(packed);
    width_ = need;
  }

  std::size_t size_ = 0;
  std::size_t width_ = 1;
  std::vector<std::uint64_t> limbs_;
};

/// Reads newline-delimited decimal integers. Blank lines and lines starting
/// with '#' are skipped. Errors carry the 1-based line number.
inline IntegerSequence read_sequence(std::istream& in) {
  std::vector<Natural> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v(line);
    while (!v.empty() && (v.back() == '\r' || v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    if (v.empty() || v.front() == '#') continue;
    if (!std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw Error("line " + std::to_string(lineno) + ": malformed integer '" + std::string(v) + "'");
    Natural x(std::string{v});
    if (x < 1) throw Error("line " + std::to_string(lineno) + ": elements must be positive");
    if (!values.empty() && x <= values.back())
      throw Error("line " + std::to_string(lineno) + ": sequence not strictly increasing");
    values.push_back(std::move(x));
  }
  return IntegerSequence(values);
}

inline void write_sequence(std::ostream& out, const IntegerSequence& seq) {
  if (seq.fits_u64()) {
    char buf[24];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto r = std::to_chars(buf, buf + sizeof buf, seq.u64(i));
      out.write(buf, r.ptr - buf);
      out.put('\n');
    }
    return;
  }
  for (std::size_t i = 0; i < seq.size(); ++i) out << seq.at(i) << '\n';
}

}  // namespace pcorr
