#include "dedup/phash.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "dedup/error.hpp"

// The resampler and the DCT below are written so that mirrored inputs produce
// exactly mirrored (or sign-flipped) outputs in floating point, not merely up
// to rounding. The augment module's DCT-domain fast path and the soundness of
// augmented-duplicate matching both rely on that. Two rules make it work:
//   * every 1D reduction pairs the terms at both ends of its support before
//     accumulating, so reversing the input only swaps the operands of a
//     commutative addition (or negates them, for odd DCT frequencies);
//   * every 2D separable pass is evaluated in both axis orders and averaged,
//     so transposing a square input transposes the result exactly.
// Build flags must keep floating-point contraction off (see src/CMakeLists.txt).

namespace dedup {
namespace {

constexpr std::size_t N = kDctSize;

// Coverage weights of one axis of the area resampler, in units of 1/32
// source pixel. Output cell j spans [j*L, (j+1)*L) in those units.
struct AxisPlan {
  std::size_t length = 0;
  std::array<std::size_t, N> first{};
  std::array<std::vector<double>, N> weights;
};

AxisPlan make_axis_plan(std::size_t length) {
  AxisPlan plan;
  plan.length = length;
  const auto L = static_cast<std::int64_t>(length);
  for (std::size_t j = 0; j < N; ++j) {
    const std::int64_t lo = static_cast<std::int64_t>(j) * L;
    const std::int64_t hi = lo + L;
    const std::int64_t first = lo / 32;
    const std::int64_t last = (hi + 31) / 32 - 1;
    plan.first[j] = static_cast<std::size_t>(first);
    for (std::int64_t x = first; x <= last; ++x) {
      const std::int64_t overlap = std::min(32 * x + 32, hi) - std::max(32 * x, lo);
      plan.weights[j].push_back(static_cast<double>(overlap));
    }
  }
  return plan;
}

// Strided view over one row or column of a row-major buffer.
struct Line {
  const double* data;
  std::size_t stride;
  double operator[](std::size_t i) const { return data[i * stride]; }
};

void resample_line(Line in, const AxisPlan& plan, double* out, std::size_t out_stride) {
  const auto divisor = static_cast<double>(plan.length);
  for (std::size_t j = 0; j < N; ++j) {
    const auto& w = plan.weights[j];
    const std::size_t a = plan.first[j];
    const std::size_t n = w.size();
    double sum = 0.0;
    std::size_t k = 0;
    for (; k < n - 1 - k; ++k) {
      sum += in[a + k] * w[k] + in[a + n - 1 - k] * w[n - 1 - k];
    }
    if (k == n - 1 - k) {
      sum += in[a + k] * w[k];
    }
    out[j * out_stride] = sum / divisor;
  }
}

struct CosineTable {
  // c[u][x] = alpha(u) cos(pi (2x + 1) u / 2N); c[u][N-1-x] = (-1)^u c[u][x] exactly.
  std::array<std::array<double, N>, N> c{};

  CosineTable() {
    for (std::size_t u = 0; u < N; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
      for (std::size_t x = 0; x < N / 2; ++x) {
        const double angle = std::numbers::pi * static_cast<double>((2 * x + 1) * u) / (2.0 * N);
        const double value = alpha * std::cos(angle);
        c[u][x] = value;
        c[u][N - 1 - x] = (u % 2 == 0) ? value : -value;
      }
    }
  }
};

const CosineTable& cosines() {
  static const CosineTable table;
  return table;
}

// Orthonormal 1D DCT-II using the even/odd fold.
void dct_line(Line in, double* out, std::size_t out_stride) {
  const auto& c = cosines().c;
  std::array<double, N / 2> even{};
  std::array<double, N / 2> odd{};
  for (std::size_t x = 0; x < N / 2; ++x) {
    even[x] = in[x] + in[N - 1 - x];
    odd[x] = in[x] - in[N - 1 - x];
  }
  for (std::size_t u = 0; u < N; ++u) {
    const auto& folded = (u % 2 == 0) ? even : odd;
    double sum = 0.0;
    for (std::size_t x = 0; x < N / 2; ++x) {
      sum += c[u][x] * folded[x];
    }
    out[u * out_stride] = sum;
  }
}

void idct_line(Line in, double* out, std::size_t out_stride) {
  const auto& c = cosines().c;
  for (std::size_t x = 0; x < N; ++x) {
    double sum = 0.0;
    for (std::size_t u = 0; u < N; ++u) {
      sum += c[u][x] * in[u];
    }
    out[x * out_stride] = sum;
  }
}

}  // namespace

std::string PerceptualHash::hex() const {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

PerceptualHash PerceptualHash::from_hex(const std::string& text) {
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos, 16);
  } catch (const std::exception&) {
    throw InvalidInput("not a hex hash: '" + text + "'");
  }
  if (pos != text.size()) {
    throw InvalidInput("not a hex hash: '" + text + "'");
  }
  return PerceptualHash{value};
}

int hamming_distance(PerceptualHash a, PerceptualHash b) {
  return std::popcount(a.bits ^ b.bits);
}

GrayImage to_grayscale(const RgbImage& img) {
  if (img.empty()) {
    throw InvalidInput("cannot convert an empty image to grayscale");
  }
  std::vector<double> values;
  values.reserve(img.pixels().size());
  for (const Rgb& p : img.pixels()) {
    const int milli = 299 * p.r + 587 * p.g + 114 * p.b;
    values.push_back(static_cast<double>(milli) / 1000.0);
  }
  return GrayImage(img.width(), img.height(), std::move(values));
}

GrayImage resize_to_32(const GrayImage& img) {
  if (img.empty()) {
    throw InvalidInput("cannot resize an empty image");
  }
  const std::size_t W = img.width();
  const std::size_t H = img.height();
  const AxisPlan horizontal = make_axis_plan(W);
  const AxisPlan vertical = make_axis_plan(H);
  const double* src = img.values().data();

  // Horizontal pass first.
  std::vector<double> rows(H * N);
  for (std::size_t y = 0; y < H; ++y) {
    resample_line({src + y * W, 1}, horizontal, rows.data() + y * N, 1);
  }
  std::vector<double> hv(N * N);
  for (std::size_t j = 0; j < N; ++j) {
    resample_line({rows.data() + j, N}, vertical, hv.data() + j, N);
  }

  // Vertical pass first.
  std::vector<double> cols(N * W);
  for (std::size_t x = 0; x < W; ++x) {
    resample_line({src + x, W}, vertical, cols.data() + x, W);
  }
  std::vector<double> vh(N * N);
  for (std::size_t i = 0; i < N; ++i) {
    resample_line({cols.data() + i * W, 1}, horizontal, vh.data() + i * N, 1);
  }

  std::vector<double> out(N * N);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (hv[i] + vh[i]) * 0.5;
  }
  return GrayImage(N, N, std::move(out));
}

DctBlock dct2d(const GrayImage& img) {
  if (img.width() != N || img.height() != N) {
    throw InvalidInput("dct2d expects a 32x32 image, got " + std::to_string(img.width()) + "x" +
                       std::to_string(img.height()));
  }
  const double* src = img.values().data();
  std::array<double, N * N> tmp{};

  // Rows first: tmp(y, v), then columns.
  DctBlock rows_first;
  for (std::size_t y = 0; y < N; ++y) {
    dct_line({src + y * N, 1}, tmp.data() + y * N, 1);
  }
  for (std::size_t v = 0; v < N; ++v) {
    dct_line({tmp.data() + v, N}, rows_first.values.data() + v, N);
  }

  // Columns first: tmp(u, x), then rows.
  DctBlock cols_first;
  for (std::size_t x = 0; x < N; ++x) {
    dct_line({src + x, N}, tmp.data() + x, N);
  }
  for (std::size_t u = 0; u < N; ++u) {
    dct_line({tmp.data() + u * N, 1}, cols_first.values.data() + u * N, 1);
  }

  DctBlock out;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (rows_first.values[i] + cols_first.values[i]) * 0.5;
  }
  return out;
}

GrayImage inverse_dct2d(const DctBlock& block) {
  std::array<double, N * N> tmp{};
  for (std::size_t u = 0; u < N; ++u) {
    idct_line({block.values.data() + u * N, 1}, tmp.data() + u * N, 1);
  }
  std::vector<double> out(N * N);
  for (std::size_t x = 0; x < N; ++x) {
    idct_line({tmp.data() + x, N}, out.data() + x, N);
  }
  return GrayImage(N, N, std::move(out));
}

LowFreqBlock low_freq(const DctBlock& block) {
  LowFreqBlock out;
  for (std::size_t u = 0; u < kLowFreqSize; ++u) {
    for (std::size_t v = 0; v < kLowFreqSize; ++v) {
      out(u, v) = block(u, v);
    }
  }
  return out;
}

PerceptualHash threshold_hash(const LowFreqBlock& block) {
  double sum = 0.0;
  for (double value : block.values) {
    sum += value;
  }
  const double mean = sum / static_cast<double>(block.values.size());
  PerceptualHash hash;
  for (std::size_t u = 0; u < kLowFreqSize; ++u) {
    for (std::size_t v = 0; v < kLowFreqSize; ++v) {
      if (block(u, v) > mean) {
        hash.bits |= std::uint64_t{1} << PerceptualHash::bit_index(u, v);
      }
    }
  }
  return hash;
}

LowFreqBlock low_freq_block(const RgbImage& img) {
  return low_freq(dct2d(resize_to_32(to_grayscale(img))));
}

PerceptualHash compute_phash(const RgbImage& img) {
  return threshold_hash(low_freq_block(img));
}

}  // namespace dedup
