#pragma once

// Deterministic synthetic datasets standing in for the public corpora the workbench is
// usually pointed at: a Spambase-shaped spam table and 28x28 renderings of the digits 6 and 8.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/random.hpp"

namespace poisonlab::synth {

/// Two isotropic Gaussian blobs in the plane: label -1 around (-separation/2, 0), label +1
/// around (+separation/2, 0). Classes alternate in row order.
inline Dataset two_gaussians(std::size_t n, double separation, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Instance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i % 2 == 0 ? Label::Negative : Label::Positive;
    const double cx = 0.5 * separation * to_int(label);
    out.push_back(Instance{i, {rng.normal(cx, sigma), rng.normal(0.0, sigma)}, label, Provenance::Original});
  }
  return Dataset(std::move(out), {"x0", "x1"});
}

/// Isotropic Gaussian clusters in `dim` dimensions whose centres sit `spacing` apart along
/// successive axes. Labels alternate by cluster; `cluster_of` receives the ground truth.
inline Dataset gaussian_clusters(std::size_t clusters, std::size_t per_cluster, std::size_t dim, double spacing,
                                 std::uint64_t seed, std::vector<std::size_t>* cluster_of = nullptr) {
  Rng rng(seed);
  std::vector<Instance> out;
  std::vector<std::string> names;
  for (std::size_t f = 0; f < dim; ++f) names.push_back("x" + std::to_string(f));
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t i = 0; i < per_cluster; ++i) {
      std::vector<double> x(dim);
      for (auto& v : x) v = rng.normal();
      x[c % dim] += spacing * static_cast<double>(c / dim + 1);
      out.push_back(Instance{out.size(), std::move(x), c % 2 == 0 ? Label::Negative : Label::Positive,
                             Provenance::Original});
      if (cluster_of) cluster_of->push_back(c);
    }
  }
  return Dataset(std::move(out), std::move(names));
}

inline const std::vector<std::string>& spambase_feature_names() {
  static const std::vector<std::string> names = [] {
    const char* words[] = {"make",     "address", "all",    "3d",      "our",        "over",    "remove",
                           "internet", "order",   "mail",   "receive", "will",       "people",  "report",
                           "addresses", "free",   "business", "email", "you",        "credit",  "your",
                           "font",     "000",     "money",  "hp",      "hpl",        "george",  "650",
                           "lab",      "labs",    "telnet", "857",     "data",       "415",     "85",
                           "technology", "1999",  "parts",  "pm",      "direct",     "cs",      "meeting",
                           "original", "project", "re",     "edu",     "table",      "conference"};
    std::vector<std::string> out;
    for (const char* w : words) out.push_back(std::string("word_freq_") + w);
    for (const char* c : {"semicolon", "paren", "bracket", "exclamation", "dollar", "hash"}) {
      out.push_back(std::string("char_freq_") + c);
    }
    out.push_back("capital_run_length_average");
    out.push_back("capital_run_length_longest");
    out.push_back("capital_run_length_total");
    return out;
  }();
  return names;
}

/// Spambase-shaped table: 57 non-negative columns (48 word frequencies, 6 character
/// frequencies, 3 capital-run statistics), 2788 non-spam (-1) and 1813 spam (+1) rows.
/// Each frequency column is zero-inflated and exponential, with class-dependent presence
/// rates and means; a shared per-message "style" factor makes the classes overlap.
inline Dataset spambase_like(std::uint64_t seed, std::size_t n_ham = 2788, std::size_t n_spam = 1813) {
  Rng rng(seed);
  constexpr std::size_t kFreq = 54;
  std::array<double, kFreq> ham_rate{}, spam_rate{}, ham_mean{}, spam_mean{};
  Rng profile_rng(mix_seed(seed, 0xC0FFEE));
  for (std::size_t f = 0; f < kFreq; ++f) {
    const double base = profile_rng.uniform(0.05, 0.35);
    const double base_mean = profile_rng.uniform(0.1, 0.8);
    // About a third of the columns lean spammy, a third hammy, the rest carry little signal.
    const double lean = profile_rng.uniform(-1.0, 1.0);
    const double strength = std::abs(lean) < 0.33 ? 0.1 : 1.0;
    spam_rate[f] = std::clamp(base * (1.0 + strength * lean * 1.5), 0.01, 0.9);
    ham_rate[f] = std::clamp(base * (1.0 - strength * lean * 1.5), 0.01, 0.9);
    spam_mean[f] = base_mean * (1.0 + 0.5 * strength * lean);
    ham_mean[f] = base_mean * (1.0 - 0.5 * strength * lean);
  }

  std::vector<Instance> out;
  out.reserve(n_ham + n_spam);
  std::vector<Label> labels;
  labels.insert(labels.end(), n_ham, Label::Negative);
  labels.insert(labels.end(), n_spam, Label::Positive);
  rng.shuffle(std::span<Label>(labels));

  for (Label label : labels) {
    const bool spam = label == Label::Positive;
    // Style in [0, 1]: how spam-like the message reads, drawn from overlapping class profiles.
    const double style = std::clamp(rng.normal(spam ? 0.74 : 0.26, 0.15), 0.0, 1.0);
    std::vector<double> x(57, 0.0);
    for (std::size_t f = 0; f < kFreq; ++f) {
      const double rate = ham_rate[f] + style * (spam_rate[f] - ham_rate[f]);
      const double mean = ham_mean[f] + style * (spam_mean[f] - ham_mean[f]);
      if (rng.uniform() < rate) x[f] = std::round(-mean * std::log(1.0 - rng.uniform()) * 100.0) / 100.0;
    }
    const double avg = std::exp(rng.normal(0.8 + 0.9 * style, 0.45));
    const double longest = std::round(avg * std::exp(rng.normal(1.2 + 1.0 * style, 0.6)));
    const double total = std::round(longest * std::exp(rng.normal(1.8 + 0.8 * style, 0.7)));
    x[54] = std::round(std::max(1.0, avg) * 1000.0) / 1000.0;
    x[55] = std::max(1.0, longest);
    x[56] = std::max(x[55], total);
    out.push_back(Instance{out.size(), std::move(x), label, Provenance::Original});
  }
  return Dataset(std::move(out), spambase_feature_names());
}

namespace detail {

struct Canvas {
  static constexpr int kSide = 28;
  std::array<double, kSide * kSide> ink{};

  // Soft round brush centred at (x, y) in pixel units.
  void stamp(double x, double y, double radius) {
    const int x0 = std::max(0, static_cast<int>(std::floor(x - radius - 1)));
    const int x1 = std::min(kSide - 1, static_cast<int>(std::ceil(x + radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(y - radius - 1)));
    const int y1 = std::min(kSide - 1, static_cast<int>(std::ceil(y + radius + 1)));
    for (int py = y0; py <= y1; ++py) {
      for (int px = x0; px <= x1; ++px) {
        const double d = std::hypot(px + 0.5 - x, py + 0.5 - y);
        const double v = std::clamp(radius + 0.5 - d, 0.0, 1.0);
        auto& cell = ink[static_cast<std::size_t>(py * kSide + px)];
        cell = std::max(cell, v);
      }
    }
  }
};

// Glyph geometry in a unit box (x right, y down), mapped through a jittered affine transform.
struct Pen {
  double cx, cy, scale, slant, radius;
  Canvas* canvas;

  void arc(double ox, double oy, double rx, double ry, double from, double to) const {
    const int steps = 80;
    for (int s = 0; s <= steps; ++s) {
      const double t = from + (to - from) * s / steps;
      const double ux = ox + rx * std::cos(t);
      const double uy = oy + ry * std::sin(t);
      const double px = cx + scale * (ux + slant * (0.5 - uy));
      const double py = cy + scale * (uy - 0.5);
      canvas->stamp(px, py, radius);
    }
  }
};

}  // namespace detail

/// 28x28 grey-level (0..255) renderings of handwritten-style 6s (+1) and 8s (-1) with random
/// position, size, slant, stroke width, loop proportions and sensor noise.
inline Dataset digits_like(std::size_t per_class, std::uint64_t seed) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kSloppy = 0.25;
  Rng rng(seed);
  std::vector<Instance> out;
  out.reserve(2 * per_class);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool six = i % 2 == 0;
    detail::Canvas canvas;
    detail::Pen pen{14.0 + rng.normal(0.0, 1.2), 14.0 + rng.normal(0.0, 1.0), 19.0 * rng.uniform(0.85, 1.1),
                    rng.normal(0.0, 0.18), rng.uniform(0.9, 1.7), &canvas};
    if (six) {
      const double loop_r = rng.uniform(0.19, 0.26);
      const double loop_y = 0.72 + rng.normal(0.0, 0.03);
      pen.arc(0.5, loop_y, loop_r, loop_r * rng.uniform(0.8, 1.0), 0.0, 2.0 * kPi);
      // Stem sweeping from the loop's left side up to the top right.
      const double stem_r = rng.uniform(0.45, 0.6);
      pen.arc(0.5 + stem_r - loop_r, loop_y, stem_r, loop_y - 0.05, kPi, kPi * rng.uniform(1.35, 1.55));
      // Some writers curl the stem back down into a partial upper loop.
      if (rng.uniform() < kSloppy) {
        const double r = rng.uniform(0.14, 0.2);
        pen.arc(0.5, loop_y - loop_r - r, r, r, -0.5 * kPi, -0.5 * kPi + kPi * rng.uniform(0.6, 1.9));
      }
    } else {
      const double top_r = rng.uniform(0.16, 0.22);
      const double bottom_r = rng.uniform(0.2, 0.26);
      const double waist = 0.5 + rng.normal(0.0, 0.03);
      // Upper loop, sometimes left open on its right-hand side.
      const double gap = rng.uniform() < kSloppy ? kPi * rng.uniform(0.4, 1.7) : 0.0;
      pen.arc(0.5 + rng.normal(0.0, 0.02), waist - top_r, top_r * rng.uniform(0.85, 1.1), top_r, gap / 2.0,
              2.0 * kPi - gap / 2.0);
      pen.arc(0.5, waist + bottom_r, bottom_r * rng.uniform(0.9, 1.15), bottom_r, 0.0, 2.0 * kPi);
    }
    std::vector<double> pixels(canvas.ink.size());
    for (std::size_t p = 0; p < pixels.size(); ++p) {
      double v = canvas.ink[p];
      if (v > 0.0) v = std::clamp(v + rng.normal(0.0, 0.08), 0.0, 1.0);
      pixels[p] = std::round(255.0 * v);
    }
    out.push_back(Instance{out.size(), std::move(pixels), six ? Label::Positive : Label::Negative,
                           Provenance::Original});
  }
  std::vector<std::string> names;
  for (int r = 0; r < detail::Canvas::kSide; ++r) {
    for (int c = 0; c < detail::Canvas::kSide; ++c) names.push_back("px_" + std::to_string(r) + "_" + std::to_string(c));
  }
  return Dataset(std::move(out), std::move(names));
}

}  // namespace poisonlab::synth
