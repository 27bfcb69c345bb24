#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poisonlab/random.hpp"

namespace poisonlab {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label : int { Negative = -1, Positive = 1 };

inline constexpr Label opposite(Label label) {
  return label == Label::Positive ? Label::Negative : Label::Positive;
}

inline constexpr int to_int(Label label) { return static_cast<int>(label); }

enum class Provenance { Original, Poisoned };

inline constexpr std::string_view to_string(Provenance p) {
  return p == Provenance::Original ? "original" : "poisoned";
}

struct Instance {
  std::size_t id = 0;
  std::vector<double> features;
  Label label = Label::Negative;
  Provenance provenance = Provenance::Original;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Per-feature affine map to zero mean and unit variance.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::vector<double> apply(std::span<const double> raw) const {
    std::vector<double> out(raw.size());
    for (std::size_t f = 0; f < raw.size(); ++f) out[f] = (raw[f] - mean[f]) / stddev[f];
    return out;
  }

  std::vector<double> invert(std::span<const double> scaled) const {
    std::vector<double> out(scaled.size());
    for (std::size_t f = 0; f < scaled.size(); ++f) out[f] = scaled[f] * stddev[f] + mean[f];
    return out;
  }

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

/// Immutable, ordered collection of labelled instances sharing one dimensionality.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<Instance> instances, std::vector<std::string> feature_names,
          std::optional<Standardization> standardization = std::nullopt,
          std::vector<std::size_t> source_ids = {})
      : instances_(std::move(instances)),
        feature_names_(std::move(feature_names)),
        standardization_(std::move(standardization)),
        source_ids_(std::move(source_ids)) {
    const std::size_t d = feature_names_.size();
    index_.reserve(instances_.size());
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      const Instance& inst = instances_[i];
      if (inst.features.size() != d) {
        throw DataError("instance " + std::to_string(inst.id) + " has " +
                        std::to_string(inst.features.size()) + " features, expected " +
                        std::to_string(d));
      }
      if (inst.label != Label::Negative && inst.label != Label::Positive) {
        throw DataError("instance " + std::to_string(inst.id) + " has a label outside {-1,+1}");
      }
      if (!index_.emplace(inst.id, i).second) {
        throw DataError("duplicate instance id " + std::to_string(inst.id));
      }
    }
    if (standardization_) {
      if (standardization_->mean.size() != d || standardization_->stddev.size() != d) {
        throw DataError("standardization vectors do not match dimensionality");
      }
      for (double s : standardization_->stddev) {
        if (!(s > 0.0)) throw DataError("standardization stddev must be positive");
      }
    }
    if (!source_ids_.empty() && source_ids_.size() != instances_.size()) {
      throw DataError("source id map does not match instance count");
    }
  }

  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  std::size_t dim() const { return feature_names_.size(); }

  const std::vector<Instance>& instances() const { return instances_; }
  const Instance& operator[](std::size_t pos) const { return instances_[pos]; }
  auto begin() const { return instances_.begin(); }
  auto end() const { return instances_.end(); }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::optional<Standardization>& standardization() const { return standardization_; }

  /// Original ids before subsampling, aligned with instance order; empty when not subsampled.
  const std::vector<std::size_t>& source_ids() const { return source_ids_; }

  std::optional<std::size_t> position_of(std::size_t id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const Instance& by_id(std::size_t id) const {
    const auto pos = position_of(id);
    if (!pos) throw DataError("unknown instance id " + std::to_string(id));
    return instances_[*pos];
  }

  std::size_t count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        instances_.begin(), instances_.end(), [label](const Instance& i) { return i.label == label; }));
  }

  std::size_t max_id() const {
    std::size_t m = 0;
    for (const auto& inst : instances_) m = std::max(m, inst.id);
    return m;
  }

  Dataset with_appended(std::span<const Instance> extra) const {
    std::vector<Instance> all = instances_;
    all.insert(all.end(), extra.begin(), extra.end());
    return Dataset(std::move(all), feature_names_, standardization_);
  }

  Dataset without_id(std::size_t id) const {
    std::vector<Instance> kept;
    kept.reserve(instances_.size());
    for (const auto& inst : instances_) {
      if (inst.id != id) kept.push_back(inst);
    }
    if (kept.size() == instances_.size()) throw DataError("unknown instance id " + std::to_string(id));
    return Dataset(std::move(kept), feature_names_, standardization_);
  }

  /// Features mapped back to the input scale (identity when not standardized).
  std::vector<double> raw_features(std::span<const double> features) const {
    if (!standardization_) return {features.begin(), features.end()};
    return standardization_->invert(features);
  }

 private:
  std::vector<Instance> instances_;
  std::vector<std::string> feature_names_;
  std::optional<Standardization> standardization_;
  std::vector<std::size_t> source_ids_;
  std::unordered_map<std::size_t, std::size_t> index_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return value;
}

inline std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses CSV text with a header row. Columns named `id` and `provenance`, when present,
/// are read back as instance metadata so that exported datasets round-trip.
inline Dataset parse_csv(std::istream& in, std::string_view label_column, std::string_view positive_value,
                         std::string_view negative_value, std::string_view source_name = "<input>") {
  const std::string where = std::string(source_name);
  std::string line;
  if (!std::getline(in, line)) throw DataError(where + ": empty file, header row required");

  std::vector<std::string> header;
  for (auto cell : detail::split_row(line)) header.emplace_back(cell);
  std::optional<std::size_t> label_col, id_col, prov_col;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_col = c;
    } else if (header[c] == "id") {
      id_col = c;
    } else if (header[c] == "provenance") {
      prov_col = c;
    } else {
      feature_cols.push_back(c);
      feature_names.emplace_back(header[c]);
    }
  }
  if (!label_col) throw DataError(where + ": label column '" + std::string(label_column) + "' not found");

  std::vector<Instance> instances;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_row(line);
    const auto locate = [&](std::size_t col) {
      return where + ": line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) + " ('" +
             std::string(header[col]) + "')";
    };
    if (cells.size() != header.size()) {
      throw DataError(where + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, header has " + std::to_string(header.size()));
    }
    Instance inst;
    inst.id = instances.size();
    const std::string_view label_cell = cells[*label_col];
    if (label_cell == positive_value) {
      inst.label = Label::Positive;
    } else if (label_cell == negative_value) {
      inst.label = Label::Negative;
    } else {
      throw DataError(locate(*label_col) + ": unknown label value '" + std::string(label_cell) + "'");
    }
    inst.features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      const auto value = detail::parse_double(cells[c]);
      if (!value) throw DataError(locate(c) + ": non-numeric value '" + std::string(cells[c]) + "'");
      inst.features.push_back(*value);
    }
    if (id_col) {
      const auto id = detail::parse_double(cells[*id_col]);
      if (!id || *id < 0 || std::floor(*id) != *id) throw DataError(locate(*id_col) + ": invalid id");
      inst.id = static_cast<std::size_t>(*id);
    }
    if (prov_col) {
      const std::string_view p = cells[*prov_col];
      if (p == "original") {
        inst.provenance = Provenance::Original;
      } else if (p == "poisoned") {
        inst.provenance = Provenance::Poisoned;
      } else {
        throw DataError(locate(*prov_col) + ": unknown provenance '" + std::string(p) + "'");
      }
    }
    instances.push_back(std::move(inst));
  }
  if (instances.size() < 2) throw DataError(where + ": at least 2 data rows required");
  return Dataset(std::move(instances), std::move(feature_names));
}

inline Dataset load_csv(const std::string& path, std::string_view label_column, std::string_view positive_value,
                        std::string_view negative_value) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  return parse_csv(in, label_column, positive_value, negative_value, path);
}

/// Writes id, features (raw scale), label (1/-1) and provenance columns.
inline void write_csv(std::ostream& out, const Dataset& dataset) {
  out << "id";
  for (const auto& name : dataset.feature_names()) out << ',' << name;
  out << ",label,provenance\n";
  for (const auto& inst : dataset) {
    out << inst.id;
    for (double v : dataset.raw_features(inst.features)) out << ',' << detail::format_double(v);
    out << ',' << to_int(inst.label) << ',' << to_string(inst.provenance) << '\n';
  }
}

inline void export_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_csv(out, dataset);
}

/// Draws n instances keeping the class proportions: each class receives
/// floor(n * fraction) seats and the leftover seat goes to the majority class.
inline Dataset stratified_subsample(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
  if (n > dataset.size()) {
    throw DataError("subsample size " + std::to_string(n) + " exceeds population " + std::to_string(dataset.size()));
  }
  std::vector<std::size_t> negatives, positives;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].label == Label::Positive ? positives : negatives).push_back(i);
  }
  if (negatives.empty() || positives.empty()) throw DataError("subsampling requires both classes");

  const std::size_t total = dataset.size();
  std::size_t n_pos = n * positives.size() / total;
  std::size_t n_neg = n * negatives.size() / total;
  const std::size_t remainder = n - n_pos - n_neg;
  if (positives.size() > negatives.size()) {
    n_pos += remainder;
  } else {
    n_neg += remainder;
  }
  if (n_pos == 0 || n_neg == 0) throw DataError("subsample of " + std::to_string(n) + " would leave a class empty");

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (auto* group : {&negatives, &positives}) {
    rng.shuffle(std::span<std::size_t>(*group));
    const std::size_t take = group == &positives ? n_pos : n_neg;
    chosen.insert(chosen.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<Instance> out;
  std::vector<std::size_t> source;
  out.reserve(n);
  source.reserve(n);
  for (std::size_t pos : chosen) {
    Instance inst = dataset[pos];
    source.push_back(inst.id);
    inst.id = out.size();
    out.push_back(std::move(inst));
  }
  return Dataset(std::move(out), dataset.feature_names(), dataset.standardization(), std::move(source));
}

/// Per-feature mean and population stddev of the given instances.
inline Standardization fit_standardization(const Dataset& dataset) {
  const std::size_t d = dataset.dim();
  const double n = static_cast<double>(dataset.size());
  Standardization st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& inst : dataset) {
    for (std::size_t f = 0; f < d; ++f) st.mean[f] += inst.features[f];
  }
  for (auto& m : st.mean) m /= n;
  for (const auto& inst : dataset) {
    for (std::size_t f = 0; f < d; ++f) {
      const double diff = inst.features[f] - st.mean[f];
      st.stddev[f] += diff * diff;
    }
  }
  for (std::size_t f = 0; f < d; ++f) {
    const double sd = std::sqrt(st.stddev[f] / n);
    // Relative guard: a column of identical values may still leave rounding noise in the mean.
    if (sd > 1e-12 * std::max(1.0, std::abs(st.mean[f]))) {
      st.stddev[f] = sd;
    } else {
      st.mean[f] = 0.0;  // constant columns pass through unchanged
      st.stddev[f] = 1.0;
    }
  }
  return st;
}

inline Dataset standardize(const Dataset& dataset) {
  if (dataset.empty()) throw DataError("cannot standardize an empty dataset");
  if (dataset.standardization()) throw DataError("dataset is already standardized");
  Standardization st = fit_standardization(dataset);
  std::vector<Instance> out = dataset.instances();
  for (auto& inst : out) inst.features = st.apply(inst.features);
  return Dataset(std::move(out), dataset.feature_names(), std::move(st), dataset.source_ids());
}

/// Maps a standardized dataset back to raw feature values.
inline Dataset destandardize(const Dataset& dataset) {
  if (!dataset.standardization()) return dataset;
  std::vector<Instance> out = dataset.instances();
  for (auto& inst : out) inst.features = dataset.standardization()->invert(inst.features);
  return Dataset(std::move(out), dataset.feature_names(), std::nullopt, dataset.source_ids());
}

}  // namespace poisonlab
