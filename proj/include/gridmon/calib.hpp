#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmon/measurement.hpp"

namespace gridmon::calib {

struct CalibError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Requested instant lies outside the series' covered range.
struct ExtrapolationError : CalibError {
  using CalibError::CalibError;
};
/// No sample available where at least one is required.
struct NoDataError : CalibError {
  using CalibError::CalibError;
};
/// Aggregation window holds fewer samples than the method needs.
struct InsufficientWindowError : CalibError {
  using CalibError::CalibError;
};
/// Plug and reference series share no time span.
struct NoOverlapError : CalibError {
  using CalibError::CalibError;
};
struct NormalityTestError : CalibError {
  using CalibError::CalibError;
};

struct Sample {
  std::int64_t timestamp_ns = 0;
  double volts = 0.0;
};

/// One device's readings, strictly increasing in time.
class Series {
 public:
  Series() = default;
  explicit Series(std::vector<Sample> samples);

  void push_back(std::int64_t timestamp_ns, double volts);
  const std::vector<Sample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }

  /// `timestamp,volts` with nanosecond timestamps.
  static Series from_csv(const std::string& text);
  std::string to_csv() const;

  static Series from_measurements(const std::vector<Measurement>& measurements,
                                  const std::string& device_id);

 private:
  std::vector<Sample> samples_;
};

enum class Method { Last, Interp10s, TrimmedMean1min, Mean15min };

const char* method_name(Method method);
std::optional<Method> method_from_name(const std::string& name);
inline constexpr Method kAllMethods[] = {Method::Last, Method::Interp10s,
                                         Method::TrimmedMean1min, Method::Mean15min};

/// Value of the latest sample at or before t.
double last_before(const Series& s, std::int64_t t_ns);

/// Linear interpolation between the samples bracketing t; exact timestamps
/// return that sample's value. Refuses to extrapolate.
double interpolate_at(const Series& s, std::int64_t t_ns);

/// Mean over the window (t-60 s, t] after dropping one minimum and one
/// maximum occurrence; needs at least 3 samples in the window.
double trimmed_mean_1min(const Series& s, std::int64_t t_ns);

/// Plain mean over the window (t-900 s, t]; needs a non-empty window.
double mean_15min(const Series& s, std::int64_t t_ns);

struct DiffSample {
  std::int64_t timestamp_ns = 0;
  double diff_v = 0.0;  // plug-derived estimate minus reference value
  Method method = Method::Last;
};

/// Evaluates the method at every reference timestamp and subtracts the
/// reference value. Mean15min averages BOTH series over the trailing window.
/// Timestamps whose window is incomplete (series starts inside it, too few
/// samples, no plug sample yet) are skipped, not errors.
std::vector<DiffSample> paired_differences(const Series& plug, const Series& ref,
                                           Method method);

/// Mean difference: the constant-bias estimate.
double estimate_offset(const std::vector<DiffSample>& diffs);

/// Subtracts offset_v from every value; timestamps unchanged.
Series apply_offset(const Series& s, double offset_v);

/// Nearest-rank 95th percentile of |diff - mean diff|. Centering on the mean
/// makes the statistic invariant under constant offsets.
double accuracy_p95(const std::vector<DiffSample>& diffs);

/// Fixed-width bins centered on multiples of bin_width. Bins between the
/// lowest and highest occupied bin are present even when empty, so gaps in
/// the value set show up as zero counts.
struct Histogram {
  double bin_width = 0.1;
  long long first_bin = 0;  // counts[i] belongs to center (first_bin + i) * bin_width
  std::vector<long long> counts;

  double center(std::size_t i) const {
    return static_cast<double>(first_bin + static_cast<long long>(i)) * bin_width;
  }
  long long total() const;
};

Histogram histogram(const std::vector<double>& values, double bin_width);

struct NormalityResult {
  double a2_star = 0.0;
  bool reject_at_5pct = false;
};

/// Anderson-Darling test against a normal distribution with estimated mean
/// and variance; the statistic carries the small-sample correction
/// (1 + 4/n - 25/n^2) and is compared to the 5% critical value 0.752.
NormalityResult anderson_darling_normality(const std::vector<double>& values);

/// Classic sample correlation; returns 0 when either side has zero
/// variance (no linear association measurable).
double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gridmon::calib
