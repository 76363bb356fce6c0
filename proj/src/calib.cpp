#include "gridmon/calib.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridmon/util.hpp"

namespace gridmon::calib {

namespace {

constexpr std::int64_t kMinuteNs = 60LL * 1000000000LL;
constexpr std::int64_t kQuarterHourNs = 900LL * 1000000000LL;

struct SampleBefore {
  bool operator()(const Sample& s, std::int64_t t) const { return s.timestamp_ns < t; }
  bool operator()(std::int64_t t, const Sample& s) const { return t < s.timestamp_ns; }
};

/// Iterator range of samples with t_lo < timestamp <= t_hi.
std::pair<std::vector<Sample>::const_iterator, std::vector<Sample>::const_iterator>
window(const Series& s, std::int64_t t_lo, std::int64_t t_hi) {
  const auto& v = s.samples();
  return {std::upper_bound(v.begin(), v.end(), t_lo, SampleBefore{}),
          std::upper_bound(v.begin(), v.end(), t_hi, SampleBefore{})};
}

}  // namespace

Series::Series(std::vector<Sample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i)
    if (samples_[i].timestamp_ns <= samples_[i - 1].timestamp_ns)
      throw CalibError("series timestamps must be strictly increasing (index " +
                       std::to_string(i) + ")");
}

void Series::push_back(std::int64_t timestamp_ns, double volts) {
  if (!samples_.empty() && timestamp_ns <= samples_.back().timestamp_ns)
    throw CalibError("series timestamps must be strictly increasing");
  samples_.push_back({timestamp_ns, volts});
}

Series Series::from_csv(const std::string& text) {
  Series out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("timestamp", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw CalibError("series CSV line " + std::to_string(lineno) +
                       ": expected timestamp,volts");
    try {
      std::size_t used = 0;
      const std::int64_t ts = std::stoll(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument(line);
      const std::string volts_str = line.substr(comma + 1);
      used = 0;
      const double volts = std::stod(volts_str, &used);
      if (used != volts_str.size()) throw std::invalid_argument(line);
      out.push_back(ts, volts);
    } catch (const CalibError&) {
      throw;
    } catch (const std::exception&) {
      throw CalibError("series CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

std::string Series::to_csv() const {
  std::string out = "timestamp,volts\n";
  for (const auto& s : samples_)
    out += std::to_string(s.timestamp_ns) + "," + format_double(s.volts) + "\n";
  return out;
}

Series Series::from_measurements(const std::vector<Measurement>& measurements,
                                 const std::string& device_id) {
  Series out;
  for (const auto& m : measurements)
    if (m.device_id == device_id) out.push_back(m.timestamp_ns, m.voltage_v);
  return out;
}

const char* method_name(Method method) {
  switch (method) {
    case Method::Last: return "last";
    case Method::Interp10s: return "interp10s";
    case Method::TrimmedMean1min: return "trimmed1min";
    case Method::Mean15min: return "mean15min";
  }
  return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : kAllMethods)
    if (name == method_name(m)) return m;
  return std::nullopt;
}

double last_before(const Series& s, std::int64_t t_ns) {
  const auto& v = s.samples();
  const auto it = std::upper_bound(v.begin(), v.end(), t_ns, SampleBefore{});
  if (it == v.begin()) throw NoDataError("no sample at or before the requested time");
  return std::prev(it)->volts;
}

double interpolate_at(const Series& s, std::int64_t t_ns) {
  const auto& v = s.samples();
  if (v.empty() || t_ns < v.front().timestamp_ns || t_ns > v.back().timestamp_ns)
    throw ExtrapolationError("requested time outside the series range");
  const auto it = std::lower_bound(v.begin(), v.end(), t_ns, SampleBefore{});
  if (it->timestamp_ns == t_ns) return it->volts;
  const auto prev = std::prev(it);
  const double span = static_cast<double>(it->timestamp_ns - prev->timestamp_ns);
  const double frac = static_cast<double>(t_ns - prev->timestamp_ns) / span;
  return prev->volts + (it->volts - prev->volts) * frac;
}

double trimmed_mean_1min(const Series& s, std::int64_t t_ns) {
  const auto [first, last] = window(s, t_ns - kMinuteNs, t_ns);
  const auto n = std::distance(first, last);
  if (n < 3)
    throw InsufficientWindowError("trimmed mean needs at least 3 samples in the window, got " +
                                  std::to_string(n));
  auto min_it = first, max_it = first;
  double sum = 0.0;
  for (auto it = first; it != last; ++it) {
    sum += it->volts;
    if (it->volts < min_it->volts) min_it = it;
    if (it->volts > max_it->volts) max_it = it;
  }
  if (min_it == max_it) max_it = std::next(min_it);  // all equal: drop any two
  sum -= min_it->volts + max_it->volts;
  return sum / static_cast<double>(n - 2);
}

double mean_15min(const Series& s, std::int64_t t_ns) {
  const auto [first, last] = window(s, t_ns - kQuarterHourNs, t_ns);
  const auto n = std::distance(first, last);
  if (n == 0) throw InsufficientWindowError("no samples in the 15 min window");
  double sum = 0.0;
  for (auto it = first; it != last; ++it) sum += it->volts;
  return sum / static_cast<double>(n);
}

std::vector<DiffSample> paired_differences(const Series& plug, const Series& ref,
                                           Method method) {
  if (plug.empty() || ref.empty() || plug.front().timestamp_ns > ref.back().timestamp_ns ||
      ref.front().timestamp_ns > plug.back().timestamp_ns)
    throw NoOverlapError("plug and reference series do not overlap in time");

  std::vector<DiffSample> out;
  for (const auto& r : ref.samples()) {
    const std::int64_t t = r.timestamp_ns;
    double estimate = 0.0;
    double reference = r.volts;
    try {
      switch (method) {
        case Method::Last:
          estimate = last_before(plug, t);
          break;
        case Method::Interp10s:
          estimate = interpolate_at(plug, t);
          break;
        case Method::TrimmedMean1min:
          estimate = trimmed_mean_1min(plug, t);
          break;
        case Method::Mean15min:
          // Both sides averaged over the same trailing window; windows that
          // clip a series' start are incomplete and skipped.
          if (plug.front().timestamp_ns > t - kQuarterHourNs ||
              ref.front().timestamp_ns > t - kQuarterHourNs)
            continue;
          estimate = mean_15min(plug, t);
          reference = mean_15min(ref, t);
          break;
      }
    } catch (const CalibError&) {
      continue;  // window not satisfiable at this reference tick
    }
    out.push_back({t, estimate - reference, method});
  }
  return out;
}

double estimate_offset(const std::vector<DiffSample>& diffs) {
  if (diffs.empty()) throw NoDataError("no difference samples");
  double sum = 0.0;
  for (const auto& d : diffs) sum += d.diff_v;
  return sum / static_cast<double>(diffs.size());
}

Series apply_offset(const Series& s, double offset_v) {
  Series out;
  for (const auto& sample : s.samples())
    out.push_back(sample.timestamp_ns, sample.volts - offset_v);
  return out;
}

double accuracy_p95(const std::vector<DiffSample>& diffs) {
  if (diffs.empty()) throw NoDataError("no difference samples");
  const double mean = estimate_offset(diffs);
  std::vector<double> centered;
  centered.reserve(diffs.size());
  for (const auto& d : diffs) centered.push_back(std::fabs(d.diff_v - mean));
  std::sort(centered.begin(), centered.end());
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(centered.size())));
  return centered[rank == 0 ? 0 : rank - 1];
}

long long Histogram::total() const {
  long long t = 0;
  for (long long c : counts) t += c;
  return t;
}

Histogram histogram(const std::vector<double>& values, double bin_width) {
  if (bin_width <= 0) throw std::invalid_argument("bin_width must be > 0");
  Histogram h;
  h.bin_width = bin_width;
  if (values.empty()) return h;
  long long lo = 0, hi = 0;
  bool first = true;
  std::vector<long long> bins;
  bins.reserve(values.size());
  for (double v : values) {
    const long long b = std::llround(v / bin_width);
    bins.push_back(b);
    if (first || b < lo) lo = first ? b : std::min(lo, b);
    if (first || b > hi) hi = first ? b : std::max(hi, b);
    first = false;
  }
  h.first_bin = lo;
  h.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (long long b : bins) ++h.counts[static_cast<std::size_t>(b - lo)];
  return h;
}

NormalityResult anderson_darling_normality(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 8)
    throw NormalityTestError("need at least 8 values, got " + std::to_string(n));
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  if (!(var > 0.0))
    throw NormalityTestError("zero variance: all values identical");
  const double sd = std::sqrt(var);

  std::vector<double> z(values);
  std::sort(z.begin(), z.end());
  for (double& v : z) v = (v - mean) / sd;

  // log Phi(z) and log(1 - Phi(z)) via erfc, stable in both tails.
  auto log_cdf = [](double x) { return std::log(0.5 * std::erfc(-x / std::sqrt(2.0))); };
  auto log_sf = [](double x) { return std::log(0.5 * std::erfc(x / std::sqrt(2.0))); };

  double a2 = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 2.0 * static_cast<double>(i) + 1.0;
    a2 += w * (log_cdf(z[i]) + log_sf(z[n - 1 - i]));
  }
  a2 = -dn - a2 / dn;
  const double a2_star = a2 * (1.0 + 4.0 / dn - 25.0 / (dn * dn));
  return {a2_star, a2_star > 0.752};
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("series lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace gridmon::calib
