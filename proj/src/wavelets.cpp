#include "escgnn/wavelets.hpp"

#include <set>

namespace escgnn {

std::string_view bank_mode_name(BankMode mode) {
  switch (mode) {
    case BankMode::Dyadic: return "dyadic";
    case BankMode::InfoGain: return "infogain";
    case BankMode::Custom: return "custom";
  }
  return "custom";
}

BankMode parse_bank_mode(std::string_view name) {
  if (name == "dyadic") return BankMode::Dyadic;
  if (name == "infogain") return BankMode::InfoGain;
  if (name == "custom") return BankMode::Custom;
  throw Error(ErrorCode::InvalidArgument, "unknown bank mode: " + std::string(name));
}

void WaveletBank::validate() const {
  if (scales.size() < 2 || scales.front() != 0) {
    throw Error(ErrorCode::InvalidArgument, "bank needs t_0 = 0 and at least one more scale");
  }
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (scales[i] <= scales[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "bank scales must strictly increase");
    }
  }
}

WaveletBank WaveletBank::custom(std::vector<int> scales) {
  WaveletBank bank{std::move(scales), BankMode::Custom};
  bank.validate();
  return bank;
}

WaveletBank dyadic_scales(int J) {
  if (J < 0) throw Error(ErrorCode::InvalidArgument, "J must be >= 0");
  WaveletBank bank;
  bank.mode = BankMode::Dyadic;
  bank.scales.push_back(0);
  for (int j = 0; j <= J; ++j) bank.scales.push_back(1 << j);
  return bank;
}

std::vector<int> quantile_crossings(const std::vector<double>& decay,
                                    const std::vector<double>& quantiles) {
  const double c0 = decay.front();
  const double c_end = decay.back();
  const double range = c0 - c_end;
  if (!(range > 1e-14 * std::max(c0, 1e-300))) return {};

  std::vector<double> progress(decay.size());
  double running = 0.0;
  for (std::size_t t = 0; t < decay.size(); ++t) {
    running = std::max(running, (c0 - decay[t]) / range);
    progress[t] = running;
  }
  std::vector<int> out;
  out.reserve(quantiles.size());
  for (double q : quantiles) {
    int t = static_cast<int>(decay.size()) - 1;
    for (std::size_t s = 0; s < progress.size(); ++s) {
      if (progress[s] >= q) {
        t = static_cast<int>(s);
        break;
      }
    }
    out.push_back(t);
  }
  return out;
}

WaveletBank merge_infogain_scales(const std::vector<std::vector<int>>& per_signal,
                                  const InfoGainOptions& options) {
  for (std::size_t i = 0; i < options.quantiles.size(); ++i) {
    const double q = options.quantiles[i];
    if (!(q > 0.0 && q < 1.0) || (i > 0 && q <= options.quantiles[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "quantiles must strictly increase inside (0,1)");
    }
  }
  if (per_signal.empty()) {
    throw Error(ErrorCode::AllSignalsFlat, "every signal is already stationary");
  }
  std::set<int> scales{0, 1, options.t_max};
  for (std::size_t qi = 0; qi < options.quantiles.size(); ++qi) {
    std::vector<int> values;
    values.reserve(per_signal.size());
    for (const auto& s : per_signal) values.push_back(s.at(qi));
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    const int median = (m % 2 == 1) ? values[m / 2] : (values[m / 2 - 1] + values[m / 2] + 1) / 2;
    if (median > 0) scales.insert(median);
  }
  WaveletBank bank{{scales.begin(), scales.end()}, BankMode::InfoGain};
  bank.validate();
  return bank;
}

double degree_ratio(const GeometricGraph& graph, bool weighted) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const double deg = weighted ? graph.weighted_degree(i) : graph.degree(i);
    lo = std::min(lo, deg);
    hi = std::max(hi, deg);
  }
  return hi / lo;
}

}  // namespace escgnn
