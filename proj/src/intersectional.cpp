#include "fairaudit/intersectional.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/error.hpp"

namespace fairaudit {

std::string_view to_string(Level level) { return level == Level::high ? "High" : "Low"; }

std::size_t IntersectionCell::weight() const {
  return a1_level == Level::low ? n_subgroups[0] + n_subgroups[1] : n_subgroups[2] + n_subgroups[3];
}

double cell_delta(double mae_a2_high, double mae_a2_low) { return std::abs(mae_a2_high - mae_a2_low); }

const IntersectionCell* IntersectionReport::cell(std::string_view a1, Level level, std::string_view a2) const {
  for (const auto& c : cells)
    if (c.a1 == a1 && c.a1_level == level && c.a2 == a2) return &c;
  return nullptr;
}

std::optional<double> IntersectionReport::average(std::string_view a1, Level level) const {
  double num = 0.0, den = 0.0;
  for (const auto& c : cells) {
    if (c.a1 != a1 || c.a1_level != level || c.skipped) continue;
    const double w = options.weighting == AverageWeighting::uniform ? 1.0 : static_cast<double>(c.weight());
    num += w * c.delta;
    den += w;
  }
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

std::optional<double> IntersectionReport::abs_delta_average(std::string_view a1) const {
  const auto hi = average(a1, Level::high);
  const auto lo = average(a1, Level::low);
  if (!hi || !lo) return std::nullopt;
  return std::abs(*hi - *lo);
}

nlohmann::json IntersectionReport::to_json() const {
  nlohmann::json out;
  out["weighting"] = options.weighting == AverageWeighting::uniform ? "uniform" : "sample_count";
  out["min_subgroup"] = options.min_subgroup;
  out["provenance"] = {{"model", provenance.model}, {"test", provenance.test}};
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j = {{"a1", c.a1}, {"a1_level", std::string(to_string(c.a1_level))}, {"a2", c.a2},
                        {"n_subgroups", c.n_subgroups}, {"skipped", c.skipped}};
    if (c.skipped) {
      j["reason"] = c.skip_reason;
    } else {
      j["mae_a2_low"] = c.mae_a2_low;
      j["mae_a2_high"] = c.mae_a2_high;
      j["delta"] = c.delta;
    }
    cs.push_back(std::move(j));
  }
  out["cells"] = cs;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& a1 : race) {
    nlohmann::json s = {{"a1", a1}};
    auto put = [&](const char* key, std::optional<double> v) { s[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    put("avg_high", average(a1, Level::high));
    put("avg_low", average(a1, Level::low));
    put("abs_delta_avg", abs_delta_average(a1));
    summary.push_back(std::move(s));
  }
  out["summary"] = summary;
  return out;
}

IntersectionReport intersect_audit(std::span<const double> y, std::span<const double> yhat, const EncodedDataset& test,
                                   std::span<const std::string> race, std::span<const std::string> religion,
                                   const IntersectOptions& options) {
  if (y.size() != yhat.size() || y.size() != test.size())
    fail(ErrorCode::length_mismatch, "targets, predictions and test set differ in length");

  IntersectionReport report;
  report.race.assign(race.begin(), race.end());
  report.religion.assign(religion.begin(), religion.end());
  report.options = options;
  report.provenance.test = test.fingerprint();

  // High-membership masks; nullopt when the feature cannot be grouped.
  auto mask_of = [&](const std::string& f, std::string& why) -> std::optional<std::vector<char>> {
    const auto it = test.thresholds.find(f);
    if (!test.sensitive_index(f)) {
      why = "'" + f + "' is not a sensitive feature";
      return std::nullopt;
    }
    if (it == test.thresholds.end()) {
      why = "'" + f + "' has no threshold (constant feature)";
      return std::nullopt;
    }
    const auto values = test.group_values(f);
    std::vector<char> m(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m[i] = values[i] >= it->second;
    return m;
  };

  std::vector<std::optional<std::vector<char>>> a2_masks;
  std::vector<std::string> a2_why(religion.size());
  for (std::size_t k = 0; k < religion.size(); ++k) a2_masks.push_back(mask_of(religion[k], a2_why[k]));

  for (const auto& a1 : race) {
    std::string a1_why;
    const auto a1_mask = mask_of(a1, a1_why);
    for (Level level : {Level::high, Level::low}) {
      for (std::size_t k = 0; k < religion.size(); ++k) {
        IntersectionCell cell;
        cell.a1 = a1;
        cell.a1_level = level;
        cell.a2 = religion[k];
        if (!a1_mask || !a2_masks[k]) {
          cell.skipped = true;
          cell.skip_reason = !a1_mask ? a1_why : a2_why[k];
          report.cells.push_back(std::move(cell));
          continue;
        }
        double sum_high = 0.0, sum_low = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
          const int slot = 2 * (*a1_mask)[i] + (*a2_masks[k])[i];
          ++cell.n_subgroups[static_cast<std::size_t>(slot)];
          if (((*a1_mask)[i] != 0) != (level == Level::high)) continue;
          ((*a2_masks[k])[i] ? sum_high : sum_low) += std::abs(y[i] - yhat[i]);
        }
        const std::size_t base = level == Level::high ? 2 : 0;
        const std::size_t n_low = cell.n_subgroups[base], n_high = cell.n_subgroups[base + 1];
        if (n_low < options.min_subgroup || n_high < options.min_subgroup) {
          cell.skipped = true;
          cell.skip_reason = "subgroup smaller than " + std::to_string(options.min_subgroup) + " samples";
        } else {
          cell.mae_a2_low = sum_low / static_cast<double>(n_low);
          cell.mae_a2_high = sum_high / static_cast<double>(n_high);
          cell.delta = cell_delta(cell.mae_a2_high, cell.mae_a2_low);
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

IntersectionReport intersect_audit(const TrainedModel& model, const EncodedDataset& test, std::span<const std::string> race,
                                   std::span<const std::string> religion, const IntersectOptions& options) {
  auto report = intersect_audit(test.target_vector(), model.predict(test), test, race, religion, options);
  report.provenance.model = model.fingerprint();
  return report;
}

std::vector<BlindSpot> blind_spot_screen(const AuditReport& single, const IntersectionReport& inter,
                                         const BlindSpotOptions& options) {
  if (!(single.provenance == inter.provenance))
    fail(ErrorCode::mismatched_provenance, "single-feature and intersectional reports come from different runs");
  if (single.records.empty()) return {};

  double fair = 0.0;
  if (options.fair_threshold) {
    fair = *options.fair_threshold;
  } else {
    std::vector<double> d;
    for (const auto& r : single.records) d.push_back(r.delta_mae);
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    fair = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  }

  std::vector<BlindSpot> flagged;
  for (const auto& r : single.records) {
    if (!(r.delta_mae < fair)) continue;
    const auto score = inter.abs_delta_average(r.feature);
    if (score && *score > options.multiple * fair) flagged.push_back({r.feature, r.delta_mae, *score});
  }
  return flagged;
}

void write_intersection_csv(const IntersectionReport& report, std::ostream& out) {
  csv::Record header{"feature"};
  for (const auto& a1 : report.race) {
    header.push_back(a1 + "_High");
    header.push_back(a1 + "_Low");
  }
  csv::write_record(out, header);
  auto value = [](std::optional<double> v) { return v ? csv::fixed(*v, 6) : std::string(); };
  for (const auto& a2 : report.religion) {
    csv::Record row{a2};
    for (const auto& a1 : report.race)
      for (Level level : {Level::high, Level::low}) {
        const auto* c = report.cell(a1, level, a2);
        row.push_back(c && !c->skipped ? csv::fixed(c->delta, 6) : std::string());
      }
    csv::write_record(out, row);
  }
  csv::Record avg{"Avg"}, diff{"|dAvg|"};
  for (const auto& a1 : report.race) {
    avg.push_back(value(report.average(a1, Level::high)));
    avg.push_back(value(report.average(a1, Level::low)));
    diff.push_back(value(report.abs_delta_average(a1)));
    diff.emplace_back();
  }
  csv::write_record(out, avg);
  csv::write_record(out, diff);
}

void write_intersection_markdown(const IntersectionReport& report, std::ostream& out) {
  auto value = [](std::optional<double> v) { return v ? csv::fixed(*v, 2) : std::string("-"); };
  out << "| |";
  for (const auto& a1 : report.race) out << ' ' << a1 << " High | " << a1 << " Low |";
  out << "\n|---|";
  for (std::size_t i = 0; i < report.race.size(); ++i) out << "---:|---:|";
  out << '\n';
  for (const auto& a2 : report.religion) {
    out << "| " << a2 << " |";
    for (const auto& a1 : report.race)
      for (Level level : {Level::high, Level::low}) {
        const auto* c = report.cell(a1, level, a2);
        out << ' ' << (c && !c->skipped ? csv::fixed(c->delta, 2) : std::string("-")) << " |";
      }
    out << '\n';
  }
  out << "| Avg. |";
  for (const auto& a1 : report.race)
    out << ' ' << value(report.average(a1, Level::high)) << " | " << value(report.average(a1, Level::low)) << " |";
  out << "\n| abs dAvg |";
  for (const auto& a1 : report.race) out << ' ' << value(report.abs_delta_average(a1)) << " | |";
  out << '\n';
}

}  // namespace fairaudit
