#include "lungct/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lungct/errors.hpp"

namespace lungct {
namespace {

std::string feature_header() {
  std::string h = "patient_id";
  for (const char* name : kFeatureNames) {
    h += ',';
    h += name;
  }
  return h + ",outcome_icu,outcome_death";
}

}  // namespace

std::size_t Dataset::count_label(int label) const {
  std::size_t n = 0;
  for (int v : y) n += (v == label);
  return n;
}

std::vector<FeatureRow> read_feature_table(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open feature table: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty feature table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != feature_header())
    throw FormatError("unexpected feature table header: '" + line + "'");

  std::vector<FeatureRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 14)
      throw FormatError("expected 14 fields at line " +
                        std::to_string(line_no));
    FeatureRow row;
    row.patient_id = fields[0];
    try {
      for (int i = 0; i < 11; ++i) row.features[i] = std::stod(fields[1 + i]);
    } catch (const std::exception&) {
      throw ValidationError("bad numeric field at line " +
                            std::to_string(line_no));
    }
    auto parse_flag = [&](const std::string& s) {
      if (s == "0") return false;
      if (s == "1") return true;
      throw ValidationError("outcome must be 0 or 1 at line " +
                            std::to_string(line_no));
    };
    row.outcome_icu = parse_flag(fields[12]);
    row.outcome_death = parse_flag(fields[13]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_feature_table(const std::vector<FeatureRow>& rows,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write feature table: " + path.string());
  out << feature_header() << '\n';
  char buf[64];
  for (const auto& row : rows) {
    out << row.patient_id;
    for (double v : row.features) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out << ',' << buf;
    }
    out << ',' << (row.outcome_icu ? 1 : 0) << ','
        << (row.outcome_death ? 1 : 0) << '\n';
  }
}

Dataset to_dataset(const std::vector<FeatureRow>& rows, Outcome outcome) {
  std::vector<const FeatureRow*> sorted;
  sorted.reserve(rows.size());
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const FeatureRow* a, const FeatureRow* b) {
              return a->patient_id < b->patient_id;
            });
  Dataset ds;
  for (const FeatureRow* r : sorted) {
    ds.X.emplace_back(r->features.begin(), r->features.end());
    ds.y.push_back(outcome == Outcome::Icu ? r->outcome_icu
                                           : r->outcome_death);
    ds.patient_ids.push_back(r->patient_id);
  }
  return ds;
}

}  // namespace lungct
