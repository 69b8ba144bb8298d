#include "lungct/ehr.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lungct/errors.hpp"

namespace lungct {
namespace {

// Days-from-civil / civil-from-days (Howard Hinnant's algorithms).
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

bool leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

int parse_bool(const std::string& s, int line_no, const char* what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ValidationError(std::string(what) + " must be 0 or 1, got '" + s +
                        "' at line " + std::to_string(line_no));
}

}  // namespace

Date Date::parse(const std::string& iso) {
  int y, m, d;
  char tail;
  if (std::sscanf(iso.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3 ||
      iso.size() != 10)
    throw FormatError("unparseable date '" + iso + "'");
  static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 ||
      d < 1 || d > mdays[m - 1] + (m == 2 && leap(y) ? 1 : 0))
    throw FormatError("invalid calendar date '" + iso + "'");
  return Date{days_from_civil(y, m, d)};
}

std::string Date::to_string() const {
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::vector<PatientRecord> read_ehr_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open EHR table: " + path.string());

  static const std::string kHeader =
      "patient_id,age,sex,covid_positive_date,scan_id,scan_date,"
      "outcome_icu,outcome_death";
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty EHR table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw FormatError("unexpected EHR header: '" + line + "'");

  std::map<std::string, PatientRecord> by_id;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8)
      throw FormatError("expected 8 fields at line " +
                        std::to_string(line_no));

    PatientRecord row;
    row.patient_id = f[0];
    try {
      row.age = std::stoi(f[1]);
    } catch (const std::exception&) {
      throw ValidationError("bad age '" + f[1] + "' at line " +
                            std::to_string(line_no));
    }
    if (row.age < 0 || row.age > 130)
      throw ValidationError("age out of [0,130] at line " +
                            std::to_string(line_no));
    if (f[2] == "male")
      row.sex = Sex::Male;
    else if (f[2] == "female")
      row.sex = Sex::Female;
    else
      throw ValidationError("sex must be male or female, got '" + f[2] +
                            "' at line " + std::to_string(line_no));
    try {
      if (!f[3].empty()) row.covid_positive_date = Date::parse(f[3]);
      // Empty scan_id and scan_date together mean a patient on record with
      // no imaging; such patients are skipped at extraction time.
      if (!f[4].empty() || !f[5].empty())
        row.scans.push_back({f[4], Date::parse(f[5])});
    } catch (const FormatError& e) {
      throw FormatError(std::string(e.what()) + " at line " +
                        std::to_string(line_no));
    }
    row.outcome_icu = parse_bool(f[6], line_no, "outcome_icu");
    row.outcome_death = parse_bool(f[7], line_no, "outcome_death");

    auto [it, inserted] = by_id.emplace(row.patient_id, row);
    if (!inserted) {
      PatientRecord& rec = it->second;
      if (rec.age != row.age || rec.sex != row.sex ||
          rec.outcome_icu != row.outcome_icu ||
          rec.outcome_death != row.outcome_death ||
          rec.covid_positive_date != row.covid_positive_date)
        throw IntegrityError("conflicting patient fields for '" +
                             row.patient_id + "' at line " +
                             std::to_string(line_no));
      if (!row.scans.empty()) {
        for (const auto& s : rec.scans)
          if (s.scan_id == row.scans[0].scan_id)
            throw IntegrityError("duplicate scan_id '" + s.scan_id +
                                 "' for patient '" + row.patient_id + "'");
        rec.scans.push_back(row.scans[0]);
      }
    }
  }

  std::vector<PatientRecord> out;
  out.reserve(by_id.size());
  for (auto& [id, rec] : by_id) {
    // Scan order must not depend on input row order.
    std::sort(rec.scans.begin(), rec.scans.end(),
              [](const ScanRef& a, const ScanRef& b) {
                return a.scan_id < b.scan_id;
              });
    out.push_back(std::move(rec));
  }
  return out;
}

void write_ehr_table(const std::vector<PatientRecord>& records,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write EHR table: " + path.string());
  out << "patient_id,age,sex,covid_positive_date,scan_id,scan_date,"
         "outcome_icu,outcome_death\n";
  for (const auto& rec : records) {
    auto prefix = [&]() -> std::ostream& {
      return out << rec.patient_id << ',' << rec.age << ','
                 << (rec.sex == Sex::Male ? "male" : "female") << ','
                 << (rec.covid_positive_date
                         ? rec.covid_positive_date->to_string()
                         : "")
                 << ',';
    };
    auto suffix = [&]() {
      out << ',' << (rec.outcome_icu ? 1 : 0) << ','
          << (rec.outcome_death ? 1 : 0) << '\n';
    };
    if (rec.scans.empty()) {
      prefix() << ',';
      suffix();
      continue;
    }
    for (const auto& scan : rec.scans) {
      prefix() << scan.scan_id << ',' << scan.date.to_string();
      suffix();
    }
  }
}

}  // namespace lungct
