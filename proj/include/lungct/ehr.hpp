#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lungct {

/// ISO-8601 calendar date, stored as days since 1970-01-01 so date
/// differences are plain integer subtraction.
struct Date {
  int days = 0;

  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string to_string() const;

  auto operator<=>(const Date&) const = default;
};

enum class Sex { Male, Female };

struct ScanRef {
  std::string scan_id;
  Date date;
};

/// One EHR row group: everything known about a patient.
struct PatientRecord {
  std::string patient_id;
  int age = 0;
  Sex sex = Sex::Male;
  std::optional<Date> covid_positive_date;
  std::vector<ScanRef> scans;
  bool outcome_icu = false;
  bool outcome_death = false;
};

/// Reads the EHR CSV (one row per scan, patient fields repeated):
///   patient_id,age,sex,covid_positive_date,scan_id,scan_date,outcome_icu,outcome_death
/// Booleans are 0/1, dates YYYY-MM-DD, empty covid_positive_date means absent.
/// Rows are grouped by patient_id; the result is sorted by patient_id, so
/// the output does not depend on input row order.
std::vector<PatientRecord> read_ehr_table(const std::filesystem::path& path);

void write_ehr_table(const std::vector<PatientRecord>& records,
                     const std::filesystem::path& path);

}  // namespace lungct
