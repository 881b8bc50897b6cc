#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tractfeat/connectome.hpp"
#include "tractfeat/error.hpp"
#include "tractfeat/regression.hpp"

namespace tractfeat {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws FormatError when absent.
    std::size_t column(const std::string& name) const;
};

Table read_tsv(const std::filesystem::path& path);
void write_tsv(const Table& table, const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_real(double value);
double parse_real(const std::string& text, const std::string& context);

struct SubjectFeatures {
    std::string subject_id;
    std::map<FeatureKind, FeatureVector> features;
};

/// Header: subject_id, then T_<label>..., VS_<label>..., vol, cx, cy, cz,
/// maj, min, ratio, solid, round, surf.
Table feature_table(const std::vector<SubjectFeatures>& subjects, const Atlas& atlas);

Table disruption_table(const DisruptionMatrix& d, const Atlas& atlas);

struct ClinicalRecord {
    int mrs = 0;
    double days_to_mrs = 0.0;
};

/// Columns subject_id, mRS, days_to_mRS.
std::map<std::string, ClinicalRecord> read_clinical(const std::filesystem::path& path);

struct MrsWindow {
    double min_days = 80.0;
    double max_days = 100.0;
};

/// Thrown when a feature row has no clinical record.
class MissingSubjectError : public ValidationError {
public:
    explicit MissingSubjectError(const std::string& id)
        : ValidationError("subject '" + id + "' has features but no clinical record"), subject_id(id) {}
    std::string subject_id;
};

/// Joins the columns of one feature kind with clinical grades. Subjects whose
/// days_to_mRS fall outside the window are left out.
Dataset assemble_dataset(const Table& features, const std::map<std::string, ClinicalRecord>& clinical,
                         FeatureKind kind, const MrsWindow& window);

}  // namespace tractfeat
