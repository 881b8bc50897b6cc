#include "tractfeat/tables.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tractfeat/error.hpp"

namespace tractfeat {

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw FormatError("table has no column '" + name + "'");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return fields;
}

}  // namespace

Table read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
            continue;
        }
        if (fields.size() != table.header.size())
            throw FormatError(path.string() + ": row has " + std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    if (first) throw FormatError(path.string() + ": empty table");
    return table;
}

void write_tsv(const Table& table, const std::filesystem::path& path) {
    std::ostringstream out;
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "\t" : "") << fields[i];
        out << '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) emit(row);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + path.string());
    file << out.str();
    if (!file) throw IoError("write failed for " + path.string());
}

std::string format_real(double value) {
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw Error("cannot format number");
    return std::string(buffer, end);
}

double parse_real(const std::string& text, const std::string& context) {
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
        throw FormatError(context + ": '" + text + "' is not a finite number");
    return value;
}

Table feature_table(const std::vector<SubjectFeatures>& subjects, const Atlas& atlas) {
    static constexpr FeatureKind kOrder[] = {FeatureKind::tractographic, FeatureKind::volumetric_spatial,
                                             FeatureKind::volumetric, FeatureKind::spatial,
                                             FeatureKind::morphological};
    Table table;
    table.header.push_back("subject_id");
    for (FeatureKind kind : kOrder)
        for (auto& name : feature_column_names(kind, atlas)) table.header.push_back(std::move(name));
    for (const auto& s : subjects) {
        std::vector<std::string> row{s.subject_id};
        for (FeatureKind kind : kOrder) {
            const auto width = feature_column_names(kind, atlas).size();
            const auto it = s.features.find(kind);
            if (it == s.features.end() || static_cast<std::size_t>(it->second.values.size()) != width)
                throw ShapeError("subject " + s.subject_id + " lacks a complete " + std::string(to_string(kind)) +
                                 " feature");
            for (double v : it->second.values) row.push_back(format_real(v));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

Table disruption_table(const DisruptionMatrix& d, const Atlas& atlas) {
    Table table;
    table.header.push_back("label");
    for (int label : atlas.labels()) table.header.push_back(std::to_string(label));
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::string> row{std::to_string(atlas.labels()[i])};
        for (std::size_t j = 0; j < d.size(); ++j) row.push_back(std::to_string(d(i, j)));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::map<std::string, ClinicalRecord> read_clinical(const std::filesystem::path& path) {
    const Table table = read_tsv(path);
    const auto id_col = table.column("subject_id");
    const auto mrs_col = table.column("mRS");
    const auto days_col = table.column("days_to_mRS");
    std::map<std::string, ClinicalRecord> out;
    for (const auto& row : table.rows) {
        const double grade = parse_real(row[mrs_col], path.string());
        if (grade != std::floor(grade) || grade < kMinGrade || grade > kMaxGrade)
            throw ValidationError(path.string() + ": mRS for '" + row[id_col] + "' must be an integer in [0, 4]");
        ClinicalRecord record{static_cast<int>(grade), parse_real(row[days_col], path.string())};
        if (!out.emplace(row[id_col], record).second)
            throw ValidationError(path.string() + ": duplicate subject '" + row[id_col] + "'");
    }
    return out;
}

namespace {

bool column_belongs(FeatureKind kind, const std::string& name) {
    switch (kind) {
        case FeatureKind::tractographic: return name.rfind("T_", 0) == 0;
        case FeatureKind::volumetric_spatial: return name.rfind("VS_", 0) == 0;
        case FeatureKind::volumetric: return name == "vol";
        case FeatureKind::spatial: return name == "cx" || name == "cy" || name == "cz";
        case FeatureKind::morphological:
            return name == "maj" || name == "min" || name == "ratio" || name == "solid" || name == "round" ||
                   name == "surf";
    }
    return false;
}

}  // namespace

Dataset assemble_dataset(const Table& features, const std::map<std::string, ClinicalRecord>& clinical,
                         FeatureKind kind, const MrsWindow& window) {
    const auto id_col = features.column("subject_id");
    std::vector<std::size_t> cols;
    Dataset data;
    for (std::size_t c = 0; c < features.header.size(); ++c) {
        if (column_belongs(kind, features.header[c])) {
            cols.push_back(c);
            data.feature_names.push_back(features.header[c]);
        }
    }
    if (cols.empty()) throw FormatError("feature table has no " + std::string(to_string(kind)) + " columns");

    std::vector<const std::vector<std::string>*> rows;
    for (const auto& row : features.rows) {
        const auto it = clinical.find(row[id_col]);
        if (it == clinical.end()) throw MissingSubjectError(row[id_col]);
        if (it->second.days_to_mrs < window.min_days || it->second.days_to_mrs > window.max_days) continue;
        rows.push_back(&row);
        data.subject_ids.push_back(row[id_col]);
        data.y.push_back(it->second.mrs);
    }
    data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_real((*rows[r])[cols[c]], "feature table");
    return data;
}

}  // namespace tractfeat
