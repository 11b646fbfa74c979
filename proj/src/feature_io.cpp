#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "xferlag/error.hpp"
#include "xferlag/features.hpp"

namespace xferlag {
namespace {

using nlohmann::json;

constexpr std::string_view kFeatureFormat = "xferlag-features";
constexpr int kFeatureFormatVersion = 1;

json vocab_to_json(const CategoryVocabulary& v) {
  return json{{"instrument", v.instrument}, {"source_fs", v.source_fs},
              {"target_fs", v.target_fs},   {"target_host", v.target_host},
              {"node", v.node},             {"experiments", v.experiments}};
}

CategoryVocabulary vocab_from_json(const json& j) {
  CategoryVocabulary v;
  j.at("instrument").get_to(v.instrument);
  j.at("source_fs").get_to(v.source_fs);
  j.at("target_fs").get_to(v.target_fs);
  j.at("target_host").get_to(v.target_host);
  j.at("node").get_to(v.node);
  j.at("experiments").get_to(v.experiments);
  return v;
}

json meta_to_json(const FeatureMatrix& m) {
  json groups = json::array();
  for (auto g : m.spec.groups) groups.push_back(std::string(to_string(g)));
  json columns = json::array();
  for (const auto& c : m.columns) {
    json col{{"name", c.name}, {"group", std::string(to_string(c.group))}, {"origin", c.origin}};
    col["missing_indicator"] = c.indicator ? json(m.columns[*c.indicator].name) : json(nullptr);
    columns.push_back(std::move(col));
  }
  return json{{"format", kFeatureFormat},
              {"version", kFeatureFormatVersion},
              {"n_rows", m.n_rows},
              {"spec", {{"groups", groups}, {"utc_offset_seconds", m.spec.utc_offset_seconds}}},
              {"columns", columns},
              {"vocabulary", vocab_to_json(m.vocabulary)}};
}

json parse_meta(const std::string& text) {
  try {
    auto j = json::parse(text);
    if (j.value("format", "") != kFeatureFormat) {
      throw ParseError("not a feature metadata file", "");
    }
    if (j.value("version", 0) != kFeatureFormatVersion) {
      throw ParseError("unsupported feature metadata version", "");
    }
    return j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad feature metadata: ") + e.what(), "");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string feature_meta_json(const FeatureMatrix& matrix) {
  return meta_to_json(matrix).dump(2);
}

CategoryVocabulary vocabulary_from_meta_json(const std::string& json_text) {
  try {
    return vocab_from_json(parse_meta(json_text).at("vocabulary"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad vocabulary: ") + e.what(), "");
  }
}

void save_feature_matrix(const FeatureMatrix& m, const std::string& csv_path,
                         const std::string& meta_path) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + csv_path + "'");
    out << "event_id,start_time,transfer_rate_mbs";
    for (const auto& c : m.columns) out << ',' << csv::quote_if_needed(c.name);
    out << '\n';
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      out << m.event_ids[r] << ',' << m.start_times[r] << ',' << csv::format_double(m.targets[r]);
      for (double v : m.row(r)) out << ',' << csv::format_double(v);
      out << '\n';
    }
    if (!out) throw IoError("write failed for '" + csv_path + "'");
  }
  std::ofstream meta(meta_path, std::ios::binary);
  if (!meta) throw IoError("cannot write '" + meta_path + "'");
  meta << feature_meta_json(m) << '\n';
}

FeatureMatrix load_feature_matrix(const std::string& csv_path, const std::string& meta_path) {
  const auto meta = parse_meta(read_file(meta_path));
  FeatureMatrix m;
  try {
    for (const auto& g : meta.at("spec").at("groups")) {
      m.spec.groups.insert(parse_feature_group(g.get<std::string>()));
    }
    m.spec.groups.insert(FeatureGroup::A);
    m.spec.utc_offset_seconds = meta.at("spec").at("utc_offset_seconds").get<std::int64_t>();
    m.vocabulary = vocab_from_json(meta.at("vocabulary"));
    std::vector<std::string> indicator_names;
    for (const auto& c : meta.at("columns")) {
      ColumnMeta col;
      col.name = c.at("name").get<std::string>();
      col.group = parse_feature_group(c.at("group").get<std::string>());
      col.origin = c.at("origin").get<std::string>();
      indicator_names.push_back(c.at("missing_indicator").is_null()
                                    ? std::string()
                                    : c.at("missing_indicator").get<std::string>());
      m.columns.push_back(std::move(col));
    }
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      if (indicator_names[c].empty()) continue;
      m.columns[c].indicator = m.find_column(indicator_names[c]);
      if (!m.columns[c].indicator) {
        throw SchemaError("indicator column '" + indicator_names[c] + "' not found",
                          indicator_names[c]);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad feature metadata: ") + e.what(), meta_path);
  }

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("missing header", "");
  csv::strip_cr(line);
  const auto header = csv::split_record(line);
  const std::size_t nc = m.columns.size();
  if (header.size() != nc + 3 || header[0] != "event_id" || header[1] != "start_time" ||
      header[2] != "transfer_rate_mbs") {
    throw SchemaError("feature CSV header does not match metadata", "");
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (header[c + 3] != m.columns[c].name) {
      throw SchemaError("unexpected column '" + header[c + 3] + "'", header[c + 3]);
    }
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    csv::strip_cr(line);
    if (line.empty()) continue;
    const auto f = csv::split_record(line);
    if (f.size() != nc + 3) throw RowError(row, "wrong field count");
    const auto id = csv::parse_int(f[0]);
    const auto start = csv::parse_int(f[1]);
    const auto target = csv::parse_double(f[2]);
    if (!id || *id < 0 || !start || !target) throw RowError(row, "bad row header fields");
    m.event_ids.push_back(static_cast<std::size_t>(*id));
    m.start_times.push_back(*start);
    m.targets.push_back(*target);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto v = csv::parse_double(f[c + 3]);
      if (!v) throw RowError(row, "column '" + m.columns[c].name + "' is not numeric");
      m.values.push_back(*v);
    }
    ++row;
  }
  m.n_rows = row;
  const auto expected_rows = meta.value("n_rows", row);
  if (expected_rows != row) throw SchemaError("row count does not match metadata", "");

  m.missing.assign(m.values.size(), 0);
  for (std::size_t c = 0; c < nc; ++c) {
    if (!m.columns[c].indicator) continue;
    const std::size_t ind = *m.columns[c].indicator;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      m.missing[r * nc + c] = m.values[r * nc + ind] != 0.0 ? 1 : 0;
    }
  }
  return m;
}

}  // namespace xferlag
