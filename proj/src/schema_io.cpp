#include "ehrsynth/schema_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ehrsynth/errors.hpp"

namespace ehrsynth {

using nlohmann::ordered_json;

std::string schema_to_json(const SchemaDef& schema) {
  ordered_json tables = ordered_json::array();
  for (const auto& t : schema.tables) {
    ordered_json cols = ordered_json::array();
    for (const auto& c : t.columns) {
      ordered_json col{{"name", c.name}, {"kind", std::string(to_string(c.kind))}, {"nullable", c.nullable}};
      if (c.kind == ColumnKind::enumeration) col["values"] = c.enum_values;
      if (c.range) {
        col["range"] = ordered_json{{"hard_min", c.range->hard_min},
                                    {"soft_min", c.range->soft_min},
                                    {"soft_max", c.range->soft_max},
                                    {"hard_max", c.range->hard_max},
                                    {"unit", c.range->unit}};
      }
      cols.push_back(std::move(col));
    }
    ordered_json fks = ordered_json::array();
    for (const auto& fk : t.foreign_keys) {
      fks.push_back(ordered_json{{"column", fk.column}, {"table", fk.target_table}, {"target_column", fk.target_column}});
    }
    tables.push_back(ordered_json{
        {"name", t.name}, {"primary_key", t.primary_key}, {"columns", std::move(cols)}, {"foreign_keys", std::move(fks)}});
  }
  return ordered_json{{"tables", std::move(tables)}}.dump(2) + "\n";
}

SchemaDef schema_from_json(const std::string& text) {
  SchemaDef schema;
  try {
    const auto doc = ordered_json::parse(text);
    for (const auto& jt : doc.at("tables")) {
      TableDef t;
      t.name = jt.at("name").get<std::string>();
      t.primary_key = jt.at("primary_key").get<std::string>();
      for (const auto& jc : jt.at("columns")) {
        ColumnDef c;
        c.name = jc.at("name").get<std::string>();
        c.kind = column_kind_from_string(jc.at("kind").get<std::string>());
        c.nullable = jc.value("nullable", false);
        if (jc.contains("values")) c.enum_values = jc.at("values").get<std::vector<std::string>>();
        if (jc.contains("range")) {
          const auto& jr = jc.at("range");
          c.range = PhysiologicRange{jr.at("hard_min").get<double>(), jr.at("soft_min").get<double>(),
                                     jr.at("soft_max").get<double>(), jr.at("hard_max").get<double>(),
                                     jr.value("unit", std::string{})};
        }
        t.columns.push_back(std::move(c));
      }
      if (jt.contains("foreign_keys")) {
        for (const auto& jf : jt.at("foreign_keys")) {
          t.foreign_keys.push_back(ForeignKey{jf.at("column").get<std::string>(), jf.at("table").get<std::string>(),
                                              jf.at("target_column").get<std::string>()});
        }
      }
      schema.tables.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema file: ") + e.what());
  }
  schema.validate();
  return schema;
}

void save_schema(const SchemaDef& schema, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write schema file " + path.string());
  out << schema_to_json(schema);
}

SchemaDef load_schema(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read schema file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return schema_from_json(ss.str());
}

}  // namespace ehrsynth
