#include "ehrsynth/load.hpp"

#ifdef EHRSYNTH_HAVE_LIBPQ
#include <libpq-fe.h>
#endif

namespace ehrsynth {

#ifdef EHRSYNTH_HAVE_LIBPQ

namespace {

class Connection {
 public:
  explicit Connection(const std::string& url) : conn_(PQconnectdb(url.c_str())) {
    if (!conn_ || PQstatus(conn_) != CONNECTION_OK) {
      std::string msg = conn_ ? PQerrorMessage(conn_) : "out of memory";
      while (!msg.empty() && (msg.back() == '\n' || msg.back() == ' ')) msg.pop_back();
      PQfinish(conn_);
      conn_ = nullptr;
      throw ConnectionError("cannot connect to database: " + msg);
    }
    PQsetNoticeProcessor(conn_, [](void*, const char*) {}, nullptr);
  }
  ~Connection() { PQfinish(conn_); }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  PGresult* run(const std::string& sql) {
    PGresult* res = PQexec(conn_, sql.c_str());
    const auto status = res ? PQresultStatus(res) : PGRES_FATAL_ERROR;
    if (status == PGRES_COMMAND_OK || status == PGRES_TUPLES_OK) return res;
    std::string sqlstate, msg;
    if (res) {
      if (const char* s = PQresultErrorField(res, PG_DIAG_SQLSTATE)) sqlstate = s;
      msg = PQresultErrorMessage(res);
      PQclear(res);
    } else {
      msg = PQerrorMessage(conn_);
    }
    while (!msg.empty() && (msg.back() == '\n' || msg.back() == ' ')) msg.pop_back();
    if (PQstatus(conn_) != CONNECTION_OK) throw ConnectionError("database connection lost: " + msg);
    if (sqlstate.rfind("23", 0) == 0) throw ConstraintViolation(sql, sqlstate, msg);
    throw StatementError(sql, sqlstate, msg);
  }

  void exec(const std::string& sql) { PQclear(run(sql)); }

 private:
  PGconn* conn_;
};

}  // namespace

LoadSummary load_database(const std::string& url, const SchemaDef& schema, const TableRows& data,
                          const LoadOptions& options) {
  const auto statements = insert_statements(data, schema, options.batch_rows);
  LoadSummary summary;
  if (statements.empty() && !options.create_schema) {
    summary.committed = true;
    return summary;
  }
  Connection conn(url);
  conn.exec("BEGIN");
  try {
    if (options.create_schema) conn.exec(emit_ddl(schema));
    for (const auto& s : statements) conn.exec(s);
    conn.exec("COMMIT");
  } catch (const ConnectionError&) {
    throw;  // the server discards the open transaction with the session
  } catch (...) {
    try {
      conn.exec("ROLLBACK");
    } catch (...) {
    }
    throw;
  }
  summary.committed = true;
  for (const auto& name : topological_order(schema)) {
    auto it = data.find(name);
    if (it == data.end() || it->second.empty()) continue;
    summary.rows_per_table[name] = it->second.size();
    summary.total_rows += it->second.size();
  }
  return summary;
}

void execute_sql(const std::string& url, const std::string& sql) {
  Connection conn(url);
  conn.exec(sql);
}

std::vector<ResultRow> query_rows(const std::string& url, const std::string& sql) {
  Connection conn(url);
  PGresult* res = conn.run(sql);
  std::vector<ResultRow> out;
  const int rows = PQntuples(res), cols = PQnfields(res);
  for (int r = 0; r < rows; ++r) {
    ResultRow row;
    for (int c = 0; c < cols; ++c) {
      const std::string name = PQfname(res, c);
      if (PQgetisnull(res, r, c)) row[name] = std::nullopt;
      else row[name] = std::string(PQgetvalue(res, r, c));
    }
    out.push_back(std::move(row));
  }
  PQclear(res);
  return out;
}

bool database_support_available() { return true; }

#else

LoadSummary load_database(const std::string&, const SchemaDef& schema, const TableRows& data,
                          const LoadOptions& options) {
  if (insert_statements(data, schema, options.batch_rows).empty() && !options.create_schema) {
    LoadSummary s;
    s.committed = true;
    return s;
  }
  throw ConnectionError("built without a PostgreSQL client library");
}

void execute_sql(const std::string&, const std::string&) {
  throw ConnectionError("built without a PostgreSQL client library");
}

std::vector<ResultRow> query_rows(const std::string&, const std::string&) {
  throw ConnectionError("built without a PostgreSQL client library");
}

bool database_support_available() { return false; }

#endif

}  // namespace ehrsynth
