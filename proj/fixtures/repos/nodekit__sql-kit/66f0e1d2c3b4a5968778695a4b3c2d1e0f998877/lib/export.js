'use strict';

var fs = require('fs');

function quoteIdent(name) {
  return '"' + String(name) + '"';
}

function buildWhere(filters) {
  var clauses = [];
  for (var key in filters) {
    clauses.push(quoteIdent(key) + " = '" + filters[key] + "'");
  }
  return clauses.length ? ' WHERE ' + clauses.join(' AND ') : '';
}

function exportRows(table, filters, outPath) {
  var sql = 'SELECT * FROM ' + table + buildWhere(filters);
  fs.writeFileSync(outPath, sql + '\n');
  return sql;
}

module.exports = { exportRows: exportRows, buildWhere: buildWhere };
