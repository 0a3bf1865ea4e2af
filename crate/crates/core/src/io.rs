//! CSV and JSON readers and writers.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};
use crate::kdb::{Database, KRelation, Schema, Tuple};
use crate::models::{CRow, CTable, Condition, Term, TiDb, TiRow, UncertainRelation, Variable, XDb, XTuple};
use crate::semirings::{Element, Semiring};
use crate::uaa::{AnnotatedRelation, AnnotatedValue, UaCount};
use crate::uadb::UaDb;
use crate::value::Value;
use crate::worlds::WorldDb;

/// Name of the optional annotation column in relation CSV files.
pub const ANNOTATION: &str = "annotation";

struct Table {
    header: Vec<String>,
    /// Rows with their 1-based source line.
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }
}

fn read_table(text: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::parse(1, "missing header row"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

fn write_table(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn cell_value(text: &str) -> Value {
    Value::parse_cell(text)
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Str(s) if Value::parse_cell(s) != Value::Str(s.clone()) => v.literal(),
        v => v.to_string(),
    }
}

/// Reads a relation from CSV. A trailing `annotation` column is parsed in
/// `semiring`; otherwise each row contributes `1`.
pub fn relation_from_csv(name: &str, text: &str, semiring: &Semiring) -> Result<KRelation> {
    let t = read_table(text)?;
    let ann = t.column(ANNOTATION);
    let attrs: Vec<&str> = t
        .header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != ann)
        .map(|(_, h)| h.as_str())
        .collect();
    let schema = Schema::new(name, &attrs).map_err(|e| Error::parse(1, e.to_string()))?;
    let mut r = KRelation::new(schema, semiring.clone());
    for (line, row) in &t.rows {
        let at = |e: Error| Error::parse(*line, e.to_string());
        let values = row
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != ann)
            .map(|(_, c)| cell_value(c))
            .collect();
        let k = match ann {
            Some(i) => semiring.parse_element(&row[i]).map_err(at)?,
            None => semiring.one(),
        };
        r.add(Tuple(values), k).map_err(at)?;
    }
    Ok(r)
}

pub fn relation_to_csv(r: &KRelation) -> Result<String> {
    let mut header = r.schema.names();
    header.push(ANNOTATION.into());
    write_table(
        &header,
        r.iter().map(|(t, k)| {
            let mut row: Vec<String> = t.0.iter().map(cell_text).collect();
            row.push(k.to_string());
            row
        }),
    )
}

fn schema_json(s: &Schema) -> Json {
    json!(s.names())
}

fn schema_from_json(name: &str, j: &Json) -> Result<Schema> {
    let names = j
        .as_array()
        .and_then(|a| a.iter().map(Json::as_str).collect::<Option<Vec<_>>>())
        .ok_or_else(|| Error::parse(0, format!("schema of `{name}` must be a list of names")))?;
    Schema::new(name, &names)
}

fn values_from_json(j: &Json) -> Result<Tuple> {
    let a = j
        .as_array()
        .ok_or_else(|| Error::parse(0, "`values` must be an array"))?;
    Ok(Tuple(a.iter().map(Value::from_json).collect::<Result<_>>()?))
}

fn field<'a>(j: &'a Json, key: &str) -> Result<&'a Json> {
    j.get(key)
        .ok_or_else(|| Error::parse(0, format!("missing field `{key}`")))
}

fn rows_of(j: &Json) -> Result<&Vec<Json>> {
    field(j, "rows")?
        .as_array()
        .ok_or_else(|| Error::parse(0, "`rows` must be an array"))
}

fn parse_json(text: &str) -> Result<Json> {
    serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
}

pub fn relation_to_json(r: &KRelation) -> Json {
    json!({
        "name": r.schema.name,
        "schema": schema_json(&r.schema),
        "semiring": r.semiring.to_string(),
        "rows": r.iter().map(|(t, k)| json!({
            "values": t.0.iter().map(Value::to_json).collect::<Vec<_>>(),
            "annotation": k.to_json(),
        })).collect::<Vec<_>>(),
    })
}

pub fn relation_from_json(j: &Json) -> Result<KRelation> {
    let name = field(j, "name")?.as_str().unwrap_or_default();
    let schema = schema_from_json(name, field(j, "schema")?)?;
    let sr: Semiring = field(j, "semiring")?
        .as_str()
        .ok_or_else(|| Error::parse(0, "`semiring` must be a string"))?
        .parse()?;
    let mut r = KRelation::new(schema, sr.clone());
    for row in rows_of(j)? {
        r.add(
            values_from_json(field(row, "values")?)?,
            sr.element_from_json(field(row, "annotation")?)?,
        )?;
    }
    Ok(r)
}

pub fn relation_from_json_text(text: &str) -> Result<KRelation> {
    relation_from_json(&parse_json(text)?)
}

pub fn world_db_to_json(db: &WorldDb) -> Json {
    let relations: Map<String, Json> = db
        .relations
        .iter()
        .map(|(n, r)| {
            let rows: Vec<Json> = r
                .iter()
                .map(|(t, k)| {
                    json!({
                        "values": t.0.iter().map(Value::to_json).collect::<Vec<_>>(),
                        "vector": k.to_json(),
                    })
                })
                .collect();
            (n.clone(), json!({"schema": schema_json(&r.schema), "rows": rows}))
        })
        .collect();
    let mut out = json!({
        "base": db.base.to_string(),
        "world_count": db.world_count,
        "relations": relations,
    });
    if let Some(ps) = &db.probabilities {
        out["probabilities"] = json!(ps);
    }
    out
}

pub fn world_db_from_json(j: &Json) -> Result<WorldDb> {
    let base: Semiring = j.get("base").and_then(Json::as_str).unwrap_or("B").parse()?;
    let n = field(j, "world_count")?
        .as_u64()
        .ok_or_else(|| Error::parse(0, "`world_count` must be a positive integer"))? as usize;
    let mut db = WorldDb::new(base, n)?;
    let vsr = db.semiring();
    let rels = field(j, "relations")?
        .as_object()
        .ok_or_else(|| Error::parse(0, "`relations` must be an object"))?;
    for (name, rj) in rels {
        let mut r = KRelation::new(schema_from_json(name, field(rj, "schema")?)?, vsr.clone());
        for row in rows_of(rj)? {
            r.add(
                values_from_json(field(row, "values")?)?,
                vsr.element_from_json(field(row, "vector")?)?,
            )?;
        }
        db.insert(name.clone(), r)?;
    }
    match j.get("probabilities") {
        Some(ps) => {
            let ps: Vec<f64> =
                serde_json::from_value(ps.clone()).map_err(|e| Error::parse(0, format!("`probabilities`: {e}")))?;
            db.with_probabilities(ps)
        }
        None => Ok(db),
    }
}

fn pair_parts(k: &Element) -> (Json, Json) {
    match k.as_pair() {
        Some((d, c)) => (d.to_json(), c.to_json()),
        None => (k.to_json(), Json::Null),
    }
}

pub fn ua_relation_to_json(r: &KRelation) -> Json {
    json!({
        "schema": schema_json(&r.schema),
        "rows": r.iter().map(|(t, k)| {
            let (d, c) = pair_parts(k);
            json!({"values": t.0.iter().map(Value::to_json).collect::<Vec<_>>(), "d": d, "c": c})
        }).collect::<Vec<_>>(),
    })
}

pub fn uadb_to_json(db: &UaDb) -> Json {
    let relations: Map<String, Json> = db
        .relations
        .iter()
        .map(|(n, r)| (n.clone(), ua_relation_to_json(r)))
        .collect();
    json!({"base": db.base.to_string(), "relations": relations})
}

pub fn uadb_from_json(j: &Json) -> Result<UaDb> {
    let base: Semiring = field(j, "base")?
        .as_str()
        .ok_or_else(|| Error::parse(0, "`base` must be a string"))?
        .parse()?;
    let sr = Semiring::pair(base.clone());
    let rels = field(j, "relations")?
        .as_object()
        .ok_or_else(|| Error::parse(0, "`relations` must be an object"))?;
    let mut out = Database::new();
    for (name, rj) in rels {
        let mut r = KRelation::new(schema_from_json(name, field(rj, "schema")?)?, sr.clone());
        for row in rows_of(rj)? {
            let d = base.element_from_json(field(row, "d")?)?;
            let c = base.element_from_json(field(row, "c")?)?;
            r.add(values_from_json(field(row, "values")?)?, Element::pair(d, c))?;
        }
        out.insert(name.clone(), r);
    }
    UaDb::from_relations(base, out)
}

pub fn uadb_from_json_text(text: &str) -> Result<UaDb> {
    uadb_from_json(&parse_json(text)?)
}

fn parse_probability(cell: &str, line: usize) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad probability `{cell}`")))
}

fn parse_flag(cell: &str, line: usize) -> Result<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Ok(false),
        "1" | "true" | "yes" => Ok(true),
        _ => Err(Error::parse(line, format!("bad flag `{cell}`"))),
    }
}

/// TI-DB from CSV: value columns plus an optional `P` probability column or
/// `OPTIONAL` flag column.
pub fn ti_from_csv(name: &str, text: &str) -> Result<TiDb> {
    let t = read_table(text)?;
    let (p, opt) = (t.column("P"), t.column("OPTIONAL"));
    let value_cols: Vec<usize> = (0..t.header.len())
        .filter(|&i| Some(i) != p && Some(i) != opt)
        .collect();
    let names: Vec<&str> = value_cols.iter().map(|&i| t.header[i].as_str()).collect();
    let schema = Schema::new(name, &names).map_err(|e| Error::parse(1, e.to_string()))?;
    let mut rows = Vec::new();
    for (line, row) in &t.rows {
        let tuple = Tuple(value_cols.iter().map(|&i| cell_value(&row[i])).collect());
        rows.push(match (p, opt) {
            (Some(p), _) => TiRow::with_probability(tuple, parse_probability(&row[p], *line)?),
            (None, Some(o)) if parse_flag(&row[o], *line)? => TiRow::optional(tuple),
            _ => TiRow::certain(tuple),
        });
    }
    TiDb::new(schema, rows)
}

/// x-DB from CSV: `Xid`, `Altid`, value columns, optional `P` and
/// `OPTIONAL`. Alternatives keep file order within each x-tuple.
pub fn xdb_from_csv(name: &str, text: &str) -> Result<XDb> {
    let t = read_table(text)?;
    let xid = t.column("Xid").ok_or_else(|| Error::parse(1, "missing `Xid` column"))?;
    let alt = t.column("Altid").or_else(|| t.column("Aid"));
    let (p, opt) = (t.column("P"), t.column("OPTIONAL"));
    let skip = [Some(xid), alt, p, opt];
    let value_cols: Vec<usize> = (0..t.header.len()).filter(|i| !skip.contains(&Some(*i))).collect();
    let names: Vec<&str> = value_cols.iter().map(|&i| t.header[i].as_str()).collect();
    let schema = Schema::new(name, &names).map_err(|e| Error::parse(1, e.to_string()))?;

    struct Group {
        alts: Vec<Tuple>,
        ps: Vec<f64>,
        optional: bool,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    for (line, row) in &t.rows {
        let key = row[xid].clone();
        if key.is_empty() {
            return Err(Error::parse(*line, "empty `Xid`"));
        }
        let g = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Group {
                alts: Vec::new(),
                ps: Vec::new(),
                optional: false,
            }
        });
        g.alts
            .push(Tuple(value_cols.iter().map(|&i| cell_value(&row[i])).collect()));
        if let Some(p) = p {
            g.ps.push(parse_probability(&row[p], *line)?);
        }
        if let Some(o) = opt {
            g.optional |= parse_flag(&row[o], *line)?;
        }
    }
    let xtuples = order
        .into_iter()
        .map(|k| {
            let g = groups.remove(&k).expect("grouped");
            if p.is_some() {
                XTuple::with_probabilities(g.alts, g.ps)
            } else if g.optional {
                XTuple::optional(g.alts)
            } else {
                XTuple::certain(g.alts)
            }
        })
        .collect();
    XDb::new(schema, xtuples)
}

/// Variable domains and the global condition of a C-table.
pub fn ctable_vars_from_json(j: &Json) -> Result<(BTreeMap<String, Variable>, Condition)> {
    let vars = field(j, "variables")?
        .as_object()
        .ok_or_else(|| Error::parse(0, "`variables` must be an object"))?;
    let mut out = BTreeMap::new();
    for (x, v) in vars {
        let (cands, ps) = match v {
            Json::Array(_) => (v, None),
            _ => (field(v, "candidates")?, v.get("probabilities")),
        };
        let cands = cands
            .as_array()
            .ok_or_else(|| Error::parse(0, format!("candidates of `{x}` must be an array")))?
            .iter()
            .map(Value::from_json)
            .collect::<Result<Vec<_>>>()?;
        let var = match ps {
            Some(ps) => {
                let ps: Vec<f64> = serde_json::from_value(ps.clone())
                    .map_err(|e| Error::parse(0, format!("probabilities of `{x}`: {e}")))?;
                Variable::with_probabilities(cands, ps)
            }
            None => Variable::over(cands),
        };
        out.insert(x.clone(), var);
    }
    let global = match j.get("global").and_then(Json::as_str) {
        Some(g) => Condition::parse(g)?,
        None => Condition::True,
    };
    Ok((out, global))
}

/// C-table from CSV: value columns `A1..An`, variable columns `V1..Vn`
/// naming the variable that replaces the value (empty for constants), and
/// an `LC` local-condition column. Domains come from the sidecar JSON.
pub fn ctable_from_csv(name: &str, text: &str, vars_json: &str) -> Result<CTable> {
    let t = read_table(text)?;
    let lc = t.column("LC");
    let is_var_col = |h: &str| {
        h.len() > 1 && (h.starts_with('V') || h.starts_with('v')) && h[1..].chars().all(|c| c.is_ascii_digit())
    };
    let value_cols: Vec<usize> = (0..t.header.len())
        .filter(|&i| Some(i) != lc && !is_var_col(&t.header[i]))
        .collect();
    let var_cols: Vec<Option<usize>> = (1..=value_cols.len()).map(|k| t.column(&format!("V{k}"))).collect();
    let names: Vec<&str> = value_cols.iter().map(|&i| t.header[i].as_str()).collect();
    let schema = Schema::new(name, &names).map_err(|e| Error::parse(1, e.to_string()))?;
    let mut rows = Vec::new();
    for (line, row) in &t.rows {
        let values = value_cols
            .iter()
            .zip(&var_cols)
            .map(|(&i, v)| match v.map(|v| row[v].as_str()) {
                Some(x) if !x.is_empty() && !x.eq_ignore_ascii_case("null") => Term::var(x),
                _ => Term::Const(cell_value(&row[i])),
            })
            .collect();
        let condition = match lc.map(|i| row[i].trim()) {
            Some(c) if !c.is_empty() => Condition::parse(c).map_err(|e| Error::parse(*line, e.to_string()))?,
            _ => Condition::True,
        };
        rows.push(CRow::new(values, condition));
    }
    let (variables, global) = ctable_vars_from_json(&parse_json(vars_json)?)?;
    CTable::new(schema, rows, global, variables)
}

/// Model kinds accepted on input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Ti,
    X,
    CTable,
    Deterministic,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        match s {
            "ti" => Ok(ModelKind::Ti),
            "x" | "xdb" => Ok(ModelKind::X),
            "ctable" | "c" => Ok(ModelKind::CTable),
            "det" => Ok(ModelKind::Deterministic),
            _ => Err(Error::parse(0, format!("unknown model kind `{s}`"))),
        }
    }
}

/// Reads an uncertain relation of the given kind; deterministic inputs
/// become TI-DBs without optional tuples.
pub fn read_model(kind: ModelKind, name: &str, text: &str, vars_json: Option<&str>) -> Result<UncertainRelation> {
    Ok(match kind {
        ModelKind::Ti => UncertainRelation::Ti(ti_from_csv(name, text)?),
        ModelKind::Deterministic => {
            let r = relation_from_csv(name, text, &Semiring::Boolean)?;
            UncertainRelation::Ti(TiDb::deterministic(r.schema.clone(), r.tuples().cloned())?)
        }
        ModelKind::X => UncertainRelation::X(xdb_from_csv(name, text)?),
        ModelKind::CTable => {
            let vars = vars_json.unwrap_or(r#"{"variables": {}}"#);
            UncertainRelation::C(ctable_from_csv(name, text, vars)?)
        }
    })
}

/// Attribute-annotated relation from CSV: `v!u` marks uncertain cells and
/// optional `_u`, `_c` columns hold the row annotation (default `(0,1)`).
pub fn annotated_from_csv(name: &str, text: &str) -> Result<AnnotatedRelation> {
    let t = read_table(text)?;
    let (u, c) = (t.column("_u"), t.column("_c"));
    let value_cols: Vec<usize> = (0..t.header.len()).filter(|&i| Some(i) != u && Some(i) != c).collect();
    let names: Vec<&str> = value_cols.iter().map(|&i| t.header[i].as_str()).collect();
    let mut r = AnnotatedRelation::new(Schema::new(name, &names).map_err(|e| Error::parse(1, e.to_string()))?);
    for (line, row) in &t.rows {
        let count = |col: Option<usize>, default: u64| -> Result<u64> {
            col.map_or(Ok(default), |i| {
                row[i]
                    .parse()
                    .map_err(|_| Error::parse(*line, format!("bad count `{}`", row[i])))
            })
        };
        let k = UaCount::uc(count(u, 0)?, count(c, 1)?);
        let values = value_cols.iter().map(|&i| AnnotatedValue::from_cell(&row[i])).collect();
        r.add(values, k).map_err(|e| Error::parse(*line, e.to_string()))?;
    }
    Ok(r)
}

pub fn annotated_to_csv(r: &AnnotatedRelation) -> Result<String> {
    let mut header = r.schema.names();
    header.extend(["_u".to_string(), "_c".to_string()]);
    write_table(
        &header,
        r.iter().map(|(t, k)| {
            let mut row: Vec<String> = t.iter().map(AnnotatedValue::to_cell).collect();
            row.extend([k.uncertain().to_string(), k.c.to_string()]);
            row
        }),
    )
}

pub fn annotated_to_json(r: &AnnotatedRelation) -> Json {
    json!({
        "schema": schema_json(&r.schema),
        "rows": r.iter().map(|(t, k)| json!({
            "values": t.iter().map(|v| json!({"value": v.value.to_json(), "certain": v.certain})).collect::<Vec<_>>(),
            "u": k.uncertain(),
            "c": k.c,
        })).collect::<Vec<_>>(),
    })
}

pub fn annotated_from_json(name: &str, j: &Json) -> Result<AnnotatedRelation> {
    let mut r = AnnotatedRelation::new(schema_from_json(name, field(j, "schema")?)?);
    for row in rows_of(j)? {
        let values = field(row, "values")?
            .as_array()
            .ok_or_else(|| Error::parse(0, "`values` must be an array"))?
            .iter()
            .map(|v| {
                Ok(AnnotatedValue {
                    value: Value::from_json(field(v, "value")?)?,
                    certain: field(v, "certain")?.as_bool().unwrap_or(false),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = |k: &str| -> Result<u64> {
            field(row, k)?
                .as_u64()
                .ok_or_else(|| Error::parse(0, format!("`{k}` must be a count")))
        };
        r.add(values, UaCount::uc(n("u")?, n("c")?))?;
    }
    Ok(r)
}
