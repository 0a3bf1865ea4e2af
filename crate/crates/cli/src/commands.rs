use std::io::Write;
use std::time::Instant;

use uadb_core::io::{annotated_from_csv, read_file, read_model, uadb_from_json_text, uadb_to_json};
use uadb_core::models::{BgwOptions, UncertainDb};
use uadb_core::rewriter::{emit_labeling_sql, emit_sql, rewrite_ra, LabelingSql};
use uadb_core::uaa::{eval_uaa, AnnotatedDb, AnnotatedRelation, UaaQuery};
use uadb_core::uadb::{eval_ua, h_cert_relation, label_database, UaDb};
use uadb_core::worlds::{expand_database, oracle_certain_with_budget};
use uadb_core::Query;

use crate::args::{
    AccessArgs, Command, Experiment, FnrArgs, Format, InputArgs, LabelArgs, LabelingKind, Mode, QueryArgs, RewriteArgs,
    UtilityArgs, VerifyArgs,
};
use crate::experiments::{self, FnrParams, UtilityParams};
use crate::metrics::MetricsReport;
use crate::render;
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

pub fn run(cmd: Command, out: Out) -> Result<(), CliError> {
    match cmd {
        Command::Label(a) => label(a, out),
        Command::Query(a) => query(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Rewrite(a) => rewrite(a, out),
        Command::Experiment(Experiment::Fnr(a)) => fnr(a, out),
        Command::Experiment(Experiment::Utility(a)) => utility(a, out),
        Command::Experiment(Experiment::Access(a)) => access(a, out),
    }
}

fn bgw_options(a: &InputArgs) -> BgwOptions {
    BgwOptions {
        seed: a.seed,
        include_optional: a.include_optional,
    }
}

pub fn load_models(a: &InputArgs) -> Result<UncertainDb, CliError> {
    if a.budget == 0 {
        return Err(CliError::Usage("the world budget must be at least 1".into()));
    }
    let mut db = UncertainDb::new();
    for spec in &a.inputs {
        let text = read_file(&spec.path)?;
        let vars = a
            .vars
            .iter()
            .find(|v| v.name == spec.name)
            .map(|v| read_file(&v.path))
            .transpose()?;
        let m = read_model(spec.kind, &spec.name, &text, vars.as_deref())
            .map_err(|e| CliError::Input(format!("{}: {e}", spec.path.display())))?;
        if db.insert(spec.name.clone(), m).is_some() {
            return Err(CliError::Usage(format!("relation `{}` given twice", spec.name)));
        }
    }
    Ok(db)
}

fn labeled(a: &InputArgs) -> Result<UaDb, CliError> {
    let db = load_models(a)?;
    Ok(label_database(&db, &a.semiring.semiring(), &bgw_options(a), a.budget)?)
}

fn label(a: LabelArgs, out: Out) -> Result<(), CliError> {
    if a.input.inputs.is_empty() {
        return Err(CliError::Usage("nothing to label; pass inputs with -i".into()));
    }
    let text = format!("{:#}\n", uadb_to_json(&labeled(&a.input)?));
    match a.output {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Relations from `--db` and from labeled `-i` inputs.
fn ua_inputs(a: &QueryArgs) -> Result<UaDb, CliError> {
    let mut db = match &a.db {
        Some(p) => uadb_from_json_text(&read_file(p)?)?,
        None => UaDb {
            base: a.input.semiring.semiring(),
            relations: Default::default(),
        },
    };
    if !a.input.inputs.is_empty() {
        let fresh = labeled(&a.input)?;
        if a.db.is_some() && fresh.base != db.base {
            return Err(CliError::Usage("--db and -i inputs use different semirings".into()));
        }
        db.base = fresh.base;
        db.relations.extend(fresh.relations);
    }
    Ok(db)
}

fn query(a: QueryArgs, out: Out) -> Result<(), CliError> {
    if a.emit_sql {
        if a.mode == Mode::Uaa {
            return Err(CliError::Usage("SQL is only emitted for tuple-level queries".into()));
        }
        let q = Query::parse(&a.query)?;
        writeln!(out, "{}", emit_sql(&q)?)?;
        return Ok(());
    }
    match a.mode {
        Mode::Ua => {
            let q = Query::parse(&a.query)?;
            if !a.annotated.is_empty() {
                return Err(CliError::Usage("annotated inputs need --mode uaa".into()));
            }
            let r = eval_ua(&ua_inputs(&a)?, &q)?;
            out.write_all(render::ua_relation(&r, a.format)?.as_bytes())?;
        }
        Mode::Uaa => {
            let q = UaaQuery::parse(&a.query)?;
            let mut db = AnnotatedDb::new();
            if a.db.is_some() || !a.input.inputs.is_empty() {
                for (n, r) in ua_inputs(&a)?.relations {
                    db.insert(n, AnnotatedRelation::from_ua(&r)?);
                }
            }
            for np in &a.annotated {
                let r = annotated_from_csv(&np.name, &read_file(&np.path)?)
                    .map_err(|e| CliError::Input(format!("{}: {e}", np.path.display())))?;
                db.insert(np.name.clone(), r);
            }
            let r = eval_uaa(&db, &q)?;
            out.write_all(render::annotated_relation(&r, a.format)?.as_bytes())?;
        }
    }
    Ok(())
}

/// Labeled answers against the exact certain answers.
pub fn verify_report(input: &InputArgs, q: &Query) -> Result<MetricsReport, CliError> {
    let db = load_models(input)?;
    let sr = input.semiring.semiring();
    let started = Instant::now();
    let ua = label_database(&db, &sr, &bgw_options(input), input.budget)?;
    let answer = eval_ua(&ua, q)?;
    let labels = h_cert_relation(&answer)?;
    let label_time = started.elapsed();

    let started = Instant::now();
    let worlds = expand_database(&db, &sr, input.budget)?;
    let exact = oracle_certain_with_budget(&worlds, q, input.budget)?;
    let oracle_time = started.elapsed();

    let mut m = MetricsReport::compare(&labels, &exact, &sr, answer.len())?;
    m.label_time = label_time;
    m.oracle_time = oracle_time;
    Ok(m)
}

fn verify(a: VerifyArgs, out: Out) -> Result<(), CliError> {
    let q = Query::parse(&a.query)?;
    let m = verify_report(&a.input, &q)?;
    match a.format {
        Format::Json => writeln!(out, "{:#}", m.to_json())?,
        Format::Csv => {
            let j = m.to_json();
            let obj = j.as_object().expect("report object");
            writeln!(out, "{}", obj.keys().cloned().collect::<Vec<_>>().join(","))?;
            let vals: Vec<String> = obj.values().map(|v| v.to_string()).collect();
            writeln!(out, "{}", vals.join(","))?;
        }
        Format::Table => writeln!(out, "{m}")?,
    }
    if m.false_positives > 0 {
        return Err(CliError::Invariant(format!(
            "{} answers labeled above their certain annotation",
            m.false_positives
        )));
    }
    Ok(())
}

fn rewrite(a: RewriteArgs, out: Out) -> Result<(), CliError> {
    if let Some(kind) = a.labeling {
        if a.attrs.is_empty() {
            return Err(CliError::Usage("--labeling needs --attrs".into()));
        }
        let spec = match kind {
            LabelingKind::Ti => LabelingSql::Ti {
                relation: a.relation.clone(),
                attrs: a.attrs.clone(),
                prob: a.prob.clone(),
            },
            LabelingKind::X => LabelingSql::X {
                relation: a.relation.clone(),
                attrs: a.attrs.clone(),
                xid: a.xid.clone(),
                altid: a.altid.clone(),
                prob: a.prob.clone(),
            },
            LabelingKind::Ctable => LabelingSql::CTable {
                relation: a.relation.clone(),
                attrs: a.attrs.clone(),
                vars: a.var_cols.clone(),
                condition: a.condition.clone(),
            },
        };
        writeln!(out, "{}", emit_labeling_sql(&spec))?;
    }
    match &a.query {
        Some(text) => {
            let q = Query::parse(text)?;
            if a.sql {
                writeln!(out, "{}", emit_sql(&q)?)?;
            } else {
                writeln!(out, "{}", rewrite_ra(&q)?)?;
            }
        }
        None if a.labeling.is_none() => {
            return Err(CliError::Usage("give a query or --labeling".into()));
        }
        None => {}
    }
    Ok(())
}

fn fnr(a: FnrArgs, out: Out) -> Result<(), CliError> {
    if a.cols == 0 || !(0.0..=1.0).contains(&a.rate) {
        return Err(CliError::Usage("need at least one column and a rate in [0, 1]".into()));
    }
    let report = experiments::run_fnr(&FnrParams {
        rows: a.rows,
        cols: a.cols,
        rate: a.rate,
        queries: a.queries,
        seed: a.seed,
    })?;
    match a.format {
        Format::Table => out.write_all(report.to_table().as_bytes())?,
        Format::Csv => out.write_all(report.to_csv().as_bytes())?,
        Format::Json => writeln!(out, "{:#}", report.to_json())?,
    }
    let bad = report.violations();
    if !bad.is_empty() {
        return Err(CliError::Invariant(bad.join("; ")));
    }
    Ok(())
}

fn utility(a: UtilityArgs, out: Out) -> Result<(), CliError> {
    if a.rates.iter().any(|&r| r > 100) {
        return Err(CliError::Usage("rates are percentages".into()));
    }
    let rows = experiments::run_utility(&UtilityParams {
        rows: a.rows,
        rates: a.rates,
        seed: a.seed,
    })?;
    match a.format {
        Format::Table => out.write_all(experiments::utility_table(&rows).as_bytes())?,
        Format::Csv => out.write_all(experiments::utility_csv(&rows).as_bytes())?,
        Format::Json => writeln!(out, "{:#}", experiments::utility_json(&rows))?,
    }
    let bad = experiments::utility_violations(&rows);
    if !bad.is_empty() {
        return Err(CliError::Invariant(bad.join("; ")));
    }
    Ok(())
}

fn access(a: AccessArgs, out: Out) -> Result<(), CliError> {
    let r = experiments::run_access(a.trials, a.worlds, a.seed)?;
    writeln!(out, "axiom violations  {}", r.axiom_violations.len())?;
    writeln!(out, "trials            {}", r.trials)?;
    writeln!(out, "informative       {}", r.informative)?;
    writeln!(out, "unsound           {}", r.unsound.len())?;
    let bad: Vec<String> = r.axiom_violations.into_iter().chain(r.unsound).collect();
    if !bad.is_empty() {
        return Err(CliError::Invariant(bad.join("; ")));
    }
    Ok(())
}
