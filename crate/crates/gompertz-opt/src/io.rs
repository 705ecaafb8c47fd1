//! CSV and `key=value` readers and writers.
//!
//! Floats are written in Rust's shortest round-trip form, so a table saved
//! and loaded again is bit-identical.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use gompertz_core::{AgeProfile, CohortTable, FitResult, PolicyCurve};

use crate::error::{AppError, AppResult};
use crate::sim::SimOutcome;

fn create(path: &Path) -> AppResult<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path, e: csv::Error) -> AppError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => AppError::Data {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> AppResult<()> {
    let mut w = create(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn s(x: f64) -> String {
    x.to_string()
}

/// Columns `m,u,du,c,h,residual,bracket_lo,bracket_hi`. Bracket columns are
/// empty when the solve skipped them.
pub fn write_curve_csv(path: &Path, curve: &PolicyCurve) -> AppResult<()> {
    let lo = curve.bracket_lo();
    let hi = curve.bracket_hi();
    let rows = (0..curve.nodes().len()).map(|i| {
        let b = |v: &[f64]| v.get(i).map(|x| s(*x)).unwrap_or_default();
        vec![
            s(curve.nodes()[i]),
            s(curve.u()[i]),
            s(curve.du()[i]),
            s(curve.u()[i]),
            s(curve.h()[i]),
            s(curve.residual()[i]),
            b(lo),
            b(hi),
        ]
    });
    write_rows(
        path,
        &["m", "u", "du", "c", "h", "residual", "bracket_lo", "bracket_hi"],
        rows,
    )
}

/// Columns `age,mortality,c,h,share`.
pub fn write_profile_csv(path: &Path, p: &AgeProfile) -> AppResult<()> {
    let rows = (0..p.ages.len()).map(|i| {
        vec![
            s(p.ages[i]),
            s(p.mortality[i]),
            s(p.consumption_rate[i]),
            s(p.health_rate[i]),
            s(p.health_share[i]),
        ]
    });
    write_rows(path, &["age", "mortality", "c", "h", "share"], rows)
}

/// A parsed cohort file and the number of rows dropped for a zero or
/// missing rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCohort {
    pub table: CohortTable,
    pub dropped: usize,
}

/// Reads an `age,rate` file. Rows with a zero or empty rate are dropped.
pub fn read_cohort_csv(path: &Path, cohort_year: i32) -> AppResult<LoadedCohort> {
    let f = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(f);
    let bad = |line: usize, msg: String| AppError::Data {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let mut dropped = 0;
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if !header_seen {
            if rec.len() != 2 || &rec[0] != "age" || &rec[1] != "rate" {
                return Err(bad(line, "header must be age,rate".into()));
            }
            header_seen = true;
            continue;
        }
        if rec.len() != 2 {
            return Err(bad(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let age: f64 = rec[0]
            .parse()
            .map_err(|_| bad(line, format!("age {:?} is not a number", &rec[0])))?;
        if !age.is_finite() {
            return Err(bad(line, format!("age {age} is not finite")));
        }
        if rec[1].is_empty() {
            dropped += 1;
            continue;
        }
        let rate: f64 = rec[1]
            .parse()
            .map_err(|_| bad(line, format!("rate {:?} is not a number", &rec[1])))?;
        if rate == 0.0 {
            dropped += 1;
            continue;
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(bad(line, format!("rate {rate} must be positive and finite")));
        }
        if let Some(&(prev, _)) = rows.last() {
            if !(age > prev) {
                return Err(bad(line, format!("age {age} does not increase")));
            }
        }
        rows.push((age, rate));
    }
    if !header_seen {
        return Err(bad(1, "header must be age,rate".into()));
    }
    let table = CohortTable::new(cohort_year, &rows)?;
    Ok(LoadedCohort { table, dropped })
}

pub fn write_cohort_csv(path: &Path, table: &CohortTable) -> AppResult<()> {
    write_rows(path, &["age", "rate"], table.rows().map(|(a, r)| vec![s(a), s(r)]))
}

pub(crate) fn write_text(path: &Path, text: &str) -> AppResult<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Flat `key=value` form of a fit.
pub fn format_fit(fit: &FitResult) -> String {
    let mut out = String::new();
    for p in &fit.params {
        out.push_str(&format!("{}={}\n", p.name, s(p.value)));
        if let Some(se) = p.std_err {
            out.push_str(&format!("{}_std_err={}\n", p.name, s(se)));
        }
    }
    out.push_str(&format!("loss={}\n", s(fit.loss)));
    out.push_str(&format!("n_evals={}\n", fit.n_evals));
    out.push_str(&format!("converged={}\n", fit.converged));
    out.push_str(&format!("boundary={}\n", fit.boundary));
    for (k, v) in &fit.diagnostics {
        out.push_str(&format!("{k}={}\n", s(*v)));
    }
    out
}

pub fn write_fit(path: &Path, fit: &FitResult) -> AppResult<()> {
    write_text(path, &format_fit(fit))
}

/// Columns `age,data,fitted` for one cohort.
pub fn write_fitted_csv(path: &Path, table: &CohortTable, fitted: &[f64]) -> AppResult<()> {
    let rows = table.rows().zip(fitted).map(|((a, d), f)| vec![s(a), s(d), s(*f)]);
    write_rows(path, &["age", "data", "fitted"], rows)
}

/// One-row summary. `analytic` is left empty when no closed form applies.
pub fn write_sim_summary(path: &Path, o: &SimOutcome, analytic: Option<f64>) -> AppResult<()> {
    let row = vec![
        o.welfare.len().to_string(),
        s(o.mean),
        s(o.std_err),
        s(o.truncation_bound),
        analytic.map(s).unwrap_or_default(),
        o.truncated_paths.to_string(),
        o.horizon_adequate.to_string(),
    ];
    write_rows(
        path,
        &[
            "n_paths",
            "mean",
            "std_err",
            "truncation_bound",
            "analytic",
            "truncated_paths",
            "horizon_adequate",
        ],
        std::iter::once(row),
    )
}

/// Columns `path,welfare,n_deaths,tau1`; `tau1` is empty without a death.
pub fn write_sim_paths(path: &Path, o: &SimOutcome) -> AppResult<()> {
    let rows = (0..o.welfare.len()).map(|i| {
        let t = o.first_death[i];
        vec![
            i.to_string(),
            s(o.welfare[i]),
            o.n_deaths[i].to_string(),
            if t.is_finite() { s(t) } else { String::new() },
        ]
    });
    write_rows(path, &["path", "welfare", "n_deaths", "tau1"], rows)
}

/// Writes any table of floats with the given header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> AppResult<()> {
    write_rows(path, header, rows.iter().map(|r| r.iter().map(|x| s(*x)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn zero_and_missing_rates_are_dropped() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "c.csv", "age,rate\n40,0.002\n41,0\n42,\n43,0.0024\n");
        let c = read_cohort_csv(&p, 1900).unwrap();
        assert_eq!(c.dropped, 2);
        assert_eq!(c.table.len(), 2);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "c.csv", "age,rate\n40,0.002\n41,abc\n");
        match read_cohort_csv(&p, 1900) {
            Err(AppError::Data { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let p = write(d.path(), "h.csv", "x,y\n40,0.002\n");
        assert!(matches!(read_cohort_csv(&p, 1900), Err(AppError::Data { line: 1, .. })));
        let p = write(d.path(), "o.csv", "age,rate\n40,0.002\n39,0.002\n");
        assert!(matches!(read_cohort_csv(&p, 1900), Err(AppError::Data { line: 3, .. })));
    }

    #[test]
    fn cohort_round_trip_is_bit_identical() {
        let d = tempfile::tempdir().unwrap();
        let rows: Vec<(f64, f64)> = (0..=100).map(|t| (t as f64, 1.9e-4 * (0.077 * t as f64).exp())).collect();
        let t = CohortTable::new(1900, &rows).unwrap();
        let p = d.path().join("g.csv");
        write_cohort_csv(&p, &t).unwrap();
        let back = read_cohort_csv(&p, 1900).unwrap();
        assert_eq!(back.dropped, 0);
        for (a, b) in back.table.rows().zip(t.rows()) {
            assert_eq!(a.0.to_bits(), b.0.to_bits());
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }
}
