//! CSV emission of a [`Trace`].

use std::path::{Path, PathBuf};

use super::{SimError, Trace, TraceRecord};

/// Formats like C's `%.6g`: six significant digits, trailing zeros
/// stripped, exponent form outside `[1e-4, 1e6)`.
pub fn format_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    strip_zeros(&format!("{v:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

type Columns = (Vec<String>, fn(&TraceRecord) -> Vec<f64>);

fn table(trace: &Trace, name: &str) -> Columns {
    match name {
        "rates" => (
            trace.path_labels.iter().map(|p| format!("x_{p}")).collect(),
            |r| r.x.concat(),
        ),
        "margins" => (
            trace
                .link_labels
                .iter()
                .map(|l| format!("sigma_{l}"))
                .chain(trace.link_labels.iter().map(|l| format!("chat_{l}")))
                .collect(),
            |r| [r.sigma.as_slice(), r.c_hat.as_slice()].concat(),
        ),
        "prices" => (
            trace
                .link_labels
                .iter()
                .map(|l| format!("lambda_{l}"))
                .chain(trace.path_labels.iter().map(|p| format!("mu_{p}")))
                .collect(),
            |r| [r.lambda.clone(), r.mu.concat()].concat(),
        ),
        "objective" => (
            ["primal", "dual", "gap", "iterations", "converged"]
                .map(String::from)
                .to_vec(),
            |r| {
                vec![
                    r.primal,
                    r.dual,
                    r.gap,
                    r.iterations as f64,
                    if r.converged { 1.0 } else { 0.0 },
                ]
            },
        ),
        _ => unreachable!("unknown table {name}"),
    }
}

pub const CSV_FILES: [&str; 4] = ["rates", "margins", "prices", "objective"];

/// Renders one table as CSV text.
pub fn render_csv(trace: &Trace, name: &str) -> Result<String, SimError> {
    if trace.records.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let (columns, values) = table(trace, name);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["slot".to_string(), "period".to_string()];
    header.extend(columns);
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.slot.to_string(), r.period.to_string()];
        row.extend(values(r).into_iter().map(format_g6));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| SimError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

/// Writes `rates.csv`, `margins.csv`, `prices.csv` and `objective.csv` into
/// `dir`, creating it if needed. Nothing is written for an empty trace.
pub fn emit_csv(trace: &Trace, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, SimError> {
    if trace.records.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let rendered = CSV_FILES
        .iter()
        .map(|n| render_csv(trace, n).map(|text| (n, text)))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(dir.as_ref())?;
    let mut out = Vec::new();
    for (n, text) in rendered {
        let path = dir.as_ref().join(format!("{n}.csv"));
        std::fs::write(&path, text)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (1.234567, "1.23457"),
            (123456.7, "123457"),
            (999999.5, "1e+06"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (9.99984, "9.99984"),
            (0.1 + 0.2, "0.3"),
            (100.0, "100"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g6(v), want, "{v}");
        }
        assert_eq!(format_g6(f64::NAN), "nan");
    }

    fn trace(records: Vec<TraceRecord>) -> Trace {
        Trace {
            scenario: "t".into(),
            max_rates: vec![10.0],
            path_labels: vec!["s1".into(), "s2".into()],
            link_labels: vec!["s-d".into()],
            periods: vec![],
            records,
        }
    }

    #[test]
    fn empty_trace_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("out");
        assert!(matches!(
            emit_csv(&trace(vec![]), &sub),
            Err(SimError::EmptyTrace)
        ));
        assert!(!sub.exists());
    }

    #[test]
    fn headers_and_rows() {
        let rec = TraceRecord {
            slot: 1,
            period: 1,
            x: vec![vec![1.5, 2.0]],
            sigma: vec![0.25],
            c_hat: vec![10.0],
            lambda: vec![0.1],
            mu: vec![vec![0.0, 3.0]],
            primal: 1.0,
            dual: 1.01,
            gap: 0.01,
            iterations: 400,
            converged: true,
        };
        let t = trace(vec![rec]);
        assert_eq!(
            render_csv(&t, "rates").unwrap(),
            "slot,period,x_s1,x_s2\n1,1,1.5,2\n"
        );
        assert_eq!(
            render_csv(&t, "margins").unwrap(),
            "slot,period,sigma_s-d,chat_s-d\n1,1,0.25,10\n"
        );
        assert_eq!(
            render_csv(&t, "prices").unwrap(),
            "slot,period,lambda_s-d,mu_s1,mu_s2\n1,1,0.1,0,3\n"
        );
        assert_eq!(
            render_csv(&t, "objective").unwrap(),
            "slot,period,primal,dual,gap,iterations,converged\n1,1,1,1.01,0.01,400,1\n"
        );
    }
}
