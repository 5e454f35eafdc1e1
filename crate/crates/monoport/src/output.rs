//! Port trajectories as CSV and solver logs.

use std::fmt::Write as _;
use std::io::Write;

use monoport_core::network::Branch;
use monoport_core::solvers::{format_log, ProblemReport};
use monoport_core::PeriodicSignal;

use crate::runspec::Verbosity;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header `t,i,v`, then one row per sample with `t_j = jT/N`. With
/// `branches`, every tree path adds `i:<path>` and `v:<path>` columns.
pub fn write_csv<W: Write>(
    out: W,
    current: &PeriodicSignal,
    voltage: &PeriodicSignal,
    branches: Option<&[Branch]>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let branches = branches.unwrap_or(&[]);
    let mut header = vec!["t".to_string(), "i".into(), "v".into()];
    for b in branches {
        header.push(format!("i:{}", b.path));
        header.push(format!("v:{}", b.path));
    }
    w.write_record(&header)?;
    let (n, period) = (current.len(), current.period());
    for j in 0..n {
        let mut row = vec![
            fmt_num(j as f64 * period / n as f64),
            fmt_num(current.samples()[j]),
            fmt_num(voltage.samples()[j]),
        ];
        for b in branches {
            row.push(fmt_num(b.current.get(j).copied().unwrap_or(f64::NAN)));
            row.push(fmt_num(b.voltage.get(j).copied().unwrap_or(f64::NAN)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `iter=<k> residual=<r>` lines when verbose, then the summary and audit
/// lines. Empty when quiet.
pub fn solve_log(r: &ProblemReport, verbosity: Verbosity) -> String {
    if verbosity == Verbosity::Quiet {
        return String::new();
    }
    let full = format_log(&r.report);
    let mut s = match verbosity {
        Verbosity::Verbose => full,
        _ => full.lines().last().map(|l| format!("{l}\n")).unwrap_or_default(),
    };
    let a = &r.audit;
    let _ = writeln!(s, "audit kcl={:e} kvl={:e} device={:e}", a.kcl, a.kvl, a.device);
    for note in &a.notes {
        let _ = writeln!(s, "audit note: {note}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let i = PeriodicSignal::from_vec(vec![1.0, -0.5], 2.0).unwrap();
        let v = PeriodicSignal::from_vec(vec![0.1, 1.0 / 3.0], 2.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &i, &v, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,i,v");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0,1.0000000000000001e-1");
        assert_eq!(lines.len(), 3);
        let third: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
    }
}
