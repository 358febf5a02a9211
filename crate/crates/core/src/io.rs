//! CSV artifacts: dynamics traces and reconstruction tables.

use std::io::{Read, Write};

use crate::dynamics::{CoherenceRecord, CoherenceTrace};
use crate::error::{Error, Result};
use crate::estimation::Reconstruction;

pub const TRACE_HEADER: [&str; 7] = ["t_f", "zeta", "phi_q", "phi_ext", "re_coh", "im_coh", "n_meas"];

/// 12 significant digits in e-notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

fn parse_num(s: &str) -> Result<f64> {
    match s.trim() {
        "nan" | "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse()
            .map_err(|_| Error::InvalidInput(format!("cannot parse '{t}' as a number"))),
    }
}

pub fn write_trace_csv<W: Write>(trace: &CoherenceTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record(
            [r.t_f, r.zeta, r.phi_q, r.phi_ext, r.re_coh, r.im_coh, r.n_meas].map(fmt_num),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<CoherenceTrace> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("trace CSV lacks a '{name}' column")))
    };
    let idx: Vec<usize> = TRACE_HEADER.iter().map(|h| col(h)).collect::<Result<_>>()?;
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let v: Vec<f64> = idx
            .iter()
            .map(|&i| parse_num(row.get(i).unwrap_or("")))
            .collect::<Result<_>>()?;
        records.push(CoherenceRecord {
            t_f: v[0],
            zeta: v[1],
            phi_q: v[2],
            phi_ext: v[3],
            re_coh: v[4],
            im_coh: v[5],
            n_meas: v[6],
        });
    }
    Ok(CoherenceTrace { records })
}

/// `omega,J_hat,J_true,residual`; J_true left empty when unknown.
pub fn write_reconstruction_csv<W: Write>(
    rec: &Reconstruction,
    j_true: Option<&dyn Fn(f64) -> f64>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "J_hat", "J_true", "residual"])?;
    for e in &rec.estimates {
        let jt = j_true.map(|f| fmt_num(f(e.omega))).unwrap_or_default();
        w.write_record([fmt_num(e.omega), fmt_num(e.j_hat), jt, fmt_num(e.residual)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let trace = CoherenceTrace {
            records: vec![
                CoherenceRecord::new(1.0, 0.01, 0.02, 0.0),
                CoherenceRecord::new(2.0, 0.03, 0.0, 0.0),
            ],
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_f,zeta,phi_q,phi_ext,re_coh,im_coh,n_meas\n1.00000000000e0,"));
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.records.len(), 2);
        assert_eq!(back.records[0].zeta, 0.01);
        assert!(back.records[1].n_meas.is_infinite());
    }
}
