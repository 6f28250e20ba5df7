//! Two-route kernel tables: the closed form next to the oscillatory-integral
//! quadrature for a list of sample pairs.
//!
//! Sample files hold one pair per line, `x,y` or `x,y,epsilon`, where each
//! point is `;`-joined reals `Re z₁;Im z₁;…;Re zₙ;Im zₙ;x_last`. Blank lines
//! and lines starting with `#` are skipped.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{parse_err, usage, Result};
use crate::phase::{fio_quadrature, fio_resolution, phase, szego_kernel_scalar, PhaseChoice};
use crate::types::{HeisenbergPoint, LambdaSignature};

pub const HEADER: &str = "x,y,epsilon,re_k,im_k,abs_k,route,abs_disagreement";
/// Quadrature routes needing more nodes than this are refused.
pub const MAX_FIO_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    pub x: HeisenbergPoint,
    pub y: HeisenbergPoint,
    pub epsilon: Option<f64>,
}

fn parse_point(text: &str, lineno: usize) -> Result<HeisenbergPoint> {
    let nums = text
        .split(';')
        .map(|s| match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => parse_err(format!("line {lineno}: bad coordinate {s:?}")),
        })
        .collect::<Result<Vec<f64>>>()?;
    if nums.len() < 3 || nums.len() % 2 == 0 {
        return parse_err(format!(
            "line {lineno}: a point needs 2n+1 coordinates, got {}",
            nums.len()
        ));
    }
    let (last, zs) = nums.split_last().expect("non-empty");
    let z = zs.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(HeisenbergPoint::new(z, *last))
}

pub fn parse_samples(text: &str) -> Result<Vec<KernelSample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if !(2..=3).contains(&cols.len()) {
            return parse_err(format!("line {lineno}: expected x,y[,epsilon]"));
        }
        let x = parse_point(cols[0], lineno)?;
        let y = parse_point(cols[1], lineno)?;
        if x.n() != y.n() {
            return parse_err(format!("line {lineno}: x and y differ in dimension"));
        }
        let epsilon = match cols.get(2) {
            None => None,
            Some(s) => match s.trim().parse::<f64>() {
                Ok(e) if e > 0.0 && e.is_finite() => Some(e),
                _ => return parse_err(format!("line {lineno}: bad epsilon {s:?}")),
            },
        };
        out.push(KernelSample { x, y, epsilon });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRow {
    pub epsilon: f64,
    pub closed_form: Complex64,
    pub fio: Complex64,
}

impl KernelRow {
    pub fn disagreement(&self) -> f64 {
        (self.closed_form - self.fio).norm()
    }
}

/// Evaluates one sample by both routes.
pub fn evaluate(
    sample: &KernelSample,
    sig: &LambdaSignature,
    choice: PhaseChoice,
    default_epsilon: f64,
) -> Result<KernelRow> {
    let epsilon = sample.epsilon.unwrap_or(default_epsilon);
    let closed_form = szego_kernel_scalar(&sample.x, &sample.y, sig, choice, epsilon)?;
    let phi = phase(choice, &sample.x, &sample.y, sig)?;
    let (t_max, points) = fio_resolution(phi, epsilon, sig.n());
    if !(points <= MAX_FIO_POINTS) {
        return usage(format!(
            "quadrature route would need {points} nodes; raise epsilon"
        ));
    }
    let fio = fio_quadrature(&sample.x, &sample.y, sig, choice, epsilon, t_max, points)?.value;
    Ok(KernelRow {
        epsilon,
        closed_form,
        fio,
    })
}

fn point_label(p: &HeisenbergPoint) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(2 * p.n() + 1);
    for z in &p.z {
        parts.push(format!("{:?}", z.re));
        parts.push(format!("{:?}", z.im));
    }
    parts.push(format!("{:?}", p.x_last));
    parts.join(";")
}

/// CSV text: header plus two rows (closed-form, fio-quadrature) per sample.
pub fn kernel_table(
    samples: &[KernelSample],
    rows: &[KernelRow],
) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for (s, r) in samples.iter().zip(rows) {
        let (x, y) = (point_label(&s.x), point_label(&s.y));
        let d = r.disagreement();
        for (route, k) in [("closed-form", r.closed_form), ("fio-quadrature", r.fio)] {
            let _ = writeln!(
                out,
                "{x},{y},{:?},{:e},{:e},{:e},{route},{d:e}",
                r.epsilon,
                k.re,
                k.im,
                k.norm()
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_points_and_optional_epsilon() {
        let s = parse_samples("# comment\n\n0;0;0,1;0;0.5\n1;2;3,0;0;0,0.5\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].epsilon, None);
        assert_eq!(s[1].x.z[0], Complex64::new(1.0, 2.0));
        assert_eq!(s[1].epsilon, Some(0.5));
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in ["0;0,0;0;0", "0;0;0", "0;0;0,0;0;0,-1", "0;0;x,0;0;0", "0;0;0,0;0;0;0;0"] {
            assert!(parse_samples(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn routes_agree_and_table_has_two_rows_per_sample() {
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let samples = parse_samples("0.3;-0.2;0.7,-0.1;0.4;-0.2").unwrap();
        let rows: Vec<KernelRow> = samples
            .iter()
            .map(|s| evaluate(s, &sig, PhaseChoice::Minus, 0.25).unwrap())
            .collect();
        assert!(rows[0].disagreement() < 1e-8 * rows[0].closed_form.norm());
        let table = kernel_table(&samples, &rows);
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().nth(2).unwrap().contains("fio-quadrature"));
    }

    #[test]
    fn empty_samples_give_header_only() {
        assert_eq!(kernel_table(&[], &[]), format!("{HEADER}\n"));
    }
}
