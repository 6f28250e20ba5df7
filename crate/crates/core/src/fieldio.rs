//! Field files: a binary layout for bit-exact fixtures and a CSV variant for
//! small grids.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! "SZGF"  u32 version(=1)  u32 n  u32 q
//! f64 spatial_radius  u64 spatial_points  f64 vertical_radius  u64 vertical_points
//! f64 freq_min  f64 freq_max  u8 quadrature_rule (0 trapezoid, 1 gauss-legendre)
//! u32 component_count  then per component q × u32 (1-based entries)
//! then per component, in header order: (f64 re, f64 im) per node, field order
//! ```
//!
//! CSV: `#`-prefixed `key=value` header lines (`n`, `q`, the grid keys,
//! `components` as `;`-joined indices separated by `|`), a column header line,
//! then one row per node: `component,i_1,…,i_2n,m,re,im`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{parse_err, Result};
use crate::types::{FormField, GridSpec, MultiIndex, QuadratureRule, ScalarField};

pub const MAGIC: &[u8; 4] = b"SZGF";
pub const VERSION: u32 = 1;
/// Refuse to decode fields larger than this many complex values.
pub const MAX_VALUES: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Binary,
    Csv,
}

pub fn encode(form: &FormField, format: FieldFormat) -> Vec<u8> {
    match format {
        FieldFormat::Binary => encode_binary(form),
        FieldFormat::Csv => encode_csv(form).into_bytes(),
    }
}

pub fn decode(bytes: &[u8], format: FieldFormat) -> Result<FormField> {
    match format {
        FieldFormat::Binary => decode_binary(bytes),
        FieldFormat::Csv => match std::str::from_utf8(bytes) {
            Ok(text) => decode_csv(text),
            Err(e) => parse_err(format!("CSV field file is not UTF-8: {e}")),
        },
    }
}

pub fn encode_binary(form: &FormField) -> Vec<u8> {
    let g = form.grid();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(form.n() as u32).to_le_bytes());
    out.extend_from_slice(&(form.q() as u32).to_le_bytes());
    out.extend_from_slice(&g.spatial_radius.to_le_bytes());
    out.extend_from_slice(&(g.spatial_points as u64).to_le_bytes());
    out.extend_from_slice(&g.vertical_radius.to_le_bytes());
    out.extend_from_slice(&(g.vertical_points as u64).to_le_bytes());
    out.extend_from_slice(&g.freq_min.to_le_bytes());
    out.extend_from_slice(&g.freq_max.to_le_bytes());
    out.push(match g.quadrature_rule {
        QuadratureRule::UniformTrapezoid => 0,
        QuadratureRule::GaussLegendre => 1,
    });
    out.extend_from_slice(&(form.components().len() as u32).to_le_bytes());
    for j in form.components().keys() {
        for &e in j.entries() {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
    }
    for c in form.components().values() {
        for v in c.values() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(len) {
            Some(end) if end <= self.bytes.len() => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            _ => parse_err(format!("field file truncated at byte {}", self.pos)),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).or_else(|_| parse_err(format!("{what} too large")))
}

/// Number of complex values per component, refusing absurd sizes.
fn values_per_component(n: usize, grid: &GridSpec) -> Result<usize> {
    let size = u32::try_from(2 * n)
        .ok()
        .and_then(|e| grid.spatial_points.checked_pow(e))
        .and_then(|s| s.checked_mul(grid.vertical_points));
    match size {
        Some(s) if s <= MAX_VALUES => Ok(s),
        _ => parse_err("grid is too large to decode"),
    }
}

fn validated_grid(grid: GridSpec) -> Result<GridSpec> {
    grid.validate()
        .or_else(|e| parse_err(format!("invalid grid in field file: {e}")))?;
    Ok(grid)
}

pub fn decode_binary(bytes: &[u8]) -> Result<FormField> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return parse_err("not a field file (bad magic)");
    }
    let version = r.u32()?;
    if version != VERSION {
        return parse_err(format!("unsupported field file version {version}"));
    }
    let n = r.u32()? as usize;
    let q = r.u32()? as usize;
    if n == 0 || n > 8 || q > n {
        return parse_err(format!("bad dimensions n={n}, q={q}"));
    }
    let grid = GridSpec {
        spatial_radius: r.f64()?,
        spatial_points: to_usize(r.u64()?, "spatial_points")?,
        vertical_radius: r.f64()?,
        vertical_points: to_usize(r.u64()?, "vertical_points")?,
        freq_min: r.f64()?,
        freq_max: r.f64()?,
        quadrature_rule: match r.u8()? {
            0 => QuadratureRule::UniformTrapezoid,
            1 => QuadratureRule::GaussLegendre,
            other => return parse_err(format!("unknown quadrature rule tag {other}")),
        },
    };
    let grid = validated_grid(grid)?;
    let count = r.u32()? as usize;
    let per = values_per_component(n, &grid)?;
    let index_bytes = count.checked_mul(4 * q);
    let data_bytes = count.checked_mul(per).and_then(|v| v.checked_mul(16));
    match (index_bytes, data_bytes) {
        (Some(i), Some(d)) if i.checked_add(d) == Some(r.remaining()) => {}
        _ => return parse_err("field file size does not match its header"),
    }
    let mut keys = Vec::with_capacity(count);
    for _ in 0..count {
        let entries = (0..q).map(|_| r.u32().map(|e| e as usize)).collect::<Result<Vec<_>>>()?;
        let j = MultiIndex::new(entries, n).or_else(|e| parse_err(e.to_string()))?;
        keys.push(j);
    }
    let mut components = BTreeMap::new();
    for j in keys {
        let mut values = Vec::with_capacity(per);
        for _ in 0..per {
            let re = r.f64()?;
            let im = r.f64()?;
            values.push(Complex64::new(re, im));
        }
        let field = ScalarField::new(n, grid.clone(), values)?;
        if components.insert(j.clone(), field).is_some() {
            return parse_err(format!("component {j} appears twice"));
        }
    }
    FormField::new(n, q, grid, components).or_else(|e| parse_err(e.to_string()))
}

fn rule_name(rule: QuadratureRule) -> &'static str {
    match rule {
        QuadratureRule::UniformTrapezoid => "uniform-trapezoid",
        QuadratureRule::GaussLegendre => "gauss-legendre",
    }
}

fn index_label(j: &MultiIndex) -> String {
    j.entries().iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";")
}

pub fn encode_csv(form: &FormField) -> String {
    let g = form.grid();
    let n = form.n();
    let mut out = String::new();
    let labels: Vec<String> = form.components().keys().map(index_label).collect();
    let _ = writeln!(out, "# szego-field v{VERSION}");
    let _ = writeln!(out, "# n={n}");
    let _ = writeln!(out, "# q={}", form.q());
    let _ = writeln!(out, "# spatial_radius={:?}", g.spatial_radius);
    let _ = writeln!(out, "# spatial_points={}", g.spatial_points);
    let _ = writeln!(out, "# vertical_radius={:?}", g.vertical_radius);
    let _ = writeln!(out, "# vertical_points={}", g.vertical_points);
    let _ = writeln!(out, "# freq_min={:?}", g.freq_min);
    let _ = writeln!(out, "# freq_max={:?}", g.freq_max);
    let _ = writeln!(out, "# quadrature_rule={}", rule_name(g.quadrature_rule));
    let _ = writeln!(out, "# components={}", labels.join("|"));
    let mut header = String::from("component");
    for k in 1..=2 * n {
        let _ = write!(header, ",i{k}");
    }
    header.push_str(",m,re,im");
    let _ = writeln!(out, "{header}");
    let m = g.spatial_points;
    let nv = g.vertical_points;
    for (label, c) in labels.iter().zip(form.components().values()) {
        for (idx, v) in c.values().iter().enumerate() {
            let _ = write!(out, "{label}");
            let mut digits = vec![0; 2 * n];
            let mut rest = idx / nv;
            for d in digits.iter_mut().rev() {
                *d = rest % m;
                rest /= m;
            }
            for d in digits {
                let _ = write!(out, ",{d}");
            }
            let _ = writeln!(out, ",{},{:?},{:?}", idx % nv, v.re, v.im);
        }
    }
    out
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .or_else(|_| parse_err(format!("cannot parse {what} from {s:?}")))
}

fn parse_index(label: &str, n: usize) -> Result<MultiIndex> {
    let label = label.trim();
    let entries = if label.is_empty() {
        Vec::new()
    } else {
        label
            .split(';')
            .map(|e| parse_num::<usize>(e, "multi-index entry"))
            .collect::<Result<Vec<_>>>()?
    };
    MultiIndex::new(entries, n).or_else(|e| parse_err(e.to_string()))
}

pub fn decode_csv(text: &str) -> Result<FormField> {
    let mut header = BTreeMap::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.split_once('=') {
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
        lines.next();
    }
    let get = |key: &str| -> Result<&String> {
        header
            .get(key)
            .map_or_else(|| parse_err(format!("CSV header lacks {key}")), Ok)
    };
    let n: usize = parse_num(get("n")?, "n")?;
    let q: usize = parse_num(get("q")?, "q")?;
    if n == 0 || n > 8 || q > n {
        return parse_err(format!("bad dimensions n={n}, q={q}"));
    }
    let grid = validated_grid(GridSpec {
        spatial_radius: parse_num(get("spatial_radius")?, "spatial_radius")?,
        spatial_points: parse_num(get("spatial_points")?, "spatial_points")?,
        vertical_radius: parse_num(get("vertical_radius")?, "vertical_radius")?,
        vertical_points: parse_num(get("vertical_points")?, "vertical_points")?,
        freq_min: parse_num(get("freq_min")?, "freq_min")?,
        freq_max: parse_num(get("freq_max")?, "freq_max")?,
        quadrature_rule: match get("quadrature_rule")?.as_str() {
            "uniform-trapezoid" => QuadratureRule::UniformTrapezoid,
            "gauss-legendre" => QuadratureRule::GaussLegendre,
            other => return parse_err(format!("unknown quadrature rule {other:?}")),
        },
    })?;
    let per = values_per_component(n, &grid)?;
    let comp_line = get("components")?;
    let keys: Vec<MultiIndex> = if comp_line.is_empty() && q > 0 {
        Vec::new()
    } else {
        comp_line.split('|').map(|l| parse_index(l, n)).collect::<Result<_>>()?
    };
    if keys.iter().any(|j| j.len() != q) {
        return parse_err("component length differs from q");
    }
    if keys.len().checked_mul(per).is_none_or(|total| total > MAX_VALUES) {
        return parse_err("field is too large to decode");
    }
    let mut data: BTreeMap<MultiIndex, (Vec<Complex64>, Vec<bool>)> = BTreeMap::new();
    for j in &keys {
        if data
            .insert(j.clone(), (vec![Complex64::new(0.0, 0.0); per], vec![false; per]))
            .is_some()
        {
            return parse_err(format!("component {j} listed twice"));
        }
    }
    // column header
    match lines.next() {
        Some(l) if l.starts_with("component") => {}
        _ => return parse_err("CSV field file lacks its column header"),
    }
    let m = grid.spatial_points;
    let nv = grid.vertical_points;
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 * n + 4 {
            return parse_err(format!("row {} has {} columns", lineno + 1, cols.len()));
        }
        let j = parse_index(cols[0], n)?;
        let Some((values, filled)) = data.get_mut(&j) else {
            return parse_err(format!("row {} names undeclared component {j}", lineno + 1));
        };
        let mut s = 0usize;
        for c in &cols[1..=2 * n] {
            let d: usize = parse_num(c, "spatial index")?;
            if d >= m {
                return parse_err(format!("spatial index {d} out of range"));
            }
            s = s * m + d;
        }
        let k: usize = parse_num(cols[2 * n + 1], "vertical index")?;
        if k >= nv {
            return parse_err(format!("vertical index {k} out of range"));
        }
        let idx = s * nv + k;
        if filled[idx] {
            return parse_err(format!("node listed twice in row {}", lineno + 1));
        }
        filled[idx] = true;
        values[idx] = Complex64::new(parse_num(cols[2 * n + 2], "re")?, parse_num(cols[2 * n + 3], "im")?);
        seen += 1;
    }
    if seen != keys.len() * per {
        return parse_err(format!("expected {} rows, found {seen}", keys.len() * per));
    }
    let components = data
        .into_iter()
        .map(|(j, (values, _))| Ok((j, ScalarField::new(n, grid.clone(), values)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    FormField::new(n, q, grid, components).or_else(|e| parse_err(e.to_string()))
}
