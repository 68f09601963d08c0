//! CSV and JSON forms of scans and witnesses.
//!
//! Both CSV formats start with `#`-prefixed metadata lines followed by a
//! header row. Floats are written in shortest round-trip form, so reading a
//! file back reproduces the in-memory values bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Objective, RadialScan, ScanPoint};
use crate::expr::ExprMap;
use crate::numlin;

const SCAN_MAGIC: &str = "# globinj-radial-scan v1";
const WITNESS_MAGIC: &str = "# globinj-witness v1";

#[derive(Debug, Error)]
pub enum ScanIoError {
    #[error("missing or unsupported format header (expected `{0}`)")]
    Header(&'static str),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn row_err(line: usize, message: impl Into<String>) -> ScanIoError {
    ScanIoError::Row { line, message: message.into() }
}

/// Pulls leading `# key: value` lines; returns them and the remaining text.
fn split_meta<'a>(text: &'a str, magic: &'static str) -> Result<(Vec<(String, String)>, &'a str, usize), ScanIoError> {
    let mut rest = text;
    let mut meta = Vec::new();
    let mut lines = 0;
    let first = rest.lines().next().unwrap_or("");
    if first.trim_end() != magic {
        return Err(ScanIoError::Header(magic));
    }
    while let Some(line) = rest.lines().next() {
        if !line.starts_with('#') {
            break;
        }
        lines += 1;
        if lines > 1 {
            if let Some((k, v)) = line[1..].split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        rest = rest.get(line.len()..).unwrap_or("");
        rest = rest.strip_prefix("\r\n").or_else(|| rest.strip_prefix('\n')).unwrap_or(rest);
    }
    Ok((meta, rest, lines))
}

fn meta_get<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64, ScanIoError> {
    s.trim().parse::<f64>().map_err(|_| row_err(line, format!("bad {what} `{s}`")))
}

impl RadialScan {
    pub fn to_csv(&self) -> String {
        let n = self.points.iter().map(|p| p.argmin.len()).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(SCAN_MAGIC);
        out.push('\n');
        out.push_str(&format!("# objective: {}\n# map: {}\n# seed: {}\n", one_line(&self.objective), one_line(&self.map), self.seed));
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["r".to_string(), "value".into(), "starts".into(), "skipped".into(), "seed".into(), "error".into()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        w.write_record(&header).expect("in-memory write");
        for p in &self.points {
            let mut rec = vec![
                p.r.to_string(),
                p.value.map(|v| v.to_string()).unwrap_or_default(),
                p.starts.to_string(),
                p.skipped.to_string(),
                p.seed.to_string(),
                p.error.clone().unwrap_or_default(),
            ];
            for i in 0..n {
                rec.push(p.argmin.get(i).map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&rec).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }

    pub fn from_csv(text: &str) -> Result<RadialScan, ScanIoError> {
        let (meta, body, skip) = split_meta(text, SCAN_MAGIC)?;
        let seed = match meta_get(&meta, "seed") {
            Some(s) => s.parse::<u64>().map_err(|_| row_err(4, "bad seed"))?,
            None => 0,
        };
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let header = rdr.headers()?.clone();
        let expect = ["r", "value", "starts", "skipped", "seed", "error"];
        if header.len() < expect.len() || header.iter().zip(expect).any(|(a, b)| a != b) {
            return Err(row_err(skip + 1, "unexpected column header"));
        }
        for (i, name) in header.iter().skip(expect.len()).enumerate() {
            if name != format!("x{}", i + 1) {
                return Err(row_err(skip + 1, format!("unexpected column `{name}`")));
            }
        }
        let mut points = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let line = skip + 2 + k;
            let rec = rec?;
            let r = parse_f64(&rec[0], line, "radius")?;
            if !(r > 0.0 && r.is_finite()) {
                return Err(row_err(line, "radius must be positive"));
            }
            if let Some(last) = points.last().map(|p: &ScanPoint| p.r) {
                if r <= last {
                    return Err(row_err(line, "radii must be strictly increasing"));
                }
            }
            let value = if rec[1].is_empty() { None } else { Some(parse_f64(&rec[1], line, "value")?) };
            let parse_usize = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| row_err(line, format!("bad {what} `{s}`")))
            };
            let starts = parse_usize(&rec[2], "starts")?;
            let skipped = parse_usize(&rec[3], "skipped")?;
            let pseed = rec[4].parse::<u64>().map_err(|_| row_err(line, "bad seed"))?;
            let error = if rec[5].is_empty() { None } else { Some(rec[5].to_string()) };
            let mut argmin = Vec::new();
            for s in rec.iter().skip(expect.len()) {
                if s.is_empty() {
                    break;
                }
                argmin.push(parse_f64(s, line, "coordinate")?);
            }
            if value.is_some() && argmin.len() != header.len() - expect.len() {
                return Err(row_err(line, "argmin has the wrong number of coordinates"));
            }
            points.push(ScanPoint { r, value, argmin, starts, skipped, seed: pseed, error });
        }
        Ok(RadialScan {
            objective: meta_get(&meta, "objective").unwrap_or("").to_string(),
            map: meta_get(&meta, "map").unwrap_or("").to_string(),
            seed,
            points,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan serializes")
    }

    pub fn from_json(text: &str) -> Result<RadialScan, ScanIoError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// A finite sequence standing in for `u_l → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub objective: String,
    pub points: Vec<WitnessPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub x: Vec<f64>,
    pub norm: f64,
    pub objective: f64,
    /// Map value `g(x)`.
    pub image: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error(transparent)]
    Io(#[from] ScanIoError),
    #[error("witness norms must be strictly increasing (point {0})")]
    NotIncreasing(usize),
    #[error("point {index}: stored {what} {stored} but recomputed {recomputed}")]
    Mismatch { index: usize, what: &'static str, stored: f64, recomputed: f64 },
    #[error("point {index}: {message}")]
    Eval { index: usize, message: String },
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

impl Witness {
    /// Builds a witness from points, recomputing every diagnostic.
    pub fn build(obj: &dyn Objective, map: &ExprMap, xs: &[Vec<f64>]) -> Result<Witness, WitnessError> {
        let points = xs
            .iter()
            .enumerate()
            .map(|(index, x)| {
                let objective = obj.value(x).map_err(|e| WitnessError::Eval { index, message: e.to_string() })?;
                let image = map.eval(x).map_err(|e| WitnessError::Eval { index, message: e.to_string() })?;
                Ok(WitnessPoint { norm: numlin::norm2(x), x: x.clone(), objective, image })
            })
            .collect::<Result<Vec<_>, WitnessError>>()?;
        let w = Witness { objective: obj.id(), points };
        w.check_order()?;
        Ok(w)
    }

    fn check_order(&self) -> Result<(), WitnessError> {
        for (i, pair) in self.points.windows(2).enumerate() {
            if pair[1].norm <= pair[0].norm {
                return Err(WitnessError::NotIncreasing(i + 1));
            }
        }
        Ok(())
    }

    /// Recomputes norms, objective values and images; all must match.
    pub fn verify(&self, obj: &dyn Objective, map: &ExprMap) -> Result<(), WitnessError> {
        self.check_order()?;
        for (index, p) in self.points.iter().enumerate() {
            if p.x.len() != map.n_in() || p.image.len() != map.n_out() {
                return Err(WitnessError::Eval { index, message: "dimension mismatch".into() });
            }
            let norm = numlin::norm2(&p.x);
            if !close(norm, p.norm) {
                return Err(WitnessError::Mismatch { index, what: "norm", stored: p.norm, recomputed: norm });
            }
            let v = obj.value(&p.x).map_err(|e| WitnessError::Eval { index, message: e.to_string() })?;
            if !close(v, p.objective) {
                return Err(WitnessError::Mismatch { index, what: "objective", stored: p.objective, recomputed: v });
            }
            let img = map.eval(&p.x).map_err(|e| WitnessError::Eval { index, message: e.to_string() })?;
            for (a, b) in img.iter().zip(&p.image) {
                if !close(*a, *b) {
                    return Err(WitnessError::Mismatch { index, what: "image", stored: *b, recomputed: *a });
                }
            }
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&WitnessPoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.x.len());
        let m = self.points.first().map_or(0, |p| p.image.len());
        let mut out = format!("{WITNESS_MAGIC}\n# objective: {}\n", one_line(&self.objective));
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["norm".to_string(), "objective".into()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("g{i}")));
        w.write_record(&header).expect("in-memory write");
        for p in &self.points {
            let mut rec = vec![p.norm.to_string(), p.objective.to_string()];
            rec.extend(p.x.iter().map(|v| v.to_string()));
            rec.extend(p.image.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }

    /// Parses the CSV form and checks internal consistency (order, norms).
    pub fn from_csv(text: &str) -> Result<Witness, WitnessError> {
        let (meta, body, skip) = split_meta(text, WITNESS_MAGIC)?;
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let header = rdr.headers().map_err(ScanIoError::from)?.clone();
        if header.len() < 3 || &header[0] != "norm" || &header[1] != "objective" {
            return Err(row_err(skip + 1, "unexpected column header").into());
        }
        let n = header.iter().skip(2).take_while(|h| h.starts_with('x')).count();
        let m = header.len() - 2 - n;
        for (i, h) in header.iter().skip(2).enumerate() {
            let want = if i < n { format!("x{}", i + 1) } else { format!("g{}", i - n + 1) };
            if h != want {
                return Err(row_err(skip + 1, format!("unexpected column `{h}`")).into());
            }
        }
        if n == 0 || m == 0 {
            return Err(row_err(skip + 1, "need at least one x and one g column").into());
        }
        let mut points = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let line = skip + 2 + k;
            let rec = rec.map_err(ScanIoError::from)?;
            let vals = rec
                .iter()
                .map(|s| parse_f64(s, line, "number"))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(row_err(line, "non-finite entry").into());
            }
            let x = vals[2..2 + n].to_vec();
            let norm = numlin::norm2(&x);
            if !close(norm, vals[0]) {
                return Err(WitnessError::Mismatch { index: k, what: "norm", stored: vals[0], recomputed: norm });
            }
            points.push(WitnessPoint { norm: vals[0], objective: vals[1], image: vals[2 + n..].to_vec(), x });
        }
        let w = Witness {
            objective: meta_get(&meta, "objective").unwrap_or("").to_string(),
            points,
        };
        w.check_order()?;
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::{parse_map, MapDerivatives};
    use crate::scan::objectives::GradientNorm;
    use crate::scan::{radial_scan, RadiusSchedule, ScanOptions};

    #[test]
    fn scan_csv_and_json_round_trip() {
        let map = parse_map("f1 = x1 + x2^2").unwrap();
        let obj = GradientNorm::new(Arc::new(MapDerivatives::second_order(&map)), 0, "grad_f1");
        let sched = RadiusSchedule::new(1.0, 100.0, 2).unwrap();
        let scan = radial_scan(&obj, "toy", &sched, &ScanOptions { starts: 3, ..Default::default() });
        assert_eq!(RadialScan::from_csv(&scan.to_csv()).unwrap(), scan);
        assert_eq!(RadialScan::from_json(&scan.to_json()).unwrap(), scan);
    }

    #[test]
    fn scan_csv_rejects_garbage() {
        assert!(RadialScan::from_csv("r,value\n1,2\n").is_err());
        let bad = format!("{SCAN_MAGIC}\nr,value,starts,skipped,seed,error,x1\n2,1,1,0,0,,2\n1,1,1,0,0,,1\n");
        assert!(RadialScan::from_csv(&bad).is_err());
    }

    #[test]
    fn witness_round_trip_and_verify() {
        let map = parse_map("f1 = x1 - 3*x1^3*x2^2 + 2*x1^4*x2^3 + x2*x3").unwrap();
        let obj = GradientNorm::new(Arc::new(MapDerivatives::second_order(&map)), 0, "grad");
        let xs: Vec<Vec<f64>> = [10.0, 100.0, 1000.0].iter().map(|&l| vec![l, 1.0 / l, 0.0]).collect();
        let w = Witness::build(&obj, &map, &xs).unwrap();
        let back = Witness::from_csv(&w.to_csv()).unwrap();
        assert_eq!(back, w);
        back.verify(&obj, &map).unwrap();
        let mut tampered = w.clone();
        tampered.points[1].objective *= 2.0;
        assert!(tampered.verify(&obj, &map).is_err());
    }

    #[test]
    fn witness_needs_increasing_norms() {
        let text = format!("{WITNESS_MAGIC}\nnorm,objective,x1,g1\n2,0,2,0\n1,0,1,0\n");
        assert!(matches!(Witness::from_csv(&text), Err(WitnessError::NotIncreasing(1))));
    }
}
