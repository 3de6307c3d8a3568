//! Plain-text graph files.
//!
//! ```text
//! # comment
//! n m [undirected]
//! u v w        (m lines; 0-based ids, w a positive decimal or p/q)
//! ```

use std::fmt::Write as _;

use arbor_core::oracle::{format_rational, to_f64, ExactWeights};
use arbor_core::{Edge, Error, Result, VertexId, WeightedDigraph};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFile {
    pub n: usize,
    pub undirected: bool,
    /// Body lines in file order.
    pub edges: Vec<(VertexId, VertexId, BigRational)>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) =
            lines.next().ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let undirected = match fields.as_slice() {
            [_, _] => false,
            [_, _, "undirected"] => true,
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    message: format!("expected \"n m [undirected]\", got {header:?}"),
                })
            }
        };
        let n = parse_count(fields[0], hline)?;
        let m = parse_count(fields[1], hline)?;
        if n == 0 {
            return Err(Error::Parse { line: hline, message: "graph needs at least one vertex".into() });
        }
        let mut edges = Vec::with_capacity(m);
        for (line, body) in lines {
            if edges.len() == m {
                return Err(Error::Parse { line, message: format!("more than {m} edge lines") });
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            let [u, v, w] = f.as_slice() else {
                return Err(Error::Parse { line, message: format!("expected \"u v w\", got {body:?}") });
            };
            let u = parse_vertex(u, n, line)?;
            let v = parse_vertex(v, n, line)?;
            let w = parse_weight(w).map_err(|message| Error::Parse { line, message })?;
            edges.push((u, v, w));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("expected {m} edge lines, found {}", edges.len()),
            });
        }
        Ok(Self { n, undirected, edges })
    }

    pub fn format(&self) -> String {
        let mut out = format!("{} {}", self.n, self.edges.len());
        if self.undirected {
            out.push_str(" undirected");
        }
        out.push('\n');
        for (u, v, w) in &self.edges {
            let _ = writeln!(out, "{u} {v} {}", format_rational(w));
        }
        out
    }

    /// Directed edges with exact weights; undirected lines become two
    /// opposite edges with consecutive ids.
    pub fn directed_edges(&self) -> Vec<(VertexId, VertexId, BigRational)> {
        let mut out = Vec::new();
        for (u, v, w) in &self.edges {
            out.push((*u, *v, w.clone()));
            if self.undirected {
                out.push((*v, *u, w.clone()));
            }
        }
        out
    }

    pub fn exact_weights(&self) -> ExactWeights {
        ExactWeights::new(self.directed_edges().into_iter().map(|(_, _, w)| w).collect())
    }

    pub fn to_graph(&self) -> Result<WeightedDigraph> {
        let edges = self
            .directed_edges()
            .into_iter()
            .map(|(src, dst, w)| Edge { src, dst, weight: to_f64(&w) })
            .collect();
        WeightedDigraph::new(self.n, edges)
    }

    pub fn from_graph(g: &WeightedDigraph, w: &ExactWeights) -> Self {
        let edges = g.edges().iter().zip(w.values()).map(|(e, w)| (e.src, e.dst, w.clone())).collect();
        Self { n: g.n(), undirected: false, edges }
    }
}

fn parse_count(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("not a count: {s:?}") })
}

fn parse_vertex(s: &str, n: usize, line: usize) -> Result<VertexId> {
    let v: usize =
        s.parse().map_err(|_| Error::Parse { line, message: format!("not a vertex id: {s:?}") })?;
    if v >= n {
        return Err(Error::Parse { line, message: format!("vertex {v} outside 0..{n}") });
    }
    Ok(v)
}

/// Exact value of a positive weight written as `p/q` or a decimal with an
/// optional exponent.
pub fn parse_weight(s: &str) -> std::result::Result<BigRational, String> {
    let bad = || format!("not a positive weight: {s:?}");
    let value = if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = digits(p).ok_or_else(bad)?;
        let q: BigInt = digits(q).ok_or_else(bad)?;
        if q.is_zero() {
            return Err(bad());
        }
        BigRational::new(p, q)
    } else {
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let mantissa = mantissa.strip_prefix('+').unwrap_or(mantissa);
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        let all = format!("{int}{frac}");
        let numer: BigInt = digits(&all).ok_or_else(bad)?;
        let shift = exp - frac.len() as i32;
        if exp.unsigned_abs() > 4096 {
            return Err(bad());
        }
        let ten = BigInt::from(10);
        if shift >= 0 {
            BigRational::from_integer(numer * ten.pow(shift as u32))
        } else {
            BigRational::new(numer, ten.pow(shift.unsigned_abs()))
        }
    };
    if !value.is_positive() || !to_f64(&value).is_finite() || to_f64(&value) <= 0.0 {
        return Err(bad());
    }
    Ok(value)
}

fn digits(s: &str) -> Option<BigInt> {
    (!s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse().ok()).flatten()
}

pub fn read_graph_file(path: &std::path::Path) -> Result<GraphFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    GraphFile::parse(&text)
}
