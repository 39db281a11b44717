//! Text formats for point lists and gap certificates.
//!
//! A point file is ASCII with LF line endings:
//!
//! ```text
//! # subtour-points v1
//! n=6 mode=general count=2
//! point id=0 gap=10/9
//! 0 1 1/2
//! ...
//! ```
//!
//! Each `point` line is followed by its edges `u v p/q` with `u < v`, sorted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::canon::{canonical_form, CanonicalKey};
use crate::gap::{num_pairs, pair_index, GapCertificate, MetricCost, TourSet};
use crate::graph::Graph;
use crate::graphgen::Mode;
use crate::polytope::WeightedPoint;
use crate::rational::{format_rational, parse_rational, Rational};

pub const POINTS_HEADER: &str = "# subtour-points v1";
pub const CERTS_HEADER: &str = "# subtour-certificates v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("lists differ in n or mode: {0} vs {1}")]
    Mismatch(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Parse { line, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointRecord {
    pub id: usize,
    pub gap: Option<Rational>,
    pub point: WeightedPoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointList {
    pub n: usize,
    pub mode: Mode,
    pub points: Vec<PointRecord>,
}

impl PointList {
    pub fn new(n: usize, mode: Mode) -> Self {
        Self {
            n,
            mode,
            points: Vec::new(),
        }
    }
}

pub fn format_points(list: &PointList) -> String {
    let mut s = String::new();
    writeln!(s, "{POINTS_HEADER}").unwrap();
    writeln!(s, "n={} mode={} count={}", list.n, list.mode, list.points.len()).unwrap();
    for rec in &list.points {
        let gap = rec.gap.as_ref().map_or("unknown".to_string(), format_rational);
        writeln!(s, "point id={} gap={gap}", rec.id).unwrap();
        for ((u, v), w) in rec.point.edges() {
            writeln!(s, "{u} {v} {}", format_rational(w)).unwrap();
        }
    }
    s
}

fn field<'a>(tok: Option<&'a str>, name: &str, line: usize) -> Result<&'a str, IoError> {
    match tok.and_then(|t| t.strip_prefix(name)).and_then(|t| t.strip_prefix('=')) {
        Some(v) => Ok(v),
        None => perr(line, format!("expected `{name}=`")),
    }
}

fn number(s: &str, line: usize) -> Result<usize, IoError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return perr(line, format!("bad integer `{s}`"));
    }
    s.parse().or_else(|_| perr(line, format!("bad integer `{s}`")))
}

fn rational(s: &str, line: usize) -> Result<Rational, IoError> {
    parse_rational(s).or_else(|e| perr(line, e.to_string()))
}

pub fn parse_points(text: &str) -> Result<PointList, IoError> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l)).peekable();
    match lines.next() {
        Some((_, l)) if l == POINTS_HEADER => {}
        _ => return perr(1, format!("expected `{POINTS_HEADER}`")),
    }
    let (ln, meta) = lines.next().ok_or(IoError::Parse { line: 2, msg: "missing size line".into() })?;
    let mut toks = meta.split(' ');
    let n = number(field(toks.next(), "n", ln)?, ln)?;
    let mode: Mode = field(toks.next(), "mode", ln)?.parse().or_else(|e: String| perr(ln, e))?;
    let count = number(field(toks.next(), "count", ln)?, ln)?;
    if toks.next().is_some() {
        return perr(ln, "trailing fields");
    }
    if n > crate::graph::MAX_VERTICES {
        return perr(ln, "n too large");
    }
    let mut list = PointList::new(n, mode);
    while let Some((ln, l)) = lines.next() {
        if l.is_empty() && lines.peek().is_none() {
            break;
        }
        let mut toks = l.split(' ');
        if toks.next() != Some("point") {
            return perr(ln, "expected `point`");
        }
        let id = number(field(toks.next(), "id", ln)?, ln)?;
        let gap = match field(toks.next(), "gap", ln)? {
            "unknown" => None,
            g => Some(rational(g, ln)?),
        };
        if toks.next().is_some() {
            return perr(ln, "trailing fields");
        }
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        while let Some(&(eln, el)) = lines.peek() {
            if el.starts_with("point") || el.is_empty() {
                break;
            }
            lines.next();
            let parts: Vec<&str> = el.split(' ').collect();
            let [u, v, w] = parts[..] else {
                return perr(eln, "expected `u v p/q`");
            };
            let (u, v) = (number(u, eln)?, number(v, eln)?);
            if u >= v || v >= n {
                return perr(eln, "edge must satisfy u < v < n");
            }
            if edges.last().is_some_and(|&last| last >= (u, v)) {
                return perr(eln, "edges must be sorted and distinct");
            }
            edges.push((u, v));
            weights.push(rational(w, eln)?);
        }
        let graph = Graph::new(n, edges).or_else(|e| perr(ln, e.to_string()))?;
        let point = WeightedPoint::new(graph, weights).or_else(|e| perr(ln, e.to_string()))?;
        list.points.push(PointRecord { id, gap, point });
    }
    if list.points.len() != count {
        return perr(2, format!("count={count} but {} points follow", list.points.len()));
    }
    Ok(list)
}

pub fn write_points(list: &PointList, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, format_points(list))?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<PointList, IoError> {
    parse_points(&std::fs::read_to_string(path)?)
}

/// Point ids present in one list but not the other, by isomorphism class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Comparison {
    /// Ids (in `b`) of classes missing from `a`.
    pub missing_in_a: Vec<usize>,
    /// Ids (in `a`) of classes missing from `b`.
    pub missing_in_b: Vec<usize>,
}

pub fn compare_point_lists(a: &PointList, b: &PointList) -> Result<Comparison, IoError> {
    if a.n != b.n || a.mode != b.mode {
        return Err(IoError::Mismatch(
            format!("n={} mode={}", a.n, a.mode),
            format!("n={} mode={}", b.n, b.mode),
        ));
    }
    let keys = |l: &PointList| -> BTreeMap<CanonicalKey, usize> {
        l.points.iter().map(|r| (canonical_form(&r.point).0, r.id)).collect()
    };
    let (ka, kb) = (keys(a), keys(b));
    Ok(Comparison {
        missing_in_a: kb.iter().filter(|(k, _)| !ka.contains_key(k)).map(|(_, &id)| id).collect(),
        missing_in_b: ka.iter().filter(|(k, _)| !kb.contains_key(k)).map(|(_, &id)| id).collect(),
    })
}

pub fn compare_lists(path_a: &Path, path_b: &Path) -> Result<Comparison, IoError> {
    compare_point_lists(&read_points(path_a)?, &read_points(path_b)?)
}

/// Certificates, one block per point:
///
/// ```text
/// certificate id=3 n=6
/// gap 10/9
/// lp_value 9/10
/// tour_rhs 1/1
/// cost 0 1 1/5          (every pair)
/// tour 0 1 2 3 4 5      (active tours, in order)
/// dual 7 1/10           (nonzero multipliers by row index)
/// end
/// ```
pub fn format_certificates(certs: &[(usize, &GapCertificate)]) -> String {
    let mut s = String::new();
    writeln!(s, "{CERTS_HEADER}").unwrap();
    for (id, c) in certs {
        let n = c.point.n();
        writeln!(s, "certificate id={id} n={n}").unwrap();
        writeln!(s, "gap {}", format_rational(&c.gap_plus)).unwrap();
        writeln!(s, "lp_value {}", format_rational(&c.lp_value)).unwrap();
        writeln!(s, "tour_rhs {}", format_rational(&c.tour_rhs)).unwrap();
        for ((u, v), w) in c.point.edges() {
            writeln!(s, "edge {u} {v} {}", format_rational(w)).unwrap();
        }
        for i in 0..n {
            for j in i + 1..n {
                writeln!(s, "cost {i} {j} {}", format_rational(c.optimal_cost.get(i, j))).unwrap();
            }
        }
        for t in &c.active_tours.tours {
            let t: Vec<String> = t.iter().map(|v| v.to_string()).collect();
            writeln!(s, "tour {}", t.join(" ")).unwrap();
        }
        for (k, y) in c.dual.iter().enumerate() {
            if *y != Rational::from_integer(0.into()) {
                writeln!(s, "dual {k} {}", format_rational(y)).unwrap();
            }
        }
        writeln!(s, "end").unwrap();
    }
    s
}

/// Inverse of [`format_certificates`].
pub fn parse_certificates(text: &str) -> Result<Vec<(usize, GapCertificate)>, IoError> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == CERTS_HEADER => {}
        _ => return perr(1, format!("expected `{CERTS_HEADER}`")),
    }
    let mut out = Vec::new();
    while let Some((ln, l)) = lines.next() {
        if l.is_empty() {
            continue;
        }
        let mut toks = l.split(' ');
        if toks.next() != Some("certificate") {
            return perr(ln, "expected `certificate`");
        }
        let id = number(field(toks.next(), "id", ln)?, ln)?;
        let n = number(field(toks.next(), "n", ln)?, ln)?;
        if !(3..=crate::graph::MAX_VERTICES).contains(&n) {
            return perr(ln, "n out of range");
        }
        let (mut gap, mut lp_value, mut rhs) = (None, None, None);
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        let mut cost = vec![None; num_pairs(n)];
        let mut tours = Vec::new();
        let mut duals: Vec<(usize, Rational)> = Vec::new();
        let mut closed = false;
        for (ln, l) in lines.by_ref() {
            let parts: Vec<&str> = l.split(' ').collect();
            match parts[..] {
                ["end"] => {
                    closed = true;
                    break;
                }
                ["gap", g] => gap = Some(rational(g, ln)?),
                ["lp_value", g] => lp_value = Some(rational(g, ln)?),
                ["tour_rhs", g] => rhs = Some(rational(g, ln)?),
                ["edge", u, v, w] => {
                    edges.push((number(u, ln)?, number(v, ln)?));
                    weights.push(rational(w, ln)?);
                }
                ["cost", i, j, w] => {
                    let (i, j) = (number(i, ln)?, number(j, ln)?);
                    if i >= j || j >= n {
                        return perr(ln, "bad pair");
                    }
                    cost[pair_index(n, i, j)] = Some(rational(w, ln)?);
                }
                ["tour", ..] => {
                    let t = parts[1..].iter().map(|x| number(x, ln)).collect::<Result<Vec<_>, _>>()?;
                    tours.push(t);
                }
                ["dual", k, y] => duals.push((number(k, ln)?, rational(y, ln)?)),
                _ => return perr(ln, format!("unexpected line `{l}`")),
            }
        }
        if !closed {
            return perr(ln, "certificate not terminated by `end`");
        }
        let missing = |what: &str| IoError::Parse {
            line: ln,
            msg: format!("missing {what}"),
        };
        let graph = Graph::new(n, edges).or_else(|e| perr(ln, e.to_string()))?;
        let point = WeightedPoint::new(graph, weights).or_else(|e| perr(ln, e.to_string()))?;
        let cost: Vec<Rational> = cost.into_iter().collect::<Option<_>>().ok_or_else(|| missing("cost"))?;
        let rows = 3 * n * (n - 1) * (n - 2) / 6 + tours.len();
        let mut dual = vec![Rational::from_integer(0.into()); rows];
        for (k, y) in duals {
            if k >= rows {
                return perr(ln, "dual index out of range");
            }
            dual[k] = y;
        }
        out.push((
            id,
            GapCertificate {
                point,
                lp_value: lp_value.ok_or_else(|| missing("lp_value"))?,
                gap_plus: gap.ok_or_else(|| missing("gap"))?,
                optimal_cost: MetricCost::new(n, cost),
                dual,
                active_tours: TourSet { tours },
                tour_rhs: rhs.ok_or_else(|| missing("tour_rhs"))?,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::prism_classic;
    use crate::rational::frac;

    fn sample() -> PointList {
        let mut l = PointList::new(6, Mode::General);
        l.points.push(PointRecord {
            id: 0,
            gap: Some(frac(10, 9)),
            point: prism_classic(),
        });
        l.points.push(PointRecord {
            id: 1,
            gap: None,
            point: WeightedPoint::tour(&[0, 1, 2, 3, 4, 5]),
        });
        l
    }

    #[test]
    fn round_trip() {
        let l = sample();
        let text = format_points(&l);
        assert!(text.starts_with("# subtour-points v1\nn=6 mode=general count=2\npoint id=0 gap=10/9\n0 1 1/2\n"));
        assert_eq!(parse_points(&text).unwrap(), l);
        let empty = PointList::new(7, Mode::HalfIntegral);
        assert_eq!(parse_points(&format_points(&empty)).unwrap(), empty);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = format_points(&sample()).replace("0 1 1/2", "0 1 2/4");
        match parse_points(&text) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let text = format_points(&sample()).replace("count=2", "count=3");
        assert!(matches!(parse_points(&text), Err(IoError::Parse { line: 2, .. })));
    }

    #[test]
    fn certificates_round_trip() {
        let cert = crate::gap::gap_plus(&prism_classic()).unwrap();
        let text = format_certificates(&[(4, &cert)]);
        let back = parse_certificates(&text).unwrap();
        assert_eq!(back, vec![(4, cert)]);
    }
}
