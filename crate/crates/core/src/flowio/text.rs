//! Line-oriented text containers: trajectories (TRJ1), sparse trajectory
//! labels (SPL1) and weighted graphs (GRF1).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{FormatError, Result};
use crate::affinity::{AffinityGraph, Edge};
use crate::scalar::{format_decimal, Scalar};
use crate::tracker::Trajectory;

/// Trajectory id to cluster label.
pub type SparseLabels = BTreeMap<usize, u32>;

/// Contents of a TRJ1 file. Frame dimensions are not part of the format.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile<T> {
    pub frame_count: usize,
    pub trajectories: Vec<Trajectory<T>>,
}

const MIN_SIG_DIGITS: usize = 6;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    /// Next line split on whitespace, with its 1-based number.
    fn next_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((i, l)) => Ok((i + 1, l.split_whitespace().collect())),
            None => Err(FormatError::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    /// Only blank lines may remain.
    fn finish(mut self) -> Result<()> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Err(FormatError::Parse {
                    line: i + 1,
                    msg: "unexpected content after the last record".into(),
                });
            }
        }
        Ok(())
    }
}

fn field<F: FromStr>(line: usize, fields: &[&str], k: usize, what: &str) -> Result<F> {
    let raw = fields.get(k).ok_or_else(|| FormatError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    raw.parse().map_err(|_| FormatError::Parse {
        line,
        msg: format!("invalid {what} '{raw}'"),
    })
}

fn expect_arity(line: usize, fields: &[&str], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(FormatError::Parse {
            line,
            msg: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    Ok(())
}

fn header(lines: &mut Lines, magic: &str, arity: usize) -> Result<Vec<usize>> {
    let (line, f) = lines.next_fields("header")?;
    if f.first() != Some(&magic) {
        return Err(FormatError::BadMagic {
            expected: magic.into(),
            found: f.first().unwrap_or(&"").to_string(),
        });
    }
    expect_arity(line, &f, arity + 1)?;
    (1..=arity).map(|k| field(line, &f, k, "count")).collect()
}

fn finite<T: Scalar>(line: usize, v: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FormatError::Parse {
            line,
            msg: format!("non-finite value {v}"),
        })
    }
}

pub fn write_trj<T: Scalar>(frame_count: usize, trajectories: &[Trajectory<T>]) -> String {
    let mut s = String::new();
    writeln!(s, "TRJ1 {} {frame_count}", trajectories.len()).unwrap();
    for t in trajectories {
        writeln!(s, "{} {} {}", t.id, t.start_frame, t.len()).unwrap();
        for [x, y] in &t.positions {
            writeln!(
                s,
                "{} {}",
                format_decimal(*x, MIN_SIG_DIGITS),
                format_decimal(*y, MIN_SIG_DIGITS)
            )
            .unwrap();
        }
    }
    s
}

pub fn read_trj<T: Scalar>(text: &str) -> Result<TrajectoryFile<T>> {
    let mut lines = Lines::new(text);
    let counts = header(&mut lines, "TRJ1", 2)?;
    let (n, frame_count) = (counts[0], counts[1]);
    let mut trajectories = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let (line, f) = lines.next_fields("trajectory header")?;
        expect_arity(line, &f, 3)?;
        let id: usize = field(line, &f, 0, "trajectory id")?;
        let start: usize = field(line, &f, 1, "start frame")?;
        let len: usize = field(line, &f, 2, "length")?;
        if len == 0 || start + len > frame_count {
            return Err(FormatError::Parse {
                line,
                msg: format!("trajectory {id} spans frames {start}+{len} of {frame_count}"),
            });
        }
        let mut positions = Vec::with_capacity(len);
        for _ in 0..len {
            let (line, f) = lines.next_fields("position")?;
            expect_arity(line, &f, 2)?;
            let x = finite(line, field::<T>(line, &f, 0, "x")?)?;
            let y = finite(line, field::<T>(line, &f, 1, "y")?)?;
            positions.push([x, y]);
        }
        trajectories.push(Trajectory::new(id, start, positions));
    }
    lines.finish()?;
    Ok(TrajectoryFile {
        frame_count,
        trajectories,
    })
}

pub fn write_spl(labels: &SparseLabels) -> String {
    let mut s = String::new();
    writeln!(s, "SPL1 {}", labels.len()).unwrap();
    for (id, l) in labels {
        writeln!(s, "{id} {l}").unwrap();
    }
    s
}

pub fn read_spl(text: &str) -> Result<SparseLabels> {
    let mut lines = Lines::new(text);
    let n = header(&mut lines, "SPL1", 1)?[0];
    let mut labels = SparseLabels::new();
    for _ in 0..n {
        let (line, f) = lines.next_fields("label line")?;
        expect_arity(line, &f, 2)?;
        let id: usize = field(line, &f, 0, "trajectory id")?;
        let l: u32 = field(line, &f, 1, "label")?;
        if labels.insert(id, l).is_some() {
            return Err(FormatError::Parse {
                line,
                msg: format!("duplicate trajectory id {id}"),
            });
        }
    }
    lines.finish()?;
    Ok(labels)
}

pub fn write_grf<T: Scalar>(graph: &AffinityGraph<T>) -> String {
    let mut s = String::new();
    writeln!(s, "GRF1 {} {}", graph.node_count(), graph.edges().len()).unwrap();
    for e in graph.edges() {
        writeln!(s, "{} {} {}", e.u, e.v, e.cost).unwrap();
    }
    s
}

pub fn read_grf<T: Scalar>(text: &str) -> Result<AffinityGraph<T>> {
    let mut lines = Lines::new(text);
    let counts = header(&mut lines, "GRF1", 2)?;
    let (nodes, m) = (counts[0], counts[1]);
    let mut edges = Vec::with_capacity(m.min(1 << 24));
    for _ in 0..m {
        let (line, f) = lines.next_fields("edge")?;
        expect_arity(line, &f, 3)?;
        edges.push(Edge {
            u: field(line, &f, 0, "node")?,
            v: field(line, &f, 1, "node")?,
            cost: finite(line, field::<T>(line, &f, 2, "cost")?)?,
        });
    }
    lines.finish()?;
    AffinityGraph::new(nodes, edges).map_err(|e| FormatError::Parse {
        line: 0,
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trj_layout() {
        let t = vec![
            Trajectory::new(0, 1, vec![[4.0f64, 8.5], [6.0, 8.25]]),
            Trajectory::new(1, 0, vec![[0.1, 1e-7], [2.0, 3.0], [1.0 / 3.0, 7.0]]),
        ];
        let s = write_trj(4, &t);
        let mut l = s.lines();
        assert_eq!(l.next(), Some("TRJ1 2 4"));
        assert_eq!(l.next(), Some("0 1 2"));
        assert_eq!(l.next(), Some("4.00000 8.50000"));
        assert_eq!(l.next(), Some("6.00000 8.25000"));
        assert_eq!(l.next(), Some("1 0 3"));
        assert_eq!(l.next(), Some("0.100000 0.000000100000"));
        let back = read_trj::<f64>(&s).unwrap();
        assert_eq!(back.frame_count, 4);
        assert_eq!(back.trajectories, t);
    }

    #[test]
    fn trj_errors() {
        assert!(matches!(
            read_trj::<f64>("TRJ2 0 1\n"),
            Err(FormatError::BadMagic { .. })
        ));
        assert!(matches!(
            read_trj::<f64>("TRJ1 1 3\n0 0 2\n1 2\n"),
            Err(FormatError::Parse { line: 0, .. })
        ));
        assert!(matches!(
            read_trj::<f64>("TRJ1 1 3\n0 2 2\n1 2\n3 4\n"),
            Err(FormatError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_trj::<f64>("TRJ1 1 3\n0 0 1\n1 x\n"),
            Err(FormatError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_trj::<f64>("TRJ1 1 3\n0 0 1\n1 NaN\n"),
            Err(FormatError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_trj::<f64>("TRJ1 0 3\nextra\n"),
            Err(FormatError::Parse { line: 2, .. })
        ));
        assert!(read_trj::<f64>("TRJ1 0 3\n\n").is_ok());
    }

    #[test]
    fn spl_round_trip_and_duplicates() {
        let labels: SparseLabels = [(3, 1), (7, 2), (0, 1)].into_iter().collect();
        let s = write_spl(&labels);
        assert_eq!(s, "SPL1 3\n0 1\n3 1\n7 2\n");
        assert_eq!(read_spl(&s).unwrap(), labels);
        assert!(read_spl("SPL1 2\n1 1\n1 2\n").is_err());
        assert!(read_spl("SPL1 1\n1 -1\n").is_err());
    }

    #[test]
    fn grf_round_trip_and_validation() {
        let g = AffinityGraph::new(
            3,
            vec![
                Edge {
                    u: 0,
                    v: 1,
                    cost: 0.1f64,
                },
                Edge {
                    u: 1,
                    v: 2,
                    cost: -10.0,
                },
            ],
        )
        .unwrap();
        let s = write_grf(&g);
        assert_eq!(s, "GRF1 3 2\n0 1 0.1\n1 2 -10\n");
        assert_eq!(read_grf::<f64>(&s).unwrap(), g);
        assert!(read_grf::<f64>("GRF1 2 1\n0 2 1\n").is_err());
        assert!(read_grf::<f64>("GRF1 2 1\n1 1 1\n").is_err());
        assert!(read_grf::<f64>("GRF1 2 1\n0 1 inf\n").is_err());
    }
}
