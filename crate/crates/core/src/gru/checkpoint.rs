//! GRUP1 parameter checkpoints.
//!
//! ```text
//! GRUP1 <hidden> <steps> <head>
//! <name> <rows> <cols>
//! <row-major values>
//! ...
//! ```
//!
//! Tensors appear in [`TENSOR_NAMES`] order, values in shortest round-trip
//! decimal form.

use std::fmt::Write as _;

use super::params::{GruDims, GruParams, TENSOR_NAMES};
use super::{GruError, Result};
use crate::scalar::Scalar;

pub fn write_checkpoint<T: Scalar>(p: &GruParams<T>) -> String {
    let d = p.dims;
    let mut s = format!("GRUP1 {} {} {}\n", d.hidden, d.steps, d.head);
    for ((name, (rows, cols)), values) in TENSOR_NAMES.iter().zip(d.shapes()).zip(p.tensors()) {
        writeln!(s, "{name} {rows} {cols}").unwrap();
        let line: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    s
}

fn err(line: usize, msg: impl Into<String>) -> GruError {
    GruError::Checkpoint {
        line,
        msg: msg.into(),
    }
}

fn usize_fields(line: usize, fields: &[&str]) -> Result<Vec<usize>> {
    fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| err(line, format!("invalid size '{f}'")))
        })
        .collect()
}

pub fn read_checkpoint<T: Scalar>(text: &str) -> Result<GruParams<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("missing {what}")))
    };

    let (ln, head) = next("header")?;
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.first() != Some(&"GRUP1") || f.len() != 4 {
        return Err(err(ln, "expected 'GRUP1 <hidden> <steps> <head>'"));
    }
    let sizes = usize_fields(ln, &f[1..])?;
    if sizes.contains(&0) {
        return Err(err(ln, "layer sizes must be positive"));
    }
    let dims = GruDims {
        hidden: sizes[0],
        steps: sizes[1],
        head: sizes[2],
    };
    let mut p = GruParams::zeros(dims);
    let shapes = dims.shapes();
    for (k, tensor) in p.tensors_mut().into_iter().enumerate() {
        let (ln, line) = next(TENSOR_NAMES[k])?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 || f[0] != TENSOR_NAMES[k] {
            return Err(err(
                ln,
                format!("expected '{} <rows> <cols>'", TENSOR_NAMES[k]),
            ));
        }
        let rc = usize_fields(ln, &f[1..])?;
        if (rc[0], rc[1]) != shapes[k] {
            return Err(err(
                ln,
                format!(
                    "{} is {}x{}, expected {}x{}",
                    f[0], rc[0], rc[1], shapes[k].0, shapes[k].1
                ),
            ));
        }
        let (ln, line) = next("values")?;
        let values = line
            .split_whitespace()
            .map(|v| match v.parse::<T>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(err(ln, format!("invalid value '{v}'"))),
            })
            .collect::<Result<Vec<T>>>()?;
        if values.len() != tensor.len() {
            return Err(err(
                ln,
                format!("{} values for {} entries", values.len(), tensor.len()),
            ));
        }
        *tensor = values;
    }
    if let Some((ln, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(ln, "unexpected content after the last tensor"));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let dims = GruDims {
            hidden: 2,
            steps: 3,
            head: 2,
        };
        let p = GruParams::<f64>::uniform(dims, 0.1, 4);
        let s = write_checkpoint(&p);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "GRUP1 2 3 2");
        assert_eq!(lines[1], "W_z 2 2");
        assert_eq!(lines[19], "fc1_w 2 3");
        assert_eq!(lines[25], "fc2_b 1 1");
        assert_eq!(lines.len(), 27);
        assert_eq!(read_checkpoint::<f64>(&s).unwrap(), p);
    }

    #[test]
    fn rejects_malformed() {
        let p = GruParams::<f32>::uniform(GruDims::default(), 0.1, 1);
        let s = write_checkpoint(&p);
        let swapped = s.replacen("U_z", "V_z", 1);
        assert!(matches!(
            read_checkpoint::<f32>(&swapped),
            Err(GruError::Checkpoint { line: 4, .. })
        ));
        let short: String = s.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(read_checkpoint::<f32>(&short).is_err());
        let resized = s.replacen("GRUP1 2 25 8", "GRUP1 2 25 7", 1);
        assert!(read_checkpoint::<f32>(&resized).is_err());
        assert!(read_checkpoint::<f32>(&format!("{s}junk\n")).is_err());
    }
}
