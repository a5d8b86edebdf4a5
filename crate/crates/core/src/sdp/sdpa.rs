//! Sparse SDPA (`.dat-s`) export and a reader for the same subset.
//!
//! The file encodes `min c'x  s.t.  sum_i F_i x_i - F_0 >= 0`. Every cone of a
//! [`ConicProblem`] becomes one block:
//!
//! * `Zero(n)`: diagonal block of size `2n` holding `s` and `-s`;
//! * `Nonneg(n)`: diagonal block of size `n`;
//! * `Soc(n)`: dense `n x n` arrow matrix `[[t, u'], [u, t I]]`;
//! * `PsdTriangle(n)`: dense `n x n` block.
//!
//! Entries are sorted and written with the shortest round-trip float format,
//! so identical problems give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Cone, ConicProblem};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// `(block, i, j, weight)`: slack row contributes `weight * s_r` to the
/// upper-triangle entry `(i, j)` of the block, all 0-based.
type Position = (usize, usize, usize, f64);

fn block_size(c: &Cone) -> i64 {
    match *c {
        Cone::Zero(n) => -2 * n as i64,
        Cone::Nonneg(n) => -(n as i64),
        Cone::Soc(n) | Cone::PsdTriangle(n) => n as i64,
    }
}

fn positions(cones: &[Cone]) -> Vec<Vec<Position>> {
    let mut out = Vec::new();
    for (blk, cone) in cones.iter().enumerate() {
        match *cone {
            Cone::Zero(n) => out.extend((0..n).map(|k| vec![(blk, 2 * k, 2 * k, 1.0), (blk, 2 * k + 1, 2 * k + 1, -1.0)])),
            Cone::Nonneg(n) => out.extend((0..n).map(|k| vec![(blk, k, k, 1.0)])),
            Cone::Soc(n) => {
                out.push((0..n).map(|k| (blk, k, k, 1.0)).collect());
                out.extend((1..n).map(|k| vec![(blk, 0, k, 1.0)]));
            }
            Cone::PsdTriangle(n) => {
                for j in 0..n {
                    for i in 0..=j {
                        let w = if i == j { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                        out.push(vec![(blk, i, j, w)]);
                    }
                }
            }
        }
    }
    out
}

/// Renders the problem in sparse SDPA format.
pub fn to_sdpa_string(problem: &ConicProblem) -> Result<String> {
    problem.validate()?;
    let pos = positions(&problem.cones);
    // matrices[k][(blk, i, j)], k = 0 is F_0
    let mut matrices: Vec<BTreeMap<(usize, usize, usize), f64>> = vec![BTreeMap::new(); problem.n_vars() + 1];
    for (r, &b) in problem.b.iter().enumerate() {
        for &(blk, i, j, w) in &pos[r] {
            *matrices[0].entry((blk, i, j)).or_default() -= b * w;
        }
    }
    for &(r, c, v) in &problem.a.triplets {
        for &(blk, i, j, w) in &pos[r] {
            *matrices[c + 1].entry((blk, i, j)).or_default() -= v * w;
        }
    }

    let mut s = String::new();
    let desc = problem.description.replace(['\n', '"'], " ");
    writeln!(s, "\"{desc}").unwrap();
    writeln!(s, "{}", problem.n_vars()).unwrap();
    writeln!(s, "{}", problem.cones.len()).unwrap();
    let sizes: Vec<String> = problem.cones.iter().map(|c| block_size(c).to_string()).collect();
    writeln!(s, "{}", sizes.join(" ")).unwrap();
    let c: Vec<String> = problem.objective.iter().map(|v| format!("{v:e}")).collect();
    writeln!(s, "{}", c.join(" ")).unwrap();
    for (k, m) in matrices.iter().enumerate() {
        for (&(blk, i, j), &v) in m {
            if v != 0.0 {
                writeln!(s, "{k} {} {} {} {v:e}", blk + 1, i + 1, j + 1).unwrap();
            }
        }
    }
    Ok(s)
}

/// Parsed sparse SDPA data.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaData {
    pub objective: Vec<f64>,
    /// Negative sizes mark diagonal blocks.
    pub block_sizes: Vec<i64>,
    /// `(matrix, block, i, j, value)`, 1-based as in the file.
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

impl SdpaData {
    /// Dense blocks of `sum_i F_i x_i - F_0`.
    pub fn slack_blocks(&self, x: &[f64]) -> Vec<RMatrix> {
        let mut out: Vec<RMatrix> = self
            .block_sizes
            .iter()
            .map(|&n| RMatrix::zeros(n.unsigned_abs() as usize, n.unsigned_abs() as usize))
            .collect();
        for &(k, blk, i, j, v) in &self.entries {
            let w = if k == 0 { -v } else { v * x[k - 1] };
            let m = &mut out[blk - 1];
            m[(i - 1, j - 1)] += w;
            if i != j {
                m[(j - 1, i - 1)] += w;
            }
        }
        out
    }
}

pub fn parse_sdpa(text: &str) -> Result<SdpaData> {
    let bad = |msg: &str| Error::Solver(format!("malformed SDPA data: {msg}"));
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
    let mut numbers = |what: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(what))?;
        Ok(line
            .split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect())
    };
    let parse_usize = |t: &str| t.parse::<usize>().map_err(|_| bad(t));
    let m = parse_usize(&numbers("variable count")?[0])?;
    let nblocks = parse_usize(&numbers("block count")?[0])?;
    let block_sizes = numbers("block sizes")?
        .iter()
        .take(nblocks)
        .map(|t| t.parse::<i64>().map_err(|_| bad(t)))
        .collect::<Result<Vec<_>>>()?;
    let objective = numbers("objective")?
        .iter()
        .take(m)
        .map(|t| t.parse::<f64>().map_err(|_| bad(t)))
        .collect::<Result<Vec<_>>>()?;
    if block_sizes.len() != nblocks || objective.len() != m {
        return Err(bad("header lengths"));
    }
    let mut entries = Vec::new();
    while let Ok(tok) = numbers("entry") {
        if tok.len() != 5 {
            return Err(bad("entry needs five fields"));
        }
        let k = parse_usize(&tok[0])?;
        let blk = parse_usize(&tok[1])?;
        let i = parse_usize(&tok[2])?;
        let j = parse_usize(&tok[3])?;
        let v: f64 = tok[4].parse().map_err(|_| bad(&tok[4]))?;
        if k > m || blk == 0 || blk > nblocks || i == 0 || j == 0 {
            return Err(bad("entry index out of range"));
        }
        let size = block_sizes[blk - 1].unsigned_abs() as usize;
        if i > size || j > size || (block_sizes[blk - 1] < 0 && i != j) {
            return Err(bad("entry outside its block"));
        }
        entries.push((k, blk, i, j, v));
    }
    Ok(SdpaData {
        objective,
        block_sizes,
        entries,
    })
}
