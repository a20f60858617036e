use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{Error, Result};
use crate::polyalg::Monomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One stored entry of a symmetric coefficient matrix. With `i > j` it
/// stands for `value` at both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// `⟨A, X⟩ + aᵀs + fᵀw` in sparse form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm {
    pub blocks: Vec<BlockEntry>,
    pub nonneg: Vec<(usize, f64)>,
    pub free: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|e| e.value == 0.0)
            && self.nonneg.iter().all(|(_, v)| *v == 0.0)
            && self.free.iter().all(|(_, v)| *v == 0.0)
    }

    pub fn push_block(&mut self, block: usize, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.blocks.push(BlockEntry { block, i, j, value });
    }

    /// Value at `(X, s, w)`.
    pub fn eval(&self, x: &[SymMatrix], s: &[f64], w: &[f64]) -> f64 {
        let mut v = 0.0;
        for e in &self.blocks {
            let f = if e.i == e.j { 1.0 } else { 2.0 };
            v += f * e.value * x[e.block].get(e.i, e.j);
        }
        v += self.nonneg.iter().map(|(k, c)| c * s[*k]).sum::<f64>();
        v += self.free.iter().map(|(k, c)| c * w[*k]).sum::<f64>();
        v
    }

    /// Sum of squared coefficients, counting off-diagonal entries twice.
    pub fn norm_sq(&self) -> f64 {
        let mut v = 0.0;
        for e in &self.blocks {
            let f = if e.i == e.j { 1.0 } else { 2.0 };
            v += f * e.value * e.value;
        }
        v += self.nonneg.iter().map(|(_, c)| c * c).sum::<f64>();
        v += self.free.iter().map(|(_, c)| c * c).sum::<f64>();
        v
    }

    fn scaled(&self, s: f64) -> LinearForm {
        LinearForm {
            blocks: self
                .blocks
                .iter()
                .map(|e| BlockEntry {
                    value: e.value * s,
                    ..*e
                })
                .collect(),
            nonneg: self.nonneg.iter().map(|(k, c)| (*k, c * s)).collect(),
            free: self.free.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: LinearForm,
    pub rhs: f64,
}

/// Block-diagonal SDP in equality standard form:
///
/// optimize `⟨C, X⟩ + c_sᵀs + c_fᵀw` subject to `⟨A_i, X⟩ + a_iᵀs + f_iᵀw = b_i`,
/// with every block of `X` PSD, `s ≥ 0` and `w` free.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub sense: Sense,
    pub block_dims: Vec<usize>,
    pub num_nonneg: usize,
    pub num_free: usize,
    pub objective: LinearForm,
    pub constraints: Vec<Constraint>,
    /// Row of each monomial for SOS-form problems; empty otherwise.
    pub monomial_index: BTreeMap<Monomial, usize>,
}

impl SdpProblem {
    pub fn new(sense: Sense, block_dims: Vec<usize>, num_nonneg: usize, num_free: usize) -> Self {
        SdpProblem {
            sense,
            block_dims,
            num_nonneg,
            num_free,
            objective: LinearForm::default(),
            constraints: Vec::new(),
            monomial_index: BTreeMap::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    /// Checks that every entry references a declared variable.
    pub fn validate(&self) -> Result<()> {
        let check = |f: &LinearForm, what: &str| -> Result<()> {
            for e in &f.blocks {
                let dim = *self
                    .block_dims
                    .get(e.block)
                    .ok_or_else(|| Error::InvalidInput(format!("{what}: block {} not declared", e.block)))?;
                if e.i >= dim || e.j > e.i {
                    return Err(Error::InvalidInput(format!(
                        "{what}: entry ({}, {}) outside lower triangle of block {} (dim {dim})",
                        e.i, e.j, e.block
                    )));
                }
                if !e.value.is_finite() {
                    return Err(Error::InvalidInput(format!("{what}: non-finite coefficient")));
                }
            }
            if f.nonneg.iter().any(|(k, _)| *k >= self.num_nonneg) || f.free.iter().any(|(k, _)| *k >= self.num_free) {
                return Err(Error::InvalidInput(format!("{what}: scalar index out of range")));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (r, c) in self.constraints.iter().enumerate() {
            check(&c.lhs, &format!("row {r}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("row {r}: non-finite right-hand side")));
            }
        }
        if self.block_dims.contains(&0) {
            return Err(Error::InvalidInput("block dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Removes rows with no coefficients and zero right-hand side.
    pub fn drop_empty_rows(&mut self) {
        let keep: Vec<bool> = self
            .constraints
            .iter()
            .map(|c| !(c.lhs.is_empty() && c.rhs == 0.0))
            .collect();
        let dropped = keep.iter().filter(|k| !**k).count();
        if dropped == 0 {
            return;
        }
        log::debug!("dropping {dropped} empty constraint rows");
        let mut new_index = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (r, k) in keep.iter().enumerate() {
            if *k {
                new_index[r] = next;
                next += 1;
            }
        }
        let mut it = keep.iter();
        self.constraints.retain(|_| *it.next().unwrap());
        self.monomial_index = std::mem::take(&mut self.monomial_index)
            .into_iter()
            .filter(|(_, r)| keep[*r])
            .map(|(m, r)| (m, new_index[r]))
            .collect();
    }

    /// Objective value at `(X, s, w)` in the problem's own sense.
    pub fn objective_value(&self, x: &[SymMatrix], s: &[f64], w: &[f64]) -> f64 {
        self.objective.eval(x, s, w)
    }

    /// `max_i |A_i(X,s,w) − b_i|`.
    pub fn max_violation(&self, x: &[SymMatrix], s: &[f64], w: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.lhs.eval(x, s, w) - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Same problem with every row multiplied by `factor`.
    pub fn scale_rows(&self, factor: f64) -> SdpProblem {
        let mut out = self.clone();
        for c in &mut out.constraints {
            c.lhs = c.lhs.scaled(factor);
            c.rhs *= factor;
        }
        out
    }

    /// Plain-text dump for cross-checking with other solvers.
    ///
    /// ```text
    /// pvh-sdp 1
    /// sense maximize
    /// blocks 2 3 2
    /// nonneg 0
    /// free 1
    /// rows 5
    /// 0 w 0 1            objective entries use row 0
    /// 1 rhs 0            constraint rows are 1-based
    /// 1 b 0 0 0 1        row, block, i, j, value (i ≥ j, 0-based)
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        let dims: Vec<String> = self.block_dims.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "pvh-sdp 1");
        let _ = writeln!(out, "sense {sense}");
        let _ = writeln!(out, "blocks {} {}", self.block_dims.len(), dims.join(" "));
        let _ = writeln!(out, "nonneg {}", self.num_nonneg);
        let _ = writeln!(out, "free {}", self.num_free);
        let _ = writeln!(out, "rows {}", self.constraints.len());
        let mut form = |row: usize, f: &LinearForm| {
            for e in &f.blocks {
                let _ = writeln!(out, "{row} b {} {} {} {}", e.block, e.i, e.j, e.value);
            }
            for (k, v) in &f.nonneg {
                let _ = writeln!(out, "{row} s {k} {v}");
            }
            for (k, v) in &f.free {
                let _ = writeln!(out, "{row} w {k} {v}");
            }
        };
        form(0, &self.objective);
        for (r, c) in self.constraints.iter().enumerate() {
            form(r + 1, &c.lhs);
        }
        for (r, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "{} rhs {}", r + 1, c.rhs);
        }
        out
    }

    /// Parses the output of [`SdpProblem::to_text`]. The monomial index is not stored.
    pub fn from_text(text: &str) -> Result<SdpProblem> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::parse("sdp text", format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::parse(format!("line {no}"), format!("expected `{key}`")));
            }
            Ok((no, parts.map(str::to_string).collect()))
        };
        let (no, v) = header("pvh-sdp")?;
        if v != ["1"] {
            return Err(Error::parse(format!("line {no}"), "unsupported format version"));
        }
        let (no, v) = header("sense")?;
        let sense = match v.first().map(String::as_str) {
            Some("minimize") => Sense::Minimize,
            Some("maximize") => Sense::Maximize,
            _ => return Err(Error::parse(format!("line {no}"), "sense must be minimize or maximize")),
        };
        let (no, v) = header("blocks")?;
        let nums = parse_all::<usize>(&v, no)?;
        if nums.is_empty() || nums.len() != nums[0] + 1 {
            return Err(Error::parse(format!("line {no}"), "block count does not match sizes"));
        }
        let block_dims = nums[1..].to_vec();
        let (no, v) = header("nonneg")?;
        let num_nonneg = single(&v, no)?;
        let (no, v) = header("free")?;
        let num_free = single(&v, no)?;
        let (no, v) = header("rows")?;
        let rows: usize = single(&v, no)?;

        let mut prob = SdpProblem::new(sense, block_dims, num_nonneg, num_free);
        prob.constraints = vec![
            Constraint {
                lhs: LinearForm::default(),
                rhs: 0.0
            };
            rows
        ];
        for (no, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let at = || format!("line {no}");
            if parts.len() < 3 {
                return Err(Error::parse(at(), "truncated entry"));
            }
            let row: usize = parts[0].parse().map_err(|_| Error::parse(at(), "bad row index"))?;
            if row > rows {
                return Err(Error::parse(at(), "row index out of range"));
            }
            let num = |k: usize| -> Result<f64> {
                parts
                    .get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::parse(at(), "bad number"))
            };
            let idx = |k: usize| -> Result<usize> {
                parts
                    .get(k)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(at(), "bad index"))
            };
            if parts[1] == "rhs" {
                if row == 0 {
                    return Err(Error::parse(at(), "objective has no right-hand side"));
                }
                prob.constraints[row - 1].rhs = num(2)?;
                continue;
            }
            let form = if row == 0 {
                &mut prob.objective
            } else {
                &mut prob.constraints[row - 1].lhs
            };
            match parts[1] {
                "b" => form.push_block(idx(2)?, idx(3)?, idx(4)?, num(5)?),
                "s" => form.nonneg.push((idx(2)?, num(3)?)),
                "w" => form.free.push((idx(2)?, num(3)?)),
                other => return Err(Error::parse(at(), format!("unknown entry kind `{other}`"))),
            }
        }
        prob.validate()?;
        Ok(prob)
    }
}

fn parse_all<T: std::str::FromStr>(v: &[String], no: usize) -> Result<Vec<T>> {
    v.iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::parse(format!("line {no}"), "bad number"))
        })
        .collect()
}

fn single<T: std::str::FromStr>(v: &[String], no: usize) -> Result<T> {
    let mut all = parse_all::<T>(v, no)?;
    if all.len() != 1 {
        return Err(Error::parse(format!("line {no}"), "expected one value"));
    }
    Ok(all.remove(0))
}
