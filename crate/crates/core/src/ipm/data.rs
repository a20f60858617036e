use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{
    max_step_lp, max_step_psd, symmetrize, Direction, Factor, FactorKind, Iterate, Residual, Residuals, SdpSolution,
    SolveStatus,
};
use crate::momentsdp::{LinearForm, SdpProblem, Sense, SymMatrix};

/// Oriented entry `(a, b, v)`: contributes `v` at position `(a, b)` only.
type Oriented = (usize, usize, f64);

/// Problem data after row normalization and objective/rhs scaling, posed as a
/// minimization.
pub(super) struct Scaled {
    pub dims: Vec<usize>,
    pub m: usize,
    pub ns: usize,
    pub nf: usize,
    /// For every block, the rows touching it with their oriented entries.
    block_rows: Vec<Vec<(usize, Vec<Oriented>)>>,
    c_blocks: Vec<DMatrix<f64>>,
    a_s: DMatrix<f64>,
    a_f: DMatrix<f64>,
    b: DVector<f64>,
    c_s: DVector<f64>,
    c_f: DVector<f64>,
    row_scale: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
    sign: f64,
    b_orig_norm: f64,
    c_orig_norm: f64,
    /// Factor of `AAᵀ` for projecting steps back onto `A(ΔX) = r_p`.
    proj: Option<Cholesky<f64, Dyn>>,
}

fn gram_factor(
    m: usize,
    block_rows: &[Vec<(usize, Vec<Oriented>)>],
    a_s: &DMatrix<f64>,
    a_f: &DMatrix<f64>,
) -> Option<Cholesky<f64, Dyn>> {
    let mut g = a_s * a_s.transpose() + a_f * a_f.transpose();
    for rows in block_rows {
        let mut at: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (r, ents) in rows {
            for &(i, j, v) in ents {
                at.entry((i, j)).or_default().push((*r, v));
            }
        }
        for list in at.values() {
            for &(r1, v1) in list {
                for &(r2, v2) in list {
                    g[(r1, r2)] += v1 * v2;
                }
            }
        }
    }
    let floor = 1e-12 * (0..m).map(|i| g[(i, i)]).fold(0.0, f64::max).max(1e-300);
    for i in 0..m {
        g[(i, i)] += floor;
    }
    Cholesky::new(g)
}

fn oriented(form: &LinearForm, nblocks: usize) -> Vec<Vec<Oriented>> {
    let mut out = vec![Vec::new(); nblocks];
    for e in &form.blocks {
        if e.value == 0.0 {
            continue;
        }
        out[e.block].push((e.i, e.j, e.value));
        if e.i != e.j {
            out[e.block].push((e.j, e.i, e.value));
        }
    }
    out
}

impl Scaled {
    pub fn new(sdp: &SdpProblem) -> Scaled {
        let nb = sdp.block_dims.len();
        let m = sdp.constraints.len();
        let (ns, nf) = (sdp.num_nonneg, sdp.num_free);
        let sign = match sdp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let row_scale: Vec<f64> = sdp
            .constraints
            .iter()
            .map(|c| {
                let n = c.lhs.norm_sq().sqrt();
                if n > 0.0 {
                    n
                } else {
                    1.0
                }
            })
            .collect();
        let b_orig_norm = sdp.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));
        let b_raw: DVector<f64> =
            DVector::from_iterator(m, sdp.constraints.iter().zip(&row_scale).map(|(c, r)| c.rhs / r));
        let b_scale = b_raw.amax().max(1.0);

        let obj = oriented(&sdp.objective, nb);
        let mut c_blocks: Vec<DMatrix<f64>> = sdp.block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for (b, ents) in obj.iter().enumerate() {
            for &(i, j, v) in ents {
                c_blocks[b][(i, j)] += sign * v;
            }
        }
        let mut c_s: DVector<f64> = DVector::zeros(ns);
        for &(k, v) in &sdp.objective.nonneg {
            c_s[k] += sign * v;
        }
        let mut c_f: DVector<f64> = DVector::zeros(nf);
        for &(k, v) in &sdp.objective.free {
            c_f[k] += sign * v;
        }
        let c_orig_norm = c_blocks
            .iter()
            .map(|c| c.amax())
            .fold(c_s.amax().max(c_f.amax()), f64::max);
        let c_scale = c_orig_norm.max(1.0);
        for c in &mut c_blocks {
            *c /= c_scale;
        }
        c_s /= c_scale;
        c_f /= c_scale;

        let mut block_rows: Vec<Vec<(usize, Vec<Oriented>)>> = vec![Vec::new(); nb];
        let mut a_s = DMatrix::zeros(m, ns);
        let mut a_f = DMatrix::zeros(m, nf);
        for (r, c) in sdp.constraints.iter().enumerate() {
            let rs = row_scale[r];
            for (b, ents) in oriented(&c.lhs, nb).into_iter().enumerate() {
                if !ents.is_empty() {
                    block_rows[b].push((r, ents.into_iter().map(|(i, j, v)| (i, j, v / rs)).collect()));
                }
            }
            for &(k, v) in &c.lhs.nonneg {
                a_s[(r, k)] += v / rs;
            }
            for &(k, v) in &c.lhs.free {
                a_f[(r, k)] += v / rs;
            }
        }

        let proj = gram_factor(m, &block_rows, &a_s, &a_f);
        Scaled {
            proj,
            dims: sdp.block_dims.clone(),
            m,
            ns,
            nf,
            block_rows,
            c_blocks,
            a_s,
            a_f,
            b: b_raw / b_scale,
            c_s,
            c_f,
            row_scale,
            b_scale,
            c_scale,
            sign,
            b_orig_norm,
            c_orig_norm,
        }
    }

    pub fn initial_point(&self) -> Iterate {
        let total = self.dims.iter().sum::<usize>() + self.ns;
        let root = (total.max(1) as f64).sqrt();
        let xi = 10.0f64.max(root).max(root * self.b.amax());
        let cnorm = self
            .c_blocks
            .iter()
            .map(|c| c.norm())
            .fold(self.c_s.norm().max(self.c_f.norm()), f64::max);
        let eta = 10.0f64.max(root).max(cnorm);
        Iterate {
            x: self.dims.iter().map(|&d| DMatrix::identity(d, d) * xi).collect(),
            z: self.dims.iter().map(|&d| DMatrix::identity(d, d) * eta).collect(),
            s: DVector::from_element(self.ns, xi),
            zs: DVector::from_element(self.ns, eta),
            w: DVector::zeros(self.nf),
            y: DVector::zeros(self.m),
        }
    }

    /// `𝒜(X) + A_s s + A_f w` for possibly non-symmetric block arguments.
    fn apply_a(&self, x: &[DMatrix<f64>], s: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.a_s * s + &self.a_f * w;
        for (b, rows) in self.block_rows.iter().enumerate() {
            let xb = &x[b];
            for (r, ents) in rows {
                out[*r] += ents.iter().map(|&(i, j, v)| v * xb[(i, j)]).sum::<f64>();
            }
        }
        out
    }

    /// `Σ yᵢ Aᵢ` per block.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.dims
            .iter()
            .zip(&self.block_rows)
            .map(|(&d, rows)| {
                let mut m = DMatrix::zeros(d, d);
                for (r, ents) in rows {
                    let yr = y[*r];
                    if yr != 0.0 {
                        for &(i, j, v) in ents {
                            m[(i, j)] += v * yr;
                        }
                    }
                }
                m
            })
            .collect()
    }

    pub fn residual(&self, it: &Iterate) -> Residual {
        let rp = &self.b - self.apply_a(&it.x, &it.s, &it.w);
        let aty = self.adjoint(&it.y);
        let rd = self
            .c_blocks
            .iter()
            .zip(&it.z)
            .zip(aty)
            .map(|((c, z), a)| c - z - a)
            .collect();
        let rds = &self.c_s - &it.zs - self.a_s.tr_mul(&it.y);
        let rdf = &self.c_f - self.a_f.tr_mul(&it.y);
        Residual { rp, rd, rds, rdf }
    }

    pub fn objectives(&self, it: &Iterate) -> (f64, f64) {
        let mut p = self.c_s.dot(&it.s) + self.c_f.dot(&it.w);
        for (c, x) in self.c_blocks.iter().zip(&it.x) {
            p += c.dot(x);
        }
        (p, self.b.dot(&it.y))
    }

    pub fn relative(&self, it: &Iterate, res: &Residual) -> Residuals {
        let pres = res
            .rp
            .iter()
            .zip(&self.row_scale)
            .fold(0.0f64, |a, (r, s)| a.max((r * s).abs()))
            * self.b_scale;
        let dres = res
            .rd
            .iter()
            .map(|m| m.amax())
            .fold(res.rds.amax().max(res.rdf.amax()), f64::max)
            * self.c_scale;
        let (p, d) = self.objectives(it);
        let k = self.b_scale * self.c_scale;
        Residuals {
            primal: pres / (1.0 + self.b_orig_norm),
            dual: dres / (1.0 + self.c_orig_norm),
            gap: ((p - d) * k).abs() / (1.0 + (p * k).abs()),
        }
    }

    pub fn complementarity(&self, it: &Iterate) -> f64 {
        it.x.iter().zip(&it.z).map(|(x, z)| x.dot(z)).sum::<f64>() + it.s.dot(&it.zs)
    }

    pub fn trial_complementarity(&self, it: &Iterate, d: &Direction, ap: f64, ad: f64) -> f64 {
        let mut total = 0.0;
        for b in 0..self.dims.len() {
            let x = &it.x[b] + &d.dx[b] * ap;
            let z = &it.z[b] + &d.dz[b] * ad;
            total += x.dot(&z);
        }
        let s = &it.s + &d.ds * ap;
        let zs = &it.zs + &d.dzs * ad;
        total + s.dot(&zs)
    }

    /// Heuristic divergence checks on the current iterate.
    pub fn infeasibility(&self, it: &Iterate) -> Option<(SolveStatus, String)> {
        let nx =
            it.x.iter()
                .map(|m| m.amax())
                .fold(it.s.amax().max(it.w.amax()), f64::max);
        let ny = it.y.amax();
        if nx > 1e12 {
            return Some((
                SolveStatus::InfeasibleDual,
                format!("primal iterates diverged (norm {nx:.2e})"),
            ));
        }
        if ny > 1e12 {
            return Some((
                SolveStatus::InfeasiblePrimal,
                format!("dual iterates diverged (norm {ny:.2e})"),
            ));
        }
        None
    }

    /// Schur complement `M_ij = tr(A_i X A_j Z⁻¹)` plus the LP block.
    fn schur(&self, it: &Iterate, zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut mat = DMatrix::zeros(self.m, self.m);
        for (b, rows) in self.block_rows.iter().enumerate() {
            let x = &it.x[b];
            let zi = &zinv[b];
            let d = self.dims[b];
            let mut tail: Vec<usize> = vec![0; rows.len() + 1];
            for idx in (0..rows.len()).rev() {
                tail[idx] = tail[idx + 1] + rows[idx].1.len();
            }
            let mut w = DMatrix::zeros(d, d);
            for (idx, (ri, ent_i)) in rows.iter().enumerate() {
                let nnz = ent_i.len();
                let direct_cost = nnz * tail[idx];
                let dense_cost = nnz * d * d + tail[idx];
                if direct_cost <= dense_cost {
                    for (rj, ent_j) in &rows[idx..] {
                        let mut v = 0.0;
                        for &(a, bb, va) in ent_i {
                            for &(c, dd, vb) in ent_j {
                                v += va * vb * x[(bb, c)] * zi[(dd, a)];
                            }
                        }
                        mat[(*ri, *rj)] += v;
                        if ri != rj {
                            mat[(*rj, *ri)] += v;
                        }
                    }
                } else {
                    // W = Z⁻¹ Aᵢ X, then M_ij = Σ u W[d, c] over entries (c, d, u) of A_j
                    w.fill(0.0);
                    for &(a, bb, va) in ent_i {
                        for q in 0..d {
                            let coef = va * x[(bb, q)];
                            if coef != 0.0 {
                                w.column_mut(q).axpy(coef, &zi.column(a), 1.0);
                            }
                        }
                    }
                    for (rj, ent_j) in &rows[idx..] {
                        let v: f64 = ent_j.iter().map(|&(c, dd, u)| u * w[(dd, c)]).sum();
                        mat[(*ri, *rj)] += v;
                        if ri != rj {
                            mat[(*rj, *ri)] += v;
                        }
                    }
                }
            }
        }
        if self.ns > 0 {
            let mut scaled = self.a_s.clone();
            for k in 0..self.ns {
                let dk = it.s[k] / it.zs[k];
                scaled.column_mut(k).scale_mut(dk);
            }
            mat += &scaled * self.a_s.transpose();
        }
        mat
    }

    pub fn factor(&self, it: &Iterate, zinv: &[DMatrix<f64>], reg: f64) -> Option<Factor> {
        let schur = self.schur(it, zinv);
        let mut mat = schur.clone();
        let rho = if self.nf > 0 {
            let aat = &self.a_f * self.a_f.transpose();
            let md = mat.diagonal().mean().abs();
            let fd = aat.diagonal().mean();
            let rho = if fd > 0.0 { md.max(1e-8) / fd } else { 1.0 };
            mat += aat * rho;
            rho
        } else {
            0.0
        };
        let max_diag = mat.diagonal().amax().max(1e-300);
        let mut r = reg;
        for _ in 0..5 {
            let mut k = mat.clone();
            for i in 0..self.m {
                k[(i, i)] += r * k[(i, i)].abs().max(1e-12 * max_diag);
            }
            if let Some(chol) = Cholesky::new(k) {
                if self.nf == 0 {
                    return Some(Factor {
                        schur,
                        kind: FactorKind::Chol {
                            k: chol,
                            kf: DMatrix::zeros(self.m, 0),
                            reduced: None,
                            rho,
                        },
                    });
                }
                let kf = chol.solve(&self.a_f);
                let red = self.a_f.tr_mul(&kf);
                let lu = red.lu();
                if lu.is_invertible() {
                    return Some(Factor {
                        schur,
                        kind: FactorKind::Chol {
                            k: chol,
                            kf,
                            reduced: Some(lu),
                            rho,
                        },
                    });
                }
                break;
            }
            r *= 100.0;
        }
        // full saddle system as a last resort
        let n = self.m + self.nf;
        let mut full = DMatrix::zeros(n, n);
        full.view_mut((0, 0), (self.m, self.m)).copy_from(&schur);
        full.view_mut((0, self.m), (self.m, self.nf)).copy_from(&self.a_f);
        full.view_mut((self.m, 0), (self.nf, self.m))
            .copy_from(&self.a_f.transpose());
        for i in 0..self.m {
            full[(i, i)] += reg * full[(i, i)].abs().max(1e-12 * max_diag);
        }
        let lu = full.lu();
        lu.is_invertible().then_some(Factor {
            schur,
            kind: FactorKind::Saddle(lu),
        })
    }

    /// Solves `[M A_f; A_fᵀ 0] [Δy; Δw] = [h; r]` with a few steps of
    /// iterative refinement against the unregularized `M`.
    fn solve_saddle(&self, f: &Factor, h: &DVector<f64>, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dy, mut dw) = self.raw_solve(&f.kind, h, r);
        let scale = h.amax().max(r.amax()).max(1e-300);
        let mut prev = f64::INFINITY;
        for _ in 0..4 {
            let e1 = h - &f.schur * &dy - &self.a_f * &dw;
            let e2 = r - self.a_f.tr_mul(&dy);
            let err = e1.amax().max(e2.amax());
            if err <= 1e-15 * scale || err >= prev {
                break;
            }
            prev = err;
            let (cy, cw) = self.raw_solve(&f.kind, &e1, &e2);
            dy += cy;
            dw += cw;
        }
        (dy, dw)
    }

    fn raw_solve(&self, f: &FactorKind, h: &DVector<f64>, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match f {
            FactorKind::Chol { k, kf, reduced, rho } => {
                let rhs = if self.nf > 0 {
                    h + &self.a_f * r * *rho
                } else {
                    h.clone()
                };
                let u = k.solve(&rhs);
                match reduced {
                    None => (u, DVector::zeros(0)),
                    Some(lu) => {
                        let t = self.a_f.tr_mul(&u) - r;
                        let dw = lu.solve(&t).unwrap_or_else(|| DVector::zeros(self.nf));
                        let dy = u - kf * &dw;
                        (dy, dw)
                    }
                }
            }
            FactorKind::Saddle(lu) => {
                let mut rhs = DVector::zeros(self.m + self.nf);
                rhs.rows_mut(0, self.m).copy_from(h);
                rhs.rows_mut(self.m, self.nf).copy_from(r);
                let sol = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(self.m + self.nf));
                (sol.rows(0, self.m).into_owned(), sol.rows(self.m, self.nf).into_owned())
            }
        }
    }

    /// HKM direction targeting `XZ = σμ I`, with the Mehrotra correction
    /// from `pred` when given.
    pub fn direction(
        &self,
        it: &Iterate,
        res: &Residual,
        zinv: &[DMatrix<f64>],
        factor: &Factor,
        sigma_mu: f64,
        pred: Option<&Direction>,
    ) -> Direction {
        let nb = self.dims.len();
        let mut g = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut inner = &it.x[b] * &res.rd[b];
            if let Some(p) = pred {
                inner += &p.dx[b] * &p.dz[b];
            }
            let gb = &zinv[b] * sigma_mu - &it.x[b] - inner * &zinv[b];
            g.push(gb);
        }
        let mut gs = DVector::zeros(self.ns);
        for k in 0..self.ns {
            let mut comp = sigma_mu - it.s[k] * it.zs[k];
            if let Some(p) = pred {
                comp -= p.ds[k] * p.dzs[k];
            }
            gs[k] = comp / it.zs[k] - it.s[k] / it.zs[k] * res.rds[k];
        }
        let h = &res.rp - self.apply_a(&g, &gs, &DVector::zeros(self.nf));
        let (dy, mut dw) = self.solve_saddle(factor, &h, &res.rdf);

        let aty = self.adjoint(&dy);
        let mut dx = Vec::with_capacity(nb);
        let mut dz = Vec::with_capacity(nb);
        for b in 0..nb {
            let dzb = &res.rd[b] - &aty[b];
            let dxb = symmetrize(&(&g[b] + &it.x[b] * &aty[b] * &zinv[b]));
            dx.push(dxb);
            dz.push(symmetrize(&dzb));
        }
        let dzs = &res.rds - self.a_s.tr_mul(&dy);
        let mut ds = DVector::zeros(self.ns);
        for k in 0..self.ns {
            let mut comp = sigma_mu - it.s[k] * it.zs[k];
            if let Some(p) = pred {
                comp -= p.ds[k] * p.dzs[k];
            }
            ds[k] = comp / it.zs[k] - it.s[k] / it.zs[k] * dzs[k];
        }

        // Rounding in X A*(Δy) Z⁻¹ leaves a primal residual once X is
        // ill-conditioned; remove it by a least-norm correction. When that
        // correction stalls the primal step, correct in the metric of X.
        let raw = (dx.clone(), ds.clone(), dw.clone());
        if let Some(proj) = &self.proj {
            for _ in 0..2 {
                let e = &res.rp - self.apply_a(&dx, &ds, &dw);
                if e.amax() <= 1e-15 * res.rp.amax().max(1.0) {
                    break;
                }
                let u = proj.solve(&e);
                for (d, c) in dx.iter_mut().zip(self.adjoint(&u)) {
                    *d += symmetrize(&c);
                }
                ds += self.a_s.tr_mul(&u);
                dw += self.a_f.tr_mul(&u);
            }
            if self.primal_limit(it, &dx, &ds) < 1e-2 {
                let (mut sx, mut ss, mut sw) = raw;
                if self.scaled_correction(it, &res.rp, &mut sx, &mut ss, &mut sw) {
                    (dx, ds, dw) = (sx, ss, sw);
                }
            }
        }
        Direction {
            dx,
            dz,
            ds,
            dzs,
            dw,
            dy,
        }
    }

    fn primal_limit(&self, it: &Iterate, dx: &[DMatrix<f64>], ds: &DVector<f64>) -> f64 {
        dx.iter()
            .zip(&it.x)
            .fold(max_step_lp(&it.s, ds), |a, (d, x)| a.min(max_step_psd(x, d)))
    }

    /// Removes the primal residual of `(dx, ds, dw)` by the correction
    /// `X A*(u) X`, which vanishes on the near-null space of `X`. Returns
    /// false if the scaled system cannot be factored.
    fn scaled_correction(
        &self,
        it: &Iterate,
        rp: &DVector<f64>,
        dx: &mut [DMatrix<f64>],
        ds: &mut DVector<f64>,
        dw: &mut DVector<f64>,
    ) -> bool {
        let mut metric = it.clone();
        metric.zs = it.s.map(|v| 1.0 / v);
        let mut mat = self.schur(&metric, &it.x) + &self.a_f * self.a_f.transpose();
        let floor = 1e-14 * mat.diagonal().amax().max(1e-300);
        for i in 0..self.m {
            mat[(i, i)] += floor;
        }
        let Some(chol) = Cholesky::new(mat) else {
            return false;
        };
        for _ in 0..6 {
            let e = rp - self.apply_a(dx, ds, dw);
            if e.amax() <= 1e-15 * rp.amax().max(1.0) {
                break;
            }
            let u = chol.solve(&e);
            for ((d, c), x) in dx.iter_mut().zip(self.adjoint(&u)).zip(&it.x) {
                *d += symmetrize(&(x * c * x));
            }
            *ds += self.a_s.tr_mul(&u).component_mul(&it.s).component_mul(&it.s);
            *dw += self.a_f.tr_mul(&u);
        }
        true
    }

    pub fn primal_step(&self, it: &Iterate, d: &Direction, frac: f64) -> f64 {
        let mut a = max_step_lp(&it.s, &d.ds);
        for (x, dx) in it.x.iter().zip(&d.dx) {
            a = a.min(max_step_psd(x, dx));
        }
        (frac * a).min(1.0)
    }

    pub fn dual_step(&self, it: &Iterate, d: &Direction, frac: f64) -> f64 {
        let mut a = max_step_lp(&it.zs, &d.dzs);
        for (z, dz) in it.z.iter().zip(&d.dz) {
            a = a.min(max_step_psd(z, dz));
        }
        (frac * a).min(1.0)
    }

    pub fn unscale(
        &self,
        it: &Iterate,
        status: SolveStatus,
        message: String,
        iterations: usize,
        residuals: Residuals,
    ) -> SdpSolution {
        let bs = self.b_scale;
        let cs = self.c_scale;
        let (p, d) = self.objectives(it);
        let k = bs * cs * self.sign;
        let to_sym = |m: &DMatrix<f64>, f: f64| SymMatrix::from_dense(&(m * f));
        SdpSolution {
            status,
            message,
            primal_obj: p * k,
            dual_obj: d * k,
            blocks: it.x.iter().map(|x| to_sym(x, bs)).collect(),
            dual_blocks: it.z.iter().map(|z| to_sym(z, cs)).collect(),
            nonneg: it.s.iter().map(|v| v * bs).collect(),
            free: it.w.iter().map(|v| v * bs).collect(),
            dual: it
                .y
                .iter()
                .zip(&self.row_scale)
                .map(|(y, r)| y * cs * self.sign / r)
                .collect(),
            iterations,
            residuals,
            solve_time_ms: 0.0,
        }
    }
}
