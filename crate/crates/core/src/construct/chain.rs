//! The constant chain of the construction, evaluated either numerically or
//! as orders `ε^e` as `ε → 0`.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Scalar domain for [`constant_chain`].
pub trait ChainValue: Clone {
    type Exp: Clone;
    fn constant(c: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn max(&self, o: &Self) -> Self;
    fn min(&self, o: &Self) -> Self;
    fn sqrt(&self) -> Self;
    fn pow(&self, e: &Self::Exp) -> Self;
    fn ceil(&self) -> Self;
}

impl ChainValue for f64 {
    type Exp = f64;
    fn constant(c: f64) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn max(&self, o: &Self) -> Self {
        f64::max(*self, *o)
    }
    fn min(&self, o: &Self) -> Self {
        f64::min(*self, *o)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn pow(&self, e: &f64) -> Self {
        self.powf(*e)
    }
    fn ceil(&self) -> Self {
        f64::ceil(*self)
    }
}

/// Order `ε^e` of a positive quantity as `ε → 0`: smaller `e` dominates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsOrder(pub Ratio<i64>);

impl EpsOrder {
    pub fn eps() -> Self {
        EpsOrder(Ratio::from_integer(1))
    }
}

impl ChainValue for EpsOrder {
    type Exp = Ratio<i64>;
    fn constant(_: f64) -> Self {
        EpsOrder(Ratio::from_integer(0))
    }
    fn add(&self, o: &Self) -> Self {
        EpsOrder(self.0.min(o.0))
    }
    fn mul(&self, o: &Self) -> Self {
        EpsOrder(self.0 + o.0)
    }
    fn div(&self, o: &Self) -> Self {
        EpsOrder(self.0 - o.0)
    }
    fn max(&self, o: &Self) -> Self {
        EpsOrder(self.0.min(o.0))
    }
    fn min(&self, o: &Self) -> Self {
        EpsOrder(self.0.max(o.0))
    }
    fn sqrt(&self) -> Self {
        EpsOrder(self.0 / 2)
    }
    fn pow(&self, e: &Ratio<i64>) -> Self {
        EpsOrder(self.0 * e)
    }
    fn ceil(&self) -> Self {
        // ⌈v⌉ of a vanishing quantity tends to 1.
        EpsOrder(self.0.min(Ratio::from_integer(0)))
    }
}

impl fmt::Display for EpsOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Inputs of the chain for one constraint (`m = 1`).
#[derive(Debug, Clone)]
pub struct ChainInputs<T: ChainValue> {
    pub eps: T,
    pub c_f: T,
    pub l_f: T,
    pub c_g: T,
    pub l_g: T,
    /// `f(ā)` and `g(ā)` at the interior point `ā` with `g(ā) > 0`.
    pub f_a: T,
    pub g_a: T,
    pub alpha: T::Exp,
    pub loja_c: T,
    pub n: usize,
    pub d_f: u32,
    pub d_g: u32,
}

/// Every constant of the construction, in the order they are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantChain<T> {
    pub delta: T,
    pub c_psi: T,
    pub c_phi: T,
    pub w: T,
    pub l_sqrt_xi: T,
    pub l_phi_bar: T,
    pub c_phi_bar: T,
    pub u: T,
    pub d: T,
    pub c_big_f: T,
    pub big_d: T,
    pub theta: T,
    pub k_bar: T,
}

impl<T: Clone> ConstantChain<T> {
    /// `(name, value)` pairs in derivation order, without `theta`.
    pub fn named(&self) -> Vec<(&'static str, T)> {
        vec![
            ("delta", self.delta.clone()),
            ("C_psi", self.c_psi.clone()),
            ("C_phi", self.c_phi.clone()),
            ("w", self.w.clone()),
            ("L_sqrt_xi", self.l_sqrt_xi.clone()),
            ("L_phi_bar", self.l_phi_bar.clone()),
            ("C_phi_bar", self.c_phi_bar.clone()),
            ("u", self.u.clone()),
            ("d", self.d.clone()),
            ("C_F", self.c_big_f.clone()),
            ("D", self.big_d.clone()),
            ("K_bar", self.k_bar.clone()),
        ]
    }
}

/// Number of constraints handled by the construction.
pub const M_CONSTRAINTS: u32 = 1;

/// Propagates the constants from the Łojasiewicz radius `δ` to the Reznick
/// order `K̄`.
pub fn constant_chain<T: ChainValue>(inp: &ChainInputs<T>) -> ConstantChain<T> {
    let k = |c: f64| T::constant(c);
    let m = M_CONSTRAINTS as f64;
    let weight = k((m + 1.0) * 2f64.powi(M_CONSTRAINTS as i32));
    let eps = &inp.eps;

    let delta = inp.eps.div(&k(2.0).mul(&inp.l_f)).pow(&inp.alpha).div(&inp.loja_c);
    let ratio_a = inp.f_a.add(&eps.div(&k(2.0))).div(&inp.g_a);
    let c_psi = ratio_a.max(
        &inp.loja_c
            .mul(&inp.c_f)
            .mul(&k(2.0).mul(&inp.l_f).div(eps).pow(&inp.alpha)),
    );
    let c_phi = c_psi.sqrt();

    let bracket = inp.l_f.mul(&inp.c_g).add(&inp.c_f.add(&eps.div(&k(2.0))).mul(&inp.l_g));
    let w = k(1.0)
        .min(&delta.div(&k(2.0).mul(&inp.l_g)))
        .min(&eps.mul(&delta).mul(&delta).div(&k(8.0).mul(&inp.c_g).mul(&bracket)));
    let l_sqrt_xi = k(2.0)
        .mul(&bracket)
        .div(&delta.mul(&delta).mul(&eps.div(&k(4.0).mul(&inp.c_g)).sqrt()));
    let l_phi_bar = k(4.0).mul(&c_phi).div(&w).max(&l_sqrt_xi);
    let radius = (inp.n as f64).sqrt() + m;
    let c_phi_bar = c_phi.add(&k(2.0 * radius - 1.0).mul(&l_phi_bar));

    let u = k(2.0 * inp.n as f64 * (m + 1.0).powi(2) * 4f64.powi(M_CONSTRAINTS as i32))
        .mul(&inp.c_g)
        .mul(&inp.c_g)
        .mul(&c_phi_bar)
        .mul(&c_phi_bar)
        .mul(&l_phi_bar)
        .mul(&l_phi_bar)
        .div(&eps.mul(eps))
        .ceil();
    let d = k(2.0).mul(&u);
    let c_big_f = inp.c_f.add(eps).add(&c_phi_bar.mul(&c_phi_bar).mul(&inp.c_g));
    let big_d = k(2.0 * inp.n as f64)
        .mul(&u)
        .add(&k(inp.d_g as f64))
        .max(&k(inp.d_f as f64));
    let theta = c_big_f.mul(&weight).div(eps);
    let two_d_minus_one = k(2.0).mul(&big_d).add(&k(-1.0));
    let k_bar = k(2.0 * inp.n as f64 / (4.0 * std::f64::consts::LN_2))
        .mul(&big_d)
        .mul(&two_d_minus_one)
        .mul(&theta);

    ConstantChain {
        delta,
        c_psi,
        c_phi,
        w,
        l_sqrt_xi,
        l_phi_bar,
        c_phi_bar,
        u,
        d,
        c_big_f,
        big_d,
        theta,
        k_bar,
    }
}

/// One entry `ε^{numer/denom}` of an exponent table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentEntry {
    pub name: String,
    pub numer: i64,
    pub denom: i64,
}

impl ExponentEntry {
    pub fn exponent(&self) -> Ratio<i64> {
        Ratio::new(self.numer, self.denom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentChain {
    pub entries: Vec<ExponentEntry>,
    /// `K̄ ∼ ε^{−c}`.
    pub c: i64,
}

impl ExponentChain {
    pub fn get(&self, name: &str) -> Option<Ratio<i64>> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(ExponentEntry::exponent)
    }
}

/// Orders in `ε` of every constant for the ice-cream constraint
/// (`α = 2`), obtained by running [`constant_chain`] over [`EpsOrder`].
pub fn rate_exponent_icecream() -> ExponentChain {
    let zero = EpsOrder::constant(0.0);
    let inp = ChainInputs {
        eps: EpsOrder::eps(),
        c_f: zero,
        l_f: zero,
        c_g: zero,
        l_g: zero,
        f_a: zero,
        g_a: zero,
        alpha: Ratio::from_integer(2),
        loja_c: zero,
        n: 2,
        d_f: 1,
        d_g: 1,
    };
    let chain = constant_chain(&inp);
    let entries = chain
        .named()
        .into_iter()
        .map(|(name, e)| ExponentEntry {
            name: name.to_string(),
            numer: *e.0.numer(),
            denom: *e.0.denom(),
        })
        .collect();
    let c = (-chain.k_bar.0).ceil().to_integer();
    ExponentChain { entries, c }
}
