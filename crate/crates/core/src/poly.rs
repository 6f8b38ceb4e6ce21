//! Symbolic polynomials in the ladder operators of up to two modes,
//! kept in the canonical ordering `a^m a†^n b^mb b†^nb` (annihilation
//! powers left of creation powers per mode). Reordering uses
//! `a a† − a† a = 1` per mode; modes commute.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::fock::{ancilla_annihilation, annihilation, FockOperator};
use crate::Result;

/// Monomial key `(m_a, n_a, m_b, n_b)` meaning `a^{m_a} (a†)^{n_a} b^{m_b} (b†)^{n_b}`.
pub type Monomial = (u32, u32, u32, u32);

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Polynomial in `a, a†, b, b†` in canonical (annihilation-left) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalOrderedPoly {
    terms: BTreeMap<Monomial, C64>,
}

impl NormalOrderedPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial((0, 0, 0, 0), c)
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn monomial(key: Monomial, coeff: C64) -> Self {
        let mut terms = BTreeMap::new();
        if coeff != C64::new(0.0, 0.0) {
            terms.insert(key, coeff);
        }
        Self { terms }
    }

    /// The system annihilation operator `a`.
    pub fn a() -> Self {
        Self::monomial((1, 0, 0, 0), C64::new(1.0, 0.0))
    }

    /// The system creation operator `a†`.
    pub fn a_dag() -> Self {
        Self::monomial((0, 1, 0, 0), C64::new(1.0, 0.0))
    }

    /// The ancilla annihilation operator `b`.
    pub fn b() -> Self {
        Self::monomial((0, 0, 1, 0), C64::new(1.0, 0.0))
    }

    /// The ancilla creation operator `b†`.
    pub fn b_dag() -> Self {
        Self::monomial((0, 0, 0, 1), C64::new(1.0, 0.0))
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, C64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when any term touches the ancilla mode.
    pub fn uses_ancilla(&self) -> bool {
        self.terms
            .keys()
            .any(|&(_, _, mb, nb)| mb > 0 || nb > 0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|&(m, n, mb, nb)| m + n + mb + nb)
            .max()
            .unwrap_or(0)
    }

    fn insert(&mut self, key: Monomial, coeff: C64) {
        let entry = self.terms.entry(key).or_insert(C64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm() == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, &c) in &other.terms {
            out.insert(k, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        if c.norm() == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(&k, &v)| (k, v * c)).collect(),
        }
    }

    /// Adjoint: `(a^m a†^n)† = a^n a†^m` per mode, coefficients conjugated.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(&(m, n, mb, nb), &c)| ((n, m, nb, mb), c.conj()))
                .collect(),
        }
    }

    /// Non-commutative product, reordered back into canonical form with
    /// `a†^n a^m = Σ_k (−1)^k C(n,k) C(m,k) k! a^{m−k} a†^{n−k}`.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&(m1, n1, p1, q1), &c1) in &self.terms {
            for (&(m2, n2, p2, q2), &c2) in &other.terms {
                let c = c1 * c2;
                for k in 0..=n1.min(m2) {
                    let ca = neg_pow(k) * binomial(n1, k) * binomial(m2, k) * factorial(k);
                    for l in 0..=q1.min(p2) {
                        let cb = neg_pow(l) * binomial(q1, l) * binomial(p2, l) * factorial(l);
                        out.insert(
                            (m1 + m2 - k, n1 + n2 - k, p1 + p2 - l, q1 + q2 - l),
                            c * C64::new(ca * cb, 0.0),
                        );
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = out.multiply(self);
        }
        out
    }

    /// Coefficient-wise comparison in canonical form.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0_f64;
        let zero = C64::new(0.0, 0.0);
        for k in self.terms.keys().chain(other.terms.keys()) {
            let x = self.terms.get(k).copied().unwrap_or(zero);
            let y = other.terms.get(k).copied().unwrap_or(zero);
            m = m.max((x - y).norm());
        }
        m
    }

    /// Dense matrix realization on a truncated space. `dim_b == 0` is
    /// allowed only for polynomials that never touch the ancilla.
    pub fn materialize(&self, dim_a: usize, dim_b: usize) -> Result<FockOperator> {
        let a = if dim_b == 0 {
            annihilation(dim_a)?
        } else {
            crate::fock::extend_with_ancilla(&annihilation(dim_a)?, dim_b)?
        };
        let b = if dim_b == 0 {
            None
        } else {
            Some(ancilla_annihilation(dim_a, dim_b)?)
        };
        if dim_b == 0 && self.uses_ancilla() {
            return Err(crate::Error::InconsistentInputs(
                "polynomial touches the ancilla mode but dim_b == 0".into(),
            ));
        }
        let a_dag = a.adjoint();
        let mut out = FockOperator::zeros(dim_a, dim_b);
        for (&(m, n, mb, nb), &c) in &self.terms {
            let mut term = FockOperator::identity(dim_a, dim_b);
            for _ in 0..m {
                term = &term * &a;
            }
            for _ in 0..n {
                term = &term * &a_dag;
            }
            if let Some(b) = &b {
                let b_dag = b.adjoint();
                for _ in 0..mb {
                    term = &term * b;
                }
                for _ in 0..nb {
                    term = &term * &b_dag;
                }
            }
            out = &out + &term.scale(c);
        }
        Ok(out)
    }

    /// Exact closed-form expectation `Tr[(ρ_ζ ⊗ f₀f₀†) P]` on the displaced
    /// thermal state of mean photon number `n_bar` centered at `zeta`,
    /// computed term-by-term from the characteristic function; no
    /// truncation error.
    pub fn gaussian_expectation(&self, n_bar: f64, zeta: C64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (&(m, n, mb, nb), &c) in &self.terms {
            // Ancilla vacuum: <0| b^mb b†^nb |0> = δ_{mb,nb} mb!
            if mb != nb {
                continue;
            }
            let eb = factorial(mb);
            total += c * antinormal_moment(m, n, n_bar, zeta) * C64::new(eb, 0.0);
        }
        total
    }
}

fn neg_pow(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Tr[ρ_ζ a†^p a^q]` from the generating function
/// `exp(λζ̄ + λ̄ζ + N|λ|²)`: `Σ_j C(p,j) C(q,j) j! N^j ζ̄^{p−j} ζ^{q−j}`.
fn normal_moment(p: u32, q: u32, n_bar: f64, zeta: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for j in 0..=p.min(q) {
        let coeff = binomial(p, j) * binomial(q, j) * factorial(j) * n_bar.powi(j as i32);
        sum += C64::new(coeff, 0.0)
            * zeta.conj().powu(p - j)
            * zeta.powu(q - j);
    }
    sum
}

/// `Tr[ρ_ζ a^m a†^n]` via the antinormal→normal rewrite
/// `a^m a†^n = Σ_k C(m,k) C(n,k) k! a†^{n−k} a^{m−k}`.
fn antinormal_moment(m: u32, n: u32, n_bar: f64, zeta: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..=m.min(n) {
        let coeff = binomial(m, k) * binomial(n, k) * factorial(k);
        sum += C64::new(coeff, 0.0) * normal_moment(n - k, m - k, n_bar, zeta);
    }
    sum
}

impl fmt::Display for NormalOrderedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Sorted by total degree, then lexicographic key.
        let mut keys: Vec<&Monomial> = self.terms.keys().collect();
        keys.sort_by_key(|&&(m, n, mb, nb)| (m + n + mb + nb, (m, n, mb, nb)));
        for (i, &&key) in keys.iter().enumerate() {
            let (m, n, mb, nb) = key;
            let c = self.terms[&key];
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{:.12e}", c.re)?;
            } else {
                write!(f, "({:.12e}{:+.12e}i)", c.re, c.im)?;
            }
            for (sym, pow) in [("a", m), ("adag", n), ("b", mb), ("bdag", nb)] {
                if pow == 1 {
                    write!(f, "*{sym}")?;
                } else if pow > 1 {
                    write!(f, "*{sym}^{pow}")?;
                }
            }
        }
        Ok(())
    }
}
