//! Lattice fields: step functions on the `eps`-lattice, discrete difference
//! operators, inner products and the `eps`-dependent energy norm.
//!
//! Periodic fields hold `N` values with exact modular wraparound. Dirichlet
//! fields hold values on the sites `0..=N` and are zero-extended to the whole
//! line, so applying a stencil grows the stored support instead of clipping
//! it at the ends.

use crate::error::{Error, Result};
use crate::model::Boundary;

/// Uniform lattice of `sites` intervals on a domain of length `length`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    length: f64,
    sites: usize,
    boundary: Boundary,
}

impl Lattice {
    pub fn new(length: f64, sites: usize, boundary: Boundary) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("domain length must be positive, got {length}")));
        }
        let min = match boundary {
            Boundary::Periodic => 1,
            Boundary::Dirichlet => 2,
        };
        if sites < min {
            return Err(Error::Domain(format!("need at least {min} lattice intervals, got {sites}")));
        }
        Ok(Self { length, sites, boundary })
    }

    /// Lattice with mesh `eps`; `L / eps` must be an integer to 1e-12 relative.
    pub fn from_eps(length: f64, eps: f64, boundary: Boundary) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("mesh size must be positive, got {eps}")));
        }
        let n = (length / eps).round();
        if n < 1.0 || (n * eps - length).abs() > 1e-12 * length {
            return Err(Error::Config(format!("L / eps = {} is not an integer", length / eps)));
        }
        Self::new(length, n as usize, boundary)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of intervals `N`.
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn eps(&self) -> f64 {
        self.length / self.sites as f64
    }

    /// Number of stored values of a state field: `N` (periodic) or `N + 1` (Dirichlet).
    pub fn num_values(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.sites,
            Boundary::Dirichlet => self.sites + 1,
        }
    }

    pub fn x(&self, i: isize) -> f64 {
        i as f64 * self.eps()
    }

    /// Whether site `i` is held at zero for a model of gradient order `order`.
    pub fn is_frozen(&self, i: usize, order: usize) -> bool {
        match self.boundary {
            Boundary::Periodic => false,
            Boundary::Dirichlet => i < order || i + order > self.sites,
        }
    }

    /// Indices of the sites that carry dynamics.
    pub fn free_sites(&self, order: usize) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Periodic => 0..self.sites,
            Boundary::Dirichlet => order..(self.sites + 1).saturating_sub(order).max(order),
        }
    }

    pub fn refined(&self, ratio: usize) -> Result<Lattice> {
        Lattice::new(self.length, self.sites * ratio, self.boundary)
    }
}

/// Values of a left-continuous step function on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    lattice: Lattice,
    /// Lattice index of `values[0]`; always 0 for periodic fields.
    start: isize,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.num_values() {
            return Err(Error::Shape(format!(
                "expected {} values for a {} lattice with N = {}, got {}",
                lattice.num_values(),
                lattice.boundary,
                lattice.sites,
                values.len()
            )));
        }
        Ok(Self { lattice, start: 0, values })
    }

    pub fn zeros(lattice: Lattice) -> Self {
        Self { lattice, start: 0, values: vec![0.0; lattice.num_values()] }
    }

    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..lattice.num_values()).map(|i| f(lattice.x(i as isize))).collect();
        Self { lattice, start: 0, values }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn eps(&self) -> f64 {
        self.lattice.eps()
    }

    pub fn start(&self) -> isize {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at lattice index `i` (wrapped if periodic, zero outside the support otherwise).
    pub fn get(&self, i: isize) -> f64 {
        match self.lattice.boundary {
            Boundary::Periodic => {
                let n = self.lattice.sites as isize;
                self.values[i.rem_euclid(n) as usize]
            }
            Boundary::Dirichlet => {
                let k = i - self.start;
                if k < 0 || k as usize >= self.values.len() {
                    0.0
                } else {
                    self.values[k as usize]
                }
            }
        }
    }

    /// Stored index range `[start, end)`.
    pub fn support(&self) -> (isize, isize) {
        (self.start, self.start + self.values.len() as isize)
    }

    fn check_same_lattice(&self, other: &LatticeField) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::Shape(format!(
                "lattice mismatch: {:?} vs {:?}",
                self.lattice, other.lattice
            )));
        }
        Ok(())
    }

    /// Apply `op(get(i + offset))` style stencils over a support grown by `(left, right)`.
    fn stencil(&self, left: isize, right: isize, f: impl Fn(&Self, isize) -> f64) -> Self {
        match self.lattice.boundary {
            Boundary::Periodic => {
                let n = self.lattice.sites as isize;
                let values = (0..n).map(|i| f(self, i)).collect();
                Self { lattice: self.lattice, start: 0, values }
            }
            Boundary::Dirichlet => {
                let (a, b) = self.support();
                let (a, b) = (a - left, b + right);
                let values = (a..b).map(|i| f(self, i)).collect();
                Self { lattice: self.lattice, start: a, values }
            }
        }
    }

    /// `(D+ f)_i = (f_{i+1} - f_i) / eps`.
    pub fn dplus(&self) -> Self {
        let h = 1.0 / self.eps();
        self.stencil(1, 0, |f, i| (f.get(i + 1) - f.get(i)) * h)
    }

    /// `(D- f)_i = (f_i - f_{i-1}) / eps`.
    pub fn dminus(&self) -> Self {
        let h = 1.0 / self.eps();
        self.stencil(0, 1, |f, i| (f.get(i) - f.get(i - 1)) * h)
    }

    /// `(Lap f)_i = (f_{i+1} + f_{i-1} - 2 f_i) / eps^2`.
    pub fn laplacian(&self) -> Self {
        let h2 = 1.0 / (self.eps() * self.eps());
        self.stencil(1, 1, |f, i| (f.get(i + 1) + f.get(i - 1) - 2.0 * f.get(i)) * h2)
    }

    /// `D_eps^alpha`: `Lap^(alpha/2)` for even `alpha`, `D+ Lap^((alpha-1)/2)` for odd.
    pub fn dalpha(&self, alpha: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..alpha / 2 {
            out = out.laplacian();
        }
        if alpha % 2 == 1 {
            out = out.dplus();
        }
        out
    }

    /// Copy restricted to the sites `0..=N` (identity for periodic fields).
    pub fn restrict(&self) -> Self {
        match self.lattice.boundary {
            Boundary::Periodic => self.clone(),
            Boundary::Dirichlet => {
                let values = (0..self.lattice.num_values() as isize).map(|i| self.get(i)).collect();
                Self { lattice: self.lattice, start: 0, values }
            }
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_lattice(other)?;
        let (a0, b0) = self.support();
        let (a1, b1) = other.support();
        let (a, b) = (a0.min(a1), b0.max(b1));
        let values = (a..b).map(|i| f(self.get(i), other.get(i))).collect();
        Ok(Self { lattice: self.lattice, start: a, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { lattice: self.lattice, start: self.start, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sum of `eps * f_i^2` over lattice indices restricted to `[lo, hi)`.
    pub fn norm_sq_on(&self, lo: isize, hi: isize) -> f64 {
        let (a, b) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        self.eps() * (a..b).map(|i| self.get(i).powi(2)).sum::<f64>()
    }

    pub fn norm_sq(&self) -> f64 {
        self.eps() * self.values.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Lattice Riemann sum `eps * sum_i f_i g_i`.
pub fn inner(f: &LatticeField, g: &LatticeField) -> Result<f64> {
    f.check_same_lattice(g)?;
    let eps = f.eps();
    match f.lattice.boundary {
        Boundary::Periodic => Ok(eps * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>()),
        Boundary::Dirichlet => {
            let (a0, b0) = f.support();
            let (a1, b1) = g.support();
            let (a, b) = (a0.max(a1), b0.min(b1));
            Ok(eps * (a..b).map(|i| f.get(i) * g.get(i)).sum::<f64>())
        }
    }
}

/// Squared `eps`-norm: `||v||^2 + ||u||^2 + sum_{k=1..n} ||D_eps^k u||^2`.
pub fn eps_norm_sq(u: &LatticeField, v: &LatticeField, order: usize) -> Result<f64> {
    u.check_same_lattice(v)?;
    let mut acc = v.norm_sq() + u.norm_sq();
    for k in 1..=order {
        acc += u.dalpha(k).norm_sq();
    }
    Ok(acc)
}

pub fn eps_norm(u: &LatticeField, v: &LatticeField, order: usize) -> Result<f64> {
    eps_norm_sq(u, v, order).map(f64::sqrt)
}

/// Tolerance for nonzero analytic data at the clamped end points.
pub const CLAMP_TOL: f64 = 1e-10;

/// Sample `g` at the lattice points `i eps`. For Dirichlet lattices the
/// frozen sites of a model of gradient order `order` are forced to zero; `g`
/// must itself vanish at both end points.
pub fn sample(g: impl Fn(f64) -> f64, lattice: Lattice, order: usize) -> Result<LatticeField> {
    let mut field = LatticeField::from_fn(lattice, &g);
    if lattice.boundary == Boundary::Dirichlet {
        let (left, right) = (g(0.0), g(lattice.length));
        if left.abs() > CLAMP_TOL || right.abs() > CLAMP_TOL {
            return Err(Error::Consistency(format!(
                "clamped data must vanish at the ends: g(0) = {left}, g(L) = {right}"
            )));
        }
        for (i, v) in field.values.iter_mut().enumerate() {
            if lattice.is_frozen(i, order) {
                *v = 0.0;
            }
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn per(n: usize, l: f64) -> Lattice {
        Lattice::new(l, n, Boundary::Periodic).unwrap()
    }

    fn random_field(lat: Lattice, rng: &mut ChaCha8Rng) -> LatticeField {
        let v = (0..lat.num_values()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        LatticeField::new(lat, v).unwrap()
    }

    #[test]
    fn dplus_small_example() {
        let f = LatticeField::new(per(4, 4.0), vec![0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(f.dplus().values(), &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(f.dminus().values(), &[1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let f = LatticeField::from_fn(per(16, 3.0), |_| 2.5);
        assert!(f.dplus().max_abs() == 0.0);
        assert!(f.laplacian().max_abs() == 0.0);
    }

    #[test]
    fn dplus_first_order_accurate() {
        let l = 2.0 * PI;
        let lat = per(256, l);
        let f = LatticeField::from_fn(lat, |x| (2.0 * PI * x / l).sin());
        let d = f.dplus();
        let k = 2.0 * PI / l;
        let err = (0..256)
            .map(|i| (d.get(i) - k * (k * lat.x(i)).cos()).abs())
            .fold(0.0, f64::max);
        // Taylor remainder: eps/2 * max|u''|.
        assert!(err <= 0.5 * lat.eps() * k * k * 1.0001, "{err}");
    }

    #[test]
    fn laplacian_examples() {
        let f = LatticeField::new(per(4, 4.0), vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(f.laplacian().values(), &[-4.0, 4.0, -4.0, 4.0]);

        let lat = Lattice::new(10.0, 10, Boundary::Dirichlet).unwrap();
        let f = LatticeField::from_fn(lat, |x| 3.0 * x - 1.0);
        let lap = f.laplacian();
        for i in 1..10 {
            assert!(lap.get(i).abs() < 1e-12);
        }
        // Overhang beyond the ends sees the zero extension.
        assert_eq!(lap.support(), (-1, 12));
    }

    #[test]
    fn laplacian_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let f = random_field(per(17, 2.0), &mut rng);
            let a = f.dplus().dminus();
            let b = f.dminus().dplus();
            let c = f.laplacian();
            for i in 0..17 {
                assert!((a.get(i) - c.get(i)).abs() <= 1e-12 * c.max_abs().max(1.0));
                assert!((b.get(i) - c.get(i)).abs() <= 1e-12 * c.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn dalpha_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_field(per(12, 1.0), &mut rng);
        assert_eq!(f.dalpha(0), f);
        assert_eq!(f.dalpha(2), f.laplacian());
        assert_eq!(f.dalpha(3), f.laplacian().dplus());

        let l = 2.0 * PI;
        let k = 2.0;
        let lat = per(512, l);
        let f = LatticeField::from_fn(lat, |x| (k * x).sin());
        let d3 = f.dalpha(3);
        let err = (0..512)
            .map(|i| (d3.get(i) + k.powi(3) * (k * lat.x(i)).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2.0 * k.powi(4) * lat.eps(), "{err}");
    }

    #[test]
    fn sampling() {
        let lat = per(4, 2.0 * PI);
        let f = sample(|x| x.sin(), lat, 1).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0];
        for (a, b) in f.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = sample(|_| 1.7, lat, 1).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.7));

        let d = Lattice::new(1.0, 8, Boundary::Dirichlet).unwrap();
        let f = sample(|x: f64| (x * (1.0 - x)).powi(2), d, 2).unwrap();
        for i in [0, 1, 7, 8] {
            assert_eq!(f.values()[i], 0.0);
        }
        assert!(f.values()[2] > 0.0);
        assert!(matches!(sample(|x: f64| x.cos(), d, 2), Err(Error::Consistency(_))));
    }

    #[test]
    fn inner_products_and_norm() {
        let l = 2.0 * PI;
        let one = LatticeField::from_fn(per(64, l), |_| 1.0);
        assert!((inner(&one, &one).unwrap() - l).abs() < 1e-12);
        let s = LatticeField::from_fn(per(256, l), |x| x.sin());
        assert!((inner(&s, &s).unwrap() - PI).abs() < 1e-3);
        let z = LatticeField::zeros(per(8, l));
        assert_eq!(eps_norm(&z, &z, 3).unwrap(), 0.0);
        let other = LatticeField::zeros(per(9, l));
        assert!(matches!(inner(&z, &other), Err(Error::Shape(_))));
    }

    #[test]
    fn from_eps_checks_integrality() {
        assert_eq!(Lattice::from_eps(1.0, 0.125, Boundary::Periodic).unwrap().sites(), 8);
        assert!(Lattice::from_eps(1.0, 0.3, Boundary::Periodic).is_err());
        assert!(Lattice::new(1.0, 1, Boundary::Dirichlet).is_err());
    }

    #[test]
    fn frozen_sites() {
        let d = Lattice::new(1.0, 10, Boundary::Dirichlet).unwrap();
        let frozen: Vec<usize> = (0..=10).filter(|&i| d.is_frozen(i, 2)).collect();
        assert_eq!(frozen, vec![0, 1, 9, 10]);
        assert_eq!(d.free_sites(2), 2..9);
        let frozen3: Vec<usize> = (0..=10).filter(|&i| d.is_frozen(i, 3)).collect();
        assert_eq!(frozen3, vec![0, 1, 2, 8, 9, 10]);
    }
}
