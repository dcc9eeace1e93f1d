//! Spring-network synthesis.
//!
//! Powers of the discrete Laplacian are rewritten as sums of pairwise
//! differences, `(Lap^p u)_i = sum_j K^p_ij (u_j - u_i)`, with `K^p` built by
//! recursion from the three-point stencil. A linear force
//! `-sum (-1)^a A_a Lap^a u` then becomes a network of two-body springs of range
//! at most `n` plus an on-site grounding spring for the `A_0` term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeField};
use crate::model::Boundary;

/// Pair coefficients `K^p` of the `p`-th Laplacian power, stored as a
/// translation-invariant row over offsets `-p..=p`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianPower {
    order: usize,
    row: Vec<f64>,
}

impl LaplacianPower {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `K^p` at offset `j - i`; zero beyond the range `p`.
    pub fn at(&self, offset: isize) -> f64 {
        let p = self.order as isize;
        if offset.abs() > p {
            0.0
        } else {
            self.row[(offset + p) as usize]
        }
    }

    /// `sum_j K^p_ij (u_j - u_i)` on the lattice of `u`.
    pub fn apply(&self, u: &LatticeField) -> LatticeField {
        let p = self.order as isize;
        let lat = *u.lattice();
        let values = (0..lat.num_values() as isize)
            .map(|i| {
                let ui = u.get(i);
                (-p..=p).map(|d| self.at(d) * (u.get(i + d) - ui)).sum()
            })
            .collect();
        LatticeField::new(lat, values).expect("sized to the lattice")
    }
}

/// Pair coefficients `K^p` for `1 <= p <= design_order`.
///
/// `K^1` is the three-point stencil `eps^-2` at offsets `+-1`; each further
/// power follows
/// `K^l_ij = eps^-2 [K_{i,j-1} + K_{i,j+1} - 2 K_ij - (d_{i+1,j} + d_{i-1,j}) sum_j' K_ij']`
/// with the diagonal reset to zero, since it multiplies `u_i - u_i`.
pub fn laplacian_power_coeffs(p: usize, lattice: &Lattice, design_order: usize) -> Result<LaplacianPower> {
    if p == 0 {
        return Err(Error::Domain("Laplacian power must be at least 1".into()));
    }
    if p > design_order {
        return Err(Error::Domain(format!(
            "Laplacian power {p} exceeds the design order {design_order}"
        )));
    }
    let e = 1.0 / (lattice.eps() * lattice.eps());
    let mut row = vec![e, 0.0, e];
    for l in 2..=p {
        let prev = |d: isize| -> f64 {
            let w = (l - 1) as isize;
            if d.abs() > w {
                0.0
            } else {
                row[(d + w) as usize]
            }
        };
        let total: f64 = row.iter().sum();
        let w = l as isize;
        let next: Vec<f64> = (-w..=w)
            .map(|d| {
                if d == 0 {
                    return 0.0;
                }
                let mut k = prev(d - 1) + prev(d + 1) - 2.0 * prev(d);
                if d.abs() == 1 {
                    k -= total;
                }
                e * k
            })
            .collect();
        row = next;
    }
    Ok(LaplacianPower { order: p, row })
}

/// Direct operator form of the linear force, `-sum_a (-1)^a A_a Lap^a u`,
/// evaluated by repeated stencil application. Frozen Dirichlet sites get zero.
pub fn operator_force(coefficients: &[f64], u: &LatticeField) -> LatticeField {
    let order = coefficients.len().saturating_sub(1);
    let lat = *u.lattice();
    let mut acc = vec![0.0; lat.num_values()];
    let mut power = u.clone();
    for (a, &coef) in coefficients.iter().enumerate() {
        if a > 0 {
            power = power.laplacian();
        }
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot -= sign * coef * power.get(i as isize);
        }
    }
    for (i, slot) in acc.iter_mut().enumerate() {
        if lat.is_frozen(i, order) {
            *slot = 0.0;
        }
    }
    LatticeField::new(lat, acc).expect("sized to the lattice")
}

/// Banded table of pair stiffnesses `k_ij` plus a grounding spring.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessNetwork {
    lattice: Lattice,
    coefficients: Vec<f64>,
    width: usize,
    /// Row-major, `2 width + 1` entries per site: `table[i][width + d] = k_{i, i+d}`.
    table: Vec<f64>,
    grounding: f64,
}

impl StiffnessNetwork {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Design order `n`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn grounding(&self) -> f64 {
        self.grounding
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn stride(&self) -> usize {
        2 * self.width + 1
    }

    fn offset(&self, i: usize, j: usize) -> Option<isize> {
        let d = j as isize - i as isize;
        let d = match self.lattice.boundary() {
            Boundary::Periodic => {
                let n = self.lattice.sites() as isize;
                let r = d.rem_euclid(n);
                if r > n / 2 {
                    r - n
                } else {
                    r
                }
            }
            Boundary::Dirichlet => d,
        };
        (d.unsigned_abs() <= self.width).then_some(d)
    }

    /// `k_ij` for lattice sites `i`, `j`.
    pub fn k(&self, i: usize, j: usize) -> f64 {
        match self.offset(i, j) {
            Some(d) if i < self.lattice.num_values() => {
                self.table[i * self.stride() + (d + self.width as isize) as usize]
            }
            _ => 0.0,
        }
    }

    /// `k_{i, i+d}` including partners outside `[0, N]` for Dirichlet lattices.
    pub fn k_offset(&self, i: usize, d: isize) -> f64 {
        if d.unsigned_abs() > self.width {
            return 0.0;
        }
        self.table[i * self.stride() + (d + self.width as isize) as usize]
    }

    /// Overwrite a single directed entry `k_ij` (leaves `k_ji` untouched).
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let d = self
            .offset(i, j)
            .ok_or_else(|| Error::Domain(format!("sites {i} and {j} are outside the band")))?;
        let idx = i * self.stride() + (d + self.width as isize) as usize;
        self.table[idx] = value;
        Ok(())
    }

    /// Translation-invariant band `k(d)` for `d = 1..=n`, read off an interior row.
    pub fn band(&self) -> Vec<f64> {
        let row = self.lattice.free_sites(self.order()).start;
        (1..=self.width as isize).map(|d| self.k_offset(row, d)).collect()
    }
}

/// Assemble the network realizing `-sum (-1)^a A_a Lap^a u`:
/// `k_ij = -sum_{p>=1} (-1)^p A_p K^p_ij` and grounding `g = A_0`.
pub fn assemble_stiffness(coefficients: &[f64], lattice: &Lattice) -> Result<StiffnessNetwork> {
    if coefficients.len() < 2 {
        return Err(Error::Validation("need coefficients A_0..A_n with n >= 1".into()));
    }
    if coefficients.iter().any(|a| !a.is_finite()) {
        return Err(Error::Validation("non-finite coefficient".into()));
    }
    let n = coefficients.len() - 1;
    if coefficients[n] == 0.0 {
        return Err(Error::Validation("A_n = 0".into()));
    }
    if coefficients[0] < 0.0 {
        return Err(Error::Validation(format!("grounding stiffness A_0 = {} is negative", coefficients[0])));
    }
    if lattice.boundary() == Boundary::Periodic && lattice.sites() <= 2 * n {
        return Err(Error::Domain(format!(
            "periodic network of range {n} needs N > {}, got N = {}",
            2 * n,
            lattice.sites()
        )));
    }
    let mut band = vec![0.0; 2 * n + 1];
    for (p, &a) in coefficients.iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        let kp = laplacian_power_coeffs(p, lattice, n)?;
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        for d in -(n as isize)..=(n as isize) {
            band[(d + n as isize) as usize] -= sign * a * kp.at(d);
        }
    }
    band[n] = 0.0;
    let rows = lattice.num_values();
    let mut table = Vec::with_capacity(rows * band.len());
    for _ in 0..rows {
        table.extend_from_slice(&band);
    }
    Ok(StiffnessNetwork {
        lattice: *lattice,
        coefficients: coefficients.to_vec(),
        width: n,
        table,
        grounding: coefficients[0],
    })
}

fn check_lattice(net: &StiffnessNetwork, u: &LatticeField) -> Result<()> {
    if net.lattice != *u.lattice() || u.start() != 0 {
        return Err(Error::Shape(format!(
            "field lattice {:?} does not match network lattice {:?}",
            u.lattice(),
            net.lattice
        )));
    }
    Ok(())
}

/// Copy of `u` padded by `w` ghost values on each side (wrapped or zero).
fn padded(u: &LatticeField, w: usize) -> Vec<f64> {
    let m = u.values().len();
    let mut ext = vec![0.0; m + 2 * w];
    for (k, slot) in ext.iter_mut().enumerate() {
        *slot = u.get(k as isize - w as isize);
    }
    debug_assert_eq!(ext.len(), m + 2 * w);
    ext
}

/// `F_i = sum_j k_ij (u_j - u_i) - g u_i`; frozen Dirichlet sites get zero.
pub fn force_from_network(net: &StiffnessNetwork, u: &LatticeField) -> Result<LatticeField> {
    check_lattice(net, u)?;
    let w = net.width;
    let stride = net.stride();
    let ext = padded(u, w);
    let n = net.order();
    let mut out = vec![0.0; u.values().len()];
    for (i, slot) in out.iter_mut().enumerate() {
        if net.lattice.is_frozen(i, n) {
            continue;
        }
        let row = &net.table[i * stride..(i + 1) * stride];
        let window = &ext[i..i + stride];
        let ui = window[w];
        let mut f = -net.grounding * ui;
        for (k, x) in row.iter().zip(window) {
            f += k * (x - ui);
        }
        *slot = f;
    }
    LatticeField::new(net.lattice, out)
}

/// Spring energy `U = eps/4 sum_ij k_ij (u_i - u_j)^2 + eps g / 2 sum u_i^2`,
/// normalized so that `F = -(1/eps) grad U`. For Dirichlet lattices, springs to
/// the zero extension beyond `[0, N]` are counted once.
pub fn network_energy(net: &StiffnessNetwork, u: &LatticeField) -> Result<f64> {
    check_lattice(net, u)?;
    let eps = net.lattice.eps();
    let w = net.width as isize;
    let rows = u.values().len() as isize;
    let mut acc = 0.0;
    for i in 0..rows {
        let ui = u.get(i);
        for d in -w..=w {
            if d == 0 {
                continue;
            }
            let j = i + d;
            let k = net.k_offset(i as usize, d);
            let diff2 = (ui - u.get(j)).powi(2);
            let inside = net.lattice.boundary() == Boundary::Periodic || (0..rows).contains(&j);
            acc += if inside { 0.25 * k * diff2 } else { 0.5 * k * diff2 };
        }
        acc += 0.5 * net.grounding * ui * ui;
    }
    Ok(eps * acc)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NegativeSpring {
    pub offset: usize,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizabilityReport {
    pub passed: bool,
    pub band_ok: bool,
    pub symmetric: bool,
    pub translation_invariant: bool,
    pub grounding_ok: bool,
    /// Largest relative deviation between network and operator forces.
    pub force_residual: f64,
    pub negative_springs: Vec<NegativeSpring>,
    pub normalization: String,
    pub issues: Vec<String>,
}

/// Tolerance for the force-equivalence residual.
pub const FORCE_RESIDUAL_TOL: f64 = 1e-10;

/// Structural and force-equivalence checks of a network.
pub fn verify_realizability(net: &StiffnessNetwork) -> RealizabilityReport {
    let mut issues = Vec::new();
    let rows = net.lattice.num_values();
    let n = net.order();
    let w = net.width as isize;

    let mut band_ok = true;
    for i in 0..rows {
        for d in -w..=w {
            if d.unsigned_abs() > n && net.k_offset(i, d) != 0.0 {
                band_ok = false;
                issues.push(format!("k[{i}][{}] = {} beyond range {n}", i as isize + d, net.k_offset(i, d)));
            }
        }
    }

    let mut symmetric = true;
    for i in 0..rows {
        for d in -w..=w {
            let j = i as isize + d;
            let j = match net.lattice.boundary() {
                Boundary::Periodic => j.rem_euclid(rows as isize),
                Boundary::Dirichlet => j,
            };
            if j < 0 || j as usize >= rows {
                continue;
            }
            let (a, b) = (net.k(i, j as usize), net.k(j as usize, i));
            if a != b {
                symmetric = false;
                issues.push(format!("k[{i}][{j}] = {a} but k[{j}][{i}] = {b}"));
            }
        }
    }

    let free = net.lattice.free_sites(n);
    let reference = free.start;
    let mut translation_invariant = true;
    for i in free {
        if (-w..=w).any(|d| net.k_offset(i, d) != net.k_offset(reference, d)) {
            translation_invariant = false;
            issues.push(format!("row {i} differs from row {reference}"));
        }
    }

    let grounding_ok = net.grounding >= 0.0 && net.grounding.is_finite();
    if !grounding_ok {
        issues.push(format!("grounding stiffness {} is negative", net.grounding));
    }

    let negative_springs = (1..=n)
        .filter_map(|d| {
            let k = net.k_offset(reference, d as isize);
            (k < 0.0).then_some(NegativeSpring { offset: d, k })
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut force_residual = 0.0_f64;
    for _ in 0..16 {
        let mut u = LatticeField::from_fn(net.lattice, |_| rng.gen_range(-1.0..1.0));
        for (i, v) in u.values_mut().iter_mut().enumerate() {
            if net.lattice.is_frozen(i, n) {
                *v = 0.0;
            }
        }
        let direct = operator_force(&net.coefficients, &u);
        match force_from_network(net, &u) {
            Ok(f) => {
                let scale = direct.max_abs().max(f64::MIN_POSITIVE);
                let diff = f.sub(&direct).map(|d| d.max_abs()).unwrap_or(f64::INFINITY);
                force_residual = force_residual.max(diff / scale);
            }
            Err(e) => {
                issues.push(e.to_string());
                force_residual = f64::INFINITY;
            }
        }
    }
    if force_residual > FORCE_RESIDUAL_TOL {
        issues.push(format!("force residual {force_residual:.3e} exceeds {FORCE_RESIDUAL_TOL:e}"));
    }

    RealizabilityReport {
        passed: band_ok && symmetric && translation_invariant && grounding_ok && force_residual <= FORCE_RESIDUAL_TOL,
        band_ok,
        symmetric,
        translation_invariant,
        grounding_ok,
        force_residual,
        negative_springs,
        normalization: "k_ij = -sum_{p>=1} (-1)^p A_p K^p_ij, grounding g = A_0, U = eps/4 sum_ij k_ij (u_i - u_j)^2 + eps g/2 sum u_i^2".into(),
        issues,
    }
}

/// One line of the exported netlist. Grounding springs appear as `(i, i, g_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetlistRow {
    pub i: usize,
    pub j: usize,
    pub k: f64,
}

/// Springs of the network, one row per unordered pair. On Dirichlet lattices
/// only free sites appear: springs to frozen sites act as extra grounding.
pub fn netlist(net: &StiffnessNetwork) -> Vec<NetlistRow> {
    let n = net.order();
    let w = net.width;
    let mut rows = Vec::new();
    match net.lattice.boundary() {
        Boundary::Periodic => {
            let sites = net.lattice.sites();
            for i in 0..sites {
                for d in 1..=w {
                    let j = (i + d) % sites;
                    let k = net.k(i, j);
                    if k != 0.0 {
                        rows.push(NetlistRow { i, j, k });
                    }
                }
            }
            if net.grounding != 0.0 {
                rows.extend((0..sites).map(|i| NetlistRow { i, j: i, k: net.grounding }));
            }
        }
        Boundary::Dirichlet => {
            let free = net.lattice.free_sites(n);
            for i in free.clone() {
                for d in 1..=w {
                    let j = i + d;
                    if free.contains(&j) {
                        let k = net.k(i, j);
                        if k != 0.0 {
                            rows.push(NetlistRow { i, j, k });
                        }
                    }
                }
            }
            for i in free.clone() {
                let anchored: f64 = (-(w as isize)..=w as isize)
                    .filter(|&d| d != 0)
                    .filter(|&d| {
                        let j = i as isize + d;
                        j < 0 || !free.contains(&(j as usize))
                    })
                    .map(|d| net.k_offset(i, d))
                    .sum();
                let g = net.grounding + anchored;
                if g != 0.0 {
                    rows.push(NetlistRow { i, j: i, k: g });
                }
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn per(n: usize, l: f64) -> Lattice {
        Lattice::new(l, n, Boundary::Periodic).unwrap()
    }

    fn random_field(lat: Lattice, rng: &mut ChaCha8Rng) -> LatticeField {
        LatticeField::from_fn(lat, |_| rng.gen_range(-1.0..1.0))
    }

    /// Read `K^p` off by applying the Laplacian `p` times to a unit impulse.
    fn impulse_stencil(p: usize, lat: Lattice) -> Vec<f64> {
        let mut e0 = vec![0.0; lat.num_values()];
        e0[0] = 1.0;
        let mut f = LatticeField::new(lat, e0).unwrap();
        for _ in 0..p {
            f = f.laplacian();
        }
        f.into_values()
    }

    #[test]
    fn first_power_is_three_point() {
        let lat = per(16, 2.0);
        let k1 = laplacian_power_coeffs(1, &lat, 2).unwrap();
        let e = 1.0 / lat.eps().powi(2);
        assert_eq!((k1.at(-1), k1.at(0), k1.at(1), k1.at(2)), (e, 0.0, e, 0.0));
    }

    #[test]
    fn second_power_matches_impulse_oracle() {
        let lat = per(16, 2.0);
        let k2 = laplacian_power_coeffs(2, &lat, 2).unwrap();
        let e4 = lat.eps().powi(-4);
        let stencil = impulse_stencil(2, lat);
        // Off-diagonal stencil entries of Lap^2 are exactly the pair coefficients.
        assert!((stencil[1] - k2.at(1)).abs() < 1e-9 * e4);
        assert!((stencil[2] - k2.at(2)).abs() < 1e-9 * e4);
        assert!((k2.at(1) + 4.0 * e4).abs() < 1e-9 * e4);
        assert!((k2.at(2) - e4).abs() < 1e-9 * e4);
        assert_eq!(k2.at(3), 0.0);
        assert_eq!(k2.at(-3), 0.0);
    }

    #[test]
    fn power_range_checks() {
        let lat = per(16, 2.0);
        assert!(laplacian_power_coeffs(0, &lat, 2).is_err());
        assert!(laplacian_power_coeffs(3, &lat, 2).is_err());
        let k4 = laplacian_power_coeffs(4, &lat, 4).unwrap();
        for d in 1..=4 {
            assert_eq!(k4.at(d), k4.at(-d));
        }
        assert_eq!(k4.at(5), 0.0);
    }

    #[test]
    fn recursion_reproduces_power_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=4 {
            let lat = per(40, 3.0);
            let kp = laplacian_power_coeffs(p, &lat, 4).unwrap();
            for _ in 0..20 {
                let u = random_field(lat, &mut rng);
                let direct = u.dalpha(2 * p);
                let via_k = kp.apply(&u);
                let scale = direct.max_abs();
                assert!(via_k.sub(&direct).unwrap().max_abs() <= 1e-11 * scale);
            }
        }
    }

    #[test]
    fn elastica_band() {
        let lat = per(8, 8.0 * 0.1);
        let net = assemble_stiffness(&[0.0, 0.0, 1.0], &lat).unwrap();
        let e4 = lat.eps().powi(-4);
        let band = net.band();
        assert!((band[0] - 4.0 * e4).abs() < 1e-9 * e4);
        assert!((band[1] + e4).abs() < 1e-9 * e4);
        assert_eq!(net.grounding(), 0.0);
    }

    #[test]
    fn harmonic_chain() {
        let lat = per(10, 2.0);
        let net = assemble_stiffness(&[0.0, 1.0], &lat).unwrap();
        let e2 = lat.eps().powi(-2);
        assert!((net.band()[0] - e2).abs() < 1e-12 * e2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_field(lat, &mut rng);
        let f = force_from_network(&net, &u).unwrap();
        assert!(f.sub(&u.laplacian()).unwrap().max_abs() < 1e-12 * e2);
    }

    #[test]
    fn impulse_response_elastica() {
        let lat = per(12, 12.0);
        let net = assemble_stiffness(&[0.0, 0.0, 1.0], &lat).unwrap();
        let mut v = vec![0.0; 12];
        v[0] = 1.0;
        let u = LatticeField::new(lat, v).unwrap();
        let f = force_from_network(&net, &u).unwrap();
        assert_eq!(f.get(0), -6.0);
        assert_eq!((f.get(1), f.get(-1)), (4.0, 4.0));
        assert_eq!((f.get(2), f.get(-2)), (-1.0, -1.0));
        assert_eq!(f.get(3), 0.0);
    }

    #[test]
    fn uniform_translation_has_no_force() {
        let lat = per(20, 1.0);
        let net = assemble_stiffness(&[0.0, 0.5, 0.0, 2.0], &lat).unwrap();
        let u = LatticeField::from_fn(lat, |_| 3.3);
        assert_eq!(force_from_network(&net, &u).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn grounded_elastica_matches_operator() {
        let lat = per(32, 2.0 * PI);
        let net = assemble_stiffness(&[1.0, 0.0, 1.0], &lat).unwrap();
        assert_eq!(net.grounding(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = random_field(lat, &mut rng);
            let lap2 = u.laplacian().laplacian();
            let oracle = u.add(&lap2).unwrap().scale(-1.0);
            let f = force_from_network(&net, &u).unwrap();
            assert!(f.sub(&oracle).unwrap().max_abs() <= 1e-10 * oracle.max_abs());
        }
    }

    #[test]
    fn realizability_reports() {
        let lat = per(16, 2.0);
        let net = assemble_stiffness(&[0.0, 0.0, 1.0], &lat).unwrap();
        let rep = verify_realizability(&net);
        assert!(rep.passed, "{:?}", rep.issues);
        assert_eq!(rep.negative_springs.len(), 1);
        assert_eq!(rep.negative_springs[0].offset, 2);

        let mut bad = net.clone();
        bad.set_coupling(0, 1, 1.0).unwrap();
        let rep = verify_realizability(&bad);
        assert!(!rep.symmetric);
        assert!(!rep.passed);

        let net3 = assemble_stiffness(&[1.0, 1.0, 0.0, 1.0], &per(24, 3.0)).unwrap();
        let rep = verify_realizability(&net3);
        assert!(rep.passed);
        assert!(rep.force_residual <= 1e-10);
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let lat = per(16, 2.0);
        assert!(assemble_stiffness(&[1.0], &lat).is_err());
        assert!(assemble_stiffness(&[1.0, 0.0, 0.0], &lat).is_err());
        assert!(assemble_stiffness(&[-1.0, 0.0, 1.0], &lat).is_err());
        assert!(assemble_stiffness(&[0.0, 0.0, 1.0], &per(4, 1.0)).is_err());
    }

    #[test]
    fn harmonic_energy_example() {
        let lat = per(6, 6.0);
        let net = assemble_stiffness(&[0.0, 1.0], &lat).unwrap();
        let mut v = vec![0.0; 6];
        v[1] = 1.0;
        let u = LatticeField::new(lat, v).unwrap();
        assert!((network_energy(&net, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(network_energy(&net, &LatticeField::zeros(lat)).unwrap(), 0.0);
    }

    #[test]
    fn energy_gradient_matches_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (a, lat) in [
            (vec![0.7, 0.0, 1.0], per(20, 2.0)),
            (vec![1.0, 1.0, 0.0, 1.0], per(24, 5.0)),
            (vec![0.0, 0.0, 1.0], Lattice::new(3.0, 14, Boundary::Dirichlet).unwrap()),
        ] {
            let net = assemble_stiffness(&a, &lat).unwrap();
            let mut u = random_field(lat, &mut rng);
            for (i, v) in u.values_mut().iter_mut().enumerate() {
                if lat.is_frozen(i, a.len() - 1) {
                    *v = 0.0;
                }
            }
            let f = force_from_network(&net, &u).unwrap();
            let eps = lat.eps();
            let h = 1e-6;
            for i in lat.free_sites(a.len() - 1) {
                let mut up = u.clone();
                up.values_mut()[i] += h;
                let mut dn = u.clone();
                dn.values_mut()[i] -= h;
                let grad = (network_energy(&net, &up).unwrap() - network_energy(&net, &dn).unwrap()) / (2.0 * h);
                let target = -eps * f.get(i as isize);
                assert!((grad - target).abs() <= 1e-6 * f.max_abs() * eps, "{grad} vs {target}");
            }
        }
    }

    #[test]
    fn dirichlet_netlist_uses_free_sites_only() {
        let lat = Lattice::new(1.0, 10, Boundary::Dirichlet).unwrap();
        let net = assemble_stiffness(&[0.0, 0.0, 1.0], &lat).unwrap();
        let rows = netlist(&net);
        assert!(rows.iter().all(|r| (2..=8).contains(&r.i) && (2..=8).contains(&r.j)));
        // Free sites next to the clamp are anchored through the frozen neighbours.
        let e4 = lat.eps().powi(-4);
        let g2 = rows.iter().find(|r| r.i == 2 && r.j == 2).unwrap().k;
        assert!((g2 - (4.0 - 1.0) * e4).abs() < 1e-9 * e4);
        assert!(verify_realizability(&net).passed);
    }

    #[test]
    fn periodic_netlist_counts() {
        let lat = per(8, 1.0);
        let net = assemble_stiffness(&[0.0, 0.0, 1.0], &lat).unwrap();
        let rows = netlist(&net);
        assert_eq!(rows.len(), 16);
        let chain = netlist(&assemble_stiffness(&[0.0, 1.0], &lat).unwrap());
        assert_eq!(chain.len(), 8);
        assert!(chain.iter().all(|r| (r.j + 8 - r.i) % 8 == 1));
    }
}
