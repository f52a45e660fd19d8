//! Local Morrey norms
//! `‖f‖_{B^p_γ} = sup_{R≥1} (R^{−γ} ∫_{B(0,R)} |f|^p)^{1/p}`, the embedding
//! chain `L^p_{w_γ} ⊂ B^p_γ ⊂ L^p_{w_δ}` (`δ > γ`), and the real
//! interpolation split behind `B^p_γ = [L^p, L^p_{w_δ}]_{γ/δ,∞}`.
//!
//! Samples are treated as `f·1_box`. Ball integrals count nodes with
//! `|x| ≤ R`, so every radial quantity is a step function of `R` that only
//! jumps at node radii; sups and infima over `R` are evaluated exactly over
//! those radii.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::fields::{self, weight, ScalarField};
use crate::math;

fn check_exponents(p: f64, gamma: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        bail!(Parameter, "exponent p must lie in [1, inf), got {p}");
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        bail!(Parameter, "gamma must be >= 0, got {gamma}");
    }
    Ok(())
}

/// Node masses `|f|^p h^d` grouped by radius, in increasing radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    /// Mass of the nodes at each radius.
    pub mass: Vec<f64>,
    /// `Σ_{r' ≤ r} mass`.
    pub cumulative: Vec<f64>,
    p: f64,
}

impl RadialProfile {
    pub fn new(f: &ScalarField, p: f64) -> Result<Self> {
        check_exponents(p, 0.0)?;
        f.validate()?;
        let g = &f.grid;
        let vol = g.cell_volume();
        let mut nodes: Vec<(f64, f64)> = (0..g.len())
            .map(|l| (math::hypot3(&g.point(l)), math::powf(f.values[l].abs(), p) * vol))
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut radii: Vec<f64> = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (r, m) in nodes {
            match radii.last() {
                Some(&last) if r - last <= 1e-12 * r.max(1.0) => *mass.last_mut().unwrap() += m,
                _ => {
                    radii.push(r);
                    mass.push(m);
                }
            }
        }
        let mut acc = 0.0;
        let cumulative = mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(RadialProfile {
            radii,
            mass,
            cumulative,
            p,
        })
    }

    /// `∫_{B(0,R)} |f|^p` by node membership.
    pub fn ball(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|x| *x <= r * (1.0 + 1e-12));
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `R^{−γ} ∫_{B(0,R)} |f|^p`.
    pub fn morrey_mass(&self, r: f64, gamma: f64) -> f64 {
        math::powf(r, -gamma) * self.ball(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub p: f64,
    pub gamma: f64,
    pub lp_wgamma: f64,
    pub b_norm: f64,
    pub sup_radius: f64,
    /// `R^{−γ}∫_{B(0,R)}|f|^p` at `R = L/4, L/2, L`.
    pub trend: Vec<(f64, f64)>,
    /// `trend(L) / trend(L/2)`.
    pub decay_ratio: f64,
    /// The trend falls at least at half the rate `2^{−γ}` of compactly
    /// supported data.
    pub decay_flag: bool,
    /// `|∂B(0,R)| h/2 · max|f|^p · R^{−γ}` at the achieving radius, raised to
    /// `1/p`.
    pub boundary_error: f64,
}

fn sphere_area(d: usize, r: f64) -> f64 {
    if d == 2 {
        2.0 * math::PI * r
    } else {
        4.0 * math::PI * r * r
    }
}

/// `B^p_γ` norm with the sup taken over `{1}` and every node radius `≥ 1`.
pub fn b_norm(f: &ScalarField, p: f64, gamma: f64) -> Result<NormReport> {
    check_exponents(p, gamma)?;
    let g = &f.grid;
    let l = g.half_width();
    if l < 1.0 {
        bail!(Parameter, "box half-width {l} < 1 leaves no admissible radius");
    }
    let prof = RadialProfile::new(f, p)?;
    let mut best = (prof.morrey_mass(1.0, gamma), 1.0);
    for &r in prof.radii.iter().filter(|r| **r >= 1.0) {
        let v = prof.morrey_mass(r, gamma);
        if v > best.0 {
            best = (v, r);
        }
    }
    let trend: Vec<(f64, f64)> = [0.25 * l, 0.5 * l, l]
        .iter()
        .map(|&r| (r, prof.morrey_mass(r.max(1.0), gamma)))
        .collect();
    let decay_ratio = if trend[1].1 > 0.0 {
        trend[2].1 / trend[1].1
    } else {
        0.0
    };
    let fmax = math::powf(f.max_abs(), p);
    let boundary_error = math::powf(
        sphere_area(g.dim(), best.1) * g.spacing() / 2.0 * fmax * math::powf(best.1, -gamma),
        1.0 / p,
    );
    Ok(NormReport {
        p,
        gamma,
        lp_wgamma: fields::weighted_lp_norm(f, p, gamma)?,
        b_norm: math::powf(best.0, 1.0 / p),
        sup_radius: best.1,
        trend,
        decay_ratio,
        decay_flag: decay_ratio < math::powf(2.0, -gamma / 2.0),
        boundary_error,
    })
}

/// `C(γ, δ, p) = (1 + 2^δ / (2^{δ−γ} − 1))^{1/p}`, from summing the
/// dyadic shells `2^{n−1} < |x| ≤ 2^n`.
pub fn shell_constant(gamma: f64, delta: f64, p: f64) -> f64 {
    math::powf(
        1.0 + math::powf(2.0, delta) / (math::powf(2.0, delta - gamma) - 1.0),
        1.0 / p,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    /// `‖f‖_{B^p_γ} / ‖f‖_{L^p_{w_γ}}`.
    pub r1: f64,
    /// `‖f‖_{L^p_{w_δ}} / ‖f‖_{B^p_γ}`.
    pub r2: f64,
    /// `2^{γ/p}`.
    pub bound1: f64,
    /// [`shell_constant`].
    pub bound2: f64,
    pub r1_ok: bool,
    pub r2_ok: bool,
    /// A denominator vanished; the ratios are then reported as 0.
    pub undefined: bool,
}

pub fn embedding_constants(
    f: &ScalarField,
    p: f64,
    gamma: f64,
    delta: f64,
    slack: f64,
) -> Result<EmbeddingReport> {
    if !(delta > gamma) {
        bail!(Parameter, "need delta > gamma, got {delta} <= {gamma}");
    }
    let b = b_norm(f, p, gamma)?;
    let wd = fields::weighted_lp_norm(f, p, delta)?;
    let undefined = b.lp_wgamma == 0.0 || b.b_norm == 0.0;
    let r1 = if b.lp_wgamma > 0.0 { b.b_norm / b.lp_wgamma } else { 0.0 };
    let r2 = if b.b_norm > 0.0 { wd / b.b_norm } else { 0.0 };
    let bound1 = math::powf(2.0, gamma / p);
    let bound2 = shell_constant(gamma, delta, p);
    Ok(EmbeddingReport {
        r1,
        r2,
        bound1,
        bound2,
        r1_ok: r1 <= bound1 * (1.0 + slack),
        r2_ok: r2 <= bound2 * (1.0 + slack),
        undefined,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSplit {
    pub a: f64,
    /// `A^{p/δ}` when `A > 1`.
    pub radius: Option<f64>,
    pub f0: ScalarField,
    pub f1: ScalarField,
    /// `‖f₀‖_p`.
    pub norm0: f64,
    /// `‖f₁‖_{L^p_{w_δ}}`.
    pub norm1: f64,
    pub b_norm: f64,
    /// `norm0 / (A^{γ/δ} b_norm)`.
    pub c0: f64,
    /// `norm1 / (A^{γ/δ−1} b_norm)`.
    pub c1: f64,
    pub undefined: bool,
}

fn check_split(a: f64, gamma: f64, delta: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        bail!(Parameter, "A must be positive, got {a}");
    }
    if !(delta > gamma && gamma > 0.0) {
        bail!(Parameter, "need delta > gamma > 0");
    }
    Ok(())
}

/// `A ≤ 1`: `f₀ = 0`; `A > 1`: `f₀ = f·1_{|x|≤R}`, `R = A^{p/δ}`.
pub fn interpolation_split(
    f: &ScalarField,
    a: f64,
    p: f64,
    gamma: f64,
    delta: f64,
) -> Result<InterpolationSplit> {
    check_split(a, gamma, delta)?;
    let b = b_norm(f, p, gamma)?.b_norm;
    let radius = (a > 1.0).then(|| math::powf(a, p / delta));
    let g = f.grid;
    let mut v0 = vec![0.0; g.len()];
    let mut v1 = f.values.clone();
    if let Some(r) = radius {
        for l in 0..g.len() {
            if math::hypot3(&g.point(l)) <= r * (1.0 + 1e-12) {
                v0[l] = f.values[l];
                v1[l] = 0.0;
            }
        }
    }
    let f0 = ScalarField::new(g, f.time, v0)?;
    let f1 = ScalarField::new(g, f.time, v1)?;
    let norm0 = fields::weighted_lp_norm(&f0, p, 0.0)?;
    let norm1 = fields::weighted_lp_norm(&f1, p, delta)?;
    let undefined = b == 0.0;
    let (c0, c1) = if undefined {
        (0.0, 0.0)
    } else {
        (
            norm0 / (math::powf(a, gamma / delta) * b),
            norm1 / (math::powf(a, gamma / delta - 1.0) * b),
        )
    };
    Ok(InterpolationSplit {
        a,
        radius,
        f0,
        f1,
        norm0,
        norm1,
        b_norm: b,
        c0,
        c1,
        undefined,
    })
}

/// Split radii tried by [`k_functional`]. `0` and `∞` are always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusFamily {
    /// Every node radius: the infimum over all ball splits, exactly.
    AllNodeRadii,
    /// `n` geometric radii between the smallest positive node radius and
    /// the largest, plus the split radius `A^{p/δ}`.
    Geometric(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KValue {
    pub k: f64,
    /// `None` for `f₀ = 0`, `Some(∞)` for `f₁ = 0`.
    pub radius: Option<f64>,
}

/// Ball splits of `f` with their two norms, sharing one sort.
#[derive(Debug, Clone)]
pub struct SplitTable {
    radii: Vec<f64>,
    /// `‖f·1_{≤R}‖_p` per radius.
    inner: Vec<f64>,
    /// `‖f·1_{>R}‖_{L^p_{w_δ}}` per radius.
    outer: Vec<f64>,
    full0: f64,
    full1: f64,
}

impl SplitTable {
    pub fn new(f: &ScalarField, p: f64, delta: f64) -> Result<Self> {
        check_exponents(p, delta)?;
        f.validate()?;
        let g = &f.grid;
        let vol = g.cell_volume();
        let mut nodes: Vec<(f64, f64, f64)> = (0..g.len())
            .map(|l| {
                let x = g.point(l);
                let m = math::powf(f.values[l].abs(), p) * vol;
                (math::hypot3(&x), m, m * weight(&x, delta))
            })
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total_w: f64 = nodes.iter().map(|n| n.2).sum();
        let mut radii = Vec::new();
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        let (mut a0, mut a1) = (0.0, 0.0);
        let mut k = 0;
        while k < nodes.len() {
            let r = nodes[k].0;
            while k < nodes.len() && nodes[k].0 - r <= 1e-12 * r.max(1.0) {
                a0 += nodes[k].1;
                a1 += nodes[k].2;
                k += 1;
            }
            radii.push(r);
            inner.push(math::powf(a0, 1.0 / p));
            outer.push(math::powf((total_w - a1).max(0.0), 1.0 / p));
        }
        Ok(SplitTable {
            radii,
            full0: math::powf(a0, 1.0 / p),
            full1: math::powf(total_w, 1.0 / p),
            inner,
            outer,
        })
    }

    fn at(&self, r: f64) -> (f64, f64) {
        let k = self.radii.partition_point(|x| *x <= r * (1.0 + 1e-12));
        if k == 0 {
            (0.0, self.full1)
        } else {
            (self.inner[k - 1], self.outer[k - 1])
        }
    }

    /// `min_R ‖f·1_{≤R}‖_p + A ‖f·1_{>R}‖_{L^p_{w_δ}}`.
    pub fn k(&self, a: f64, family: RadiusFamily, p: f64, delta: f64) -> KValue {
        let mut best = KValue {
            k: a * self.full1,
            radius: None,
        };
        let mut consider = |v: f64, r: Option<f64>| {
            if v < best.k {
                best = KValue { k: v, radius: r };
            }
        };
        consider(self.full0, Some(f64::INFINITY));
        match family {
            RadiusFamily::AllNodeRadii => {
                for (q, r) in self.radii.iter().enumerate() {
                    consider(self.inner[q] + a * self.outer[q], Some(*r));
                }
            }
            RadiusFamily::Geometric(n) => {
                let lo = self.radii.iter().copied().find(|r| *r > 0.0).unwrap_or(1.0);
                let hi = self.radii.last().copied().unwrap_or(1.0).max(lo);
                let mut cands: Vec<f64> = (0..n.max(2))
                    .map(|k| lo * math::powf(hi / lo, k as f64 / (n.max(2) - 1) as f64))
                    .collect();
                if a > 1.0 {
                    cands.push(math::powf(a, p / delta));
                }
                for r in cands {
                    let (i0, o1) = self.at(r);
                    consider(i0 + a * o1, Some(r));
                }
            }
        }
        best
    }
}

pub fn k_functional(
    f: &ScalarField,
    a: f64,
    p: f64,
    gamma: f64,
    delta: f64,
    family: RadiusFamily,
) -> Result<KValue> {
    check_split(a, gamma, delta)?;
    Ok(SplitTable::new(f, p, delta)?.k(a, family, p, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn b_norm_examples() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        assert_eq!(b_norm(&ScalarField::zeros(g), 2.0, 1.0).unwrap().b_norm, 0.0);
        let one = ScalarField::constant(g, 1.0);
        let r = b_norm(&one, 2.0, 2.0).unwrap();
        assert!((r.b_norm - math::sqrt(math::PI)).abs() < 0.1, "{}", r.b_norm);
        let ind = ScalarField::from_fn(g, 0.0, |x| if math::hypot3(&x) <= 1.0 { 1.0 } else { 0.0 });
        let r = b_norm(&ind, 2.0, 1.5).unwrap();
        assert_eq!(r.sup_radius, 1.0);
        assert!((r.b_norm - math::sqrt(math::PI)).abs() < 0.1);
        let small = Grid::new(2, 8, 0.5).unwrap();
        assert!(b_norm(&ScalarField::zeros(small), 2.0, 1.0).is_err());
    }

    #[test]
    fn sup_is_exact_over_node_radii() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |x| math::exp(-0.3 * x[0] * x[0]) * (1.0 + x[1].abs()));
        let r = b_norm(&f, 1.5, 0.7).unwrap();
        // brute force over a dense radius grid
        let prof = RadialProfile::new(&f, 1.5).unwrap();
        let mut best: f64 = 0.0;
        for k in 0..20000 {
            let rad = 1.0 + k as f64 * 1e-4 * 4.0;
            best = best.max(prof.morrey_mass(rad, 0.7));
        }
        assert!(math::powf(best, 1.0 / 1.5) <= r.b_norm * (1.0 + 1e-14));
    }

    #[test]
    fn embedding_first_ratio_is_bounded_exactly() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let e = embedding_constants(&one, 2.0, 1.0, 2.0, 0.0).unwrap();
        assert!(e.r1 <= math::sqrt(2.0));
        assert!(e.r1_ok && e.r2_ok && !e.undefined);
        let z = embedding_constants(&ScalarField::zeros(g), 2.0, 1.0, 2.0, 0.0).unwrap();
        assert!(z.undefined);
        assert!(embedding_constants(&one, 2.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn second_ratio_decreases_in_delta() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |x| math::powf(1.0 + math::hypot3(&x), -0.5));
        let rs: Vec<f64> = [1.5, 2.0, 3.0]
            .iter()
            .map(|d| embedding_constants(&f, 2.0, 1.0, *d, 0.0).unwrap().r2)
            .collect();
        assert!(rs[0] > rs[1] && rs[1] > rs[2]);
    }

    #[test]
    fn split_examples() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |x| math::exp(-math::hypot3(&x)));
        let s = interpolation_split(&f, 0.5, 2.0, 1.0, 2.0).unwrap();
        assert_eq!(s.f0.max_abs(), 0.0);
        assert_eq!(s.f1.values, f.values);
        let s = interpolation_split(&f, 4.0, 2.0, 1.0, 2.0).unwrap();
        assert_eq!(s.radius, Some(4.0));
        for l in 0..g.len() {
            assert_eq!(s.f0.values[l] + s.f1.values[l], f.values[l]);
        }
        let z = interpolation_split(&ScalarField::zeros(g), 4.0, 2.0, 1.0, 2.0).unwrap();
        assert!(z.undefined && z.norm0 == 0.0 && z.norm1 == 0.0);
        assert!(interpolation_split(&f, 0.0, 2.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn k_functional_of_zero_vanishes() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        for a in [0.5, 1.0, 3.0] {
            let k = k_functional(&ScalarField::zeros(g), a, 2.0, 1.0, 2.0, RadiusFamily::AllNodeRadii).unwrap();
            assert_eq!(k.k, 0.0);
        }
    }

    #[test]
    fn k_functional_matches_brute_force() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |x| 1.0 / (1.0 + x[0] * x[0] + 2.0 * x[1] * x[1]));
        let (p, delta) = (2.0, 3.0);
        for a in [0.3, 1.0, 2.5, 10.0] {
            let k = k_functional(&f, a, p, 1.0, delta, RadiusFamily::AllNodeRadii).unwrap();
            let mut radii: Vec<f64> = (0..g.len()).map(|l| math::hypot3(&g.point(l))).collect();
            radii.push(-1.0);
            let mut best = f64::INFINITY;
            for r in radii {
                let f0 = ScalarField::from_fn(g, 0.0, |x| if math::hypot3(&x) <= r { 1.0 / (1.0 + x[0] * x[0] + 2.0 * x[1] * x[1]) } else { 0.0 });
                let f1 = f.sub(&f0).unwrap();
                let v = fields::weighted_lp_norm(&f0, p, 0.0).unwrap()
                    + a * fields::weighted_lp_norm(&f1, p, delta).unwrap();
                best = best.min(v);
            }
            assert!((k.k - best).abs() < 1e-12 * best, "{a} {} {best}", k.k);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn b_norm_homogeneous_and_decreasing_in_gamma(
                alpha in -4.0f64..4.0, g1 in 0.0f64..3.0, dg in 0.0f64..2.0, s in 0.1f64..2.0
            ) {
                let g = Grid::new(2, 16, 3.0).unwrap();
                let f = ScalarField::from_fn(g, 0.0, |x| math::exp(-s * (x[0] * x[0] + x[1] * x[1])) + 0.1);
                let a = b_norm(&f, 2.0, g1).unwrap().b_norm;
                let b = b_norm(&f.scale(alpha), 2.0, g1).unwrap().b_norm;
                prop_assert!((b - alpha.abs() * a).abs() <= 1e-12 * (1.0 + a));
                let c = b_norm(&f, 2.0, g1 + dg).unwrap().b_norm;
                prop_assert!(c <= a * (1.0 + 1e-14));
            }

            #[test]
            fn k_functional_is_nondecreasing_and_concave(
                a in 0.1f64..10.0, step in 0.01f64..3.0, s in 0.05f64..1.0
            ) {
                let g = Grid::new(2, 16, 3.0).unwrap();
                let f = ScalarField::from_fn(g, 0.0, |x| 1.0 / (1.0 + s * (x[0] * x[0] + x[1] * x[1])));
                let t = SplitTable::new(&f, 2.0, 2.5).unwrap();
                let k = |x: f64| t.k(x, RadiusFamily::AllNodeRadii, 2.0, 2.5).k;
                let (k0, k1, k2) = (k(a), k(a + step), k(a + 2.0 * step));
                prop_assert!(k1 >= k0 * (1.0 - 1e-14));
                prop_assert!(k1 >= 0.5 * (k0 + k2) * (1.0 - 1e-13));
            }
        }
    }
}
