//! Discrete Gagliardo pair weights and the discrete fractional p-Laplacian.
//!
//! Pair weights are `w_ij = h^{2N} / |x_i - x_j|^{N+sp}` for `i != j`; the
//! kernel tail beyond the truncation radius `R` is folded into analytic
//! per-node weights (`2 R^{-sp}/(sp)` in 1D, `2 pi R^{-sp}/(sp)` in 2D,
//! times the cell volume). Since the kernel is translation invariant the
//! weights are stored as an offset table; exterior-node interactions are
//! accumulated once at assembly because exterior values are pinned to zero.
//! All reductions run in a fixed order so results are bit-reproducible.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{CompactSubset, GridDomain};
use rayon::prelude::*;
use std::sync::Arc;

const MAX_NODES: usize = 4096;
const PAR_THRESHOLD: usize = 192;

/// `|t|^{p-2} t`, continuously extended by 0 at t = 0 for p < 2.
#[inline(always)]
pub fn phi_p(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if p == 2.0 {
        t
    } else if p == 3.0 {
        t.abs() * t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// Precomputed pair and tail weights for one `(domain, s, p)`.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    domain: Arc<GridDomain>,
    s: f64,
    p: f64,
    /// Kernel value by grid offset `(|di|, |dj|)`, row-major; entry 0 is 0.
    table: Vec<f64>,
    /// Interior node indices in ascending order.
    interior: Vec<u32>,
    /// Grid coordinates of the interior nodes.
    icoord: Vec<[u32; 2]>,
    /// Per interior node: sum of pair weights to all exterior nodes.
    ext_weight: Vec<f64>,
    /// Analytic tail weight per node (identical across nodes).
    tail: Vec<f64>,
}

impl KernelWeights {
    /// Assemble weights, enforcing `0 < s < 1`, `p > 1` and the standing
    /// assumption `N > s p`.
    pub fn assemble(domain: &Arc<GridDomain>, s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Kernel(format!(
                "fractional order s must lie in (0,1), got {s}"
            )));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Kernel(format!(
                "exponent p must lie in (1,inf), got {p}"
            )));
        }
        let n = domain.dim() as f64;
        if n <= s * p {
            return Err(Error::Kernel(format!(
                "standing assumption violated: need N > s*p, got N = {n}, s*p = {}",
                s * p
            )));
        }
        Self::assemble_impl(domain, s, p)
    }

    /// Assembly without the `N > sp` admissibility gate. The energy/gradient
    /// algebra is well defined for any positive weights; this exists so the
    /// algebraic identities can be exercised at exponent pairs outside the
    /// admissible range of the continuum problem.
    #[doc(hidden)]
    pub fn assemble_unchecked(domain: &Arc<GridDomain>, s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) || !(p > 1.0) {
            return Err(Error::Kernel("s in (0,1) and p > 1 are required".into()));
        }
        Self::assemble_impl(domain, s, p)
    }

    fn assemble_impl(domain: &Arc<GridDomain>, s: f64, p: f64) -> Result<Self> {
        let m = domain.node_count();
        if m > MAX_NODES {
            return Err(Error::Kernel(format!(
                "grid has {m} nodes, above the dense desk-scale cap {MAX_NODES}"
            )));
        }
        let nd = domain.dim();
        let [nx, ny] = domain.grid_shape();
        let [hx, hy] = domain.spacing();
        let cell = domain.cell_volume();
        let sp = s * p;
        let kernel_pow = nd as f64 + sp;

        let mut table = vec![0.0; nx * ny];
        for diy in 0..ny {
            for dix in 0..nx {
                if dix == 0 && diy == 0 {
                    continue;
                }
                let dx = dix as f64 * hx;
                let dist = if nd == 1 {
                    dx
                } else {
                    dx.hypot(diy as f64 * hy)
                };
                table[dix + nx * diy] = cell * cell / dist.powf(kernel_pow);
            }
        }

        let radius = domain.truncation_radius();
        let tail_per_node = match nd {
            1 => cell * 2.0 * radius.powf(-sp) / sp,
            _ => cell * 2.0 * std::f64::consts::PI * radius.powf(-sp) / sp,
        };
        let tail = vec![tail_per_node; m];

        let interior: Vec<u32> = domain
            .interior_indices()
            .iter()
            .map(|&i| i as u32)
            .collect();
        let icoord: Vec<[u32; 2]> = interior
            .iter()
            .map(|&i| [(i as usize % nx) as u32, (i as usize / nx) as u32])
            .collect();

        // Exterior values are identically zero, so each interior node's
        // interaction with the collar reduces to a fixed weight sum.
        let mask = domain.interior_mask();
        let ext_weight: Vec<f64> = icoord
            .iter()
            .map(|&[ax, ay]| {
                let mut acc = 0.0;
                for j in 0..m {
                    if mask[j] {
                        continue;
                    }
                    let bx = (j % nx) as u32;
                    let by = (j / nx) as u32;
                    acc += table[(ax.abs_diff(bx) + nx as u32 * ay.abs_diff(by)) as usize];
                }
                acc
            })
            .collect();

        Ok(Self {
            domain: Arc::clone(domain),
            s,
            p,
            table,
            interior,
            icoord,
            ext_weight,
            tail,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn interior_indices(&self) -> &[u32] {
        &self.interior
    }

    /// Pair weight `w_ij` (zero on the diagonal).
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        let nx = self.domain.grid_shape()[0];
        let (ix, iy) = (i % nx, i / nx);
        let (jx, jy) = (j % nx, j / nx);
        self.table[ix.abs_diff(jx) + nx * iy.abs_diff(jy)]
    }

    pub fn tail_weights(&self) -> &[f64] {
        &self.tail
    }

    /// Sum of pair weights from node `i` to every other node.
    pub fn row_weight_sum(&self, i: usize) -> f64 {
        (0..self.domain.node_count())
            .map(|j| self.pair_weight(i, j))
            .sum()
    }

    /// Discrete `[u]^p`: pair sum plus the doubled analytic tail.
    ///
    /// Returns the p-th *power* of the seminorm.
    pub fn seminorm_p(&self, u: &Field) -> Result<f64> {
        u.check_bound_to(&self.domain)?;
        let p = self.p;
        if p == 2.0 {
            Ok(self.seminorm_impl(u.values(), |t| t * t))
        } else if p == 3.0 {
            Ok(self.seminorm_impl(u.values(), |t| {
                let a = t.abs();
                a * a * a
            }))
        } else {
            Ok(self.seminorm_impl(u.values(), move |t| t.abs().powf(p)))
        }
    }

    fn seminorm_impl(&self, vals: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
        let k = self.interior.len();
        let nx = self.domain.grid_shape()[0] as u32;
        let row = |a: usize| -> f64 {
            let ua = vals[self.interior[a] as usize];
            let [ax, ay] = self.icoord[a];
            let mut acc = 0.0;
            for b in (a + 1)..k {
                let [bx, by] = self.icoord[b];
                let w = self.table[(ax.abs_diff(bx) + nx * ay.abs_diff(by)) as usize];
                acc += w * f(ua - vals[self.interior[b] as usize]);
            }
            // ordered interior pairs count twice; exterior pairs (value 0)
            // once per direction; the tail twice by definition
            2.0 * (acc + f(ua) * (self.ext_weight[a] + self.tail[self.interior[a] as usize]))
        };
        let partials: Vec<f64> = if k >= PAR_THRESHOLD {
            (0..k).into_par_iter().map(row).collect()
        } else {
            (0..k).map(row).collect()
        };
        partials.iter().sum()
    }

    /// Discrete operator `(Au)_i = 2 sum_j w_ij |u_i-u_j|^{p-2}(u_i-u_j)
    /// + 2 d_i |u_i|^{p-2} u_i`, evaluated at interior nodes (zero on the
    /// collar). Exact gradient of `(1/p) seminorm_p` in the interior values.
    pub fn apply_operator(&self, u: &Field) -> Result<Field> {
        u.check_bound_to(&self.domain)?;
        let p = self.p;
        let vals = if p == 2.0 {
            self.apply_impl(u.values(), |t| t)
        } else if p == 3.0 {
            self.apply_impl(u.values(), |t| t.abs() * t)
        } else {
            self.apply_impl(u.values(), move |t| {
                if t == 0.0 {
                    0.0
                } else {
                    t.abs().powf(p - 2.0) * t
                }
            })
        };
        let mut out = vec![0.0; self.domain.node_count()];
        for (a, &i) in self.interior.iter().enumerate() {
            out[i as usize] = vals[a];
        }
        Field::from_values(&self.domain, out)
    }

    fn apply_impl(&self, vals: &[f64], phi: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
        let k = self.interior.len();
        let nx = self.domain.grid_shape()[0] as u32;
        let row = |a: usize| -> f64 {
            let ua = vals[self.interior[a] as usize];
            let [ax, ay] = self.icoord[a];
            let mut acc = 0.0;
            for b in 0..k {
                let [bx, by] = self.icoord[b];
                let w = self.table[(ax.abs_diff(bx) + nx * ay.abs_diff(by)) as usize];
                acc += w * phi(ua - vals[self.interior[b] as usize]);
            }
            2.0 * (acc + phi(ua) * (self.ext_weight[a] + self.tail[self.interior[a] as usize]))
        };
        if k >= PAR_THRESHOLD {
            (0..k).into_par_iter().map(row).collect()
        } else {
            (0..k).map(row).collect()
        }
    }

    /// Max nodal weak residual `|<Au, e_k> - f_k u_k^{-gamma} e_k h^N|` over
    /// the canonical hat test fields supported in `testset` (hat sup-norm 1).
    pub fn weak_residual(
        &self,
        u: &Field,
        source: &Field,
        gamma: f64,
        testset: &CompactSubset,
    ) -> Result<f64> {
        u.check_bound_to(&self.domain)?;
        source.check_bound_to(&self.domain)?;
        for &i in testset.indices() {
            if !(u.values()[i] > 0.0) {
                return Err(Error::Kernel(format!(
                    "singular quotient on test set: u vanishes at node {i}"
                )));
            }
        }
        let au = self.apply_operator(u)?;
        let cell = self.domain.cell_volume();
        let mut worst = 0.0f64;
        for &i in testset.indices() {
            let rhs = cell * source.values()[i] * u.values()[i].powf(-gamma);
            worst = worst.max((au.values()[i] - rhs).abs());
        }
        Ok(worst)
    }

    /// Signed nodal residuals `(Au)_k - f_k u_k^{-gamma} h^N` on a test set,
    /// for one-sided sub/supersolution screens.
    pub fn signed_residuals(
        &self,
        u: &Field,
        source: &Field,
        gamma: f64,
        testset: &CompactSubset,
    ) -> Result<Vec<f64>> {
        u.check_bound_to(&self.domain)?;
        source.check_bound_to(&self.domain)?;
        for &i in testset.indices() {
            if !(u.values()[i] > 0.0) {
                return Err(Error::Kernel(format!(
                    "singular quotient on test set: u vanishes at node {i}"
                )));
            }
        }
        let au = self.apply_operator(u)?;
        let cell = self.domain.cell_volume();
        Ok(testset
            .indices()
            .iter()
            .map(|&i| au.values()[i] - cell * source.values()[i] * u.values()[i].powf(-gamma))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_interval;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn interval_weights(m: usize, pad: f64, s: f64, p: f64) -> KernelWeights {
        let d = build_interval(-1.0, 1.0, m, pad).unwrap();
        KernelWeights::assemble(&d, s, p).unwrap()
    }

    #[test]
    fn nearest_neighbor_weight_matches_kernel() {
        // h = 0.5, s = 0.5, p = 2: w = h^2 / 0.5^{1+1} = 1.0
        let d = build_interval(0.0, 2.0, 5, 0.0).unwrap();
        let w = KernelWeights::assemble_unchecked(&d, 0.5, 2.0).unwrap();
        assert!((w.pair_weight(0, 1) - 1.0).abs() < 1e-14);
        assert_eq!(w.pair_weight(2, 2), 0.0);
        assert!((w.pair_weight(1, 3) - w.pair_weight(3, 1)).abs() == 0.0);
    }

    #[test]
    fn tail_weight_matches_independent_quadrature() {
        // Oracle: integrate r^{-(1+sp)} over (R, inf) on a log grid,
        // treating the integrand as a black box.
        let log_quad = |sp: f64, r0: f64| -> f64 {
            let t0 = r0.ln();
            let t1 = t0 + 60.0 / sp;
            let n = 400_000;
            let dt = (t1 - t0) / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let t = t0 + (k as f64 + 0.5) * dt;
                let r = t.exp();
                acc += r.powf(-(1.0 + sp)) * r * dt;
            }
            acc
        };
        for (s, p, r) in [(0.4, 2.0, 10.0), (0.3, 2.0, 8.0), (0.25, 3.0, 12.0)] {
            let d = build_interval(-1.0, 1.0, 9, 0.0)
                .unwrap()
                .as_ref()
                .clone()
                .with_truncation_radius(r)
                .unwrap();
            let d = std::sync::Arc::new(d);
            let w = KernelWeights::assemble(&d, s, p).unwrap();
            let h = d.spacing()[0];
            let expect = 2.0 * log_quad(s * p, r);
            let got = w.tail_weights()[0] / h;
            assert!(
                (got - expect).abs() <= 1e-7 * expect,
                "s={s} p={p} R={r}: {got} vs {expect}"
            );
        }
        // frozen value from the quadrature oracle: s=0.5, p=2, R=10 -> 0.2
        let d = build_interval(-1.0, 1.0, 9, 0.0)
            .unwrap()
            .as_ref()
            .clone()
            .with_truncation_radius(10.0)
            .unwrap();
        let d = std::sync::Arc::new(d);
        let w = KernelWeights::assemble_unchecked(&d, 0.5, 2.0).unwrap();
        assert!((w.tail_weights()[3] / d.spacing()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn tail_monotone_in_truncation_radius() {
        let mk = |r: f64| {
            let d = build_interval(-1.0, 1.0, 9, 0.0)
                .unwrap()
                .as_ref()
                .clone()
                .with_truncation_radius(r)
                .unwrap();
            let d = std::sync::Arc::new(d);
            KernelWeights::assemble(&d, 0.4, 2.0)
                .unwrap()
                .tail_weights()[0]
        };
        assert!(mk(4.0) > mk(8.0));
        assert!(mk(8.0) > mk(16.0));
    }

    #[test]
    fn standing_assumption_rejected() {
        let d = build_interval(-1.0, 1.0, 9, 0.0).unwrap();
        let err = KernelWeights::assemble(&d, 0.9, 2.0).unwrap_err();
        assert!(err.to_string().contains("standing assumption"), "{err}");
        assert!(KernelWeights::assemble(&d, 1.2, 2.0).is_err());
        assert!(KernelWeights::assemble(&d, 0.5, 0.9).is_err());
    }

    #[test]
    fn seminorm_of_zero_field_is_zero() {
        let w = interval_weights(17, 0.5, 0.4, 2.0);
        let u = Field::zeros(w.domain());
        assert_eq!(w.seminorm_p(&u).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_of_single_node_indicator() {
        let w = interval_weights(17, 0.5, 0.4, 2.0);
        let d = w.domain().clone();
        let k = d.interior_indices()[3];
        let mut vals = vec![0.0; d.node_count()];
        vals[k] = 1.0;
        let u = Field::from_values(&d, vals).unwrap();
        let expect = 2.0 * w.row_weight_sum(k) + 2.0 * w.tail_weights()[k];
        let got = w.seminorm_p(&u).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect, "{got} vs {expect}");
    }

    #[test]
    fn seminorm_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &p in &[1.5, 2.0, 2.7, 3.0] {
            let w = interval_weights(33, 0.5, 0.3, p);
            let d = w.domain().clone();
            let u = Field::from_fn(&d, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let su = w.seminorm_p(&u).unwrap();
            for &alpha in &[2.0, -0.5, 3.7] {
                let sa = w.seminorm_p(&u.scale(alpha).unwrap()).unwrap();
                let expect = alpha.abs().powf(p) * su;
                assert!(
                    (sa - expect).abs() <= 1e-12 * expect.max(1.0),
                    "p={p} alpha={alpha}"
                );
            }
        }
    }

    #[test]
    fn seminorm_refinement_converges_on_parabola() {
        // Richardson-style oracle: diffs between successive dyadic grids
        // must shrink, giving a finite extrapolated limit.
        let s_for = |m: usize| {
            let d = build_interval(-1.0, 1.0, m, 1.0).unwrap();
            let d = std::sync::Arc::new(d.as_ref().clone().with_truncation_radius(64.0).unwrap());
            let w = KernelWeights::assemble(&d, 0.45, 2.0).unwrap();
            let u = Field::from_fn(&d, |x| (1.0 - x[0] * x[0]).max(0.0)).unwrap();
            w.seminorm_p(&u).unwrap()
        };
        let (s1, s2, s3) = (s_for(33), s_for(65), s_for(129));
        let d12 = (s2 - s1).abs();
        let d23 = (s3 - s2).abs();
        assert!(d23 < d12, "no convergence: {d12} then {d23}");
        let rho = d23 / d12;
        let limit = s3 + (s3 - s2) * rho / (1.0 - rho);
        assert!(limit.is_finite() && (s3 - limit).abs() < 2.0 * d23);
    }

    #[test]
    fn apply_operator_linear_for_p_two() {
        let w = interval_weights(33, 0.5, 0.4, 2.0);
        let d = w.domain().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Field::from_fn(&d, |_| rng.gen_range(-1.0..1.0)).unwrap();
        let au = w.apply_operator(&u).unwrap();
        let a2u = w.apply_operator(&u.scale(2.0).unwrap()).unwrap();
        let zero = w.apply_operator(&Field::zeros(&d)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        for i in 0..d.node_count() {
            assert!((a2u.values()[i] - 2.0 * au.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_is_gradient_of_energy() {
        // central finite differences of (1/p) seminorm_p vs apply_operator
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(s, p) in &[(0.4, 2.0), (0.3, 1.5), (0.3, 3.0)] {
            let w = interval_weights(17, 0.5, s, p);
            let d = w.domain().clone();
            let u = Field::from_fn(&d, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let au = w.apply_operator(&u).unwrap();
            let delta = 1e-6;
            let mut worst = 0.0f64;
            for &i in &d.interior_indices() {
                let mut up = u.values().to_vec();
                let mut dn = up.clone();
                up[i] += delta;
                dn[i] -= delta;
                let sp = w.seminorm_p(&Field::from_values(&d, up).unwrap()).unwrap();
                let sn = w.seminorm_p(&Field::from_values(&d, dn).unwrap()).unwrap();
                let fd = (sp - sn) / (2.0 * delta * p);
                worst = worst.max((fd - au.values()[i]).abs());
            }
            let scale = au.sup_norm().max(1e-12);
            assert!(worst / scale < 1e-5, "s={s} p={p}: rel {}", worst / scale);
        }
    }

    #[test]
    fn tail_consistency_between_truncation_radii() {
        // Same field, collar out to R vs explicit shell filling [R, R'];
        // the explicit shell sum must match the analytic tail difference.
        let m = 129; // h = 1/64
        let build = |pad: f64| {
            let d = build_interval(-1.0, 1.0, m, pad).unwrap();
            // default truncation radius = half span + h/2 (exact cell tiling)
            KernelWeights::assemble(&d, 0.45, 2.0).unwrap()
        };
        let wa = build(7.0);
        let wb = build(15.0);
        let center_hat = |w: &KernelWeights| {
            let d = w.domain().clone();
            let c = (0..d.node_count())
                .find(|&i| d.position(i)[0].abs() < 1e-12)
                .unwrap();
            let mut vals = vec![0.0; d.node_count()];
            vals[c] = 1.0;
            Field::from_values(&d, vals).unwrap()
        };
        let sa = wa.seminorm_p(&center_hat(&wa)).unwrap();
        let sb = wb.seminorm_p(&center_hat(&wb)).unwrap();
        assert!(
            (sa - sb).abs() < 1e-8,
            "seminorm with R and with explicit shell + R' differ by {}",
            (sa - sb).abs()
        );
    }

    #[test]
    fn weak_residual_rejects_vanishing_u() {
        let w = interval_weights(17, 0.0, 0.4, 2.0);
        let d = w.domain().clone();
        let u = Field::zeros(&d);
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let k = d.central_subset(0.5).unwrap();
        let err = w.weak_residual(&u, &f, 1.0, &k).unwrap_err();
        assert!(err.to_string().contains("singular quotient"), "{err}");
    }

    #[test]
    fn domain_mismatch_rejected() {
        let w = interval_weights(17, 0.0, 0.4, 2.0);
        let other = build_interval(-1.0, 1.0, 17, 0.0).unwrap();
        let u = Field::zeros(&other);
        assert!(w.seminorm_p(&u).is_err());
        assert!(w.apply_operator(&u).is_err());
    }

    #[test]
    fn node_cap_enforced() {
        let d = build_interval(-1.0, 1.0, 4097, 0.0).unwrap();
        assert!(KernelWeights::assemble(&d, 0.25, 2.0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn seminorm_homogeneity_random(
                alpha in -3.0f64..3.0,
                p in 1.2f64..3.0,
                seed in 0u64..1000,
            ) {
                let s = (0.9f64 / p).min(0.6);
                let w = interval_weights(17, 0.5, s, p);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = Field::from_fn(w.domain(), |_| rng.gen_range(-1.0..1.0)).unwrap();
                let su = w.seminorm_p(&u).unwrap();
                let sa = w.seminorm_p(&u.scale(alpha).unwrap()).unwrap();
                let expect = alpha.abs().powf(p) * su;
                prop_assert!((sa - expect).abs() <= 1e-12 * expect.max(1.0));
            }
        }
    }
}
