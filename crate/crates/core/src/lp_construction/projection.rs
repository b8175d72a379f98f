//! Norm-one projection onto the span of disjointly supported blocks.

use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::{norm_f64, operator_norm_lower_bound};
use crate::scalar::Scalar;
use crate::seq::{AmbientSpace, Seq};

/// `P(x) = Σ_k φ_k(x) g_k`, where `φ_k` is the norming functional of `g_k`
/// restricted to its window `σ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOp {
    space: AmbientSpace,
    len: usize,
    windows: Vec<(usize, usize)>,
    blocks: Vec<Vec<f64>>,
    /// `φ_k` on `σ_k` only.
    functionals: Vec<Vec<f64>>,
}

fn norming_functional(block: &[f64], space: &AmbientSpace) -> Vec<f64> {
    match space {
        AmbientSpace::Lp(p) if *p == 1.0 => block.iter().map(|x| sign(*x)).collect(),
        AmbientSpace::Lp(p) => block.iter().map(|x| sign(*x) * x.abs().powf(p - 1.0)).collect(),
        AmbientSpace::LInfty | AmbientSpace::C0 => {
            let mut out = vec![0.0; block.len()];
            let max = block.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if let Some(j) = block.iter().position(|x| x.abs() == max) {
                out[j] = sign(block[j]);
            }
            out
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl ProjectionOp {
    /// Validates the blocks and builds their functionals. Windows are
    /// 1-based inclusive ranges.
    pub fn new<S: Scalar>(g: &[Seq<S>], sigma: &[(usize, usize)], space: &AmbientSpace, eta: f64) -> Result<Self> {
        if g.len() != sigma.len() {
            return Err(Error::LengthMismatch {
                left: g.len(),
                right: sigma.len(),
            });
        }
        let len = g.first().map_or(0, Seq::len);
        for &(lo, hi) in sigma {
            if lo == 0 || lo > hi || hi > len {
                return Err(Error::IndexOutOfRange { index: hi.max(lo), len });
            }
        }
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by_key(|&k| sigma[k].0);
        for w in order.windows(2) {
            let (a, b) = (sigma[w[0]], sigma[w[1]]);
            if a.1 >= b.0 {
                return Err(Error::OverlappingWindows(b.0));
            }
        }
        let tol = eta.max(1e-12);
        let mut blocks = Vec::with_capacity(g.len());
        let mut functionals = Vec::with_capacity(g.len());
        for (k, (gk, &(lo, hi))) in g.iter().zip(sigma).enumerate() {
            if gk.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: gk.len(),
                });
            }
            let coords: Vec<f64> = gk.coords().iter().map(Scalar::to_f64).collect();
            let outside = coords
                .iter()
                .enumerate()
                .any(|(i, x)| !(lo..=hi).contains(&(i + 1)) && *x != 0.0);
            if outside {
                return Err(Error::Precondition(format!(
                    "block {} has support outside its window [{lo}, {hi}]",
                    k + 1
                )));
            }
            let n = norm_f64(&coords, space);
            if (n - 1.0).abs() > tol {
                return Err(Error::UnnormalizedBlock { index: k + 1, norm: n });
            }
            functionals.push(norming_functional(&coords[lo - 1..hi], space));
            blocks.push(coords);
        }
        Ok(ProjectionOp {
            space: *space,
            len,
            windows: sigma.to_vec(),
            blocks,
            functionals,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn space(&self) -> AmbientSpace {
        self.space
    }

    pub fn windows(&self) -> &[(usize, usize)] {
        &self.windows
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// `φ_k(x)`.
    pub fn functional(&self, k: usize, x: &[f64]) -> f64 {
        let (lo, hi) = self.windows[k];
        self.functionals[k].iter().zip(&x[lo - 1..hi]).map(|(a, b)| a * b).sum()
    }

    /// `(φ_1(x), …, φ_K(x))`.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        (0..self.blocks.len()).map(|k| self.functional(k, x)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = self.coefficients(x);
        let mut out = vec![0.0; self.len];
        for (ck, gk) in c.iter().zip(&self.blocks) {
            for (o, v) in out.iter_mut().zip(gk) {
                *o += ck * v;
            }
        }
        out
    }

    /// Each `φ_k` has dual norm 1 and the windows are disjoint, so `|P| <= 1`.
    pub fn norm_upper(&self) -> f64 {
        1.0
    }

    /// Sampled lower bound on `|P|`; the blocks themselves are among the
    /// probes.
    pub fn norm_lower(&self, trials: usize, seed: u64) -> f64 {
        operator_norm_lower_bound(|x| self.apply(x), self.len, &self.blocks, &self.space, trials, seed)
    }
}

/// `Q(x) = Σ_k (M⁻¹ φ(x))_k t_k` with `M_{kj} = φ_k(t_j)`: the projection
/// onto `span{t_k}` along the common kernel of the block functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalProjection {
    base: ProjectionOp,
    targets: Vec<Vec<f64>>,
    inverse: Vec<Vec<f64>>,
}

impl BiorthogonalProjection {
    pub fn new<S: Scalar>(base: &ProjectionOp, targets: &[Seq<S>], eta: f64) -> Result<Self> {
        if targets.len() != base.blocks.len() {
            return Err(Error::LengthMismatch {
                left: base.blocks.len(),
                right: targets.len(),
            });
        }
        let targets: Vec<Vec<f64>> = targets
            .iter()
            .map(|t| t.coords().iter().map(Scalar::to_f64).collect())
            .collect();
        if let Some(t) = targets.iter().find(|t| t.len() != base.len) {
            return Err(Error::LengthMismatch {
                left: base.len,
                right: t.len(),
            });
        }
        let m: Vec<Vec<f64>> = (0..targets.len())
            .map(|k| targets.iter().map(|t| base.functional(k, t)).collect())
            .collect();
        let inverse = linalg::inverse(&m, eta)?;
        Ok(BiorthogonalProjection {
            base: base.clone(),
            targets,
            inverse,
        })
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    /// Coordinates of `Q(x)` in the target family.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.inverse, &self.base.coefficients(x))
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.combine(&self.coefficients(x), |_| true)
    }

    /// `Σ_{k : keep(k)} c_k t_k`.
    pub fn combine(&self, c: &[f64], keep: impl Fn(usize) -> bool) -> Vec<f64> {
        let mut out = vec![0.0; self.base.len];
        for (k, (ck, t)) in c.iter().zip(&self.targets).enumerate() {
            if !keep(k) {
                continue;
            }
            for (o, v) in out.iter_mut().zip(t) {
                *o += ck * v;
            }
        }
        out
    }

    pub fn norm_lower(&self, trials: usize, seed: u64) -> f64 {
        operator_norm_lower_bound(
            |x| self.apply(x),
            self.base.len,
            &self.targets,
            &self.base.space,
            trials,
            seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{rng, uniform_coeffs};
    use crate::scalar::{rational, Rational};
    use proptest::prelude::*;

    fn seq(xs: &[f64]) -> Seq<f64> {
        Seq::finite(xs.to_vec())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn unit_blocks_give_coordinate_projection() {
        let g = [seq(&[1.0, 0.0, 0.0, 0.0]), seq(&[0.0, 1.0, 0.0, 0.0])];
        let p = ProjectionOp::new(&g, &[(1, 1), (2, 2)], &AmbientSpace::Lp(2.0), 1e-9).unwrap();
        assert_eq!(p.apply(&[3.0, -2.0, 5.0, 7.0]), vec![3.0, -2.0, 0.0, 0.0]);
        assert_eq!(p.apply(p.blocks()[0].as_slice()), p.blocks()[0]);
    }

    #[test]
    fn contraction_on_random_vectors() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let g = [seq(&[1.0, 0.0, 0.0, 0.0]), seq(&[0.0, h, h, 0.0])];
        let space = AmbientSpace::Lp(2.0);
        let p = ProjectionOp::new(&g, &[(1, 1), (2, 3)], &space, 1e-9).unwrap();
        let mut r = rng(11, 0);
        for _ in 0..200 {
            let x = uniform_coeffs(&mut r, 4);
            // Oracle: orthogonal projection onto span{e1, (e2+e3)/√2}.
            let m = (x[1] + x[2]) / 2.0;
            let expect = [x[0], m, m, 0.0];
            let px = p.apply(&x);
            assert!(close(&px, &expect, 1e-12));
            assert!(norm_f64(&px, &space) <= norm_f64(&x, &space) + 1e-12);
        }
    }

    #[test]
    fn p_equals_one_uses_signs() {
        let g = [seq(&[0.5, -0.5, 0.0]), seq(&[0.0, 0.0, 1.0])];
        let space = AmbientSpace::Lp(1.0);
        let p = ProjectionOp::new(&g, &[(1, 2), (3, 3)], &space, 1e-9).unwrap();
        assert!(close(&p.apply(&[0.5, -0.5, 0.0]), &[0.5, -0.5, 0.0], 1e-15));
        assert!(p.norm_lower(200, 3) <= 1.0 + 1e-9);
    }

    #[test]
    fn sup_norm_blocks_use_first_maximum() {
        let g = [seq(&[1.0, -1.0, 0.5]), seq(&[0.0, 0.0, 0.0])];
        let r = ProjectionOp::new(&g[..1], &[(1, 3)], &AmbientSpace::C0, 1e-9).unwrap();
        assert_eq!(r.coefficients(&[2.0, 5.0, 9.0]), vec![2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let g = [seq(&[1.0, 0.0, 0.0]), seq(&[0.0, 1.0, 0.0])];
        let space = AmbientSpace::Lp(2.0);
        assert!(matches!(
            ProjectionOp::new(&g, &[(1, 2), (2, 3)], &space, 1e-9),
            Err(Error::OverlappingWindows(2))
        ));
        let h = [seq(&[2.0, 0.0, 0.0])];
        assert!(matches!(
            ProjectionOp::new(&h, &[(1, 1)], &space, 1e-9),
            Err(Error::UnnormalizedBlock { index: 1, .. })
        ));
        assert!(matches!(
            ProjectionOp::new(&g[1..], &[(1, 1)], &space, 1e-9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn disjoint_blocks_add_pth_powers_exactly() {
        let g: Vec<Seq<Rational>> = vec![
            Seq::finite(vec![rational(3, 5), rational(4, 5), rational(0, 1), rational(0, 1)]),
            Seq::finite(vec![rational(0, 1), rational(0, 1), rational(-5, 13), rational(12, 13)]),
        ];
        let a = [rational(7, 3), rational(-2, 9)];
        let sum = g[0].scale(&a[0]).add(&g[1].scale(&a[1])).unwrap();
        let lhs = sum.pow_sum(2);
        let rhs: Rational = a.iter().zip(&g).map(|(ak, gk)| ak * ak * gk.pow_sum(2)).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn biorthogonal_projection_fixes_targets() {
        let g = [seq(&[1.0, 0.0, 0.0, 0.0]), seq(&[0.0, 0.0, 1.0, 0.0])];
        let space = AmbientSpace::Lp(2.0);
        let p = ProjectionOp::new(&g, &[(1, 2), (3, 4)], &space, 1e-9).unwrap();
        let t = [seq(&[1.0, 0.1, 0.05, 0.0]), seq(&[0.0, 0.02, 1.0, 0.1])];
        let q = BiorthogonalProjection::new(&p, &t, 1e-12).unwrap();
        for tk in q.targets() {
            assert!(close(&q.apply(tk), tk, 1e-12));
        }
        let mut r = rng(5, 0);
        for _ in 0..50 {
            let x = uniform_coeffs(&mut r, 4);
            let qx = q.apply(&x);
            assert!(close(&q.apply(&qx), &qx, 1e-12));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projection_is_idempotent(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..5),
            p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
            seed in 0u64..1000,
        ) {
            let space = AmbientSpace::Lp(p);
            prop_assume!(raw.iter().all(|b| norm_f64(b, &space) > 1e-3));
            let len = 3 * raw.len();
            let mut g = Vec::new();
            let mut sigma = Vec::new();
            for (k, b) in raw.iter().enumerate() {
                let n = norm_f64(b, &space);
                let mut coords = vec![0.0; len];
                for (i, v) in b.iter().enumerate() {
                    coords[3 * k + i] = v / n;
                }
                g.push(Seq::finite(coords));
                sigma.push((3 * k + 1, 3 * k + 3));
            }
            let op = ProjectionOp::new(&g, &sigma, &space, 1e-9).unwrap();
            let mut r = rng(seed, 0);
            for _ in 0..20 {
                let x = uniform_coeffs(&mut r, len);
                let px = op.apply(&x);
                prop_assert!(close(&op.apply(&px), &px, 1e-9));
                prop_assert!(norm_f64(&px, &space) <= norm_f64(&x, &space) * (1.0 + 1e-9));
            }
            for b in op.blocks() {
                prop_assert!(close(&op.apply(b), b, 1e-9));
            }
        }
    }
}
