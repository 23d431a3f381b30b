//! Exact enumeration over small finite chains `X - Y - Z`.
//!
//! This is the ground truth the statistical trainers are checked against: the
//! expected divergence of a candidate conditional table, conditional entropies,
//! and the decomposition
//!
//! ```text
//! ED(P_{X|Y} || Q_{X|Z}) = H(X|Z) - H(X|Y) + ED(P_{X|Z} || Q_{X|Z})
//! ```
//!
//! which holds for every Markov chain and every table `Q`. Symbols `z` with
//! `P(z) = 0` are skipped in every sum.

use crate::error::{Error, Result};
use crate::prob::{divergence, entropy, Distribution};
use crate::rng::CounterRng;

/// Upper bound on `|X| * |Y| * |Z|` for anything enumerated here.
pub const MAX_ENUMERATION: usize = 1_000_000;

/// One conditional distribution per `z` symbol.
pub type CondTable = Vec<Distribution>;

fn check_cap(nx: usize, ny: usize, nz: usize) -> Result<()> {
    let total = nx.saturating_mul(ny).saturating_mul(nz);
    if total > MAX_ENUMERATION {
        return Err(Error::AlphabetTooLarge(total));
    }
    Ok(())
}

/// Source prior plus two row-stochastic channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    px: Distribution,
    ch1: Vec<Distribution>,
    ch2: Vec<Distribution>,
}

impl ChainModel {
    /// `ch1[x]` is `P_{Y|X=x}`, `ch2[y]` is `P_{Z|Y=y}`.
    pub fn new(px: Distribution, ch1: Vec<Distribution>, ch2: Vec<Distribution>) -> Result<Self> {
        let nx = px.alphabet_size();
        if ch1.len() != nx {
            return Err(Error::DimensionMismatch(ch1.len(), nx));
        }
        let ny = ch1[0].alphabet_size();
        if let Some(bad) = ch1.iter().find(|r| r.alphabet_size() != ny) {
            return Err(Error::DimensionMismatch(bad.alphabet_size(), ny));
        }
        if ch2.len() != ny {
            return Err(Error::DimensionMismatch(ch2.len(), ny));
        }
        let nz = ch2.first().map(|r| r.alphabet_size()).ok_or(Error::Empty)?;
        if let Some(bad) = ch2.iter().find(|r| r.alphabet_size() != nz) {
            return Err(Error::DimensionMismatch(bad.alphabet_size(), nz));
        }
        check_cap(nx, ny, nz)?;
        Ok(Self { px, ch1, ch2 })
    }

    /// Flat-Dirichlet prior and channel rows.
    pub fn random(rng: &mut CounterRng, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        check_cap(nx, ny, nz)?;
        let mut row = |q| Distribution::from_weights(rng.flat_dirichlet(q));
        let px = row(nx)?;
        let ch1 = (0..nx).map(|_| row(ny)).collect::<Result<_>>()?;
        let ch2 = (0..ny).map(|_| row(nz)).collect::<Result<_>>()?;
        Self::new(px, ch1, ch2)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.px.alphabet_size(),
            self.ch1[0].alphabet_size(),
            self.ch2[0].alphabet_size(),
        )
    }

    pub fn px(&self) -> &Distribution {
        &self.px
    }

    pub fn channel1(&self) -> &[Distribution] {
        &self.ch1
    }

    pub fn channel2(&self) -> &[Distribution] {
        &self.ch2
    }

    pub fn joint(&self, x: usize, y: usize, z: usize) -> f64 {
        self.px.get(x) * self.ch1[x].get(y) * self.ch2[y].get(z)
    }

    pub fn p_y(&self, y: usize) -> f64 {
        (0..self.px.alphabet_size())
            .map(|x| self.px.get(x) * self.ch1[x].get(y))
            .sum()
    }

    pub fn p_z(&self, z: usize) -> f64 {
        let (_, ny, _) = self.dims();
        (0..ny).map(|y| self.p_y(y) * self.ch2[y].get(z)).sum()
    }

    pub fn p_yz(&self, y: usize, z: usize) -> f64 {
        self.p_y(y) * self.ch2[y].get(z)
    }

    /// Exact Bayes posterior `P_{X|Y=y}`; the role-model output.
    pub fn posterior_xy(&self, y: usize) -> Result<Distribution> {
        let w: Vec<f64> = (0..self.px.alphabet_size())
            .map(|x| self.px.get(x) * self.ch1[x].get(y))
            .collect();
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroProbabilityConditioning(y));
        }
        Distribution::from_weights(w)
    }

    /// `P_{X|Z=z}` by direct marginalization of the joint.
    pub fn posterior_xz(&self, z: usize) -> Result<Distribution> {
        let (nx, ny, _) = self.dims();
        let w: Vec<f64> = (0..nx)
            .map(|x| (0..ny).map(|y| self.joint(x, y, z)).sum())
            .collect();
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroProbabilityConditioning(z));
        }
        Distribution::from_weights(w)
    }

    /// `P_{X|Z=z}` as the mixture `sum_y P(x|y) P(y|z)`.
    pub fn posterior_xz_mixture(&self, z: usize) -> Result<Distribution> {
        let (nx, ny, _) = self.dims();
        let pz = self.p_z(z);
        if pz <= 0.0 {
            return Err(Error::ZeroProbabilityConditioning(z));
        }
        let mut acc = vec![0.0; nx];
        for y in 0..ny {
            let p_y_given_z = self.p_yz(y, z) / pz;
            if p_y_given_z == 0.0 {
                continue;
            }
            let post = self.posterior_xy(y)?;
            for (a, &p) in acc.iter_mut().zip(post.probs()) {
                *a += p * p_y_given_z;
            }
        }
        Distribution::from_weights(acc)
    }

    /// Exact `P_{X|Z}` for every `z`; unsupported symbols get the uniform
    /// distribution (they never enter a sum).
    pub fn optimal_table(&self) -> CondTable {
        let (nx, _, nz) = self.dims();
        (0..nz)
            .map(|z| self.posterior_xz(z).unwrap_or_else(|_| Distribution::uniform(nx)))
            .collect()
    }

    pub fn cond_entropy_x_given_y(&self) -> f64 {
        let (_, ny, _) = self.dims();
        (0..ny)
            .filter_map(|y| {
                let py = self.p_y(y);
                (py > 0.0).then(|| py * entropy(&self.posterior_xy(y).unwrap()))
            })
            .sum()
    }

    pub fn cond_entropy_x_given_z(&self) -> f64 {
        let (_, _, nz) = self.dims();
        (0..nz)
            .filter_map(|z| {
                let pz = self.p_z(z);
                (pz > 0.0).then(|| pz * entropy(&self.posterior_xz(z).unwrap()))
            })
            .sum()
    }

    /// The floor `H(X|Z) - H(X|Y)` no table can beat.
    pub fn divergence_floor(&self) -> f64 {
        self.cond_entropy_x_given_z() - self.cond_entropy_x_given_y()
    }

    fn check_table(&self, q: &[Distribution]) -> Result<()> {
        let (nx, _, nz) = self.dims();
        if q.len() != nz {
            return Err(Error::DimensionMismatch(q.len(), nz));
        }
        if let Some(bad) = q.iter().find(|d| d.alphabet_size() != nx) {
            return Err(Error::DimensionMismatch(bad.alphabet_size(), nx));
        }
        Ok(())
    }

    /// `ED(P_{X|Y} || Q_{X|Z}) = sum_{y,z} P(y,z) D(P_{X|Y=y} || Q_{X|Z=z})`.
    pub fn expected_divergence(&self, q: &[Distribution]) -> Result<f64> {
        self.check_table(q)?;
        let (_, ny, nz) = self.dims();
        let mut acc = 0.0;
        for y in 0..ny {
            let py = self.p_y(y);
            if py == 0.0 {
                continue;
            }
            let post = self.posterior_xy(y)?;
            for (z, qz) in q.iter().enumerate().take(nz) {
                let w = py * self.ch2[y].get(z);
                if w > 0.0 {
                    acc += w * divergence(&post, qz)?;
                }
            }
        }
        Ok(acc)
    }

    /// `ED(P_{X|Z} || Q_{X|Z})`: how far `q` is from the optimum.
    pub fn excess_divergence(&self, q: &[Distribution]) -> Result<f64> {
        self.check_table(q)?;
        let mut acc = 0.0;
        for (z, qz) in q.iter().enumerate() {
            let pz = self.p_z(z);
            if pz > 0.0 {
                acc += pz * divergence(&self.posterior_xz(z)?, qz)?;
            }
        }
        Ok(acc)
    }

    /// Left side minus right side of the decomposition; zero up to rounding.
    pub fn decomposition_residual(&self, q: &[Distribution]) -> Result<f64> {
        let lhs = self.expected_divergence(q)?;
        let rhs = self.divergence_floor() + self.excess_divergence(q)?;
        Ok(lhs - rhs)
    }

    pub fn to_joint(&self) -> GeneralJoint {
        let (nx, ny, nz) = self.dims();
        let mut p = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    p.push(self.joint(x, y, z));
                }
            }
        }
        GeneralJoint { nx, ny, nz, p }
    }
}

/// Random conditional table with flat-Dirichlet rows.
pub fn random_table(rng: &mut CounterRng, nx: usize, nz: usize) -> CondTable {
    (0..nz)
        .map(|_| Distribution::from_weights(rng.flat_dirichlet(nx)).expect("dirichlet row"))
        .collect()
}

/// Arbitrary joint `P(x, y, z)`, Markov or not.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralJoint {
    nx: usize,
    ny: usize,
    nz: usize,
    p: Vec<f64>,
}

impl GeneralJoint {
    /// `p` is laid out `x`-major, then `y`, then `z`.
    pub fn new(nx: usize, ny: usize, nz: usize, p: Vec<f64>) -> Result<Self> {
        check_cap(nx, ny, nz)?;
        if p.len() != nx * ny * nz {
            return Err(Error::DimensionMismatch(p.len(), nx * ny * nz));
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution("negative joint entry".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("joint mass {s}")));
        }
        Ok(Self { nx, ny, nz, p })
    }

    pub fn random(rng: &mut CounterRng, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        check_cap(nx, ny, nz)?;
        let w = rng.flat_dirichlet(nx * ny * nz);
        Self::new(nx, ny, nz, w)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.ny + y) * self.nz + z]
    }

    fn p_y(&self, y: usize) -> f64 {
        (0..self.nx)
            .flat_map(|x| (0..self.nz).map(move |z| (x, z)))
            .map(|(x, z)| self.get(x, y, z))
            .sum()
    }

    fn p_z(&self, z: usize) -> f64 {
        (0..self.nx)
            .flat_map(|x| (0..self.ny).map(move |y| (x, y)))
            .map(|(x, y)| self.get(x, y, z))
            .sum()
    }

    fn p_yz(&self, y: usize, z: usize) -> f64 {
        (0..self.nx).map(|x| self.get(x, y, z)).sum()
    }

    pub fn posterior_xy(&self, y: usize) -> Result<Distribution> {
        let w: Vec<f64> = (0..self.nx)
            .map(|x| (0..self.nz).map(|z| self.get(x, y, z)).sum())
            .collect();
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroProbabilityConditioning(y));
        }
        Distribution::from_weights(w)
    }

    pub fn posterior_xz(&self, z: usize) -> Result<Distribution> {
        let w: Vec<f64> = (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.get(x, y, z)).sum())
            .collect();
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroProbabilityConditioning(z));
        }
        Distribution::from_weights(w)
    }

    pub fn cond_entropy_x_given_y(&self) -> f64 {
        (0..self.ny)
            .filter_map(|y| {
                let py = self.p_y(y);
                (py > 0.0).then(|| py * entropy(&self.posterior_xy(y).unwrap()))
            })
            .sum()
    }

    pub fn cond_entropy_x_given_z(&self) -> f64 {
        (0..self.nz)
            .filter_map(|z| {
                let pz = self.p_z(z);
                (pz > 0.0).then(|| pz * entropy(&self.posterior_xz(z).unwrap()))
            })
            .sum()
    }

    /// `sum_{x,y,z} P(x,y,z) log2( P(x|y) / Q(x|z) )`.
    pub fn nonmarkov_lhs(&self, q: &[Distribution]) -> Result<f64> {
        if q.len() != self.nz {
            return Err(Error::DimensionMismatch(q.len(), self.nz));
        }
        let posts: Vec<Option<Distribution>> =
            (0..self.ny).map(|y| self.posterior_xy(y).ok()).collect();
        let mut acc = 0.0;
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    let w = self.get(x, y, z);
                    if w == 0.0 {
                        continue;
                    }
                    let pxy = posts[y].as_ref().expect("supported y").get(x);
                    let qxz = q[z].get(x);
                    if qxz == 0.0 {
                        return Err(Error::AbsoluteContinuityViolation { index: x, p_val: w });
                    }
                    acc += w * (pxy / qxz).log2();
                }
            }
        }
        Ok(acc)
    }

    /// `sum_{y,z} P(y,z) D(P_{X|Y=y} || Q_{X|Z=z})`, evaluated on this joint.
    pub fn expected_divergence_xy(&self, q: &[Distribution]) -> Result<f64> {
        let mut acc = 0.0;
        for y in 0..self.ny {
            let Ok(post) = self.posterior_xy(y) else { continue };
            for (z, qz) in q.iter().enumerate() {
                let w = self.p_yz(y, z);
                if w > 0.0 {
                    acc += w * divergence(&post, qz)?;
                }
            }
        }
        Ok(acc)
    }

    pub fn excess_divergence(&self, q: &[Distribution]) -> Result<f64> {
        let mut acc = 0.0;
        for (z, qz) in q.iter().enumerate() {
            let pz = self.p_z(z);
            if pz > 0.0 {
                acc += pz * divergence(&self.posterior_xz(z)?, qz)?;
            }
        }
        Ok(acc)
    }

    /// Left side minus `ED(P_{X|Z}||Q) + H(X|Z) - H(X|Y)`; holds without the
    /// Markov property.
    pub fn nonmarkov_identity_residual(&self, q: &[Distribution]) -> Result<f64> {
        let lhs = self.nonmarkov_lhs(q)?;
        let rhs = self.excess_divergence(q)? + self.cond_entropy_x_given_z()
            - self.cond_entropy_x_given_y();
        Ok(lhs - rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn identity(n: usize) -> Vec<Distribution> {
        (0..n).map(|i| Distribution::one_hot(n, i)).collect()
    }

    fn uniform_rows(rows: usize, q: usize) -> Vec<Distribution> {
        vec![Distribution::uniform(q); rows]
    }

    fn brute_posterior_xy(m: &ChainModel, y: usize) -> Vec<f64> {
        let (nx, _, nz) = m.dims();
        let mut w = vec![0.0; nx];
        for (x, wx) in w.iter_mut().enumerate() {
            for z in 0..nz {
                *wx += m.joint(x, y, z);
            }
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    #[test]
    fn identity_channel_gives_one_hot() {
        let px = d(&[0.2, 0.5, 0.3]);
        let m = ChainModel::new(px, identity(3), identity(3)).unwrap();
        for y in 0..3 {
            assert_eq!(m.posterior_xy(y).unwrap(), Distribution::one_hot(3, y));
        }
    }

    #[test]
    fn useless_channel_gives_prior() {
        let px = d(&[0.2, 0.5, 0.3]);
        let m = ChainModel::new(px.clone(), uniform_rows(3, 4), uniform_rows(4, 2)).unwrap();
        for y in 0..4 {
            let post = m.posterior_xy(y).unwrap();
            assert!(post.total_variation(&px) < 1e-15);
        }
        for z in 0..2 {
            assert!(m.posterior_xz(z).unwrap().total_variation(&px) < 1e-15);
        }
    }

    #[test]
    fn posterior_xy_matches_joint_enumeration() {
        let mut rng = CounterRng::new(2024);
        let m = ChainModel::random(&mut rng, 3, 3, 3).unwrap();
        for y in 0..3 {
            let a = m.posterior_xy(y).unwrap();
            let b = brute_posterior_xy(&m, y);
            for (p, r) in a.probs().iter().zip(&b) {
                assert!((p - r).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn posterior_xz_two_paths_agree() {
        let mut rng = CounterRng::new(99);
        for _ in 0..20 {
            let m = ChainModel::random(&mut rng, 4, 5, 3).unwrap();
            for z in 0..3 {
                let a = m.posterior_xz(z).unwrap();
                let b = m.posterior_xz_mixture(z).unwrap();
                for (p, r) in a.probs().iter().zip(b.probs()) {
                    assert!((p - r).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn z_equal_y_reproduces_role_model() {
        let mut rng = CounterRng::new(5);
        let base = ChainModel::random(&mut rng, 3, 4, 2).unwrap();
        let m = ChainModel::new(base.px().clone(), base.channel1().to_vec(), identity(4)).unwrap();
        for y in 0..4 {
            let a = m.posterior_xz(y).unwrap();
            let b = m.posterior_xy(y).unwrap();
            assert!(a.total_variation(&b) < 1e-14);
        }
        let q: CondTable = (0..4).map(|y| m.posterior_xy(y).unwrap()).collect();
        assert!(m.expected_divergence(&q).unwrap().abs() < 1e-14);
    }

    #[test]
    fn optimal_table_hits_floor() {
        let mut rng = CounterRng::new(17);
        let m = ChainModel::random(&mut rng, 3, 4, 3).unwrap();
        let ed = m.expected_divergence(&m.optimal_table()).unwrap();
        assert!((ed - m.divergence_floor()).abs() < 1e-12);
        assert!(m.decomposition_residual(&m.optimal_table()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn decomposition_term_by_term() {
        let mut rng = CounterRng::new(31);
        let m = ChainModel::random(&mut rng, 3, 3, 4).unwrap();
        let q = random_table(&mut rng, 3, 4);
        // right-hand side assembled independently from joint sums
        let (nx, ny, nz) = m.dims();
        let mut h_xy = 0.0;
        let mut h_xz = 0.0;
        let mut ed_xz = 0.0;
        for y in 0..ny {
            let py: f64 = (0..nx).flat_map(|x| (0..nz).map(move |z| (x, z))).map(|(x, z)| m.joint(x, y, z)).sum();
            for x in 0..nx {
                let pxy: f64 = (0..nz).map(|z| m.joint(x, y, z)).sum();
                if pxy > 0.0 {
                    h_xy -= pxy * (pxy / py).log2();
                }
            }
        }
        for z in 0..nz {
            let pz: f64 = (0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).map(|(x, y)| m.joint(x, y, z)).sum();
            for x in 0..nx {
                let pxz: f64 = (0..ny).map(|y| m.joint(x, y, z)).sum();
                let post = pxz / pz;
                h_xz -= pxz * post.log2();
                ed_xz += pxz * (post / q[z].get(x)).log2();
            }
        }
        let rhs = h_xz - h_xy + ed_xz;
        assert!((m.expected_divergence(&q).unwrap() - rhs).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_data_processing_and_convexity() {
        let mut rng = CounterRng::new(8);
        for _ in 0..50 {
            let (nx, ny, nz) = (2 + rng.below(4), 2 + rng.below(4), 2 + rng.below(4));
            let m = ChainModel::random(&mut rng, nx, ny, nz).unwrap();
            assert!(m.cond_entropy_x_given_z() >= m.cond_entropy_x_given_y() - 1e-12);
            let q1 = random_table(&mut rng, nx, nz);
            let q2 = random_table(&mut rng, nx, nz);
            let e1 = m.expected_divergence(&q1).unwrap();
            let e2 = m.expected_divergence(&q2).unwrap();
            assert!(e1 >= m.divergence_floor() - 1e-10);
            let t = rng.uniform();
            let mix: CondTable = q1
                .iter()
                .zip(&q2)
                .map(|(a, b)| {
                    let w = a.probs().iter().zip(b.probs()).map(|(u, v)| t * u + (1.0 - t) * v).collect();
                    Distribution::from_weights(w).unwrap()
                })
                .collect();
            let em = m.expected_divergence(&mix).unwrap();
            assert!(em <= t * e1 + (1.0 - t) * e2 + 1e-12);
        }
    }

    #[test]
    fn minimizer_is_unique() {
        let mut rng = CounterRng::new(123);
        for _ in 0..50 {
            let m = ChainModel::random(&mut rng, 3, 4, 3).unwrap();
            let opt = m.optimal_table();
            let best = m.expected_divergence(&opt).unwrap();
            let q = random_table(&mut rng, 3, 3);
            let far = q.iter().zip(&opt).enumerate().any(|(z, (a, b))| m.p_z(z) > 0.0 && a.total_variation(b) > 1e-3);
            if far {
                assert!(m.expected_divergence(&q).unwrap() > best + 1e-9);
            }
        }
    }

    #[test]
    fn unsupported_z_is_skipped() {
        // z = 1 never occurs
        let px = d(&[0.5, 0.5]);
        let ch2 = vec![d(&[1.0, 0.0]), d(&[1.0, 0.0])];
        let m = ChainModel::new(px, vec![d(&[0.8, 0.2]), d(&[0.3, 0.7])], ch2).unwrap();
        assert!(matches!(m.posterior_xz(1), Err(Error::ZeroProbabilityConditioning(1))));
        let q = vec![d(&[0.5, 0.5]), d(&[1.0, 0.0])];
        assert!(m.expected_divergence(&q).is_ok());
        assert!(m.decomposition_residual(&q).unwrap().abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap() {
        let mut rng = CounterRng::new(1);
        assert!(matches!(
            ChainModel::random(&mut rng, 200, 100, 100),
            Err(Error::AlphabetTooLarge(_))
        ));
    }

    #[test]
    fn markov_joint_identity_matches_ed() {
        let mut rng = CounterRng::new(77);
        let m = ChainModel::random(&mut rng, 3, 3, 3).unwrap();
        let q = random_table(&mut rng, 3, 3);
        let j = m.to_joint();
        assert!(j.nonmarkov_identity_residual(&q).unwrap().abs() < 1e-12);
        let lhs = j.nonmarkov_lhs(&q).unwrap();
        assert!((lhs - m.expected_divergence(&q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn random_nonmarkov_identity_holds_but_differs_from_ed() {
        let mut rng = CounterRng::new(4242);
        let mut any_gap = false;
        for _ in 0..20 {
            let j = GeneralJoint::random(&mut rng, 3, 3, 3).unwrap();
            let q = random_table(&mut rng, 3, 3);
            assert!(j.nonmarkov_identity_residual(&q).unwrap().abs() < 1e-10);
            let gap = (j.nonmarkov_lhs(&q).unwrap() - j.expected_divergence_xy(&q).unwrap()).abs();
            any_gap |= gap > 1e-6;
        }
        assert!(any_gap);
    }

    #[test]
    fn deterministic_chain_both_sides_zero() {
        let n = 3;
        let mut p = vec![0.0; n * n * n];
        for s in 0..n {
            p[(s * n + s) * n + s] = 1.0 / n as f64;
        }
        let j = GeneralJoint::new(n, n, n, p).unwrap();
        let q: CondTable = (0..n).map(|z| Distribution::one_hot(n, z)).collect();
        assert!(j.nonmarkov_lhs(&q).unwrap().abs() < 1e-15);
        assert!(j.nonmarkov_identity_residual(&q).unwrap().abs() < 1e-15);
    }
}
