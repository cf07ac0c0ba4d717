//! Rigid-body superposition kernels.
//!
//! [`kabsch`] is the exact least-squares superposition; [`rmsd_bound`] is a
//! cheap lower bound on its RMSD that the search uses to skip windows without
//! changing results.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::structmodel::MotifQuery;

pub type Coord = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Coord) -> Coord {
        self.rotation * p + self.translation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentResult {
    /// Maps the mobile set onto the reference set.
    pub transform: RigidTransform,
    pub rmsd: f64,
}

fn centroid(points: &[Coord]) -> Coord {
    points.iter().sum::<Coord>() / points.len() as f64
}

/// Optimal proper superposition of `mobile` onto `target`.
///
/// Minimizes `sum |R p_i + t - q_i|^2` over rotations with det +1. Collinear or
/// coplanar inputs still yield a valid minimizer.
pub fn kabsch(mobile: &[Coord], target: &[Coord]) -> Result<AlignmentResult> {
    if mobile.len() != target.len() {
        return Err(Error::Shape(format!(
            "point sets differ in size: {} vs {}",
            mobile.len(),
            target.len()
        )));
    }
    let n = mobile.len();
    if n < 3 {
        return Err(Error::Underdetermined { required: 3, got: n });
    }
    let cp = centroid(mobile);
    let cq = centroid(target);

    let mut h = Matrix3::zeros();
    for (p, q) in mobile.iter().zip(target) {
        h += (p - cp) * (q - cq).transpose();
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v = svd.v_t.expect("svd computed with v_t").transpose();
    let mut rotation = v * u.transpose();
    if rotation.determinant() < 0.0 {
        // Flip the axis of the smallest singular value to turn the reflection
        // into the best proper rotation.
        let k = svd.singular_values.imin();
        let mut v_fixed = v;
        v_fixed.column_mut(k).neg_mut();
        rotation = v_fixed * u.transpose();
    }
    let transform = RigidTransform {
        rotation,
        translation: cq - rotation * cp,
    };

    let sum_sq: f64 = mobile
        .iter()
        .zip(target)
        .map(|(p, q)| (transform.apply(p) - q).norm_squared())
        .sum();
    Ok(AlignmentResult {
        transform,
        rmsd: (sum_sq / n as f64).sqrt(),
    })
}

/// Probe pairs `(first, last)`, `(first, middle)`, `(middle, last)`.
fn probe_pairs(n: usize) -> [(usize, usize); 3] {
    let mid = n / 2;
    [(0, n - 1), (0, mid), (mid, n - 1)]
}

/// Admissible lower bound on `kabsch(p, q).rmsd`.
///
/// Under any rigid placement, `|d_p(i,j) - d_q(i,j)| <= |e_i| + |e_j|`, and
/// `(|e_i| + |e_j|)^2 <= 2 n rmsd^2`, so each probe pair bounds the RMSD from
/// below by `|d_p - d_q| / sqrt(2n)`.
pub fn rmsd_bound(p: &[Coord], q: &[Coord]) -> f64 {
    let n = p.len().min(q.len());
    if n < 2 {
        return 0.0;
    }
    let scale = (2.0 * n as f64).sqrt();
    probe_pairs(n)
        .iter()
        .filter(|(i, j)| i != j)
        .map(|&(i, j)| ((p[i] - p[j]).norm() - (q[i] - q[j]).norm()).abs() / scale)
        .fold(0.0, f64::max)
}

/// Joint superposition of every candidate segment onto the query under one transform.
///
/// The reported RMSD is taken over all concatenated points.
pub fn multi_segment_rmsd(query: &MotifQuery, candidate: &[Vec<Coord>]) -> Result<AlignmentResult> {
    if candidate.len() != query.segments().len() {
        return Err(Error::Shape(format!(
            "query has {} segments, candidate has {}",
            query.segments().len(),
            candidate.len()
        )));
    }
    for (i, (qs, cs)) in query.segments().iter().zip(candidate).enumerate() {
        if qs.len() != cs.len() {
            return Err(Error::Shape(format!(
                "segment {i}: query length {} vs candidate length {}",
                qs.len(),
                cs.len()
            )));
        }
    }
    let mobile = query.concatenated();
    let target: Vec<Coord> = candidate.iter().flatten().copied().collect();
    kabsch(&mobile, &target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Coord> {
        (0..n)
            .map(|_| Coord::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
            .collect()
    }

    fn random_rigid(rng: &mut impl Rng) -> RigidTransform {
        let axis = Unit::new_normalize(Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        RigidTransform {
            rotation: *Rotation3::from_axis_angle(&axis, angle).matrix(),
            translation: Vector3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), 3.0),
        }
    }

    #[test]
    fn identical_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_points(&mut rng, 8);
        let r = kabsch(&p, &p).unwrap();
        assert!(r.rmsd < 1e-9);
        assert!((r.transform.rotation - Matrix3::identity()).abs().max() < 1e-9);
        assert!(r.transform.translation.norm() < 1e-9);
    }

    #[test]
    fn rigid_copy_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = random_points(&mut rng, 12);
            let t = random_rigid(&mut rng);
            let q: Vec<Coord> = p.iter().map(|x| t.apply(x)).collect();
            let r = kabsch(&p, &q).unwrap();
            assert!(r.rmsd < 1e-9);
            assert!((r.transform.rotation - t.rotation).abs().max() < 1e-9);
        }
    }

    #[test]
    fn too_few_points() {
        let p = vec![Coord::zeros(), Coord::x()];
        assert!(matches!(kabsch(&p, &p), Err(Error::Underdetermined { got: 2, .. })));
        assert!(matches!(kabsch(&p, &p[..1]), Err(Error::Shape(_))));
    }

    #[test]
    fn collinear_and_planar_inputs_give_proper_rotations() {
        let line: Vec<Coord> = (0..6).map(|i| Coord::new(i as f64 * 3.8, 0.0, 0.0)).collect();
        let bent: Vec<Coord> = (0..6).map(|i| Coord::new(0.0, i as f64 * 3.8, (i % 2) as f64)).collect();
        for (a, b) in [(&line, &line), (&line, &bent), (&bent, &line)] {
            let r = kabsch(a, b).unwrap();
            assert!((r.transform.rotation.determinant() - 1.0).abs() < 1e-9);
            assert!(r.rmsd.is_finite());
        }
        // Mirror image of a planar set is reachable by a proper rotation.
        let planar: Vec<Coord> = vec![Coord::new(0., 0., 0.), Coord::new(1., 0., 0.), Coord::new(0., 2., 0.), Coord::new(3., 1., 0.)];
        let mirrored: Vec<Coord> = planar.iter().map(|p| Coord::new(p.x, p.y, -p.z)).collect();
        let r = kabsch(&planar, &mirrored).unwrap();
        assert!(r.rmsd < 1e-9);
        assert!((r.transform.rotation.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reflection_never_returned_for_chiral_sets() {
        let p = vec![Coord::new(0., 0., 0.), Coord::new(1., 0., 0.), Coord::new(0., 1., 0.), Coord::new(0., 0., 1.)];
        let q: Vec<Coord> = p.iter().map(|v| Coord::new(-v.x, v.y, v.z)).collect();
        let r = kabsch(&p, &q).unwrap();
        assert!((r.transform.rotation.determinant() - 1.0).abs() < 1e-9);
        assert!(r.rmsd > 0.1);
    }

    #[test]
    fn bound_zero_for_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_points(&mut rng, 10);
        assert_eq!(rmsd_bound(&p, &p), 0.0);
    }

    #[test]
    fn bound_on_straight_chains() {
        let a: Vec<Coord> = (0..10).map(|i| Coord::new(i as f64 * 30.0 / 9.0, 0.0, 0.0)).collect();
        let b: Vec<Coord> = (0..10).map(|i| Coord::new(i as f64 * 34.0 / 9.0, 0.0, 0.0)).collect();
        let bound = rmsd_bound(&a, &b);
        assert!(bound >= 4.0 / 20f64.sqrt() - 1e-12, "{bound}");
        assert!(bound <= kabsch(&a, &b).unwrap().rmsd + 1e-12);
    }

    #[test]
    fn multi_segment_single_reduces_to_kabsch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_points(&mut rng, 7);
        let q = random_points(&mut rng, 7);
        let motif = MotifQuery::single(p.clone()).unwrap();
        let joint = multi_segment_rmsd(&motif, std::slice::from_ref(&q)).unwrap();
        assert_eq!(joint.rmsd, kabsch(&p, &q).unwrap().rmsd);
    }

    #[test]
    fn multi_segment_shared_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_points(&mut rng, 4);
        let b = random_points(&mut rng, 5);
        let motif = MotifQuery::new(vec![a.clone(), b.clone()]).unwrap();
        let t = random_rigid(&mut rng);
        let moved = vec![a.iter().map(|x| t.apply(x)).collect(), b.iter().map(|x| t.apply(x)).collect()];
        assert!(multi_segment_rmsd(&motif, &moved).unwrap().rmsd < 1e-9);

        let t2 = random_rigid(&mut rng);
        let split = vec![a.iter().map(|x| t.apply(x)).collect(), b.iter().map(|x| t2.apply(x)).collect()];
        assert!(multi_segment_rmsd(&motif, &split).unwrap().rmsd > 1e-3);

        assert!(matches!(multi_segment_rmsd(&motif, std::slice::from_ref(&a)), Err(Error::Shape(_))));
        assert!(matches!(multi_segment_rmsd(&motif, &[a.clone(), a]), Err(Error::Shape(_))));
    }

    fn coords_strategy() -> impl Strategy<Value = (Vec<Coord>, Vec<Coord>)> {
        (3usize..25).prop_flat_map(|n| {
            let pt = || (-20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64).prop_map(|(x, y, z)| Coord::new(x, y, z));
            (prop::collection::vec(pt(), n), prop::collection::vec(pt(), n))
        })
    }

    proptest! {
        #[test]
        fn symmetric((p, q) in coords_strategy()) {
            let a = kabsch(&p, &q).unwrap().rmsd;
            let b = kabsch(&q, &p).unwrap().rmsd;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn rigid_invariance((p, q) in coords_strategy(), seed in any::<u64>()) {
            let t = random_rigid(&mut ChaCha8Rng::seed_from_u64(seed));
            let p2: Vec<Coord> = p.iter().map(|x| t.apply(x)).collect();
            let q2: Vec<Coord> = q.iter().map(|x| t.apply(x)).collect();
            let a = kabsch(&p, &q).unwrap().rmsd;
            let b = kabsch(&p2, &q2).unwrap().rmsd;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn proper_rotation((p, q) in coords_strategy()) {
            let r = kabsch(&p, &q).unwrap();
            prop_assert!((r.transform.rotation.determinant() - 1.0).abs() < 1e-9);
            let rtr = r.transform.rotation.transpose() * r.transform.rotation;
            prop_assert!((rtr - Matrix3::identity()).abs().max() < 1e-9);
        }

        #[test]
        fn bound_admissible((p, q) in coords_strategy()) {
            prop_assert!(rmsd_bound(&p, &q) <= kabsch(&p, &q).unwrap().rmsd + 1e-12);
        }
    }
}
