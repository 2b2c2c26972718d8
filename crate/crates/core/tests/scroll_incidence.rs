use palatini::field::Field;
use palatini::incidence::{
    coordinate_identity, fiber, fiber_of_x, random_slice, sample_y, scroll_line, slice_census_over_extensions,
    slice_count, slice_count_brute, slice_points, slice_transverse_at, IncidenceError,
};
use palatini::linalg::normalize_projective;
use palatini::scroll::{
    genericity_check, instance_random, membership_x, planted, rank_stratum_probe, PalatiniInstance, SampleSource,
    ScrollError, Stratum,
};
use palatini::{Matrix, Scalar};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn f1009() -> Field {
    Field::prime(1009).unwrap()
}

fn vecs(f: &Field, xs: &[i64]) -> Vec<Scalar> {
    xs.iter().map(|&x| f.from_i64(x)).collect()
}

#[test]
fn pf_squared_is_det_at_points() {
    let f = f1009();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (m, k) in [(3, 3), (4, 3), (3, 4)] {
        let inst = instance_random(m, k, &f, 11).unwrap();
        assert_eq!(inst.pf().degree(), Some(k as u32));
        for _ in 0..50 {
            let u: Vec<Scalar> = (0..m).map(|_| f.random(&mut rng)).collect();
            let pf = inst.pf().eval(&u).unwrap();
            let det = inst.m_at(&u).unwrap().det().unwrap();
            assert_eq!(f.mul(&pf, &pf), det);
        }
    }
}

#[test]
fn m1_invertible_has_no_members() {
    let f = Field::prime(7).unwrap();
    let inst = planted::block_diagonal(1, &f).unwrap();
    palatini::incidence::for_each_projective_point(&f, 2, |v| {
        assert!(!membership_x(&inst, v).unwrap().member);
    });
    assert_eq!(membership_x(&inst, &vecs(&f, &[0, 0])).unwrap_err(), ScrollError::ZeroVector);
}

#[test]
fn common_kernel_vector_has_full_corank() {
    let f = f1009();
    let inst = planted::common_kernel(4, 3, &f, 5).unwrap();
    let v0 = vecs(&f, &[0, 0, 0, 0, 0, 1]);
    let mem = membership_x(&inst, &v0).unwrap();
    assert!(mem.member);
    assert_eq!(mem.corank, 4);
    assert!(matches!(fiber_of_x(&inst, &v0), Err(IncidenceError::FiberNotUnique { nullity: 4 })));
}

#[test]
fn generic_43_passes_genericity() {
    let f = f1009();
    let inst = instance_random(4, 3, &f, 7).unwrap();
    let rep = genericity_check(&inst, 2000, 1);
    assert!(rep.passed(), "{rep:?}");
    assert!(rep.d_m2_probe.trials >= 4000);
    assert!(rep.y_smooth_probe.sampled > 0);
    assert!(rep.jacobian_probe.sampled > 0);
}

#[test]
fn generic_33_slice_count_is_at_most_degree() {
    let f = Field::prime(101).unwrap();
    let inst = instance_random(3, 3, &f, 2).unwrap();
    let rep = genericity_check(&inst, 200, 4);
    assert!(rep.passed(), "{rep:?}");
    let c = rep.codim_probe.point_count.expect("pencil fits the budget");
    assert!(c <= 6);
    assert_eq!(rep.codim_probe.slice_dim, 3);
}

#[test]
fn planted_degenerations_are_flagged() {
    let f = f1009();
    let ck = planted::common_kernel(4, 3, &f, 1).unwrap();
    let rep = genericity_check(&ck, 100, 0);
    assert!(!rep.f_phi_injective && !rep.pf_nonzero && !rep.passed());
    assert!(rep.d_m2_probe.hits > 0);

    let prop = planted::proportional(4, 3, &f, 1).unwrap();
    let rep = genericity_check(&prop, 100, 0);
    assert!(!rep.phi_injective && !rep.passed());

    let iso = planted::isotropic(4, 3, &f, 1).unwrap();
    let rep = genericity_check(&iso, 100, 0);
    assert!(!rep.pf_nonzero && rep.f_phi_injective && !rep.passed());

    assert_eq!(sample_y(&ck, 1, 5, 0).unwrap_err(), IncidenceError::DegeneratePfaffian);
    assert_eq!(sample_y(&iso, 1, 5, 0).unwrap_err(), IncidenceError::DegeneratePfaffian);
    assert_eq!(sample_y(&prop, 1, 5, 0).unwrap_err(), IncidenceError::NonInjectiveSystem);
}

#[test]
fn range_violation_is_flagged() {
    let f = f1009();
    let inst = instance_random(5, 3, &f, 3).unwrap();
    assert!(!genericity_check(&inst, 50, 0).range_ok);
}

#[test]
fn stratum_probes() {
    let f = f1009();
    let inst = instance_random(4, 3, &f, 9).unwrap();
    let y = rank_stratum_probe(&inst, Stratum::Pencil, 1, SampleSource::OnVariety, 50, 2);
    assert_eq!(y.hits, y.trials);
    let amb = rank_stratum_probe(&inst, Stratum::Phi, 2, SampleSource::Ambient, 10_000, 2);
    assert_eq!((amb.trials, amb.hits), (10_000, 0));
    let ck = planted::common_kernel(4, 3, &f, 9).unwrap();
    assert!(rank_stratum_probe(&ck, Stratum::Phi, 2, SampleSource::Ambient, 10, 2).hits > 0);
}

#[test]
fn block_planted_samples_lie_on_coordinate_hyperplanes() {
    let f = Field::prime(101).unwrap();
    let inst = planted::block_diagonal(3, &f).unwrap();
    let ys = sample_y(&inst, 1, 30, 8).unwrap();
    assert!(ys.points.len() == 30);
    for u in &ys.points {
        assert!(u.iter().any(|x| f.is_zero(x)));
    }
}

#[test]
fn sampled_lines_carry_at_most_k_roots() {
    let f = Field::prime(101).unwrap();
    let inst = instance_random(3, 3, &f, 1).unwrap();
    let ys = sample_y(&inst, 1, 1, 6).unwrap();
    assert!(ys.points.len() <= 3 * ys.lines);
}

fn round_trip(inst: &PalatiniInstance, ext: usize, count: usize, seed: u64) {
    let ys = sample_y(inst, ext, count, seed).unwrap();
    assert_eq!(ys.points.len(), count);
    let inst = &ys.instance;
    let f = inst.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for u in &ys.points {
        assert!(f.is_zero(&inst.pf().eval(u).unwrap()));
        let ipt = fiber(inst, u).unwrap();
        assert_eq!(ipt.corank(), 2);
        assert!(inst.m_at(u).unwrap().mul(&ipt.kernel).unwrap().is_zero());
        let rec = scroll_line(inst, &ipt).unwrap();
        assert!(rec.all_pass() && rec.full_line);
        let c: Vec<Scalar> = (0..2).map(|_| f.random_nonzero(&mut rng)).collect();
        let v = ipt.kernel.mul_vec(&c).unwrap();
        assert!(coordinate_identity(inst, &v, u));
        assert_eq!(membership_x(inst, &v).unwrap().corank, 1);
        assert_eq!(&fiber_of_x(inst, &v).unwrap(), u);
    }
}

#[test]
fn incidence_round_trips() {
    let f = f1009();
    round_trip(&instance_random(3, 4, &f, 2).unwrap(), 1, 20, 1);
    round_trip(&instance_random(4, 3, &f, 2).unwrap(), 1, 20, 2);
    let small = Field::prime(7).unwrap();
    round_trip(&instance_random(3, 3, &small, 5).unwrap(), 3, 10, 3);
}

#[test]
fn fiber_errors() {
    let f = f1009();
    let inst = instance_random(4, 3, &f, 2).unwrap();
    let off = vecs(&f, &[1, 0, 0, 0]);
    if !f.is_zero(&inst.pf().eval(&off).unwrap()) {
        assert_eq!(fiber(&inst, &off).unwrap_err(), IncidenceError::NotOnY);
    }
    let v = vecs(&f, &[1, 2, 3, 4, 5, 6]);
    if !membership_x(&inst, &v).unwrap().member {
        assert_eq!(fiber_of_x(&inst, &v).unwrap_err(), IncidenceError::NotOnX);
    }
    let block = planted::block_diagonal(3, &f).unwrap();
    let ipt = fiber(&block, &vecs(&f, &[0, 0, 1])).unwrap();
    assert_eq!(ipt.corank(), 4);
    assert_eq!(scroll_line(&block, &ipt).unwrap_err(), IncidenceError::CorankNotTwo { corank: 4 });
}

#[test]
fn slice_counts_agree_over_extensions() {
    let f5 = Field::prime(5).unwrap();
    let inst = instance_random(3, 3, &f5, 21).unwrap();
    for e in 1..=2 {
        let big = inst.base_change(&Field::extension(5, e, 0).unwrap()).unwrap();
        let h = random_slice(&big, 3);
        let c = slice_count(&big, &h, 1000).unwrap();
        assert_eq!(c, slice_count_brute(&big, &h).unwrap());
        assert!(c <= 6);
    }
}

#[test]
fn non_transverse_slices_are_detected() {
    let f5 = Field::prime(5).unwrap();
    let inst = instance_random(3, 3, &f5, 6).unwrap();
    // slice 0 is tangent to X at a rational point, slice 6 is transverse
    let tangent = random_slice(&inst, 0);
    let pts = slice_points(&inst, &tangent, 1000).unwrap();
    assert!(pts.iter().any(|v| !slice_transverse_at(&inst, &tangent, v).unwrap()));
    let census = slice_census_over_extensions(&inst, &random_slice(&inst, 6), 2, 1000).unwrap();
    assert_eq!(census.counts, vec![4, 6]);
    assert!(census.transverse);

    // a slice through a whole fiber line
    let u = sample_y(&inst, 1, 1, 2).unwrap().points.remove(0);
    let line = fiber(&inst, &u).unwrap().kernel;
    let normals = line.transpose().kernel_basis();
    let h = Matrix::from_fn(&f5, 2, 6, |i, j| normals.get(j, i).clone());
    let census = slice_census_over_extensions(&inst, &h, 2, 1000).unwrap();
    assert!(census.counts[0] >= 6 && census.counts[1] >= 26);
    assert!(!census.transverse);
}

#[test]
fn json_round_trip_is_byte_identical() {
    let f = f1009();
    let inst = instance_random(4, 3, &f, 7).unwrap();
    let s = inst.to_json_string().unwrap();
    let back = PalatiniInstance::from_json_str(&s).unwrap();
    assert_eq!(back.to_json_string().unwrap(), s);
    assert_eq!(back.pf(), inst.pf());
    assert_eq!(instance_random(4, 3, &f, 7).unwrap().to_json_string().unwrap(), s);
    assert_eq!(back.hash().unwrap().len(), 64);

    let fq = Field::extension(3, 2, 1).unwrap();
    let inst = instance_random(3, 2, &fq, 4).unwrap();
    let s = inst.to_json_string().unwrap();
    assert!(s.contains("modulus"));
    assert_eq!(PalatiniInstance::from_json_str(&s).unwrap().to_json_string().unwrap(), s);
}

#[test]
fn corrupted_full_matrix_is_rejected() {
    let text = r#"{"m":1,"k":1,"field":{"p":7},"matrices":[[0,1,1,0]],"seed":null}"#;
    assert!(matches!(PalatiniInstance::from_json_str(text), Err(ScrollError::Format(_))));
    let text = r#"{"m":1,"k":1,"field":{"p":7,"e":1},"matrices":[[0,1,1,0]],"seed":null}"#;
    assert_eq!(PalatiniInstance::from_json_str(text).unwrap_err(), ScrollError::NotSkewSymmetric { index: 0 });
    let text = r#"{"m":1,"k":1,"field":{"p":7,"e":1},"matrices":[[0,1,6,0]],"seed":null}"#;
    assert!(PalatiniInstance::from_json_str(text).is_ok());
    let text = r#"{"m":1,"k":1,"field":{"p":7,"e":1},"matrices":[[9]],"seed":null}"#;
    assert!(matches!(PalatiniInstance::from_json_str(text), Err(ScrollError::Format(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn membership_is_scale_invariant(seed in 0u64..1000, lam in 1i64..1009) {
        let f = f1009();
        let inst = instance_random(4, 3, &f, seed).unwrap();
        let ys = sample_y(&inst, 1, 1, seed).unwrap();
        let ipt = fiber(&inst, &ys.points[0]).unwrap();
        let v = ipt.kernel.column(0);
        let w: Vec<Scalar> = v.iter().map(|x| f.mul(x, &f.from_i64(lam))).collect();
        prop_assert_eq!(membership_x(&inst, &v).unwrap(), membership_x(&inst, &w).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<Scalar> = (0..6).map(|_| f.random(&mut rng)).collect();
        if r.iter().any(|x| !f.is_zero(x)) {
            let rs: Vec<Scalar> = r.iter().map(|x| f.mul(x, &f.from_i64(lam))).collect();
            prop_assert_eq!(membership_x(&inst, &r).unwrap(), membership_x(&inst, &rs).unwrap());
        }
    }

    #[test]
    fn n_matrix_matches_f(seed in 0u64..1000) {
        let f = f1009();
        let inst = instance_random(3, 4, &f, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        let v: Vec<Scalar> = (0..8).map(|_| f.random(&mut rng)).collect();
        let n = inst.system().n_matrix(&v).unwrap();
        let fv = inst.f_matrix().eval(&v).unwrap();
        prop_assert_eq!(n.transpose(), fv);
    }

    #[test]
    fn minors_vanish_on_fibers(seed in 0u64..1000) {
        let f = f1009();
        let inst = instance_random(3, 3, &f, seed).unwrap();
        let minors = inst.f_matrix().minors_max().unwrap();
        let ys = sample_y(&inst, 1, 2, seed).unwrap();
        for u in &ys.points {
            let ipt = fiber(&inst, u).unwrap();
            let v = ipt.kernel.column(1);
            for g in &minors {
                prop_assert!(f.is_zero(&g.eval(&v).unwrap()));
            }
        }
    }

    #[test]
    fn normalization_is_canonical(seed in 0u64..1000, lam in 1i64..1009) {
        let f = f1009();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Scalar> = (0..5).map(|_| f.random(&mut rng)).collect();
        let w: Vec<Scalar> = v.iter().map(|x| f.mul(x, &f.from_i64(lam))).collect();
        prop_assert_eq!(normalize_projective(&f, &v), normalize_projective(&f, &w));
    }
}

#[test]
fn pencil_matrix_is_skew() {
    let f = f1009();
    let inst = instance_random(4, 4, &f, 1).unwrap();
    assert!(inst.m_matrix().is_skew());
    let u = vecs(&f, &[1, 2, 3, 4]);
    let mut direct = Matrix::zeros(&f, 8, 8);
    for (l, a) in inst.system().matrices().iter().enumerate() {
        direct = direct.add(&a.scale(&u[l])).unwrap();
    }
    assert_eq!(inst.m_at(&u).unwrap(), direct);
}
