use proptest::prelude::*;
use std::sync::OnceLock;

use kirchhoff_core::discretization::{
    first_eigenvalue, grad_norm_sq, inner, lp_power, neg_laplacian, relative_residual,
    solve_shifted, Field, Mesh,
};
use kirchhoff_core::functionals::{
    decomposition_check, e_prime_pairing, energy_j, nehari_i, nehari_project, nehari_tolerance,
    sobolev_constant, sobolev_ratio, ModelParams, NormPair,
};
use kirchhoff_core::well::{classify, gn_ratio, Classification};

fn mesh_1d() -> Mesh {
    Mesh::unit_interval(31).unwrap()
}

fn mesh_2d() -> Mesh {
    Mesh::rectangle(1.0, 1.3, 7, 9).unwrap()
}

fn field_on(mesh: Mesh) -> impl Strategy<Value = Field> {
    prop::collection::vec(-2.0f64..2.0, mesh.len())
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(move |v| Field::new(mesh, v).unwrap())
}

fn any_field() -> impl Strategy<Value = Field> {
    prop_oneof![field_on(mesh_1d()), field_on(mesh_2d())]
}

fn pair() -> impl Strategy<Value = (Field, Field)> {
    prop_oneof![
        (field_on(mesh_1d()), field_on(mesh_1d())),
        (field_on(mesh_2d()), field_on(mesh_2d())),
    ]
}

fn params(n: usize) -> impl Strategy<Value = ModelParams> {
    (0.1f64..4.0, 0.1f64..4.0, 3.1f64..7.0)
        .prop_map(move |(a, b, q)| ModelParams::new(a, b, q, n).unwrap())
}

fn sobolev_1d_q5() -> f64 {
    static S: OnceLock<f64> = OnceLock::new();
    *S.get_or_init(|| sobolev_constant(&mesh_1d(), 5.0).unwrap().value)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn laplacian_is_self_adjoint((u, v) in pair()) {
        let l = inner(&neg_laplacian(&u), &v).unwrap();
        let r = inner(&u, &neg_laplacian(&v)).unwrap();
        prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
    }

    #[test]
    fn dirichlet_form_matches_gradient_sum(u in any_field()) {
        let a = grad_norm_sq(&u);
        let b = inner(&neg_laplacian(&u), &u).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn discrete_poincare(u in any_field()) {
        let lam = first_eigenvalue(u.mesh());
        prop_assert!(grad_norm_sq(&u) >= lam * lp_power(&u, 2.0) * (1.0 - 1e-12));
    }

    #[test]
    fn shifted_solve_inverts((u, _) in pair(), shift in 0.0f64..100.0, scale in 0.01f64..10.0) {
        let phi = solve_shifted(&u, shift, scale).unwrap();
        prop_assert!(relative_residual(&phi, &u, shift, scale) <= 1e-9);
    }

    #[test]
    fn norm_homogeneity(u in field_on(mesh_1d()), p in params(1), c in 0.1f64..5.0) {
        let np = NormPair::of(&u, &p);
        let sc = NormPair::of(&u.scaled(c), &p);
        prop_assert!((sc.grad_sq - c * c * np.grad_sq).abs() <= 1e-12 * sc.grad_sq);
        let expect = c.powf(p.q() + 1.0) * np.source_power;
        prop_assert!((sc.source_power - expect).abs() <= 1e-11 * expect);
    }

    #[test]
    fn energy_is_even(u in any_field(), p in params(1)) {
        let p = ModelParams::new(p.a(), p.b(), p.q(), u.mesh().dim()).unwrap();
        prop_assert_eq!(energy_j(&u, &p), energy_j(&u.scaled(-1.0), &p));
    }

    #[test]
    fn decomposition_identities(u in any_field(), p in params(1)) {
        let p = ModelParams::new(p.a(), p.b(), p.q(), u.mesh().dim()).unwrap();
        let np = NormPair::of(&u, &p);
        let scale = np.grad_sq * (p.a() + p.b() * np.grad_sq) + np.source_power;
        let j = energy_j(&u, &p);
        let (d1, d2) = decomposition_check(&u, &p);
        prop_assert!((d1 - j).abs() <= 1e-12 * scale);
        prop_assert!((d2 - j).abs() <= 1e-12 * scale);
    }

    #[test]
    fn strong_monotonicity((u, v) in pair(), p in params(1)) {
        let p = ModelParams::new(p.a(), p.b(), p.q(), u.mesh().dim()).unwrap();
        let w = u.sub(&v).unwrap();
        let lhs = e_prime_pairing(&u, &w, &p).unwrap() - e_prime_pairing(&v, &w, &p).unwrap();
        let rhs = p.a() * grad_norm_sq(&w);
        prop_assert!(lhs >= rhs - 1e-13 * (lhs.abs() + rhs));
    }

    #[test]
    fn projection_lands_on_manifold_and_is_ray_invariant(u in any_field(), p in params(1), c in 0.05f64..20.0) {
        let p = ModelParams::new(p.a(), p.b(), p.q(), u.mesh().dim()).unwrap();
        let v = nehari_project(&u, &p).unwrap();
        let np = NormPair::of(&v, &p);
        prop_assert!(nehari_i(&v, &p).abs() <= nehari_tolerance(&np, &p));
        prop_assert_eq!(classify(&v, &p, f64::INFINITY), Classification::OnNehari);
        let w = nehari_project(&u.scaled(c), &p).unwrap();
        let diff = w.sub(&v).unwrap();
        prop_assert!(diff.max_abs() <= 1e-9 * v.max_abs());
    }

    #[test]
    fn classification_follows_sign_of_i(u in field_on(mesh_1d()), c in 0.01f64..30.0) {
        let p = ModelParams::new(1.0, 1.0, 5.0, 1).unwrap();
        let v = u.scaled(c);
        let i = nehari_i(&v, &p);
        let tol = nehari_tolerance(&NormPair::of(&v, &p), &p);
        match classify(&v, &p, f64::INFINITY) {
            Classification::InsideW => prop_assert!(i > tol),
            Classification::InsideV => prop_assert!(i < -tol),
            Classification::OnNehari => prop_assert!(i.abs() <= tol),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn sobolev_estimate_bounds_every_ratio(u in field_on(mesh_1d())) {
        prop_assert!(sobolev_ratio(&u, 5.0) <= sobolev_1d_q5() * (1.0 + 1e-9));
    }

    #[test]
    fn gn_ratio_scale_invariant(u in any_field(), c in 0.01f64..100.0) {
        let p = ModelParams::new(1.0, 1.0, 4.0, u.mesh().dim()).unwrap();
        let r = gn_ratio(&u, &p);
        prop_assert!((gn_ratio(&u.scaled(c), &p) - r).abs() <= 1e-11 * r);
    }
}
