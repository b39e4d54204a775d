//! Invariants checked on randomly generated inputs.

use std::collections::BTreeMap;

use proptest::prelude::*;
use superadiabatic::control::{cd_exact, counterdiabatic_from_frame, ControlField, ControlKind};
use superadiabatic::experiments::fit_power_law;
use superadiabatic::models::{Model, ThreeLevelModel, TwoLevelModel};
use superadiabatic::propagate::{magnus_step, write_csv};
use superadiabatic::smallmat::{hermitian_eigen, CMatrix, CVector, EigenFrame, C64};

fn hermitian(dim: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-5.0..5.0f64, dim * dim).prop_map(move |raw| {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(raw[i * dim + i], 0.0);
            for j in (i + 1)..dim {
                let z = C64::new(raw[i * dim + j], raw[j * dim + i]);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    })
}

fn state(dim: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec(-1.0..1.0f64, 2 * dim)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(move |raw| {
            let v: Vec<C64> = raw.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
            let v = CVector::from_slice(&v);
            v.scale(C64::new(1.0 / v.norm(), 0.0))
        })
}

fn three_level() -> impl Strategy<Value = ThreeLevelModel> {
    (0.0..20.0f64, 0.2..2.0f64, 0.1..1.5f64, -0.1..0.5f64, -0.3..0.3f64)
        .prop_map(|(e, a, d, dd, da)| ThreeLevelModel::asymmetric(e, a, d, dd, da).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigenframe_reconstructs_and_is_gauge_fixed(h in (2usize..=3).prop_flat_map(hermitian)) {
        let dim = h.dim();
        let frame = hermitian_eigen(&h, 0.0).unwrap();
        let values = frame.eigenvalues();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let u = frame.eigenvector_matrix();
        prop_assert!((u.adjoint() * u).max_abs_diff(&CMatrix::identity(dim)) < 1e-13);
        let rebuilt = u * CMatrix::diag(values) * frame.eigenvector_matrix().adjoint();
        prop_assert!(rebuilt.max_abs_diff(&h) < 1e-12 * h.max_abs().max(1.0));
        for v in frame.eigenvectors() {
            let big = (0..dim).fold(0, |b, k| if v[k].norm() > v[b].norm() + 1e-12 { k } else { b });
            prop_assert!(v[big].im.abs() < 1e-14 && v[big].re > 0.0);
        }
    }

    #[test]
    fn exact_control_is_hermitian_gauge_free_and_off_diagonal(
        model in three_level(),
        tau in -40.0..40.0f64,
        phases in prop::collection::vec(0.0..std::f64::consts::TAU, 3),
    ) {
        let frame = hermitian_eigen(&model.h0(tau), tau).unwrap();
        let dh = model.dh0_dtau(tau);
        let h1 = counterdiabatic_from_frame(&frame, &dh).unwrap();
        prop_assert!(h1.hermitian_defect() < 1e-12 * h1.max_abs().max(1.0));
        let rephased: Vec<CVector> =
            frame.eigenvectors().iter().zip(&phases).map(|(v, &p)| v.scale(C64::from_polar(1.0, p))).collect();
        let other = counterdiabatic_from_frame(&EigenFrame::from_parts(tau, frame.eigenvalues(), &rephased), &dh).unwrap();
        prop_assert!(other.max_abs_diff(&h1) < 1e-12);
        let u = frame.eigenvector_matrix();
        let rotated = u.adjoint() * h1 * u;
        for k in 0..3 {
            prop_assert!(rotated[(k, k)].norm() < 1e-10);
        }
    }

    #[test]
    fn every_control_field_is_hermitian(model in three_level(), tau in -40.0..40.0f64) {
        let symmetric = ThreeLevelModel::symmetric(model.epsilon.max(0.5), model.alpha, model.delta).unwrap();
        for kind in [
            ControlKind::ExactCd,
            ControlKind::SeparatedMatrix,
            ControlKind::SeparatedSingleField,
            ControlKind::PerturbativeSmallDelta,
            ControlKind::PerturbativeLongTime,
            ControlKind::None,
        ] {
            let h1 = ControlField::new(kind, symmetric.into()).unwrap().evaluate(tau).unwrap();
            prop_assert!(h1.hermitian_defect() < 1e-12 * h1.max_abs().max(1.0), "{kind}");
        }
    }

    #[test]
    fn two_level_exact_control_is_sigma_y(alpha in 0.1..5.0f64, delta in 0.05..3.0f64, tau in -50.0..50.0f64) {
        let m = TwoLevelModel::new(alpha, delta).unwrap();
        let h1 = cd_exact(&m.into(), tau).unwrap();
        prop_assert!(h1[(0, 0)].norm() < 1e-14 && h1[(1, 1)].norm() < 1e-14);
        prop_assert!(h1[(0, 1)].re.abs() < 1e-14 * h1.max_abs().max(1.0));
    }

    #[test]
    fn magnus_step_is_unitary(h in hermitian(3), psi in state(3), step in 0.001..0.02f64) {
        let model_free = Constant(h);
        let next = magnus_step(&model_free, 0.0, step, &psi).unwrap();
        prop_assert!((next.norm() - 1.0).abs() < 1e-14);
        let back = magnus_step(&model_free, step, -step, &next).unwrap();
        prop_assert!(back.distance(&psi) < 1e-13);
    }

    #[test]
    fn power_law_fit_recovers_exact_laws(exponent in -6.0..6.0f64, log_a in -10.0..10.0f64, lo in 1.0..50.0f64) {
        let xs: Vec<f64> = (0..30).map(|k| lo * 1.2f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (log_a + exponent * x.ln()).exp()).collect();
        let fit = fit_power_law(&xs, &ys, (lo, xs[29]), 20).unwrap();
        prop_assert!((fit.exponent - exponent).abs() < 1e-9);
        prop_assert!((fit.log_prefactor - log_a).abs() < 1e-7);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
        prop_assert_eq!(fit.points, 30);
    }

    #[test]
    fn csv_values_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..40)) {
        let mut bytes = Vec::new();
        write_csv(&mut bytes, &["x".to_string()], std::slice::from_ref(&values)).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let parsed: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        prop_assert_eq!(parsed, values);
    }

    #[test]
    fn model_key_values_round_trip(model in three_level()) {
        let full: Model = model.into();
        let back = Model::from_kv(&full.to_kv()).unwrap();
        let Model::ThreeLevel(m) = back else { panic!("three-level expected") };
        prop_assert_eq!(m.epsilon, model.epsilon);
        prop_assert_eq!(m.alpha, model.alpha);
        prop_assert_eq!(m.delta, model.delta);
        prop_assert_eq!(m.delta_delta, model.delta_delta);
        prop_assert!((m.delta_alpha() - model.delta_alpha()).abs() <= 1e-15 * model.alpha.abs());
    }

    #[test]
    fn model_key_values_reject_garbage(key in "(epsilon|alpha|delta|delta_delta|delta_alpha)", raw in "[a-z]{1,6}") {
        let mut kv: BTreeMap<String, String> =
            [("epsilon", "1"), ("alpha", "1"), ("delta", "0.5")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        kv.insert(key.clone(), raw);
        let err = Model::from_kv(&kv).unwrap_err().to_string();
        prop_assert!(err.contains(&format!("`{key}`")), "{}", err);
    }
}

struct Constant(CMatrix);

impl superadiabatic::models::Hamiltonian for Constant {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn at(&self, _tau: f64) -> superadiabatic::Result<CMatrix> {
        Ok(self.0)
    }
}
