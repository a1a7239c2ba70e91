//! Invariants checked on random inputs.

mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use oscbc::boundary_map::{sweep, BoundaryTable};
use oscbc::cell::{CellAverage, CellConfig};
use oscbc::discrepancy::{discrepancy, discrepancy_star, frac, omega_inf, Direction, UnitSequence};
use oscbc::domain::SmoothDomain;
use oscbc::expr::{Expr, WaveKind};
use oscbc::lattice::{approach_point, nearest_lattice_point, Hyperplane, N_MAX};
use oscbc::matrix::{pucci_minus, pucci_plus, SymMatrix2};
use oscbc::operators::EllipticOperator;
use oscbc::singular::compute_beta0;
use oscbc::solver::{NodeKind, Scheme, SchemeConfig};

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5.0f64..5.0).prop_map(Expr::constant),
        (0usize..2).prop_map(Expr::Slow),
        (
            prop::bool::ANY,
            -4i64..5,
            -4i64..5,
            prop_oneof![Just(0.0), -3.0f64..3.0]
        )
            .prop_map(|(c, a, b, phase)| {
                let kind = if c { WaveKind::Cos } else { WaveKind::Sin };
                Expr::wave(kind, [a, b], phase)
            }),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(b)),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(Expr::pos_part),
            inner.prop_map(Expr::neg_part),
        ]
    })
}

fn sym() -> impl Strategy<Value = SymMatrix2> {
    (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b, c)| SymMatrix2::new(a, b, c))
}

fn sample_cell() -> &'static CellAverage {
    static CELL: OnceLock<CellAverage> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = CellConfig {
            depth: 1.0,
            h: 1.0 / 8.0,
            translates: 1,
            richardson: false,
            ..Default::default()
        };
        let t = sweep(
            &Expr::cos(1, 0),
            &EllipticOperator::laplacian(),
            &[0.7],
            &cfg,
        )
        .unwrap();
        t.entries[0].cell.clone().unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discrepancy_is_sandwiched(pts in prop::collection::vec(0.0f64..1.0, 1..80)) {
        let s = UnitSequence::new(pts.clone()).unwrap();
        let (ds, d) = (discrepancy_star(&s), discrepancy(&s));
        prop_assert!((ds - common::star_discrepancy_brute(&pts)).abs() < 1e-12);
        prop_assert!(ds <= d + 1e-15 && d <= 2.0 * ds + 1e-15);
        prop_assert!(d <= 1.0 && ds >= 0.5 / pts.len() as f64 - 1e-15);
    }

    #[test]
    fn discrepancy_ignores_order(mut pts in prop::collection::vec(0.0f64..1.0, 1..60)) {
        let before = UnitSequence::new(pts.clone()).unwrap();
        pts.reverse();
        let after = UnitSequence::new(pts).unwrap();
        prop_assert_eq!(discrepancy(&before), discrepancy(&after));
        prop_assert_eq!(discrepancy_star(&before), discrepancy_star(&after));
    }

    #[test]
    fn frac_lands_in_unit_interval(x in -1e6f64..1e6) {
        let f = frac(x);
        prop_assert!((0.0..1.0).contains(&f));
        prop_assert!(((x - f) - (x - f).round()).abs() < 1e-6);
    }

    #[test]
    fn lattice_guarantee_holds_for_integer_shifts(
        t in 0.05f64..1.5, x0 in (0.0f64..1.0, 0.0f64..1.0), shift in (-20i64..20, -20i64..20)
    ) {
        // shifting x0 by Z^2 leaves the set of distances unchanged, so both
        // searches must meet the same bound
        let nu = Direction::from_angle(t);
        let bound = omega_inf(&nu, N_MAX).0 + 1e-3;
        for x in [[x0.0, x0.1], [x0.0 + shift.0 as f64, x0.1 + shift.1 as f64]] {
            let h = Hyperplane::new(nu.clone(), x.to_vec()).unwrap();
            let p = nearest_lattice_point(&h, 1e-3).unwrap();
            let z: Vec<f64> = p.z.iter().map(|&v| v as f64).collect();
            prop_assert!((h.distance(&z) - p.distance).abs() < 1e-9);
            prop_assert!(p.distance <= bound, "{} > {bound}", p.distance);
        }
    }

    #[test]
    fn approach_point_is_translation_covariant(
        t in 0.05f64..1.5, s in -5.0f64..5.0, n in 2.0f64..60.0, z in (-30i64..30, -30i64..30)
    ) {
        let nu = Direction::from_angle(t);
        let x0 = [0.3, -0.2];
        let tangent = [-nu.nu[1], nu.nu[0]];
        let x = [x0[0] + s * tangent[0], x0[1] + s * tangent[1]];
        let a = approach_point(&Hyperplane::new(nu.clone(), x0.to_vec()).unwrap(), &x, n).unwrap();
        let (zx, zy) = (z.0 as f64, z.1 as f64);
        let h = Hyperplane::new(nu, vec![x0[0] + zx, x0[1] + zy]).unwrap();
        let b = approach_point(&h, &[x[0] + zx, x[1] + zy], n).unwrap();
        prop_assert!((a.distance - b.distance).abs() < 1e-9, "{} {}", a.distance, b.distance);
    }

    #[test]
    fn approach_point_stays_in_translate(t in 0.05f64..1.5, s in -5.0f64..5.0, n in 2.0f64..60.0) {
        let nu = Direction::from_angle(t);
        let h = Hyperplane::new(nu.clone(), vec![0.3, -0.2]).unwrap();
        let tangent = [-nu.nu[1], nu.nu[0]];
        let x = [0.3 + s * tangent[0], -0.2 + s * tangent[1]];
        let a = approach_point(&h, &x, n).unwrap();
        for (y, o) in a.y.iter().zip(&h.x0) {
            prop_assert!(((y - o) - (y - o).round()).abs() < 1e-9);
        }
        let dist = ((a.y[0] - x[0]).powi(2) + (a.y[1] - x[1]).powi(2)).sqrt();
        prop_assert!(dist <= a.search_radius);
        prop_assert!((h.distance(&a.y) - a.distance).abs() < 1e-9);
    }

    #[test]
    fn expr_display_parses_back(e in expr_strategy(), y in (-3.0f64..3.0, -3.0f64..3.0)) {
        let text = e.to_string();
        let back: Expr = text.parse().unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
        let p = [y.0, y.1];
        prop_assert_eq!(back.eval(p, p).to_bits(), e.eval(p, p).to_bits());
    }

    #[test]
    fn pucci_extremal_ordering(m in sym(), n in sym(), lambda in 0.1f64..2.0, spread in 1.0f64..5.0) {
        let big = lambda * spread;
        prop_assert!(pucci_minus(&m, lambda, big) <= pucci_plus(&m, lambda, big) + 1e-12);
        // subadditivity and superadditivity
        let s = SymMatrix2::new(m.xx + n.xx, m.xy + n.xy, m.yy + n.yy);
        let tol = 1e-9 * (1.0 + big * 60.0);
        prop_assert!(pucci_plus(&s, lambda, big) <= pucci_plus(&m, lambda, big) + pucci_plus(&n, lambda, big) + tol);
        prop_assert!(pucci_minus(&s, lambda, big) >= pucci_minus(&m, lambda, big) + pucci_minus(&n, lambda, big) - tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn homogeneous_profile_scales(t in 0.2f64..5.0, y in (-1.0f64..1.0, 0.1f64..1.0), spread in 1.0f64..3.0) {
        let s = compute_beta0(1.0, spread, 1.0, 1e-9).unwrap();
        let p = [y.0, y.1];
        let lhs = s.value([t * p[0], t * p[1]], [0.0, 1.0]);
        let rhs = t.powf(-s.beta0) * s.value(p, [0.0, 1.0]);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn solver_is_monotone_in_data(a in -1.0f64..1.0, b in 0.0f64..0.5, k in 1.0f64..4.0, plus in prop::bool::ANY) {
        let d = SmoothDomain::unit_disk();
        let g = d.grid(1.0 / 16.0).unwrap();
        let op = if plus {
            EllipticOperator::pucci_plus(1.0, 2.0).unwrap()
        } else {
            EllipticOperator::pucci_minus(1.0, 2.0).unwrap()
        };
        let s = Scheme::new(&op, g.clone(), d.region(&g), SchemeConfig::default()).unwrap();
        let u = s.solve_dirichlet(&|p| a * (k * p[0]).sin()).unwrap();
        let v = s.solve_dirichlet(&|p| a * (k * p[0]).sin() + b * (1.0 + p[1] * p[1])).unwrap();
        for idx in 0..g.len() {
            if u.kinds[idx] == NodeKind::Interior {
                prop_assert!(u.values[idx] <= v.values[idx] + 1e-9);
            }
        }
    }

    #[test]
    fn table_json_round_trips(
        values in prop::collection::vec((0.0f64..std::f64::consts::TAU, -1e3f64..1e3, prop::bool::ANY), 1..12)
    ) {
        let base = sample_cell();
        let mut table = BoundaryTable {
            schema_version: base.schema_version,
            psi: "cos(1, 0)".into(),
            operator: "laplacian".into(),
            config: CellConfig::default(),
            entries: Vec::new(),
        };
        for (angle, mu, failed) in values {
            let nu = Direction::from_angle(angle).as_2d();
            let (cell, failure) = if failed {
                (None, Some(format!("failed at {angle}")))
            } else {
                (Some(CellAverage { mu_bar: mu, ..base.clone() }), None)
            };
            table.entries.push(oscbc::boundary_map::TableEntry { angle, nu, rational: false, cell, failure });
        }
        let back = BoundaryTable::from_json(&table.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, table);
    }
}
